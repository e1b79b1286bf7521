"""Frequency selective extrapolation on a single reconstruction window.

A window of ``M x N`` pixels is approximated by a sparse sum of 2-D Fourier
basis functions ``phi(k,l)[m,n] = exp(2j*pi*(k*m/M + l*n/N))``. Each iteration
picks the basis function whose weighted projection removes the most residual
energy and adds a damped copy of it (and of its conjugate partner, so the
model stays real) to the model.

The weighted residual is kept in the DFT domain: subtracting ``c * phi(k,l)``
from the residual shifts the DFT of the weight field by ``(k,l)``, so one
forward FFT per window suffices.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .imaging import AreaLabel

# Projection magnitudes within this relative distance of the maximum count as a
# tie; ties go to the smallest row-major bin index.
TIE_RTOL = 1e-10

# Largest imaginary synthesis residue, relative to the signal scale, that is
# silently dropped by evaluate_model.
IMAG_RTOL = 1e-9


class EmptySupportError(ValueError):
    """The window has no pixel with nonzero weight."""


@dataclass(frozen=True)
class ReconstructionArea:
    values: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.labels.shape or self.values.ndim != 2:
            raise ValueError("values and labels must be 2-D arrays of equal shape")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class WeightField:
    w: np.ndarray
    rho: float
    delta: float


@dataclass
class SparseModel:
    coeffs: np.ndarray
    gamma: float
    selected: list[tuple[int, int]] = field(default_factory=list)

    @property
    def iterations_used(self) -> int:
        return len(self.selected)

    @property
    def basis_set(self) -> frozenset[tuple[int, int]]:
        """The selected bins together with their conjugate partners."""
        M, N = self.coeffs.shape
        out = set()
        for k, l in self.selected:
            out.add((k, l))
            out.add(((-k) % M, (-l) % N))
        return frozenset(out)


@functools.lru_cache(maxsize=32)
def radial_decay(M: int, N: int, rho: float) -> np.ndarray:
    """``rho ** dist`` from the continuous window center ((M-1)/2, (N-1)/2)."""
    m = np.arange(M) - (M - 1) / 2
    n = np.arange(N) - (N - 1) / 2
    dist = np.sqrt(m[:, None] ** 2 + n[None, :] ** 2)
    out = rho**dist
    out.flags.writeable = False
    return out


@functools.lru_cache(maxsize=32)
def _canonical_bins(M: int, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Penalty map over rows ``0..M//2`` that is 0 on bins representing their
    conjugate pair and -inf elsewhere, plus the self-conjugate bins (DC and,
    for even sizes, the Nyquist bins) of those rows.

    Every conjugate pair has its representative in rows ``0..M//2``.
    """
    h = M // 2 + 1
    k = np.arange(h)[:, None]
    l = np.arange(N)[None, :]
    flat = k * N + l
    partner = ((-k) % M) * N + (-l) % N
    penalty = np.where(flat <= partner, 0.0, -np.inf)
    selfconj = flat == partner
    penalty.flags.writeable = False
    selfconj.flags.writeable = False
    return penalty, selfconj


def build_weights(area: ReconstructionArea, rho: float, delta: float) -> WeightField:
    if not 0.0 < rho < 1.0:
        raise ValueError(f"decay factor must lie in (0, 1), got {rho}")
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"R-area attenuation must lie in (0, 1], got {delta}")
    decay = radial_decay(*area.shape, float(rho))
    labels = area.labels
    w = np.where(labels == AreaLabel.SUPPORT, decay, 0.0)
    w = np.where(labels == AreaLabel.RECONSTRUCTED, delta * decay, w)
    return WeightField(w=w, rho=rho, delta=delta)


def select_bin(metric: np.ndarray) -> int:
    """Flat index of the winning bin under the tie rule."""
    best = metric.max()
    return int((metric >= best * (1.0 - TIE_RTOL)).argmax())


def generate_model(area: ReconstructionArea, weights: WeightField, iterations: int,
                   gamma: float) -> SparseModel:
    """Run `iterations` selection/update steps of the weighted FSE loop.

    A conjugate pair is selected and updated together and counts as one
    iteration. Self-conjugate bins get a real-valued update.
    """
    if int(iterations) != iterations or iterations < 1:
        raise ValueError(f"iterations must be a positive integer, got {iterations}")
    w = weights.w
    if w.shape != area.shape:
        raise ValueError("weight field does not match the window")
    wsum = float(w.sum())
    if wsum <= 0.0:
        raise EmptySupportError("window has no support pixels")

    M, N = area.shape
    h = M // 2 + 1
    penalty, selfconj = _canonical_bins(M, N)
    residual = np.where(w > 0, area.values, 0.0)
    # the residual stays real, so its weighted DFT is Hermitian and rows
    # 0..M//2 carry everything needed for selection
    rw = np.fft.fft2(residual * w)[:h].copy()
    # W tiled 2x2 so every cyclic shift of W is a plain slice
    wt = np.tile(np.fft.fft2(w), (2, 2))
    coeffs = np.zeros((M, N), dtype=np.complex128)
    model = SparseModel(coeffs=coeffs, gamma=gamma)
    scale = gamma / wsum
    metric = np.empty((h, N))

    for _ in range(int(iterations)):
        # |DFT(r*w)| ranks bins like the energy reduction |DFT(r*w)|^2 / sum(w)
        np.abs(rw, out=metric)
        metric += penalty
        best = metric.max()
        k, l = divmod(int((metric >= best * (1.0 - TIE_RTOL)).argmax()), N)
        c = scale * rw[k, l]
        if selfconj[k, l]:
            c = complex(c.real, 0.0)
            coeffs[k, l] += c
            rw -= c * wt[M - k : M - k + h, N - l : 2 * N - l]
        else:
            kp, lp = (-k) % M, (-l) % N
            cc = c.conjugate()
            coeffs[k, l] += c
            coeffs[kp, lp] += cc
            rw -= (c * wt[M - k : M - k + h, N - l : 2 * N - l]
                   + cc * wt[M - kp : M - kp + h, N - lp : 2 * N - lp])
        model.selected.append((k, l))
    return model


def evaluate_model(model: SparseModel) -> np.ndarray:
    """Synthesize the real window ``g[m,n]`` from the expansion coefficients."""
    c = model.coeffs
    M, N = c.shape
    mirror = np.conj(np.roll(c[::-1, ::-1], shift=(1, 1), axis=(0, 1)))
    scale = max(1.0, float(np.abs(c).max(initial=0.0)))
    if np.abs(c - mirror).max(initial=0.0) > IMAG_RTOL * scale:
        raise ValueError("expansion coefficients are not conjugate-symmetric")
    g = np.fft.ifft2(c) * (M * N)
    if np.abs(g.imag).max() > IMAG_RTOL * max(1.0, np.abs(g.real).max()):
        raise RuntimeError("model synthesis left a non-negligible imaginary part")
    return g.real.copy()
