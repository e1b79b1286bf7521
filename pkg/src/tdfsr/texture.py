"""Texture-dependent distribution of the iteration budget (TD-FSR).

Blocks are ranked by the variance of their available pixels. A linear mapping
turns normalized variances into per-block iteration counts, and the remaining
budget is spread uniformly so that the image as a whole spends exactly as
many iterations as fixed-iteration FSR would.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .imaging import as_image, as_mask
from .pipeline import FsrConfig, IterationPlan, block_bounds, block_count, reconstruct_image

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TdConfig:
    surround: int = 2
    i_min: int = 10
    i_max: int = 300

    def __post_init__(self):
        if self.surround < 0:
            raise ValueError("surround must be >= 0")
        if not 1 <= self.i_min <= self.i_max:
            raise ValueError(f"need 1 <= i_min <= i_max, got {self.i_min}, {self.i_max}")


@dataclass(frozen=True)
class BlockStats:
    mean: float
    variance: float
    count: int

    @property
    def degenerate(self) -> bool:
        return self.count <= 1


def block_variance(image, mask, reconstructed, index: int, surround: int,
                   cfg: FsrConfig = FsrConfig()) -> BlockStats:
    """Mean and unbiased variance of the usable pixels around block `index`.

    The block is grown by `surround` pixels on every side and clipped to the
    image. Lost pixels are ignored; acquired and already reconstructed ones
    are used.
    """
    if surround < 0:
        raise ValueError("surround must be >= 0")
    H, W = image.shape
    y0, y1, x0, x1 = block_bounds(image.shape, index, cfg)
    ys = slice(max(y0 - surround, 0), min(y1 + surround, H))
    xs = slice(max(x0 - surround, 0), min(x1 + surround, W))
    usable = mask[ys, xs] | reconstructed[ys, xs]
    vals = image[ys, xs][usable]
    n = vals.size
    if n == 0:
        return BlockStats(mean=0.0, variance=0.0, count=0)
    mean = float(vals.mean())
    if n == 1:
        return BlockStats(mean=mean, variance=0.0, count=1)
    return BlockStats(mean=mean, variance=float(vals.var(ddof=1)), count=n)


def block_variances(image, mask, surround: int, cfg: FsrConfig = FsrConfig()) -> np.ndarray:
    """Variance of every block of the degraded image, in raster order."""
    image = as_image(image)
    mask = as_mask(mask)
    none = np.zeros(mask.shape, dtype=bool)
    return np.array([
        block_variance(image, mask, none, b, surround, cfg).variance
        for b in range(block_count(image.shape, cfg))
    ])


def normalize_variances(variances) -> np.ndarray:
    """Min-max normalize to [0, 1]; a constant input maps to all zeros."""
    v = np.asarray(variances, dtype=np.float64)
    if v.size == 0:
        raise ValueError("need at least one block")
    lo, hi = v.min(), v.max()
    if hi <= lo:
        return np.zeros_like(v)
    return np.clip((v - lo) / (hi - lo), 0.0, 1.0)


def linear_mapping(normalized: np.ndarray, td: TdConfig) -> np.ndarray:
    return (td.i_max - td.i_min) * normalized


def _clamp_redistribute(raw: np.ndarray, total: float, lo: float, hi: float) -> np.ndarray:
    values = raw.astype(np.float64).copy()
    free = np.ones(values.size, dtype=bool)
    while True:
        clipped = np.clip(values, lo, hi)
        newly = free & (clipped != values)
        values = clipped
        free &= ~newly
        deficit = total - values.sum()
        if not free.any() or abs(deficit) <= 1e-9 * max(1.0, abs(total)):
            break
        values[free] += deficit / free.sum()
    deficit = total - values.sum()
    if abs(deficit) > 1e-9 * max(1.0, abs(total)):
        log.warning(
            "budget %.0f cannot be met within [%g, %g] for %d blocks; relaxing bounds",
            total, lo, hi, values.size,
        )
        values += deficit / values.size
    return values


def largest_remainder(values: np.ndarray, total: int, priority=None) -> np.ndarray:
    """Round to integers whose sum is exactly `total`.

    Units left over after flooring go to the largest fractional parts. Equal
    fractions are served by descending `priority` (if given), then in index
    order.
    """
    snapped = np.where(np.abs(values - np.round(values)) < 1e-9, np.round(values), values)
    base = np.floor(snapped).astype(np.int64)
    missing = int(total - base.sum())
    if missing:
        frac = snapped - base
        prio = np.zeros_like(frac) if priority is None else np.asarray(priority, dtype=np.float64)
        order = np.lexsort((np.arange(frac.size), -prio, -frac))
        if missing > 0:
            base[order[:missing]] += 1
        else:
            base[order[::-1][:-missing]] -= 1
    return base


def allocate_iterations(normalized, avg_iterations: int, td: TdConfig = TdConfig(),
                        mapping: Callable[[np.ndarray, TdConfig], np.ndarray] = linear_mapping,
                        ) -> IterationPlan:
    """Per-block iteration counts from normalized variances.

    The mapped texture term plus a uniform share of whatever budget it leaves
    over gives real-valued counts summing to ``B * avg_iterations``. Counts
    are then clamped to ``[i_min, i_max]`` with the surplus or deficit spread
    over unclamped blocks, and finally rounded by largest remainder. If the
    budget cannot be met inside the bounds, the bounds give way.
    """
    s = np.asarray(normalized, dtype=np.float64).ravel()
    B = s.size
    if B < 1:
        raise ValueError("need at least one block")
    if int(avg_iterations) != avg_iterations or avg_iterations < 1:
        raise ValueError(f"average iterations must be a positive integer, got {avg_iterations}")
    total = B * int(avg_iterations)
    texture = mapping(s, td)
    raw = texture + (total - texture.sum()) / B
    values = _clamp_redistribute(raw, total, td.i_min, td.i_max)
    # ties go to the more textured block so the plan stays monotone
    counts = largest_remainder(values, total, priority=s)
    return IterationPlan(tuple(int(c) for c in counts))


def texture_plan(image, mask, avg_iterations: int, cfg: FsrConfig = FsrConfig(),
                 td: TdConfig = TdConfig()) -> tuple[IterationPlan, np.ndarray, np.ndarray]:
    """Plan for TD-FSR plus the raw and normalized block variances behind it."""
    variances = block_variances(image, mask, td.surround, cfg)
    normalized = normalize_variances(variances)
    return allocate_iterations(normalized, avg_iterations, td), variances, normalized


def td_fsr(image, mask, avg_iterations: int, cfg: FsrConfig = FsrConfig(),
           td: TdConfig = TdConfig()) -> np.ndarray:
    plan, _, _ = texture_plan(image, mask, avg_iterations, cfg, td)
    return reconstruct_image(image, mask, plan, cfg)


def write_plan_csv(path, plan: IterationPlan, variances, normalized) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["blockIndex", "variance", "normalized", "iterations"])
        for b, (v, s, it) in enumerate(zip(variances, normalized, plan.per_block)):
            writer.writerow([b, repr(float(v)), repr(float(s)), it])


def read_plan_csv(path) -> IterationPlan:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    rows.sort(key=lambda r: int(r["blockIndex"]))
    return IterationPlan(tuple(int(r["iterations"]) for r in rows))
