"""Quarter-sampling masks of a non-regularly covered sensor.

Every aligned 2x2 cell keeps exactly one of its four pixels. The choice is
drawn from a SplitMix64-style hash of ``(seed, cell index)`` so any cell can
be generated on its own and the whole mask is reproducible from the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def cell_random(seed: int, cells: np.ndarray) -> np.ndarray:
    """64-bit pseudo-random word for each cell index under `seed`."""
    key = _mix64(np.array([int(seed) & _MASK64], dtype=np.uint64))[0]
    with np.errstate(over="ignore"):
        z = key + (np.asarray(cells, dtype=np.uint64) + np.uint64(1)) * _GOLDEN
        return _mix64(z)


@dataclass(frozen=True)
class MaskSpec:
    width: int
    height: int
    seed: int = 0

    def __post_init__(self):
        if self.width < 2 or self.height < 2 or self.width % 2 or self.height % 2:
            raise ValueError(
                f"quarter mask needs even dimensions >= 2, got {self.width}x{self.height}"
            )


def generate_quarter_mask(spec: MaskSpec) -> np.ndarray:
    rows, cols = spec.height // 2, spec.width // 2
    words = cell_random(spec.seed, np.arange(rows * cols, dtype=np.uint64))
    # top two bits pick the kept position (dy, dx) inside the cell
    pick = (words >> np.uint64(62)).astype(np.intp).reshape(rows, cols)
    mask = np.zeros((spec.height, spec.width), dtype=bool)
    cy, cx = np.mgrid[0:rows, 0:cols]
    mask[2 * cy + pick // 2, 2 * cx + pick % 2] = True
    return mask


def random_mask(shape, density: float, seed: int = 0) -> np.ndarray:
    """Independent Bernoulli mask; only meant for tests and experiments."""
    rng = np.random.default_rng(seed)
    return rng.random(shape) < density


def mask_density(mask) -> float:
    mask = np.asarray(mask, dtype=bool)
    return float(np.count_nonzero(mask)) / mask.size
