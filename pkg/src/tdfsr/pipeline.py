"""Block-wise frequency selective reconstruction of a whole image."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

import numpy as np

from . import fse
from .imaging import AreaLabel, as_image, as_mask


@dataclass(frozen=True)
class FsrConfig:
    block: int = 4
    border: int = 14
    rho: float = 0.7
    gamma: float = 0.5
    delta: float = 0.5

    def __post_init__(self):
        if self.block < 1 or self.border < 0:
            raise ValueError("block size must be >= 1 and border width >= 0")
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError(f"delta must lie in (0, 1], got {self.delta}")

    @property
    def fft_size(self) -> int:
        return self.block + 2 * self.border

    def digest(self, **extra) -> str:
        payload = json.dumps({**asdict(self), **extra}, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class IterationPlan:
    per_block: tuple[int, ...]

    def __post_init__(self):
        if len(self.per_block) == 0:
            raise ValueError("empty iteration plan")
        if min(self.per_block) < 1:
            raise ValueError("every block needs at least one iteration")

    @classmethod
    def uniform(cls, blocks: int, iterations: int) -> "IterationPlan":
        if int(iterations) != iterations or iterations < 1:
            raise ValueError(f"average iterations must be a positive integer, got {iterations}")
        return cls((int(iterations),) * blocks)

    @property
    def total(self) -> int:
        return sum(self.per_block)

    def __len__(self):
        return len(self.per_block)


@dataclass
class Reconstruction:
    image: np.ndarray
    iterations_spent: int
    blocks_modelled: int
    blocks_fallback: int


def block_grid(shape, cfg: FsrConfig) -> tuple[int, int]:
    """Rows and columns of the block tiling; partial edge blocks included."""
    h, w = shape
    return -(-h // cfg.block), -(-w // cfg.block)


def block_count(shape, cfg: FsrConfig) -> int:
    rows, cols = block_grid(shape, cfg)
    return rows * cols


def block_bounds(shape, index: int, cfg: FsrConfig) -> tuple[int, int, int, int]:
    """``(y0, y1, x0, x1)`` of block `index` in raster order."""
    rows, cols = block_grid(shape, cfg)
    if not 0 <= index < rows * cols:
        raise IndexError(f"block index {index} out of range for {rows}x{cols} blocks")
    by, bx = divmod(index, cols)
    y0, x0 = by * cfg.block, bx * cfg.block
    return y0, min(y0 + cfg.block, shape[0]), x0, min(x0 + cfg.block, shape[1])


def partition_areas(image, mask, reconstructed, index: int,
                    cfg: FsrConfig) -> fse.ReconstructionArea:
    """Cut the window around block `index` and label every pixel in it.

    `reconstructed` flags pixels already written by earlier blocks. Values
    come from `image`, so reconstructed pixels carry their filled-in values.
    """
    H, W = image.shape
    M = cfg.fft_size
    y0, _, x0, _ = block_bounds(image.shape, index, cfg)
    wy0, wx0 = y0 - cfg.border, x0 - cfg.border
    iy0, iy1 = max(wy0, 0), min(wy0 + M, H)
    ix0, ix1 = max(wx0, 0), min(wx0 + M, W)
    sy, sx = slice(iy0 - wy0, iy1 - wy0), slice(ix0 - wx0, ix1 - wx0)

    values = np.zeros((M, M))
    labels = np.full((M, M), AreaLabel.OUTSIDE, dtype=np.int8)
    values[sy, sx] = image[iy0:iy1, ix0:ix1]
    m = mask[iy0:iy1, ix0:ix1]
    r = reconstructed[iy0:iy1, ix0:ix1]
    labels[sy, sx] = np.where(
        m, AreaLabel.SUPPORT, np.where(r, AreaLabel.RECONSTRUCTED, AreaLabel.LOSS)
    )
    return fse.ReconstructionArea(values=values, labels=labels)


def _fallback_value(image, mask, reconstructed, index, cfg) -> float:
    H, W = image.shape
    y0, _, x0, _ = block_bounds(image.shape, index, cfg)
    M = cfg.fft_size
    ys = slice(max(y0 - cfg.border, 0), min(y0 - cfg.border + M, H))
    xs = slice(max(x0 - cfg.border, 0), min(x0 - cfg.border + M, W))
    avail = mask[ys, xs] | reconstructed[ys, xs]
    if avail.any():
        return float(image[ys, xs][avail].mean())
    return 128.0


def run_reconstruction(image, mask, plan: IterationPlan, cfg: FsrConfig = FsrConfig(),
                       independent_blocks: bool = False) -> Reconstruction:
    """Reconstruct every missing pixel, visiting blocks in raster order.

    With `independent_blocks` the pixels filled by earlier blocks are treated
    as lost rather than reconstructed, which removes the dependency chain
    between blocks. It exists for testing only.
    """
    image = as_image(image)
    mask = as_mask(mask)
    if image.shape != mask.shape:
        raise ValueError(f"mask shape {mask.shape} does not match image {image.shape}")
    nblocks = block_count(image.shape, cfg)
    if len(plan) != nblocks:
        raise ValueError(f"plan covers {len(plan)} blocks, image has {nblocks}")

    work = np.where(mask, image, 0.0)
    reconstructed = np.zeros(image.shape, dtype=bool)
    no_reconstructed = reconstructed.copy()
    b = cfg.border
    spent = modelled = fallback = 0

    for index, iterations in enumerate(plan.per_block):
        y0, y1, x0, x1 = block_bounds(image.shape, index, cfg)
        missing = ~mask[y0:y1, x0:x1]
        if not missing.any():
            continue
        known = no_reconstructed if independent_blocks else reconstructed
        area = partition_areas(work, mask, known, index, cfg)
        weights = fse.build_weights(area, cfg.rho, cfg.delta)
        try:
            model = fse.generate_model(area, weights, iterations, cfg.gamma)
        except fse.EmptySupportError:
            fill = np.full((y1 - y0, x1 - x0), _fallback_value(work, mask, known, index, cfg))
            fallback += 1
        else:
            fill = fse.evaluate_model(model)[b : b + y1 - y0, b : b + x1 - x0]
            spent += model.iterations_used
            modelled += 1
        block = work[y0:y1, x0:x1]
        block[missing] = np.clip(fill[missing], 0.0, 255.0)
        reconstructed[y0:y1, x0:x1] |= missing

    return Reconstruction(image=work, iterations_spent=spent,
                          blocks_modelled=modelled, blocks_fallback=fallback)


def reconstruct_image(image, mask, plan: IterationPlan, cfg: FsrConfig = FsrConfig(),
                      independent_blocks: bool = False) -> np.ndarray:
    return run_reconstruction(image, mask, plan, cfg, independent_blocks).image


def fsr_fixed(image, mask, avg_iterations: int, cfg: FsrConfig = FsrConfig()) -> np.ndarray:
    """Original FSR: the same number of iterations for every block."""
    plan = IterationPlan.uniform(block_count(np.shape(image), cfg), avg_iterations)
    return reconstruct_image(image, mask, plan, cfg)
