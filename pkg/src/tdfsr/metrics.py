"""Full-reference quality metrics for 8-bit-range images."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import correlate2d

DATA_RANGE = 255.0


@dataclass(frozen=True)
class QualityScore:
    psnr: float
    ssim: float


def _pair(reference, test) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(reference, dtype=np.float64)
    b = np.asarray(test, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def psnr(reference, test) -> float:
    """PSNR in dB over all pixels; identical images give ``inf``."""
    a, b = _pair(reference, test)
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(DATA_RANGE**2 / mse)


def gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2
    g = np.exp(-(x**2) / (2 * sigma**2))
    win = np.outer(g, g)
    return win / win.sum()


def ssim_map(reference, test, size: int = 11, sigma: float = 1.5,
             k1: float = 0.01, k2: float = 0.03) -> np.ndarray:
    """Local SSIM at every position where the window fits inside the image."""
    a, b = _pair(reference, test)
    if a.ndim != 2:
        raise ValueError("SSIM expects single-channel 2-D images")
    if min(a.shape) < size:
        raise ValueError(f"image {a.shape} is smaller than the {size}x{size} SSIM window")
    win = gaussian_window(size, sigma)
    c1 = (k1 * DATA_RANGE) ** 2
    c2 = (k2 * DATA_RANGE) ** 2

    def filt(x):
        return correlate2d(x, win, mode="valid")

    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a**2
    var_b = filt(b * b) - mu_b**2
    cov = filt(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return num / den


def ssim(reference, test) -> float:
    return float(ssim_map(reference, test).mean())


def quality(reference, test) -> QualityScore:
    return QualityScore(psnr=psnr(reference, test), ssim=ssim(reference, test))
