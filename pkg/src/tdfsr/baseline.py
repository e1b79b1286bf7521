"""Linear interpolation over a Delaunay triangulation of the acquired pixels."""

from __future__ import annotations

import numpy as np
from scipy.interpolate import LinearNDInterpolator
from scipy.spatial import Delaunay, QhullError, cKDTree

from .imaging import as_image, as_mask


def _nearest(points, values, targets) -> np.ndarray:
    _, idx = cKDTree(points).query(targets)
    return values[idx]


def linear_reconstruct(image, mask) -> np.ndarray:
    """Fill missing pixels by barycentric interpolation on the triangulation.

    Pixels outside the convex hull of the acquired positions take the value of
    the nearest acquired pixel, as does everything when the acquired
    positions are collinear or fewer than three.
    """
    image = as_image(image)
    mask = as_mask(mask)
    if image.shape != mask.shape:
        raise ValueError(f"mask shape {mask.shape} does not match image {image.shape}")
    if not mask.any():
        raise ValueError("mask has no acquired pixels")
    out = np.where(mask, image, 0.0)
    if mask.all():
        return out

    points = np.argwhere(mask).astype(np.float64)
    values = image[mask]
    targets = np.argwhere(~mask).astype(np.float64)

    filled = None
    if len(points) >= 3:
        try:
            # Qt yields a deterministic triangulation of cocircular grid points
            tri = Delaunay(points, qhull_options="Qbb Qc Qz Q12 Qt")
        except QhullError:
            tri = None
        if tri is not None:
            filled = LinearNDInterpolator(tri, values, fill_value=np.nan)(targets)
            outside = np.isnan(filled)
            if outside.any():
                filled[outside] = _nearest(points, values, targets[outside])
    if filled is None:
        filled = _nearest(points, values, targets)
    out[~mask] = filled
    return out
