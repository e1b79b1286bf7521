"""Raster types, window labels and 8-bit binary PGM I/O.

Images are plain 2-D ``float64`` arrays of shape ``(height, width)`` holding
luminance in the natural range [0, 255]. Sampling masks are boolean arrays of
the same shape, ``True`` where a pixel was originally acquired.
"""

from __future__ import annotations

import enum

import numpy as np


class PGMFormatError(ValueError):
    """Raised for files that are not 8-bit binary PGM (P5)."""


class AreaLabel(enum.IntEnum):
    """Role of a pixel inside a reconstruction window."""

    SUPPORT = 0
    RECONSTRUCTED = 1
    LOSS = 2
    OUTSIDE = 3


def as_image(data) -> np.ndarray:
    img = np.asarray(data, dtype=np.float64)
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D image, got shape {img.shape}")
    return img


def as_mask(data) -> np.ndarray:
    mask = np.asarray(data)
    if mask.ndim != 2:
        raise ValueError(f"expected a 2-D mask, got shape {mask.shape}")
    return mask.astype(bool, copy=False)


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], list[str], int]:
    """Split the first `count` whitespace-separated header tokens off `data`.

    Returns the tokens, any ``#`` comments met on the way, and the offset of
    the single whitespace byte that terminates the last token.
    """
    tokens: list[bytes] = []
    comments: list[str] = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise PGMFormatError("truncated PGM header")
        if data[pos : pos + 1] == b"#":
            end = data.find(b"\n", pos)
            if end < 0:
                raise PGMFormatError("truncated PGM header")
            comments.append(data[pos + 1 : end].decode("latin-1").strip())
            pos = end + 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        tokens.append(data[start:pos])
    return tokens, comments, pos


def read_pgm(path) -> tuple[np.ndarray, list[str]]:
    """Read a binary 8-bit PGM, returning ``(uint8 array, header comments)``."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens, comments, pos = _header_tokens(data, 4)
    if tokens[0] != b"P5":
        raise PGMFormatError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise PGMFormatError(f"{path}: malformed header") from exc
    if width < 1 or height < 1:
        raise PGMFormatError(f"{path}: invalid dimensions {width}x{height}")
    if maxval != 255:
        raise PGMFormatError(f"{path}: unsupported maxval {maxval} (only 255)")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise PGMFormatError(f"{path}: missing whitespace after header")
    payload = data[pos + 1 :]
    expected = width * height
    if len(payload) < expected:
        raise PGMFormatError(
            f"{path}: truncated pixel data ({len(payload)} of {expected} bytes)"
        )
    pixels = np.frombuffer(payload, dtype=np.uint8, count=expected)
    return pixels.reshape(height, width).copy(), comments


def write_pgm(path, pixels: np.ndarray, comments=()) -> None:
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    height, width = pixels.shape
    header = b"P5\n"
    for c in comments:
        header += b"# " + str(c).encode("latin-1") + b"\n"
    header += f"{width} {height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(pixels.tobytes())


def quantize(image: np.ndarray) -> np.ndarray:
    """Clamp to [0, 255] and round half up to ``uint8``."""
    return np.floor(np.clip(image, 0.0, 255.0) + 0.5).astype(np.uint8)


def load_image(path) -> np.ndarray:
    pixels, _ = read_pgm(path)
    return pixels.astype(np.float64)


def save_image(image, path, comments=()) -> None:
    write_pgm(path, quantize(as_image(image)), comments)


def load_mask(path) -> np.ndarray:
    """Load a mask stored as P5 with values {0, 255}; nonzero means acquired."""
    pixels, _ = read_pgm(path)
    return pixels > 0


def save_mask(mask, path, comments=()) -> None:
    write_pgm(path, np.where(as_mask(mask), 255, 0).astype(np.uint8), comments)


def mask_comments(path) -> list[str]:
    return read_pgm(path)[1]


def apply_mask(image, mask) -> np.ndarray:
    """Zero every pixel not acquired by `mask` (the zero is only a placeholder)."""
    image = as_image(image)
    mask = as_mask(mask)
    if image.shape != mask.shape:
        raise ValueError(f"mask shape {mask.shape} does not match image {image.shape}")
    return np.where(mask, image, 0.0)
