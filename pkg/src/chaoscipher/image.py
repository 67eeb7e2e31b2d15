"""RGB images as ``(height, width, 3)`` uint8 arrays, block partitioning, PPM I/O.

Pixels are scanned in raster order. Block ``k`` holds pixels ``16k .. 16k+15``
of that scan; block indices are 0-based everywhere.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .exceptions import BadDimensions, DimensionMismatch, MalformedPpm

BLOCK_PIXELS = 16

__all__ = [
    "BLOCK_PIXELS",
    "DiffStats",
    "blocks",
    "check_image",
    "diff_images",
    "from_blocks",
    "gradient_image",
    "load_ppm",
    "noise_image",
    "partition_by_period",
    "read_ppm",
    "save_ppm",
    "write_ppm",
]


def check_image(img, *, blockwise: bool = False) -> np.ndarray:
    """Validate an RGB image and return it as a C-contiguous uint8 array.

    With ``blockwise=True`` the pixel count must also be divisible by 16.
    """
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise BadDimensions(f"expected an (height, width, 3) image, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        if not np.issubdtype(arr.dtype, np.integer) or arr.min() < 0 or arr.max() > 255:
            raise ValueError("image values must be integers in 0..255")
        arr = arr.astype(np.uint8)
    if blockwise and (arr.shape[0] * arr.shape[1]) % BLOCK_PIXELS:
        raise BadDimensions(
            f"{arr.shape[1]}x{arr.shape[0]} image has {arr.shape[0] * arr.shape[1]} pixels,"
            f" not a multiple of {BLOCK_PIXELS}"
        )
    return np.ascontiguousarray(arr)


def blocks(img) -> np.ndarray:
    """Return the ``(n_blocks, 16, 3)`` view of ``img`` in raster order."""
    arr = check_image(img, blockwise=True)
    return arr.reshape(-1, BLOCK_PIXELS, 3)


def from_blocks(block_array, height: int, width: int) -> np.ndarray:
    """Inverse of :func:`blocks`."""
    return np.asarray(block_array, dtype=np.uint8).reshape(height, width, 3)


def partition_by_period(img, period: int) -> list[np.ndarray]:
    """Split block indices into ``period`` residue classes.

    ``img`` is an image or a block count. Set ``j`` holds every index ``k``
    with ``k % period == j``; blocks in one set are encrypted under identical
    dynamic subkeys.
    """
    if period < 1:
        raise ValueError("period must be >= 1")
    n_blocks = int(img) if np.isscalar(img) else blocks(img).shape[0]
    idx = np.arange(n_blocks)
    return [idx[j::period] for j in range(period)]


@dataclass(frozen=True)
class DiffStats:
    identical: tuple[int, int, int]
    xor_histogram: np.ndarray  # (3, 256) counts of a ^ b per channel
    pixel_count: int

    @property
    def fraction_identical(self) -> tuple[float, float, float]:
        return tuple(c / self.pixel_count for c in self.identical)

    @property
    def overall_fraction_identical(self) -> float:
        return sum(self.identical) / (3 * self.pixel_count)


def diff_images(a, b) -> DiffStats:
    a = check_image(a)
    b = check_image(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    x = (a ^ b).reshape(-1, 3)
    hist = np.stack([np.bincount(x[:, c], minlength=256) for c in range(3)])
    return DiffStats(
        identical=tuple(int(h[0]) for h in hist),
        xor_histogram=hist,
        pixel_count=x.shape[0],
    )


# -- PPM ---------------------------------------------------------------------


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    tokens: list[bytes] = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise MalformedPpm("truncated PPM header")
        tokens.append(data[start:pos])
    return tokens, pos


def load_ppm(data: bytes) -> np.ndarray:
    """Decode a binary P6 PPM with maxval 255. Header comments are skipped."""
    if data[:2] != b"P6":
        raise MalformedPpm(f"bad magic {data[:2]!r}; only binary P6 is supported")
    tokens, pos = _header_tokens(data, 4)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise MalformedPpm(f"non-numeric header field: {exc}") from None
    if width < 1 or height < 1:
        raise MalformedPpm(f"bad size {width}x{height}")
    if maxval != 255:
        raise MalformedPpm(f"maxval {maxval} unsupported (only 255)")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise MalformedPpm("missing whitespace after maxval")
    pos += 1
    size = width * height * 3
    raw = data[pos : pos + size]
    if len(raw) != size:
        raise MalformedPpm(f"truncated pixel data: {len(raw)} of {size} bytes")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width, 3).copy()


def save_ppm(img) -> bytes:
    arr = check_image(img)
    h, w = arr.shape[:2]
    return b"P6\n%d %d\n255\n" % (w, h) + arr.tobytes()


def read_ppm(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        return load_ppm(fh.read())


def write_ppm(path: str | os.PathLike, img) -> None:
    with open(path, "wb") as fh:
        fh.write(save_ppm(img))


# -- test images ---------------------------------------------------------------


def noise_image(height: int, width: int, seed: int = 0) -> np.ndarray:
    """Uniform random RGB noise from a seeded generator."""
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)


def gradient_image(height: int, width: int, seed: int = 0) -> np.ndarray:
    """Smooth colour gradient with mild seeded noise; a stand-in for a photo."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    yy /= max(height - 1, 1)
    xx /= max(width - 1, 1)
    r = 255 * xx
    g = 255 * yy
    b = 255 * (0.5 + 0.5 * np.sin(6.0 * (xx + yy)))
    img = np.stack([r, g, b], axis=-1) + rng.normal(0.0, 4.0, size=(height, width, 3))
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)
