"""Compiled whole-image encryption and the estimator-style cipher wrapper."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import _kernels
from .cipher import SecretKey, as_key, derive_global_seed
from .exceptions import NonConvergence
from .image import BLOCK_PIXELS, check_image

__all__ = [
    "ChaoticImageCipher",
    "block_seeds",
    "composite_lengths",
    "decrypt_image",
    "encrypt_batch",
    "decrypt_batch",
    "encrypt_image",
    "process_image",
    "selector_schedule",
]


def _subkey_array(key: SecretKey) -> np.ndarray:
    return np.array(key.subkeys, dtype=np.int64)


def _check(status: int) -> None:
    if status != _kernels.OK:
        raise NonConvergence("a chaotic orbit never entered [0.1, 0.9)")


def block_seeds(key, n_blocks: int) -> np.ndarray:
    """``Y0`` of every block, drawn from the global map in raster order."""
    key = as_key(key)
    seeds, status = _kernels.block_seeds(_subkey_array(key), derive_global_seed(key), int(n_blocks))
    _check(status)
    return seeds


def selector_schedule(key, n_blocks: int) -> np.ndarray:
    """Subfunction selector codes, shape ``(n_blocks, 16, K10)``."""
    key = as_key(key)
    kinds, status = _kernels.pixel_kinds(key.k10, block_seeds(key, n_blocks))
    _check(status)
    return kinds


def composite_lengths(key, n_blocks: int, with_adds: bool = False):
    """Reduced XOR/ADD chain length per pixel and channel, ``(n_blocks*16, 3)``.

    With ``with_adds`` the number of ADD terms left after reduction is
    returned as a second array.
    """
    key = as_key(key)
    lengths, adds, status = _kernels.composite_lengths(_subkey_array(key), block_seeds(key, n_blocks))
    _check(status)
    return (lengths, adds) if with_adds else lengths


def _run_batch(images: np.ndarray, key: SecretKey, decrypt: bool) -> np.ndarray:
    n_img, h, w, _ = images.shape
    if (h * w) % BLOCK_PIXELS:
        check_image(images[0], blockwise=True)
    n_blocks = h * w // BLOCK_PIXELS
    work = np.array(images, dtype=np.uint8, copy=True).reshape(n_img, n_blocks, BLOCK_PIXELS, 3)
    _check(_kernels.transform(work, _subkey_array(key), block_seeds(key, n_blocks), decrypt))
    return work.reshape(images.shape)


def _as_batch(images) -> np.ndarray:
    arr = np.asarray(images)
    if arr.ndim == 3:
        arr = check_image(arr, blockwise=True)[None]
    elif arr.ndim == 4:
        check_image(arr[0], blockwise=True)
        arr = np.ascontiguousarray(arr, dtype=np.uint8)
    else:
        raise ValueError(f"expected an image or a stack of images, got shape {arr.shape}")
    return arr


def encrypt_batch(images, key) -> np.ndarray:
    """Encrypt a stack ``(n, height, width, 3)`` of same-sized images under one key."""
    return _run_batch(_as_batch(images), as_key(key), decrypt=False)


def decrypt_batch(images, key) -> np.ndarray:
    return _run_batch(_as_batch(images), as_key(key), decrypt=True)


def process_image(img, key, direction: str = "encrypt") -> np.ndarray:
    arr = check_image(img, blockwise=True)
    if direction not in ("encrypt", "decrypt"):
        raise ValueError(f"unknown direction {direction!r}")
    return _run_batch(arr[None], as_key(key), decrypt=direction == "decrypt")[0]


def encrypt_image(img, key) -> np.ndarray:
    return process_image(img, key, "encrypt")


def decrypt_image(img, key) -> np.ndarray:
    return process_image(img, key, "decrypt")


class ChaoticImageCipher(TransformerMixin, BaseEstimator):
    """The block cipher as a transformer: ``transform`` encrypts, ``inverse_transform`` decrypts.

    ``X`` is one ``(height, width, 3)`` uint8 image or a stack of them.

    Parameters
    ----------
    key : str or SecretKey
        20 hexadecimal digits, ``K1`` first.
    """

    def __init__(self, key="2A84BCF25E6A664E4C41"):
        self.key = key

    def fit(self, X=None, y=None):
        self.key_ = as_key(self.key)
        self.x0_ = derive_global_seed(self.key_)
        self.period_ = 256 // np.gcd(self.key_.k10, 256)
        return self

    def _apply(self, X, decrypt):
        check_is_fitted(self, "key_")
        arr = np.asarray(X)
        out = _run_batch(_as_batch(arr), self.key_, decrypt)
        return out[0] if arr.ndim == 3 else out

    def transform(self, X):
        return self._apply(X, decrypt=False)

    def inverse_transform(self, X):
        return self._apply(X, decrypt=True)
