"""numba kernels mirroring :mod:`chaoscipher.cipher` for whole-image work.

The arithmetic is written in the same order as the reference code so results
agree bit for bit. Kernels report failure through an integer status instead
of raising; callers translate it.
"""

import numpy as np
from numba import njit

OK = 0
NO_CONVERGENCE = 1

_MU = 3.9999
_MAX_ITER = 1000000

_BOUNDS = np.array(
    [0.10, 0.13, 0.16, 0.19, 0.22, 0.25, 0.28, 0.31,
     0.34, 0.37, 0.40, 0.43, 0.46, 0.49, 0.52, 0.55,
     0.58, 0.62, 0.66, 0.70, 0.74, 0.78, 0.82, 0.86,
     0.90]
)  # fmt: skip

# channel -> 0-based subkey indices of (a0, b0, a1, b1)
_WIRING = np.array([[3, 4, 6, 7], [4, 5, 7, 8], [5, 3, 8, 6]], dtype=np.int64)


@njit(cache=True)
def _next_window(x):
    for _ in range(_MAX_ITER):
        t1 = 1.0 - x
        t2 = x * t1
        x = _MU * t2
        if x >= 0.1 and x < 0.9:
            return x, True
        if x == 0.0:
            break
    return x, False


@njit(cache=True)
def _kind(y, bounds):
    lo = 0
    hi = 24
    # largest i with bounds[i] <= y
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if bounds[mid] <= y:
            lo = mid
        else:
            hi = mid - 1
    return lo % 8


@njit(cache=True)
def _apply(kind, v, a0, b0, a1, b1, inverse):
    if kind == 0:
        return v ^ 255
    elif kind == 1:
        return v ^ a0
    elif kind == 2:
        if inverse:
            return (v - a0 - b0) & 255
        return (v + a0 + b0) & 255
    elif kind == 3:
        return v ^ a0 ^ 255
    elif kind == 4:
        return v ^ a1
    elif kind == 5:
        if inverse:
            return (v - a1 - b1) & 255
        return (v + a1 + b1) & 255
    elif kind == 6:
        return v ^ a1 ^ 255
    return v


@njit(cache=True)
def block_seeds(subkeys, x0, n_blocks):
    """Local-map seeds ``Y0`` for blocks ``0..n_blocks-1``."""
    out = np.empty(n_blocks, dtype=np.float64)
    x = x0
    k1 = subkeys[0]
    k2 = subkeys[1]
    k3 = subkeys[2]
    k10 = subkeys[9]
    for k in range(n_blocks):
        b2 = k1 | (k2 << 8) | (k3 << 16)
        acc = 0
        for j in range(24):
            x, ok = _next_window(x)
            if not ok:
                return out, NO_CONVERGENCE
            p = int(np.floor(24.0 * (x - 0.1) / 0.8)) + 1
            if p > 24:
                p = 24
            if p < 1:
                p = 1
            acc |= ((b2 >> (p - 1)) & 1) << j
        s = (b2 + acc) % 16777216
        if s == 0:
            out[k] = 1.0 / 16777216.0
        else:
            out[k] = s / 16777216.0
        k1 = (k1 + k10) & 255
        k2 = (k2 + k10) & 255
        k3 = (k3 + k10) & 255
    return out, OK


@njit(cache=True)
def pixel_kinds(k10, y0s):
    """Subfunction selectors, shape ``(n_blocks, 16, k10)``."""
    n_blocks = y0s.shape[0]
    kinds = np.empty((n_blocks, 16, k10), dtype=np.int8)
    for k in range(n_blocks):
        y = y0s[k]
        for t in range(16):
            for s in range(k10):
                y, ok = _next_window(y)
                if not ok:
                    return kinds, NO_CONVERGENCE
                kinds[k, t, s] = _kind(y, _BOUNDS)
    return kinds, OK


@njit(cache=True)
def transform(data, subkeys, y0s, decrypt):
    """Encrypt or decrypt a batch in place.

    ``data`` has shape ``(n_images, n_blocks, 16, 3)``; every image uses the
    same key, so each selector sequence is drawn once and applied to all.
    """
    n_img = data.shape[0]
    n_blocks = data.shape[1]
    k10 = subkeys[9]
    kinds = np.empty(max(k10, 1), dtype=np.int64)
    params = np.empty((3, 4), dtype=np.int64)
    for k in range(n_blocks):
        shift = (k * k10) & 255
        for c in range(3):
            for q in range(4):
                params[c, q] = (subkeys[_WIRING[c, q]] + shift) & 255
        y = y0s[k]
        for t in range(16):
            for s in range(k10):
                y, ok = _next_window(y)
                if not ok:
                    return NO_CONVERGENCE
                kinds[s] = _kind(y, _BOUNDS)
            for c in range(3):
                a0 = params[c, 0]
                b0 = params[c, 1]
                a1 = params[c, 2]
                b1 = params[c, 3]
                for i in range(n_img):
                    v = np.int64(data[i, k, t, c])
                    if decrypt:
                        for s in range(k10 - 1, -1, -1):
                            v = _apply(kinds[s], v, a0, b0, a1, b1, True)
                    else:
                        for s in range(k10):
                            v = _apply(kinds[s], v, a0, b0, a1, b1, False)
                    data[i, k, t, c] = v
    return OK


@njit(cache=True)
def _term(kind, a0, b0, a1, b1):
    # (is_add, value) of a subfunction seen as x ^ alpha or x + beta
    if kind == 0:
        return False, 255
    elif kind == 1:
        return False, a0
    elif kind == 2:
        return True, (a0 + b0) & 255
    elif kind == 3:
        return False, a0 ^ 255
    elif kind == 4:
        return False, a1
    elif kind == 5:
        return True, (a1 + b1) & 255
    elif kind == 6:
        return False, a1 ^ 255
    return False, 0


@njit(cache=True)
def composite_lengths(subkeys, y0s):
    """Reduced chain length and number of ADD terms per pixel and channel.

    Both outputs have shape ``(n_pixels, 3)``.
    """
    n_blocks = y0s.shape[0]
    k10 = subkeys[9]
    out = np.zeros((n_blocks * 16, 3), dtype=np.int64)
    adds = np.zeros((n_blocks * 16, 3), dtype=np.int64)
    kinds = np.empty(max(k10, 1), dtype=np.int64)
    stack_add = np.empty(max(k10, 1), dtype=np.bool_)
    stack_val = np.empty(max(k10, 1), dtype=np.int64)
    for k in range(n_blocks):
        shift = (k * k10) & 255
        y = y0s[k]
        for t in range(16):
            for s in range(k10):
                y, ok = _next_window(y)
                if not ok:
                    return out, adds, NO_CONVERGENCE
                kinds[s] = _kind(y, _BOUNDS)
            for c in range(3):
                a0 = (subkeys[_WIRING[c, 0]] + shift) & 255
                b0 = (subkeys[_WIRING[c, 1]] + shift) & 255
                a1 = (subkeys[_WIRING[c, 2]] + shift) & 255
                b1 = (subkeys[_WIRING[c, 3]] + shift) & 255
                top = 0
                for s in range(k10):
                    is_add, val = _term(kinds[s], a0, b0, a1, b1)
                    if val == 0:
                        continue
                    if top > 0 and stack_add[top - 1] == is_add:
                        if is_add:
                            merged = (stack_val[top - 1] + val) & 255
                        else:
                            merged = stack_val[top - 1] ^ val
                        if merged == 0:
                            top -= 1
                        else:
                            stack_val[top - 1] = merged
                    else:
                        stack_add[top] = is_add
                        stack_val[top] = val
                        top += 1
                out[k * 16 + t, c] = top
                n_add = 0
                for s in range(top):
                    if stack_add[s]:
                        n_add += 1
                adds[k * 16 + t, c] = n_add
    return out, adds, OK


@njit(cache=True)
def first_block_matches(plain, cipher, params, k10, t_lo, t_hi, bits):
    """Grid indices ``t`` whose seed ``t / 2**bits`` maps ``plain`` onto ``cipher``.

    ``plain``/``cipher`` are ``(16, 3)`` blocks, ``params`` is ``(3, 4)``.
    """
    scale = float(1 << bits)
    hits = np.empty(0, dtype=np.int64)
    found = []
    kinds = np.empty(max(k10, 1), dtype=np.int64)
    for t in range(t_lo, t_hi):
        y = t / scale
        good = True
        for p in range(16):
            for s in range(k10):
                y, ok = _next_window(y)
                if not ok:
                    good = False
                    break
                kinds[s] = _kind(y, _BOUNDS)
            if not good:
                break
            for c in range(3):
                v = np.int64(plain[p, c])
                for s in range(k10):
                    v = _apply(kinds[s], v, params[c, 0], params[c, 1], params[c, 2], params[c, 3], False)
                if v != cipher[p, c]:
                    good = False
                    break
            if not good:
                break
        if good:
            found.append(t)
    if len(found):
        hits = np.array(found, dtype=np.int64)
    return hits
