"""Reference implementation of the chaos-based RGB block cipher.

Everything here is plain Python and follows the algorithm step by step.
:mod:`chaoscipher._kernels` holds a numba port used for whole-image work; the
two are required to agree bit for bit (see ``tests/test_kernels.py``).

Floating point is IEEE binary64 with the logistic step evaluated as
``t1 = 1 - x; t2 = x * t1; 3.9999 * t2``. No transcendental calls are made,
so ciphertexts are reproducible across conforming platforms.
"""

from __future__ import annotations

import math
import re
from bisect import bisect_right
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Literal

import numpy as np

from .exceptions import InvalidKey, KeyFormatError, NonConvergence, OutOfWindow
from .image import BLOCK_PIXELS, check_image

MU = 3.9999
WINDOW_LO = 0.1
WINDOW_HI = 0.9
MAX_WINDOW_ITERATIONS = 10**6
Y0_BITS = 24
Y0_FALLBACK = 2.0**-24

Direction = Literal["encrypt", "decrypt"]

_HEX_KEY = re.compile(r"[0-9A-Fa-f]{20}")


@dataclass(frozen=True)
class SecretKey:
    """The 80-bit key as ten bytes ``K1..K10``."""

    subkeys: tuple[int, ...]

    def __post_init__(self):
        sk = tuple(int(v) for v in self.subkeys)
        if len(sk) != 10:
            raise KeyFormatError(f"expected 10 subkeys, got {len(sk)}")
        if any(not 0 <= v <= 255 for v in sk):
            raise KeyFormatError(f"subkeys must lie in 0..255: {sk}")
        object.__setattr__(self, "subkeys", sk)

    @classmethod
    def from_hex(cls, text: str) -> SecretKey:
        text = text.strip()
        if not _HEX_KEY.fullmatch(text):
            raise KeyFormatError(f"key must be exactly 20 hex digits, got {text!r}")
        return cls(tuple(bytes.fromhex(text)))

    def to_hex(self) -> str:
        return bytes(self.subkeys).hex().upper()

    def k(self, i: int) -> int:
        """Subkey ``K_i`` with 1-based ``i``."""
        return self.subkeys[i - 1]

    @property
    def k10(self) -> int:
        return self.subkeys[9]

    def with_subkeys(self, **changes: int) -> SecretKey:
        """Copy with some subkeys replaced, e.g. ``key.with_subkeys(k7=0x5C)``."""
        sk = list(self.subkeys)
        for name, value in changes.items():
            sk[int(name[1:]) - 1] = value
        return SecretKey(tuple(sk))

    def __str__(self) -> str:
        return self.to_hex()


def as_key(key) -> SecretKey:
    if isinstance(key, SecretKey):
        return key
    if isinstance(key, str):
        return SecretKey.from_hex(key)
    return SecretKey(tuple(key))


# -- chaotic maps ----------------------------------------------------------------


def logistic_step(x: float) -> float:
    t1 = 1.0 - x
    t2 = x * t1
    return MU * t2


def in_window(x: float) -> bool:
    return WINDOW_LO <= x < WINDOW_HI


@dataclass
class ChaoticStream:
    """Logistic-map iterator that hands out states lying in ``[0.1, 0.9)``.

    ``steps`` counts raw iterations and ``draws`` counts window states
    returned; both exist for bookkeeping checks.
    """

    x: float
    steps: int = 0
    draws: int = 0

    @property
    def mu(self) -> float:
        return MU

    def step(self) -> float:
        self.x = logistic_step(self.x)
        self.steps += 1
        return self.x

    def next_window_state(self) -> float:
        # The current state never counts; iterate at least once.
        for _ in range(MAX_WINDOW_ITERATIONS):
            x = self.step()
            if WINDOW_LO <= x < WINDOW_HI:
                self.draws += 1
                return x
            if x == 0.0:
                break
        raise NonConvergence(f"orbit did not enter [0.1, 0.9) (state {self.x!r})")


def next_window_state(stream: ChaoticStream) -> float:
    return stream.next_window_state()


# -- key schedule ----------------------------------------------------------------


def global_seed_sums(key) -> tuple[int, int]:
    """Integer sums ``(S1, S2)`` feeding the global seed.

    ``S1 = K4 + K5*2^8 + K6*2^16``; ``S2`` is the sum of the six nibbles of
    ``K7, K8, K9``.
    """
    key = as_key(key)
    s1 = key.k(4) + (key.k(5) << 8) + (key.k(6) << 16)
    s2 = sum((key.k(j) & 0x0F) + (key.k(j) >> 4) for j in (7, 8, 9))
    return s1, s2


def derive_global_seed(key) -> float:
    """Initial state ``X0`` of the global map; raises :class:`InvalidKey` if 0."""
    s1, s2 = global_seed_sums(key)
    x0 = (s1 / 2.0**24 + s2 / 96.0) % 1.0
    if x0 == 0.0:
        raise InvalidKey(f"key {as_key(key)} gives X0 = 0 (global map stuck at the fixed point)")
    return x0


def bit_index_from_state(x: float) -> int:
    """Map a window state to a 1-based bit position ``P`` in ``1..24``."""
    p = math.floor(24.0 * (x - 0.1) / 0.8) + 1
    return min(max(p, 1), 24)


def block_seed_from_positions(b2: int, positions) -> float:
    acc = 0
    for j, p in enumerate(positions):
        acc |= ((b2 >> (p - 1)) & 1) << j
    s = (b2 + acc) % (1 << Y0_BITS)
    if s == 0:
        return Y0_FALLBACK
    return s / float(1 << Y0_BITS)


def derive_block_seed(global_stream: ChaoticStream, b2: int) -> float:
    """Draw 24 window states from the global map and build the local seed ``Y0``."""
    positions = [bit_index_from_state(global_stream.next_window_state()) for _ in range(24)]
    return block_seed_from_positions(b2, positions)


def subkey_period(k10: int) -> int:
    """Period of ``K_i + n*K10 (mod 256)``: ``256 / gcd(K10, 256)``."""
    return 256 // math.gcd(k10, 256)


@dataclass
class BlockContext:
    """Dynamic subkeys and local seed for one block."""

    subkeys: tuple[int, ...]  # current K1..K9
    k10: int
    y0: float = 0.0
    index: int = 0

    @property
    def b2(self) -> int:
        return self.subkeys[0] | (self.subkeys[1] << 8) | (self.subkeys[2] << 16)

    def k(self, i: int) -> int:
        return self.subkeys[i - 1]

    @classmethod
    def initial(cls, key) -> BlockContext:
        key = as_key(key)
        return cls(subkeys=key.subkeys[:9], k10=key.k10)


def update_subkeys(ctx: BlockContext) -> BlockContext:
    k10 = ctx.k10
    return replace(
        ctx,
        subkeys=tuple((v + k10) & 0xFF for v in ctx.subkeys),
        index=ctx.index + 1,
    )


def block_subkeys(key, block_index: int) -> tuple[int, ...]:
    """Closed form of the updated ``K1..K9`` in force for ``block_index``."""
    key = as_key(key)
    shift = block_index * key.k10
    return tuple((v + shift) & 0xFF for v in key.subkeys[:9])


# -- subfunctions ------------------------------------------------------------------


class SubfunctionKind(IntEnum):
    COMPLEMENT = 0
    XOR_A0 = 1
    ADD_A0_B0 = 2
    XOR_NOT_A0 = 3
    XOR_A1 = 4
    ADD_A1_B1 = 5
    XOR_NOT_A1 = 6
    IDENTITY = 7


# 24 half-open subintervals of [0.1, 0.9); interval i selects kind i % 8.
INTERVAL_BOUNDS = (
    0.10, 0.13, 0.16, 0.19, 0.22, 0.25, 0.28, 0.31,
    0.34, 0.37, 0.40, 0.43, 0.46, 0.49, 0.52, 0.55,
    0.58, 0.62, 0.66, 0.70, 0.74, 0.78, 0.82, 0.86,
    0.90,
)  # fmt: skip


def select_subfunction(y: float) -> SubfunctionKind:
    if not WINDOW_LO <= y < WINDOW_HI:
        raise OutOfWindow(f"{y!r} outside [0.1, 0.9)")
    return SubfunctionKind((bisect_right(INTERVAL_BOUNDS, y) - 1) % 8)


def apply_subfunction(
    kind: SubfunctionKind, x: int, a0: int, b0: int, a1: int, b1: int, inverse: bool = False
) -> int:
    if kind == SubfunctionKind.COMPLEMENT:
        return x ^ 0xFF
    if kind == SubfunctionKind.XOR_A0:
        return x ^ a0
    if kind == SubfunctionKind.XOR_NOT_A0:
        return x ^ a0 ^ 0xFF
    if kind == SubfunctionKind.XOR_A1:
        return x ^ a1
    if kind == SubfunctionKind.XOR_NOT_A1:
        return x ^ a1 ^ 0xFF
    if kind == SubfunctionKind.ADD_A0_B0:
        return (x - a0 - b0) & 0xFF if inverse else (x + a0 + b0) & 0xFF
    if kind == SubfunctionKind.ADD_A1_B1:
        return (x - a1 - b1) & 0xFF if inverse else (x + a1 + b1) & 0xFF
    return x


# (a0, b0, a1, b1) as 1-based subkey indices, per channel R, G, B.
CHANNEL_WIRING = ((4, 5, 7, 8), (5, 6, 8, 9), (6, 4, 9, 7))


def channel_params(subkeys, channel: int) -> tuple[int, int, int, int]:
    """``(a0, b0, a1, b1)`` for ``channel`` from a ``K1..K9`` (or longer) sequence."""
    return tuple(subkeys[i - 1] for i in CHANNEL_WIRING[channel])


def pixel_kinds(local: ChaoticStream, k10: int) -> list[SubfunctionKind]:
    """Draw the ``K10`` subfunction selectors shared by the three channels of a pixel."""
    return [select_subfunction(local.next_window_state()) for _ in range(k10)]


def process_block(block, ctx: BlockContext, direction: Direction = "encrypt") -> np.ndarray:
    """Encrypt or decrypt one 16-pixel block under ``ctx``."""
    src = np.asarray(block, dtype=np.uint8).reshape(BLOCK_PIXELS, 3)
    out = src.copy()
    inverse = direction == "decrypt"
    if direction not in ("encrypt", "decrypt"):
        raise ValueError(f"unknown direction {direction!r}")
    params = [channel_params(ctx.subkeys, c) for c in range(3)]
    local = ChaoticStream(ctx.y0)
    for t in range(BLOCK_PIXELS):
        kinds = pixel_kinds(local, ctx.k10)
        if inverse:
            kinds.reverse()
        for c in range(3):
            v = int(src[t, c])
            for kind in kinds:
                v = apply_subfunction(kind, v, *params[c], inverse=inverse)
            out[t, c] = v
    return out


def process_image_reference(img, key, direction: Direction = "encrypt") -> np.ndarray:
    """Whole-image transform, one block at a time, in pure Python.

    Slow; meant for small images and for cross-checking the compiled path.
    """
    key = as_key(key)
    arr = check_image(img, blockwise=True)
    flat = arr.reshape(-1, BLOCK_PIXELS, 3)
    out = np.empty_like(flat)
    glob = ChaoticStream(derive_global_seed(key))
    ctx = BlockContext.initial(key)
    for k in range(flat.shape[0]):
        ctx = replace(ctx, y0=derive_block_seed(glob, ctx.b2))
        out[k] = process_block(flat[k], ctx, direction)
        ctx = update_subkeys(ctx)
    return out.reshape(arr.shape)


def block_seeds_reference(key, n_blocks: int) -> list[float]:
    key = as_key(key)
    glob = ChaoticStream(derive_global_seed(key))
    ctx = BlockContext.initial(key)
    seeds = []
    for _ in range(n_blocks):
        seeds.append(derive_block_seed(glob, ctx.b2))
        ctx = update_subkeys(ctx)
    return seeds


__all__ = [
    "BlockContext",
    "CHANNEL_WIRING",
    "ChaoticStream",
    "Direction",
    "INTERVAL_BOUNDS",
    "MU",
    "SecretKey",
    "SubfunctionKind",
    "apply_subfunction",
    "as_key",
    "bit_index_from_state",
    "block_seed_from_positions",
    "block_seeds_reference",
    "block_subkeys",
    "channel_params",
    "derive_block_seed",
    "derive_global_seed",
    "global_seed_sums",
    "logistic_step",
    "next_window_state",
    "pixel_kinds",
    "process_block",
    "process_image_reference",
    "select_subfunction",
    "subkey_period",
    "update_subkeys",
]
