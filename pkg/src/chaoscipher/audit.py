"""Invalid, weak and partially equivalent keys, and a key-space estimate."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from itertools import product

from .cipher import SecretKey, as_key, global_seed_sums, subkey_period

__all__ = [
    "KeyAuditReport",
    "audit_key",
    "audit_weak_visual",
    "class1_equivalents",
    "class2_equivalents",
    "count_mod3",
    "estimated_log2_keyspace",
    "is_invalid_x0",
    "probability_y0_zero",
    "report_csv",
]

ALL_ZERO_WITNESS = 32


def is_invalid_x0(key) -> int | None:
    """Witness ``C`` when the key sends the global seed to 0, else ``None``.

    ``X0 = 0`` exactly when the nibble sum of ``K7..K9`` is ``3C`` and
    ``K4 + K5*2^8 + K6*2^16 == 2^19 * (32 - C)``. ``C = 0`` is unreachable
    (it needs ``2^24``); the all-zero ``K4..K9`` case wraps around instead and
    is reported with the boundary witness ``C = 32``.
    """
    s1, s2 = global_seed_sums(key)
    if s1 == 0 and s2 == 0:
        return ALL_ZERO_WITNESS
    if s2 % 3:
        return None
    c = s2 // 3
    if s1 == (1 << 19) * (32 - c):
        return c
    return None


def count_mod3(n: int, r: int) -> int:
    """Number of ``n``-nibble vectors whose sum is ``r`` modulo 3."""
    if n < 1 or r not in (0, 1, 2):
        raise ValueError("need n >= 1 and r in {0, 1, 2}")
    q, rem = divmod(16**n, 3)
    return q + (1 if r == 0 and rem else 0)


def probability_y0_zero(m: int, n: int) -> float:
    """Chance that a block seed lands on 0 before remapping.

    ``m`` counts the 0-bits of ``B2`` and ``n`` the 0-bits of ``2^24 - B2``
    (both as 24-bit words), assuming uniform bit positions.
    """
    if not (0 <= m <= 24 and 0 <= n <= 24):
        raise ValueError("m and n must lie in 0..24")
    return m**n * (24 - m) ** (24 - n) / 24**24


_LEAK_PAIRS = {(0, 0), (255, 1)}
# (a0, b0) and (a1, b1) subkey indices per channel
_CHANNEL_PAIRS = {"R": ((4, 5), (7, 8)), "G": ((5, 6), (8, 9)), "B": ((6, 4), (9, 7))}


def audit_weak_visual(key) -> dict[str, bool]:
    """Channels left (nearly half) unencrypted in sub-image 0.

    A channel leaks when both its ``(a0, b0)`` and ``(a1, b1)`` pairs lie in
    ``{(0, 0), (255, 1)}``: every subfunction is then identity or complement.
    """
    key = as_key(key)
    flags = {
        ch: all((key.k(i), key.k(j)) in _LEAK_PAIRS for i, j in pairs)
        for ch, pairs in _CHANNEL_PAIRS.items()
    }
    flags["whole"] = all(key.k(i) == 0 for i in range(4, 10))
    return flags


def _swap_nibbles(b: int) -> int:
    return ((b & 0x0F) << 4) | (b >> 4)


def class1_equivalents(key) -> list[SecretKey]:
    """Keys reachable by swapping the nibbles of any of ``K7, K8, K9``.

    The global seed is unchanged. Swapping ``K9`` alone keeps the red channel,
    ``K8`` alone the blue channel and ``K7`` alone the green channel.
    """
    key = as_key(key)
    seen: dict[str, SecretKey] = {}
    for flips in product((False, True), repeat=3):
        sk = list(key.subkeys)
        for pos, flip in zip((6, 7, 8), flips):
            if flip:
                sk[pos] = _swap_nibbles(sk[pos])
        k = SecretKey(tuple(sk))
        seen.setdefault(k.to_hex(), k)
    return list(seen.values())


def class2_equivalents(key) -> list[SecretKey]:
    """The key plus every key obtained by flipping the MSBs of two of ``K7..K9``
    where exactly one of the two is below 128, which keeps the global seed."""
    key = as_key(key)
    out = [key]
    for i, j in ((7, 8), (7, 9), (8, 9)):
        if (key.k(i) < 128) != (key.k(j) < 128):
            sk = list(key.subkeys)
            sk[i - 1] ^= 0x80
            sk[j - 1] ^= 0x80
            out.append(SecretKey(tuple(sk)))
    return out


def weak_k10(k10: int) -> dict[str, object]:
    return {
        "period": subkey_period(k10),
        "major_weak": k10 == 1,
        "short_period": k10 % 2 == 0,
        "below_recommended": k10 < 8 or k10 % 2 == 0,
    }


# Sizes of the reduced subkey spaces, log2.
_LOG2_K123 = 24.0
_LOG2_K456 = 24.0
_LOG2_K789 = math.log2(136**3 / 2)
_LOG2_K10 = math.log2(255 - 128 - 1)


def estimated_log2_keyspace() -> float:
    """Rough effective key size after removing weak and equivalent keys (about 75 bits)."""
    invalid = 16**6 / 3
    log2_k4_9 = math.log2(2**48 - invalid) - 24.0  # K4..K6 part; K7..K9 accounted below
    return _LOG2_K123 + log2_k4_9 + _LOG2_K789 + _LOG2_K10


@dataclass
class KeyAuditReport:
    key: SecretKey
    invalid_x0: bool
    x0_witness: int | None
    period: int
    major_weak_k10: bool
    short_period: bool
    below_recommended_k10: bool
    visual_leak: dict[str, bool]
    class1_orbit: list[SecretKey] = field(default_factory=list)
    class2_orbit: list[SecretKey] = field(default_factory=list)
    estimated_log2_keyspace: float = 0.0

    @property
    def flags(self) -> list[str]:
        out = []
        if self.invalid_x0:
            out.append("invalid-x0")
        if self.major_weak_k10:
            out.append("k10-major-weak")
        if self.short_period:
            out.append(f"short-period-T{self.period}")
        out.extend(f"visual-leak-{ch}" for ch, v in self.visual_leak.items() if v)
        return out

    def as_dict(self) -> dict[str, object]:
        return {
            "key": self.key.to_hex(),
            "invalid_x0": int(self.invalid_x0),
            "x0_witness": "" if self.x0_witness is None else self.x0_witness,
            "period": self.period,
            "major_weak_k10": int(self.major_weak_k10),
            "short_period": int(self.short_period),
            "below_recommended_k10": int(self.below_recommended_k10),
            "leak_r": int(self.visual_leak["R"]),
            "leak_g": int(self.visual_leak["G"]),
            "leak_b": int(self.visual_leak["B"]),
            "leak_whole": int(self.visual_leak["whole"]),
            "class1_orbit": " ".join(k.to_hex() for k in self.class1_orbit),
            "class2_orbit": " ".join(k.to_hex() for k in self.class2_orbit),
            "estimated_log2_keyspace": f"{self.estimated_log2_keyspace:.3f}",
        }

    def to_text(self) -> str:
        return "\n".join(f"{k}: {v}" for k, v in self.as_dict().items()) + "\n"


def audit_key(key) -> KeyAuditReport:
    key = as_key(key)
    witness = is_invalid_x0(key)
    weak = weak_k10(key.k10)
    return KeyAuditReport(
        key=key,
        invalid_x0=witness is not None,
        x0_witness=witness,
        period=weak["period"],
        major_weak_k10=weak["major_weak"],
        short_period=weak["short_period"],
        below_recommended_k10=weak["below_recommended"],
        visual_leak=audit_weak_visual(key),
        class1_orbit=class1_equivalents(key),
        class2_orbit=class2_equivalents(key),
        estimated_log2_keyspace=estimated_log2_keyspace(),
    )


def report_csv(reports, header: bool = True) -> str:
    rows = [r.as_dict() for r in reports]
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        if header:
            writer.writeheader()
        writer.writerows(rows)
    return buf.getvalue()
