"""XOR / modular-addition composition calculus.

Every subfunction of the cipher is either ``x ^ alpha`` or ``(x + beta) mod 256``,
so a per-pixel encryption function is a chain of such terms. Adjacent terms of
the same kind merge and zero terms vanish, leaving an alternating chain.

The companion set of feasible ADD aggregates,
``{z1*(a0+b0) + z2*(a1+b1) mod 256 : z1 + z2 <= K10}``, is never needed by the
attacks and is deliberately not enumerated here.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Iterable, Sequence

from .cipher import SubfunctionKind
from .exceptions import MalformedSet

__all__ = [
    "CompositeFn",
    "Op",
    "Term",
    "alpha_set",
    "alpha_star_set",
    "composition_xor_probability",
    "consistent_pairs",
    "mirror_orbit",
    "is_xor_equivalent",
    "kind_term",
    "len_equals_k10_bound",
    "pair_candidates",
    "reduce",
    "gamma_residue",
]


class Op(Enum):
    XOR = "xor"
    ADD = "add"


@dataclass(frozen=True)
class Term:
    op: Op
    value: int

    def __call__(self, x: int, width: int = 8) -> int:
        if self.op is Op.XOR:
            return x ^ self.value
        return (x + self.value) & ((1 << width) - 1)


def kind_term(kind: SubfunctionKind, a0: int, b0: int, a1: int, b1: int) -> Term:
    """The subfunction selected by ``kind`` written as a single term."""
    kind = SubfunctionKind(kind)
    if kind is SubfunctionKind.ADD_A0_B0:
        return Term(Op.ADD, (a0 + b0) & 0xFF)
    if kind is SubfunctionKind.ADD_A1_B1:
        return Term(Op.ADD, (a1 + b1) & 0xFF)
    alpha = {
        SubfunctionKind.COMPLEMENT: 0xFF,
        SubfunctionKind.XOR_A0: a0,
        SubfunctionKind.XOR_NOT_A0: a0 ^ 0xFF,
        SubfunctionKind.XOR_A1: a1,
        SubfunctionKind.XOR_NOT_A1: a1 ^ 0xFF,
        SubfunctionKind.IDENTITY: 0,
    }[kind]
    return Term(Op.XOR, alpha)


@dataclass(frozen=True)
class CompositeFn:
    """A reduced chain of terms applied left to right."""

    terms: tuple[Term, ...]
    width: int = 8

    def __len__(self) -> int:
        return len(self.terms)

    def __call__(self, x: int) -> int:
        for t in self.terms:
            x = t(x, self.width)
        return x

    def table(self) -> list[int]:
        return [self(x) for x in range(1 << self.width)]

    @property
    def xor_aggregate(self) -> int:
        acc = 0
        for t in self.terms:
            if t.op is Op.XOR:
                acc ^= t.value
        return acc


def reduce(chain: Iterable[Term], width: int = 8) -> CompositeFn:
    mask = (1 << width) - 1
    stack: list[Term] = []
    for term in chain:
        value = term.value & mask
        if value == 0:
            continue
        if stack and stack[-1].op is term.op:
            prev = stack.pop()
            merged = prev.value ^ value if term.op is Op.XOR else (prev.value + value) & mask
            if merged:
                stack.append(Term(term.op, merged))
        else:
            stack.append(Term(term.op, value))
    return CompositeFn(tuple(stack), width)


def is_xor_equivalent(
    f: Callable[[int], int] | Sequence[int], probe_budget: int = 255, width: int = 8
) -> int | None:
    """Return ``gamma`` if ``f(x) == x ^ gamma`` for all ``x``, else ``None``.

    The check is anchored at ``x1 = 0``. ``probe_budget = 255`` tests every
    ``d`` in ``1..255`` and is exact for arbitrary ``f``. ``probe_budget = 127``
    tests ``d`` in ``1..127`` only, which is sufficient when ``f`` is a chain of
    XOR and ADD terms because flipping the top bit of the input always flips
    the top bit of the output.
    """
    lookup = f.__getitem__ if isinstance(f, Sequence) else f
    full = (1 << width) - 1
    if probe_budget not in (full, full >> 1):
        raise ValueError(f"probe_budget must be {full} or {full >> 1}")
    f0 = lookup(0)
    for d in range(1, probe_budget + 1):
        if f0 ^ lookup(d) != d:
            return None
    return f0


def gamma_residue(composite: CompositeFn | Iterable[Term], width: int | None = None) -> int:
    """XOR of all XOR-term values, reduced modulo ``2**(width-1)``.

    When the composite equals ``x ^ gamma`` for some gamma, gamma is congruent
    to this value modulo half the byte range, so gamma is either the XOR
    aggregate or the aggregate with the top bit flipped.
    """
    if not isinstance(composite, CompositeFn):
        composite = reduce(composite, width or 8)
    width = width or composite.width
    return composite.xor_aggregate % (1 << (width - 1))


def alpha_set(a0: int, a1: int) -> frozenset[int]:
    """Feasible values of a merged XOR term for parameters ``a0``, ``a1``."""
    return frozenset({0xFF, a0, a1, a0 ^ 0xFF, a1 ^ 0xFF, a0 ^ a1, a0 ^ a1 ^ 0xFF})


@lru_cache(maxsize=None)
def alpha_star_set(a0: int, a1: int) -> frozenset[int]:
    u = a0 % 128
    v = a1 % 128
    return frozenset({0, 127, u, v, u ^ 127, v ^ 127, u ^ v, u ^ v ^ 127})


def pair_candidates(astar: Iterable[int]) -> list[tuple[int, int]]:
    """Candidate ``(a0*, a1*)`` pairs for an A* set, as enumerated in the attack.

    Sizes 2, 4 and 8 yield 2, 8 and 24 pairs. Note that these lists are not
    exhaustive for sizes 2 and 4; :func:`consistent_pairs` is.
    """
    s = set(astar)
    if len(s) == 2:
        return [(0, 127), (127, 0)]
    if len(s) == 4:
        rest = sorted(s - {0, 127})
        if len(rest) != 2 or rest[0] ^ rest[1] != 127:
            raise MalformedSet(f"size-4 set {sorted(s)} is not of the form {{0,127,a,a^127}}")
        a = rest[0]
        b = a ^ 127
        return [(0, a), (0, b), (127, a), (127, b), (a, a), (a, b), (b, a), (b, b)]
    if len(s) == 8:
        out = []
        for u in sorted(s - {0, 127}):
            for v in sorted(s - {0, 127, u, u ^ 127}):
                out.append((u, v))
        return out
    raise MalformedSet(f"A* estimate has size {len(s)}, expected 2, 4 or 8")


@lru_cache(maxsize=None)
def _pairs_by_set() -> dict[frozenset[int], tuple[tuple[int, int], ...]]:
    table: dict[frozenset[int], list[tuple[int, int]]] = {}
    for u in range(128):
        for v in range(128):
            table.setdefault(alpha_star_set(u, v), []).append((u, v))
    return {k: tuple(v) for k, v in table.items()}


def consistent_pairs(astar: Iterable[int]) -> tuple[tuple[int, int], ...]:
    """Every ``(a0*, a1*)`` in ``0..127`` whose A* set equals ``astar`` exactly."""
    return _pairs_by_set().get(frozenset(astar), ())


def mirror_orbit(a0: int, a1: int, k10: int) -> list[tuple[int, int, int]]:
    """The four 7-bit triples the candidate verification cannot tell apart.

    Relies on ``x + a*c == ((x ^ 127) + (128 - a)*c) ^ 127 (mod 128)``.
    """
    w = (128 - k10) % 128
    return [
        (a0, a1, k10),
        (a0 ^ 127, a1 ^ 127, w),
        (a1, a0, k10),
        (a1 ^ 127, a0 ^ 127, w),
    ]


def composition_xor_probability(n: int, p: float) -> float:
    """Probability that ``n`` independent maps, each ``x ^ a`` with probability
    ``p`` and identity otherwise, compose to ``x ^ a``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return (1.0 - (1.0 - 2.0 * p) ** n) / 2.0


def len_equals_k10_bound(k10: int) -> float:
    """Upper bound on the chance that no subfunctions merge (``len == K10``)."""
    if k10 < 1:
        raise ValueError("k10 must be >= 1")
    q = 5 / 32
    if k10 % 2 == 0:
        return 2 * q ** (k10 // 2)
    return q ** (k10 // 2) * (7 / 8)
