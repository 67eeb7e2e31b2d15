"""Attacks on the cipher.

* :func:`first_block_search` - brute force of ``(Y0, K10)`` on block 0.
* :class:`K10Prober` - one chosen image whose blocks are all equal; repeated
  cipher blocks reveal the subkey-update period and hence ``K10``.
* :class:`ChosenPlaintextAttack` - 128 (or fewer) images ``I0 ^ l`` recover
  ``K4..K10 mod 128`` up to a small candidate list.
* :class:`MaskingAttack` - one known plain/cipher pair used as a XOR mask.

The ``*_oracle`` helpers use the secret key and exist to score the attacks.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import _kernels
from .algebra import alpha_star_set, consistent_pairs
from .cipher import BlockContext, as_key, channel_params, subkey_period
from .engine import encrypt_batch
from .exceptions import BudgetExceeded, DimensionMismatch, EmptyEvidence, NoCandidate
from .image import BLOCK_PIXELS, blocks, check_image

__all__ = [
    "CandidateKeyFragment",
    "ChosenPlaintextAttack",
    "ECONOMY_OFFSETS",
    "K10Inference",
    "K10Prober",
    "MaskingAttack",
    "Step1Result",
    "XorEquivalentRecord",
    "craft_cpa_images",
    "craft_probe_image",
    "cpa_step1_collect",
    "cpa_step2_prune",
    "cpa_step3_recover",
    "detection_counts",
    "find_identical_cipher_blocks",
    "first_block_search",
    "infer_k10_candidates",
    "kpa_mask_attack",
    "p_b_collision",
    "xor_equivalence_oracle",
]

ECONOMY_OFFSETS = (0, 1, 2, 3, 4, 7, 8, 15, 16, 31, 32, 63, 64)


# -- K10 from identical blocks ---------------------------------------------------


def craft_probe_image(width: int, height: int) -> np.ndarray:
    """Every block carries the same 16 distinct pixels ``(16t, 16t+1, 16t+2)``."""
    if (width * height) % BLOCK_PIXELS:
        check_image(np.zeros((height, width, 3), np.uint8), blockwise=True)
    t = np.arange(BLOCK_PIXELS, dtype=np.uint8)[:, None] * 16
    pattern = t + np.arange(3, dtype=np.uint8)[None, :]
    n_blocks = width * height // BLOCK_PIXELS
    return np.tile(pattern, (n_blocks, 1)).reshape(height, width, 3)


def find_identical_cipher_blocks(cipher) -> list[tuple[int, int]]:
    """All unordered pairs ``(k0, k1)``, ``k0 < k1``, of byte-identical blocks."""
    groups: dict[bytes, list[int]] = {}
    for k, blk in enumerate(blocks(cipher)):
        groups.setdefault(blk.tobytes(), []).append(k)
    pairs = []
    for members in groups.values():
        for i, a in enumerate(members):
            for b in members[i + 1 :]:
                pairs.append((a, b))
    return sorted(pairs)


@dataclass
class K10Inference:
    period_bound: int
    periods: list[int]
    candidates: list[int]
    advisories: list[str] = field(default_factory=list)


def infer_k10_candidates(
    pairs: Sequence[tuple[int, int]], *, allow_zero: bool = False, min_pairs: int = 3
) -> K10Inference:
    """Narrow ``K10`` from block indices of identical cipher blocks.

    True collisions sit a multiple of the period ``T = 256/gcd(K10, 256)``
    apart, so ``T`` divides ``g = gcd`` of all index gaps and ``K10`` is any
    byte whose period divides ``g``. ``K10 = 0`` (period 1) is left out unless
    ``allow_zero`` is set or nothing else fits.
    """
    if not pairs:
        raise EmptyEvidence("no identical cipher blocks to infer K10 from")
    g = 0
    for a, b in pairs:
        g = math.gcd(g, abs(a - b))
    periods = [1 << i for i in range(9) if g % (1 << i) == 0]
    cands = [k for k in range(256) if g % subkey_period(k) == 0]
    if not allow_zero and len(cands) > 1:
        cands = [k for k in cands if k != 0]
        periods = [t for t in periods if t != 1]
    notes = []
    if len(pairs) < min_pairs:
        notes.append(f"only {len(pairs)} pair(s); a chance collision would mislead the bound")
    if g == 1:
        notes.append("gcd of gaps is 1: evidence is consistent only with chance collisions")
    for note in notes:
        warnings.warn(note, stacklevel=2)
    return K10Inference(g, periods, cands, notes)


def p_b_collision(m: int) -> float:
    """Chance two blocks get the same ``Y0`` when ``B2`` has ``m`` one-bits."""
    if not 0 <= m <= 24:
        raise ValueError("m must lie in 0..24")
    q = m / 24
    return (q * q + (1 - q) * (1 - q)) ** 24


class K10Prober(BaseEstimator):
    """Estimator wrapper around :func:`find_identical_cipher_blocks` and
    :func:`infer_k10_candidates`. ``fit`` takes the cipher of
    :func:`craft_probe_image`."""

    def __init__(self, allow_zero=False, min_pairs=3):
        self.allow_zero = allow_zero
        self.min_pairs = min_pairs

    def fit(self, X, y=None):
        self.pairs_ = find_identical_cipher_blocks(X)
        inf = infer_k10_candidates(self.pairs_, allow_zero=self.allow_zero, min_pairs=self.min_pairs)
        self.period_bound_ = inf.period_bound
        self.periods_ = inf.periods
        self.candidates_ = inf.candidates
        self.advisories_ = inf.advisories
        return self

    def predict(self, X=None):
        check_is_fitted(self, "candidates_")
        return list(self.candidates_)


# -- first-block search -------------------------------------------------------------


def first_block_search(
    plain_block,
    cipher_block,
    k10_candidates: Iterable[int],
    y0_grid_bits: int,
    subkeys: Sequence[int],
    *,
    max_trials: int = 1 << 26,
    grid_range: tuple[int, int] | None = None,
) -> list[tuple[float, int]]:
    """Find ``(Y0, K10)`` pairs that map block 0 of a known pair.

    The full search covers ``2^24`` seeds times 256 values of ``K10``. Here
    seeds are restricted to ``t / 2**y0_grid_bits`` for ``t`` in
    ``grid_range`` (default: the whole grid, ``t >= 1``). Block 0 is also
    keyed by ``K4..K9``, which must be supplied as ``subkeys`` (a guess or the
    true values).
    """
    if not 1 <= y0_grid_bits <= 24:
        raise ValueError("y0_grid_bits must lie in 1..24")
    cands = sorted(set(int(k) for k in k10_candidates))
    lo, hi = grid_range if grid_range is not None else (1, 1 << y0_grid_bits)
    lo = max(lo, 1)
    hi = min(hi, 1 << y0_grid_bits)
    trials = len(cands) * max(hi - lo, 0)
    if trials > max_trials:
        raise BudgetExceeded(f"{trials} trials exceed the cap of {max_trials}")
    plain = np.asarray(plain_block, dtype=np.uint8).reshape(BLOCK_PIXELS, 3)
    cipher = np.asarray(cipher_block, dtype=np.uint8).reshape(BLOCK_PIXELS, 3)
    if len(subkeys) == 6:
        full = (0, 0, 0, *subkeys)
    else:
        full = tuple(subkeys)[:9]
    params = np.array([channel_params(full, c) for c in range(3)], dtype=np.int64)
    out = []
    for k10 in cands:
        hits = _kernels.first_block_matches(plain, cipher, params, k10, lo, hi, y0_grid_bits)
        out.extend((int(t) / float(1 << y0_grid_bits), k10) for t in hits)
    return out


# -- chosen-plaintext attack on K4..K10 mod 128 -------------------------------------


def craft_cpa_images(base, count: int | Sequence[int] = 128) -> np.ndarray:
    """Stack of ``base ^ l``. ``count`` is either ``n`` (offsets ``0..n-1``)
    or an explicit offset list such as :data:`ECONOMY_OFFSETS`."""
    base = check_image(base)
    offsets = list(range(count)) if isinstance(count, int) else list(count)
    if not offsets or any(not 0 <= d <= 127 for d in offsets) or (isinstance(count, int) and count > 128):
        raise ValueError("offsets must be 1..128 values in 0..127")
    return np.stack([base ^ np.uint8(d) for d in offsets])


class XorEquivalentRecord(NamedTuple):
    channel: int
    block: int
    pixel: int
    gamma: int


@dataclass
class Step1Result:
    """Per-position outcome of the XOR-equivalence scan.

    ``flagged[p, c]`` marks pixel ``p``/channel ``c`` as XOR-equivalent and
    ``gamma[p, c]`` holds ``E(0)`` there (meaningful only where flagged).
    """

    flagged: np.ndarray
    gamma: np.ndarray
    offsets: tuple[int, ...]

    def records(self, channel: int) -> list[XorEquivalentRecord]:
        pix = np.flatnonzero(self.flagged[:, channel])
        return [
            XorEquivalentRecord(channel, int(p) // BLOCK_PIXELS, int(p) % BLOCK_PIXELS, int(self.gamma[p, channel]))
            for p in pix
        ]

    def block_gammas(self, channel: int) -> tuple[np.ndarray, np.ndarray]:
        """``(block_indices, gamma)`` arrays of the flagged positions of a channel."""
        pix = np.flatnonzero(self.flagged[:, channel])
        return pix // BLOCK_PIXELS, self.gamma[pix, channel].astype(np.int64)

    @property
    def count(self) -> int:
        return int(self.flagged.sum())


def _stack_pairs(pairs) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(pairs, tuple) and len(pairs) == 2 and np.asarray(pairs[0]).ndim == 4:
        plains, ciphers = (np.asarray(p, dtype=np.uint8) for p in pairs)
    else:
        pairs = list(pairs)
        plains = np.stack([check_image(p) for p, _ in pairs])
        ciphers = np.stack([check_image(c) for _, c in pairs])
    if plains.shape != ciphers.shape:
        raise DimensionMismatch(f"plain stack {plains.shape} vs cipher stack {ciphers.shape}")
    return plains, ciphers


def _first_failures(plains: np.ndarray, ciphers: np.ndarray) -> tuple[np.ndarray, np.ndarray, tuple[int, ...]]:
    n, h, w, _ = plains.shape
    p = plains.reshape(n, -1, 3)
    c = ciphers.reshape(n, -1, 3)
    diff = p[1:] ^ p[0]
    offsets = []
    for i in range(n - 1):
        d = diff[i].ravel()
        if d.size and not (d == d[0]).all():
            raise ValueError(f"plain image {i + 1} is not the base XOR a constant")
        offsets.append(int(d[0]) if d.size else 0)
    # first image index (1-based) at which the XOR relation fails, n if none
    ok = (c[1:] ^ c[0]) == diff
    fail_any = ~ok
    first = np.where(fail_any.any(axis=0), fail_any.argmax(axis=0) + 1, n)
    return first, (c[0] ^ p[0]), tuple([0] + offsets)


def cpa_step1_collect(pairs) -> Step1Result:
    """Flag XOR-equivalent encryption functions from chosen plain/cipher pairs.

    ``pairs`` is a sequence of ``(plain, cipher)`` images (pair 0 is the base
    image, pair ``l`` has plaintext ``base ^ offset_l``) or a tuple of two
    ``(n, h, w, 3)`` stacks. A position passes when
    ``E(p) ^ E(p ^ d) == d`` for every available offset ``d``; with all
    offsets ``1..127`` this is exact. ``gamma = E(p) ^ p``, which equals
    ``E(0)`` at every flagged position.
    """
    plains, ciphers = _stack_pairs(pairs)
    first, gamma, offsets = _first_failures(plains, ciphers)
    return Step1Result(flagged=first == plains.shape[0], gamma=gamma, offsets=offsets)


def detection_counts(pairs) -> np.ndarray:
    """``N(n)`` for ``n = 0..len(pairs)-1``: functions flagged using pairs ``0..n``."""
    plains, ciphers = _stack_pairs(pairs)
    first, _, _ = _first_failures(plains, ciphers)
    n = plains.shape[0]
    hist = np.bincount(first.ravel(), minlength=n + 1)
    # flagged with pairs 0..m iff first failure index > m
    return np.array([int(hist[m + 1 :].sum()) for m in range(n)])


def _residue_sets(step1: Step1Result) -> list[list[set[int]]]:
    """Per channel: gamma mod 128 grouped by block index mod 128."""
    out = []
    for c in range(3):
        ks, gs = step1.block_gammas(c)
        groups: list[set[int]] = [set() for _ in range(128)]
        for k, g in zip((ks % 128).tolist(), (gs % 128).tolist()):
            groups[k].add(g)
        out.append(groups)
    return out


def _xor3_closure(values: set[int]) -> set[int] | None:
    base = set(values) | {0, 127}
    if len(base) > 8:
        return None
    pairs = {a ^ b for a in base for b in base}
    return {p ^ z for p in pairs for z in base}


def _n_classes(k10: int) -> int:
    return max(subkey_period(k10) // 2, 1)


def cpa_step2_prune(records, k10_guess: int) -> list[list[frozenset[int]]] | None:
    """Expanded A* estimates per channel and residue class, or ``None`` if pruned.

    ``records`` is a :class:`Step1Result` (or its precomputed residue sets).
    Blocks ``k`` and ``k + T/2`` run under subkeys that differ by exactly 128,
    so gammas are grouped by ``k mod T/2``. A guess is pruned as soon as an
    expanded set leaves the sizes {2, 4, 8}.
    """
    residues = _residue_sets(records) if isinstance(records, Step1Result) else records
    h = _n_classes(k10_guess)
    out = []
    for c in range(3):
        sets = []
        for j in range(h):
            merged: set[int] = set()
            for r in range(j, 128, h):
                merged |= residues[c][r]
            expanded = _xor3_closure(merged)
            if expanded is None or len(expanded) not in (2, 4, 8):
                return None
            sets.append(frozenset(expanded))
        out.append(sets)
    return out


class CandidateKeyFragment(NamedTuple):
    """``(K4..K9, K10) mod 128``."""

    k4: int
    k5: int
    k6: int
    k7: int
    k8: int
    k9: int
    k10: int

    @classmethod
    def from_key(cls, key) -> CandidateKeyFragment:
        key = as_key(key)
        return cls(*(key.k(i) % 128 for i in range(4, 11)))

    def channel_pairs(self) -> tuple[tuple[int, int], ...]:
        return ((self.k4, self.k7), (self.k5, self.k8), (self.k6, self.k9))

    @classmethod
    def from_channel_pairs(cls, pairs, k10: int) -> CandidateKeyFragment:
        (r0, r1), (g0, g1), (b0, b1) = pairs
        return cls(r0, g0, b0, r1, g1, b1, k10 % 128)

    def orbit(self) -> list[CandidateKeyFragment]:
        """Fragments the verification cannot separate from this one: any
        per-channel swap of ``(a0*, a1*)``, optionally combined with XOR 127 on
        every value and ``K10 -> 128 - K10``."""
        out = set()
        for mirror in (False, True):
            w = (128 - self.k10) % 128 if mirror else self.k10
            m = 127 if mirror else 0
            for swaps in product((False, True), repeat=3):
                pairs = []
                for (u, v), s in zip(self.channel_pairs(), swaps):
                    u, v = (v, u) if s else (u, v)
                    pairs.append((u ^ m, v ^ m))
                out.add(CandidateKeyFragment.from_channel_pairs(pairs, w))
        return sorted(out)


def _verify_channel(sets: list[frozenset[int]], k10: int) -> list[tuple[int, int]]:
    h = len(sets)
    k0 = max(range(h), key=lambda j: (len(sets[j]), -j))
    shift0 = (k0 * k10) % 128
    found = []
    for u, v in consistent_pairs(sets[k0]):
        a0 = (u - shift0) % 128
        a1 = (v - shift0) % 128
        for j in range(h):
            s = (j * k10) % 128
            if not sets[j] <= alpha_star_set((a0 + s) % 128, (a1 + s) % 128):
                break
        else:
            found.append((a0, a1))
    return found


def cpa_step3_recover(surviving: dict[int, list[list[frozenset[int]]]]) -> list[CandidateKeyFragment]:
    """Enumerate and cross-check ``(a0*, a1*)`` per channel for each surviving guess.

    ``surviving`` maps a ``K10`` guess to its step-2 sets. Per channel the
    largest set fixes the candidates; each is shifted back to block 0 and
    checked for containment against every other residue class. Channels map
    to subkeys as R -> (K4, K7), G -> (K5, K8), B -> (K6, K9). The result is
    closed under :meth:`CandidateKeyFragment.orbit` and sorted.
    """
    if not surviving:
        raise NoCandidate("no K10 guess survived pruning")
    out: set[CandidateKeyFragment] = set()
    done: set[int] = set()
    for k10, sets in sorted(surviving.items()):
        w = k10 % 128
        if w in done:
            continue
        per_channel = [_verify_channel(sets[c], k10) for c in range(3)]
        if not all(per_channel):
            continue
        done.add(w)
        for combo in product(*per_channel):
            frag = CandidateKeyFragment.from_channel_pairs(combo, w)
            if frag not in out:
                out.update(frag.orbit())
    if not out:
        raise NoCandidate("every K10 guess was eliminated during verification")
    return sorted(out)


class ChosenPlaintextAttack(BaseEstimator):
    """Recover ``(K4..K9, K10) mod 128`` from images ``I0 ^ l`` and their ciphers.

    ``fit(X, y)`` takes the plain stack ``X`` and the cipher stack ``y``, both
    ``(n, h, w, 3)``, with ``X[0]`` the base image.

    Parameters
    ----------
    k10_guesses : iterable of int or None
        Values of ``K10`` to try; all 256 by default.
    """

    def __init__(self, k10_guesses=None):
        self.k10_guesses = k10_guesses

    def fit(self, X, y):
        self.step1_ = cpa_step1_collect((np.asarray(X), np.asarray(y)))
        residues = _residue_sets(self.step1_)
        guesses = range(256) if self.k10_guesses is None else self.k10_guesses
        self.surviving_ = {}
        for g in guesses:
            sets = cpa_step2_prune(residues, g)
            if sets is not None:
                self.surviving_[int(g)] = sets
        self.candidates_ = cpa_step3_recover(self.surviving_)
        self.k10_candidates_ = sorted({c.k10 for c in self.candidates_})
        return self

    def predict(self, X=None):
        check_is_fitted(self, "candidates_")
        return list(self.candidates_)


# -- known-plaintext masking attack --------------------------------------------------


def kpa_mask_attack(known_plain, known_cipher, target_cipher) -> np.ndarray:
    """Decrypt ``target_cipher`` with the mask ``known_plain ^ known_cipher``."""
    p = check_image(known_plain)
    c = check_image(known_cipher)
    t = check_image(target_cipher)
    if not p.shape == c.shape == t.shape:
        raise DimensionMismatch(f"shapes {p.shape}, {c.shape}, {t.shape} differ")
    return t ^ (p ^ c)


class MaskingAttack(TransformerMixin, BaseEstimator):
    """``fit(known_plain, known_cipher)`` stores the mask; ``transform`` applies it."""

    def fit(self, X, y):
        p = check_image(X)
        c = check_image(y)
        if p.shape != c.shape:
            raise DimensionMismatch(f"shapes {p.shape} and {c.shape} differ")
        self.mask_ = p ^ c
        return self

    def transform(self, X):
        check_is_fitted(self, "mask_")
        t = np.asarray(X, dtype=np.uint8)
        if t.shape[-3:] != self.mask_.shape:
            raise DimensionMismatch(f"target shape {t.shape} vs mask {self.mask_.shape}")
        return t ^ self.mask_


# -- oracles (use the secret key) -------------------------------------------------------


def xor_equivalence_oracle(key, height: int, width: int, chunk: int = 32) -> tuple[np.ndarray, np.ndarray]:
    """Exhaustive classification of every per-byte encryption function.

    Encrypts the 256 constant images and returns ``(is_xor, gamma)`` of shape
    ``(height*width, 3)``, where ``gamma = E(0)``.
    """
    key = as_key(key)
    shape = (height, width, 3)
    e0 = encrypt_batch(np.zeros((1, *shape), np.uint8), key)[0].reshape(-1, 3)
    is_xor = np.ones(e0.shape, dtype=bool)
    for start in range(1, 256, chunk):
        vals = np.arange(start, min(start + chunk, 256), dtype=np.uint8)
        imgs = np.broadcast_to(vals[:, None, None, None], (len(vals), *shape))
        enc = encrypt_batch(imgs, key).reshape(len(vals), -1, 3)
        is_xor &= ((enc ^ e0) == vals[:, None, None]).all(axis=0)
    return is_xor, e0


def oracle_block_context(key, block_index: int) -> BlockContext:
    """Dynamic subkeys in force for ``block_index`` (no seed)."""
    key = as_key(key)
    shift = block_index * key.k10
    return BlockContext(subkeys=tuple((v + shift) & 0xFF for v in key.subkeys[:9]), k10=key.k10, index=block_index)
