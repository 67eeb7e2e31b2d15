"""Experiment harness producing CSV rows for external plotting.

Each experiment returns ``(columns, rows)``; :func:`to_csv` prepends a comment
line recording the settings (kind, key, seed, trials) so a file can be regenerated
exactly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .attacks import (
    craft_cpa_images,
    detection_counts,
    p_b_collision,
    xor_equivalence_oracle,
)
from .audit import probability_y0_zero
from .cipher import SecretKey, as_key, derive_global_seed
from .engine import composite_lengths, encrypt_batch
from .exceptions import BudgetExceeded, InvalidKey
from .image import BLOCK_PIXELS, noise_image

KINDS = ("len-dist", "ps-curve", "pb-curve", "rn-curve", "xor-eq-count")
MAX_TRIALS = 10_000
MAX_PIXEL_WORK = 1 << 34  # pixels x trials x K10 x images, roughly


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    trials: int = 1
    seed: int | None = 0
    key: str | None = None
    size: int = 256
    k10: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment {self.kind!r}; choose from {KINDS}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.key is None and self.seed is None:
            raise ValueError("a random key policy needs an explicit seed")
        if self.trials > MAX_TRIALS:
            raise BudgetExceeded(f"{self.trials} trials exceed the cap of {MAX_TRIALS}")


def random_key(rng: np.random.Generator, k10: int | None = None, *, odd_max: int | None = None) -> SecretKey:
    """Seeded random key with a valid global seed.

    ``k10`` pins the last subkey; ``odd_max`` draws it from the odd values up
    to that bound instead.
    """
    while True:
        sk = [int(v) for v in rng.integers(0, 256, size=10)]
        if k10 is not None:
            sk[9] = k10
        elif odd_max is not None:
            sk[9] = int(rng.choice(np.arange(1, odd_max + 1, 2)))
        key = SecretKey(tuple(sk))
        try:
            derive_global_seed(key)
        except InvalidKey:
            continue
        return key


def _len_dist(spec: ExperimentSpec):
    k10 = 66 if spec.k10 is None else spec.k10
    n_blocks = spec.size * spec.size // BLOCK_PIXELS
    if spec.trials * n_blocks * BLOCK_PIXELS * max(k10, 1) > MAX_PIXEL_WORK:
        raise BudgetExceeded("len-dist workload too large")
    rng = np.random.default_rng(spec.seed)
    counts = np.zeros(k10 + 1, dtype=np.int64)
    for _ in range(spec.trials):
        key = random_key(rng, k10) if spec.key is None else as_key(spec.key)
        lengths = composite_lengths(key, n_blocks)
        counts += np.bincount(lengths.ravel(), minlength=k10 + 1)
    rows = [(n, int(c), float(c) / spec.trials) for n, c in enumerate(counts)]
    return ("len", "count", "mean_per_key"), rows


def _ps_curve(spec: ExperimentSpec):
    rows = [(25 * m + n, m, n, probability_y0_zero(m, n)) for m in range(25) for n in range(25)]
    return ("x", "m", "n", "p_s"), rows


def _pb_curve(spec: ExperimentSpec):
    return ("m", "p_b"), [(m, p_b_collision(m)) for m in range(25)]


def _cpa_keys(spec: ExperimentSpec) -> list[SecretKey]:
    if spec.key is not None:
        return [as_key(spec.key)]
    rng = np.random.default_rng(spec.seed)
    return [random_key(rng, spec.k10, odd_max=31) for _ in range(spec.trials)]


def rn_curve(key, size: int = 256, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """``N(n)`` and ``r(n) = N(127) / N(n)`` for ``n = 0..127`` (``r = 0`` where ``N = 0``)."""
    base = noise_image(size, size, seed)
    plains = craft_cpa_images(base, 128)
    ciphers = encrypt_batch(plains, key)
    counts = detection_counts((plains, ciphers))
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(counts > 0, counts[-1] / np.maximum(counts, 1), 0.0)
    return counts, r


def _rn_curve(spec: ExperimentSpec):
    rows = []
    for i, key in enumerate(_cpa_keys(spec)):
        counts, r = rn_curve(key, spec.size, (spec.seed or 0) + i)
        rows.extend((key.to_hex(), n, int(counts[n]), float(r[n])) for n in range(1, 128))
    return ("key", "n", "N", "r"), rows


def _xor_eq_count(spec: ExperimentSpec):
    base_key = as_key(spec.key) if spec.key is not None else random_key(np.random.default_rng(spec.seed))
    k10_values = range(1, spec.trials + 1) if spec.k10 is None else [spec.k10]
    n_blocks = spec.size * spec.size // BLOCK_PIXELS
    rows = []
    for k10 in k10_values:
        key = SecretKey(base_key.subkeys[:9] + (k10,))
        is_xor, _ = xor_equivalence_oracle(key, spec.size, spec.size)
        _, adds = composite_lengths(key, n_blocks, with_adds=True)
        red = is_xor[:, 0]
        with_add = int((red & (adds[:, 0] > 0)).sum())
        rows.append((k10, int(red.sum()), with_add, int(red.sum()) - with_add))
    return ("k10", "xor_equivalent_r", "involving_add", "xor_only"), rows


_RUNNERS = {
    "len-dist": _len_dist,
    "ps-curve": _ps_curve,
    "pb-curve": _pb_curve,
    "rn-curve": _rn_curve,
    "xor-eq-count": _xor_eq_count,
}


def run_experiment(spec: ExperimentSpec):
    return _RUNNERS[spec.kind](spec)


def to_csv(spec: ExperimentSpec, columns, rows) -> str:
    buf = io.StringIO()
    buf.write(
        f"# kind={spec.kind} key={spec.key or 'random'} seed={spec.seed} trials={spec.trials}"
        f" size={spec.size} k10={spec.k10 if spec.k10 is not None else 'default'}\n"
    )
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()
