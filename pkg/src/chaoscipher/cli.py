"""``chaoscipher {encrypt|decrypt|audit|attack|stats} [flags]``.

Exit codes: 0 success, 1 other failure, 2 malformed key text, 3 bad image,
4 key whose global seed is zero.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import warnings

import numpy as np

from .attacks import (
    ChosenPlaintextAttack,
    K10Prober,
    craft_cpa_images,
    craft_probe_image,
    first_block_search,
    xor_equivalence_oracle,
)
from .audit import audit_key, report_csv
from .cipher import SecretKey
from .engine import decrypt_image, encrypt_batch, encrypt_image
from .exceptions import (
    BadDimensions,
    ChaosCipherError,
    DimensionMismatch,
    InvalidKey,
    KeyFormatError,
    MalformedPpm,
)
from .image import blocks, noise_image, read_ppm, write_ppm
from .stats import KINDS, ExperimentSpec, random_key, run_experiment, to_csv

EXIT_BAD_KEY = 2
EXIT_BAD_IMAGE = 3
EXIT_INVALID_KEY = 4


def _key(text: str) -> SecretKey:
    return SecretKey.from_hex(text)


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _table(header: str, columns, rows) -> str:
    buf = io.StringIO()
    buf.write(header + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def _attack_key(args, rng: np.random.Generator, k10: int | None = None, odd_max: int | None = None) -> SecretKey:
    if args.key:
        return _key(args.key)
    return random_key(rng, k10, odd_max=odd_max)


def cmd_crypt(args) -> int:
    key = _key(args.key)
    img = read_ppm(args.inp)
    fn = encrypt_image if args.command == "encrypt" else decrypt_image
    write_ppm(args.out, fn(img, key))
    return 0


def cmd_audit(args) -> int:
    report = audit_key(_key(args.key))
    sys.stdout.write(report.to_text())
    if args.csv:
        _emit(report_csv([report]), args.csv)
    return 0


def _probe(args, rng) -> str:
    key = _attack_key(args, rng)
    size = args.size or 512
    cipher = encrypt_image(craft_probe_image(size, size), key)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        prober = K10Prober().fit(cipher)
    header = f"# attack=k10-probe key={key.to_hex()} seed={args.seed} size={size} gcd={prober.period_bound_}"
    rows = [(k,) for k in prober.candidates_]
    for note in prober.advisories_:
        header += f"\n# advisory: {note}"
    return _table(header, ("k10_candidate",), rows)


def _cpa(args, rng) -> str:
    # the attack targets odd K10; small values keep the candidate list short
    key = _attack_key(args, rng, odd_max=31)
    size = args.size or 256
    plains = craft_cpa_images(noise_image(size, size, args.seed), args.images)
    ciphers = encrypt_batch(plains, key)
    attack = ChosenPlaintextAttack().fit(plains, ciphers)
    header = f"# attack=cpa key={key.to_hex()} seed={args.seed} size={size} images={args.images}"
    return _table(header, ("k4", "k5", "k6", "k7", "k8", "k9", "k10"), [tuple(c) for c in attack.candidates_])


def _kpa(args, rng) -> str:
    key = _attack_key(args, rng, k10=6)
    size = args.size or 256
    known = noise_image(size, size, args.seed)
    target = noise_image(size, size, args.seed + 1) if args.target is None else read_ppm(args.target)
    ciphers = encrypt_batch(np.stack([known, target]), key)
    recovered = ciphers[1] ^ (known ^ ciphers[0])
    if args.out:
        write_ppm(args.out, recovered)
    is_xor, _ = xor_equivalence_oracle(key, *target.shape[:2])
    fraction = float((recovered == target).mean())
    header = f"# attack=kpa key={key.to_hex()} seed={args.seed} size={size}"
    return _table(header, ("recovered_fraction", "xor_equivalent_fraction"), [(fraction, float(is_xor.mean()))])


def _first_block(args, rng) -> str:
    key = _attack_key(args, rng)
    size = args.size or 16
    plain = noise_image(size, size, args.seed)
    cipher = encrypt_image(plain, key)
    bits = args.k10_grid_bits
    k10s = range(256) if args.k10 is None else [args.k10]
    hits = first_block_search(blocks(plain)[0], blocks(cipher)[0], k10s, bits, key.subkeys[3:9])
    header = f"# attack=first-block key={key.to_hex()} seed={args.seed} grid_bits={bits}"
    return _table(header, ("y0", "k10"), hits)


_ATTACKS = {"k10-probe": _probe, "cpa": _cpa, "kpa": _kpa, "first-block": _first_block}


def cmd_attack(args) -> int:
    rng = np.random.default_rng(args.seed)
    _emit(_ATTACKS[args.attack](args, rng), args.csv)
    return 0


def cmd_stats(args) -> int:
    spec = ExperimentSpec(
        kind=args.kind, trials=args.trials, seed=args.seed, key=args.key, size=args.size or 256, k10=args.k10
    )
    columns, rows = run_experiment(spec)
    _emit(to_csv(spec, columns, rows), args.csv)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chaoscipher", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("encrypt", "decrypt"):
        p = sub.add_parser(name, help=f"{name} a binary PPM")
        p.add_argument("--key", required=True)
        p.add_argument("--in", dest="inp", required=True)
        p.add_argument("--out", required=True)
        p.set_defaults(func=cmd_crypt)

    p = sub.add_parser("audit", help="weak/invalid/equivalent key report")
    p.add_argument("--key", required=True)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("attack", help="run an attack against a generated image set")
    p.add_argument("attack", choices=sorted(_ATTACKS))
    p.add_argument("--key", help="victim key; random (seeded) when omitted")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int)
    p.add_argument("--images", type=int, default=128)
    p.add_argument("--k10", type=int)
    p.add_argument("--k10-grid-bits", type=int, default=12)
    p.add_argument("--target", help="PPM to recover (kpa)")
    p.add_argument("--out", help="recovered PPM (kpa)")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("stats", help="CSV data for plotting")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--key")
    p.add_argument("--size", type=int)
    p.add_argument("--k10", type=int)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ChaosCipherError, ValueError, OSError) as exc:
        error = exc
    if isinstance(error, KeyFormatError):
        code = EXIT_BAD_KEY
    elif isinstance(error, (MalformedPpm, BadDimensions, DimensionMismatch)):
        code = EXIT_BAD_IMAGE
    elif isinstance(error, InvalidKey):
        code = EXIT_INVALID_KEY
    else:
        code = 1
    print(f"chaoscipher: error: {error}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
