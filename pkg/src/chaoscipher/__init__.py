"""Chaos-based RGB block image cipher, with key auditing and attacks on it."""

from .attacks import (
    CandidateKeyFragment,
    ChosenPlaintextAttack,
    K10Prober,
    MaskingAttack,
    craft_cpa_images,
    craft_probe_image,
    first_block_search,
    infer_k10_candidates,
    kpa_mask_attack,
)
from .audit import KeyAuditReport, audit_key
from .cipher import SecretKey
from .engine import (
    ChaoticImageCipher,
    decrypt_batch,
    decrypt_image,
    encrypt_batch,
    encrypt_image,
)
from .exceptions import *  # noqa: F401,F403
from .image import load_ppm, read_ppm, save_ppm, write_ppm

__version__ = "0.1.0"

__all__ = [
    "CandidateKeyFragment",
    "ChaoticImageCipher",
    "ChosenPlaintextAttack",
    "K10Prober",
    "KeyAuditReport",
    "MaskingAttack",
    "SecretKey",
    "audit_key",
    "craft_cpa_images",
    "craft_probe_image",
    "decrypt_batch",
    "decrypt_image",
    "encrypt_batch",
    "encrypt_image",
    "first_block_search",
    "infer_k10_candidates",
    "kpa_mask_attack",
    "load_ppm",
    "read_ppm",
    "save_ppm",
    "write_ppm",
]
