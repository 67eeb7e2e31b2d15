"""The compiled path must agree bit for bit with the pure-Python reference."""

import numpy as np
import pytest

from chaoscipher.algebra import kind_term, reduce
from chaoscipher.cipher import (
    ChaoticStream,
    SecretKey,
    block_seeds_reference,
    channel_params,
    pixel_kinds,
    process_image_reference,
)
from chaoscipher.engine import (
    ChaoticImageCipher,
    block_seeds,
    composite_lengths,
    decrypt_batch,
    encrypt_batch,
    encrypt_image,
    selector_schedule,
)
from chaoscipher.exceptions import BadDimensions
from chaoscipher.image import noise_image

KEYS = ["2A84BCF25E6A664E4C41", "3C1DE8FF0151FF012840", "0102030405060708090B", "FFFFFFFFFFFFFFFFFF07"]


@pytest.mark.parametrize("key", KEYS)
def test_seeds_match(key):
    assert block_seeds(key, 40).tolist() == block_seeds_reference(key, 40)


@pytest.mark.parametrize("key", KEYS)
def test_encrypt_matches_reference(key):
    img = noise_image(8, 12, 7)
    assert np.array_equal(encrypt_image(img, key), process_image_reference(img, key))
    assert np.array_equal(
        decrypt_batch(img[None], key)[0], process_image_reference(img, key, "decrypt")
    )


def test_selectors_match():
    key = SecretKey.from_hex(KEYS[0])
    kinds = selector_schedule(key, 3)
    for k, y0 in enumerate(block_seeds(key, 3)):
        local = ChaoticStream(float(y0))
        for t in range(16):
            assert kinds[k, t].tolist() == [int(v) for v in pixel_kinds(local, key.k10)]


def test_composite_lengths_match_reduce():
    key = SecretKey.from_hex("2A84BCF25E6A664E4C11")
    lengths, adds = composite_lengths(key, 4, with_adds=True)
    kinds = selector_schedule(key, 4)
    for k in range(4):
        sub = tuple((v + k * key.k10) & 255 for v in key.subkeys[:9])
        for t in range(16):
            for c in range(3):
                f = reduce(kind_term(s, *channel_params(sub, c)) for s in kinds[k, t])
                assert lengths[16 * k + t, c] == len(f)
                assert adds[16 * k + t, c] == sum(term.op.name == "ADD" for term in f.terms)


def test_batch_equals_single():
    imgs = np.stack([noise_image(8, 8, s) for s in range(5)])
    enc = encrypt_batch(imgs, KEYS[0])
    for i in range(5):
        assert np.array_equal(enc[i], encrypt_image(imgs[i], KEYS[0]))
    assert np.array_equal(decrypt_batch(enc, KEYS[0]), imgs)


def test_k10_zero_is_identity():
    img = noise_image(8, 8, 1)
    assert np.array_equal(encrypt_image(img, "2A84BCF25E6A664E4C00"), img)


class TestEstimator:
    def test_fit_transform(self):
        img = noise_image(16, 16, 2)
        est = ChaoticImageCipher(key=KEYS[0])
        enc = est.fit_transform(img)
        assert est.period_ == 256 and 0 < est.x0_ < 1
        assert np.array_equal(enc, encrypt_image(img, KEYS[0]))
        assert np.array_equal(est.inverse_transform(enc), img)

    def test_params(self):
        est = ChaoticImageCipher(key=KEYS[1])
        assert est.get_params() == {"key": KEYS[1]}
        est.set_params(key=KEYS[0])
        assert est.fit().key_.to_hex() == KEYS[0]

    def test_stack(self):
        imgs = np.stack([noise_image(4, 8, s) for s in range(3)])
        est = ChaoticImageCipher(key=KEYS[2]).fit()
        assert np.array_equal(est.inverse_transform(est.transform(imgs)), imgs)

    def test_unfitted(self):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            ChaoticImageCipher().transform(noise_image(4, 4))

    def test_bad_dimensions(self):
        with pytest.raises(BadDimensions):
            ChaoticImageCipher().fit().transform(noise_image(5, 5))
