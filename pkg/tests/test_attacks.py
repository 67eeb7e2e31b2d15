import math
import warnings

import numpy as np
import pytest

from chaoscipher.algebra import alpha_star_set
from chaoscipher.attacks import (
    ECONOMY_OFFSETS,
    CandidateKeyFragment,
    ChosenPlaintextAttack,
    K10Prober,
    MaskingAttack,
    cpa_step1_collect,
    cpa_step2_prune,
    cpa_step3_recover,
    craft_cpa_images,
    craft_probe_image,
    detection_counts,
    find_identical_cipher_blocks,
    first_block_search,
    infer_k10_candidates,
    kpa_mask_attack,
    oracle_block_context,
    p_b_collision,
    xor_equivalence_oracle,
)
from chaoscipher.cipher import SecretKey, block_subkeys
from chaoscipher.engine import block_seeds, encrypt_batch, encrypt_image
from chaoscipher.exceptions import (
    BudgetExceeded,
    DimensionMismatch,
    EmptyEvidence,
    NoCandidate,
)
from chaoscipher.image import blocks, noise_image
from chaoscipher.stats import random_key

LOGGED_PAIRS = [(1941, 3161), (2277, 3161), (1941, 2277)]


class TestProbe:
    def test_image(self):
        img = craft_probe_image(8, 8)
        b = blocks(img)
        assert (b == b[0]).all()
        assert len({tuple(p) for p in b[0].tolist()}) == 16
        assert b[0, 3].tolist() == [48, 49, 50]
        assert blocks(craft_probe_image(512, 512)).shape[0] == 16384

    def test_identical_blocks(self):
        img = np.zeros((4, 16, 3), np.uint8)
        img[0, :4] = 7
        img[2, :4] = 7
        img[3, :4] = 9
        assert find_identical_cipher_blocks(img) == [(0, 2)]
        assert find_identical_cipher_blocks(noise_image(8, 8, 1)) == []

    def test_collisions_need_same_seed_and_subkeys(self):
        key = SecretKey.from_hex("2A84BCF35D70664E4740")
        cipher = encrypt_image(craft_probe_image(256, 256), key)
        seeds = block_seeds(key, 4096)
        for a, b in find_identical_cipher_blocks(cipher):
            assert seeds[a] == seeds[b]
            assert (b - a) % 4 == 0
            assert block_subkeys(key, a) == block_subkeys(key, b)


class TestInferK10:
    def test_gcd_four(self):
        inf = infer_k10_candidates(LOGGED_PAIRS + [(0, 4)])
        assert inf.period_bound == 4
        assert inf.candidates == [64, 128, 192]
        assert inf.periods == [2, 4]

    def test_no_pruning(self):
        with pytest.warns(UserWarning):
            inf = infer_k10_candidates([(0, 256)])
        assert inf.candidates == list(range(1, 256))
        assert len(infer_k10_candidates([(0, 256)], allow_zero=True, min_pairs=1).candidates) == 256

    def test_chance_collisions(self):
        with pytest.warns(UserWarning, match="gcd"):
            inf = infer_k10_candidates([(0, 3), (10, 15), (20, 23)])
        assert inf.period_bound == 1
        assert inf.candidates == [0]

    def test_empty(self):
        with pytest.raises(EmptyEvidence):
            infer_k10_candidates([])

    def test_true_pairs_always_contain_k10(self):
        rng = np.random.default_rng(0)
        for k10 in range(256):
            t = 256 // math.gcd(k10, 256)
            pairs = [(int(a), int(a) + t * int(m)) for a, m in zip(rng.integers(0, 999, 3), rng.integers(1, 9, 3))]
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                inf = infer_k10_candidates(pairs, allow_zero=True)
            assert k10 in inf.candidates

    def test_prober(self):
        key = SecretKey.from_hex("2A84BCF35D70664E4740")
        cipher = encrypt_image(craft_probe_image(256, 256), key)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            prober = K10Prober().fit(cipher)
        assert 64 in prober.predict()
        assert prober.get_params() == {"allow_zero": False, "min_pairs": 3}

    @pytest.mark.parametrize("m,p", [(0, 1.0), (24, 1.0), (12, 2.0**-24)])
    def test_p_b(self, m, p):
        assert p_b_collision(m) == pytest.approx(p, rel=1e-12)


class TestFirstBlock:
    def test_true_pair_found(self):
        key = SecretKey.from_hex("2A84BCF25E6A664E4C03")
        plain = noise_image(4, 4, 5)
        cipher = encrypt_image(plain, key)
        y0 = float(block_seeds(key, 1)[0])
        t = int(y0 * (1 << 24))
        hits = first_block_search(plain, cipher, [1, 3, 5], 24, key.subkeys[3:9], grid_range=(t - 50, t + 50))
        assert (y0, 3) in hits

    def test_empty_candidates(self):
        plain = noise_image(4, 4, 5)
        assert first_block_search(plain, plain, [], 8, (0,) * 6) == []

    def test_budget(self):
        plain = noise_image(4, 4, 5)
        with pytest.raises(BudgetExceeded):
            first_block_search(plain, plain, range(256), 24, (0,) * 6)
        # the full sweep is 2^24 seeds times 256 values of K10
        assert (1 << 24) * 256 == 1 << 32

    def test_bad_grid(self):
        with pytest.raises(ValueError):
            first_block_search(noise_image(4, 4), noise_image(4, 4), [1], 25, (0,) * 6)


class TestCpaImages:
    def test_offsets(self):
        base = noise_image(4, 4, 1)
        imgs = craft_cpa_images(base, 128)
        assert imgs.shape == (128, 4, 4, 3)
        assert np.array_equal(imgs[0], base)
        assert np.array_equal(imgs[77], base ^ 77)
        eco = craft_cpa_images(base, ECONOMY_OFFSETS)
        assert len(eco) == 13 and np.array_equal(eco[-1], base ^ 64)

    def test_bad_count(self):
        with pytest.raises(ValueError):
            craft_cpa_images(noise_image(4, 4), 129)


def _cpa_run(key, size=64, count=128, seed=0):
    plains = craft_cpa_images(noise_image(size, size, seed), count)
    return plains, encrypt_batch(plains, key)


class TestStep1:
    @pytest.mark.parametrize("key", ["2A84BCF25E6A664E4C05", "1A93DF25CF78DC44E121", "8DB87A1613D75ADF2D06"])
    def test_matches_oracle(self, key):
        plains, ciphers = _cpa_run(key)
        step1 = cpa_step1_collect((plains, ciphers))
        is_xor, e0 = xor_equivalence_oracle(key, 64, 64)
        assert np.array_equal(step1.flagged, is_xor)
        assert np.array_equal(step1.gamma[is_xor], e0[is_xor])

    def test_pairs_input(self):
        plains, ciphers = _cpa_run("2A84BCF25E6A664E4C05", size=8, count=4)
        a = cpa_step1_collect(list(zip(plains, ciphers)))
        b = cpa_step1_collect((plains, ciphers))
        assert np.array_equal(a.flagged, b.flagged)
        assert a.offsets == (0, 1, 2, 3)

    def test_records(self):
        plains, ciphers = _cpa_run("2A84BCF25E6A664E4C05", size=16)
        step1 = cpa_step1_collect((plains, ciphers))
        recs = step1.records(0)
        assert len(recs) == step1.flagged[:, 0].sum()
        r = recs[0]
        assert step1.gamma[16 * r.block + r.pixel, 0] == r.gamma

    def test_weak_key_red_flagged(self):
        # red parameters in {(0,0),(255,1)}: every red function in sub-image 0 is x or ~x
        plains, ciphers = _cpa_run("3C1DE8FF0151FF012840", size=32)
        flagged = cpa_step1_collect((plains, ciphers)).flagged
        sub0 = (np.arange(64) % 4 == 0).repeat(16)
        assert flagged[sub0, 0].all()

    def test_mismatch(self):
        with pytest.raises(DimensionMismatch):
            cpa_step1_collect((np.zeros((2, 4, 4, 3), np.uint8), np.zeros((3, 4, 4, 3), np.uint8)))

    def test_detection_counts_nonincreasing(self):
        plains, ciphers = _cpa_run("2A84BCF25E6A664E4C05")
        n = detection_counts((plains, ciphers))
        assert len(n) == 128
        assert np.all(np.diff(n) <= 0)
        assert n[-1] == cpa_step1_collect((plains, ciphers)).count


class TestHalfPeriodCongruence:
    def test_gamma_congruence(self):
        key = SecretKey.from_hex("2A84BCF25E6A664E4C06")  # T = 128
        is_xor, e0 = xor_equivalence_oracle(key, 64, 64)
        half = 64
        for c in range(3):
            pix = np.flatnonzero(is_xor[:, c])
            by_class = {}
            for p in pix:
                by_class.setdefault((p // 16) % half, set()).add(int(e0[p, c]) % 128)
            for j, vals in by_class.items():
                sub = block_subkeys(key, j)
                a0, a1 = [sub[i - 1] for i in ((4, 7), (5, 8), (6, 9))[c]]
                assert vals <= alpha_star_set(a0, a1)


class TestStep2:
    def test_empty_records(self):
        plains = np.zeros((2, 4, 4, 3), np.uint8)
        plains[1] ^= 1
        step1 = cpa_step1_collect((plains, np.zeros_like(plains)))
        assert step1.count == 0
        sets = cpa_step2_prune(step1, 5)
        assert all(s == {0, 127} for ch in sets for s in ch)

    def test_size_six_pruned(self):
        residues = [[set() for _ in range(128)] for _ in range(3)]
        residues[0][0] = {1, 2, 4}  # closure with 0, 127 has 16 elements
        assert cpa_step2_prune(residues, 1) is None
        residues[0][0] = {1}
        assert len(cpa_step2_prune(residues, 1)[0][0]) == 4

    def test_even_guesses_pruned_for_odd_key(self):
        plains, ciphers = _cpa_run("2A84BCF25E6A664E4C05", size=128)
        step1 = cpa_step1_collect((plains, ciphers))
        assert cpa_step2_prune(step1, 5) is not None
        assert cpa_step2_prune(step1, 2) is None


class TestStep3:
    def test_no_survivors(self):
        with pytest.raises(NoCandidate):
            cpa_step3_recover({})

    def test_fragment(self):
        frag = CandidateKeyFragment.from_key("2A84BCF25E6A664E4C41")
        assert frag == (114, 94, 106, 102, 78, 76, 65)
        orbit = frag.orbit()
        assert frag in orbit and len(orbit) == 16
        assert CandidateKeyFragment(102, 94, 106, 114, 78, 76, 65) in orbit
        assert CandidateKeyFragment(114 ^ 127, 94 ^ 127, 106 ^ 127, 102 ^ 127, 78 ^ 127, 76 ^ 127, 63) in orbit

    @pytest.mark.parametrize("seed", [0, 1])
    def test_recovers_small_k10(self, seed):
        key = random_key(np.random.default_rng(seed), odd_max=9)
        plains, ciphers = _cpa_run(key, size=256, seed=seed)
        attack = ChosenPlaintextAttack().fit(plains, ciphers)
        truth = CandidateKeyFragment.from_key(key)
        assert set(truth.orbit()) <= set(attack.predict())
        assert truth.k10 in attack.k10_candidates_
        assert len(attack.candidates_) <= 256 * 24**3

    def test_guess_restriction(self):
        plains, ciphers = _cpa_run("2A84BCF25E6A664E4C03", size=128)
        attack = ChosenPlaintextAttack(k10_guesses=[3, 5]).fit(plains, ciphers)
        assert set(attack.surviving_) <= {3, 5}


class TestMasking:
    def test_known_image_recovered(self):
        key = "8DB87A1613D75ADF2D06"
        img = noise_image(16, 16, 1)
        c = encrypt_image(img, key)
        assert np.array_equal(kpa_mask_attack(img, c, c), img)

    def test_xor_positions_recovered(self):
        key = "8DB87A1613D75ADF2D06"
        known, target = noise_image(32, 32, 1), noise_image(32, 32, 2)
        ck, ct = encrypt_batch(np.stack([known, target]), key)
        rec = MaskingAttack().fit(known, ck).transform(ct)
        is_xor, _ = xor_equivalence_oracle(key, 32, 32)
        assert np.array_equal(rec, kpa_mask_attack(known, ck, ct))
        assert (rec.reshape(-1, 3) == target.reshape(-1, 3))[is_xor].all()

    def test_always_recovered_set_is_the_xor_set(self):
        # bytes recovered for every target are exactly the XOR-equivalent ones
        key = "8DB87A1613D75ADF2D06"
        known = noise_image(32, 32, 1)
        targets = np.stack([noise_image(32, 32, 100 + i) for i in range(24)])
        ck = encrypt_image(known, key)
        cts = encrypt_batch(targets, key)
        always = np.ones((32 * 32, 3), bool)
        for t, ct in zip(targets, cts):
            always &= kpa_mask_attack(known, ck, ct).reshape(-1, 3) == t.reshape(-1, 3)
        is_xor, _ = xor_equivalence_oracle(key, 32, 32)
        assert np.array_equal(always, is_xor)

    def test_mismatch(self):
        with pytest.raises(DimensionMismatch):
            kpa_mask_attack(noise_image(4, 4), noise_image(4, 4), noise_image(4, 8))
        with pytest.raises(DimensionMismatch):
            MaskingAttack().fit(noise_image(4, 4), noise_image(4, 4)).transform(noise_image(8, 4))


def test_oracle_context():
    ctx = oracle_block_context("2A84BCF25E6A664E4C41", 3)
    assert ctx.subkeys == block_subkeys("2A84BCF25E6A664E4C41", 3)
