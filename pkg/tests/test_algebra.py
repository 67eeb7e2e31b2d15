import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chaoscipher.algebra import (
    Op,
    Term,
    alpha_set,
    alpha_star_set,
    composition_xor_probability,
    consistent_pairs,
    gamma_residue,
    is_xor_equivalent,
    kind_term,
    len_equals_k10_bound,
    mirror_orbit,
    pair_candidates,
    reduce,
)
from chaoscipher.cipher import SubfunctionKind, apply_subfunction
from chaoscipher.exceptions import MalformedSet


def X(v):
    return Term(Op.XOR, v)


def A(v):
    return Term(Op.ADD, v)


def chain_table(chain, width=8):
    """Apply an unreduced chain to every input at once."""
    mask = (1 << width) - 1
    x = np.arange(1 << width, dtype=np.int64)
    for t in chain:
        x = x ^ t.value if t.op is Op.XOR else (x + t.value) & mask
    return x


def brute_gamma(table):
    g = int(table[0])
    return g if np.array_equal(table, np.arange(len(table)) ^ g) else None


terms = st.builds(lambda xor, v: X(v) if xor else A(v), st.booleans(), st.integers(0, 255))


class TestReduce:
    def test_examples(self):
        assert reduce([X(3), X(5)]).terms == (X(6),)
        f = reduce([X(3), A(5), A(7)])
        assert f.terms == (X(3), A(12)) and len(f) == 2
        assert len(reduce([A(0)])) == 0

    def test_cancelling_pair_lets_neighbours_merge(self):
        assert reduce([X(1), A(5), A(251), X(2)]).terms == (X(3),)

    @given(st.lists(terms, max_size=20))
    def test_extensional(self, chain):
        f = reduce(chain)
        assert f.table() == chain_table(chain).tolist()
        for a, b in zip(f.terms, f.terms[1:]):
            assert a.op is not b.op
        assert all(t.value for t in f.terms)

    def test_kind_terms_match_subfunctions(self):
        for kind in SubfunctionKind:
            t = kind_term(kind, 17, 200, 99, 3)
            for x in range(256):
                assert t(x) == apply_subfunction(kind, x, 17, 200, 99, 3)


class TestXorEquivalence:
    def test_examples(self):
        assert is_xor_equivalent(lambda x: x ^ 7) == 7
        assert is_xor_equivalent(lambda x: (x + 1) % 256) is None
        assert is_xor_equivalent(lambda x: ((x ^ 5) + 128) % 256) == 133

    def test_table_input(self):
        assert is_xor_equivalent([x ^ 9 for x in range(256)], 127) == 9

    def test_budget_255_exact_for_arbitrary_functions(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            g = int(rng.integers(256))
            table = np.arange(256) ^ g
            if rng.random() < 0.5:
                i = int(rng.integers(256))
                table[i] = (table[i] + int(rng.integers(1, 256))) % 256
            assert is_xor_equivalent(table.tolist()) == brute_gamma(table)

    def test_budget_127_insufficient_for_arbitrary_functions(self):
        table = [x ^ 9 for x in range(256)]
        table[200] ^= 1
        assert is_xor_equivalent(table, 127) == 9
        assert is_xor_equivalent(table, 255) is None

    def test_budget_127_exact_for_composites(self):
        rng = np.random.default_rng(1)
        checked = 0
        for _ in range(3000):
            chain = [
                X(int(rng.integers(256))) if rng.random() < 0.5 else A(int(rng.choice([128, rng.integers(256)])))
                for _ in range(int(rng.integers(1, 7)))
            ]
            table = chain_table(chain).tolist()
            expected = brute_gamma(np.array(table))
            assert is_xor_equivalent(table, 127) == expected
            checked += expected is not None
        assert checked > 100

    def test_bad_budget(self):
        with pytest.raises(ValueError):
            is_xor_equivalent(lambda x: x, 100)


def _random_chain(rng, width):
    half = 1 << (width - 1)
    mask = (1 << width) - 1
    out = []
    for _ in range(int(rng.integers(1, 9))):
        if rng.random() < 0.5:
            out.append(X(int(rng.integers(0, mask + 1))))
        else:
            # half-range additions keep XOR-type composites frequent
            out.append(A(half if rng.random() < 0.6 else int(rng.integers(0, mask + 1))))
    return out


class TestGammaResidue:
    def test_add_xor_add_example(self):
        # the chain is not XOR-type: the congruence is vacuous here
        chain = [A(5), X(3), A(251)]
        table = chain_table(chain)
        assert brute_gamma(table) is None
        assert len(set((table ^ np.arange(256)).tolist())) > 2
        assert gamma_residue(chain) == 3

    def test_xor_type_examples(self):
        f = reduce([A(128), X(3), A(128)])
        assert is_xor_equivalent(f) == 3 and gamma_residue(f) == 3
        g = reduce([A(128), X(3)])
        assert is_xor_equivalent(g) == 131 and gamma_residue(g) == 3

    def test_no_xor_terms(self):
        for chain in ([A(128)], [A(128), A(128)], []):
            f = reduce(chain)
            if is_xor_equivalent(f) is not None:
                assert is_xor_equivalent(f) in (0, 128)
                assert gamma_residue(f) == 0

    @pytest.mark.parametrize("width", range(2, 9))
    def test_congruence_by_width(self, width):
        rng = np.random.default_rng(100 + width)
        half = 1 << (width - 1)
        hits = 0
        for _ in range(2000):
            f = reduce(_random_chain(rng, width), width)
            table = chain_table(f.terms, width)
            gamma = brute_gamma(table)
            if gamma is None:
                continue
            hits += 1
            assert gamma % half == gamma_residue(f)
            assert gamma in (f.xor_aggregate, f.xor_aggregate ^ half)
        assert hits > 50


class TestAlphaSets:
    @pytest.mark.parametrize("a0,a1,size", [(0, 0, 2), (0, 5, 4), (3, 5, 8), (127, 127, 2), (128, 133, 4)])
    def test_sizes(self, a0, a1, size):
        assert len(alpha_star_set(a0, a1)) == size

    def test_alpha_set_closure(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            a0, a1 = (int(v) for v in rng.integers(0, 256, 2))
            s = alpha_set(a0, a1) | {0}
            assert all(x ^ y in s for x in s for y in s)

    def test_star_closure(self):
        for a0 in range(0, 128, 7):
            for a1 in range(0, 128, 5):
                s = alpha_star_set(a0, a1)
                assert all(x ^ y in s for x in s for y in s)

    def test_pair_candidate_counts(self):
        assert len(pair_candidates({0, 127})) == 2
        assert len(pair_candidates(alpha_star_set(0, 5))) == 8
        assert len(pair_candidates(alpha_star_set(3, 5))) == 24

    def test_pair_candidates_contain_truth_for_size_8(self):
        assert (3, 5) in pair_candidates(alpha_star_set(3, 5))

    @pytest.mark.parametrize("bad", [set(), {0}, {0, 127, 3}, {0, 1, 2, 3, 4}])
    def test_malformed(self, bad):
        with pytest.raises(MalformedSet):
            pair_candidates(bad)

    def test_consistent_pairs_exhaustive(self):
        for u, v in [(0, 0), (0, 5), (3, 5), (127, 0), (5, 5)]:
            s = alpha_star_set(u, v)
            pairs = consistent_pairs(s)
            assert (u, v) in pairs
            assert all(alpha_star_set(a, b) == s for a, b in pairs)
        assert len(consistent_pairs({0, 127})) == 4
        assert len(consistent_pairs(alpha_star_set(0, 5))) == 12
        assert len(consistent_pairs(alpha_star_set(3, 5))) == 24


class TestMirror:
    def test_identity(self):
        x, a, c = 1, 3, 2
        assert (x + a * c) % 128 == 7
        assert ((x ^ 127) + (128 - a) * c) % 128 == 120
        assert 120 ^ 127 == 7

    def test_identity_exhaustive_sample(self):
        for x in range(0, 128, 3):
            for a in range(0, 128, 5):
                for c in (1, 2, 7, 33):
                    assert (x + a * c) % 128 == (((x ^ 127) + (128 - a) * c) % 128) ^ 127

    def test_orbit(self):
        orbit = mirror_orbit(3, 5, 65)
        assert orbit[0] == (3, 5, 65)
        assert (124, 122, 63) in orbit and (5, 3, 65) in orbit
        assert len(set(mirror_orbit(9, 9, 64))) <= 4


class TestProbabilities:
    def test_examples(self):
        assert composition_xor_probability(1, 0.3) == pytest.approx(0.3)
        assert composition_xor_probability(7, 0.5) == 0.5
        assert composition_xor_probability(2, 3 / 8) == pytest.approx(15 / 32)

    def test_two_step_enumeration(self):
        p = 3 / 8
        # x ^ a survives when exactly one of two maps applies it
        assert composition_xor_probability(2, p) == pytest.approx(2 * p * (1 - p))

    def test_monte_carlo(self):
        rng = np.random.default_rng(5)
        trials, p = 100_000, 3 / 8
        for n in range(1, 11):
            hits = (rng.random((trials, n)) < p).sum(axis=1) % 2 == 1
            q = composition_xor_probability(n, p)
            se = np.sqrt(q * (1 - q) / trials)
            assert abs(hits.mean() - q) <= 3 * se

    def test_len_bound(self):
        assert len_equals_k10_bound(1) == pytest.approx(7 / 8)
        assert len_equals_k10_bound(2) == pytest.approx(5 / 16)
        vals = [len_equals_k10_bound(k) for k in range(2, 60)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        with pytest.raises(ValueError):
            len_equals_k10_bound(0)
