import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wkmeasure import (Ambient, Exponent, FiniteVector, TruncationPair, VectorFamily, excess,
                       lp_norm, project, vector_norm)
from wkmeasure.spaces import label_key, sorted_labels

finite = st.floats(-1e3, 1e3, allow_nan=False)
vectors = st.dictionaries(st.integers(0, 12), finite, max_size=10).map(FiniteVector)


def fsum_norm(vals, p):
    # independent summation oracle
    return math.fsum(abs(v) ** p for v in vals) ** (1.0 / p)


class TestExponent:
    def test_dual(self):
        assert Exponent(2.0).dual == 2.0
        assert Exponent(3.0).dual == pytest.approx(1.5, abs=1e-15)

    @given(st.floats(1.0001, 1e4))
    def test_double_dual(self, p):
        assert abs(Exponent(p).conjugate().conjugate().value - p) <= 1e-12 * max(1.0, p)

    @pytest.mark.parametrize("bad", [1.0, 0.5, -2, math.inf, math.nan])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            Exponent(bad)

    def test_parse(self):
        assert Exponent.parse("1.5").value == 1.5
        with pytest.raises(ValueError):
            Exponent.parse("one")


class TestLabels:
    def test_mixed_order(self):
        assert sorted_labels(["b", 3, "a", 1]) == (1, 3, "a", "b")

    def test_bool_is_not_int(self):
        assert label_key(True)[0] == 1


class TestVectorNorm:
    def test_pythagoras(self):
        assert vector_norm(FiniteVector.from_dense([3, 4]), Ambient.ellp(2)) == 5.0

    def test_zero(self):
        assert vector_norm(FiniteVector(), Ambient.ellp(2)) == 0.0

    def test_cube_root(self):
        v = vector_norm(FiniteVector.from_dense([1, 1, 1]), Ambient.ellp(3))
        assert abs(v - 3 ** (1 / 3)) <= 1e-14
        assert abs(v - fsum_norm([1, 1, 1], 3)) <= 1e-14

    def test_c0_and_weights(self):
        x = FiniteVector({"a": -2.0, "b": 1.0})
        assert vector_norm(x, Ambient.c0()) == 2.0
        assert vector_norm(x, Ambient.ell1({"a": 0.5, "b": 3.0})) == 4.0

    def test_bad_weights(self):
        with pytest.raises(ValueError):
            Ambient.ell1({1: 0.0})
        with pytest.raises(ValueError):
            vector_norm(FiniteVector({2: 1.0}), Ambient.ell1({1: 1.0}))

    @given(vectors, vectors, st.sampled_from([1.5, 2.0, 3.0]))
    def test_triangle(self, x, y, p):
        amb = Ambient.ellp(p)
        assert vector_norm(x + y, amb) <= vector_norm(x, amb) + vector_norm(y, amb) + 1e-12 * (
            1 + vector_norm(x, amb) + vector_norm(y, amb))

    @given(vectors, st.floats(-50, 50), st.sampled_from([1.5, 2.0, 3.0]))
    def test_homogeneity(self, x, lam, p):
        amb = Ambient.ellp(p)
        n = vector_norm(x, amb)
        assert abs(vector_norm(x.scale(lam), amb) - abs(lam) * n) <= 1e-12 * max(1.0, abs(lam) * n)

    def test_random_against_oracle(self, rng):
        for _ in range(50):
            v = rng.standard_normal(rng.integers(1, 20))
            p = float(rng.uniform(1.1, 6))
            assert abs(lp_norm(v, p) - fsum_norm(v, p)) <= 1e-12 * fsum_norm(v, p)

    def test_overflow_safe(self):
        assert lp_norm(np.array([1e300, 1e300]), 3.0) == pytest.approx(1e300 * 2 ** (1 / 3))


class TestProject:
    x = FiniteVector.from_dense([1, 2, 3])

    def test_keep(self):
        assert project(self.x, {1}).entries == {1: 1.0}

    def test_drop_empty(self):
        assert project(self.x, set(), "drop") == self.x

    def test_drop(self):
        assert project(self.x, {2, 3}, "drop").entries == {1: 1.0}

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            project(self.x, {1}, "both")

    @given(vectors, st.sets(st.integers(0, 12)))
    def test_complementary_and_idempotent(self, x, F):
        keep, drop = project(x, F, "keep"), project(x, F, "drop")
        assert keep + drop == x
        assert project(keep, F, "keep") == keep
        assert project(drop, F, "drop") == drop

    @given(vectors, st.sets(st.integers(0, 12)), st.sets(st.integers(0, 12)))
    def test_tail_monotone(self, x, F, G):
        amb = Ambient.ell1()
        assert vector_norm(project(x, F | G, "drop"), amb) <= vector_norm(project(x, F, "drop"), amb)


class TestExcess:
    norm = staticmethod(lambda v: vector_norm(v, Ambient.ellp(2)))

    def test_same_set(self):
        A = [FiniteVector.from_dense([1, 2]), FiniteVector.from_dense([0, 1])]
        assert excess(A, A, self.norm) == 0.0

    def test_single(self):
        assert excess([FiniteVector.from_dense([1, 0])], [FiniteVector()], self.norm) == 1.0

    def test_asymmetric(self):
        A = [FiniteVector.from_dense([1, 0])]
        B = [FiniteVector.from_dense([1, 0]), FiniteVector.from_dense([5, 0])]
        assert excess(A, B, self.norm) == 0.0
        assert excess(B, A, self.norm) == 4.0

    def test_empty(self):
        with pytest.raises(ValueError):
            excess([], [FiniteVector()], self.norm)

    def test_zero_iff_close(self, rng):
        B = [FiniteVector.from_dense(rng.standard_normal(3)) for _ in range(4)]
        A = [b + FiniteVector({1: 1e-14}) for b in B[:2]]
        assert excess(A, B, self.norm) <= 1e-12
        assert excess(A + [FiniteVector({9: 1.0})], B, self.norm) > 1e-12


def test_zero_pruning_and_types():
    x = FiniteVector({1: 0.0, 2: 1 + 0j, 3: 2j})
    assert x.support == (2, 3)
    assert isinstance(x.entries[2], float) and x.is_complex
    with pytest.raises(TypeError):
        x.entries[5] = 1.0


def test_truncation_pair_and_family():
    P = TruncationPair([3, 1], ["b"])
    assert P.as_dict() == {"C": [1, 3], "D": ["b"]}
    fam = VectorFamily([FiniteVector({2: 1.0}), FiniteVector({1: 1.0})], Ambient.c0())
    assert fam.support == (1, 2)
    assert fam.scale(2.0).members[0].entries == {2: 2.0}
    with pytest.raises(ValueError):
        VectorFamily([], Ambient.c0())
