import itertools
import math

import numpy as np
import pytest

from wkmeasure import (FiniteOperator, FiniteVector, NormBracket, Reflexivity, TruncationPair,
                       compress, lp_norm, op_norm_bracket, op_norm_cert_upper,
                       op_norm_exact_hilbert, reflexivity_class)

from conftest import EXPONENTS, random_operator

SQ5 = math.sqrt(5.0)


def example_u(n=3):
    return FiniteOperator({(1, n): 1.0, (n, 1): 1.0, (n, n): 1.0})


def grid_norm(M, q, p, n=20000):
    # dense angular grid on the l^q unit circle
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    X = np.stack([np.cos(t), np.sin(t)])
    X = X / (np.sum(np.abs(X) ** q, axis=0) ** (1 / q))
    Y = M @ X
    return float(np.max(np.sum(np.abs(Y) ** p, axis=0) ** (1 / p)))


class TestFiniteOperator:
    def test_from_dense_and_back(self):
        M = np.array([[1.0, 0.0], [2.0, 3.0]])
        T = FiniteOperator.from_dense(M)
        assert T.rows == (1, 2) and T.cols == (1, 2)
        assert np.array_equal(T.to_dense(), M)
        assert len(T.entries) == 3

    def test_apply(self):
        T = FiniteOperator({("a", 1): 2.0, ("b", 2): -1.0})
        assert T.apply(FiniteVector({1: 1.0, 2: 3.0})).entries == {"a": 2.0, "b": -3.0}

    def test_field(self):
        assert FiniteOperator({(1, 1): 1j}).field == "complex"
        with pytest.raises(ValueError):
            FiniteOperator({(1, 1): 1j}, field="real")
        assert FiniteOperator({(1, 1): 1.0}, field="complex").dtype == np.complex128

    def test_space_mismatch(self):
        with pytest.raises(ValueError):
            FiniteOperator({(1, 1): 1.0}, 2, 2) + FiniteOperator({(1, 1): 1.0}, 3, 2)

    def test_transpose(self):
        T = FiniteOperator({(1, 2): 1j}, 3, 1.5)
        Tt = T.transpose()
        assert Tt.entries == {(2, 1): 1j}
        assert Tt.domain_exp.value == 3.0 and Tt.codomain_exp.value == pytest.approx(1.5)

    def test_rank_one(self):
        T = FiniteOperator.rank_one(FiniteVector({1: 2.0}), FiniteVector({5: 3.0}))
        assert T.entries == {(1, 5): 6.0}


class TestHilbert:
    def test_identity(self):
        assert op_norm_exact_hilbert(FiniteOperator.from_dense(np.eye(2))) == 1.0

    def test_example_u(self):
        assert abs(op_norm_exact_hilbert(example_u()) - math.sqrt((3 + SQ5) / 2)) <= 1e-10

    def test_diag(self):
        T = FiniteOperator.from_dense(np.diag([2.0, 3.0]))
        assert abs(op_norm_exact_hilbert(T) - 3.0) <= 1e-12

    def test_requires_hilbert(self):
        with pytest.raises(ValueError):
            op_norm_exact_hilbert(FiniteOperator({(1, 1): 1.0}, 3, 2))

    def test_random_brackets_collapse(self, rng):
        for _ in range(40):
            m, n = rng.integers(1, 7, size=2)
            T = random_operator(rng, m, n, complex_=bool(rng.integers(2)))
            b = op_norm_bracket(T)
            exact = op_norm_exact_hilbert(T)
            assert b.gap <= 1e-9
            assert abs(b.lower - exact) <= 1e-9 and abs(b.upper - exact) <= 1e-9


class TestBracket:
    def test_zero(self):
        b = op_norm_bracket(FiniteOperator({}, 3, 1.5))
        assert (b.lower, b.upper) == (0.0, 0.0)

    @pytest.mark.parametrize("q,p", list(itertools.product(EXPONENTS, repeat=2)))
    def test_rank_one(self, q, p, rng):
        y, x = rng.standard_normal(3), rng.standard_normal(4)
        T = FiniteOperator.from_dense(np.outer(y, x), domain_exp=q, codomain_exp=p)
        value = lp_norm(y, p) * lp_norm(x, q / (q - 1))
        b = op_norm_bracket(T)
        assert b.lower <= value + 1e-12 and value <= b.upper + 1e-12
        assert b.gap <= 1e-9 * value

    def test_invalid_args(self):
        T = FiniteOperator({(1, 1): 1.0})
        with pytest.raises(ValueError):
            op_norm_bracket(T, tol=0)
        with pytest.raises(ValueError):
            op_norm_bracket(T, restarts=0)

    def test_bracket_validation(self):
        with pytest.raises(ValueError):
            NormBracket(2.0, 1.0)

    @pytest.mark.parametrize("q,p", list(itertools.product(EXPONENTS, repeat=2)))
    def test_grid_oracle_2x2(self, q, p, rng):
        for _ in range(6):
            M = rng.standard_normal((2, 2))
            T = FiniteOperator.from_dense(M, domain_exp=q, codomain_exp=p)
            b = op_norm_bracket(T)
            assert abs(b.lower - grid_norm(M, q, p)) <= 1e-4

    def test_lower_below_cert_upper(self, rng):
        for _ in range(60):
            q, p = rng.choice(EXPONENTS, 2)
            T = random_operator(rng, *rng.integers(1, 6, size=2), q, p,
                                complex_=bool(rng.integers(2)))
            b = op_norm_bracket(T, restarts=8)
            assert b.lower <= op_norm_cert_upper(T)
            assert b.lower <= b.upper

    def test_witness_attains_lower(self, rng):
        T = random_operator(rng, 4, 3, 1.5, 3.0)
        b = op_norm_bracket(T)
        x = b.lower_witness.values(T.cols)
        val = lp_norm(T.to_dense() @ x, 3.0) / lp_norm(x, 1.5)
        assert abs(val - b.lower) <= 1e-12 * b.lower

    def test_deterministic(self, rng):
        T = random_operator(rng, 4, 4, 3.0, 1.5, complex_=True)
        assert op_norm_bracket(T, seed=3) == op_norm_bracket(T, seed=3)


class TestCertUpper:
    def test_identity(self):
        assert abs(op_norm_cert_upper(FiniteOperator.from_dense(np.eye(4))) - 2.0) <= 1e-15

    def test_rank_one_tight(self, rng):
        y, x = rng.standard_normal(3), rng.standard_normal(2)
        T = FiniteOperator.from_dense(np.outer(y, x), domain_exp=3.0, codomain_exp=1.5)
        assert abs(op_norm_cert_upper(T) - lp_norm(y, 1.5) * lp_norm(x, 1.5)) <= 1e-12

    def test_example_u(self):
        assert op_norm_cert_upper(example_u()) >= (1 + SQ5) / 2

    def test_holder_on_random_vectors(self, rng):
        for _ in range(200):
            q, p = rng.choice(EXPONENTS, 2)
            T = random_operator(rng, 4, 5, q, p, complex_=bool(rng.integers(2)))
            x = rng.standard_normal(5)
            x /= lp_norm(x, q)
            assert lp_norm(T.to_dense() @ x, p) <= op_norm_cert_upper(T) * (1 + 1e-12)


def test_compression_contracts(rng):
    for _ in range(30):
        q, p = rng.choice(EXPONENTS, 2)
        T = random_operator(rng, 4, 4, q, p)
        full = op_norm_bracket(T, restarts=8)
        C = set(rng.choice(range(1, 5), rng.integers(0, 5), replace=False).tolist())
        D = set(rng.choice(range(1, 5), rng.integers(0, 5), replace=False).tolist())
        part = op_norm_bracket(compress(T, TruncationPair(C, D), "inner"), restarts=8)
        assert part.lower <= full.upper + 1e-9


@pytest.mark.parametrize("p,q,expected", [
    (3.0, 2.0, Reflexivity.REFLEXIVE), (2.0, 2.0, Reflexivity.NON_REFLEXIVE),
    (1.5, 2.0, Reflexivity.NON_REFLEXIVE)])
def test_reflexivity(p, q, expected):
    assert reflexivity_class(p, q) is expected


def test_interpolated_bound_is_valid(rng):
    from wkmeasure.norms import _ascent_best, _interpolated_upper
    from wkmeasure.spaces import Exponent
    for _ in range(40):
        q, p = (Exponent(v) for v in rng.choice((1.5, 3.0), 2))
        complex_ = bool(rng.integers(2))
        M = random_operator(rng, *rng.integers(2, 6, size=2), complex_=complex_).to_dense()
        attained = _ascent_best(M, q, p, 1e-13, 16, 0)[0]
        assert attained <= _interpolated_upper(M, q, p) * (1 + 1e-12)


def test_interpolated_bound_exact_on_edges(rng):
    from wkmeasure.norms import _interpolated_upper
    from wkmeasure.spaces import Exponent
    M = rng.standard_normal((4, 3))
    # l^1 -> l^4 is the largest column l^4 norm (1/4 lies on the edge grid)
    col = max(lp_norm(M[:, j], 4.0) for j in range(3))
    assert abs(_interpolated_upper(M, Exponent(1.0 + 1e-9), Exponent(4.0)) - col) <= 1e-6 * col
