import itertools
import math
import warnings

import numpy as np
import pytest
from scipy.optimize import linprog

from wkmeasure import (BlockSystem, FiniteOperator, FiniteVector, NormConfig, TruncationPair,
                       block_diagonal_part, block_nuclear_sum, block_system, compress, lp_norm,
                       nuclear_interval, nuclear_norm_bracket, nuclear_norm_exact_hilbert,
                       op_norm_cert_upper, trace_pairing)

from conftest import EXPONENTS, random_operator

SQ5 = math.sqrt(5.0)


def grid_nuclear(M, q, p, N=300):
    """Projective norm restricted to a grid of unit atoms: an upper oracle for 2x2."""
    def sphere(a):
        t = np.linspace(0, np.pi, N, endpoint=False)
        V = np.stack([np.cos(t), np.sin(t)], 1)
        return V / (np.sum(np.abs(V) ** a, 1) ** (1 / a))[:, None]
    Y, X = sphere(p), sphere(q / (q - 1))
    A = np.einsum("ki,lj->ijkl", Y, X).reshape(4, -1)
    res = linprog(np.ones(2 * A.shape[1]), A_eq=np.hstack([A, -A]), b_eq=M.ravel(),
                  bounds=(0, None), method="highs")
    return res.fun


class TestHilbert:
    def test_example_u(self):
        U = FiniteOperator({(1, 3): 1.0, (3, 1): 1.0, (3, 3): 1.0})
        assert abs(nuclear_norm_exact_hilbert(U) - SQ5) <= 1e-9

    def test_identity(self):
        assert nuclear_norm_exact_hilbert(FiniteOperator.from_dense(np.eye(4))) == 4.0

    def test_zero(self):
        assert nuclear_norm_exact_hilbert(FiniteOperator({}, 2, 2)) == 0.0

    def test_requires_hilbert(self):
        with pytest.raises(ValueError):
            nuclear_norm_exact_hilbert(FiniteOperator({(1, 1): 1.0}, 3, 2))

    def test_bracket_matches_svd(self, rng):
        for _ in range(30):
            T = random_operator(rng, *rng.integers(1, 6, size=2), complex_=bool(rng.integers(2)))
            b = nuclear_norm_bracket(T)
            exact = nuclear_norm_exact_hilbert(T)
            assert b.lower <= exact + 1e-9 and exact <= b.upper + 1e-9
            assert b.gap <= 1e-9
            assert b.upper_witness.max_deviation(T) <= 1e-10

    def test_truncated_hilbert_uses_general_path(self, rng):
        T = random_operator(rng, 3, 3)
        b = nuclear_norm_bracket(T, max_terms=2)
        assert len(b.upper_witness) <= 2
        assert b.lower <= nuclear_norm_exact_hilbert(T) + 1e-9

    def test_interval(self, rng):
        T = random_operator(rng, 3, 4)
        lo, hi = nuclear_interval(T)
        assert lo == hi == nuclear_norm_exact_hilbert(T)


class TestTracePairing:
    def test_small(self):
        T = FiniteOperator({(1, "a"): 2.0, (2, "b"): 1.0})
        S = FiniteOperator({("a", 1): 3.0, ("b", 1): 5.0})
        assert trace_pairing(T, S) == 6.0

    def test_matches_trace(self, rng):
        M, N = rng.standard_normal((3, 4)), rng.standard_normal((4, 3))
        T = FiniteOperator.from_dense(M, domain_exp=3.0, codomain_exp=1.5)
        S = FiniteOperator.from_dense(N, domain_exp=1.5, codomain_exp=3.0)
        assert abs(trace_pairing(T, S) - np.trace(M @ N)) <= 1e-12

    def test_exponent_check(self):
        T = FiniteOperator({(1, 1): 1.0}, 3, 1.5)
        with pytest.raises(ValueError):
            trace_pairing(T, T)


class TestBracket:
    @pytest.mark.parametrize("q,p", list(itertools.product(EXPONENTS, repeat=2)))
    def test_rank_one_closed_form(self, q, p, rng):
        y, x = rng.standard_normal(3), rng.standard_normal(4)
        T = FiniteOperator.from_dense(np.outer(y, x), domain_exp=q, codomain_exp=p)
        value = lp_norm(y, p) * lp_norm(x, q / (q - 1))
        b = nuclear_norm_bracket(T)
        assert b.lower <= value + 1e-12 * value and value <= b.upper + 1e-12 * value
        assert b.gap <= 1e-6 * value

    @pytest.mark.parametrize("q,p", [(1.5, 3.0), (3.0, 1.5), (3.0, 3.0), (1.5, 1.5)])
    def test_grid_oracle_2x2(self, q, p, rng):
        for _ in range(3):
            M = rng.standard_normal((2, 2))
            T = FiniteOperator.from_dense(M, domain_exp=q, codomain_exp=p)
            b = nuclear_norm_bracket(T)
            grid = grid_nuclear(M, q, p)
            assert b.lower <= grid + 1e-9
            assert abs(b.upper - grid) <= 1e-3 * grid

    def test_representation_reproduces_operator(self, rng):
        for _ in range(10):
            q, p = rng.choice((1.5, 3.0), 2)
            T = random_operator(rng, 3, 3, q, p, complex_=bool(rng.integers(2)))
            b = nuclear_norm_bracket(T)
            assert b.upper_witness.max_deviation(T) <= 1e-9
            assert b.upper_witness.cost <= b.upper + 1e-12 * b.upper

    def test_lower_witness_certifies(self, rng):
        for _ in range(10):
            q, p = rng.choice((1.5, 3.0), 2)
            T = random_operator(rng, 3, 2, q, p)
            b = nuclear_norm_bracket(T)
            S = b.lower_witness
            assert abs(trace_pairing(T, S)) / op_norm_cert_upper(S) <= b.upper * (1 + 1e-9)

    def test_max_terms(self, rng):
        T = random_operator(rng, 3, 3, 3.0, 1.5)
        b = nuclear_norm_bracket(T, max_terms=3)
        assert len(b.upper_witness) <= 3
        with pytest.raises(ValueError):
            nuclear_norm_bracket(T, max_terms=0)

    def test_zero(self):
        b = nuclear_norm_bracket(FiniteOperator({}, 3, 1.5))
        assert (b.lower, b.upper) == (0.0, 0.0)

    def test_deterministic(self, rng):
        T = random_operator(rng, 3, 3, 1.5, 3.0)
        assert nuclear_norm_bracket(T, seed=1).upper == nuclear_norm_bracket(T, seed=1).upper

    def test_dominates_operator_norm(self, rng):
        # ||T||_{q->p} <= ||T||_N
        for _ in range(10):
            q, p = rng.choice((1.5, 3.0), 2)
            T = random_operator(rng, 3, 3, q, p)
            from wkmeasure import op_norm_bracket
            assert op_norm_bracket(T).lower <= nuclear_norm_bracket(T).upper + 1e-9


class TestCompress:
    T = FiniteOperator.from_dense(np.arange(1, 10, dtype=float).reshape(3, 3))
    pair = TruncationPair({1}, {2, 3})

    def test_inner(self):
        assert set(compress(self.T, self.pair).entries) == {(1, 2), (1, 3)}

    def test_residual_n(self):
        assert set(compress(self.T, self.pair, "residual_N").entries) == {(2, 1), (3, 1)}

    def test_residual_chi(self):
        R = compress(self.T, self.pair, "residual_chi")
        assert R + compress(self.T, self.pair) == self.T

    def test_outer(self):
        assert set(compress(self.T, TruncationPair({2}, {1}), "outer").entries) == {(1, 2)}

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            compress(self.T, self.pair, "sideways")

    def test_example_u_from_rank_one(self):
        # U_3 = (e1 + e3)(e1 + e3)^T minus its (1, 1) corner
        U3 = FiniteOperator({(1, 1): 1.0, (1, 3): 1.0, (3, 1): 1.0, (3, 3): 1.0})
        assert abs(nuclear_norm_exact_hilbert(U3) - 2.0) <= 1e-12
        U = compress(U3, TruncationPair({1}, {1}), "residual_chi")
        assert abs(nuclear_norm_exact_hilbert(U) - SQ5) <= 1e-12


class TestBlocks:
    def test_validation(self):
        with pytest.raises(ValueError):
            BlockSystem((({1}, {1}), ({1}, {2})))
        with pytest.raises(ValueError):
            BlockSystem((({1}, set()),))

    def test_additivity_hilbert(self, rng):
        T = random_operator(rng, 6, 6)
        blocks = block_system([({1, 2}, {1, 2, 3}), ({3, 4, 5}, {4}), ({6}, {5, 6})])
        s = block_nuclear_sum(T, blocks)
        bd = nuclear_norm_exact_hilbert(block_diagonal_part(T, blocks))
        assert s.exact and s.identity_asserted
        assert abs(s.value - bd) <= 1e-9
        assert bd <= nuclear_norm_exact_hilbert(T) + 1e-9

    def test_warning_when_p_exceeds_q(self, rng):
        T = random_operator(rng, 2, 2, 1.5, 3.0)
        with pytest.warns(UserWarning):
            s = block_nuclear_sum(T, block_system([({1}, {1}), ({2}, {2})]))
        assert not s.identity_asserted
        assert s.lower <= s.upper

    def test_no_warning_when_p_below_q(self, rng):
        T = random_operator(rng, 2, 2, 3.0, 1.5)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            s = block_nuclear_sum(T, block_system([({1}, {1}), ({2}, {2})]))
        assert s.identity_asserted

    def test_block_diagonal_part(self):
        T = FiniteOperator.from_dense(np.ones((2, 2)))
        B = block_diagonal_part(T, block_system([({1}, {1}), ({2}, {2})]))
        assert B.entries == {(1, 1): 1.0, (2, 2): 1.0}


def test_norm_config_defaults():
    cfg = NormConfig()
    assert (cfg.tol, cfg.restarts, cfg.max_terms, cfg.seed) == (1e-9, 32, None, 0)


def test_rank_one_constructor_nuclear():
    T = FiniteOperator.rank_one(FiniteVector({1: 3.0, 2: 4.0}), FiniteVector({1: 1.0}))
    assert abs(nuclear_norm_exact_hilbert(T) - 5.0) <= 1e-12
