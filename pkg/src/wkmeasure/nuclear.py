"""Nuclear norms of finite operators ``l^q -> l^p``.

In the Hilbert case (``q = p = 2``) the nuclear norm is the trace norm and is
computed from singular values.  Otherwise it is the projective tensor norm of
``l^{q*} (x) l^p`` and only certified brackets are produced:

* the upper end is the cost of an explicit rank-one representation, found by
  column generation (a linear program over a growing set of unit rank-one
  atoms, priced with the mixed-norm ascent);
* the lower end is ``|<T, S>| / ||S||`` for dual witnesses ``S : l^p -> l^q``,
  with ``||S||`` replaced by a certified upper bound.

Both ends are moved outward by a relative ``1e-12`` so that roundoff in
evaluating them cannot cross the true value.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog, minimize

from . import _kernels
from .norms import (FiniteOperator, NormBracket, _certified_upper, _start_vectors,
                    _require_hilbert)
from .spaces import Exponent, FiniteVector, TruncationPair, lp_norm, sorted_labels


@dataclass(frozen=True)
class NormConfig:
    """Knobs shared by every bracket computation."""

    tol: float = 1e-9
    restarts: int = 32
    max_terms: int | None = None
    seed: int = 0


DEFAULT_CONFIG = NormConfig()


@dataclass(frozen=True)
class RankOneRepresentation:
    """``T x = sum_n functional_n(x) * vector_n``."""

    terms: tuple
    domain_exp: Exponent
    codomain_exp: Exponent

    @property
    def cost(self) -> float:
        q_star, p = self.domain_exp.dual, self.codomain_exp.value
        return float(sum(lp_norm(f.values(f.support), q_star) * lp_norm(v.values(v.support), p)
                         for f, v in self.terms))

    def __len__(self):
        return len(self.terms)

    def to_operator(self) -> FiniteOperator:
        out: dict = {}
        for f, v in self.terms:
            for r, a in v.entries.items():
                for c, b in f.entries.items():
                    out[(r, c)] = out.get((r, c), 0.0) + a * b
        return FiniteOperator(out, self.domain_exp, self.codomain_exp)

    def max_deviation(self, T: FiniteOperator) -> float:
        """Largest entrywise difference between the represented operator and ``T``."""
        R = (self.to_operator() - T.with_exponents(self.domain_exp, self.codomain_exp))
        return max((abs(v) for v in R.entries.values()), default=0.0)


@dataclass(frozen=True)
class BlockSystem:
    """Pairwise disjoint nonempty row blocks ``C_g`` matched with column blocks ``D_g``."""

    blocks: tuple

    def __post_init__(self):
        blocks = tuple((frozenset(C), frozenset(D)) for C, D in self.blocks)
        seen_r, seen_c = set(), set()
        for C, D in blocks:
            if not C or not D:
                raise ValueError("blocks must be nonempty on both sides")
            if seen_r & C or seen_c & D:
                raise ValueError("overlapping blocks")
            seen_r |= C
            seen_c |= D
        object.__setattr__(self, "blocks", blocks)

    def __iter__(self):
        return iter(self.blocks)

    def __len__(self):
        return len(self.blocks)


@dataclass(frozen=True)
class BlockSum:
    lower: float
    upper: float
    exact: bool
    identity_asserted: bool
    per_block: tuple = field(default=())

    @property
    def value(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def gap(self) -> float:
        return self.upper - self.lower


def trace_pairing(T: FiniteOperator, S: FiniteOperator):
    """Bilinear trace duality ``sum_{j,a} T[j, a] S[a, j]``.

    ``T`` maps ``l^q -> l^p`` and ``S`` must map ``l^p -> l^q``.
    """
    if S.domain_exp != T.codomain_exp or S.codomain_exp != T.domain_exp:
        raise ValueError("pairing needs S: l^p -> l^q for T: l^q -> l^p")
    total = 0.0
    for (r, c), v in T.entries.items():
        s = S.entries.get((c, r))
        if s is not None:
            total += v * s
    return total


def nuclear_norm_exact_hilbert(T: FiniteOperator) -> float:
    """Trace norm: the sum of the singular values."""
    _require_hilbert(T)
    if T.is_zero():
        return 0.0
    return float(np.sum(np.linalg.svd(T.to_dense(), compute_uv=False)))


def nuclear_interval(T: FiniteOperator, cfg: NormConfig = DEFAULT_CONFIG) -> tuple:
    """``(lower, upper)`` for ``||T||_N``: exact in the Hilbert case."""
    if T.is_hilbert:
        v = nuclear_norm_exact_hilbert(T)
        return v, v
    b = nuclear_norm_bracket(T, cfg.tol, cfg.restarts, cfg.max_terms, cfg.seed)
    return b.lower, b.upper


# ------------------------------------------------------------------ brackets

def _dual_vec(v: np.ndarray, p: float) -> np.ndarray:
    """Unit vector ``w`` of ``l^{p*}`` with ``w . v = ||v||_p`` (bilinear)."""
    a = np.abs(v)
    nrm = lp_norm(v, p)
    if nrm == 0.0:
        return np.zeros_like(v)
    phase = np.where(a > 0, np.conj(v) / np.where(a > 0, a, 1.0), 0.0)
    return phase * (a / nrm) ** (p - 1.0)


class _Atoms:
    """Unit rank-one atoms ``y x^T`` with ``||y||_p = ||x||_{q*} = 1``."""

    def __init__(self, m, n, p, qstar):
        self.m, self.n, self.p, self.qstar = m, n, p, qstar
        self.Y: list = []
        self.X: list = []
        self._keys: set = set()

    def add(self, y, x) -> bool:
        ny, nx = lp_norm(y, self.p), lp_norm(x, self.qstar)
        if ny == 0.0 or nx == 0.0:
            return False
        y, x = y / ny, x / nx
        # canonical phase so that duplicates differing by a unit scalar collide
        k = int(np.argmax(np.abs(y)))
        ph = y[k] / abs(y[k])
        y, x = y / ph, x * ph
        key = tuple(np.round(np.concatenate([y, x]).view(float), 9))
        if key in self._keys:
            return False
        self._keys.add(key)
        self.Y.append(y)
        self.X.append(x)
        return True

    def __len__(self):
        return len(self.Y)

    def matrices(self) -> np.ndarray:
        return np.einsum("ki,kj->kij", np.array(self.Y), np.array(self.X))


def _representation(coefs, Y, X, rows, cols, q, p) -> RankOneRepresentation:
    terms = []
    for g, y, x in zip(coefs, Y, X):
        if g != 0:
            terms.append((FiniteVector.from_dense(x, cols), FiniteVector.from_dense(g * y, rows)))
    return RankOneRepresentation(tuple(terms), q, p)


# relative allowance for floating-point roundoff in certified ends
_ROUNDOFF = 1e-12


def _certified_cost(M, coefs, Y, X, p, qstar) -> float:
    """Representation cost plus residual mass, padded by ``_ROUNDOFF``."""
    coefs = np.asarray(coefs)
    if len(coefs) == 0:
        return float(np.abs(M).sum()) * (1.0 + _ROUNDOFF)
    recon = np.einsum("k,ki,kj->ij", coefs, np.asarray(Y), np.asarray(X))
    cost = sum(abs(g) * lp_norm(y, p) * lp_norm(x, qstar) for g, y, x in zip(coefs, Y, X) if g != 0)
    return float(cost + np.abs(M - recon).sum()) * (1.0 + _ROUNDOFF)


def _solve_master(M, mats, complex_):
    m, n = M.shape
    K = mats.shape[0]
    flat = mats.reshape(K, m * n).T
    phases = (1, 1j, -1, -1j) if complex_ else (1, -1)
    cols = np.concatenate([flat * w for w in phases], axis=1)
    t = M.ravel()
    if complex_:
        A_eq = np.vstack([cols.real, cols.imag])
        b_eq = np.concatenate([t.real, t.imag])
    else:
        A_eq, b_eq = cols.real, t.real
    for options in ({"primal_feasibility_tolerance": 1e-10,
                     "dual_feasibility_tolerance": 1e-10}, {}):
        res = linprog(np.ones(A_eq.shape[1]), A_eq=A_eq, b_eq=b_eq, bounds=(0, None),
                      method="highs", options=options)
        if res.status == 0:
            break
    else:
        return None
    c = res.x.reshape(len(phases), K)
    coefs = sum(w * c[i] for i, w in enumerate(phases))
    u = res.eqlin.marginals
    if complex_:
        W = (u[:m * n] + 1j * u[m * n:]).reshape(m, n)
        S = np.conj(W).T
    else:
        S = u.reshape(m, n).T
    return coefs, S


def _polish(M, coefs, Y, X):
    """Re-solve the active coefficients by least squares (sharper equality)."""
    idx = np.flatnonzero(np.abs(coefs) > 0)
    if idx.size == 0:
        return coefs
    m, n = M.shape
    B = np.einsum("ki,kj->ijk", np.asarray(Y)[idx], np.asarray(X)[idx]).reshape(m * n, idx.size)
    g, *_ = np.linalg.lstsq(B, M.ravel(), rcond=None)
    out = np.zeros_like(coefs, dtype=np.result_type(coefs, g))
    out[idx] = g if np.iscomplexobj(coefs) else g.real
    return out


def _witness_value(M, S, p: Exponent, q: Exponent) -> tuple:
    """``(|<M, S>| / certified ||S||_{p->q}, phase-aligned S)``."""
    pair = np.sum(M * S.T)
    nrm = _certified_upper(S, p, q) * (1.0 + _ROUNDOFF)
    if nrm == 0.0 or pair == 0:
        return 0.0, S
    S = S * (np.conj(pair) / abs(pair))
    return float(abs(pair) / nrm), S


def _rank_one_witness(y, x, p: Exponent, q: Exponent):
    """``S = a b^T`` with ``a`` norming ``x`` in ``l^q`` and ``b`` norming ``y`` in ``l^{p*}``."""
    a = _dual_vec(x, q.dual)
    b = _dual_vec(y, p.value)
    return np.outer(a, b)


def _slackness_witness(Y, X, p: Exponent, q: Exponent):
    """Least-squares ``S`` with ``S y_k`` norming ``x_k`` and ``x_k^T S`` norming ``y_k``.

    These are the complementary-slackness conditions an optimal dual operator
    satisfies on the terms of an optimal representation (``y_k`` unit in
    ``l^p``, ``x_k`` unit in ``l^{q*}``).
    """
    m, n = Y.shape[1], X.shape[1]
    blocks, rhs = [], []
    for y, x in zip(Y, X):
        blocks.append(np.kron(np.eye(n), y[None, :]))
        rhs.append(_dual_vec(x, q.dual))
        blocks.append(np.kron(x[None, :], np.eye(m)))
        rhs.append(_dual_vec(y, p.value))
    sol, *_ = np.linalg.lstsq(np.vstack(blocks), np.concatenate(rhs), rcond=None)
    return sol.reshape(n, m)


def _hilbert_bracket(M, rows, cols, q, p):
    u, s, vh = np.linalg.svd(M, full_matrices=False)
    r = int(np.sum(s > s[0] * 1e-15)) if s.size else 0
    Y = [u[:, k] for k in range(r)]
    X = [vh[k] for k in range(r)]
    coefs = s[:r]
    upper = _certified_cost(M, coefs, Y, X, 2.0, 2.0)
    S = vh[:r].conj().T @ u[:, :r].conj().T
    pair = abs(np.sum(M * S.T))
    sigma = np.linalg.svd(S, compute_uv=False)[0] * (1.0 + _ROUNDOFF)
    lower = min(float(pair / sigma), upper)
    rep = _representation(coefs, Y, X, rows, cols, q, p)
    witness = FiniteOperator.from_dense(S, cols, rows, p, q)
    return NormBracket(lower, upper, witness, rep, 1, True)


def _refine_factors(M, Y, X, p, qstar, penalties=(1e1, 1e2, 1e3, 1e4, 1e6, 1e8)):
    """Lower ``sum_k ||y_k||_p ||x_k||_{q*}`` over factorisations ``Y^T X = M``.

    Balanced squared costs plus a quadratic penalty on the reconstruction
    error, minimised by L-BFGS with an increasing penalty weight.  Returns the
    factors and the penalty multiplier ``mu * R`` (a dual estimate).
    """
    r, m = Y.shape
    n = X.shape[1]
    cplx = np.iscomplexobj(M)

    z = _kernels._pack(Y.astype(M.dtype), X.astype(M.dtype), cplx)
    mu = 0.0
    for mu in penalties:
        z = minimize(_kernels.penalty, z, args=(M, r, p, qstar, mu), jac=True,
                     method="L-BFGS-B", options={"maxiter": 500}).x
    Y, X = _kernels._unpack(z, r, m, n, cplx)
    R = M - Y.T @ X
    return Y, X, mu * R


def _exact_fix(M, Y, X):
    """Absorb the reconstruction error into ``Y`` by least squares."""
    R = M - Y.T @ X
    if not np.any(R):
        return Y
    dY, *_ = np.linalg.lstsq(X.T, R.T, rcond=None)
    Y2 = Y + dY
    if np.abs(M - Y2.T @ X).sum() < np.abs(R).sum():
        return Y2
    return Y


def _candidate(M, coefs, Y, X, p, qstar):
    coefs = np.asarray(coefs)
    idx = np.flatnonzero(np.abs(coefs) > 0)
    Y, X, coefs = np.asarray(Y)[idx], np.asarray(X)[idx], coefs[idx]
    return _certified_cost(M, coefs, Y, X, p, qstar), coefs, Y, X


def _refined_candidate(M, coefs, Y, X, r, p, qstar, rng):
    """Balanced warm start padded to ``r`` terms, refined, then fixed up."""
    coefs = np.asarray(coefs)
    k = min(len(coefs), r)
    order = np.argsort(-np.abs(coefs), kind="stable")[:k]
    root = np.sqrt(np.abs(coefs[order]))
    phase = coefs[order] / np.where(root > 0, root ** 2, 1.0)
    m, n = M.shape
    Y0 = np.zeros((r, m), dtype=M.dtype)
    X0 = np.zeros((r, n), dtype=M.dtype)
    Y0[:k] = (np.asarray(Y)[order] * (root * phase)[:, None])
    X0[:k] = np.asarray(X)[order] * root[:, None]
    if r > k:
        scale = 1e-3 * (np.abs(M).max() ** 0.5)
        Y0[k:] = scale * rng.standard_normal((r - k, m))
        X0[k:] = scale * rng.standard_normal((r - k, n))
    Yr, Xr, multiplier = _refine_factors(M, Y0, X0, p, qstar)
    Yr = _exact_fix(M, Yr, Xr)
    cand = _candidate(M, np.ones(r, dtype=M.dtype), Yr, Xr, p, qstar)
    return cand, multiplier


def nuclear_norm_bracket(T: FiniteOperator, tol: float = 1e-9, restarts: int = 32,
                         max_terms: int | None = None, seed: int = 0,
                         max_rounds: int = 25) -> NormBracket:
    """Certified bracket for ``||T||_N``.

    ``upper_witness`` is a :class:`RankOneRepresentation` of at most
    ``max_terms`` terms whose cost (plus the entrywise mass of its roundoff
    residual) is the upper end; ``lower_witness`` is the dual operator
    ``S : l^p -> l^q`` realising the lower end.

    Outside the Hilbert case the upper end comes from column generation (a
    linear program over unit rank-one atoms, priced by the mixed-norm ascent
    on its dual) followed by local refinement of the factors.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    q, p = T.domain_exp, T.codomain_exp
    if T.is_zero():
        return NormBracket(0.0, 0.0, FiniteOperator({}, p, q), RankOneRepresentation((), q, p))
    rows, cols = T.rows, T.cols
    M = T.to_dense(rows, cols)
    m, n = M.shape
    complex_ = T.field == "complex"
    hard_cap = m * n * (2 if complex_ else 1)
    cap = hard_cap if max_terms is None else min(int(max_terms), hard_cap)
    if cap < 1:
        raise ValueError("max_terms must be at least 1")
    if T.is_hilbert and cap >= min(m, n):
        return _hilbert_bracket(M, rows, cols, q, p)

    pv, qs = p.value, q.dual
    atoms = _Atoms(m, n, pv, qs)
    u, s, vh = np.linalg.svd(M, full_matrices=False)
    rank = int(np.sum(s > s[0] * 1e-14))
    for k in range(rank):
        atoms.add(u[:, k], vh[k])
    for j in range(m):
        atoms.add(np.eye(m)[j], M[j])
    for a in range(n):
        atoms.add(M[:, a], np.eye(n)[a])
    for j in range(m):
        for a in range(n):
            atoms.add(np.eye(m)[j], np.eye(n)[a])

    rng = np.random.default_rng(seed)
    converged = False
    iterations = 0
    witnesses = []
    price_restarts = max(4, min(restarts, 16))
    coefs = None
    for _ in range(max_rounds):
        iterations += 1
        solved = _solve_master(M, atoms.matrices(), complex_)
        if solved is None:
            break
        coefs, S = solved
        witnesses.append(S)
        starts = _start_vectors(S, price_restarts, rng)
        vals, Ys, _, _ = _kernels.ascent(S, pv, q.value, starts, 1e-12, 2000)
        order = np.argsort(-vals, kind="stable")
        if vals[order[0]] <= 1.0 + tol:
            converged = True
            break
        added = 0
        for i in order[:4]:
            if vals[i] > 1.0 + tol:
                added += atoms.add(Ys[i], _dual_vec(S @ Ys[i], q.value))
        if not added:
            break

    Y, X = np.array(atoms.Y), np.array(atoms.X)
    candidates = [_candidate(M, s[:rank].astype(M.dtype), u.T[:rank], vh[:rank], pv, qs),
                  _candidate(M, np.ones(m), np.eye(m), M, pv, qs),
                  _candidate(M, np.ones(n), M.T, np.eye(n), pv, qs)]
    starts = [candidates[0]]
    if coefs is not None:
        lp = _candidate(M, coefs, Y, X, pv, qs)
        candidates += [lp, _candidate(M, _polish(M, coefs, Y, X), Y, X, pv, qs)]
        starts.append(lp)
    r = min(cap, max(len(starts[-1][1]), min(m, n) + 2))
    for start in starts:
        cand, multiplier = _refined_candidate(M, start[1], start[2], start[3], r, pv, qs, rng)
        candidates.append(cand)
        witnesses.append(np.conj(multiplier).T)
    ok = [c for c in candidates if np.count_nonzero(c[1]) <= cap]
    if not ok:
        ok = [min(candidates, key=lambda c: np.count_nonzero(c[1]))]
        converged = False
    upper, g, Yb, Xb = min(ok, key=lambda c: c[0])
    rep = _representation(g, Yb, Xb, rows, cols, q, p)

    # lower end: LP duals, penalty multipliers, phase pattern, polar factor and
    # matched rank-one witnesses, each divided by a certified norm bound
    witnesses.append(np.conj(np.where(M != 0, M / np.where(M != 0, np.abs(M), 1), 0)).T)
    witnesses.append(vh.conj().T @ u.conj().T)
    for k in np.argsort(-np.abs(g), kind="stable")[:16]:
        witnesses.append(_rank_one_witness(g[k] * Yb[k], Xb[k], p, q))
    witnesses.append(_rank_one_witness(u[:, 0], vh[0], p, q))
    ny = np.array([lp_norm(y, pv) for y in Yb]) if len(Yb) else np.zeros(0)
    nx = np.array([lp_norm(x, qs) for x in Xb]) if len(Xb) else np.zeros(0)
    live = np.abs(g) * ny * nx > 1e-12 * upper
    if np.any(live):
        Yn = (g[live] / (np.abs(g[live]) * ny[live]))[:, None] * Yb[live]
        witnesses.append(_slackness_witness(Yn, Xb[live] / nx[live, None], p, q))
    best, best_S = 0.0, np.zeros((n, m), dtype=M.dtype)
    for W in witnesses:
        W = W.astype(M.dtype) if complex_ else np.real(W)
        val, W = _witness_value(M, W, p, q)
        if val > best:
            best, best_S = val, W
    lower = min(best, upper)
    if upper - lower <= tol * max(upper, 1.0):
        converged = True
    witness = FiniteOperator.from_dense(best_S, cols, rows, p, q)
    return NormBracket(lower, upper, witness, rep, iterations, converged)


# -------------------------------------------------------------- compressions

def compress(T: FiniteOperator, pair: TruncationPair, mode: str = "inner") -> FiniteOperator:
    """Coordinate compressions of ``T`` by ``P_C`` (rows) and ``Q_D`` (columns).

    ``inner``         ``P_C T Q_D``
    ``outer``         ``Q_D T P_C`` for operators on the transposed spaces
    ``residual_N``    ``(I - P_C) T (I - Q_D)``
    ``residual_chi``  ``T - P_C T Q_D``
    """
    C, D = pair.C, pair.D
    if mode == "inner":
        keep = lambda r, c: r in C and c in D  # noqa: E731
    elif mode == "outer":
        keep = lambda r, c: r in D and c in C  # noqa: E731
    elif mode == "residual_N":
        keep = lambda r, c: r not in C and c not in D  # noqa: E731
    elif mode == "residual_chi":
        keep = lambda r, c: not (r in C and c in D)  # noqa: E731
    else:
        raise ValueError(f"unknown compression mode {mode!r}")
    return FiniteOperator({k: v for k, v in T.entries.items() if keep(*k)},
                          T.domain_exp, T.codomain_exp, T.field)


def block_diagonal_part(T: FiniteOperator, blocks: BlockSystem) -> FiniteOperator:
    """``sum_g P_{C_g} T Q_{D_g}``: everything off the blocks is zeroed."""
    if not isinstance(blocks, BlockSystem):
        blocks = BlockSystem(tuple(blocks))
    row_of, col_of = {}, {}
    for g, (C, D) in enumerate(blocks):
        row_of.update(dict.fromkeys(C, g))
        col_of.update(dict.fromkeys(D, g))
    entries = {(r, c): v for (r, c), v in T.entries.items()
               if r in row_of and row_of[r] == col_of.get(c, -1)}
    return FiniteOperator(entries, T.domain_exp, T.codomain_exp, T.field)


def block_nuclear_sum(T: FiniteOperator, blocks: BlockSystem,
                      cfg: NormConfig = DEFAULT_CONFIG) -> BlockSum:
    """``sum_g ||P_{C_g} T Q_{D_g}||_N`` as an interval.

    The sum equals the nuclear norm of the block-diagonal part only when
    ``p <= q``; otherwise the value is still returned with
    ``identity_asserted=False`` and a warning.
    """
    if not isinstance(blocks, BlockSystem):
        blocks = BlockSystem(tuple(blocks))
    asserted = T.codomain_exp.value <= T.domain_exp.value
    if not asserted:
        warnings.warn("block additivity of the nuclear norm is only asserted for p <= q",
                      stacklevel=2)
    per = tuple(nuclear_interval(compress(T, TruncationPair(C, D), "inner"), cfg)
                for C, D in blocks)
    lo = float(sum(a for a, _ in per))
    hi = float(sum(b for _, b in per))
    return BlockSum(lo, hi, T.is_hilbert, asserted, per)


def block_system(blocks: Sequence) -> BlockSystem:
    """Convenience constructor accepting ``[(rows, cols), ...]``."""
    return BlockSystem(tuple((sorted_labels(C), sorted_labels(D)) for C, D in blocks))
