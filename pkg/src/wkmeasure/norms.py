"""Finite operators between l^q and l^p and their operator norms.

A :class:`FiniteOperator` with ``domain_exp = q`` and ``codomain_exp = p`` is
read as a map ``l^q(Lambda) -> l^p(J)``: rows are indexed by ``J``, columns by
``Lambda`` and ``(T x)_j = sum_a T[j, a] x_a``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Mapping

import numpy as np
from scipy.optimize import linprog

from . import _kernels
from .spaces import Exponent, FiniteVector, lp_norm, sorted_labels

HILBERT = Exponent(2.0)


def _as_exponent(p) -> Exponent:
    return p if isinstance(p, Exponent) else Exponent(p)


def _clean_scalar(v):
    v = complex(v)
    return float(v.real) if v.imag == 0.0 else v


@dataclass(frozen=True)
class FiniteOperator:
    entries: Mapping = field(default_factory=dict)
    domain_exp: Exponent = HILBERT
    codomain_exp: Exponent = HILBERT
    field: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "domain_exp", _as_exponent(self.domain_exp))
        object.__setattr__(self, "codomain_exp", _as_exponent(self.codomain_exp))
        clean = {}
        for (r, c), v in self.entries.items():
            v = _clean_scalar(v)
            if v != 0:
                clean[(r, c)] = v
        has_complex = any(isinstance(v, complex) for v in clean.values())
        fld = self.field or ("complex" if has_complex else "real")
        if fld not in ("real", "complex"):
            raise ValueError(f"field must be 'real' or 'complex', got {fld!r}")
        if fld == "real" and has_complex:
            raise ValueError("real-field operator has complex entries")
        object.__setattr__(self, "field", fld)
        object.__setattr__(self, "entries", MappingProxyType(clean))

    # construction -----------------------------------------------------

    @classmethod
    def from_dense(cls, matrix, rows=None, cols=None, domain_exp=HILBERT,
                   codomain_exp=HILBERT, field=None) -> "FiniteOperator":
        M = np.asarray(matrix)
        if M.ndim != 2:
            raise ValueError("expected a 2-d array")
        rows = list(range(1, M.shape[0] + 1)) if rows is None else list(rows)
        cols = list(range(1, M.shape[1] + 1)) if cols is None else list(cols)
        if len(rows) != M.shape[0] or len(cols) != M.shape[1]:
            raise ValueError("label lists do not match the matrix shape")
        entries = {}
        for i, j in zip(*np.nonzero(M)):
            entries[(rows[i], cols[j])] = M[i, j].item()
        return cls(entries, domain_exp, codomain_exp, field)

    @classmethod
    def rank_one(cls, vector: FiniteVector, functional: FiniteVector,
                 domain_exp=HILBERT, codomain_exp=HILBERT) -> "FiniteOperator":
        """The operator ``x -> functional(x) * vector``."""
        entries = {(r, c): a * b for r, a in vector.entries.items()
                   for c, b in functional.entries.items()}
        return cls(entries, domain_exp, codomain_exp)

    # views ------------------------------------------------------------

    @property
    def rows(self) -> tuple:
        return sorted_labels(r for r, _ in self.entries)

    @property
    def cols(self) -> tuple:
        return sorted_labels(c for _, c in self.entries)

    @property
    def is_hilbert(self) -> bool:
        return self.domain_exp.is_hilbert and self.codomain_exp.is_hilbert

    @property
    def dtype(self):
        return np.complex128 if self.field == "complex" else np.float64

    def to_dense(self, rows=None, cols=None) -> np.ndarray:
        rows = self.rows if rows is None else rows
        cols = self.cols if cols is None else cols
        ri = {r: i for i, r in enumerate(rows)}
        ci = {c: j for j, c in enumerate(cols)}
        M = np.zeros((len(rows), len(cols)), dtype=self.dtype)
        for (r, c), v in self.entries.items():
            if r in ri and c in ci:
                M[ri[r], ci[c]] = v
        return M

    def apply(self, x: FiniteVector) -> FiniteVector:
        out: dict = {}
        for (r, c), v in self.entries.items():
            xc = x.entries.get(c)
            if xc is not None:
                out[r] = out.get(r, 0.0) + v * xc
        return FiniteVector(out)

    # algebra ----------------------------------------------------------

    def _like(self, entries, field=None) -> "FiniteOperator":
        return FiniteOperator(entries, self.domain_exp, self.codomain_exp, field)

    def _check_same_space(self, other):
        if (self.domain_exp, self.codomain_exp) != (other.domain_exp, other.codomain_exp):
            raise ValueError("operators act between different spaces")

    def __add__(self, other: "FiniteOperator") -> "FiniteOperator":
        self._check_same_space(other)
        out = dict(self.entries)
        for k, v in other.entries.items():
            out[k] = out.get(k, 0.0) + v
        return self._like(out)

    def __sub__(self, other: "FiniteOperator") -> "FiniteOperator":
        return self + other.scale(-1.0)

    def __neg__(self):
        return self.scale(-1.0)

    def scale(self, factor) -> "FiniteOperator":
        return self._like({k: factor * v for k, v in self.entries.items()})

    def __mul__(self, factor):
        return self.scale(factor)

    __rmul__ = __mul__

    def transpose(self) -> "FiniteOperator":
        """Banach-space adjoint ``l^{p*} -> l^{q*}`` (no conjugation)."""
        return FiniteOperator({(c, r): v for (r, c), v in self.entries.items()},
                              self.codomain_exp.conjugate(), self.domain_exp.conjugate(),
                              self.field)

    def with_exponents(self, domain_exp, codomain_exp) -> "FiniteOperator":
        return FiniteOperator(self.entries, domain_exp, codomain_exp, self.field)

    def is_zero(self) -> bool:
        return not self.entries


@dataclass(frozen=True)
class NormBracket:
    """Certified interval ``[lower, upper]`` around a norm value."""

    lower: float
    upper: float
    lower_witness: Any = None
    upper_witness: Any = None
    iterations: int = 0
    converged: bool = True

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"bracket lower {self.lower} exceeds upper {self.upper}")

    @property
    def gap(self) -> float:
        return self.upper - self.lower

    def __contains__(self, value) -> bool:
        return self.lower <= value <= self.upper


class Reflexivity(enum.Enum):
    REFLEXIVE = "reflexive"
    NON_REFLEXIVE = "non_reflexive"


def reflexivity_class(p, q) -> Reflexivity:
    """Whether nuclear operators ``l^q -> l^p`` on infinite index sets form a
    reflexive space; this happens exactly when ``p > q``."""
    p, q = _as_exponent(p), _as_exponent(q)
    return Reflexivity.REFLEXIVE if p.value > q.value else Reflexivity.NON_REFLEXIVE


def _require_hilbert(T: FiniteOperator):
    if not T.is_hilbert:
        raise ValueError(
            f"Hilbert-space formula needs q = p = 2, got q={T.domain_exp.value}, "
            f"p={T.codomain_exp.value}")


def op_norm_exact_hilbert(T: FiniteOperator) -> float:
    """Largest singular value of ``T`` (``q = p = 2``)."""
    _require_hilbert(T)
    if T.is_zero():
        return 0.0
    return float(np.linalg.svd(T.to_dense(), compute_uv=False)[0])


def _holder_rows(M: np.ndarray, p: float, qstar: float) -> float:
    if M.size == 0:
        return 0.0
    return lp_norm(np.array([lp_norm(row, qstar) for row in M]), p)


def op_norm_cert_upper(T: FiniteOperator) -> float:
    """Row-wise Hoelder bound: the ``l^p`` norm of the row ``l^{q*}`` norms.

    Always ``>= ||T||_{q->p}``, with equality on rank-one operators.
    """
    if T.is_zero():
        return 0.0
    return _holder_rows(T.to_dense(), T.codomain_exp.value, T.domain_exp.dual)


def _edge_norms(A: np.ndarray, inv: np.ndarray) -> np.ndarray:
    """Max over columns of the ``l^{1/t}`` column norms of ``A >= 0``, for each ``t`` in ``inv``."""
    scale = A.max()
    B = A / scale
    out = np.empty(inv.size)
    for i, t in enumerate(inv):
        out[i] = B.max() if t == 0.0 else float(np.max(np.sum(B ** (1.0 / t), axis=0)) ** t)
    return out * scale


def _interpolated_upper(M: np.ndarray, q: Exponent, p: Exponent, grid: int = 41) -> float:
    """Log-convex interpolation bound on ``||M||_{q->p}``.

    ``log ||M||_{a->b}`` is convex in ``(1/a, 1/b)`` for complex scalars
    (Riesz-Thorin), and the real norm never exceeds the complex one.  Exact
    values are available on the edge ``a = 1`` (max column norm), on the edge
    ``b = inf`` (max row dual norm) and at ``a = b = 2`` (top singular value);
    a small LP picks the best convex combination reaching ``(1/q, 1/p)``.
    """
    A = np.abs(M)
    t = np.linspace(0.0, 1.0, grid)
    pts = [np.stack([np.ones(grid), t]), np.stack([1.0 - t, np.zeros(grid)]), np.array([[0.5], [0.5]])]
    sigma = float(np.linalg.svd(M, compute_uv=False)[0]) * (1.0 + 1e-12)
    vals = np.concatenate([_edge_norms(A, t), _edge_norms(A.T, t), [sigma]])
    P = np.hstack(pts)
    keep = vals > 0
    res = linprog(np.log(vals[keep]), A_eq=np.vstack([P[:, keep], np.ones(int(keep.sum()))]),
                  b_eq=[1.0 / q.value, 1.0 / p.value, 1.0], bounds=(0, None), method="highs")
    if res.status != 0:
        return np.inf
    # the LP optimum is exact up to solver tolerance; pad it
    return float(np.exp(res.fun)) * (1.0 + 1e-9)


def _certified_upper(M: np.ndarray, q: Exponent, p: Exponent) -> float:
    """Smallest of four valid bounds on ``||M||_{q->p}``.

    Row-wise Hoelder for ``M`` and for its transpose, the spectral norm times
    the l^q/l^2 and l^2/l^p norm-equivalence constants (the spectral norm is
    inflated by a relative ``1e-12`` to absorb SVD roundoff), and the
    interpolation bound of :func:`_interpolated_upper`.
    """
    if M.size == 0 or not np.any(M):
        return 0.0
    m, n = M.shape
    sigma = float(np.linalg.svd(M, compute_uv=False)[0]) * (1.0 + 1e-12)
    spectral = (m ** max(0.0, 1.0 / p.value - 0.5)) * sigma * (n ** max(0.0, 0.5 - 1.0 / q.value))
    best = min(_holder_rows(M, p.value, q.dual), _holder_rows(M.T, q.dual, p.value), spectral)
    if q.value == 2.0 and p.value == 2.0 or min(m, n) == 1:
        return best
    return min(best, _interpolated_upper(M, q, p))


def _start_vectors(M: np.ndarray, restarts: int, rng: np.random.Generator) -> np.ndarray:
    m, n = M.shape
    complex_ = np.iscomplexobj(M)
    starts = [np.eye(n)[int(np.argmax(np.abs(M).sum(axis=0)))]]
    if n > 1:
        _, _, vh = np.linalg.svd(M)
        starts.append(vh[0].conj())
    while len(starts) < max(restarts, 1):
        v = rng.standard_normal(n)
        if complex_:
            v = v + 1j * rng.standard_normal(n)
        starts.append(v)
    return np.array(starts[:max(restarts, 1)], dtype=M.dtype if complex_ else float)


def _ascent_best(M, q: Exponent, p: Exponent, tol, restarts, seed, maxiter=10_000):
    rng = np.random.default_rng(seed)
    starts = _start_vectors(M, restarts, rng)
    vals, X, iters, conv = _kernels.ascent(M, q.value, p.value, starts, tol, maxiter)
    best = int(np.argmax(vals))
    return float(vals[best]), X[best], int(iters.sum()), bool(conv[best]), vals, X


def op_norm_bracket(T: FiniteOperator, tol: float = 1e-9, restarts: int = 32,
                    seed: int = 0) -> NormBracket:
    """Bracket ``||T||_{q->p}``.

    The lower end comes from the best of ``restarts`` ascent runs (a value
    actually attained by the returned unit vector); the upper end is the
    Hoelder bound, or the top singular value when ``q = p = 2``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    if T.is_zero():
        return NormBracket(0.0, 0.0, FiniteVector(), "zero", 0, True)
    rows, cols = T.rows, T.cols
    M = T.to_dense(rows, cols)
    q, p = T.domain_exp, T.codomain_exp
    if T.is_hilbert:
        u, s, vh = np.linalg.svd(M)
        x = vh[0].conj()
        upper = float(s[0])
        lower = min(lp_norm(M @ x, 2.0) / lp_norm(x, 2.0), upper)
        return NormBracket(lower, upper, FiniteVector.from_dense(x, cols), "svd", 1, True)
    _, x, iters, conv, _, _ = _ascent_best(M, q, p, tol, restarts, seed)
    upper = _certified_upper(M, q, p)
    attained = lp_norm(M @ x, p.value) / lp_norm(x, q.value)
    lower = min(attained, upper)
    return NormBracket(lower, upper, FiniteVector.from_dense(x, cols), "holder",
                       iters, conv)
