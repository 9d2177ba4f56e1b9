"""Hot inner loops: the power-type ascent for mixed ``q -> p`` operator norms
and the penalised factorisation objective used by the nuclear-norm bracket.

Two interchangeable implementations are provided.  The numba one is used by
default; set ``WKMEASURE_NUMBA=0`` in the environment (before import) to force
the pure-numpy path, which vectorises over restarts instead of looping.
Both return identical results up to floating-point roundoff.
"""
from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("WKMEASURE_NUMBA", "1").strip().lower()
_WANT_NUMBA = _FLAG not in ("0", "false", "no", "off")

try:
    import numba as nb
except ImportError:  # pragma: no cover - numba is an optional accelerator
    nb = None

HAVE_NUMBA = nb is not None


# ---------------------------------------------------------------- numpy path

def _lp_norm_rows(V, p):
    A = np.abs(V)
    scale = A.max(axis=-1)
    safe = np.where(scale > 0, scale, 1.0)
    s = np.sum((A / safe[..., None]) ** p, axis=-1)
    return np.where(scale > 0, safe * s ** (1.0 / p), 0.0)


def _dual_map_rows(V, p):
    """Row-wise duality map l^p -> unit sphere of l^{p*}."""
    A = np.abs(V)
    nrm = _lp_norm_rows(V, p)
    safe = np.where(nrm > 0, nrm, 1.0)[..., None]
    absafe = np.where(A > 0, A, 1.0)
    return np.where(A > 0, (V / absafe) * (A / safe) ** (p - 1.0), 0.0)


def ascent_numpy(A, AH, a, b, starts, tol, maxiter):
    """Maximise ``||A x||_b / ||x||_a`` from each row of ``starts``.

    Returns ``(values, xs, iterations, converged)``; every value is monotone
    along its trajectory, so each is a valid lower bound on the norm.
    """
    astar = a / (a - 1.0)
    X = starts / _lp_norm_rows(starts, a)[:, None]
    Y = X @ A.T
    val = _lp_norm_rows(Y, b)
    r = X.shape[0]
    iters = np.zeros(r, dtype=np.int64)
    stall = np.zeros(r, dtype=np.int64)
    done = val == 0.0
    conv = done.copy()
    for _ in range(maxiter):
        active = ~done
        if not active.any():
            break
        iters[active] += 1
        Z = _dual_map_rows(Y[active], b)
        W = Z @ AH.T
        dead = _lp_norm_rows(W, astar) == 0.0
        Xn = _dual_map_rows(W, astar)
        Yn = Xn @ A.T
        vn = _lp_norm_rows(Yn, b)
        vo = val[active]
        better = (vn >= vo) & ~dead
        rel = np.where(vn > 0, np.abs(vn - vo) / np.where(vn > 0, vn, 1.0), 0.0)
        idx = np.flatnonzero(active)
        upd = idx[better]
        X[upd] = Xn[better]
        Y[upd] = Yn[better]
        val[upd] = vn[better]
        st = np.where(rel < tol, stall[idx] + 1, 0)
        stall[idx] = st
        done[idx[(st >= 3) | dead]] = True
        conv[idx[(st >= 3) & ~dead]] = True
    return val, X, iters, conv


def _sq_norms_grad(V, p):
    """Row-wise ``||v||_p^2`` and its gradient (complex entries as re/im pairs)."""
    A = np.abs(V)
    nrm = _lp_norm_rows(V, p)
    safe = np.where(nrm > 0, nrm, 1.0)
    Ap = np.where(A > 0, A, 1.0)
    g = 2.0 * safe[:, None] ** (2.0 - p) * np.where(A > 0, Ap ** (p - 2.0), 0.0) * V
    return nrm ** 2, g


def _unpack(z, r, m, n, cplx):
    if cplx:
        h = z.size // 2
        z = z[:h] + 1j * z[h:]
    return z[:r * m].reshape(r, m), z[r * m:].reshape(r, n)


def _pack(GY, GX, cplx):
    g = np.concatenate([GY.ravel(), GX.ravel()])
    return np.concatenate([g.real, g.imag]) if cplx else g.real.copy()


def penalty_numpy(z, M, r, p, qstar, mu):
    """Value and gradient of the balanced factorisation objective.

    ``0.5 sum_k (||y_k||_p^2 + ||x_k||_{q*}^2) + 0.5 mu ||M - Y^T X||_F^2``
    with ``z`` the real packing of ``(Y, X)``.
    """
    cplx = np.iscomplexobj(M)
    m, n = M.shape
    Y, X = _unpack(z, r, m, n, cplx)
    fy, gy = _sq_norms_grad(Y, p)
    fx, gx = _sq_norms_grad(X, qstar)
    R = M - Y.T @ X
    val = 0.5 * (fy.sum() + fx.sum()) + 0.5 * mu * float(np.sum(np.abs(R) ** 2))
    GY = 0.5 * gy - mu * (np.conj(X) @ R.T)
    GX = 0.5 * gx - mu * (np.conj(Y) @ R)
    return val, _pack(GY, GX, cplx)


# ---------------------------------------------------------------- numba path

if HAVE_NUMBA:

    @nb.njit(cache=True)
    def _lp_norm_nb(v, p):
        scale = 0.0
        for i in range(v.shape[0]):
            t = abs(v[i])
            if t > scale:
                scale = t
        if scale == 0.0:
            return 0.0
        s = 0.0
        for i in range(v.shape[0]):
            s += (abs(v[i]) / scale) ** p
        return scale * s ** (1.0 / p)

    @nb.njit(cache=True)
    def _dual_map_nb(v, p, out):
        nrm = _lp_norm_nb(v, p)
        for i in range(v.shape[0]):
            t = abs(v[i])
            if t > 0.0 and nrm > 0.0:
                out[i] = (v[i] / t) * (t / nrm) ** (p - 1.0)
            else:
                out[i] = 0.0
        return nrm

    @nb.njit(cache=True)
    def _matvec_nb(A, x, out):
        m, n = A.shape
        for j in range(m):
            acc = A[j, 0] * x[0]
            for k in range(1, n):
                acc += A[j, k] * x[k]
            out[j] = acc

    @nb.njit(cache=True)
    def ascent_numba(A, AH, a, b, starts, tol, maxiter):
        r, n = starts.shape
        m = A.shape[0]
        astar = a / (a - 1.0)
        values = np.zeros(r)
        X = np.empty_like(starts)
        iters = np.zeros(r, dtype=np.int64)
        conv = np.zeros(r, dtype=np.bool_)
        x = np.empty_like(starts[0])
        xn = np.empty_like(starts[0])
        w = np.empty_like(starts[0])
        y = np.empty(m, dtype=starts.dtype)
        yn = np.empty(m, dtype=starts.dtype)
        z = np.empty(m, dtype=starts.dtype)
        for i in range(r):
            nx = _lp_norm_nb(starts[i], a)
            for k in range(n):
                x[k] = starts[i, k] / nx
            _matvec_nb(A, x, y)
            val = _lp_norm_nb(y, b)
            stall = 0
            it = 0
            ok = val == 0.0
            while not ok and it < maxiter:
                it += 1
                _dual_map_nb(y, b, z)
                _matvec_nb(AH, z, w)
                if _dual_map_nb(w, astar, xn) == 0.0:
                    break
                _matvec_nb(A, xn, yn)
                vn = _lp_norm_nb(yn, b)
                rel = abs(vn - val) / vn if vn > 0.0 else 0.0
                if vn >= val:
                    for k in range(n):
                        x[k] = xn[k]
                    for j in range(m):
                        y[j] = yn[j]
                    val = vn
                if rel < tol:
                    stall += 1
                else:
                    stall = 0
                if stall >= 3:
                    ok = True
            values[i] = val
            for k in range(n):
                X[i, k] = x[k]
            iters[i] = it
            conv[i] = ok
        return values, X, iters, conv

    @nb.njit(cache=True)
    def _sq_norm_grad_row_nb(v, p, g):
        nrm = _lp_norm_nb(v, p)
        if nrm == 0.0:
            for i in range(v.shape[0]):
                g[i] = 0.0
            return 0.0
        c = 2.0 * nrm ** (2.0 - p)
        for i in range(v.shape[0]):
            t = abs(v[i])
            g[i] = c * t ** (p - 2.0) * v[i] if t > 0.0 else 0.0
        return nrm * nrm

    @nb.njit(cache=True)
    def penalty_numba(z, M, r, p, qstar, mu, cplx):
        m, n = M.shape
        h = z.shape[0] // 2 if cplx else z.shape[0]
        Y = np.empty((r, m), dtype=np.complex128)
        X = np.empty((r, n), dtype=np.complex128)
        for k in range(r):
            for i in range(m):
                Y[k, i] = z[k * m + i] + (1j * z[h + k * m + i] if cplx else 0.0)
            for a in range(n):
                X[k, a] = z[r * m + k * n + a] + (1j * z[h + r * m + k * n + a] if cplx else 0.0)
        R = np.empty((m, n), dtype=np.complex128)
        res = 0.0
        for i in range(m):
            for a in range(n):
                acc = M[i, a]
                for k in range(r):
                    acc -= Y[k, i] * X[k, a]
                R[i, a] = acc
                res += acc.real * acc.real + acc.imag * acc.imag
        GY = np.empty((r, m), dtype=np.complex128)
        GX = np.empty((r, n), dtype=np.complex128)
        val = 0.5 * mu * res
        for k in range(r):
            val += 0.5 * _sq_norm_grad_row_nb(Y[k], p, GY[k])
            val += 0.5 * _sq_norm_grad_row_nb(X[k], qstar, GX[k])
            for i in range(m):
                acc = 0.0 + 0.0j
                for a in range(n):
                    acc += np.conj(X[k, a]) * R[i, a]
                GY[k, i] = 0.5 * GY[k, i] - mu * acc
            for a in range(n):
                acc = 0.0 + 0.0j
                for i in range(m):
                    acc += np.conj(Y[k, i]) * R[i, a]
                GX[k, a] = 0.5 * GX[k, a] - mu * acc
        out = np.empty(z.shape[0])
        for k in range(r):
            for i in range(m):
                out[k * m + i] = GY[k, i].real
                if cplx:
                    out[h + k * m + i] = GY[k, i].imag
            for a in range(n):
                out[r * m + k * n + a] = GX[k, a].real
                if cplx:
                    out[h + r * m + k * n + a] = GX[k, a].imag
        return val, out

else:  # pragma: no cover
    ascent_numba = None
    penalty_numba = None


USE_NUMBA = HAVE_NUMBA and _WANT_NUMBA
BACKEND = "numba" if USE_NUMBA else "numpy"


def ascent(A, a, b, starts, tol=1e-12, maxiter=10_000, backend=None):
    """Run the mixed-norm ascent on the dense matrix ``A`` (``l^a -> l^b``).

    ``starts`` holds one nonzero start vector per row.  Dtypes are unified
    (complex if either input is complex) before dispatch.
    """
    backend = backend or BACKEND
    dtype = np.result_type(A.dtype, starts.dtype, np.float64)
    A = np.ascontiguousarray(A, dtype=dtype)
    AH = np.ascontiguousarray(A.conj().T)
    starts = np.ascontiguousarray(starts, dtype=dtype)
    if backend == "numba":
        if ascent_numba is None:
            raise RuntimeError("numba backend requested but numba is not importable")
        return ascent_numba(A, AH, float(a), float(b), starts, float(tol), int(maxiter))
    if backend == "numpy":
        return ascent_numpy(A, AH, float(a), float(b), starts, float(tol), int(maxiter))
    raise ValueError(f"unknown backend {backend!r}")


def penalty(z, M, r, p, qstar, mu, backend=None):
    """Objective and gradient used to refine rank-one factorisations."""
    backend = backend or BACKEND
    if backend == "numba":
        if penalty_numba is None:
            raise RuntimeError("numba backend requested but numba is not importable")
        Mc = np.ascontiguousarray(M, dtype=np.complex128)
        return penalty_numba(z, Mc, int(r), float(p), float(qstar), float(mu),
                             bool(np.iscomplexobj(M)))
    if backend == "numpy":
        return penalty_numpy(z, M, r, p, qstar, mu)
    raise ValueError(f"unknown backend {backend!r}")
