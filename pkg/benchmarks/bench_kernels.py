"""Benchmark the hot kernels: numba vs pure numpy.

``ascent``: both backends run the same restarts on the same matrices; the
script reports the best-of-``repeat`` wall time per backend and the largest
difference in the returned norm values (which should be at roundoff level).

``penalty``: the penalised factorisation objective and its gradient, evaluated
``--evals`` times at random points (this is what L-BFGS calls in the nuclear
bracket refinement).

    python benchmarks/bench_kernels.py --sizes 4 16 64 --restarts 32
    python benchmarks/bench_kernels.py --kernel penalty --sizes 3 5 8
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from wkmeasure import _kernels


def _time(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench(n, restarts, p, q, repeat, seed, complex_):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    starts = rng.standard_normal((restarts, n))
    if complex_:
        A = A + 1j * rng.standard_normal((n, n))
        starts = starts + 1j * rng.standard_normal((restarts, n))
    row = {"n": n, "restarts": restarts, "p": p, "q": q, "complex": complex_}
    vals = {}
    for backend in ("numpy", "numba"):
        if backend == "numba" and not _kernels.HAVE_NUMBA:
            continue
        run = lambda: _kernels.ascent(A, q, p, starts, 1e-12, 10_000, backend=backend)  # noqa: E731
        run()  # warm-up (JIT compile on first call)
        t, (v, _, iters, _) = _time(run, repeat)
        row[backend] = t
        row[backend + "_iters"] = int(iters.sum())
        vals[backend] = v
    if len(vals) == 2:
        row["speedup"] = row["numpy"] / row["numba"]
        row["max_value_diff"] = float(np.max(np.abs(vals["numpy"] - vals["numba"])))
    return row


def bench_penalty(n, evals, p, q, repeat, seed, complex_):
    rng = np.random.default_rng(seed)
    r = n + 2
    M = rng.standard_normal((n, n))
    if complex_:
        M = M + 1j * rng.standard_normal((n, n))
    Z = rng.standard_normal((evals, r * 2 * n * (2 if complex_ else 1)))
    qstar = q / (q - 1.0)
    row = {"n": n, "evals": evals, "p": p, "q": q, "complex": complex_}
    vals = {}
    for backend in ("numpy", "numba"):
        if backend == "numba" and not _kernels.HAVE_NUMBA:
            continue
        run = lambda: [_kernels.penalty(z, M, r, p, qstar, 1e4, backend=backend)[0]  # noqa: E731
                       for z in Z]
        run()
        t, out = _time(run, repeat)
        row[backend] = t
        vals[backend] = np.array(out)
    if len(vals) == 2:
        row["speedup"] = row["numpy"] / row["numba"]
        row["max_value_diff"] = float(np.max(np.abs(vals["numpy"] - vals["numba"])
                                             / np.maximum(1.0, np.abs(vals["numpy"]))))
    return row


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 16, 64, 128])
    ap.add_argument("--restarts", type=int, default=32)
    ap.add_argument("--p", type=float, default=3.0)
    ap.add_argument("--q", type=float, default=1.5)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--complex", action="store_true")
    ap.add_argument("--kernel", choices=("ascent", "penalty"), default="ascent")
    ap.add_argument("--evals", type=int, default=2000, help="penalty evaluations per timing")
    args = ap.parse_args(argv)

    print(f"default backend: {_kernels.BACKEND} (numba available: {_kernels.HAVE_NUMBA})")
    header = f"{'n':>5} {'numpy [s]':>11} {'numba [s]':>11} {'speedup':>8} {'max |dv|':>10}"
    print(header)
    rows = []
    for n in args.sizes:
        if args.kernel == "ascent":
            r = bench(n, args.restarts, args.p, args.q, args.repeat, args.seed, args.complex)
        else:
            r = bench_penalty(n, args.evals, args.p, args.q, args.repeat, args.seed, args.complex)
        rows.append(r)
        print(f"{n:>5} {r['numpy']:>11.4f} {r.get('numba', float('nan')):>11.4f} "
              f"{r.get('speedup', float('nan')):>8.2f} {r.get('max_value_diff', float('nan')):>10.2e}")
    return rows


if __name__ == "__main__":
    main()
