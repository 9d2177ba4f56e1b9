"""Budgeted min-max search over truncation pairs.

The objective is ``max_i f_i(C, D)`` where member ``i`` only sees
``C & rows_i`` and ``D & cols_i``; member values are cached on exactly that
key, so the search never evaluates a residual twice.
"""
from __future__ import annotations

import itertools
import math
from typing import Callable, Sequence

import numpy as np

from .spaces import sorted_labels

DEFAULT_GUARD = 10**6


class EnumerationLimitError(RuntimeError):
    """The exact solver would enumerate more pairs than allowed."""


def subset_count(n: int, k: int) -> int:
    return sum(math.comb(n, i) for i in range(min(k, n) + 1))


def _subsets(labels: Sequence, k: int):
    for size in range(min(k, len(labels)) + 1):
        for combo in itertools.combinations(labels, size):
            yield frozenset(combo)


class MinMaxProblem:
    """Members with supports and an interval-valued evaluator.

    ``evaluate(i, C_i, D_i)`` returns ``(lower, upper)`` for member ``i`` with
    ``C_i``/``D_i`` already intersected with the member's supports.
    """

    def __init__(self, member_rows: Sequence, member_cols: Sequence,
                 evaluate: Callable, row_candidates=None, col_candidates=None):
        self.member_rows = [frozenset(r) for r in member_rows]
        self.member_cols = [frozenset(c) for c in member_cols]
        self.size = len(self.member_rows)
        if self.size == 0:
            raise ValueError("empty family")
        self._evaluate = evaluate
        self.rows = sorted_labels(row_candidates if row_candidates is not None
                                  else set().union(*self.member_rows))
        self.cols = sorted_labels(col_candidates if col_candidates is not None
                                  else set().union(*self.member_cols))
        self._cache: dict = {}
        self.evaluations = 0

    def interval(self, i: int, C: frozenset, D: frozenset) -> tuple:
        key = (i, C & self.member_rows[i], D & self.member_cols[i])
        hit = self._cache.get(key)
        if hit is None:
            self.evaluations += 1
            lo, up = self._evaluate(i, key[1], key[2])
            hit = self._cache[key] = (float(lo), float(up))
        return hit

    def upper(self, i, C, D) -> float:
        return self.interval(i, C, D)[1]

    def all_intervals(self, C, D) -> list:
        return [self.interval(i, C, D) for i in range(self.size)]

    def pair_count(self, k: int, l: int) -> int:
        return subset_count(len(self.rows), k) * subset_count(len(self.cols), l)


def exact_search(problem: MinMaxProblem, k: int, l: int, guard: int | None = DEFAULT_GUARD):
    """Exhaustive minimum of the worst member upper bound over ``|C|<=k, |D|<=l``.

    Pairs are visited by increasing size, lexicographically within a size;
    the first pair attaining the minimum wins.  A pair is abandoned as soon as
    one member reaches the incumbent value, which never changes the answer.
    """
    count = problem.pair_count(k, l)
    if guard is not None and count > guard:
        raise EnumerationLimitError(
            f"exact search would visit {count} truncation pairs (limit {guard}); "
            "use the greedy solver or raise the limit")
    Ds = list(_subsets(problem.cols, l))
    best, best_pair = math.inf, None
    killer = 0
    n = problem.size
    for C in _subsets(problem.rows, k):
        for D in Ds:
            if problem.upper(killer, C, D) >= best:
                continue
            worst = -math.inf
            for i in range(n):
                up = problem.upper(i, C, D)
                if up >= best:
                    killer = i
                    break
                if up > worst:
                    worst = up
            else:
                best, best_pair = worst, (C, D)
    return best_pair


def greedy_search(problem: MinMaxProblem, k: int, l: int):
    """Grow ``C`` and ``D`` one label at a time.

    Each step adds the label giving the smallest ``(max, sum)`` of member
    upper bounds; ties go to rows before columns, then to the smallest label.
    The best state seen along the path is returned.
    """
    n = problem.size
    by_row: dict = {}
    by_col: dict = {}
    for i in range(n):
        for r in problem.member_rows[i]:
            by_row.setdefault(r, []).append(i)
        for c in problem.member_cols[i]:
            by_col.setdefault(c, []).append(i)
    C, D = frozenset(), frozenset()
    cur = np.array([problem.upper(i, C, D) for i in range(n)])
    best_key, best_pair = (cur.max(), cur.sum()), (C, D)
    while True:
        moves = []
        if len(C) < k:
            moves += [("row", r) for r in problem.rows if r not in C]
        if len(D) < l:
            moves += [("col", c) for c in problem.cols if c not in D]
        if not moves:
            break
        step = None
        for side, lab in moves:
            C2 = C | {lab} if side == "row" else C
            D2 = D | {lab} if side == "col" else D
            affected = (by_row if side == "row" else by_col).get(lab, ())
            new = cur.copy()
            for i in affected:
                new[i] = problem.upper(i, C2, D2)
            key = (new.max(), new.sum())
            if step is None or key < step[0]:
                step = (key, C2, D2, new)
        key, C, D, cur = step
        if key < best_key:
            best_key, best_pair = key, (C, D)
    return best_pair


def solve(problem: MinMaxProblem, k: int, l: int, solver: str = "exact",
          guard: int | None = DEFAULT_GUARD):
    """Return ``(C, D, solver_used)``; ``auto`` falls back to greedy past the guard."""
    if solver == "auto":
        solver = "exact" if guard is None or problem.pair_count(k, l) <= guard else "greedy"
    if solver == "exact":
        C, D = exact_search(problem, k, l, guard)
    elif solver == "greedy":
        C, D = greedy_search(problem, k, l)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    return C, D, solver
