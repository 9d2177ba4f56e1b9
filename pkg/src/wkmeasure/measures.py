"""Evaluators for the truncation formulas of weak non-compactness measures.

Every evaluator reduces to a budgeted min-max problem

    min over |C| <= k, |D| <= l   of   max over members   f(member, C, D)

solved exactly (enumeration) or greedily, and reports the value as an
interval together with the selected pair as a certificate.

For a finite family, the unbudgeted infimum over all finite ``C, D`` is always
zero (take the full supports), so budgets are the meaningful knob; infinite
families are studied through :func:`residual_curve`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

from ._search import DEFAULT_GUARD, EnumerationLimitError, MinMaxProblem, solve
from .norms import FiniteOperator
from .nuclear import DEFAULT_CONFIG, NormConfig, compress, nuclear_interval
from .spaces import TruncationPair, VectorFamily, sorted_labels

__all__ = [
    "EnumerationLimitError", "Interval", "MeasureResult", "OperatorFamily",
    "ResidualCurve", "c0_measure", "chi_sandwich", "excess_to_truncation_space",
    "family_from_dense",
    "l1_measure", "nuclear_measure", "residual_curve",
]


class Interval(NamedTuple):
    lower: float
    upper: float


@dataclass(frozen=True)
class OperatorFamily:
    """Finite family of operators sharing exponents and scalar field."""

    members: tuple
    name: str | None = None

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("a family needs at least one member")
        first = members[0]
        for T in members[1:]:
            if (T.domain_exp, T.codomain_exp) != (first.domain_exp, first.codomain_exp):
                raise ValueError("family members act between different spaces")
            if T.field != first.field:
                raise ValueError("family members have different scalar fields")
        object.__setattr__(self, "members", members)

    @property
    def domain_exp(self):
        return self.members[0].domain_exp

    @property
    def codomain_exp(self):
        return self.members[0].codomain_exp

    @property
    def field(self) -> str:
        return self.members[0].field

    @property
    def rows(self) -> tuple:
        return sorted_labels(r for T in self.members for r, _ in T.entries)

    @property
    def cols(self) -> tuple:
        return sorted_labels(c for T in self.members for _, c in T.entries)

    def scale(self, factor) -> "OperatorFamily":
        return OperatorFamily(tuple(T.scale(factor) for T in self.members), self.name)

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


@dataclass(frozen=True)
class MeasureResult:
    """Value interval of a truncation formula with its certificate.

    ``chosen_pair`` attains ``upper``: every member's residual at that pair is
    at most ``upper``.  ``per_member`` lists the member intervals there.
    For the c0 formula the minimising set depends on the member, and the
    individual sets are kept in ``member_pairs``.
    """

    lower: float
    upper: float
    chosen_pair: TruncationPair
    per_member: tuple
    solver: str
    budgets: tuple
    formula: str
    chi_bounds: Interval | None = None
    member_pairs: tuple | None = None
    evaluations: int = 0

    @property
    def value_bracket(self) -> Interval:
        return Interval(self.lower, self.upper)

    @property
    def gap(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class ResidualCurve:
    """Measure values at budgets ``(k, k)`` for ``k = 0..k_max``.

    ``carried`` lists the budgets at which the solver's own answer was worse
    than the previous point and the previous pair (still feasible) was kept.
    """

    points: tuple
    kind: str
    carried: tuple = ()

    @property
    def budgets(self) -> tuple:
        return tuple(k for k, _ in self.points)

    @property
    def uppers(self) -> tuple:
        return tuple(r.upper for _, r in self.points)

    @property
    def lowers(self) -> tuple:
        return tuple(r.lower for _, r in self.points)


# ----------------------------------------------------------------- internals

_OPERATOR_FORMULAS = {"nuclear": "residual_N", "chi": "residual_chi"}


def _operator_problem(family: OperatorFamily, mode: str, cfg: NormConfig) -> MinMaxProblem:
    members = family.members

    def evaluate(i, C, D):
        return nuclear_interval(compress(members[i], TruncationPair(C, D), mode), cfg)

    return MinMaxProblem([T.rows for T in members], [T.cols for T in members], evaluate)


def _l1_problem(family: VectorFamily) -> MinMaxProblem:
    amb = family.ambient
    tails = []
    for x in family.members:
        tails.append({k: amb.weight(k) * abs(v) for k, v in x.entries.items()})

    def evaluate(i, F, _):
        v = math.fsum(w for k, w in tails[i].items() if k not in F)
        return v, v

    return MinMaxProblem([x.support for x in family.members],
                         [() for _ in family.members], evaluate)


def _check_budget(b, name):
    if b is None:
        return None
    if int(b) != b or b < 0:
        raise ValueError(f"{name} must be a nonnegative integer, got {b!r}")
    return int(b)


def _result(problem: MinMaxProblem, C, D, solver, budgets, formula) -> MeasureResult:
    per = tuple(Interval(*iv) for iv in problem.all_intervals(C, D))
    return MeasureResult(
        lower=max(iv.lower for iv in per), upper=max(iv.upper for iv in per),
        chosen_pair=TruncationPair(C, D), per_member=per, solver=solver,
        budgets=budgets, formula=formula, evaluations=problem.evaluations)


def _solve_measure(problem, k, l, solver, guard, formula) -> MeasureResult:
    k = min(k, len(problem.rows))
    l = min(l, len(problem.cols))
    C, D, used = solve(problem, k, l, solver, guard)
    return _result(problem, C, D, used, (k, l), formula)


def _with_chi(res: MeasureResult) -> MeasureResult:
    return replace(res, chi_bounds=Interval(res.lower / 2.0, res.upper))


# ---------------------------------------------------------------- evaluators

def l1_measure(family: VectorFamily, budget: int | None = None, solver: str = "exact",
               guard: int | None = DEFAULT_GUARD) -> MeasureResult:
    """Tail formula in weighted ``l^1``: ``min_{|F|<=budget} max_x sum_{g not in F} w_g |x_g|``.

    Without a budget the infimum over all finite ``F`` is attained at the
    support union and equals 0.

    Parameters
    ----------
    family : VectorFamily
        Members in an ``ell1`` ambient (weights default to 1).
    budget : int, optional
        Maximal size of ``F``.
    solver : {"exact", "greedy", "auto"}
        Greedy removes, at each step, the coordinate giving the smallest
        worst-case tail.
    """
    if family.ambient.kind != "ell1":
        raise ValueError("l1_measure needs an ell1 ambient")
    budget = _check_budget(budget, "budget")
    problem = _l1_problem(family)
    if budget is None:
        F = frozenset(problem.rows)
        return _result(problem, F, frozenset(), "exact", (len(F), 0), "l1_tail")
    return _solve_measure(problem, budget, 0, solver, guard, "l1_tail")


def c0_measure(family: VectorFamily, budget: int) -> MeasureResult:
    """``max_x min_{|F|<=budget} sup_{g not in F} |x_g|`` on a finite family in ``c_0``.

    The inner minimum is the ``(budget+1)``-th largest modulus of ``x``.  For a
    finite family the supremum over sequences in the liminf formula is attained
    by a constant sequence: a sequence drawn from finitely many members
    repeats some member infinitely often, and its liminf is at most the value
    of that member, which a constant sequence achieves.
    """
    if family.ambient.kind != "c0":
        raise ValueError("c0_measure needs a c0 ambient")
    budget = _check_budget(budget, "budget")
    if budget is None:
        raise ValueError("c0_measure needs a budget")
    per, pairs = [], []
    for x in family.members:
        ranked = sorted(x.entries.items(), key=lambda kv: -abs(kv[1]))
        F = frozenset(k for k, _ in ranked[:budget])
        v = abs(ranked[budget][1]) if len(ranked) > budget else 0.0
        per.append(Interval(v, v))
        pairs.append(TruncationPair(F, ()))
    worst = max(range(len(per)), key=lambda i: per[i].upper)
    value = per[worst].upper
    return MeasureResult(value, value, pairs[worst], tuple(per), "closed_form",
                         (budget, 0), "c0_tail", member_pairs=tuple(pairs))


def nuclear_measure(family: OperatorFamily, budgets=(0, 0), solver: str = "exact",
                    norm_cfg: NormConfig = DEFAULT_CONFIG,
                    guard: int | None = DEFAULT_GUARD) -> MeasureResult:
    """Min-max of ``||(I - P_C) T (I - Q_D)||_N`` over ``|C|<=k``, ``|D|<=l``.

    Candidates are restricted to the row and column support unions, which
    loses nothing.  Budgets beyond the support sizes are clamped.  Selection
    uses member upper bounds; the reported interval is the max of the member
    intervals at the selected pair.

    Parameters
    ----------
    family : OperatorFamily
    budgets : (int, int)
        ``(k, l)``: sizes of the row set ``C`` and the column set ``D``.
    solver : {"exact", "greedy", "auto"}
        ``auto`` enumerates when at most ``guard`` pairs exist and falls back
        to greedy otherwise.
    norm_cfg : NormConfig
        Used for the nuclear-norm brackets when ``(q, p) != (2, 2)``.
    guard : int or None
        Limit on enumerated pairs for the exact solver; ``None`` disables it.

    Raises
    ------
    EnumerationLimitError
        ``solver="exact"`` and the enumeration exceeds ``guard``.
    """
    return _operator_measure(family, budgets, solver, norm_cfg, guard, "nuclear")


def chi_sandwich(family: OperatorFamily, budgets=(0, 0), solver: str = "exact",
                 norm_cfg: NormConfig = DEFAULT_CONFIG,
                 guard: int | None = DEFAULT_GUARD) -> MeasureResult:
    """Min-max of ``||T - P_C T Q_D||_N``; ``chi_bounds`` is ``[value/2, value]``.

    Same solver semantics as :func:`nuclear_measure`.
    """
    return _with_chi(_operator_measure(family, budgets, solver, norm_cfg, guard, "chi"))


def _operator_measure(family, budgets, solver, cfg, guard, kind, problem=None):
    k, l = (_check_budget(b, "budget") for b in budgets)
    problem = problem or _operator_problem(family, _OPERATOR_FORMULAS[kind], cfg)
    return _solve_measure(problem, k, l, solver, guard, _OPERATOR_FORMULAS[kind])


def excess_to_truncation_space(family: OperatorFamily, pair: TruncationPair,
                               norm_cfg: NormConfig = DEFAULT_CONFIG) -> Interval:
    """``max_T ||(I - P_C) T (I - Q_D)||_N`` as an interval.

    This is the excess of the family over the operators living on
    ``C x Lambda`` and ``J x D``, an upper bound for the De Blasi measure.
    """
    ivs = [nuclear_interval(compress(T, pair, "residual_N"), norm_cfg) for T in family]
    return Interval(max(a for a, _ in ivs), max(b for _, b in ivs))


def residual_curve(family, k_max: int, measure_kind: str = "nuclear",
                   solver: str = "auto", norm_cfg: NormConfig = DEFAULT_CONFIG,
                   guard: int | None = DEFAULT_GUARD) -> ResidualCurve:
    """Evaluate a measure at budgets ``(k, k)`` for ``k = 0..k_max``.

    ``measure_kind`` is ``"nuclear"`` or ``"chi"`` for operator families and
    ``"l1"`` or ``"c0"`` for vector families.  Member evaluations are shared
    between points.  The upper values are nonincreasing: when a heuristic
    answer is worse than the previous point, that point's pair is kept.
    """
    k_max = _check_budget(k_max, "k_max")
    if k_max is None:
        raise ValueError("k_max is required")
    if measure_kind in _OPERATOR_FORMULAS:
        problem = _operator_problem(family, _OPERATOR_FORMULAS[measure_kind], norm_cfg)

        def at(k):
            res = _operator_measure(family, (k, k), solver, norm_cfg, guard,
                                    measure_kind, problem)
            return _with_chi(res) if measure_kind == "chi" else res
    elif measure_kind == "l1":
        problem = _l1_problem(family)

        def at(k):
            return _solve_measure(problem, k, 0, solver, guard, "l1_tail")
    elif measure_kind == "c0":
        def at(k):
            return c0_measure(family, k)
    else:
        raise ValueError(f"unknown measure kind {measure_kind!r}")
    points, carried = [], []
    for k in range(k_max + 1):
        res = at(k)
        if points and res.upper > points[-1][1].upper:
            res = replace(points[-1][1], budgets=res.budgets)
            carried.append(k)
        points.append((k, res))
    return ResidualCurve(tuple(points), measure_kind, tuple(carried))


def family_from_dense(matrices: Sequence, domain_exp=2.0, codomain_exp=2.0,
                      name: str | None = None) -> OperatorFamily:
    """Build an :class:`OperatorFamily` from dense arrays labelled ``1..n``."""
    mats = [FiniteOperator.from_dense(M, domain_exp=domain_exp, codomain_exp=codomain_exp)
            for M in matrices]
    fld = "complex" if any(T.field == "complex" for T in mats) else "real"
    return OperatorFamily(tuple(FiniteOperator(T.entries, T.domain_exp, T.codomain_exp, fld)
                                for T in mats), name)
