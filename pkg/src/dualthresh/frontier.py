"""Pareto frontiers, budget-constrained optimisation and the symmetric accuracy policy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Hashable, Optional, Sequence

import numpy as np

from .distributions import EmpiricalScores, ScoreDistribution
from .metrics import ObjectiveSpec, UndefinedMetricError, objective_value
from .policy import ThresholdPair
from .sweep import OperatingPoint, SweepResult


class NoFeasiblePointError(LookupError):
    """No grid point satisfies the review budget."""


FRACTION_METRICS = ("tp", "fp", "tn", "fn", "review_load")
RATIO_METRICS = ("accuracy", "precision", "recall", "f1", "review_fraction")


def point_metric(point: OperatingPoint, metric: str, source: str = "auto") -> Optional[float]:
    """Value of ``metric`` at ``point``.

    Count metrics are returned as fractions of ``n``.  With ``source="auto"``
    F1 comes from the Monte Carlo mean when one was computed and from the
    plug-in ratio otherwise; ``"analytic"`` and ``"mc"`` force one or the other.
    """
    if metric in FRACTION_METRICS:
        return getattr(point.analytic, metric) / point.analytic.n
    if metric not in RATIO_METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    if metric == "f1" and source != "analytic":
        if point.mc is not None:
            return point.mc.mean_f1
        if source == "mc":
            return None
    return getattr(point.analytic_metrics, metric)


@dataclass(frozen=True)
class FrontierPoint:
    point: OperatingPoint
    metric_value: float
    review_fraction: float


@dataclass(frozen=True)
class BudgetQuery:
    budget_fraction: float
    objective: ObjectiveSpec

    def __post_init__(self):
        if not 0.0 <= self.budget_fraction <= 1.0:
            raise ValueError("budget_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class Recommendation:
    thresholds: ThresholdPair
    objective_value: float
    review_fraction: float
    binding: bool
    point: Optional[OperatingPoint] = None


def pareto_frontier(items: Sequence[tuple[float, float, Hashable]]) -> list[tuple[float, float, Any]]:
    """Non-dominated ``(load, metric, key)`` triples, minimising load and maximising metric.

    ``q`` dominates ``p`` when ``load(q) <= load(p)`` and ``metric(q) >= metric(p)``
    with at least one strict.  Of several identical ``(load, metric)`` pairs only
    the one with the smallest key is kept.  Output is sorted by load and its
    metric values strictly increase.
    """
    ordered = sorted(items, key=lambda it: (it[0], -it[1], it[2]))
    front = []
    best = -np.inf
    for it in ordered:
        if it[1] > best:
            front.append(it)
            best = it[1]
    return front


def frontier_from_sweep(
    sweep: SweepResult, metric: str = "f1", source: str = "auto"
) -> list[FrontierPoint]:
    """Pareto frontier of ``metric`` against review fraction; undefined points are skipped."""
    items = []
    by_key = {}
    for p in sweep.points:
        value = point_metric(p, metric, source)
        if value is None:
            continue
        key = (p.thresholds.tau_l, p.thresholds.tau_u)
        by_key[key] = p
        items.append((p.review_fraction, value, key))
    return [FrontierPoint(by_key[key], value, load) for load, value, key in pareto_frontier(items)]


def frontier_value_at(frontier: Sequence[FrontierPoint], budget: float) -> Optional[FrontierPoint]:
    """Best frontier point whose review fraction does not exceed ``budget``."""
    feasible = [fp for fp in frontier if fp.review_fraction <= budget]
    return feasible[-1] if feasible else None


def frontier_knees(frontier: Sequence[FrontierPoint], k: int = 3) -> list[FrontierPoint]:
    """Up to ``k`` interior frontier points with the largest drop in slope."""
    if len(frontier) < 3:
        return list(frontier)
    x = np.array([fp.review_fraction for fp in frontier])
    y = np.array([fp.metric_value for fp in frontier])
    dx = np.diff(x)
    slopes = np.divide(np.diff(y), dx, out=np.full(dx.shape, np.inf), where=dx > 0)
    bend = slopes[:-1] - slopes[1:]
    bend = np.where(np.isfinite(bend), bend, -np.inf)
    order = np.argsort(-bend, kind="stable")[:k]
    return [frontier[i + 1] for i in sorted(order) if np.isfinite(bend[i])]


def _objective(point: OperatingPoint, obj: ObjectiveSpec, source: str) -> Optional[float]:
    if obj.kind == "f1" and source != "analytic" and point.mc is not None:
        return point.mc.mean_f1
    try:
        return objective_value(point.analytic, obj)
    except UndefinedMetricError:
        return None


def optimize_under_budget(
    sweep: SweepResult, q: BudgetQuery, source: str = "auto"
) -> Recommendation:
    """Best grid point whose analytic review fraction is within the budget.

    Ties go to the lower review fraction, then the lower tau_l, then the lower
    tau_u.  ``binding`` is set when some point over budget scores strictly
    better, i.e. the budget is what holds the objective back.  For the F1
    objective the Monte Carlo mean is used where available (``source="auto"``).
    """
    if not sweep.points:
        raise ValueError("empty sweep")
    best = None
    best_key = None
    over_budget_best = -np.inf
    for p in sweep.points:
        value = _objective(p, q.objective, source)
        if value is None:
            continue
        if p.review_fraction > q.budget_fraction:
            over_budget_best = max(over_budget_best, value)
            continue
        key = (-value, p.review_fraction, p.thresholds.tau_l, p.thresholds.tau_u)
        if best_key is None or key < best_key:
            best, best_key = p, key
    if best is None:
        raise NoFeasiblePointError(
            f"no grid point with a defined objective fits the review budget {q.budget_fraction:.4g}"
        )
    value = -best_key[0]
    return Recommendation(
        thresholds=best.thresholds,
        objective_value=value,
        review_fraction=best.review_fraction,
        binding=bool(over_budget_best > value),
        point=best,
    )


def symmetric_accuracy_policy(
    d: ScoreDistribution, budget_fraction: float, tol: float = 1e-10
) -> ThresholdPair:
    """Review band ``[0.5 - delta, 0.5 + delta)`` holding ``budget_fraction`` of the mass.

    ``delta`` is found by bisection on the band mass.  If the mass cannot
    reach the budget exactly (atoms in an empirical sample) the widest band not
    exceeding it is returned.
    """
    if not 0.0 <= budget_fraction <= 1.0:
        raise ValueError("budget_fraction must lie in [0, 1]")

    def mass(delta: float) -> float:
        return float(d.cdf(min(0.5 + delta, 1.0)) - d.cdf(max(0.5 - delta, 0.0)))

    if budget_fraction == 0.0:
        return ThresholdPair(0.5, 0.5)
    if mass(0.5) <= budget_fraction:
        return ThresholdPair(0.0, 1.0)
    lo, hi = 0.0, 0.5
    while hi - lo > 1e-15:
        mid = 0.5 * (lo + hi)
        m = mass(mid)
        if abs(m - budget_fraction) <= tol:
            lo = mid
            break
        if m < budget_fraction:
            lo = mid
        else:
            hi = mid
    return ThresholdPair(0.5 - lo, 0.5 + lo)


def marginal_review_value(p: float) -> float:
    """Expected accuracy gained by reviewing an instance with calibrated score ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    return min(p, 1.0 - p)


def single_threshold_f1_curve(d: ScoreDistribution, ts: np.ndarray) -> np.ndarray:
    """Plug-in F1 of the no-review policy ``(t, t)`` at each ``t``; NaN where undefined."""
    ts = np.asarray(ts, dtype=float)
    if isinstance(d, EmpiricalScores):
        k, s = d.below(ts)
        m = float(len(d))
        total = float(d.scores.sum())
        tp = (total - s) / m
        fn = s / m
        fp = ((m - k) - (total - s)) / m
    else:
        mean = d.partial_expectation(0.0, 1.0)
        cdf = np.asarray(d.cdf(ts))
        below = np.asarray(d.partial_expectation(np.zeros_like(ts), ts))
        tp = mean - below
        fn = below
        fp = np.maximum((1.0 - cdf) - tp, 0.0)
    denom = 2.0 * tp + fp + fn
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(denom > 0, 2.0 * tp / denom, np.nan)


def best_single_threshold_f1(
    d: ScoreDistribution, n: int = 1, resolution: int = 10_001
) -> tuple[float, float]:
    """Grid argmax of plug-in F1 over single-threshold policies; smallest ``t`` wins ties.

    F1 is scale-free, so ``n`` does not change the answer.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    if n < 1:
        raise ValueError("n must be at least 1")
    ts = np.linspace(0.0, 1.0, resolution)
    f1 = single_threshold_f1_curve(d, ts)
    if np.all(np.isnan(f1)):
        raise UndefinedMetricError("F1 is undefined at every threshold")
    i = int(np.nanargmax(f1))
    return float(ts[i]), float(f1[i])
