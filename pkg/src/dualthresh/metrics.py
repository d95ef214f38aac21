"""Expected confusion quantities, derived ratios and the Monte Carlo F1 estimator."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .distributions import DomainError, EmpiricalScores, ScoreDistribution
from .policy import ThresholdPair, simulate_decisions
from .rng import MASK64, make_rng, mix_seed


class UndefinedMetricError(ArithmeticError):
    """A ratio metric has a zero denominator at this operating point."""


@dataclass(frozen=True)
class ConfusionExpectation:
    """Expected counts for one operating point over ``n`` instances."""

    tp: float
    fp: float
    tn: float
    fn: float
    review_load: float
    n: float

    def scaled(self, n: float) -> "ConfusionExpectation":
        k = n / self.n
        return ConfusionExpectation(
            self.tp * k, self.fp * k, self.tn * k, self.fn * k, self.review_load * k, n
        )


@dataclass(frozen=True)
class DerivedMetrics:
    """Ratios derived from a confusion table.  ``None`` marks an undefined ratio."""

    accuracy: float
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    review_fraction: float


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Per-run outcomes of a Monte Carlo F1 estimate.

    ``counts`` has one row per run with integer columns
    ``tp, fp, tn, fn, reviewed``.  Runs whose F1 is undefined are left out of
    ``mean_f1`` and ``std_f1`` and counted in ``excluded``.
    """

    mean_f1: Optional[float]
    std_f1: Optional[float]
    runs: int
    per_run: tuple[DerivedMetrics, ...]
    base_seed: int
    n: int
    excluded: int
    counts: np.ndarray

    def _mean_of(self, attr: str) -> Optional[float]:
        vals = [getattr(m, attr) for m in self.per_run if getattr(m, attr) is not None]
        return float(np.mean(vals)) if vals else None

    @property
    def mean_precision(self) -> Optional[float]:
        return self._mean_of("precision")

    @property
    def mean_recall(self) -> Optional[float]:
        return self._mean_of("recall")

    @property
    def f1_stderr(self) -> Optional[float]:
        kept = self.runs - self.excluded
        if self.std_f1 is None or kept == 0:
            return None
        return self.std_f1 / math.sqrt(kept)

    def rates(self) -> np.ndarray:
        """Per-run fractions ``tp, fp, tn, fn, reviewed`` divided by ``n``."""
        return self.counts / float(self.n)


OBJECTIVE_KINDS = ("expected_tp", "correct_decisions", "f1", "precision", "recall", "weighted_cost")


@dataclass(frozen=True)
class ObjectiveSpec:
    """What to maximise.  ``weighted_cost`` is negated so larger is always better."""

    kind: str = "expected_tp"
    w_fp: Optional[float] = None
    w_fn: Optional[float] = None
    w_review: Optional[float] = None

    def __post_init__(self):
        if self.kind not in OBJECTIVE_KINDS:
            raise ValueError(f"unknown objective {self.kind!r}; expected one of {OBJECTIVE_KINDS}")
        weights = (self.w_fp, self.w_fn, self.w_review)
        if self.kind == "weighted_cost":
            if any(w is None for w in weights):
                raise ValueError("weighted_cost needs w_fp, w_fn and w_review")
            if any(w < 0 for w in weights):
                raise ValueError("cost weights must be non-negative")
        elif any(w is not None for w in weights):
            raise ValueError(f"cost weights only apply to weighted_cost, not {self.kind}")


def empirical_expectation(scores, t: ThresholdPair) -> ConfusionExpectation:
    """Sum the per-instance expected contributions over a sample of scores."""
    p = np.asarray(scores, dtype=float).ravel()
    if p.size == 0:
        raise DomainError("cannot form an expectation over an empty score list")
    if np.any(np.isnan(p)) or np.any((p < 0.0) | (p > 1.0)):
        raise DomainError("scores must lie in [0, 1]")
    low = p < t.tau_l
    high = p >= t.tau_u
    mid = ~low & ~high
    s_low, s_mid, s_high = (math.fsum(p[m]) for m in (low, mid, high))
    n_low, n_mid, n_high = (int(np.count_nonzero(m)) for m in (low, mid, high))
    return ConfusionExpectation(
        tp=s_mid + s_high,
        fp=n_high - s_high,
        tn=(n_low + n_mid) - (s_low + s_mid),
        fn=s_low,
        review_load=float(n_mid),
        n=float(p.size),
    )


def _expectation_from_parts(cdf_l, pe_l, cdf_u, pe_u, mean, n):
    # pe_* are partial expectations over [0, tau]; cdf_* are CDF values at tau.
    tp = np.maximum(mean - pe_l, 0.0)
    fp = np.maximum((1.0 - cdf_u) - (mean - pe_u), 0.0)
    tn = np.maximum(cdf_u - pe_u, 0.0)
    fn = pe_l
    review = np.maximum(cdf_u - cdf_l, 0.0)
    return n * tp, n * fp, n * tn, n * fn, n * review


def analytic_expectation(d: ScoreDistribution, t: ThresholdPair, n: float) -> ConfusionExpectation:
    """Expected counts for ``n`` instances drawn from ``d`` under thresholds ``t``.

    Empirical samples are summed exactly and rescaled to ``n``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if isinstance(d, EmpiricalScores):
        return empirical_expectation(d.scores, t).scaled(float(n))
    mean = d.partial_expectation(0.0, 1.0)
    parts = _expectation_from_parts(
        d.cdf(t.tau_l),
        d.partial_expectation(0.0, t.tau_l),
        d.cdf(t.tau_u),
        d.partial_expectation(0.0, t.tau_u),
        mean,
        float(n),
    )
    tp, fp, tn, fn, review = (float(v) for v in parts)
    return ConfusionExpectation(tp, fp, tn, fn, review, float(n))


def derive_metrics(c: ConfusionExpectation) -> DerivedMetrics:
    if c.n <= 0:
        raise ValueError("n must be positive")
    pos_pred = c.tp + c.fp
    pos_true = c.tp + c.fn
    f1_denom = 2.0 * c.tp + c.fp + c.fn
    return DerivedMetrics(
        accuracy=(c.tp + c.tn) / c.n,
        precision=c.tp / pos_pred if pos_pred > 0 else None,
        recall=c.tp / pos_true if pos_true > 0 else None,
        f1=2.0 * c.tp / f1_denom if f1_denom > 0 else None,
        review_fraction=c.review_load / c.n,
    )


def objective_value(c: ConfusionExpectation, obj: ObjectiveSpec) -> float:
    if obj.kind == "expected_tp":
        return c.tp
    if obj.kind == "correct_decisions":
        return c.tp + c.tn
    if obj.kind == "weighted_cost":
        return -(obj.w_fp * c.fp + obj.w_fn * c.fn + obj.w_review * c.review_load)
    value = getattr(derive_metrics(c), obj.kind)
    if value is None:
        raise UndefinedMetricError(f"{obj.kind} is undefined at this operating point")
    return value


# Stream index for the shared score sample when scores are held fixed across runs.
FIXED_SCORES_STREAM = MASK64


def run_counts(scores: np.ndarray, labels: np.ndarray, t: ThresholdPair) -> tuple[int, int, int, int, int]:
    """Integer ``tp, fp, tn, fn, reviewed`` for one simulated run."""
    pred, reviewed = simulate_decisions(scores, t, labels)
    tp = int(np.count_nonzero(pred & labels))
    fp = int(np.count_nonzero(pred & ~labels))
    fn = int(np.count_nonzero(~pred & labels))
    tn = int(scores.size) - tp - fp - fn
    return tp, fp, tn, fn, int(np.count_nonzero(reviewed))


def monte_carlo_f1(
    d: ScoreDistribution,
    t: ThresholdPair,
    n: int,
    runs: int,
    base_seed: int,
    resample_scores: bool = True,
) -> MonteCarloEstimate:
    """Estimate E[F1] by simulating ``runs`` independent batches of ``n`` instances.

    Run ``r`` uses the generator seeded with ``mix_seed(base_seed, r)``: it
    draws the scores (unless ``resample_scores`` is off, in which case one
    shared sample comes from stream ``FIXED_SCORES_STREAM``), then labels
    ``y ~ Bernoulli(p)``, then applies the decision rule with a perfect reviewer.
    """
    if n < 1 or runs < 1:
        raise ValueError("n and runs must be at least 1")
    fixed = None
    if not resample_scores:
        fixed = d.draw(make_rng(mix_seed(base_seed, FIXED_SCORES_STREAM)), n)
    counts = np.empty((runs, 5), dtype=np.int64)
    for r in range(runs):
        rng = make_rng(mix_seed(base_seed, r))
        p = d.draw(rng, n) if fixed is None else fixed
        y = rng.random(n) < p
        counts[r] = run_counts(p, y, t)
    per_run = tuple(
        derive_metrics(ConfusionExpectation(*(float(v) for v in row), float(n))) for row in counts
    )
    f1s = [m.f1 for m in per_run if m.f1 is not None]
    if f1s:
        mean_f1 = float(np.mean(f1s))
        std_f1 = float(np.std(f1s, ddof=1)) if len(f1s) > 1 else 0.0
    else:
        mean_f1 = std_f1 = None
    counts.setflags(write=False)
    return MonteCarloEstimate(
        mean_f1=mean_f1,
        std_f1=std_f1,
        runs=runs,
        per_run=per_run,
        base_seed=base_seed,
        n=n,
        excluded=runs - len(f1s),
        counts=counts,
    )
