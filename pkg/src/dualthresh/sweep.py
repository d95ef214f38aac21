"""Threshold-grid sweeps and the sweep CSV format."""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional

import numpy as np

from .distributions import EmpiricalScores, ScoreDistribution
from .metrics import (
    ConfusionExpectation,
    DerivedMetrics,
    MonteCarloEstimate,
    _expectation_from_parts,
    derive_metrics,
    empirical_expectation,
    monte_carlo_f1,
)
from .policy import ThresholdPair
from .rng import mix_seed


@dataclass(frozen=True)
class GridSpec:
    tau_l_count: int = 30
    tau_l_min: float = 0.01
    tau_l_max: float = 0.50
    tau_u_count: int = 30
    tau_u_min: float = 0.50
    tau_u_max: float = 0.99

    def __post_init__(self):
        for axis in ("tau_l", "tau_u"):
            count = getattr(self, f"{axis}_count")
            lo, hi = getattr(self, f"{axis}_min"), getattr(self, f"{axis}_max")
            if count < 1:
                raise ValueError(f"{axis}_count must be at least 1")
            if not (0.0 <= lo <= 1.0 and 0.0 <= hi <= 1.0):
                raise ValueError(f"{axis} range must lie in [0, 1]")
            if lo > hi:
                raise ValueError(f"{axis}_min={lo} exceeds {axis}_max={hi}")

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        """Inclusive, uniformly spaced values on each axis."""
        return (
            np.linspace(self.tau_l_min, self.tau_l_max, self.tau_l_count),
            np.linspace(self.tau_u_min, self.tau_u_max, self.tau_u_count),
        )


def _indexed_grid(g: GridSpec) -> tuple[list[tuple[int, int, int, ThresholdPair]], list[tuple[float, float]]]:
    tl, tu = g.axes()
    kept, dropped = [], []
    for i, lo in enumerate(tl):
        for j, hi in enumerate(tu):
            if lo > hi:
                dropped.append((float(lo), float(hi)))
            else:
                kept.append((i * g.tau_u_count + j, i, j, ThresholdPair(float(lo), float(hi))))
    return kept, dropped


def make_grid(g: GridSpec) -> list[ThresholdPair]:
    """Cartesian product of the two axes, row-major by tau_l; pairs with tau_l > tau_u are dropped."""
    return [t for _, _, _, t in _indexed_grid(g)[0]]


@dataclass(frozen=True)
class OperatingPoint:
    thresholds: ThresholdPair
    analytic: ConfusionExpectation
    analytic_metrics: DerivedMetrics
    mc: Optional[MonteCarloEstimate] = None
    index: int = 0
    error: Optional[str] = None

    @property
    def review_fraction(self) -> float:
        return self.analytic_metrics.review_fraction


@dataclass(frozen=True)
class SweepResult:
    points: tuple[OperatingPoint, ...]
    grid: GridSpec
    n: float
    distribution_label: str = ""
    config_echo: dict = field(default_factory=dict)
    dropped: tuple[tuple[float, float], ...] = ()

    def __len__(self) -> int:
        return len(self.points)


def _analytic_points(
    d: ScoreDistribution, g: GridSpec, cells: list, n: float
) -> list[ConfusionExpectation]:
    if isinstance(d, EmpiricalScores):
        return [empirical_expectation(d.scores, t).scaled(n) for _, _, _, t in cells]
    tl, tu = g.axes()
    mean = d.partial_expectation(0.0, 1.0)
    cdf_l, cdf_u = np.atleast_1d(d.cdf(tl)), np.atleast_1d(d.cdf(tu))
    pe_l = np.atleast_1d(d.partial_expectation(np.zeros_like(tl), tl))
    pe_u = np.atleast_1d(d.partial_expectation(np.zeros_like(tu), tu))
    out = []
    for _, i, j, _ in cells:
        tp, fp, tn, fn, review = _expectation_from_parts(
            cdf_l[i], pe_l[i], cdf_u[j], pe_u[j], mean, n
        )
        out.append(ConfusionExpectation(float(tp), float(fp), float(tn), float(fn), float(review), n))
    return out


def _mc_task(args) -> MonteCarloEstimate:
    d, t, n, runs, seed, resample = args
    return monte_carlo_f1(d, t, n, runs, seed, resample_scores=resample)


def _run_mc(tasks: list, jobs: int) -> list[MonteCarloEstimate]:
    if jobs <= 1 or len(tasks) <= 1:
        return [_mc_task(task) for task in tasks]
    chunk = max(1, len(tasks) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_mc_task, tasks, chunksize=chunk))


def run_sweep(
    d: ScoreDistribution,
    g: GridSpec,
    n: int = 10_000,
    mc_runs: Optional[int] = None,
    base_seed: int = 0,
    *,
    jobs: Optional[int] = None,
    mc_filter: Optional[Callable[[OperatingPoint], bool]] = None,
    resample_scores: bool = True,
    label: Optional[str] = None,
    config_echo: Optional[dict] = None,
) -> SweepResult:
    """Evaluate every grid point analytically and, when ``mc_runs`` is set, by Monte Carlo.

    The Monte Carlo estimate at grid index ``k`` is seeded with
    ``mix_seed(base_seed, k)``, so results do not depend on ``jobs`` or on
    which subset of points is simulated.  ``mc_filter`` restricts simulation
    to points it accepts; the others keep ``mc=None``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    cells, dropped = _indexed_grid(g)
    expectations = _analytic_points(d, g, cells, float(n))
    points = [
        OperatingPoint(t, c, derive_metrics(c), index=k)
        for (k, _, _, t), c in zip(cells, expectations)
    ]
    if mc_runs:
        chosen = [p for p in points if mc_filter is None or mc_filter(p)]
        tasks = [
            (d, p.thresholds, n, mc_runs, mix_seed(base_seed, p.index), resample_scores)
            for p in chosen
        ]
        workers = jobs if jobs is not None else (os.cpu_count() or 1)
        estimates = dict(zip((p.index for p in chosen), _run_mc(tasks, workers)))
        points = [
            OperatingPoint(p.thresholds, p.analytic, p.analytic_metrics, estimates.get(p.index), p.index)
            for p in points
        ]
    return SweepResult(
        points=tuple(points),
        grid=g,
        n=float(n),
        distribution_label=label if label is not None else getattr(d, "label", ""),
        config_echo=dict(config_echo or {}),
        dropped=tuple(dropped),
    )


SWEEP_COLUMNS = (
    "tau_l", "tau_u", "tp", "fp", "tn", "fn", "review_load", "review_fraction",
    "accuracy", "precision", "recall", "f1", "mc_mean_f1", "mc_std_f1", "mc_runs_excluded",
)


def fmt(value) -> str:
    """CSV cell text: shortest round-trip repr, empty for undefined."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return repr(float(value))


def sweep_rows(result: SweepResult) -> Iterable[list[str]]:
    for p in result.points:
        c, m, mc = p.analytic, p.analytic_metrics, p.mc
        yield [
            fmt(p.thresholds.tau_l), fmt(p.thresholds.tau_u),
            fmt(c.tp), fmt(c.fp), fmt(c.tn), fmt(c.fn), fmt(c.review_load),
            fmt(m.review_fraction), fmt(m.accuracy), fmt(m.precision), fmt(m.recall), fmt(m.f1),
            fmt(mc.mean_f1 if mc else None), fmt(mc.std_f1 if mc else None),
            fmt(mc.excluded if mc else None),
        ]


def sweep_csv_text(result: SweepResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    writer.writerows(sweep_rows(result))
    return buf.getvalue()


def write_sweep_csv(result: SweepResult, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(sweep_csv_text(result), encoding="utf-8", newline="")
    return path


def _opt(text: str) -> Optional[float]:
    return float(text) if text != "" else None


def read_sweep_csv(path: str | Path) -> SweepResult:
    """Load a sweep table written by :func:`write_sweep_csv`.

    Monte Carlo columns come back as summary-only estimates (no per-run data).
    """
    points = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SWEEP_COLUMNS:
            raise ValueError(f"{path}: unexpected sweep header {reader.fieldnames}")
        for k, row in enumerate(reader):
            t = ThresholdPair(float(row["tau_l"]), float(row["tau_u"]))
            tp, fp, tn, fn = (float(row[c]) for c in ("tp", "fp", "tn", "fn"))
            n = float(round(tp + fp + tn + fn))
            c = ConfusionExpectation(tp, fp, tn, fn, float(row["review_load"]), n)
            mc = None
            if row["mc_runs_excluded"] != "":
                mc = MonteCarloEstimate(
                    mean_f1=_opt(row["mc_mean_f1"]),
                    std_f1=_opt(row["mc_std_f1"]),
                    runs=0,
                    per_run=(),
                    base_seed=0,
                    n=int(n),
                    excluded=int(row["mc_runs_excluded"]),
                    counts=np.empty((0, 5), dtype=np.int64),
                )
            points.append(OperatingPoint(t, c, derive_metrics(c), mc, index=k))
    if not points:
        raise ValueError(f"{path}: sweep table has no rows")
    tl = sorted({p.thresholds.tau_l for p in points})
    tu = sorted({p.thresholds.tau_u for p in points})
    grid = GridSpec(len(tl), tl[0], tl[-1], len(tu), tu[0], tu[-1])
    return SweepResult(tuple(points), grid, points[0].analytic.n, distribution_label=str(path))
