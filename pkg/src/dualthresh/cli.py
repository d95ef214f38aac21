"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 no feasible point
under the review budget, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .charts import compare_svg, heatmap_svg, scatter_frontier_svg
from .config import (
    FRONTIER_METRICS,
    ConfigError,
    RunConfig,
    build_distribution,
    config_echo,
    distribution_label,
    load_config,
    render_config,
)
from .distributions import REFERENCE_REGIMES, DomainError
from .metrics import ObjectiveSpec
from .frontier import (
    BudgetQuery,
    NoFeasiblePointError,
    frontier_from_sweep,
    frontier_knees,
    optimize_under_budget,
)
from .sweep import SweepResult, fmt, read_sweep_csv, run_sweep, sweep_csv_text

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_IO = 0, 1, 2, 3

FRONTIER_COLUMNS = ("review_fraction", "metric_value", "tau_l", "tau_u")
COMPARE_COLUMNS = ("label", "review_fraction", "metric_value", "tau_l", "tau_u")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    moment = (
        _dt.datetime.fromtimestamp(int(epoch), tz=_dt.timezone.utc)
        if epoch
        else _dt.datetime.now(tz=_dt.timezone.utc).replace(microsecond=0)
    )
    return moment.isoformat()


class Emitter:
    """Collects output files in memory and writes them once computation is done."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.files: dict[str, bytes] = {}

    def add(self, name: str, text: str) -> None:
        self.files[name] = text.encode("utf-8")

    def add_csv(self, name: str, header: Sequence[str], rows) -> None:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        self.add(name, buf.getvalue())

    def add_json(self, name: str, payload: dict) -> None:
        self.add(name, json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def write(self, command: str, cfg_echo: dict) -> list[Path]:
        manifest = {
            "tool": "dualthresh",
            "version": __version__,
            "command": command,
            "timestamp": _timestamp(),
            "config": cfg_echo,
            "files": [
                {"name": name, "bytes": len(data), "sha256": hashlib.sha256(data).hexdigest()}
                for name, data in sorted(self.files.items())
            ],
        }
        self.add_json(f"{command}_manifest.json", manifest)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        for name, data in self.files.items():
            path = self.out_dir / name
            path.write_bytes(data)
            written.append(path)
        return written


def _sweep(cfg: RunConfig, jobs: Optional[int], mc_runs="config", mc_filter=None) -> SweepResult:
    d = build_distribution(cfg)
    return run_sweep(
        d,
        cfg.grid,
        n=cfg.n,
        mc_runs=cfg.mc_runs if mc_runs == "config" else mc_runs,
        base_seed=cfg.base_seed,
        jobs=jobs,
        mc_filter=mc_filter,
        resample_scores=cfg.resample_scores,
        label=distribution_label(cfg),
        config_echo=config_echo(cfg),
    )


def _emit_sweep(em: Emitter, result: SweepResult, cfg: RunConfig) -> None:
    em.add("sweep.csv", sweep_csv_text(result))
    if cfg.emit_svg:
        for metric in cfg.heatmaps:
            em.add(f"heatmap_{metric}.svg", heatmap_svg(result, metric))


def _frontier_rows(frontier):
    for fp in frontier:
        t = fp.point.thresholds
        yield [fmt(fp.review_fraction), fmt(fp.metric_value), fmt(t.tau_l), fmt(t.tau_u)]


def _emit_frontier(em: Emitter, result: SweepResult, cfg: RunConfig, metric: str) -> list:
    frontier = frontier_from_sweep(result, metric)
    if not frontier:
        raise UsageError(f"{metric} is undefined at every operating point")
    em.add_csv("frontier.csv", FRONTIER_COLUMNS, _frontier_rows(frontier))
    if cfg.emit_svg:
        em.add("scatter_frontier.svg",
               scatter_frontier_svg(result, frontier, metric, frontier_knees(frontier)))
    return frontier


def cmd_sweep(cfg: RunConfig, jobs: Optional[int]) -> int:
    result = _sweep(cfg, jobs)
    em = Emitter(cfg.output_dir)
    _emit_sweep(em, result, cfg)
    em.write("sweep", config_echo(cfg))
    print(f"sweep: {len(result)} operating points -> {cfg.output_dir / 'sweep.csv'}")
    return EXIT_OK


def cmd_frontier(cfg: RunConfig, jobs: Optional[int], metric: str, from_sweep: Optional[Path]) -> int:
    result = read_sweep_csv(from_sweep) if from_sweep else _sweep(cfg, jobs)
    em = Emitter(cfg.output_dir)
    frontier = _emit_frontier(em, result, cfg, metric)
    em.write("frontier", config_echo(cfg))
    print(f"frontier: {len(frontier)} of {len(result)} points are Pareto-optimal for {metric}")
    return EXIT_OK


def cmd_optimize(cfg: RunConfig, jobs: Optional[int], from_sweep: Optional[Path]) -> int:
    if cfg.budget_fraction is None:
        raise UsageError("optimize needs a budget (objective.budget_fraction or --budget)")
    query = BudgetQuery(cfg.budget_fraction, cfg.objective)
    if from_sweep:
        result = read_sweep_csv(from_sweep)
    elif cfg.objective.kind == "f1":
        # Monte Carlo is only needed where the budget can be met; per-point
        # seeding makes the subset identical to the full sweep.
        result = _sweep(cfg, jobs, mc_filter=lambda p: p.review_fraction <= query.budget_fraction)
    else:
        result = _sweep(cfg, jobs, mc_runs=None)
    rec = optimize_under_budget(result, query)
    p = rec.point
    payload = {
        "thresholds": {"tau_l": rec.thresholds.tau_l, "tau_u": rec.thresholds.tau_u},
        "objective": {
            "kind": cfg.objective.kind,
            "w_fp": cfg.objective.w_fp,
            "w_fn": cfg.objective.w_fn,
            "w_review": cfg.objective.w_review,
        },
        "value": rec.objective_value,
        "review_fraction": rec.review_fraction,
        "budget_fraction": cfg.budget_fraction,
        "binding": rec.binding,
        "analytic_f1": p.analytic_metrics.f1,
        "analytic_precision": p.analytic_metrics.precision,
        "analytic_recall": p.analytic_metrics.recall,
        "mc_mean_f1": p.mc.mean_f1 if p.mc else None,
        "mc_std_f1": p.mc.std_f1 if p.mc else None,
    }
    em = Emitter(cfg.output_dir)
    em.add_json("recommendation.json", payload)
    em.write("optimize", config_echo(cfg))
    t = rec.thresholds
    print(f"optimize: tau_l={t.tau_l:.4f} tau_u={t.tau_u:.4f} "
          f"{cfg.objective.kind}={rec.objective_value:.6g} review={rec.review_fraction:.4f}")
    return EXIT_OK


def cmd_compare(cfgs: Sequence[RunConfig], jobs: Optional[int], metric: str, out: Path) -> int:
    if len(cfgs) < 2:
        raise UsageError("compare needs at least two configurations")
    grids = {c.grid for c in cfgs}
    if len(grids) != 1:
        raise UsageError("compare requires identical threshold grids across configurations")
    series = []
    for c in cfgs:
        result = _sweep(c, jobs)
        series.append((distribution_label(c), frontier_from_sweep(result, metric)))
    rows = []
    for label, frontier in series:
        for r in _frontier_rows(frontier):
            rows.append([label] + r)
    em = Emitter(out)
    em.add_csv("frontiers_compare.csv", COMPARE_COLUMNS, rows)
    if all(c.emit_svg for c in cfgs):
        em.add("frontiers_compare.svg", compare_svg(series, metric))
    em.write("compare", {"configs": [config_echo(c) for c in cfgs], "metric": metric})
    print(f"compare: {len(series)} frontiers -> {out / 'frontiers_compare.csv'}")
    return EXIT_OK


def cmd_scores(cfg: RunConfig, jobs: Optional[int]) -> int:
    if cfg.distribution.get("kind") != "empirical":
        raise UsageError("scores needs an empirical distribution (--scores FILE or kind = empirical)")
    result = _sweep(cfg, jobs)
    em = Emitter(cfg.output_dir)
    _emit_sweep(em, result, cfg)
    _emit_frontier(em, result, cfg, cfg.frontier_metric)
    em.write("scores", config_echo(cfg))
    print(f"scores: {len(result)} operating points -> {cfg.output_dir / 'sweep.csv'}")
    return EXIT_OK


def _common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", type=Path, default=d, help="run configuration file")
    parser.add_argument("--seed", type=int, default=d, help="base seed (unsigned 64-bit)")
    parser.add_argument("--jobs", type=int, default=d, help="worker processes for Monte Carlo")
    parser.add_argument("--out", type=Path, default=d, help="output directory")
    parser.add_argument("--no-svg", action="store_true", default=d if suppress else False,
                        help="skip SVG charts")
    parser.add_argument("--mc-runs", type=int, default=d,
                        help="Monte Carlo runs per point (0 = analytic only)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dualthresh", description=__doc__.splitlines()[0] if __doc__ else None)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--print-config", action="store_true",
                        help="print the fully resolved configuration and exit")
    _common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("sweep", help="evaluate the threshold grid")
    _common(p, suppress=True)
    p = sub.add_parser("frontier", help="Pareto frontier of a metric against review load")
    _common(p, suppress=True)
    p.add_argument("--metric", choices=FRONTIER_METRICS, default=None)
    p.add_argument("--from-sweep", type=Path, default=None, help="reuse an existing sweep.csv")
    p = sub.add_parser("optimize", help="best thresholds under a review budget")
    _common(p, suppress=True)
    p.add_argument("--budget", type=float, default=None, help="review budget as a fraction")
    p.add_argument("--objective", default=None, help="objective kind (overrides the config)")
    p.add_argument("--from-sweep", type=Path, default=None, help="reuse an existing sweep.csv")
    p = sub.add_parser("compare", help="overlay frontiers of several configurations")
    _common(p, suppress=True)
    p.add_argument("configs", nargs="*", type=Path, help="configuration files, one per regime")
    p.add_argument("--all-regimes", action="store_true",
                   help="compare the three built-in score regimes on the base configuration")
    p.add_argument("--metric", choices=FRONTIER_METRICS, default=None)
    p = sub.add_parser("scores", help="sweep and frontier over a file of observed scores")
    _common(p, suppress=True)
    p.add_argument("--scores", type=Path, default=None, help="newline-delimited score file")
    return parser


def _resolve(args, path: Optional[Path]) -> RunConfig:
    cfg = load_config(path)
    changes = {"base_seed": args.seed, "output_dir": args.out}
    if args.no_svg:
        changes["emit_svg"] = False
    if args.mc_runs is not None:
        cfg = replace(cfg, mc_runs=args.mc_runs or None)
    if getattr(args, "budget", None) is not None:
        changes["budget_fraction"] = args.budget
    if getattr(args, "objective", None) is not None:
        o = cfg.objective
        changes["objective"] = ObjectiveSpec(args.objective, o.w_fp, o.w_fn, o.w_review) \
            if args.objective == "weighted_cost" else ObjectiveSpec(args.objective)
    if getattr(args, "scores", None) is not None:
        changes["distribution"] = {"kind": "empirical", "path": str(args.scores.resolve())}
    cfg = cfg.with_overrides(**changes)
    build_distribution(cfg)
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args, args.config)
        if args.print_config:
            sys.stdout.write(render_config(cfg))
            return EXIT_OK
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        jobs = args.jobs
        if args.command == "sweep":
            return cmd_sweep(cfg, jobs)
        if args.command == "frontier":
            return cmd_frontier(cfg, jobs, args.metric or cfg.frontier_metric, args.from_sweep)
        if args.command == "optimize":
            return cmd_optimize(cfg, jobs, args.from_sweep)
        if args.command == "scores":
            return cmd_scores(cfg, jobs)
        if args.command == "compare":
            if args.all_regimes:
                cfgs = [
                    replace(cfg, distribution={"kind": "regime", "name": name})
                    for name in REFERENCE_REGIMES
                ]
            else:
                cfgs = [_resolve(args, path) for path in args.configs]
            return cmd_compare(cfgs, jobs, args.metric or cfg.frontier_metric, cfg.output_dir)
    except NoFeasiblePointError as exc:
        print(f"dualthresh: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, DomainError, UsageError, ValueError) as exc:
        print(f"dualthresh: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"dualthresh: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
