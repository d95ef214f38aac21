"""Run configuration: an INI file with flat ``key = value`` sections.

Schema (every key optional; defaults give N = 10,000, R = 100 and a 30 x 30 grid)::

    [distribution]
    kind = beta_mixture            ; beta | beta_mixture | empirical | regime
    components = 15, 2, 0.5; 2, 15, 0.5   ; (alpha, beta, weight) triples
    alpha = 15                     ; kind = beta
    beta = 2                       ; kind = beta
    path = scores.txt              ; kind = empirical, relative to the config file
    name = beta_mixture            ; kind = regime: beta_mixture | right_skewed | left_skewed
    label = Beta Mixture

    [grid]
    tau_l_count = 30
    tau_l_min = 0.01
    tau_l_max = 0.50
    tau_u_count = 30
    tau_u_min = 0.50
    tau_u_max = 0.99

    [simulation]
    n = 10000
    mc_runs = 100                  ; none or 0 disables Monte Carlo
    base_seed = 0
    resample_scores = true

    [objective]
    kind = f1                      ; expected_tp | correct_decisions | f1 | precision | recall | weighted_cost
    w_fp =
    w_fn =
    w_review =
    budget_fraction =

    [output]
    dir = results
    emit_svg = true
    heatmaps = tp, f1, precision, recall, fn, fp, review_load
    frontier_metric = f1
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from .distributions import (
    REFERENCE_REGIMES,
    REGIME_LABELS,
    Beta,
    BetaMixture,
    DomainError,
    ScoreDistribution,
    load_scores,
)
from .metrics import ObjectiveSpec
from .sweep import GridSpec


class ConfigError(ValueError):
    pass


HEATMAP_METRICS = ("tp", "f1", "precision", "recall", "fn", "fp", "review_load")
FRONTIER_METRICS = ("f1", "precision", "recall")

_KNOWN = {
    "distribution": {"kind", "components", "alpha", "beta", "path", "name", "label"},
    "grid": {f.name for f in fields(GridSpec)},
    "simulation": {"n", "mc_runs", "base_seed", "resample_scores"},
    "objective": {"kind", "w_fp", "w_fn", "w_review", "budget_fraction"},
    "output": {"dir", "emit_svg", "heatmaps", "frontier_metric"},
}


@dataclass(frozen=True)
class RunConfig:
    distribution: dict = field(
        default_factory=lambda: {"kind": "beta_mixture", "components": "15, 2, 0.5; 2, 15, 0.5"}
    )
    grid: GridSpec = field(default_factory=GridSpec)
    n: int = 10_000
    mc_runs: Optional[int] = 100
    base_seed: int = 0
    resample_scores: bool = True
    objective: ObjectiveSpec = field(default_factory=lambda: ObjectiveSpec("f1"))
    budget_fraction: Optional[float] = None
    output_dir: Path = Path("results")
    emit_svg: bool = True
    heatmaps: tuple[str, ...] = HEATMAP_METRICS
    frontier_metric: str = "f1"
    base_dir: Path = Path(".")

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("simulation.n must be at least 1")
        if self.mc_runs is not None and self.mc_runs < 0:
            raise ConfigError("simulation.mc_runs must be non-negative")
        if not 0 <= self.base_seed < 2**64:
            raise ConfigError("simulation.base_seed must be an unsigned 64-bit integer")
        if self.budget_fraction is not None and not 0.0 <= self.budget_fraction <= 1.0:
            raise ConfigError("objective.budget_fraction must lie in [0, 1]")
        bad = set(self.heatmaps) - set(HEATMAP_METRICS)
        if bad:
            raise ConfigError(f"unknown heatmap metrics {sorted(bad)}")
        if self.frontier_metric not in FRONTIER_METRICS:
            raise ConfigError(f"frontier_metric must be one of {FRONTIER_METRICS}")

    def with_overrides(self, **changes) -> "RunConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def _parse_bool(text: str, key: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def _parse_number(text: str, key: str, kind=float):
    try:
        return kind(text.strip())
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r}") from None


def parse_components(text: str) -> list[tuple[float, float, float]]:
    triples = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        parts = chunk.replace(",", " ").split()
        if len(parts) != 3:
            raise ConfigError(f"distribution.components: expected 'alpha, beta, weight', got {chunk.strip()!r}")
        triples.append(tuple(_parse_number(p, "distribution.components") for p in parts))
    if not triples:
        raise ConfigError("distribution.components is empty")
    return triples


def load_config(path: Optional[str | Path] = None) -> RunConfig:
    """Read a config file; ``None`` gives the defaults."""
    if path is None:
        return RunConfig()
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";",), interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for section in parser.sections():
        if section not in _KNOWN:
            raise ConfigError(f"{path}: unknown section [{section}]")
        unknown = set(parser[section]) - _KNOWN[section]
        if unknown:
            raise ConfigError(f"{path}: unknown keys in [{section}]: {sorted(unknown)}")

    def get(section: str, key: str) -> Optional[str]:
        if parser.has_option(section, key):
            value = parser.get(section, key).strip()
            return value if value != "" else None
        return None

    kwargs: dict = {"base_dir": path.parent}
    if parser.has_section("distribution"):
        kwargs["distribution"] = {k: v.strip() for k, v in parser["distribution"].items() if v.strip()}
    grid_kwargs = {}
    for f in fields(GridSpec):
        value = get("grid", f.name)
        if value is not None:
            grid_kwargs[f.name] = _parse_number(value, f"grid.{f.name}", int if f.name.endswith("count") else float)
    if grid_kwargs:
        try:
            kwargs["grid"] = GridSpec(**grid_kwargs)
        except ValueError as exc:
            raise ConfigError(f"grid: {exc}") from None
    if (v := get("simulation", "n")) is not None:
        kwargs["n"] = _parse_number(v, "simulation.n", int)
    if (v := get("simulation", "mc_runs")) is not None:
        runs = None if v.lower() == "none" else _parse_number(v, "simulation.mc_runs", int)
        kwargs["mc_runs"] = runs or None
    elif parser.has_option("simulation", "mc_runs"):
        kwargs["mc_runs"] = None
    if (v := get("simulation", "base_seed")) is not None:
        kwargs["base_seed"] = _parse_number(v, "simulation.base_seed", int)
    if (v := get("simulation", "resample_scores")) is not None:
        kwargs["resample_scores"] = _parse_bool(v, "simulation.resample_scores")
    if parser.has_section("objective"):
        weights = {k: get("objective", k) for k in ("w_fp", "w_fn", "w_review")}
        try:
            kwargs["objective"] = ObjectiveSpec(
                get("objective", "kind") or "f1",
                **{k: _parse_number(v, f"objective.{k}") for k, v in weights.items() if v is not None},
            )
        except ValueError as exc:
            raise ConfigError(f"objective: {exc}") from None
        if (v := get("objective", "budget_fraction")) is not None:
            kwargs["budget_fraction"] = _parse_number(v, "objective.budget_fraction")
    if (v := get("output", "dir")) is not None:
        kwargs["output_dir"] = path.parent / v
    if (v := get("output", "emit_svg")) is not None:
        kwargs["emit_svg"] = _parse_bool(v, "output.emit_svg")
    if (v := get("output", "heatmaps")) is not None:
        kwargs["heatmaps"] = tuple(m.strip() for m in v.split(",") if m.strip())
    if (v := get("output", "frontier_metric")) is not None:
        kwargs["frontier_metric"] = v
    cfg = RunConfig(**kwargs)
    build_distribution(cfg)  # fail early on a bad distribution block
    return cfg


def build_distribution(cfg: RunConfig) -> ScoreDistribution:
    spec = cfg.distribution
    kind = spec.get("kind", "beta_mixture")
    try:
        if kind == "beta":
            return Beta(_parse_number(spec.get("alpha", ""), "distribution.alpha"),
                        _parse_number(spec.get("beta", ""), "distribution.beta"))
        if kind == "beta_mixture":
            return BetaMixture.of(*parse_components(spec.get("components", "")))
        if kind == "regime":
            name = spec.get("name", "")
            if name not in REFERENCE_REGIMES:
                raise ConfigError(f"distribution.name must be one of {sorted(REFERENCE_REGIMES)}")
            return REFERENCE_REGIMES[name]
        if kind == "empirical":
            if "path" not in spec:
                raise ConfigError("distribution.path is required for kind = empirical")
            return load_scores(cfg.base_dir / spec["path"])
    except DomainError as exc:
        raise ConfigError(f"distribution: {exc}") from None
    raise ConfigError(f"distribution.kind must be beta, beta_mixture, empirical or regime, got {kind!r}")


def distribution_label(cfg: RunConfig) -> str:
    spec = cfg.distribution
    if "label" in spec:
        return spec["label"]
    if spec.get("kind") == "regime":
        return REGIME_LABELS.get(spec.get("name", ""), spec.get("name", ""))
    return build_distribution(cfg).label


def config_echo(cfg: RunConfig) -> dict:
    """Resolved configuration as recorded in manifests (no output paths or worker counts)."""
    dist = dict(sorted(cfg.distribution.items()))
    if dist.get("kind") == "empirical" and "path" in dist:
        data = (cfg.base_dir / dist["path"]).read_bytes()
        dist["sha256"] = hashlib.sha256(data).hexdigest()
    obj = cfg.objective
    return {
        "distribution": dist,
        "grid": {f.name: getattr(cfg.grid, f.name) for f in fields(GridSpec)},
        "simulation": {
            "n": cfg.n,
            "mc_runs": cfg.mc_runs,
            "base_seed": cfg.base_seed,
            "resample_scores": cfg.resample_scores,
        },
        "objective": {
            "kind": obj.kind,
            "w_fp": obj.w_fp,
            "w_fn": obj.w_fn,
            "w_review": obj.w_review,
            "budget_fraction": cfg.budget_fraction,
        },
        "output": {
            "emit_svg": cfg.emit_svg,
            "heatmaps": list(cfg.heatmaps),
            "frontier_metric": cfg.frontier_metric,
        },
    }


def render_config(cfg: RunConfig) -> str:
    """The fully resolved configuration in the config-file syntax."""
    echo = config_echo(cfg)
    echo["distribution"].pop("sha256", None)
    echo["output"] = {"dir": str(cfg.output_dir), **echo["output"]}
    lines = []
    for section, values in echo.items():
        lines.append(f"[{section}]")
        for key, value in values.items():
            if value is None:
                text = "none" if key == "mc_runs" else ""
            elif isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, list):
                text = ", ".join(value)
            else:
                text = str(value)
            lines.append(f"{key} = {text}".rstrip())
        lines.append("")
    return "\n".join(lines)
