"""Command-line front end.

Four subcommands: ``analyze`` (estimate, bootstrap CI, robustness values,
extreme-scenario statistic), ``benchmark`` (covariate-anchored bounds with
adjusted estimates and intervals), ``contour`` (grid of adjusted values),
and ``simulate`` (coverage and translator experiments). Options can come
from a flat key=value config file; any command-line flag of the same name
wins. Randomized commands require an explicit --seed.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .bootstrap import BootstrapConfig, adjusted_interval, draw_replicates, rv_alpha
from .estimators import Dataset, fit_wls
from .exceptions import WsensError
from .sensitivity import (
    SensitivityParams,
    adjusted_estimate,
    benchmark_bounds,
    contour_grid,
    extreme_scenario_r2,
    robustness_value_q,
    weight_comparison,
)
from .simulation import (
    DgpSpec,
    coverage_experiment,
    coverage_results_to_csv,
    translator_experiment,
)
from .weight_builders import BuilderSpec, build_weights, semi_weights
from .weighted_stats import WeightSet, effective_sample_size, rescale_weights


class ConfigError(Exception):
    """Bad user input: missing columns, malformed options, absent files."""


_WEIGHT_METHOD_ALIASES = {
    "ipw": "ipw",
    "ebal": "entropy_balance",
    "psmatch": "ps_match",
    "exact": "exact_match",
    "uniform": "uniform",
}

_MODE_ALIASES = {"reestimate": "reestimate", "fixed": "fixed_weights", "cluster": "cluster"}


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; '#' starts a comment; keys use flag names."""
    result = {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    for lineno, line in enumerate(p.read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        result[key.strip().replace("-", "_")] = value.strip()
    return result


@dataclass
class AnalysisConfig:
    """Merged configuration for the data-driven commands."""

    input: str
    outcome: str
    treatment: str
    covariates: list[str]
    cluster: str | None = None
    weights: str = "uniform"
    estimand: str = "ATE"
    centering: str = "none"
    benchmark: list[list[str]] = field(default_factory=list)
    kappa_d: list[float] = field(default_factory=lambda: [1.0])
    kappa_y: list[float] = field(default_factory=lambda: [1.0])
    q: list[float] = field(default_factory=lambda: [1.0])
    alpha: list[float] = field(default_factory=lambda: [0.05])
    bootstrap: str = "fixed_weights"
    n_boot: int = 1000
    seed: int | None = None
    out: str = "."
    match_k: int = 1
    match_replace: bool = True
    balance_tol: float = 1e-8
    contour_mode: str = "estimate"
    grid_points: int = 21
    grid_max: float = 0.5

    def validate(self, require_seed: bool = True) -> None:
        for q in self.q:
            if not 0.0 < q <= 1.0:
                raise ConfigError(f"q must lie in (0, 1], got {q}")
        for a in self.alpha:
            if not 0.0 < a < 1.0:
                raise ConfigError(f"alpha must lie in (0, 1), got {a}")
        if self.bootstrap == "cluster" and not self.cluster:
            raise ConfigError("cluster bootstrap requires --cluster")
        if require_seed and self.seed is None:
            raise ConfigError("randomized commands require an explicit --seed")


@dataclass
class LoadedTable:
    data: Dataset
    weight_source: object  # BuilderSpec or WeightSet
    expanded_from: dict  # raw column name -> list of expanded design columns


def expand_categoricals(frame: pd.DataFrame, covariates: list[str]):
    """Indicator-expand non-numeric covariates, reference level dropped.

    The reference level is the lexicographically first level; expanded
    columns are named ``col=level``. Returns the numeric design block, its
    column names, and the raw->expanded mapping.
    """
    blocks = []
    names: list[str] = []
    mapping: dict[str, list[str]] = {}
    for col in covariates:
        series = frame[col]
        if pd.api.types.is_numeric_dtype(series):
            blocks.append(series.to_numpy(dtype=float)[:, None])
            names.append(col)
            mapping[col] = [col]
            continue
        levels = sorted(series.astype(str).unique())
        mapping[col] = []
        for level in levels[1:]:
            blocks.append((series.astype(str) == level).to_numpy(dtype=float)[:, None])
            name = f"{col}={level}"
            names.append(name)
            mapping[col].append(name)
        if not mapping[col]:
            raise ConfigError(f"covariate {col!r} has a single level; nothing to encode")
    x = np.hstack(blocks) if blocks else np.empty((len(frame), 0))
    return x, names, mapping


def load_table(cfg: AnalysisConfig) -> LoadedTable:
    path = Path(cfg.input)
    if not path.exists():
        raise ConfigError(f"input file not found: {cfg.input}")
    frame = pd.read_csv(path)
    needed = [cfg.outcome, cfg.treatment] + cfg.covariates
    if cfg.cluster:
        needed.append(cfg.cluster)
    missing = [c for c in needed if c not in frame.columns]
    if missing:
        raise ConfigError(f"column(s) not in {cfg.input}: {', '.join(missing)}")
    for col in (cfg.outcome, cfg.treatment):
        if not pd.api.types.is_numeric_dtype(frame[col]):
            raise ConfigError(f"column {col!r} must be numeric")

    x, names, mapping = expand_categoricals(frame, cfg.covariates)
    cluster = frame[cfg.cluster].to_numpy() if cfg.cluster else None
    try:
        data = Dataset(
            x=x,
            d=frame[cfg.treatment].to_numpy(dtype=float),
            y=frame[cfg.outcome].to_numpy(dtype=float),
            columns=tuple(names),
            cluster=cluster,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    weight_source = parse_weight_source(cfg, frame)
    return LoadedTable(data=data, weight_source=weight_source, expanded_from=mapping)


def parse_weight_source(cfg: AnalysisConfig, frame: pd.DataFrame):
    spec = cfg.weights.strip()
    if spec.startswith("column:"):
        col = spec.split(":", 1)[1]
        if col not in frame.columns:
            raise ConfigError(f"weights column {col!r} not in {cfg.input}")
        raw = frame[col].to_numpy(dtype=float)
        return rescale_weights(raw, frame[cfg.treatment].to_numpy(dtype=float), method="external")
    if spec.startswith("file:"):
        wpath = Path(spec.split(":", 1)[1])
        if not wpath.exists():
            raise ConfigError(f"weights file not found: {wpath}")
        raw = np.loadtxt(wpath, ndmin=1)
        return rescale_weights(raw, frame[cfg.treatment].to_numpy(dtype=float), method="external")
    if spec not in _WEIGHT_METHOD_ALIASES:
        raise ConfigError(
            f"unknown weights source {spec!r}; expected one of "
            f"{sorted(_WEIGHT_METHOD_ALIASES)} or column:NAME or file:PATH"
        )
    method = _WEIGHT_METHOD_ALIASES[spec]
    estimand = cfg.estimand if method != "uniform" else "ATT"
    return BuilderSpec(
        method=method,
        estimand=estimand,
        match_ratio=cfg.match_k,
        with_replacement=cfg.match_replace,
        balance_tol=cfg.balance_tol,
    )


def resolve_benchmark(names: list[str], mapping: dict) -> list[str]:
    """Map raw column names to the expanded design columns they produced."""
    out: list[str] = []
    for name in names:
        if name in mapping:
            out.extend(mapping[name])
        else:
            hits = [c for cols in mapping.values() for c in cols if c == name]
            if not hits:
                raise ConfigError(f"benchmark column {name!r} not among the covariates")
            out.extend(hits)
    return out


def _centering(cfg: AnalysisConfig) -> str:
    if cfg.centering == "none":
        return "none"
    if cfg.centering == "lin":
        return cfg.estimand
    raise ConfigError(f"unknown centering {cfg.centering!r}; expected none or lin")


def _full_weights(table: LoadedTable) -> WeightSet:
    if isinstance(table.weight_source, WeightSet):
        return table.weight_source
    return build_weights(table.weight_source, table.data)


def _bootstrap_config(cfg: AnalysisConfig) -> BootstrapConfig:
    return BootstrapConfig(
        n_replicates=cfg.n_boot,
        mode=cfg.bootstrap,
        alpha=cfg.alpha[0],
        seed=cfg.seed,
    )


def cmd_analyze(cfg: AnalysisConfig) -> None:
    cfg.validate()
    table = load_table(cfg)
    centering = _centering(cfg)
    w = _full_weights(table)
    fit = fit_wls(table.data, w, centering=centering)
    reps = draw_replicates(table.data, table.weight_source, centering, _bootstrap_config(cfg))

    base = adjusted_interval(reps, SensitivityParams(0.0, 0.0), alpha=cfg.alpha[0])
    rvs = {q: robustness_value_q(fit, q) for q in cfg.q}
    rv_alphas = {
        a: rv_alpha(table.data, table.weight_source, centering, a, replicates=reps)
        for a in cfg.alpha
    }
    extreme = extreme_scenario_r2(fit)
    ess = effective_sample_size(w, table.data.d)

    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = [
        ("estimate", fit.tau_hat),
        ("ci_low", base.ci[0]),
        ("ci_high", base.ci[1]),
        ("se", base.se),
        ("extreme_r2_yd", extreme),
        ("n", table.data.n),
        ("ess_overall", ess.overall),
        ("ess_control", ess.by_group[0]),
        ("ess_treated", ess.by_group[1]),
        ("bootstrap_failures", reps.failures),
    ]
    rows += [(f"rv_q_{_fmt(q)}", rv) for q, rv in rvs.items()]
    rows += [(f"rv_alpha_{_fmt(a)}", rv) for a, rv in rv_alphas.items()]
    with open(outdir / "report.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["key", "value"])
        for key, value in rows:
            writer.writerow([key, _fmt(float(value))])
    reps.save_csv(outdir / "replicates.csv")

    q0, a0 = cfg.q[0], cfg.alpha[0]
    lines = [
        "Weighted regression sensitivity report",
        "=" * 70,
        f"input: {cfg.input}   n={table.data.n}   weights={cfg.weights}"
        f"   estimand={cfg.estimand}   centering={cfg.centering}",
        f"bootstrap: mode={cfg.bootstrap}  B={cfg.n_boot}  seed={cfg.seed}"
        f"  failures={reps.failures}",
        "",
        f"{'Estimate':>10}  {'95% CI':>22}  {'RV(q=' + _fmt(q0) + ')':>12}  "
        f"{'RV(a=' + _fmt(a0) + ')':>12}  {'R2w(Y~D|X)':>12}",
        f"{fit.tau_hat:>10.4f}  ({base.ci[0]:.4f}, {base.ci[1]:.4f})"
        f"{'':>2}  {rvs[q0]:>12.4f}  {rv_alphas[a0]:>12.4f}  {extreme:>12.4f}",
        "",
        f"bootstrap SE: {base.se:.4f}",
        f"effective sample size: overall {ess.overall:.1f}"
        f" (control {ess.by_group[0]:.1f}, treated {ess.by_group[1]:.1f})",
    ]
    for q, rv in rvs.items():
        lines.append(f"RV at q={_fmt(q)}: {rv:.4f}")
    for a, rv in rv_alphas.items():
        lines.append(f"RV at alpha={_fmt(a)}: {rv:.4f}")
    (outdir / "report.txt").write_text("\n".join(lines) + "\n")
    print(f"wrote {outdir / 'report.txt'}, report.csv, replicates.csv")


def cmd_benchmark(cfg: AnalysisConfig) -> None:
    cfg.validate()
    if not cfg.benchmark:
        raise ConfigError("benchmark command requires at least one --benchmark column set")
    table = load_table(cfg)
    if isinstance(table.weight_source, WeightSet):
        raise ConfigError("benchmarking requires builder-based weights (semi-weights must be rebuildable)")
    centering = _centering(cfg)
    w = _full_weights(table)
    fit = fit_wls(table.data, w, centering=centering)
    reps = draw_replicates(table.data, table.weight_source, centering, _bootstrap_config(cfg))

    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    header = [
        "benchmark", "kappa_d", "kappa_y", "bound_r2_y", "bound_r2_d", "eta_sq",
        "adjusted_estimate", "adjusted_ci_low", "adjusted_ci_high", "adjusted_se",
        "weight_corr", "weight_corr_control", "weight_corr_treated",
        "ess_full", "ess_semi", "r2_semi_d_xj", "r2_full_d_xj", "r2_y_xj", "r2_z_xj",
        "bound_clamped", "error",
    ]
    out_rows = []
    for raw_cols in cfg.benchmark:
        cols = resolve_benchmark(raw_cols, table.expanded_from)
        w_semi = semi_weights(table.weight_source, table.data, cols)
        try:
            comparison = weight_comparison(w, w_semi, table.data.d)
        except ValueError:
            comparison = None
        for kd in cfg.kappa_d:
            for ky in cfg.kappa_y:
                row = {"benchmark": "+".join(raw_cols), "kappa_d": _fmt(kd), "kappa_y": _fmt(ky)}
                try:
                    bound = benchmark_bounds(
                        fit, table.data, w, w_semi, cols, kappa_d=kd, kappa_y=ky
                    )
                except WsensError as exc:
                    row["error"] = str(exc)
                    out_rows.append(row)
                    continue
                params = bound.params(sign=1 if fit.tau_hat >= 0 else -1)
                interval = adjusted_interval(reps, params, alpha=cfg.alpha[0])
                adj = adjusted_estimate(params, fit)
                row.update(
                    bound_r2_y=_fmt(bound.bound_r2_y),
                    bound_r2_d=_fmt(bound.bound_r2_d),
                    eta_sq=_fmt(bound.eta_sq),
                    adjusted_estimate=_fmt(adj),
                    adjusted_ci_low=_fmt(interval.ci[0]),
                    adjusted_ci_high=_fmt(interval.ci[1]),
                    adjusted_se=_fmt(interval.se),
                    r2_semi_d_xj=_fmt(bound.r2_semi_d_xj),
                    r2_full_d_xj=_fmt(bound.r2_full_d_xj),
                    r2_y_xj=_fmt(bound.r2_y_xj),
                    r2_z_xj=_fmt(bound.r2_z_xj),
                    bound_clamped=str(bound.bound_r2_y_clamped).lower(),
                )
                if comparison is not None:
                    row.update(
                        weight_corr=_fmt(comparison["correlation"]),
                        weight_corr_control=_fmt(comparison["correlation_by_group"][0]),
                        weight_corr_treated=_fmt(comparison["correlation_by_group"][1]),
                        ess_full=_fmt(comparison["ess_full"].overall),
                        ess_semi=_fmt(comparison["ess_semi"].overall),
                    )
                out_rows.append(row)
    with open(outdir / "bounds.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=header)
        writer.writeheader()
        for row in out_rows:
            writer.writerow(row)
    print(f"wrote {outdir / 'bounds.csv'} ({len(out_rows)} rows)")


def cmd_contour(cfg: AnalysisConfig) -> None:
    # the estimate-mode grid is deterministic; only CI modes resample
    cfg.validate(require_seed=cfg.contour_mode != "estimate")
    table = load_table(cfg)
    centering = _centering(cfg)
    w = _full_weights(table)
    fit = fit_wls(table.data, w, centering=centering)
    axis = np.linspace(0.0, cfg.grid_max, cfg.grid_points, endpoint=False)
    reps = None
    if cfg.contour_mode in ("lower_ci", "upper_ci"):
        reps = draw_replicates(table.data, table.weight_source, centering, _bootstrap_config(cfg))
    grid = contour_grid(
        fit,
        r2_d_axis=axis,
        r2_y_axis=axis,
        mode=cfg.contour_mode,
        replicates=reps,
        alpha=cfg.alpha[0],
    )
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    grid.to_csv(outdir / "contour.csv")
    print(f"wrote {outdir / 'contour.csv'} ({cfg.grid_points}x{cfg.grid_points} cells)")


def cmd_simulate(args: argparse.Namespace, file_cfg: dict) -> None:
    get = _merged_getter(args, file_cfg)
    dgp = get("dgp", None)
    if dgp not in ("dgp1", "dgp2", "dgp3"):
        raise ConfigError("simulate requires --dgp one of dgp1, dgp2, dgp3")
    seed = get("seed", None, int)
    if seed is None:
        raise ConfigError("randomized commands require an explicit --seed")
    outdir = Path(get("out", ".", str))
    outdir.mkdir(parents=True, exist_ok=True)

    if dgp == "dgp3":
        n = get("n", 10000, int)
        result = translator_experiment(n=n, seed=seed)
        with open(outdir / "translator.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "seed"] + list(result))
            writer.writerow([n, seed] + [_fmt(v) for v in result.values()])
        print(f"wrote {outdir / 'translator.csv'}: translator={result['translator']:.3f}")
        return

    method = get("method", "ipw", str)
    if method not in _WEIGHT_METHOD_ALIASES:
        raise ConfigError(f"unknown simulate method {method!r}")
    estimand = get("estimand", "ate", str).upper()
    mode = get("mode", "fixed", str)
    if mode not in _MODE_ALIASES:
        raise ConfigError(f"unknown bootstrap mode {mode!r}")
    r2_d = get("r2_d", None, float)
    r2_y = get("r2_y", None, float)
    if r2_d is None or r2_y is None:
        raise ConfigError("simulate coverage requires --r2-d and --r2-y (plim parameter values)")
    spec = DgpSpec(
        kind=dgp,
        n=get("n", 500, int),
        theta_sq=get("theta_sq", 0.0, float),
        seed=seed,
        n_groups=get("n_groups", 50, int),
        group_size=get("group_size", 100, int),
    )
    builder = BuilderSpec(
        method=_WEIGHT_METHOD_ALIASES[method], estimand=estimand, columns=("x1",)
    )
    result = coverage_experiment(
        spec,
        builder,
        mode=_MODE_ALIASES[mode],
        params=SensitivityParams(r2_d=r2_d, r2_y=r2_y),
        iterations=get("iterations", 200, int),
        n_boot=get("B", 400, int),
        master_seed=seed,
    )
    coverage_results_to_csv([result], outdir / "coverage.csv")
    print(f"wrote {outdir / 'coverage.csv'}: coverage={result.coverage:.3f}")


def _merged_getter(args: argparse.Namespace, file_cfg: dict):
    def get(key: str, default, cast=str):
        cli_val = getattr(args, key, None)
        if cli_val is not None:
            return cli_val
        if key in file_cfg:
            raw = file_cfg[key]
            if cast is bool:
                return raw.strip().lower() in ("1", "true", "yes", "on")
            return cast(raw)
        return default

    return get


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def _normalize_mode(mode: str) -> str:
    if mode in _MODE_ALIASES:
        return _MODE_ALIASES[mode]
    if mode in _MODE_ALIASES.values():
        return mode
    raise ConfigError(f"unknown bootstrap mode {mode!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wsens",
        description="Sensitivity analysis for weighted-regression causal estimates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="flat key=value config file; flags override")
        p.add_argument("--input", help="input CSV (headered, UTF-8)")
        p.add_argument("--outcome")
        p.add_argument("--treatment")
        p.add_argument("--covariates", help="comma-separated covariate columns")
        p.add_argument("--cluster")
        p.add_argument(
            "--weights",
            help="ipw | ebal | psmatch | exact | uniform | column:NAME | file:PATH",
        )
        p.add_argument("--estimand", choices=["ate", "att", "atc"])
        p.add_argument("--centering", choices=["none", "lin"])
        p.add_argument("--bootstrap", choices=["reestimate", "fixed", "cluster"])
        p.add_argument("--B", type=int, dest="n_boot")
        p.add_argument("--seed", type=int)
        p.add_argument("--q", help="comma-separated q values")
        p.add_argument("--alpha", help="comma-separated alpha values")
        p.add_argument("--match-k", type=int, dest="match_k")
        p.add_argument("--match-no-replace", action="store_true", dest="match_no_replace")
        p.add_argument("--balance-tol", type=float, dest="balance_tol")
        p.add_argument("--out", help="output directory")

    p_analyze = sub.add_parser("analyze", help="estimate, CI, robustness values")
    add_common(p_analyze)

    p_bench = sub.add_parser("benchmark", help="covariate-anchored bounds")
    add_common(p_bench)
    p_bench.add_argument(
        "--benchmark",
        action="append",
        help="comma-separated benchmark columns; repeatable",
    )
    p_bench.add_argument("--kappa-d", dest="kappa_d", help="comma-separated values")
    p_bench.add_argument("--kappa-y", dest="kappa_y", help="comma-separated values")

    p_contour = sub.add_parser("contour", help="adjusted-estimate grid")
    add_common(p_contour)
    p_contour.add_argument(
        "--mode", dest="contour_mode", choices=["estimate", "lower_ci", "upper_ci"]
    )
    p_contour.add_argument("--grid-points", type=int, dest="grid_points")
    p_contour.add_argument("--grid-max", type=float, dest="grid_max")

    p_sim = sub.add_parser("simulate", help="coverage and translator experiments")
    p_sim.add_argument("--config")
    p_sim.add_argument("--dgp", choices=["dgp1", "dgp2", "dgp3"])
    p_sim.add_argument("--method", choices=sorted(_WEIGHT_METHOD_ALIASES))
    p_sim.add_argument("--estimand", choices=["ate", "att", "atc"])
    p_sim.add_argument("--mode", choices=["reestimate", "fixed", "cluster"])
    p_sim.add_argument("--theta-sq", type=float, dest="theta_sq")
    p_sim.add_argument("--n", type=int)
    p_sim.add_argument("--n-groups", type=int, dest="n_groups")
    p_sim.add_argument("--group-size", type=int, dest="group_size")
    p_sim.add_argument("--iterations", type=int)
    p_sim.add_argument("--B", type=int)
    p_sim.add_argument("--r2-d", type=float, dest="r2_d")
    p_sim.add_argument("--r2-y", type=float, dest="r2_y")
    p_sim.add_argument("--seed", type=int)
    p_sim.add_argument("--out")
    return parser


def build_analysis_config(args: argparse.Namespace, file_cfg: dict) -> AnalysisConfig:
    get = _merged_getter(args, file_cfg)
    required = {}
    for key in ("input", "outcome", "treatment", "covariates"):
        value = get(key, None)
        if value is None:
            raise ConfigError(f"missing required option --{key.replace('_', '-')}")
        required[key] = value

    benchmark_raw = getattr(args, "benchmark", None)
    if benchmark_raw is None and "benchmark" in file_cfg:
        benchmark_raw = [file_cfg["benchmark"]]
    benchmark = [[c.strip() for c in b.split(",") if c.strip()] for b in (benchmark_raw or [])]

    match_replace = True
    if getattr(args, "match_no_replace", False):
        match_replace = False
    elif "match_replace" in file_cfg:
        match_replace = file_cfg["match_replace"].strip().lower() in ("1", "true", "yes", "on")

    cfg = AnalysisConfig(
        input=required["input"],
        outcome=required["outcome"],
        treatment=required["treatment"],
        covariates=[c.strip() for c in required["covariates"].split(",") if c.strip()],
        cluster=get("cluster", None),
        weights=get("weights", "uniform"),
        estimand=get("estimand", "ate", str).upper(),
        centering=get("centering", "none"),
        benchmark=benchmark,
        kappa_d=_float_list(get("kappa_d", "1")) or [1.0],
        kappa_y=_float_list(get("kappa_y", "1")) or [1.0],
        q=_float_list(get("q", "1")) or [1.0],
        alpha=_float_list(get("alpha", "0.05")) or [0.05],
        bootstrap=_normalize_mode(get("bootstrap", "fixed", str)),
        n_boot=get("n_boot", 1000, int),
        seed=get("seed", None, int),
        out=get("out", ".", str),
        match_k=get("match_k", 1, int),
        match_replace=match_replace,
        balance_tol=get("balance_tol", 1e-8, float),
        contour_mode=get("contour_mode", "estimate", str),
        grid_points=get("grid_points", 21, int),
        grid_max=get("grid_max", 0.5, float),
    )
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        file_cfg = read_config_file(args.config) if getattr(args, "config", None) else {}
        if args.command == "simulate":
            cmd_simulate(args, file_cfg)
        else:
            cfg = build_analysis_config(args, file_cfg)
            if args.command == "analyze":
                cmd_analyze(cfg)
            elif args.command == "benchmark":
                cmd_benchmark(cfg)
            else:
                cmd_contour(cfg)
    except (ConfigError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except WsensError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        # malformed option values reaching library validation (config files
        # bypass argparse choices)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
