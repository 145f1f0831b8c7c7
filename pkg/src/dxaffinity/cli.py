"""Command-line front end.

Three commands: `affinity` prints exact measures for parametric test
pairs, `fit` runs the nonparametric estimators on a CSV and emits
summary/curve/density files, `simulate` drives the replication harness.
All emitted files are deterministic for a fixed seed: floats are
written in shortest round-trip form, there are no timestamps, and each
run's resolved configuration (with its SHA-256) rides in a sidecar.

Exit codes: 0 success, 2 usage or configuration error, 3 data error,
4 numeric failure.
"""

from __future__ import annotations

import csv
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from .bnp import (
    McmcConfig,
    fit_ddp,
    fit_dpm,
    posterior_affinity,
    posterior_affinity_conditional,
    posterior_auc,
    posterior_mean_density,
)
from .datasets import ARM_DISEASED, ARM_NON_DISEASED, parse_dataset
from .densities import Beta, Exponential, GridDensity, Normal
from .errors import ConfigError, DataError, NumericError
from .measures import (
    LOWER_TAILED,
    UPPER_TAILED,
    TestPair,
    affinity,
    affinity_normalized,
    auc,
    ovl,
    youden,
    youden_abs,
)
from .simulate import (
    SECOND_ARG_READING,
    SECOND_ARG_SD,
    SECOND_ARG_VARIANCE,
    ReplicationPlan,
    get_scenario,
    run_study,
    write_report_csv,
    write_report_json,
)
from .splines import BSplineBasis

EXIT_DATA = 3
EXIT_NUMERIC = 4

_MIN_ROWS_UNCONDITIONAL = 10
_MIN_ROWS_CONDITIONAL = 20

_FIT_DEFAULTS = {
    "burn_in": 20_000,
    "thin": 100,
    "n_keep": 1800,
    "m_aux": 3,
    "alpha": 1.0,
    "n_fresh": 50,
    "seed": 0,
    "threads": 0,
    "density_points": 512,
    "xgrid_points": 21,
    "out": None,
}

_SIMULATE_DEFAULTS = {
    "n_per_arm": 500,
    "n_reps": 20,
    "burn_in": 2000,
    "thin": 40,
    "n_keep": 300,
    "m_aux": 3,
    "seed": 0,
    "threads": 0,
    "grid_points": 21,
    "reading": SECOND_ARG_READING,
    "out": None,
}

_INT_KEYS = {
    "burn_in",
    "thin",
    "n_keep",
    "m_aux",
    "n_fresh",
    "seed",
    "threads",
    "density_points",
    "xgrid_points",
    "n_per_arm",
    "n_reps",
    "grid_points",
}


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(fn):
    """Map library exceptions onto the documented exit codes."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DataError as exc:
            _fail(EXIT_DATA, str(exc))
        except NumericError as exc:
            _fail(EXIT_NUMERIC, str(exc))
        except ConfigError as exc:
            raise click.UsageError(str(exc)) from None

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _load_config(path, allowed: dict) -> dict:
    """Flat-key JSON config document; unknown keys are rejected."""
    if path is None:
        return {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(payload, dict):
        raise ConfigError(f"config {path} must be a flat JSON object")
    out = {}
    for key, value in payload.items():
        if key not in allowed:
            raise ConfigError(
                f"unknown config key {key!r}; allowed: {sorted(allowed)}"
            )
        if isinstance(value, dict) or isinstance(value, list):
            raise ConfigError(f"config key {key!r} must be a scalar (flat document)")
        if key in _INT_KEYS:
            if value is not None and (not isinstance(value, int) or isinstance(value, bool)):
                raise ConfigError(f"config key {key!r} must be an integer, got {value!r}")
        out[key] = value
    return out


def _resolve(defaults: dict, config: dict, flags: dict) -> dict:
    """Precedence: defaults, then config file, then explicit flags."""
    resolved = dict(defaults)
    resolved.update(config)
    resolved.update({k: v for k, v in flags.items() if v is not None})
    return resolved


def _config_sha256(resolved: dict) -> str:
    canon = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _echo_written(paths) -> None:
    for p in paths:
        click.echo(f"wrote {p}")


@click.group()
def main() -> None:
    """Affinity-based diagnostic accuracy: exact measures and
    Bayesian nonparametric estimation."""


# ---------------------------------------------------------------------------
# affinity: closed-form / quadrature measures for parametric pairs


def _parse_numbers(spec: str | None, count: int, key: str, family: str) -> tuple:
    if spec is None:
        raise ConfigError(f"{key} is required for family {family!r}")
    parts = [p.strip() for p in spec.split(",")]
    if len(parts) != count:
        raise ConfigError(
            f"{key} expects {count} comma-separated number(s) for {family!r}, got {spec!r}"
        )
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"{key} could not be parsed as numbers: {spec!r}") from None


def _load_grid_density(path, key: str) -> GridDensity:
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"{key}: cannot read {path}: {exc}") from None
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"y", "f"} <= set(reader.fieldnames):
            raise DataError(f"{key}: {path} needs columns 'y' and 'f'")
        ys, fs = [], []
        for row_num, row in enumerate(reader, start=1):
            try:
                ys.append(float(row["y"]))
                fs.append(float(row["f"]))
            except (TypeError, ValueError):
                raise DataError(f"{key}: row {row_num} of {path} is not numeric") from None
    return GridDensity(np.asarray(ys), np.asarray(fs), normalize=True)


def _affinity_pair(family: str, d_spec, nd_spec) -> TestPair:
    if family == "septrap":
        if d_spec is not None or nd_spec is not None:
            raise ConfigError("septrap is a fixed pair; --d/--nd do not apply")
        return get_scenario("SEPTRAP").pair("base")
    if family == "grid":
        if d_spec is None or nd_spec is None:
            raise ConfigError("grid needs --d and --nd pointing to CSV files (columns y,f)")
        return TestPair(
            _load_grid_density(d_spec, "--d"), _load_grid_density(nd_spec, "--nd")
        )
    makers = {
        "binormal": (2, lambda p: Normal(p[0], p[1])),
        "bibeta": (2, lambda p: Beta(p[0], p[1])),
        "biexponential": (1, lambda p: Exponential(p[0])),
    }
    count, make = makers[family]
    return TestPair(
        make(_parse_numbers(d_spec, count, "--d", family)),
        make(_parse_numbers(nd_spec, count, "--nd", family)),
    )


@main.command("affinity")
@click.argument(
    "family",
    type=click.Choice(["binormal", "bibeta", "biexponential", "septrap", "grid"]),
)
@click.option("--d", "d_spec", default=None, help="diseased-arm parameters (or CSV path for grid)")
@click.option("--nd", "nd_spec", default=None, help="non-diseased-arm parameters (or CSV path)")
@_guarded
def cmd_affinity(family: str, d_spec, nd_spec) -> None:
    """Print affinity, AUC, Youden, and overlap for a parametric pair.

    Parameter conventions: binormal mean,sd; bibeta a,b;
    biexponential rate; grid CSV files with columns y,f.
    """
    pair = _affinity_pair(family, d_spec, nd_spec)
    yi = youden(pair, UPPER_TAILED)
    yi_a = youden_abs(pair)
    out = {
        "family": family,
        "kappa": affinity(pair),
        "kappa_normalized": affinity_normalized(pair),
        "auc_upper": auc(pair, UPPER_TAILED),
        "auc_lower": auc(pair, LOWER_TAILED),
        "yi": yi.value,
        "yi_cutoff": yi.cutoff,
        "yi_abs": yi_a.value,
        "yi_abs_cutoff": yi_a.cutoff,
        "ovl": ovl(pair),
    }
    click.echo(json.dumps(out, indent=2))


# ---------------------------------------------------------------------------
# fit: nonparametric estimation on a CSV


def _derived_chain_configs(resolved: dict) -> tuple[McmcConfig, McmcConfig]:
    base = McmcConfig(
        burn_in=resolved["burn_in"],
        thin=resolved["thin"],
        n_keep=resolved["n_keep"],
        m_aux=resolved["m_aux"],
        seed=0,
    )
    seeds = np.random.SeedSequence((resolved["seed"], 1)).generate_state(2, np.uint32)
    return replace(base, seed=int(seeds[0])), replace(base, seed=int(seeds[1]))


def _fit_both_arms(fit_arm, args_d: tuple, args_nd: tuple, threads: int):
    if threads >= 2:
        with ThreadPoolExecutor(max_workers=2) as pool:
            fut_d = pool.submit(fit_arm, *args_d)
            fut_nd = pool.submit(fit_arm, *args_nd)
            return fut_d.result(), fut_nd.result()
    return fit_arm(*args_d), fit_arm(*args_nd)


def _density_grid(y: np.ndarray, n_points: int) -> np.ndarray:
    lo, hi = float(y.min()), float(y.max())
    pad = 0.5 * (hi - lo)
    return np.linspace(lo - pad, hi + pad, n_points)


def _write_curves_csv(path: Path, measures: dict, xs_original) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["measure", "x", "mean", "lo95", "hi95"])
        for name, summary in measures.items():
            xs = [""] * summary.mean.size if xs_original is None else [
                repr(float(v)) for v in xs_original
            ]
            for g in range(summary.mean.size):
                w.writerow(
                    [
                        name,
                        xs[g],
                        repr(float(summary.mean[g])),
                        repr(float(summary.lo95[g])),
                        repr(float(summary.hi95[g])),
                    ]
                )


def _write_density_csv(path: Path, grid: np.ndarray, by_arm: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["arm", "y", "f_mean"])
        for arm, values in by_arm.items():
            for y, f in zip(grid, values):
                w.writerow([arm, repr(float(y)), repr(float(f))])


@main.command("fit")
@click.argument("csv_path")
@click.option("--y-col", required=True, help="marker column name")
@click.option("--d-col", required=True, help="binary disease label column name")
@click.option("--x-col", default=None, help="optional covariate column name")
@click.option("--seed", type=int, default=None, help="master seed (default 0)")
@click.option("--threads", type=int, default=None, help="0 = one per independent work unit")
@click.option("--config", "config_path", default=None, help="flat-key JSON config file")
@click.option("--out", "out_flag", default=None, help="output stem (default: input path sans suffix)")
@_guarded
def cmd_fit(csv_path, y_col, d_col, x_col, seed, threads, config_path, out_flag) -> None:
    """Fit the nonparametric model per arm and emit summaries.

    Writes <stem>.summary.json, <stem>.curves.csv, <stem>.density.csv,
    and <stem>.resolved-config.json.
    """
    config = _load_config(config_path, _FIT_DEFAULTS)
    resolved = _resolve(
        _FIT_DEFAULTS, config, {"seed": seed, "threads": threads, "out": out_flag}
    )
    dataset = parse_dataset(csv_path, y_col, d_col, x_col)
    minimum = _MIN_ROWS_CONDITIONAL if dataset.conditional else _MIN_ROWS_UNCONDITIONAL
    records = dataset.arm_records()
    for label in (ARM_DISEASED, ARM_NON_DISEASED):
        if records[label]["n"] < minimum:
            raise DataError(
                f"{label} arm has {records[label]['n']} rows; "
                f"estimation needs at least {minimum}"
            )
    threads_n = int(resolved["threads"]) or 2  # work units: one chain per arm
    stem = resolved["out"] or str(Path(csv_path).with_suffix(""))
    resolved_doc = {
        "command": "fit",
        "input": str(csv_path),
        "y_col": y_col,
        "d_col": d_col,
        "x_col": x_col,
        **{k: resolved[k] for k in _FIT_DEFAULTS if k != "out"},
        "out": stem,
    }

    cfg_d, cfg_nd = _derived_chain_configs(resolved)
    y_d, x_d = dataset.arm(diseased=True)
    y_nd, x_nd = dataset.arm(diseased=False)
    alpha = float(resolved["alpha"])
    n_fresh = int(resolved["n_fresh"])

    if dataset.conditional:
        cmap = dataset.covariate_map()
        basis = BSplineBasis()
        draws_d, draws_nd = _fit_both_arms(
            lambda ys, xs, cfg: fit_ddp(
                ys, cmap.forward(xs), cfg, basis=basis, alpha=alpha, n_fresh=n_fresh
            ),
            (y_d, x_d, cfg_d),
            (y_nd, x_nd, cfg_nd),
            threads_n,
        )
        unit_grid = np.linspace(-1.0, 1.0, int(resolved["xgrid_points"]))
        measures = {
            "kappa": posterior_affinity_conditional(draws_d, draws_nd, unit_grid),
            "auc_upper": posterior_auc(draws_d, draws_nd, UPPER_TAILED, xgrid=unit_grid),
        }
        xs_original = cmap.inverse(unit_grid)
        density_x_original = float(np.median(dataset.x))
        density_x_unit = float(cmap.forward(density_x_original))
        resolved_doc["covariate_map"] = {"lo": cmap.lo, "hi": cmap.hi}
        resolved_doc["density_covariate"] = density_x_original
    else:
        draws_d, draws_nd = _fit_both_arms(
            lambda ys, cfg: fit_dpm(ys, cfg, alpha=alpha, n_fresh=n_fresh),
            (y_d, cfg_d),
            (y_nd, cfg_nd),
            threads_n,
        )
        measures = {
            "kappa": posterior_affinity(draws_d, draws_nd),
            "auc_upper": posterior_auc(draws_d, draws_nd, UPPER_TAILED),
        }
        xs_original = None
        density_x_unit = None

    grid = _density_grid(dataset.y, int(resolved["density_points"]))
    by_arm = {
        ARM_DISEASED: posterior_mean_density(draws_d, grid, x=density_x_unit),
        ARM_NON_DISEASED: posterior_mean_density(draws_nd, grid, x=density_x_unit),
    }

    sha = _config_sha256(resolved_doc)
    resolved_doc["config_sha256"] = sha
    summary = {
        "config_sha256": sha,
        "seed": resolved["seed"],
        "input": str(csv_path),
        "columns": dataset.columns,
        "n_diseased": dataset.n_diseased,
        "n_non_diseased": dataset.n_non_diseased,
        "arms": records,
        "measures": {name: s.to_dict() for name, s in measures.items()},
    }
    if xs_original is not None:
        summary["covariate_grid_original"] = [float(v) for v in xs_original]
        summary["density_covariate"] = resolved_doc["density_covariate"]

    paths = {
        "summary": Path(f"{stem}.summary.json"),
        "curves": Path(f"{stem}.curves.csv"),
        "density": Path(f"{stem}.density.csv"),
        "config": Path(f"{stem}.resolved-config.json"),
    }
    _write_json(paths["summary"], summary)
    _write_curves_csv(paths["curves"], measures, xs_original)
    _write_density_csv(paths["density"], grid, by_arm)
    _write_json(paths["config"], resolved_doc)
    _echo_written(paths.values())


# ---------------------------------------------------------------------------
# simulate: replication harness front end


@main.command("simulate")
@click.argument("scenario_id")
@click.option("--n", "n_per_arm", type=int, default=None, help="observations per arm (default 500)")
@click.option("--reps", type=int, default=None, help="replicates (default 20)")
@click.option("--grid", "grid_points", type=int, default=None, help="covariate grid size (default 21)")
@click.option("--seed", type=int, default=None, help="master seed (default 0)")
@click.option("--threads", type=int, default=None, help="0 = one per independent work unit")
@click.option(
    "--reading",
    type=click.Choice([SECOND_ARG_SD, SECOND_ARG_VARIANCE]),
    default=None,
    help="how to read the scenario tables' second density argument",
)
@click.option("--sub", "subs", multiple=True, help="restrict to named sub-settings")
@click.option("--config", "config_path", default=None, help="flat-key JSON config file")
@click.option("--out", "out_flag", default=None, help="output stem (default: scenario id, lower case)")
@_guarded
def cmd_simulate(
    scenario_id, n_per_arm, reps, grid_points, seed, threads, reading, subs, config_path, out_flag
) -> None:
    """Run a simulation scenario and write its replication report.

    Writes <stem>.report.json, <stem>.report.csv, and
    <stem>.resolved-config.json. Exits 0 only if every replicate
    succeeded; failed replicates are recorded in the report and the
    exit code is 4.
    """
    scenario = get_scenario(scenario_id)
    config = _load_config(config_path, _SIMULATE_DEFAULTS)
    resolved = _resolve(
        _SIMULATE_DEFAULTS,
        config,
        {
            "n_per_arm": n_per_arm,
            "n_reps": reps,
            "grid_points": grid_points,
            "seed": seed,
            "threads": threads,
            "reading": reading,
            "out": out_flag,
        },
    )
    plan = ReplicationPlan(
        n_per_arm=int(resolved["n_per_arm"]),
        n_reps=int(resolved["n_reps"]),
        mcmc=McmcConfig(
            burn_in=int(resolved["burn_in"]),
            thin=int(resolved["thin"]),
            n_keep=int(resolved["n_keep"]),
            m_aux=int(resolved["m_aux"]),
            seed=0,
        ),
        xgrid=tuple(np.linspace(-1.0, 1.0, int(resolved["grid_points"]))),
        master_seed=int(resolved["seed"]),
    )
    stem = resolved["out"] or scenario_id.lower()
    resolved_doc = {
        "command": "simulate",
        "scenario": scenario.scenario_id,
        "sub_settings": list(subs) or list(scenario.sub_settings),
        **{k: resolved[k] for k in _SIMULATE_DEFAULTS if k != "out"},
        "out": stem,
    }
    report = run_study(plan, scenario, tuple(subs) or None, resolved["reading"])
    sha = _config_sha256(resolved_doc)
    resolved_doc["config_sha256"] = sha
    paths = (
        Path(f"{stem}.report.json"),
        Path(f"{stem}.report.csv"),
        Path(f"{stem}.resolved-config.json"),
    )
    write_report_json(report, paths[0])
    write_report_csv(report, paths[1])
    _write_json(paths[2], resolved_doc)
    _echo_written(paths)
    failures = [
        f"{r.sub_setting}: {msg}" for r in report.results for msg in r.failures
    ]
    if failures:
        _fail(EXIT_NUMERIC, "replicates failed: " + "; ".join(failures))


if __name__ == "__main__":
    main()
