"""Command-line interface.

Subcommands: simulate, stability, regime-map, fit, predict, validate-data.
All tabular outputs are CSV with documented headers (or JSON with
``--format json``); every artifact embeds the tool version, a hash of the
effective configuration and the seed, and contains nothing
non-deterministic, so identical invocations produce identical bytes.
Exit code 0 means every requested artifact was written.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import SERIES_NAMES, load_csv, validate
from .errors import FoodsysError, SchemaError
from .inference import (
    SAMPLED_NAMES,
    McmcConfig,
    PosteriorChains,
    derived_posteriors,
    posterior_predictive,
    sample_posterior,
    summarize,
)
from .integrator import IntegratorConfig, ModelField, integrate
from .model import (
    DimensionalParams,
    DimensionlessParams,
    InitialState,
    nondimensionalise,
)
from .stability import (
    RegimeGrid,
    classify_regime,
    critical_trade_strength,
    fixed_points,
    regime_map,
    regime_map_rows,
    sensitivity_curves,
    sensitivity_rows,
    stability_report,
)

_DIMENSIONAL_KEYS = {"a", "b", "e", "f", "g", "w", "s", "k", "h", "m", "q", "r"}
_INIT_KEYS = {"C0", "I0", "D0", "P0"}
_DIMENSIONLESS_KEYS = {"alpha", "beta", "delta", "omega", "gamma", "kappa", "mu", "rho"}


# ---------------------------------------------------------------------------
# Formatting and artifact writers
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return ""
        return repr(value)
    return str(value)


def _config_hash(payload: dict) -> str:
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _metadata(args, config_payload: dict) -> dict:
    return {
        "tool_version": __version__,
        "config_hash": _config_hash(config_payload),
        "seed": args.seed,
    }


def _write_table(path: Path, header: list[str], rows, meta: dict,
                 fmt: str, extra_meta: dict | None = None) -> None:
    meta = dict(meta)
    meta.update(extra_meta or {})
    if fmt == "json":
        payload = {
            "metadata": meta,
            "rows": [dict(zip(header, row)) for row in rows],
        }
        path = path.with_suffix(".json")
        path.write_text(json.dumps(payload, sort_keys=True, indent=2,
                                   default=_json_default) + "\n")
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for key in sorted(meta):
            fh.write(f"# {key}: {_fmt(meta[key])}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])


def _write_json(path: Path, payload: dict, meta: dict) -> None:
    document = {"metadata": meta}
    document.update(payload)
    path.write_text(json.dumps(document, sort_keys=True, indent=2,
                               default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj)!r}")


def _load_json_file(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise SchemaError(f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: expected a JSON object")
    return data


def _load_params_file(path: str):
    """A params file holds either the 12 dimensional parameters plus the 4
    initial conditions, or the 8 dimensionless groups. Unknown keys are
    rejected."""
    data = _load_json_file(path)
    keys = set(data)
    if keys == _DIMENSIONAL_KEYS | _INIT_KEYS:
        params = DimensionalParams.from_dict({k: data[k] for k in _DIMENSIONAL_KEYS})
        init = InitialState.from_dict({k: data[k] for k in _INIT_KEYS})
        return params, init
    if keys == _DIMENSIONLESS_KEYS:
        return DimensionlessParams.from_dict(data), None
    unknown = keys - (_DIMENSIONAL_KEYS | _INIT_KEYS | _DIMENSIONLESS_KEYS)
    if unknown:
        raise SchemaError(f"{path}: unknown keys {sorted(unknown)}")
    raise SchemaError(
        f"{path}: expected either all of {sorted(_DIMENSIONAL_KEYS | _INIT_KEYS)} "
        f"or all of {sorted(_DIMENSIONLESS_KEYS)}"
    )


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_simulate(args) -> list[Path]:
    loaded = _load_params_file(args.params)
    if loaded[1] is None:
        raise SchemaError("simulate needs dimensional parameters with initial "
                          "conditions (C0, I0, D0, P0)")
    params, init = loaded
    meta = _metadata(args, {
        "command": "simulate", "params": params.to_dict(), "init": init.to_dict(),
        "horizon": args.horizon, "obs_step": args.obs_step,
    })
    cfg = IntegratorConfig()
    meta["rel_tol"] = cfg.rel_tol
    meta["abs_tol"] = cfg.abs_tol

    n_steps = int(round(args.horizon / args.obs_step))
    t_dim = np.linspace(0.0, n_steps * args.obs_step, n_steps + 1)
    traj_dim = integrate(ModelField(params), init.to_array(), (0.0, t_dim[-1]),
                         t_dim, cfg)
    dp, x0 = nondimensionalise(params, init)
    t_dl = t_dim * params.a
    traj_dl = integrate(ModelField(dp), x0, (0.0, t_dl[-1]), t_dl, cfg)

    out = Path(args.out)
    written = []
    path = out / "trajectory_dimensional.csv"
    rows = [[t, *state] for t, state in zip(traj_dim.times, traj_dim.states)]
    _write_table(path, ["t", "C", "I", "D", "P"], rows, meta, args.format)
    written.append(path)
    path = out / "trajectory_dimensionless.csv"
    rows = [[t, *state] for t, state in zip(traj_dl.times, traj_dl.states)]
    _write_table(path, ["tau", "v", "x", "y", "z"], rows, meta, args.format)
    written.append(path)
    return written


def _stability_payload(dp: DimensionlessParams, tol_zero: float) -> dict:
    points = []
    for fp in fixed_points(dp):
        entry = {
            "kind": fp.kind.value,
            "state": {name: float(v) for name, v
                      in zip(("v", "x", "y", "z"), fp.state.values)},
            "exists": fp.exists,
            "hyperbolic": fp.hyperbolic,
            "reason": fp.reason,
        }
        if fp.exists:
            rep = stability_report(fp, dp, tol_zero)
            entry["stable"] = rep.stable
            if rep.eigenvalues is not None:
                entry["eigenvalues"] = [{"re": float(ev.real), "im": float(ev.imag)}
                                        for ev in rep.eigenvalues]
            entry["return_time"] = rep.return_time
        points.append(entry)

    payload: dict = {"parameters": dp.to_dict(), "fixed_points": points}
    if 0 < dp.kappa < 1:
        regime = classify_regime(dp)
        kappa_star = critical_trade_strength(dp)
        payload.update({
            "critical_ratio": regime.critical_ratio,
            "surplus_ratio": regime.surplus_ratio,
            "regime": "boundary" if regime.boundary else regime.kind.value,
            "critical_kappa": kappa_star,
            "critical_kappa_reachable": kappa_star < 1.0,
        })
    return payload


def _cmd_stability(args) -> list[Path]:
    params, init = _load_params_file(args.params)
    if init is not None:
        dp, _ = nondimensionalise(params, init)
        extra = {"dimensional_parameters": params.to_dict(), "init": init.to_dict()}
    else:
        dp, extra = params, {}
    meta = _metadata(args, {"command": "stability", "params": dp.to_dict(),
                            "tol_zero": args.tol_zero})
    payload = _stability_payload(dp, args.tol_zero)
    payload.update(extra)
    path = Path(args.out) / "stability.json"
    _write_json(path, payload, meta)
    return [path]


def _grid_from_config(data: dict) -> tuple[RegimeGrid, bool, float]:
    known = {"kappa", "alpha", "beta_values", "gamma", "omega", "delta",
             "mu", "rho", "verify_by_simulation", "horizon"}
    unknown = set(data) - known
    if unknown:
        raise SchemaError(f"regime-map config: unknown keys {sorted(unknown)}")

    def axis(spec, default):
        if spec is None:
            return default
        return np.linspace(float(spec["min"]), float(spec["max"]), int(spec["n"]))

    grid = RegimeGrid(
        kappa_values=axis(data.get("kappa"), RegimeGrid().kappa_values),
        alpha_values=axis(data.get("alpha"), RegimeGrid().alpha_values),
        beta_values=tuple(data.get("beta_values", RegimeGrid().beta_values)),
        gamma=float(data.get("gamma", 26.0)),
        omega=float(data.get("omega", 10.0)),
        delta=float(data.get("delta", 5.0)),
        mu=float(data.get("mu", 1.0)),
        rho=float(data.get("rho", 1.0)),
    )
    return grid, bool(data.get("verify_by_simulation", False)), \
        float(data.get("horizon", 500.0))


def _cmd_regime_map(args) -> list[Path]:
    data = _load_json_file(args.config) if args.config else {}
    grid, verify_cfg, horizon = _grid_from_config(data)
    verify = args.verify or verify_cfg
    meta = _metadata(args, {
        "command": "regime-map", "grid": {
            "kappa": grid.kappa_values.tolist(), "alpha": grid.alpha_values.tolist(),
            "beta_values": list(grid.beta_values), "gamma": grid.gamma,
            "omega": grid.omega, "delta": grid.delta, "mu": grid.mu, "rho": grid.rho,
        }, "verify": verify, "horizon": horizon,
    })
    cells = regime_map(grid, verify_by_simulation=verify, horizon=horizon,
                       threads=args.threads)
    header, rows = regime_map_rows(cells)
    path = Path(args.out) / "regime_map.csv"
    _write_table(path, header, rows, meta, args.format)
    return [path]


def _cmd_sensitivity(args) -> list[Path]:
    curves = sensitivity_curves(
        multipliers=np.linspace(args.mult_min, args.mult_max, args.mult_n),
        which=args.parameter,
    )
    meta = _metadata(args, {
        "command": "sensitivity",
        "multipliers": [args.mult_min, args.mult_max, args.mult_n],
        "parameter": args.parameter or "all",
    })
    header, rows = sensitivity_rows(curves)
    path = Path(args.out) / "sensitivity.csv"
    _write_table(path, header, rows, meta, args.format)
    return [path]


_CHAIN_COLUMNS = ["chain", "iteration", *SAMPLED_NAMES, "b", "g", "log_posterior"]


def _cmd_fit(args) -> list[Path]:
    dataset = load_csv(args.data)
    # Seed/thread precedence: an explicit config value wins over the flags.
    cfg_data = _load_json_file(args.config) if args.config else {}
    if "seed" not in cfg_data:
        cfg_data["seed"] = args.seed
    if "threads" not in cfg_data and args.threads > 1:
        cfg_data["threads"] = args.threads
    config = McmcConfig.from_dict(cfg_data)

    meta = _metadata(args, {"command": "fit", "config": config.to_dict()})
    chains = sample_posterior(dataset, config)

    out = Path(args.out)
    written = []
    rows = []
    for c in range(chains.n_chains):
        for i in range(chains.n_draws):
            rows.append([c, i, *chains.natural[c, i], chains.fixed_b,
                         chains.fixed_g, chains.log_post[c, i]])
    path = out / "chains.csv"
    _write_table(path, _CHAIN_COLUMNS, rows, meta, args.format,
                 extra_meta={"supplies_target": config.supplies_target,
                             "n_chains": chains.n_chains,
                             "n_draws": chains.n_draws})
    written.append(path)

    path = out / "summary.json"
    _write_json(path, {
        "parameters": summarize(chains).to_dict(),
        "acceptance": chains.acceptance,
    }, meta)
    written.append(path)

    path = out / "derived.json"
    _write_json(path, {"derived": derived_posteriors(chains).to_dict()}, meta)
    written.append(path)
    return written


def _read_chains_csv(path: str) -> PosteriorChains:
    meta: dict[str, str] = {}
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        header = None
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
                continue
            cells = next(csv.reader([line]))
            if header is None:
                header = cells
                if header != _CHAIN_COLUMNS:
                    raise SchemaError(f"{path}: unexpected chains header")
                continue
            rows.append(cells)
    if not rows:
        raise SchemaError(f"{path}: no draws")
    arr = np.array(rows, dtype=np.float64)
    chain_ids = arr[:, 0].astype(int)
    n_chains = int(chain_ids.max()) + 1
    n_draws = int(arr[:, 1].max()) + 1
    if n_chains * n_draws != arr.shape[0]:
        raise SchemaError(f"{path}: ragged chains")
    natural = np.empty((n_chains, n_draws, len(SAMPLED_NAMES)))
    log_post = np.empty((n_chains, n_draws))
    order = np.lexsort((arr[:, 1], arr[:, 0]))
    arr = arr[order]
    natural[:] = arr[:, 2:2 + len(SAMPLED_NAMES)].reshape(n_chains, n_draws, -1)
    log_post[:] = arr[:, -1].reshape(n_chains, n_draws)
    return PosteriorChains(
        names=SAMPLED_NAMES, natural=natural, log_post=log_post,
        fixed_b=float(arr[0, 2 + len(SAMPLED_NAMES)]),
        fixed_g=float(arr[0, 3 + len(SAMPLED_NAMES)]),
        seed=int(meta.get("seed", 0)),
        meta={"supplies_target": meta.get("supplies_target", "inflow")},
    )


def _cmd_predict(args) -> list[Path]:
    chains = _read_chains_csv(args.chains)
    dataset = load_csv(args.data)
    meta = _metadata(args, {"command": "predict", "n_draws": args.draws,
                            "chains": Path(args.chains).name})
    ensemble = posterior_predictive(chains, dataset, args.draws, seed=args.seed)
    bands = ensemble.bands()
    model_bands = {name: np.percentile(ensemble.model[name], (2.5, 50.0, 97.5), axis=0)
                   for name in ensemble.model if ensemble.model[name].size}

    out = Path(args.out)
    written = []
    rows = []
    for name in SERIES_NAMES:
        if name not in bands:
            continue
        idx = ensemble.obs_indices[name]
        for pos, month in enumerate(idx):
            rows.append([
                name, int(month), dataset.month_label(int(month)),
                bands[name][0, pos], bands[name][1, pos], bands[name][2, pos],
                model_bands[name][0, pos], model_bands[name][1, pos],
                model_bands[name][2, pos],
            ])
    path = out / "predictive_bands.csv"
    _write_table(path, ["series", "month_index", "month", "q2.5", "q50", "q97.5",
                        "model_q2.5", "model_q50", "model_q97.5"],
                 rows, meta, args.format,
                 extra_meta={"n_requested": ensemble.n_requested,
                             "n_skipped": ensemble.n_skipped})
    written.append(path)

    rows = []
    for name in SERIES_NAMES:
        draws = ensemble.draws.get(name)
        if draws is None or not draws.size:
            continue
        idx = ensemble.obs_indices[name]
        for d in range(draws.shape[0]):
            for pos, month in enumerate(idx):
                rows.append([d, name, int(month), draws[d, pos]])
    path = out / "predictive_draws.csv"
    _write_table(path, ["draw", "series", "month_index", "value"], rows, meta,
                 args.format)
    written.append(path)
    return written


def _cmd_validate_data(args) -> list[Path]:
    dataset = load_csv(args.data)
    report = validate(dataset)
    meta = _metadata(args, {"command": "validate-data",
                            "data": Path(args.data).name})
    for finding in report.findings:
        print(f"{finding.level}: [{finding.series}] {finding.message}")
    if not report.findings:
        print("no findings")
    path = Path(args.out) / "validation.json"
    _write_json(path, report.to_dict(), meta)
    return [path]


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="foodsys",
        description="Simulate, analyse and fit the national food-system model.",
    )
    parser.add_argument("--seed", type=int, default=0, help="global RNG seed")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="tabular output format")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker cap for grid cells / chains")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate both frames and export trajectories")
    p.add_argument("--params", required=True, help="JSON parameter file")
    p.add_argument("--horizon", type=float, default=120.0, help="months to simulate")
    p.add_argument("--obs-step", type=float, default=1.0, help="output spacing [months]")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("stability", help="fixed points, eigenvalues and ratios")
    p.add_argument("--params", required=True, help="JSON parameter file")
    p.add_argument("--tol-zero", type=float, default=1e-9)
    p.set_defaults(func=_cmd_stability)

    p = sub.add_parser("regime-map", help="sweep (kappa, alpha) regime grids")
    p.add_argument("--config", help="JSON sweep configuration")
    p.add_argument("--verify", action="store_true",
                   help="verify each cell by long-horizon simulation")
    p.set_defaults(func=_cmd_regime_map)

    p = sub.add_parser("sensitivity", help="critical-ratio sensitivity curves")
    p.add_argument("--parameter", choices=("q", "b", "e", "a", "w", "s", "k"),
                   help="restrict to one parameter (default: all)")
    p.add_argument("--mult-min", type=float, default=0.1)
    p.add_argument("--mult-max", type=float, default=3.0)
    p.add_argument("--mult-n", type=int, default=30)
    p.set_defaults(func=_cmd_sensitivity)

    p = sub.add_parser("fit", help="Bayesian fit of the model to a monthly CSV")
    p.add_argument("--data", required=True, help="monthly series CSV")
    p.add_argument("--config", help="MCMC config JSON")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("predict", help="posterior predictive bands from saved chains")
    p.add_argument("--chains", required=True, help="chains.csv from fit")
    p.add_argument("--data", required=True, help="monthly series CSV")
    p.add_argument("--draws", type=int, default=200)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("validate-data", help="schema and plausibility report")
    p.add_argument("--data", required=True, help="monthly series CSV")
    p.set_defaults(func=_cmd_validate_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = args.func(args)
    except FoodsysError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if hasattr(exc, "diagnostics") and exc.diagnostics:
            print(f"diagnostics: {json.dumps(exc.diagnostics, sort_keys=True)}",
                  file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
