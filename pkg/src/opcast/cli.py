"""Command-line interface.

Commands: fit, forecast, evaluate, simulate, inspect. Options can come
from a JSON config file (--config) with command-line flags taking
precedence. Exit codes: 0 success, 1 configuration problem, 2 data
problem, 3 numeric or model-state problem.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .clustering import oee_band
from .errors import (ConfigurationError, DataError, ForecastUnavailableError,
                     NumericError, OpcastError)
from .features import (FeatureConfig, assemble_next_features,
                       classification_vector, default_feature_config)
from .harness import DEFAULT_MODELS, emit_report, leave_one_week_out
from .model import IoHmmModel, ModelConfig
from .records import parse_dataset, write_dataset
from .synthetic import SyntheticSpec, generate_synthetic

_CONFIG_KEYS = {
    "lambda_u": float, "lambda_v": float, "lags": int, "threshold": float,
    "kmax": int, "kmin": int, "seed": int, "responses": list, "models": list,
    "allow_cold_start": bool, "z_spec": list, "w_spec": list, "t_spec": list,
    "max_lags": int,
}

_DEFAULTS = {
    "lambda_u": 0.99, "lambda_v": 0.95, "lags": 1, "threshold": 0.8,
    "kmax": 12, "kmin": 2, "seed": 0, "responses": ["OpT", "NOpT"],
    "models": list(DEFAULT_MODELS), "allow_cold_start": False,
    "z_spec": None, "w_spec": None, "t_spec": None, "max_lags": 5,
}


class _Parser(argparse.ArgumentParser):
    # usage mistakes are configuration problems, not argparse's exit code 2
    def error(self, message):
        raise ConfigurationError(message)


def _load_config_file(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigurationError("config file must hold a JSON object")
    unknown = set(doc) - set(_CONFIG_KEYS)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    return doc


def _settings(args) -> dict:
    """Defaults, overridden by the config file, overridden by flags."""
    merged = dict(_DEFAULTS)
    if getattr(args, "config", None):
        merged.update(_load_config_file(args.config))
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    return merged


def _load_records(path):
    result = parse_dataset(path)
    if result.errors:
        print(f"warning: skipped {len(result.errors)} unparseable rows "
              f"(first: line {result.errors[0].line}: {result.errors[0].message})",
              file=sys.stderr)
    if not result.records:
        raise DataError("dataset contains no usable records")
    return result.records


def _feature_config(records, cfg) -> FeatureConfig:
    if cfg["z_spec"] or cfg["w_spec"] or cfg["t_spec"]:
        base = default_feature_config(records, q=cfg["lags"],
                                      responses=tuple(cfg["responses"]),
                                      max_lags=cfg["max_lags"])
        return FeatureConfig(
            response_names=tuple(cfg["responses"]),
            z_spec=tuple(cfg["z_spec"] or base.z_spec),
            w_spec=tuple(cfg["w_spec"] or base.w_spec),
            t_spec=tuple(cfg["t_spec"] or base.t_spec),
            q=cfg["lags"], max_lags=cfg["max_lags"])
    return default_feature_config(records, q=cfg["lags"],
                                  responses=tuple(cfg["responses"]),
                                  max_lags=cfg["max_lags"])


def _model_config(records, cfg) -> ModelConfig:
    return ModelConfig(features=_feature_config(records, cfg),
                       lambda_u=cfg["lambda_u"], lambda_v=cfg["lambda_v"],
                       allow_cold_start=cfg["allow_cold_start"])


def cmd_fit(args) -> int:
    cfg = _settings(args)
    records = _load_records(args.data)
    model = IoHmmModel(_model_config(records, cfg))
    model.fit(records, seed=cfg["seed"], threshold=cfg["threshold"],
              k_min=cfg["kmin"], k_max=cfg["kmax"])
    model.save(args.out)
    clusters = model.clusters
    print(f"fitted on {len(records)} records")
    print(f"states: K={clusters.K} share={clusters.gof:.4f} "
          f"threshold_reached={clusters.reached_threshold}")
    print(f"patterns: {len(model.params)}")
    for key in sorted(model.params):
        st = model.params[key]
        print(f"  {key}: gamma_u={st.u.gamma:.4f} gamma_v={st.v.gamma:.4f} "
              f"updates={st.u.n_updates}")
    print(f"snapshot written to {args.out}")
    return 0


def cmd_forecast(args) -> int:
    model = IoHmmModel.load(args.snapshot)
    records = _load_records(args.data)
    if args.next_values:
        try:
            overrides = json.loads(args.next_values)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"--next-values is not valid JSON: {exc}") from exc
    else:
        overrides = {}
    fc = model.config.features
    z, w, begins = assemble_next_features(records, fc, args.shift,
                                          ics=args.ics, new_order=args.new_order,
                                          overrides=overrides)
    t_prev = classification_vector(records[-1], fc)
    result = model.forecast_step(t_prev, z, w, begins)
    doc = result.to_dict(fc.response_names)
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.update_snapshot:
        model.save(args.snapshot)
    return 0


def cmd_evaluate(args) -> int:
    cfg = _settings(args)
    records = _load_records(args.data)
    models = args.models.split(",") if args.models else list(cfg["models"])
    base = _model_config(records, {**cfg, "allow_cold_start": True})
    report = leave_one_week_out(records, model_names=models, base=base,
                                seed=cfg["seed"], threshold=cfg["threshold"],
                                k_max=cfg["kmax"])
    with open(args.out, "w") as fh:
        fh.write(emit_report(report, "csv"))
    if args.summary_out:
        with open(args.summary_out, "w") as fh:
            fh.write(emit_report(report, "structured-text"))
    print(f"folds: {' '.join(report.folds)}")
    print(f"{'model':<16} {'mae':>8} {'rmse':>8} {'covg':>6}")
    for name in models:
        rows = [r for r in report.rows if r.model == name]
        line = f"{name:<16}"
        for metric in ("mae", "rmse", "covg"):
            vals = [(r.value, r.count) for r in rows if r.metric == metric]
            if vals:
                total = sum(c for _, c in vals)
                mean = sum(v * c for v, c in vals) / total
                line += f" {mean:8.4f}" if metric != "covg" else f" {mean:6.3f}"
            else:
                line += "        -" if metric != "covg" else "      -"
        print(line)
    print(f"report written to {args.out}")
    return 0


def cmd_simulate(args) -> int:
    try:
        with open(args.spec) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read spec file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"spec file is not valid JSON: {exc}") from exc
    if args.seed is not None:
        doc["seed"] = args.seed
    spec = SyntheticSpec.from_dict(doc)
    records = generate_synthetic(spec)
    write_dataset(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def cmd_inspect(args) -> int:
    model = IoHmmModel.load(args.snapshot)
    fc = model.config.features
    print(f"responses: {', '.join(fc.response_names)}  lags: {fc.q}")
    print(f"lambda_u={model.config.lambda_u} lambda_v={model.config.lambda_v}")
    if model.clusters is None:
        print("no cluster state fitted")
        return 0
    clusters = model.clusters
    print(f"states: K={clusters.K} share={clusters.gof:.4f} "
          f"threshold_reached={clusters.reached_threshold}")
    names = list(fc.t_spec)
    oee_pos = names.index("oee") if "oee" in names else None
    originals = clusters.centroids_original()
    for k in range(clusters.K):
        desc = " ".join(f"{n}={v:.3f}" for n, v in zip(names, originals[k]))
        band = f" band={oee_band(originals[k][oee_pos]).value}" \
            if oee_pos is not None else ""
        print(f"  state {k + 1}: n={clusters.counts[k]:.0f} {desc}{band}")
    print(f"patterns: {len(model.params)}")
    for key in sorted(model.params):
        st = model.params[key]
        init = model.dirichlet.initial_counts(key)
        print(f"  {key}: gamma_u={st.u.gamma:.4f} gamma_v={st.v.gamma:.4f} "
              f"initial_counts={np.round(init, 3).tolist()}")
    if model.last_forecast is not None:
        print(f"last forecast: state={model.last_forecast.state} "
              f"pattern={model.last_forecast.pattern}")
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="opcast",
                     description="online forecasting of operational times")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--lambda-u", dest="lambda_u", type=float)
        p.add_argument("--lambda-v", dest="lambda_v", type=float)
        p.add_argument("--lags", type=int)
        p.add_argument("--threshold", type=float)
        p.add_argument("--kmax", type=int)
        if data:
            p.add_argument("--data", required=True, help="dataset CSV")

    p_fit = sub.add_parser("fit", help="fit a model and write a snapshot")
    common(p_fit)
    p_fit.add_argument("--out", required=True, help="snapshot path")
    p_fit.set_defaults(func=cmd_fit)

    p_fc = sub.add_parser("forecast", help="forecast the next period")
    p_fc.add_argument("--snapshot", required=True)
    p_fc.add_argument("--data", required=True, help="history CSV")
    p_fc.add_argument("--shift", required=True, help="announced shift label")
    p_fc.add_argument("--ics", type=float, help="announced speed (default: last)")
    p_fc.add_argument("--new-order", dest="new_order", action="store_true")
    p_fc.add_argument("--next-values", dest="next_values",
                      help="JSON object with extra future covariates")
    p_fc.add_argument("--out", help="write the forecast document here")
    p_fc.add_argument("--update-snapshot", dest="update_snapshot",
                      action="store_true",
                      help="persist the centroid update done by the forecast")
    p_fc.set_defaults(func=cmd_forecast)

    p_ev = sub.add_parser("evaluate", help="leave-one-week-out benchmark run")
    common(p_ev)
    p_ev.add_argument("--out", required=True, help="report CSV path")
    p_ev.add_argument("--summary-out", dest="summary_out",
                      help="structured-text report path")
    p_ev.add_argument("--models", help="comma-separated model identifiers")
    p_ev.set_defaults(func=cmd_evaluate)

    p_sim = sub.add_parser("simulate", help="generate synthetic records")
    p_sim.add_argument("--spec", required=True, help="JSON generator spec")
    p_sim.add_argument("--out", required=True, help="output CSV path")
    p_sim.add_argument("--seed", type=int, help="override the spec seed")
    p_sim.set_defaults(func=cmd_simulate)

    p_in = sub.add_parser("inspect", help="describe a model snapshot")
    p_in.add_argument("--snapshot", required=True)
    p_in.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None) -> int:
    try:
        parser = _build_parser()
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, ForecastUnavailableError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except OpcastError as exc:  # anything else from this package
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
