"""Rolling out-of-sample evaluation with leave-one-week-out folds.

Each ISO week of the dataset is held out once. Models are fitted from
scratch on the remaining weeks (in chronological order, so week seams act
as sequence starts) and evaluated on the held-out week. The online model
keeps learning as it walks through the test week, mirroring production
use; the regression benchmark stays frozen after fitting.

Aggregation is per model, fold, shift type and response.
"""

from __future__ import annotations

import io
import json
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .benchmarks import fit_varx, persistence_forecast, predict_varx
from .errors import ConfigurationError, DegenerateDataError
from .features import build_features, default_feature_config, response_vector
from .metrics import coverage, interval_width, mae, rmse
from .model import IoHmmModel, ModelConfig
from .records import ProductionRecord, check_chronological

DEFAULT_MODELS = (
    ("persistence", "no-lags")
    + tuple(f"iohmm-q{k}" for k in range(1, 6))
    + tuple(f"varx-q{k}" for k in range(1, 6))
    + tuple(f"iohmm-uni-q{k}" for k in range(1, 6))
)

SUMMARY_MODEL = "_summary"
CSV_HEADER = "model,fold,shift_type,response,metric,value,count"


def parse_model_name(name: str) -> tuple[str, int | None]:
    """Split a benchmark identifier into (kind, lag order)."""
    if name == "persistence":
        return "persistence", None
    if name == "no-lags":
        return "iohmm", 0
    for prefix, kind in (("iohmm-uni-q", "iohmm-uni"), ("iohmm-q", "iohmm"),
                         ("varx-q", "varx")):
        if name.startswith(prefix):
            tail = name[len(prefix):]
            if tail.isdigit():
                return kind, int(tail)
    raise ConfigurationError(f"unknown model identifier {name!r}")


def week_key(date) -> str:
    iso = date.isocalendar()
    return f"{iso[0]}-W{iso[1]:02d}"


@dataclass(frozen=True)
class PredictionRow:
    model: str
    fold: str
    index: int
    response: str
    actual: float
    predicted: float
    sd: float | None
    shift_type: str


@dataclass(frozen=True)
class ReportRow:
    model: str
    fold: str
    shift_type: str
    response: str
    metric: str
    value: float
    count: int


@dataclass
class MetricsReport:
    rows: list[ReportRow]
    response_summary: dict[str, dict[str, float]]
    folds: list[str]
    models: list[str]
    n_records: int
    predictions: list[PredictionRow] = field(default_factory=list)


def response_summary(records: Sequence[ProductionRecord],
                     responses: Sequence[str]) -> dict[str, dict[str, float]]:
    """Location statistics of each response over the whole dataset."""
    out: dict[str, dict[str, float]] = {}
    for name in responses:
        values = np.array([float(getattr(rec, name)) for rec in records])
        qs = np.quantile(values, [0.0, 0.25, 0.5, 0.75, 1.0])
        out[name] = {
            "min": float(qs[0]), "q1": float(qs[1]), "median": float(qs[2]),
            "mean": float(values.mean()), "q3": float(qs[3]), "max": float(qs[4]),
        }
    return out


def _iohmm_predictions(records, train_idx, test_idx, name, fold, cfg: ModelConfig,
                       seed, threshold, k_max) -> list[PredictionRow]:
    model = IoHmmModel(cfg).fit([records[i] for i in train_idx], seed=seed,
                                threshold=threshold, k_max=k_max)
    steps = model.run_online(records, indices=test_idx, forecast_from=test_idx[0])
    rows = []
    for st in steps:
        if st.forecast is None:
            continue
        sd = np.sqrt(np.clip(np.diagonal(st.forecast.sigma), 0.0, None))
        for j, resp in enumerate(cfg.features.response_names):
            rows.append(PredictionRow(name, fold, st.index, resp,
                                      float(st.y[j]), float(st.forecast.y_hat[j]),
                                      float(sd[j]), records[st.index].shift_code))
    return rows


def _varx_predictions(records, train_idx, test_idx, name, fold, cfg: ModelConfig,
                      q: int) -> list[PredictionRow]:
    fc0 = cfg.features.with_lags(0)
    train_stream = [records[i] for i in train_idx]
    train_feats = build_features(train_stream, fc0)
    pairs = [(fv.y, fv.w) for fv in train_feats]
    varx = fit_varx(pairs, q)
    global_feats = build_features(records, fc0)
    rows = []
    for i in test_idx:
        if i < q:
            continue
        lags = [response_vector(records[i - j], fc0) for j in range(1, q + 1)]
        y_hat, sigma = predict_varx(varx, lags, global_feats[i].w)
        sd = np.sqrt(np.clip(np.diagonal(sigma), 0.0, None))
        actual = response_vector(records[i], fc0)
        for j, resp in enumerate(fc0.response_names):
            rows.append(PredictionRow(name, fold, i, resp, float(actual[j]),
                                      float(y_hat[j]), float(sd[j]),
                                      records[i].shift_code))
    return rows


def _persistence_predictions(records, test_idx, name, fold,
                             responses) -> list[PredictionRow]:
    rows = []
    for i in test_idx:
        if i < 1:
            continue
        prev = persistence_forecast([float(getattr(records[i - 1], r))
                                     for r in responses])
        for j, resp in enumerate(responses):
            rows.append(PredictionRow(name, fold, i, resp,
                                      float(getattr(records[i], resp)),
                                      float(prev[j]), None,
                                      records[i].shift_code))
    return rows


def leave_one_week_out(records: Sequence[ProductionRecord],
                       model_names: Sequence[str] = DEFAULT_MODELS,
                       base: ModelConfig | None = None,
                       seed: int = 0, threshold: float = 0.8,
                       k_max: int = 12) -> MetricsReport:
    """Evaluate the configured models across held-out ISO weeks.

    A fresh model instance is fitted per model per fold; nothing carries
    over between folds. Per-fold cells that produce no forecasts are
    omitted with a warning.
    """
    check_chronological(records)
    for name in model_names:
        parse_model_name(name)
    if base is None:
        base = ModelConfig(features=default_feature_config(records),
                           allow_cold_start=True)
    responses = base.features.response_names

    weeks = sorted({week_key(rec.date) for rec in records})
    if len(weeks) < 2:
        raise DegenerateDataError(
            f"leave-one-week-out needs at least 2 ISO weeks, found {len(weeks)}")

    predictions: list[PredictionRow] = []
    for fold in weeks:
        test_idx = [i for i, rec in enumerate(records) if week_key(rec.date) == fold]
        train_idx = [i for i, rec in enumerate(records) if week_key(rec.date) != fold]
        for name in model_names:
            kind, q = parse_model_name(name)
            if kind == "persistence":
                rows = _persistence_predictions(records, test_idx, name, fold,
                                                responses)
            elif kind == "varx":
                rows = _varx_predictions(records, train_idx, test_idx, name, fold,
                                         base, q)
            elif kind == "iohmm":
                cfg = replace(base, features=base.features.with_lags(q))
                rows = _iohmm_predictions(records, train_idx, test_idx, name, fold,
                                          cfg, seed, threshold, k_max)
            else:  # iohmm-uni
                rows = []
                for resp in responses:
                    cfg = replace(base, features=base.features
                                  .with_lags(q).for_response(resp))
                    rows += _iohmm_predictions(records, train_idx, test_idx, name,
                                               fold, cfg, seed, threshold, k_max)
            if not rows:
                warnings.warn(f"model {name!r} produced no forecasts in fold {fold}",
                              stacklevel=2)
            predictions.extend(rows)

    report_rows = _aggregate(predictions)
    return MetricsReport(rows=report_rows,
                         response_summary=response_summary(records, responses),
                         folds=weeks, models=list(model_names),
                         n_records=len(records), predictions=predictions)


def _aggregate(predictions: Sequence[PredictionRow]) -> list[ReportRow]:
    """Per (model, fold, shift_type, response) accuracy metrics.

    Interval metrics are reported only for cells whose model provides
    predictive spreads.
    """
    cells: dict[tuple[str, str, str, str], list[PredictionRow]] = {}
    for row in predictions:
        cells.setdefault((row.model, row.fold, row.shift_type, row.response),
                         []).append(row)
    out: list[ReportRow] = []
    for key in sorted(cells):
        model, fold, shift_type, response = key
        group = cells[key]
        actual = [r.actual for r in group]
        predicted = [r.predicted for r in group]
        count = len(group)
        out.append(ReportRow(model, fold, shift_type, response, "mae",
                             mae(actual, predicted), count))
        out.append(ReportRow(model, fold, shift_type, response, "rmse",
                             rmse(actual, predicted), count))
        if all(r.sd is not None for r in group):
            sds = [r.sd for r in group]
            out.append(ReportRow(model, fold, shift_type, response, "covg",
                                 coverage(actual, predicted, sds), count))
            out.append(ReportRow(model, fold, shift_type, response, "piw",
                                 interval_width(sds), count))
    return out


def emit_report(report: MetricsReport, format: str = "csv") -> str:
    """Render a report as a flat CSV or a structured-text (JSON) document.

    The CSV includes the dataset-level response summary as rows under the
    pseudo-model ``_summary`` so one document is self-contained.
    """
    if format == "csv":
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for row in report.rows:
            buf.write(f"{row.model},{row.fold},{row.shift_type},{row.response},"
                      f"{row.metric},{row.value!r},{row.count}\n")
        for resp in sorted(report.response_summary):
            stats = report.response_summary[resp]
            for stat in ("min", "q1", "median", "mean", "q3", "max"):
                buf.write(f"{SUMMARY_MODEL},,,{resp},{stat},{stats[stat]!r},"
                          f"{report.n_records}\n")
        return buf.getvalue()
    if format in ("structured-text", "json"):
        doc = {
            "rows": [{"model": r.model, "fold": r.fold, "shift_type": r.shift_type,
                      "response": r.response, "metric": r.metric,
                      "value": r.value, "count": r.count} for r in report.rows],
            "response_summary": report.response_summary,
            "folds": report.folds,
            "models": report.models,
            "n_records": report.n_records,
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    raise ConfigurationError(f"unknown report format {format!r}")
