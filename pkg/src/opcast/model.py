"""Online forecasting model combining two adaptive predictors per pattern.

For every binary conditioning pattern the model keeps two linear models
sharing the same responses: one driven by the continuous regressors
(``u = [1, w]``), one driven by the expected-state probability vector from
the pseudo-count tables. Their forecasts are blended per response with
inverse-variance weights. Hidden states come from clustering; their
dynamics are tracked by the pseudo-counts.

Everything updates online: one pass over the records both forecasts and
learns, and the full state can be snapshotted to a plain JSON document.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .clustering import ClusterModel, fit_auto_k
from .dirichlet import DirichletTable
from .errors import (ConfigurationError, DimensionError, ForecastUnavailableError,
                     NumericError, OpcastError, RestoreError)
from .estimator import AdaptiveState
from .features import (FeatureConfig, FeatureVectors, build_features,
                       classification_vector, pattern_key, response_vector)
from .records import ProductionRecord

Z95 = 1.96

SNAPSHOT_FORMAT = "opcast-model"
SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    features: FeatureConfig
    lambda_u: float = 0.99
    lambda_v: float = 0.95
    allow_cold_start: bool = False

    def __post_init__(self):
        for name in ("lambda_u", "lambda_v"):
            value = getattr(self, name)
            if not 0.0 < float(value) <= 1.0:
                raise ConfigurationError(f"{name} must lie in (0, 1], got {value}")

    def to_dict(self) -> dict:
        return {
            "lambda_u": self.lambda_u,
            "lambda_v": self.lambda_v,
            "allow_cold_start": self.allow_cold_start,
            "features": self.features.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelConfig":
        return cls(features=FeatureConfig.from_dict(doc["features"]),
                   lambda_u=float(doc["lambda_u"]),
                   lambda_v=float(doc["lambda_v"]),
                   allow_cold_start=bool(doc["allow_cold_start"]))


@dataclass
class PatternStates:
    u: AdaptiveState
    v: AdaptiveState


@dataclass(frozen=True)
class CombinedForecast:
    y_hat: np.ndarray
    sigma: np.ndarray
    weights: np.ndarray
    intervals: np.ndarray
    cold_start: bool


@dataclass(frozen=True)
class ForecastResult:
    y_hat: np.ndarray
    sigma: np.ndarray
    weights: np.ndarray
    intervals: np.ndarray
    cold_start: bool
    state: int
    pattern: str
    begins: bool

    def to_dict(self, response_names: Sequence[str] | None = None) -> dict:
        names = list(response_names) if response_names is not None \
            else [f"y{j}" for j in range(self.y_hat.size)]
        return {
            "y_hat": {name: float(v) for name, v in zip(names, self.y_hat)},
            "intervals": {name: [float(lo), float(hi)]
                          for name, (lo, hi) in zip(names, self.intervals)},
            "weights": {name: float(d) for name, d in zip(names, self.weights)},
            "sigma": self.sigma.tolist(),
            "cold_start": self.cold_start,
            "state": self.state,
            "pattern": self.pattern,
            "begins_shift": self.begins,
        }

    @classmethod
    def from_dict(cls, doc: dict, response_names: Sequence[str]) -> "ForecastResult":
        names = list(response_names)
        return cls(
            y_hat=np.array([doc["y_hat"][n] for n in names]),
            sigma=np.asarray(doc["sigma"], dtype=float),
            weights=np.array([doc["weights"][n] for n in names]),
            intervals=np.array([doc["intervals"][n] for n in names]),
            cold_start=bool(doc["cold_start"]),
            state=int(doc["state"]),
            pattern=str(doc["pattern"]),
            begins=bool(doc["begins_shift"]),
        )


@dataclass(frozen=True)
class StepResult:
    index: int
    state: int
    y: np.ndarray
    forecast: ForecastResult | None


def combination_weights(sigma_u: np.ndarray, sigma_v: np.ndarray) -> np.ndarray:
    """Per-response blending weight for the regressor-driven forecast.

    The weight is the share of the competing model's variance, so the
    less certain model is down-weighted. When both variances vanish the
    weight is 1/2.
    """
    su = np.asarray(sigma_u, dtype=float)
    sv = np.asarray(sigma_v, dtype=float)
    su = (su.diagonal() if su.ndim == 2 else su.reshape(-1)).copy()
    sv = (sv.diagonal() if sv.ndim == 2 else sv.reshape(-1)).copy()
    if su.shape != sv.shape:
        raise DimensionError("variance inputs have mismatched sizes")
    for arr in (su, sv):
        bad = arr < -1e-10
        if bad.any():
            raise NumericError(f"negative variance {arr[bad].min():.3e} in combination")
    su = np.clip(su, 0.0, None)
    sv = np.clip(sv, 0.0, None)
    total = su + sv
    out = np.full(su.shape, 0.5)
    nonzero = total > 0.0
    out[nonzero] = sv[nonzero] / total[nonzero]
    return out


def combine(u, v, state_u: AdaptiveState, state_v: AdaptiveState,
            allow_cold_start: bool = False) -> CombinedForecast:
    """Blend the two per-pattern predictors for one upcoming period."""
    cold = state_u.gamma == 0.0 and state_v.gamma == 0.0
    if cold and not allow_cold_start:
        raise ForecastUnavailableError(
            "no observations for this pattern yet; enable cold starts to "
            "forecast from the zero-knowledge prior")
    sigma_u = state_u.covariance()
    sigma_v = state_v.covariance()
    delta = combination_weights(sigma_u, sigma_v)
    mean_u = state_u.predict_mean(u)
    mean_v = state_v.predict_mean(v)
    y_hat = delta * mean_u + (1.0 - delta) * mean_v
    sigma = (np.outer(delta, delta) * sigma_u
             + np.outer(1.0 - delta, 1.0 - delta) * sigma_v)
    sd = np.sqrt(np.clip(np.diagonal(sigma), 0.0, None))
    intervals = np.column_stack([y_hat - Z95 * sd, y_hat + Z95 * sd])
    return CombinedForecast(y_hat=y_hat, sigma=sigma, weights=delta,
                            intervals=intervals, cold_start=cold)


class IoHmmModel:
    """Forecasting model with per-pattern adaptive states.

    The cluster model must be attached (or fitted) before learning or
    forecasting; its K fixes the dimensions of the state-driven predictor
    and the pseudo-count tables.
    """

    def __init__(self, config: ModelConfig, clusters: ClusterModel | None = None):
        self.config = config
        self.clusters: ClusterModel | None = None
        self.dirichlet: DirichletTable | None = None
        self.params: dict[str, PatternStates] = {}
        self.last_state: int | None = None
        self.last_forecast: ForecastResult | None = None
        if clusters is not None:
            self.attach_clusters(clusters)

    # -- dimensions --------------------------------------------------------

    @property
    def n_states(self) -> int:
        if self.clusters is None:
            raise ConfigurationError("no cluster model attached")
        return self.clusters.K

    @property
    def n_responses(self) -> int:
        return self.config.features.n_responses

    @property
    def u_dim(self) -> int:
        return 1 + self.config.features.w_dim

    # -- construction ------------------------------------------------------

    def attach_clusters(self, clusters: ClusterModel) -> None:
        """Set the state space. Resets pseudo-counts and adaptive states."""
        if clusters.centroids.shape[1] != len(self.config.features.t_spec):
            raise DimensionError(
                "cluster model dimension does not match the classification spec")
        self.clusters = clusters
        self.dirichlet = DirichletTable(clusters.K,
                                        self.config.features.pattern_length)
        self.params = {}
        self.last_state = None
        self.last_forecast = None

    def fit(self, records: Sequence[ProductionRecord], seed: int = 0,
            threshold: float = 0.8, k_min: int = 2, k_max: int = 12) -> "IoHmmModel":
        """Discover states on the records, then learn them in one pass."""
        points = np.array([classification_vector(rec, self.config.features)
                           for rec in records])
        self.attach_clusters(fit_auto_k(points, threshold=threshold, k_min=k_min,
                                        k_max=k_max, seed=seed))
        self.learn_records(records)
        return self

    # -- pattern state access ------------------------------------------------

    def _states_for(self, key: str) -> PatternStates:
        states = self.params.get(key)
        if states is None:
            states = PatternStates(
                u=AdaptiveState(self.u_dim, self.n_responses, self.config.lambda_u),
                v=AdaptiveState(self.n_states, self.n_responses, self.config.lambda_v))
            self.params[key] = states
        return states

    def _require_fitted(self) -> None:
        if self.clusters is None or self.dirichlet is None:
            raise ConfigurationError("model has no fitted cluster state; call fit "
                                     "or attach_clusters first")

    # -- online operations ---------------------------------------------------

    def learn_step(self, features: FeatureVectors, prev_state: int | None,
                   cur_state: int, y=None) -> None:
        """Fold one observed period into the model.

        Continuous updates happen first with the pre-observation counts;
        the pseudo-count for the realized state is incremented afterwards.
        """
        self._require_fitted()
        if features.w.shape != (self.config.features.w_dim,):
            raise DimensionError(
                f"regressor vector must have length {self.config.features.w_dim}")
        key = pattern_key(features.z)
        y = features.y if y is None else np.asarray(y, dtype=float).reshape(-1)
        states = self._states_for(key)
        v = self.dirichlet.expected_state_vector(key, prev_state)
        u = np.concatenate([[1.0], features.w])
        states.u.update(u, y)
        states.v.update(v, y)
        if prev_state is None:
            self.dirichlet.observe_initial(key, cur_state)
        else:
            self.dirichlet.observe_transition(key, prev_state, cur_state)

    def forecast_step(self, t_prev, z_next, w_next, begins: bool) -> ForecastResult:
        """Forecast the next period from the last classified one.

        The state of the previous period is looked up first and its
        centroid absorbs the observation afterwards, in that order.
        """
        self._require_fitted()
        state = self.clusters.assign(t_prev)
        self.clusters.update_centroid(state, t_prev)
        z_next = np.asarray(z_next, dtype=float).reshape(-1)
        w_next = np.asarray(w_next, dtype=float).reshape(-1)
        if z_next.shape != (self.config.features.pattern_length,):
            raise DimensionError(
                f"pattern must have length {self.config.features.pattern_length}")
        if w_next.shape != (self.config.features.w_dim,):
            raise DimensionError(
                f"regressor vector must have length {self.config.features.w_dim}")
        key = pattern_key(z_next)
        states = self._states_for(key)
        v = self.dirichlet.expected_state_vector(key, None if begins else state)
        u = np.concatenate([[1.0], w_next])
        combined = combine(u, v, states.u, states.v,
                           allow_cold_start=self.config.allow_cold_start)
        result = ForecastResult(y_hat=combined.y_hat, sigma=combined.sigma,
                                weights=combined.weights,
                                intervals=combined.intervals,
                                cold_start=combined.cold_start,
                                state=state, pattern=key, begins=begins)
        self.last_state = state
        self.last_forecast = result
        return result

    def learn_records(self, records: Sequence[ProductionRecord]) -> None:
        """Single learning pass over chronologically sorted records."""
        self._require_fitted()
        fc = self.config.features
        fvs = build_features(records, fc)
        labels = [self.clusters.assign(classification_vector(rec, fc))
                  for rec in records]
        for fv in fvs:
            prev = None if fv.begins_shift else labels[fv.record_index - 1]
            self.learn_step(fv, prev, labels[fv.record_index])

    def run_online(self, records: Sequence[ProductionRecord],
                   forecast_from: int | None = None,
                   indices: Sequence[int] | None = None) -> list[StepResult]:
        """Interleave forecasting and learning over the records.

        Per processed record: forecast it from the previous record (when a
        lag history exists), classify it, learn from it. The earliest
        forecastable position is ``q + 1``: position ``q`` is the first
        with features and it has no featurized predecessor.

        ``indices`` restricts processing to a sub-range (it must be
        increasing); earlier records still provide lags and previous-state
        labels. Returns one entry per processed record; ``forecast`` is
        None for warm-up records.
        """
        self._require_fitted()
        fc = self.config.features
        fvs = build_features(records, fc)
        by_index = {fv.record_index: fv for fv in fvs}
        first = fc.q + 1 if forecast_from is None else max(forecast_from, fc.q + 1)
        if indices is None:
            positions: Sequence[int] = range(len(records))
        else:
            positions = [int(i) for i in indices]
            if any(not 0 <= i < len(records) for i in positions):
                raise DimensionError("indices outside the record range")
            if any(b <= a for a, b in zip(positions, positions[1:])):
                raise DimensionError("indices must be strictly increasing")
        labels: dict[int, int] = {}
        results: list[StepResult] = []
        for i in positions:
            rec = records[i]
            fv = by_index.get(i)
            forecast = None
            if fv is not None and i >= first:
                t_prev = classification_vector(records[i - 1], fc)
                forecast = self.forecast_step(t_prev, fv.z, fv.w, fv.begins_shift)
            cur = self.clusters.assign(classification_vector(rec, fc))
            if fv is not None:
                if fv.begins_shift:
                    prev = None
                else:
                    prev = labels.get(i - 1)
                    if prev is None:
                        prev = self.clusters.assign(
                            classification_vector(records[i - 1], fc))
                self.learn_step(fv, prev, cur)
            labels[i] = cur
            results.append(StepResult(index=i, state=cur,
                                      y=response_vector(rec, fc),
                                      forecast=forecast))
        return results

    # -- serialization -----------------------------------------------------

    def snapshot(self) -> dict:
        doc = {
            "format": SNAPSHOT_FORMAT,
            "version": SNAPSHOT_VERSION,
            "config": self.config.to_dict(),
            "clusters": self.clusters.to_dict() if self.clusters else None,
            "dirichlet": self.dirichlet.to_dict() if self.dirichlet else None,
            "params": {key: {"u": st.u.to_dict(), "v": st.v.to_dict()}
                       for key, st in sorted(self.params.items())},
            "last_state": self.last_state,
            "last_forecast": (self.last_forecast.to_dict(self.config.features.response_names)
                              if self.last_forecast else None),
        }
        return doc

    def to_json(self) -> str:
        return json.dumps(self.snapshot(), sort_keys=True, indent=2) + "\n"

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def restore(cls, doc: dict) -> "IoHmmModel":
        try:
            if doc.get("format") != SNAPSHOT_FORMAT:
                raise RestoreError(f"unknown document format {doc.get('format')!r}")
            if doc.get("version") != SNAPSHOT_VERSION:
                raise RestoreError(f"unsupported snapshot version {doc.get('version')!r}")
            model = cls(ModelConfig.from_dict(doc["config"]))
            if doc.get("clusters") is not None:
                model.attach_clusters(ClusterModel.from_dict(doc["clusters"]))
                model.dirichlet = DirichletTable.from_dict(doc["dirichlet"])
            for key, entry in doc.get("params", {}).items():
                u = AdaptiveState.from_dict(entry["u"])
                v = AdaptiveState.from_dict(entry["v"])
                if u.n_predictors != model.u_dim or v.n_predictors != model.n_states:
                    raise RestoreError(
                        f"adaptive state for pattern {key!r} has wrong dimensions")
                if {u.n_responses, v.n_responses} != {model.n_responses}:
                    raise RestoreError(
                        f"adaptive state for pattern {key!r} has wrong response count")
                model.params[key] = PatternStates(u=u, v=v)
            model.last_state = doc.get("last_state")
            if doc.get("last_forecast") is not None:
                model.last_forecast = ForecastResult.from_dict(
                    doc["last_forecast"], model.config.features.response_names)
            return model
        except RestoreError:
            raise
        except (KeyError, TypeError, ValueError, AttributeError, OpcastError) as exc:
            raise RestoreError(f"cannot restore model snapshot: {exc}") from exc

    @classmethod
    def load(cls, path) -> "IoHmmModel":
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise RestoreError(f"snapshot is not valid JSON: {exc}") from exc
        return cls.restore(doc)
