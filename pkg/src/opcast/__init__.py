"""Online probabilistic forecasting of operational times in production processes."""

from .benchmarks import (VarxModel, fit_varx, no_lags_variant,
                         persistence_forecast, predict_varx, univariate_configs,
                         univariate_suite)
from .clustering import ClusterModel, OeeBand, Standardizer, bss_tss_ratio, \
    fit_auto_k, oee_band
from .dirichlet import DirichletTable
from .errors import (ConditioningWarning, ConfigurationError, DataError,
                     DegenerateDataError, DimensionError, FittingError,
                     ForecastUnavailableError, InputError,
                     InsufficientHistoryError, NumericError, OpcastError,
                     OrderingError, RestoreError, SchemaError, StateIndexError,
                     ThresholdWarning, TimeConsistencyError)
from .estimator import AdaptiveState, BatchOracleResult, batch_oracle
from .features import (CovariateSpec, FeatureConfig, FeatureVectors,
                       assemble_next_features, build_features,
                       classification_vector, default_feature_config,
                       pattern_key, response_vector)
from .harness import (DEFAULT_MODELS, MetricsReport, PredictionRow, ReportRow,
                      emit_report, leave_one_week_out, parse_model_name,
                      response_summary, week_key)
from .metrics import coverage, interval_width, mae, rmse
from .model import (CombinedForecast, ForecastResult, IoHmmModel, ModelConfig,
                    StepResult, combination_weights, combine)
from .records import (BoundaryFlags, DerivedTimes, EffectivenessIndices,
                      ParseResult, ProductionRecord, RowError, ShiftSequence,
                      boundary_flags, check_chronological, compute_indices,
                      consistency_issues, derive_time_variables,
                      parse_dataset, segment_into_sequences, write_dataset)
from .synthetic import SyntheticSpec, generate_synthetic

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
