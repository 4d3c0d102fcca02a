"""tsadkit: synthetic periodic series with injected anomalies, deterministic
chart rendering, QA dataset builds, verifiable rewards, and point-adjusted
evaluation for vision-based time series anomaly detection."""

from .anomalies import (
    AnomalySpec,
    InjectionConflictError,
    inject_anomaly,
    inject_frequency_anomaly,
    sample_anomaly_plan,
)
from .config import GenerationConfig
from .evaluation import (
    EvalReport,
    WindowPlan,
    diversity_cdf,
    dtw_distance,
    map_intervals,
    point_adjusted_best_f1,
    slice_windows,
    vote_scores,
)
from .generate import (
    Harmonic,
    Interval,
    LabeledSeries,
    NoiseSpec,
    SeasonalSpec,
    SeriesAttributes,
    SeriesSpec,
    TrendSpec,
    compose_series,
    gen_noise,
    gen_seasonal,
    gen_trend,
    realize_series,
)
from .parsing import ParseError, PredictedIntervals, check_format, format_intervals, parse_boxed_intervals
from .qa import QARecord, describe_attributes, make_qa, write_manifest
from .render import ImageArtifact, RenderSpec, render_composite, render_line, stft_magnitude, zscore
from .rewards import RewardConfig, combined_reward, f1_reward, interval_f1

__version__ = "0.1.0"

__all__ = [
    "AnomalySpec",
    "EvalReport",
    "GenerationConfig",
    "Harmonic",
    "ImageArtifact",
    "InjectionConflictError",
    "Interval",
    "LabeledSeries",
    "NoiseSpec",
    "ParseError",
    "PredictedIntervals",
    "QARecord",
    "RenderSpec",
    "RewardConfig",
    "SeasonalSpec",
    "SeriesAttributes",
    "SeriesSpec",
    "TrendSpec",
    "WindowPlan",
    "check_format",
    "combined_reward",
    "compose_series",
    "describe_attributes",
    "diversity_cdf",
    "dtw_distance",
    "f1_reward",
    "format_intervals",
    "gen_noise",
    "gen_seasonal",
    "gen_trend",
    "inject_anomaly",
    "inject_frequency_anomaly",
    "interval_f1",
    "make_qa",
    "map_intervals",
    "parse_boxed_intervals",
    "point_adjusted_best_f1",
    "realize_series",
    "render_composite",
    "render_line",
    "sample_anomaly_plan",
    "slice_windows",
    "stft_magnitude",
    "vote_scores",
    "write_manifest",
    "zscore",
]
