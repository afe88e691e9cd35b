"""streambench: latency-aware streaming perception benchmark toolkit.

Simulates fixed-rate camera streams against detectors with processing
latency, scores streaming accuracy (sAP) and its velocity-aware mean
(VsAP), exposes trend-aware loss weight math as pure functions, and ships
forecasting baselines plus a synthetic-scene oracle.
"""

__version__ = "0.1.0"

from .datamodel import (
    AnnotatedBox,
    ClipStream,
    Dataset,
    Detection,
    FrameAnnotations,
    Triplet,
    TripletSet,
    build_triplets,
    load_dataset,
    load_detections,
    resample_clip,
    resample_dataset,
    sample_mixed_velocity,
    save_dataset,
    save_detections,
    triplet_count,
)
from .errors import (
    ConfigError,
    DatasetParseError,
    DatasetReferenceError,
    NumericalError,
    SimulationError,
    StreamBenchError,
    ValidationError,
)
from .forecast import (
    ConstantVelocityForecaster,
    IdentityForecaster,
    KalmanConfig,
    KalmanForecaster,
    MultiObjectTracker,
    TrackState,
    associate,
    constant_velocity_forecast,
    forecast_stream,
    kf_predict,
    kf_update,
    make_forecaster,
)
from .geometry import BBox, area_bucket, iou, iou_matrix
from .metrics import (
    EvalReport,
    VelocityEvalReport,
    average_precision,
    evaluate_streaming,
    evaluate_vsap,
    offline_report,
    simulate_clips,
)
from .simulation import (
    ConstantLatency,
    Emission,
    EmissionLog,
    PerFrameLatency,
    StochasticLatency,
    apply_forecaster,
    query_prediction,
    simulate,
)
from .synth import MovingObject, NoiseConfig, SceneConfig, generate_clip, generate_dataset, noisy_detector
from .trend import (
    LossTerms,
    TrendConfig,
    TrendWeights,
    advanced_trend_factors,
    normalize_weights,
    total_loss,
    trend_factors,
    triplet_trend_weights,
)
