"""Box forecasting baselines: identity, constant-velocity extrapolation,
and a constant-velocity Kalman filter with IoU-gated Hungarian association.

The Kalman state is (cx, cy, w, h) plus per-frame velocities for each
component. New tracks start with zero velocity and a velocity variance ten
times the position variance, so two clean updates are enough to lock onto
a constant-velocity target.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Protocol, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .datamodel import ClipStream, Detection
from .errors import ConfigError, NumericalError, ValidationError
from .geometry import BBox, iou_matrix
from .simulation import EmissionLog

_INIT_POS_VAR = 10.0
_VELOCITY_VAR_RATIO = 10.0
_PSD_EIG_FLOOR = -1e-8

_DIM = 4  # measured components

# transition: positions advance by one frame of velocity
_F = np.eye(2 * _DIM)
_F[:_DIM, _DIM:] = np.eye(_DIM)
_H = np.hstack([np.eye(_DIM), np.zeros((_DIM, _DIM))])


@dataclass(frozen=True, eq=False)
class KalmanConfig:
    process_noise_scale: float = 1.0
    measurement_noise_scale: float = 1.0
    iou_gate: float = 0.3
    max_age: int = 3
    min_hits: int = 1

    def __post_init__(self):
        if self.process_noise_scale < 0 or self.measurement_noise_scale < 0:
            raise ConfigError("noise scales must be >= 0")
        if not 0.0 < self.iou_gate < 1.0:
            raise ConfigError(f"iou_gate must lie in (0, 1), got {self.iou_gate}")
        if self.max_age < 0:
            raise ConfigError(f"max_age must be >= 0, got {self.max_age}")
        if self.min_hits < 1:
            raise ConfigError(f"min_hits must be >= 1, got {self.min_hits}")


@dataclass(frozen=True, eq=False)
class TrackState:
    """Mean/covariance of one tracked box plus bookkeeping counters."""

    mean: np.ndarray  # (8,) cx, cy, w, h, and their velocities
    covariance: np.ndarray  # (8, 8)
    category_id: int
    last_score: float
    age: int = 0
    hit_count: int = 1


def bbox_to_measurement(box: BBox) -> np.ndarray:
    return np.array([box.x + box.w / 2.0, box.y + box.h / 2.0, box.w, box.h], dtype=np.float64)


def measurement_to_bbox(z: Sequence[float]) -> BBox:
    cx, cy, w, h = (float(v) for v in z)
    w = max(w, 0.0)
    h = max(h, 0.0)
    return BBox(cx - w / 2.0, cy - h / 2.0, w, h)


def track_box(track: TrackState) -> BBox:
    return measurement_to_bbox(track.mean[:_DIM])


def new_track(detection: Detection) -> TrackState:
    mean = np.zeros(2 * _DIM)
    mean[:_DIM] = bbox_to_measurement(detection.bbox)
    cov = np.diag([_INIT_POS_VAR] * _DIM + [_INIT_POS_VAR * _VELOCITY_VAR_RATIO] * _DIM)
    return TrackState(
        mean=mean,
        covariance=cov,
        category_id=detection.category_id,
        last_score=detection.score,
    )


def kf_predict(track: TrackState, steps: int, cfg: KalmanConfig = KalmanConfig()) -> TrackState:
    """Advance the constant-velocity model by `steps` frames (0 is identity)."""
    if steps < 0:
        raise ValidationError(f"steps must be >= 0, got {steps}")
    mean = track.mean.copy()
    cov = track.covariance.copy()
    q = cfg.process_noise_scale**2 * np.eye(2 * _DIM)
    for _ in range(steps):
        mean = _F @ mean
        cov = _F @ cov @ _F.T + q
    return replace(track, mean=mean, covariance=cov)


def kf_update(track: TrackState, measurement: BBox, cfg: KalmanConfig = KalmanConfig()) -> TrackState:
    """Standard gain update on the (cx, cy, w, h) observation.

    Uses the Joseph form so the covariance stays symmetric PSD; a covariance
    that still fails the eigenvalue floor signals a pathological config and
    raises NumericalError.
    """
    z = bbox_to_measurement(measurement)
    r = cfg.measurement_noise_scale**2 * np.eye(_DIM)
    cov = track.covariance
    s = _H @ cov @ _H.T + r
    try:
        gain = np.linalg.solve(s, _H @ cov).T
    except np.linalg.LinAlgError:
        # singular innovation covariance (fully converged zero-noise filter)
        gain = cov @ _H.T @ np.linalg.pinv(s, hermitian=True)
    innovation = z - _H @ track.mean
    mean = track.mean + gain @ innovation
    ikh = np.eye(2 * _DIM) - gain @ _H
    new_cov = ikh @ cov @ ikh.T + gain @ r @ gain.T
    new_cov = (new_cov + new_cov.T) / 2.0
    try:
        np.linalg.cholesky(new_cov - _PSD_EIG_FLOOR * np.eye(2 * _DIM))
    except np.linalg.LinAlgError:
        if float(np.linalg.eigvalsh(new_cov).min()) < _PSD_EIG_FLOOR:
            raise NumericalError("covariance lost positive semi-definiteness in update") from None
    return replace(track, mean=mean, covariance=new_cov, age=0, hit_count=track.hit_count + 1)


def solve_assignment(benefit: np.ndarray, feasible: np.ndarray) -> list[tuple[int, int]]:
    """One-to-one pairs maximizing total benefit over the feasible mask."""
    masked = np.where(feasible, benefit, 0.0)
    rows, cols = linear_sum_assignment(-masked)
    return sorted((int(r), int(c)) for r, c in zip(rows, cols) if feasible[r, c])


def match_boxes(
    boxes_a: Sequence[BBox],
    cats_a: Sequence[int],
    boxes_b: Sequence[BBox],
    cats_b: Sequence[int],
    gate: float,
) -> tuple[list[tuple[int, int]], list[int], list[int]]:
    """One-to-one matching maximizing total IoU over same-category pairs >= gate."""
    if not 0.0 < gate < 1.0:
        raise ConfigError(f"gate must lie in (0, 1), got {gate}")
    if not boxes_a or not boxes_b:
        return [], list(range(len(boxes_a))), list(range(len(boxes_b)))
    ious = iou_matrix(boxes_a, boxes_b)
    same_cat = np.asarray(cats_a)[:, None] == np.asarray(cats_b)[None, :]
    matches = solve_assignment(ious, (ious >= gate) & same_cat)
    matched_a = {r for r, _ in matches}
    matched_b = {c for _, c in matches}
    unmatched_a = [i for i in range(len(boxes_a)) if i not in matched_a]
    unmatched_b = [j for j in range(len(boxes_b)) if j not in matched_b]
    return matches, unmatched_a, unmatched_b


def associate(
    tracks: Sequence[TrackState], detections: Sequence[Detection], gate: float
) -> tuple[list[tuple[int, int]], list[int], list[int]]:
    """Hungarian assignment between track boxes and detections."""
    return match_boxes(
        [track_box(t) for t in tracks],
        [t.category_id for t in tracks],
        [d.bbox for d in detections],
        [d.category_id for d in detections],
        gate,
    )


class MultiObjectTracker:
    """Per-clip tracker: predict, associate, update, spawn, retire."""

    def __init__(self, cfg: KalmanConfig = KalmanConfig()):
        self.cfg = cfg
        self.tracks: list[TrackState] = []

    def step(self, detections: Sequence[Detection], steps: int = 1) -> None:
        cfg = self.cfg
        self.tracks = [kf_predict(t, steps, cfg) for t in self.tracks]
        matches, unmatched_tracks, unmatched_dets = associate(self.tracks, detections, cfg.iou_gate)
        updated: list[TrackState] = [None] * len(self.tracks)  # type: ignore[list-item]
        for ti, di in matches:
            det = detections[di]
            track = kf_update(self.tracks[ti], det.bbox, cfg)
            updated[ti] = replace(track, last_score=det.score)
        for ti in unmatched_tracks:
            track = self.tracks[ti]
            updated[ti] = replace(track, age=track.age + 1)
        survivors = [t for t in updated if t.age <= cfg.max_age]
        for di in unmatched_dets:
            survivors.append(new_track(detections[di]))
        self.tracks = survivors

    def emit(self, horizon: int, frame_id: int) -> list[Detection]:
        out = []
        for track in self.tracks:
            if track.hit_count < self.cfg.min_hits:
                continue
            ahead = kf_predict(track, horizon, self.cfg)
            out.append(
                Detection(
                    frame_id=frame_id,
                    bbox=track_box(ahead),
                    category_id=track.category_id,
                    score=track.last_score,
                    det_id=len(out),
                )
            )
        return out


def forecast_stream(
    detections_by_frame: Mapping[int, Sequence[Detection]],
    clip: ClipStream,
    cfg: KalmanConfig = KalmanConfig(),
    horizon: int = 1,
) -> dict[int, list[Detection]]:
    """Run the tracker over every frame; emit horizon-step forecasts per frame."""
    if horizon < 0:
        raise ValidationError(f"horizon must be >= 0, got {horizon}")
    tracker = MultiObjectTracker(cfg)
    out: dict[int, list[Detection]] = {}
    for frame in clip.frames:
        tracker.step(detections_by_frame.get(frame.frame_id, []))
        out[frame.frame_id] = tracker.emit(horizon, frame.frame_id)
    return out


def constant_velocity_forecast(
    prev_dets: Sequence[Detection],
    cur_dets: Sequence[Detection],
    horizon: float,
    gate: float = 0.3,
) -> list[Detection]:
    """Extrapolate matched boxes by horizon * (cur - prev) per coordinate.

    Unmatched current boxes pass through unchanged.
    """
    matches, _, _ = match_boxes(
        [d.bbox for d in prev_dets],
        [d.category_id for d in prev_dets],
        [d.bbox for d in cur_dets],
        [d.category_id for d in cur_dets],
        gate,
    )
    shifted: dict[int, BBox] = {}
    for pi, ci in matches:
        p, c = prev_dets[pi].bbox, cur_dets[ci].bbox
        shifted[ci] = BBox(
            c.x + horizon * (c.x - p.x),
            c.y + horizon * (c.y - p.y),
            max(c.w + horizon * (c.w - p.w), 0.0),
            max(c.h + horizon * (c.h - p.h), 0.0),
        )
    return [
        replace(det, bbox=shifted[i]) if i in shifted else det for i, det in enumerate(cur_dets)
    ]


class Forecaster(Protocol):
    name: str
    extra_latency_seconds: float

    def transform_log(self, log: EmissionLog, clip: ClipStream) -> list[list[Detection]]: ...


def _source_indices(log: EmissionLog, clip: ClipStream) -> list[int]:
    index_of = {f.frame_id: f.index_in_clip for f in clip.frames}
    try:
        return [index_of[e.source_frame_id] for e in log.entries]
    except KeyError as exc:
        raise ValidationError(f"emission log references frame {exc.args[0]} not in clip") from None


class IdentityForecaster:
    """Passes emissions through untouched."""

    name = "none"
    extra_latency_seconds = 0.0

    def transform_log(self, log: EmissionLog, clip: ClipStream) -> list[list[Detection]]:
        return [list(e.detections) for e in log.entries]


class ConstantVelocityForecaster:
    """Linear extrapolation from the previous emission's matched boxes."""

    name = "cv"

    def __init__(self, horizon: int = 1, gate: float = 0.3, extra_latency_seconds: float = 0.0005):
        self.horizon = horizon
        self.gate = gate
        self.extra_latency_seconds = extra_latency_seconds

    def transform_log(self, log: EmissionLog, clip: ClipStream) -> list[list[Detection]]:
        indices = _source_indices(log, clip)
        out: list[list[Detection]] = []
        for k, entry in enumerate(log.entries):
            if k == 0:
                out.append(list(entry.detections))
                continue
            gap = indices[k] - indices[k - 1]
            effective = self.horizon / gap if gap > 0 else float(self.horizon)
            out.append(
                constant_velocity_forecast(
                    log.entries[k - 1].detections, entry.detections, effective, self.gate
                )
            )
        return out


class KalmanForecaster:
    """Kalman tracking over the emission sequence with horizon-step forecasts."""

    name = "kalman"

    def __init__(
        self,
        cfg: KalmanConfig = KalmanConfig(),
        horizon: int = 1,
        extra_latency_seconds: float = 0.0031,
    ):
        self.cfg = cfg
        self.horizon = horizon
        self.extra_latency_seconds = extra_latency_seconds

    def transform_log(self, log: EmissionLog, clip: ClipStream) -> list[list[Detection]]:
        indices = _source_indices(log, clip)
        tracker = MultiObjectTracker(self.cfg)
        out: list[list[Detection]] = []
        for k, entry in enumerate(log.entries):
            steps = indices[k] - indices[k - 1] if k > 0 else 1
            tracker.step(entry.detections, steps=max(steps, 0))
            out.append(tracker.emit(self.horizon, entry.source_frame_id))
        return out


def make_forecaster(
    kind: str,
    horizon: int = 1,
    kalman_config: KalmanConfig | None = None,
    gate: float = 0.3,
) -> Forecaster:
    """Forecaster factory for the CLI names none/cv/kalman."""
    kind = kind.lower()
    if kind in ("none", "identity"):
        return IdentityForecaster()
    if kind == "cv":
        return ConstantVelocityForecaster(horizon=horizon, gate=gate)
    if kind in ("kalman", "kf"):
        return KalmanForecaster(cfg=kalman_config or KalmanConfig(), horizon=horizon)
    raise ConfigError(f"unknown forecaster {kind!r}; expected none, cv, or kalman")
