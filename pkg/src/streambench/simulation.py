"""Discrete-event simulation of a fixed-rate camera stream against a
detector with nonzero processing latency.

The simulator replays precomputed per-frame detections under a latency
model and records when each result would have become available. Streaming
evaluation then queries the log for "what the perception stack believed"
at every ground-truth timestamp.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Mapping, Sequence, Union

import numpy as np

from .datamodel import ClipStream, Detection
from .errors import ConfigError, SimulationError, ValidationError

if TYPE_CHECKING:  # pragma: no cover
    from .forecast import Forecaster


@dataclass(frozen=True)
class ConstantLatency:
    seconds: float

    def __post_init__(self):
        if self.seconds < 0:
            raise ConfigError(f"latency must be >= 0, got {self.seconds}")


@dataclass(frozen=True)
class PerFrameLatency:
    seconds_by_frame: Mapping[int, float]

    def __post_init__(self):
        for frame_id, value in self.seconds_by_frame.items():
            if value < 0:
                raise ConfigError(f"latency for frame {frame_id} must be >= 0, got {value}")


@dataclass(frozen=True)
class StochasticLatency:
    """Gaussian latency clamped at a floor; draws depend only on (seed, frame id)."""

    mean_seconds: float
    stddev_seconds: float
    seed: int
    floor_seconds: float = 0.0

    def __post_init__(self):
        if self.stddev_seconds < 0:
            raise ConfigError(f"stddev must be >= 0, got {self.stddev_seconds}")
        if self.floor_seconds < 0:
            raise ConfigError(f"floor must be >= 0, got {self.floor_seconds}")


LatencyModel = Union[ConstantLatency, PerFrameLatency, StochasticLatency]


def latency_seconds(model: LatencyModel, frame_id: int) -> float:
    """Processing latency the model assigns to a frame."""
    if isinstance(model, ConstantLatency):
        return model.seconds
    if isinstance(model, PerFrameLatency):
        try:
            return model.seconds_by_frame[frame_id]
        except KeyError:
            raise SimulationError(f"latency model has no entry for frame {frame_id}") from None
    if isinstance(model, StochasticLatency):
        draw = float(np.random.default_rng((model.seed, frame_id)).normal(model.mean_seconds, model.stddev_seconds))
        return max(model.floor_seconds, draw)
    raise ConfigError(f"unknown latency model: {model!r}")


@dataclass(frozen=True)
class Emission:
    """One processed frame: what the detector output and when it was ready."""

    source_frame_id: int
    start_time: float
    finish_time: float
    detections: tuple[Detection, ...]


@dataclass(frozen=True)
class EmissionLog:
    clip_id: int
    entries: tuple[Emission, ...]

    def to_json_obj(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "entries": [
                {
                    "source_frame_id": e.source_frame_id,
                    "start_time": e.start_time,
                    "finish_time": e.finish_time,
                    "detections": [
                        {
                            "frame_id": d.frame_id,
                            "bbox": list(d.bbox.as_xywh()),
                            "category_id": d.category_id,
                            "score": d.score,
                            "det_id": d.det_id,
                        }
                        for d in e.detections
                    ],
                }
                for e in self.entries
            ],
        }

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_obj(), sort_keys=True))


def simulate(
    clip: ClipStream,
    detections_by_frame: Mapping[int, Sequence[Detection]],
    latency: LatencyModel,
) -> EmissionLog:
    """Replay a clip through a single-threaded detector with latency.

    Scheduling policy: whenever the detector goes idle it immediately picks
    the newest frame that has already arrived and was not processed yet;
    any older pending frames are skipped permanently. If nothing is pending
    it waits for the next arrival. finish = start + latency(frame).

    Raises SimulationError when a scheduled frame has no detections entry.
    """
    frames = clip.frames
    entries: list[Emission] = []
    cursor = 0  # frames before this index are processed or skipped
    idle_at = frames[0].timestamp
    n = len(frames)
    while cursor < n:
        if frames[cursor].timestamp > idle_at:
            idle_at = frames[cursor].timestamp
        # newest arrived frame not yet consumed
        pick = cursor
        while pick + 1 < n and frames[pick + 1].timestamp <= idle_at:
            pick += 1
        frame = frames[pick]
        if frame.frame_id not in detections_by_frame:
            raise SimulationError(f"no detections available for scheduled frame {frame.frame_id}")
        start = idle_at
        finish = start + latency_seconds(latency, frame.frame_id)
        entries.append(
            Emission(
                source_frame_id=frame.frame_id,
                start_time=start,
                finish_time=finish,
                detections=tuple(detections_by_frame[frame.frame_id]),
            )
        )
        cursor = pick + 1
        idle_at = finish
    return EmissionLog(clip_id=clip.clip_id, entries=tuple(entries))


def query_prediction(log: EmissionLog, t: float) -> Emission | None:
    """Latest emission with finish_time <= t, or None before the first one.

    The boundary is closed: an output finishing exactly at the query time
    counts as visible.
    """
    if t < 0:
        raise ValidationError(f"query time must be >= 0, got {t}")
    latest = None
    for entry in log.entries:
        if entry.finish_time <= t:
            latest = entry
        else:
            break
    return latest


def apply_forecaster(log: EmissionLog, clip: ClipStream, forecaster: "Forecaster") -> EmissionLog:
    """Replace each emission's detections by the forecaster's extrapolation.

    The forecaster predicts each entry toward its next query time (one frame
    interval past the source frame, times the forecaster's horizon); its
    declared per-frame overhead is added to every finish time.
    """
    forecasted = forecaster.transform_log(log, clip)
    if len(forecasted) != len(log.entries):
        raise ValidationError(
            f"forecaster returned {len(forecasted)} detection sets for "
            f"{len(log.entries)} emissions"
        )
    extra = forecaster.extra_latency_seconds
    entries = tuple(
        Emission(
            source_frame_id=e.source_frame_id,
            start_time=e.start_time,
            finish_time=e.finish_time + extra,
            detections=tuple(dets),
        )
        for e, dets in zip(log.entries, forecasted)
    )
    return EmissionLog(clip_id=log.clip_id, entries=entries)
