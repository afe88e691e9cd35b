"""Deterministic synthetic scenes: ground truth with known linear motion
plus a configurable noisy detector.

These scenes are the oracle for the streaming claims: box displacement per
frame equals the configured velocity exactly (before clipping), so IoU
between consecutive frames has a closed form.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .datamodel import AnnotatedBox, ClipStream, Dataset, Detection, FrameAnnotations
from .errors import ConfigError
from .geometry import BBox

_MIN_VISIBLE_AREA = 1.0  # px^2; clipped boxes below this are dropped


@dataclass(frozen=True)
class MovingObject:
    """One object with linear motion and an optional lifetime window."""

    bbox: BBox
    velocity: tuple[float, float] = (0.0, 0.0)
    size_rate: tuple[float, float] = (0.0, 0.0)
    category_id: int = 1
    spawn_frame: int = 0
    despawn_frame: int | None = None  # exclusive; None = scene end


@dataclass(frozen=True)
class SceneConfig:
    image_size: tuple[float, float] = (1920.0, 1200.0)
    fps: float = 30.0
    num_frames: int = 30
    objects: tuple[MovingObject, ...] = ()
    ego_shift: tuple[float, float] = (0.0, 0.0)
    seed: int = 0
    clip_id: int = 0

    def __post_init__(self):
        if self.num_frames < 1:
            raise ConfigError(f"num_frames must be >= 1, got {self.num_frames}")
        if self.fps <= 0:
            raise ConfigError(f"fps must be positive, got {self.fps}")
        for i, obj in enumerate(self.objects):
            despawn = obj.despawn_frame if obj.despawn_frame is not None else self.num_frames
            if despawn <= obj.spawn_frame:
                raise ConfigError(
                    f"object {i}: despawn_frame {despawn} must exceed spawn_frame {obj.spawn_frame}"
                )


@dataclass(frozen=True)
class NoiseConfig:
    """Detector imperfections; all randomness is reproducible from the seed."""

    center_jitter_std: float = 0.0
    size_jitter_std: float = 0.0
    drop_prob: float = 0.0
    false_positive_rate: float = 0.0
    score_range: tuple[float, float] = (1.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        if self.center_jitter_std < 0 or self.size_jitter_std < 0:
            raise ConfigError("jitter stds must be >= 0")
        if not 0.0 <= self.drop_prob <= 1.0:
            raise ConfigError(f"drop_prob must lie in [0, 1], got {self.drop_prob}")
        if self.false_positive_rate < 0:
            raise ConfigError(f"false_positive_rate must be >= 0, got {self.false_positive_rate}")
        lo, hi = self.score_range
        if not 0.0 <= lo <= hi <= 1.0:
            raise ConfigError(f"score_range must satisfy 0 <= lo <= hi <= 1, got {self.score_range}")


def _frame_id(clip_id: int, index: int) -> int:
    return clip_id * 1_000_000 + index


def _object_box_at(cfg: SceneConfig, obj: MovingObject, t: int) -> BBox | None:
    despawn = obj.despawn_frame if obj.despawn_frame is not None else cfg.num_frames
    if not obj.spawn_frame <= t < despawn:
        return None
    x = obj.bbox.x + t * (obj.velocity[0] + cfg.ego_shift[0])
    y = obj.bbox.y + t * (obj.velocity[1] + cfg.ego_shift[1])
    w = max(obj.bbox.w + t * obj.size_rate[0], 0.0)
    h = max(obj.bbox.h + t * obj.size_rate[1], 0.0)
    width, height = cfg.image_size
    x1 = max(x, 0.0)
    y1 = max(y, 0.0)
    x2 = min(x + w, width)
    y2 = min(y + h, height)
    if x2 - x1 <= 0 or y2 - y1 <= 0 or (x2 - x1) * (y2 - y1) < _MIN_VISIBLE_AREA:
        return None
    return BBox(x1, y1, x2 - x1, y2 - y1)


def generate_clip(cfg: SceneConfig) -> ClipStream:
    """Render the scene's ground truth; a pure function of its config."""
    frames = []
    any_live = False
    for t in range(cfg.num_frames):
        boxes = []
        for track_id, obj in enumerate(cfg.objects):
            box = _object_box_at(cfg, obj, t)
            if box is None:
                continue
            boxes.append(AnnotatedBox(bbox=box, category_id=obj.category_id, track_id=track_id))
        any_live = any_live or bool(boxes)
        frames.append(
            FrameAnnotations(
                frame_id=_frame_id(cfg.clip_id, t),
                clip_id=cfg.clip_id,
                index_in_clip=t,
                timestamp=t / cfg.fps,
                boxes=tuple(boxes),
            )
        )
    if not any_live:
        warnings.warn("generated clip has no live objects in any frame", stacklevel=2)
    return ClipStream(clip_id=cfg.clip_id, fps=cfg.fps, frames=tuple(frames))


def generate_dataset(scenes: list[SceneConfig], categories: Mapping[int, str] | None = None) -> Dataset:
    """Bundle several scenes into a loadable dataset with a category table."""
    clips = [generate_clip(s) for s in scenes]
    if categories is None:
        ids = sorted({b.category_id for c in clips for f in c.frames for b in f.boxes}) or [1]
        categories = {cid: f"category_{cid}" for cid in ids}
    fps = clips[0].fps if clips else 30.0
    return Dataset(clips=clips, categories=dict(categories), fps=fps)


def noisy_detector(clip: ClipStream, noise: NoiseConfig = NoiseConfig()) -> dict[int, list[Detection]]:
    """Derive detections from ground truth under drop/jitter/false-positive noise."""
    rng = np.random.default_rng(noise.seed)
    categories = sorted({b.category_id for f in clip.frames for b in f.boxes}) or [1]
    # false positives land inside the populated extent of the scene
    extents = [b.bbox.x + b.bbox.w for f in clip.frames for b in f.boxes]
    width = max(extents) if extents else 100.0
    out: dict[int, list[Detection]] = {}
    det_id = 0
    for frame in clip.frames:
        dets: list[Detection] = []
        for box in frame.boxes:
            if noise.drop_prob > 0 and rng.random() < noise.drop_prob:
                continue
            b = box.bbox
            dx = rng.normal(0.0, noise.center_jitter_std) if noise.center_jitter_std > 0 else 0.0
            dy = rng.normal(0.0, noise.center_jitter_std) if noise.center_jitter_std > 0 else 0.0
            dw = rng.normal(0.0, noise.size_jitter_std) if noise.size_jitter_std > 0 else 0.0
            dh = rng.normal(0.0, noise.size_jitter_std) if noise.size_jitter_std > 0 else 0.0
            lo, hi = noise.score_range
            score = float(rng.uniform(lo, hi)) if hi > lo else lo
            dets.append(
                Detection(
                    frame_id=frame.frame_id,
                    bbox=BBox(b.x + dx, b.y + dy, max(b.w + dw, 0.0), max(b.h + dh, 0.0)),
                    category_id=box.category_id,
                    score=score,
                    det_id=det_id,
                )
            )
            det_id += 1
        if noise.false_positive_rate > 0:
            for _ in range(int(rng.poisson(noise.false_positive_rate))):
                x = float(rng.uniform(0.0, width))
                y = float(rng.uniform(0.0, width))
                w = float(rng.uniform(4.0, max(width / 10.0, 8.0)))
                h = float(rng.uniform(4.0, max(width / 10.0, 8.0)))
                lo, hi = noise.score_range
                dets.append(
                    Detection(
                        frame_id=frame.frame_id,
                        bbox=BBox(x, y, w, h),
                        category_id=int(rng.choice(categories)),
                        score=float(rng.uniform(lo, hi)) if hi > lo else lo,
                        det_id=det_id,
                    )
                )
                det_id += 1
        out[frame.frame_id] = dets
    return out


def scene_from_json_obj(obj: dict) -> SceneConfig:
    objects = tuple(
        MovingObject(
            bbox=BBox(*[float(v) for v in o["bbox"]]),
            velocity=tuple(o.get("velocity", (0.0, 0.0))),
            size_rate=tuple(o.get("size_rate", (0.0, 0.0))),
            category_id=int(o.get("category_id", 1)),
            spawn_frame=int(o.get("spawn_frame", 0)),
            despawn_frame=(None if o.get("despawn_frame") is None else int(o["despawn_frame"])),
        )
        for o in obj.get("objects", [])
    )
    return SceneConfig(
        image_size=tuple(obj.get("image_size", (1920.0, 1200.0))),
        fps=float(obj.get("fps", 30.0)),
        num_frames=int(obj.get("num_frames", 30)),
        objects=objects,
        ego_shift=tuple(obj.get("ego_shift", (0.0, 0.0))),
        seed=int(obj.get("seed", 0)),
        clip_id=int(obj.get("clip_id", 0)),
    )


def noise_from_json_obj(obj: dict) -> NoiseConfig:
    return NoiseConfig(
        center_jitter_std=float(obj.get("center_jitter_std", 0.0)),
        size_jitter_std=float(obj.get("size_jitter_std", 0.0)),
        drop_prob=float(obj.get("drop_prob", 0.0)),
        false_positive_rate=float(obj.get("false_positive_rate", 0.0)),
        score_range=tuple(obj.get("score_range", (1.0, 1.0))),
        seed=int(obj.get("seed", 0)),
    )
