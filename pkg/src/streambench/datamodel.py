"""Dataset ingestion, triplet construction, and velocity resampling.

Datasets arrive as two JSON files: COCO-style annotations plus a clip
manifest that orders image ids into fixed-rate clips::

    {"fps": 30, "clips": [{"clip_id": 0, "image_ids": [10, 11, 12]}]}

Frame timestamps are derived as index_in_clip / fps; the stream is assumed
uniform-rate.
"""

from __future__ import annotations

import json
import random
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DatasetParseError, DatasetReferenceError, ValidationError
from .geometry import BBox


@dataclass(frozen=True)
class AnnotatedBox:
    """One ground-truth box on a frame."""

    bbox: BBox
    category_id: int
    track_id: int | None = None
    iscrowd: bool = False


@dataclass(frozen=True)
class FrameAnnotations:
    """Ground truth of one frame within a clip."""

    frame_id: int
    clip_id: int
    index_in_clip: int
    timestamp: float
    boxes: tuple[AnnotatedBox, ...] = ()


@dataclass(frozen=True)
class Detection:
    """One detector output box; det_id gives a stable tie-break at equal scores."""

    frame_id: int
    bbox: BBox
    category_id: int
    score: float
    det_id: int | None = None


@dataclass(frozen=True)
class ClipStream:
    """An ordered, fixed-rate sequence of annotated frames."""

    clip_id: int
    fps: float
    frames: tuple[FrameAnnotations, ...]

    def __post_init__(self):
        if self.fps <= 0:
            raise ValidationError(f"clip {self.clip_id}: fps must be positive, got {self.fps}")
        if not self.frames:
            raise ValidationError(f"clip {self.clip_id}: frames must be nonempty")

    def __len__(self) -> int:
        return len(self.frames)

    def frame_by_id(self, frame_id: int) -> FrameAnnotations:
        for f in self.frames:
            if f.frame_id == frame_id:
                return f
        raise DatasetReferenceError(f"clip {self.clip_id} has no frame id {frame_id}")


@dataclass
class Dataset:
    """Loaded clips plus the category table they were validated against."""

    clips: list[ClipStream]
    categories: dict[int, str]
    fps: float

    def frames_by_id(self) -> dict[int, FrameAnnotations]:
        return {f.frame_id: f for clip in self.clips for f in clip.frames}


@dataclass(frozen=True)
class Triplet:
    """(previous, current, future) frame ids at a velocity multiplier."""

    prev_frame_id: int
    cur_frame_id: int
    future_frame_id: int
    velocity: int
    clip_id: int


@dataclass(frozen=True)
class TripletSet:
    velocity: int
    triplets: tuple[Triplet, ...]

    @property
    def count(self) -> int:
        return len(self.triplets)


def _load_json(path: str | Path):
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise DatasetReferenceError(f"input file does not exist: {path}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetParseError(f"{path}: malformed JSON at byte {exc.pos}: {exc.msg}") from None


def load_dataset(annotations_path: str | Path, manifest_path: str | Path) -> Dataset:
    """Load a COCO-style annotation file together with its clip manifest.

    Raises:
        DatasetParseError: malformed JSON (message names the byte offset).
        DatasetReferenceError: an image id is referenced on one side only.
        ValidationError: invariant violations (bad fps, duplicate or
            mismatched frame indices, unknown categories).
    """
    coco = _load_json(annotations_path)
    manifest = _load_json(manifest_path)

    categories = {int(c["id"]): str(c.get("name", c["id"])) for c in coco.get("categories", [])}
    images = {int(img["id"]): img for img in coco.get("images", [])}

    fps = float(manifest.get("fps", 30.0))
    if fps <= 0:
        raise ValidationError(f"manifest fps must be positive, got {fps}")

    anns_by_image: dict[int, list[dict]] = {}
    for ann in coco.get("annotations", []):
        anns_by_image.setdefault(int(ann["image_id"]), []).append(ann)

    clips: list[ClipStream] = []
    seen_image_ids: set[int] = set()
    for clip_entry in manifest.get("clips", []):
        clip_id = int(clip_entry["clip_id"])
        frames = []
        for index, image_id in enumerate(clip_entry["image_ids"]):
            image_id = int(image_id)
            if image_id in seen_image_ids:
                raise ValidationError(f"image id {image_id} appears more than once in the manifest")
            seen_image_ids.add(image_id)
            if image_id not in images:
                raise DatasetReferenceError(
                    f"manifest references image id {image_id} missing from the annotation file"
                )
            declared = images[image_id].get("frame_index")
            if declared is not None and int(declared) != index:
                raise ValidationError(
                    f"image id {image_id}: frame_index {declared} does not match its "
                    f"manifest position {index} (non-contiguous clip indices)"
                )
            boxes = []
            for ann in anns_by_image.get(image_id, []):
                cat = int(ann["category_id"])
                if cat not in categories:
                    raise ValidationError(
                        f"annotation on image {image_id} uses unknown category id {cat}"
                    )
                x, y, w, h = (float(v) for v in ann["bbox"])
                track = ann.get("track_id")
                boxes.append(
                    AnnotatedBox(
                        bbox=BBox(x, y, w, h),
                        category_id=cat,
                        track_id=None if track is None else int(track),
                        iscrowd=bool(ann.get("iscrowd", 0)),
                    )
                )
            frames.append(
                FrameAnnotations(
                    frame_id=image_id,
                    clip_id=clip_id,
                    index_in_clip=index,
                    timestamp=index / fps,
                    boxes=tuple(boxes),
                )
            )
        clips.append(ClipStream(clip_id=clip_id, fps=fps, frames=tuple(frames)))

    for image_id in images:
        if image_id not in seen_image_ids:
            raise DatasetReferenceError(
                f"annotation file contains image id {image_id} that no manifest clip lists"
            )
    for image_id in anns_by_image:
        if image_id not in seen_image_ids:
            raise DatasetReferenceError(
                f"annotations reference image id {image_id} that no manifest clip lists"
            )

    return Dataset(clips=clips, categories=categories, fps=fps)


def save_dataset(dataset: Dataset, annotations_path: str | Path, manifest_path: str | Path) -> None:
    """Write a dataset back to COCO + manifest JSON (load_dataset round-trips it)."""
    images = []
    annotations = []
    ann_id = 1
    for clip in dataset.clips:
        for f in clip.frames:
            images.append({"id": f.frame_id, "frame_index": f.index_in_clip})
            for box in f.boxes:
                entry = {
                    "id": ann_id,
                    "image_id": f.frame_id,
                    "category_id": box.category_id,
                    "bbox": list(box.bbox.as_xywh()),
                    "area": box.bbox.area,
                    "iscrowd": int(box.iscrowd),
                }
                if box.track_id is not None:
                    entry["track_id"] = box.track_id
                annotations.append(entry)
                ann_id += 1
    coco = {
        "images": images,
        "annotations": annotations,
        "categories": [{"id": cid, "name": name} for cid, name in sorted(dataset.categories.items())],
    }
    manifest = {
        "fps": dataset.fps,
        "clips": [
            {"clip_id": clip.clip_id, "image_ids": [f.frame_id for f in clip.frames]}
            for clip in dataset.clips
        ],
    }
    Path(annotations_path).write_text(json.dumps(coco, sort_keys=True))
    Path(manifest_path).write_text(json.dumps(manifest, sort_keys=True))


def load_detections(path: str | Path, dataset: Dataset) -> dict[int, list[Detection]]:
    """Load COCO results-format detections, grouped by frame id.

    Scores must lie in [0, 1], categories and image ids must exist in the
    dataset; file order is preserved and numbers each detection (det_id).
    """
    raw = _load_json(path)
    if not isinstance(raw, list):
        raise ValidationError(f"{path}: detection file must contain a JSON array")
    frame_ids = {f.frame_id for clip in dataset.clips for f in clip.frames}
    grouped: dict[int, list[Detection]] = {}
    for det_id, entry in enumerate(raw):
        image_id = int(entry["image_id"])
        if image_id not in frame_ids:
            raise DatasetReferenceError(f"detection {det_id} references unknown image id {image_id}")
        cat = int(entry["category_id"])
        if cat not in dataset.categories:
            raise ValidationError(f"detection {det_id} uses unknown category id {cat}")
        score = float(entry["score"])
        if not 0.0 <= score <= 1.0:
            raise ValidationError(f"detection {det_id} has score {score} outside [0, 1]")
        x, y, w, h = (float(v) for v in entry["bbox"])
        grouped.setdefault(image_id, []).append(
            Detection(frame_id=image_id, bbox=BBox(x, y, w, h), category_id=cat, score=score, det_id=det_id)
        )
    return grouped


def save_detections(detections: Mapping[int, Sequence[Detection]], path: str | Path) -> None:
    rows = []
    for frame_id in sorted(detections):
        for det in detections[frame_id]:
            rows.append(
                {
                    "image_id": det.frame_id,
                    "category_id": det.category_id,
                    "bbox": list(det.bbox.as_xywh()),
                    "score": det.score,
                }
            )
    Path(path).write_text(json.dumps(rows))


def build_triplets(clip: ClipStream, velocity: int) -> TripletSet:
    """Enumerate (t-M, t, t+M) frame triples within one clip.

    M >= 1 keeps only t with both neighbors in range (the first and last M
    frames are consumed); M = 0 duplicates every frame into (t, t, t).
    """
    if velocity < 0:
        raise ValidationError(f"velocity must be >= 0, got {velocity}")
    frames = clip.frames
    triplets = []
    if velocity == 0:
        for f in frames:
            triplets.append(
                Triplet(f.frame_id, f.frame_id, f.frame_id, velocity=0, clip_id=clip.clip_id)
            )
    else:
        for t in range(velocity, len(frames) - velocity):
            triplets.append(
                Triplet(
                    prev_frame_id=frames[t - velocity].frame_id,
                    cur_frame_id=frames[t].frame_id,
                    future_frame_id=frames[t + velocity].frame_id,
                    velocity=velocity,
                    clip_id=clip.clip_id,
                )
            )
    return TripletSet(velocity=velocity, triplets=tuple(triplets))


def triplet_count(clip_length: int, velocity: int) -> int:
    """Closed form for the number of triplets a clip yields."""
    if velocity == 0:
        return clip_length
    return max(0, clip_length - 2 * velocity)


def sample_mixed_velocity(
    clips: Sequence[ClipStream], velocities: Iterable[int], seed: int
) -> list[Triplet]:
    """Seeded shuffle over the union of all triplet sets for the velocities.

    Every triplet appears exactly once per epoch; identical seeds give an
    identical order.
    """
    velocities = sorted(set(velocities))
    if not velocities:
        raise ValidationError("velocities must be nonempty")
    pool: list[Triplet] = []
    for clip in clips:
        for m in velocities:
            pool.extend(build_triplets(clip, m).triplets)
    if not pool:
        raise ValidationError("no triplets available for the requested velocities")
    rng = random.Random(seed)
    rng.shuffle(pool)
    return pool


def resample_clip(clip: ClipStream, stride: int) -> ClipStream:
    """Keep every stride-th frame and renumber, emulating stride-times speed.

    The resampled clip keeps the original frame ids (so detections keyed by
    frame id still apply) but runs at the same fps, so per-frame motion is
    multiplied by the stride. stride 0 and 1 return the clip unchanged;
    stride 0 velocity semantics are handled at evaluation level.
    """
    if stride < 0:
        raise ValidationError(f"stride must be >= 0, got {stride}")
    if stride <= 1:
        return clip
    kept = clip.frames[::stride]
    frames = tuple(
        FrameAnnotations(
            frame_id=f.frame_id,
            clip_id=clip.clip_id,
            index_in_clip=i,
            timestamp=i / clip.fps,
            boxes=f.boxes,
        )
        for i, f in enumerate(kept)
    )
    return ClipStream(clip_id=clip.clip_id, fps=clip.fps, frames=frames)


def resample_dataset(dataset: Dataset, stride: int) -> Dataset:
    """Resample every clip; clips too short to survive are dropped with a warning."""
    clips = []
    for clip in dataset.clips:
        resampled = resample_clip(clip, stride)
        if stride >= 2 and len(resampled) < 2:
            warnings.warn(
                f"clip {clip.clip_id} is too short for stride {stride}; skipped", stacklevel=2
            )
            continue
        clips.append(resampled)
    return Dataset(clips=clips, categories=dict(dataset.categories), fps=dataset.fps)
