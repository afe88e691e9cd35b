"""Shared builders for hand-specified clips and detections."""

from __future__ import annotations

from streambench import AnnotatedBox, BBox, ClipStream, Detection, FrameAnnotations


def make_clip(boxes_per_frame, fps=30.0, clip_id=0):
    """Build a clip from per-frame lists of (x, y, w, h, category_id) tuples."""
    frames = []
    for index, boxes in enumerate(boxes_per_frame):
        annotated = tuple(
            AnnotatedBox(bbox=BBox(x, y, w, h), category_id=cat) for (x, y, w, h, cat) in boxes
        )
        frames.append(
            FrameAnnotations(
                frame_id=clip_id * 1_000_000 + index,
                clip_id=clip_id,
                index_in_clip=index,
                timestamp=index / fps,
                boxes=annotated,
            )
        )
    return ClipStream(clip_id=clip_id, fps=fps, frames=tuple(frames))


def perfect_detections(clip, score=1.0):
    """Detections that copy the ground truth exactly."""
    out = {}
    det_id = 0
    for frame in clip.frames:
        dets = []
        for box in frame.boxes:
            dets.append(
                Detection(
                    frame_id=frame.frame_id,
                    bbox=box.bbox,
                    category_id=box.category_id,
                    score=score,
                    det_id=det_id,
                )
            )
            det_id += 1
        out[frame.frame_id] = dets
    return out
