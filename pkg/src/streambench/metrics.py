"""COCO-style average precision, streaming AP (sAP), and velocity-aware
streaming AP (VsAP).

Streaming evaluation pairs each annotated frame time with whatever the
emission log had finished producing by then, pools all pairs, and scores
them with the same matching machinery as offline AP. Query times that fall
before the detector's first output carry no prediction at all and are
excluded from the pool (see README notes on cold start).
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .datamodel import AnnotatedBox, ClipStream, Detection, resample_clip
from .errors import ValidationError
from .geometry import iou_matrix
from .simulation import EmissionLog, LatencyModel, apply_forecaster, simulate

IOU_THRESHOLDS = tuple(np.round(np.linspace(0.5, 0.95, 10), 2))
RECALL_POINTS = np.round(np.linspace(0.0, 1.0, 101), 2)
MAX_DETS_PER_FRAME = 100

_AREA_RANGES: dict[str, tuple[float, float]] = {
    "all": (0.0, float("inf")),
    "small": (0.0, 32.0**2),
    "medium": (32.0**2, 96.0**2),
    "large": (96.0**2, float("inf")),
}

GTBoxes = Sequence[AnnotatedBox]
DetBoxes = Sequence[Detection]
EvalPair = tuple[GTBoxes, DetBoxes]


@dataclass
class EvalReport:
    """AP breakdown; None marks metrics with no ground truth to score."""

    ap: float | None
    ap50: float | None
    ap75: float | None
    ap_small: float | None
    ap_medium: float | None
    ap_large: float | None
    per_category: dict[int, float | None]
    evaluated_pairs: int

    def to_json_obj(self) -> dict:
        return {
            "ap": self.ap,
            "ap50": self.ap50,
            "ap75": self.ap75,
            "ap_small": self.ap_small,
            "ap_medium": self.ap_medium,
            "ap_large": self.ap_large,
            "per_category": {str(k): v for k, v in sorted(self.per_category.items())},
            "evaluated_pairs": self.evaluated_pairs,
        }


@dataclass
class VelocityEvalReport:
    """Per-velocity sAP reports plus their arithmetic mean."""

    sap_by_velocity: dict[int, EvalReport | None]
    vsap: float | None

    def to_json_obj(self) -> dict:
        return {
            "sap_by_velocity": {
                str(m): (r.to_json_obj() if r is not None else None)
                for m, r in sorted(self.sap_by_velocity.items())
            },
            "vsap": self.vsap,
        }


def _sorted_dets(dets: DetBoxes) -> list[Detection]:
    indexed = list(enumerate(dets))
    indexed.sort(key=lambda p: (-p[1].score, p[1].det_id if p[1].det_id is not None else p[0]))
    return [d for _, d in indexed[:MAX_DETS_PER_FRAME]]


def _greedy_match(
    ious: np.ndarray,
    gt_ignore: Sequence[bool],
    gt_iscrowd: Sequence[bool],
    det_areas: Sequence[float],
    threshold: float,
    area_range: tuple[float, float],
) -> tuple[np.ndarray, np.ndarray]:
    """Match detections (already score-sorted) to ground truth at one threshold.

    Each detection takes the unmatched ground-truth box of highest IoU >=
    threshold, preferring non-ignored boxes; ties go to the earlier box.
    Crowd boxes may absorb several detections. Returns per-detection
    true-positive and ignore flags.
    """
    n_det, n_gt = ious.shape
    order = sorted(range(n_gt), key=lambda g: bool(gt_ignore[g]))
    matched = [False] * n_gt
    tp = np.zeros(n_det, dtype=bool)
    ignore = np.zeros(n_det, dtype=bool)
    lo, hi = area_range
    for d in range(n_det):
        best = -1
        best_iou = threshold
        for g in order:
            if matched[g] and not gt_iscrowd[g]:
                continue
            if best != -1 and not gt_ignore[best] and gt_ignore[g]:
                break
            if ious[d, g] > best_iou or (best == -1 and ious[d, g] >= threshold):
                best_iou = ious[d, g]
                best = g
        if best == -1:
            ignore[d] = not (lo <= det_areas[d] < hi)
            continue
        matched[best] = True
        tp[d] = not gt_ignore[best]
        ignore[d] = bool(gt_ignore[best])
    return tp, ignore


def _ap_curve(
    scores: np.ndarray, tp: np.ndarray, det_ignore: np.ndarray, npig: int
) -> float:
    """101-point interpolated AP from pooled detection flags."""
    order = np.argsort(-scores, kind="mergesort")
    keep = ~det_ignore[order]
    tps = tp[order][keep]
    if tps.size == 0:
        return 0.0
    tp_cum = np.cumsum(tps)
    fp_cum = np.cumsum(~tps)
    recall = tp_cum / npig
    precision = tp_cum / (tp_cum + fp_cum)
    for i in range(precision.size - 1, 0, -1):
        precision[i - 1] = max(precision[i - 1], precision[i])
    inds = np.searchsorted(recall, RECALL_POINTS, side="left")
    q = np.zeros(RECALL_POINTS.size)
    valid = inds < precision.size
    q[valid] = precision[inds[valid]]
    return float(q.mean())


def evaluate_pairs(pairs: Sequence[EvalPair]) -> EvalReport:
    """Score pooled (ground truth, detections) pairs the COCO way.

    Every pair is an independent evaluation unit; matching never crosses
    pairs. Categories absent from the ground truth are excluded from the
    means rather than scored zero.
    """
    categories = sorted(
        {b.category_id for gt, _ in pairs for b in gt}
        | {d.category_id for _, dets in pairs for d in dets}
    )
    # per category and area name: (10,) threshold APs, or None when no ground truth
    results: dict[int, dict[str, np.ndarray | None]] = {}
    for cat in categories:
        per_pair = []
        for gt, dets in pairs:
            gts = [b for b in gt if b.category_id == cat]
            cat_dets = _sorted_dets([d for d in dets if d.category_id == cat])
            ious = iou_matrix([d.bbox for d in cat_dets], [b.bbox for b in gts])
            per_pair.append(
                (
                    [b.bbox.area for b in gts],
                    [b.iscrowd for b in gts],
                    np.array([d.score for d in cat_dets]),
                    [d.bbox.area for d in cat_dets],
                    ious,
                )
            )
        results[cat] = {}
        for area_name, (lo, hi) in _AREA_RANGES.items():
            npig = 0
            ignore_per_pair = []
            for gt_areas, gt_crowd, _, _, _ in per_pair:
                flags = [c or not (lo <= a < hi) for a, c in zip(gt_areas, gt_crowd)]
                ignore_per_pair.append(flags)
                npig += sum(1 for f in flags if not f)
            if npig == 0:
                results[cat][area_name] = None
                continue
            scores = np.concatenate([p[2] for p in per_pair]) if per_pair else np.zeros(0)
            ap_per_threshold = np.zeros(len(IOU_THRESHOLDS))
            for ti, threshold in enumerate(IOU_THRESHOLDS):
                tp_parts = []
                ig_parts = []
                for (gt_areas, gt_crowd, _, det_areas, ious), gt_ig in zip(
                    per_pair, ignore_per_pair
                ):
                    tp, ig = _greedy_match(ious, gt_ig, gt_crowd, det_areas, threshold, (lo, hi))
                    tp_parts.append(tp)
                    ig_parts.append(ig)
                tp_all = np.concatenate(tp_parts) if tp_parts else np.zeros(0, dtype=bool)
                ig_all = np.concatenate(ig_parts) if ig_parts else np.zeros(0, dtype=bool)
                ap_per_threshold[ti] = _ap_curve(scores, tp_all, ig_all, npig)
            results[cat][area_name] = ap_per_threshold

    def mean_over_cats(extract: Callable[[np.ndarray], float], area: str) -> float | None:
        values = [
            extract(results[cat][area])
            for cat in categories
            if results[cat][area] is not None
        ]
        return float(np.mean(values)) if values else None

    idx50 = IOU_THRESHOLDS.index(0.5)
    idx75 = IOU_THRESHOLDS.index(0.75)
    per_category = {
        cat: (float(np.mean(results[cat]["all"])) if results[cat]["all"] is not None else None)
        for cat in categories
    }
    return EvalReport(
        ap=mean_over_cats(lambda a: float(a.mean()), "all"),
        ap50=mean_over_cats(lambda a: float(a[idx50]), "all"),
        ap75=mean_over_cats(lambda a: float(a[idx75]), "all"),
        ap_small=mean_over_cats(lambda a: float(a.mean()), "small"),
        ap_medium=mean_over_cats(lambda a: float(a.mean()), "medium"),
        ap_large=mean_over_cats(lambda a: float(a.mean()), "large"),
        per_category=per_category,
        evaluated_pairs=len(pairs),
    )


def ground_truth_by_frame(clips: Sequence[ClipStream]) -> dict[int, GTBoxes]:
    return {f.frame_id: f.boxes for clip in clips for f in clip.frames}


def average_precision(
    gt_by_frame: Mapping[int, GTBoxes], dets_by_frame: Mapping[int, DetBoxes]
) -> EvalReport:
    """Offline COCO-style AP over per-frame ground truth and detections."""
    unknown = set(dets_by_frame) - set(gt_by_frame)
    if unknown:
        raise ValidationError(f"detections reference unknown frame ids: {sorted(unknown)[:5]}")
    pairs = [(gt_by_frame[fid], list(dets_by_frame.get(fid, []))) for fid in sorted(gt_by_frame)]
    return evaluate_pairs(pairs)


def offline_report(clips: Sequence[ClipStream], dets_by_frame: Mapping[int, DetBoxes]) -> EvalReport:
    return average_precision(ground_truth_by_frame(clips), dets_by_frame)


def evaluate_streaming(
    clips: Sequence[ClipStream],
    logs: Sequence[EmissionLog],
    *,
    against_source: bool = False,
) -> EvalReport:
    """Streaming AP: query each log at every annotated frame time.

    Each query pairs the latest finished emission with the ground truth of
    the query frame (``against_source`` instead pairs it with the emission's
    own source frame, the frozen-world semantics used at velocity 0).
    Queries before the first emission have no prediction and are skipped.
    """
    if len(clips) != len(logs):
        raise ValidationError(f"{len(clips)} clips but {len(logs)} emission logs")
    pairs: list[EvalPair] = []
    for clip, log in zip(clips, logs):
        if clip.clip_id != log.clip_id:
            raise ValidationError(
                f"emission log for clip {log.clip_id} paired with clip {clip.clip_id}"
            )
        frames_by_id = {f.frame_id: f for f in clip.frames}
        # entries are finish-time ordered, queries are time ordered: one sweep
        entries = log.entries
        visible = 0
        for frame in clip.frames:
            while visible < len(entries) and entries[visible].finish_time <= frame.timestamp:
                visible += 1
            if visible == 0:
                continue
            emission = entries[visible - 1]
            if against_source:
                gt_frame = frames_by_id[emission.source_frame_id]
            else:
                gt_frame = frame
            pairs.append((gt_frame.boxes, list(emission.detections)))
    return evaluate_pairs(pairs)


def _map_clips(fn: Callable, clips: Sequence[ClipStream], jobs: int) -> list:
    if jobs <= 1:
        return [fn(c) for c in clips]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, clips))


def simulate_clips(
    clips: Sequence[ClipStream],
    detections_by_frame: Mapping[int, DetBoxes],
    latency: LatencyModel,
    forecaster=None,
    jobs: int = 1,
) -> list[EmissionLog]:
    """Simulate every clip (optionally forecasted); order is stable for any jobs."""

    def run(clip: ClipStream) -> EmissionLog:
        log = simulate(clip, detections_by_frame, latency)
        if forecaster is not None:
            log = apply_forecaster(log, clip, forecaster)
        return log

    return _map_clips(run, clips, jobs)


def evaluate_vsap(
    clips: Sequence[ClipStream],
    detections_by_frame: Mapping[int, DetBoxes],
    latency: LatencyModel,
    velocities: Iterable[int] = range(7),
    forecaster=None,
    jobs: int = 1,
) -> VelocityEvalReport:
    """sAP at each velocity multiplier plus their arithmetic mean.

    Velocity M >= 1 resamples every clip at stride M (same fps, so per-frame
    motion scales by M) and reruns the stream simulation. M = 0 emulates a
    frozen world by scoring each emission against its source frame's ground
    truth. Velocities whose resampled clips are all too short are reported
    None, excluded from the mean, and warned about.
    """
    reports: dict[int, EvalReport | None] = {}
    for m in sorted(set(velocities)):
        if m < 0:
            raise ValidationError(f"velocities must be >= 0, got {m}")
        if m == 0:
            usable = list(clips)
        else:
            usable = []
            for clip in clips:
                resampled = resample_clip(clip, m)
                if len(resampled) < 2:
                    warnings.warn(
                        f"clip {clip.clip_id} too short for velocity {m}; skipped",
                        stacklevel=2,
                    )
                    continue
                usable.append(resampled)
        if not usable:
            warnings.warn(f"velocity {m} has no clips long enough; reported undefined", stacklevel=2)
            reports[m] = None
            continue
        logs = simulate_clips(usable, detections_by_frame, latency, forecaster, jobs)
        reports[m] = evaluate_streaming(usable, logs, against_source=(m == 0))
    defined = [r.ap for r in reports.values() if r is not None and r.ap is not None]
    vsap = float(np.mean(defined)) if defined else None
    return VelocityEvalReport(sap_by_velocity=reports, vsap=vsap)
