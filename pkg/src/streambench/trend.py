"""Trend-aware loss weights: per-object motion factors and their
sum-preserving normalization, as pure functions.

An object's trend factor is the best IoU between its future box and the
reference-frame boxes. Low overlap means fast apparent motion, which maps
to a larger raw regression weight; brand-new objects (overlap below the
tau threshold) get the fixed weight 1/nu instead.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .datamodel import ClipStream, Triplet
from .errors import ConfigError, ValidationError
from .geometry import BBox, iou_matrix

DEFAULT_TAU = 0.5
DEFAULT_NU = 1.6


@dataclass(frozen=True)
class TrendConfig:
    """Threshold tau for new-object detection and their fixed weight divisor nu."""

    tau: float = DEFAULT_TAU
    nu: float = DEFAULT_NU

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ConfigError(f"tau must lie strictly inside (0, 1), got {self.tau}")
        if self.nu <= 0.0:
            raise ConfigError(f"nu must be positive, got {self.nu}")
        if self.nu <= 1.0:
            warnings.warn(
                f"nu={self.nu} <= 1 puts extra weight on new objects, which is known to"
                " degrade accuracy; values above 1 are recommended",
                stacklevel=2,
            )


@dataclass(frozen=True)
class TrendWeights:
    """Per-object matching IoU, raw weight, and normalized weight."""

    m_iou: tuple[float, ...]
    omega: tuple[float, ...]
    omega_hat: tuple[float, ...]


@dataclass(frozen=True)
class LossTerms:
    """Per-positive-object regression losses plus scalar cls/obj losses."""

    reg_losses: tuple[float, ...]
    cls_loss: float
    obj_loss: float


def trend_factors(
    future_boxes: Sequence[BBox],
    reference_boxes: Sequence[BBox],
    cfg: TrendConfig = TrendConfig(),
) -> tuple[list[float], list[float]]:
    """Matching IoU and raw weight per future-frame object.

    Each object's matching IoU is its max IoU against the reference boxes
    (0 when there are none). The raw weight is 1/mIoU when the object
    overlaps at least tau, else 1/nu.
    """
    if reference_boxes:
        m_iou = iou_matrix(future_boxes, reference_boxes).max(axis=1)
    else:
        m_iou = np.zeros(len(future_boxes), dtype=np.float64)
    omega = [float(1.0 / v) if v >= cfg.tau else 1.0 / cfg.nu for v in m_iou]
    return [float(v) for v in m_iou], omega


def advanced_trend_factors(
    future_boxes: Sequence[BBox],
    adjacent_boxes: Sequence[BBox],
    cfg: TrendConfig = TrendConfig(),
) -> tuple[list[float], list[float]]:
    """Trend factors measured against the true-rate neighbor frame.

    Identical math to :func:`trend_factors`; the caller passes the boxes of
    the frame actually adjacent to the future frame at the native frame
    rate, so mixed-velocity batches share one weight scale.
    """
    return trend_factors(future_boxes, adjacent_boxes, cfg)


def normalize_weights(omega: Sequence[float], reg_losses: Sequence[float]) -> list[float]:
    """Rescale raw weights so the weighted regression loss sum is unchanged.

    Returns omega_i * sum(L) / sum(omega_j * L_j). When every weighted loss
    is zero the reweighting would be a no-op anyway, so all-ones weights are
    returned instead of dividing by zero.
    """
    if len(omega) != len(reg_losses):
        raise ValidationError(
            f"omega and reg_losses lengths differ: {len(omega)} vs {len(reg_losses)}"
        )
    if len(omega) == 0:
        return []
    losses = np.asarray(reg_losses, dtype=np.float64)
    if np.any(losses < 0):
        raise ValidationError("regression losses must be nonnegative")
    w = np.asarray(omega, dtype=np.float64)
    weighted = float(np.dot(w, losses))
    if weighted == 0.0:
        return [1.0] * len(omega)
    scale = float(losses.sum()) / weighted
    return [float(v) for v in w * scale]


def total_loss(terms: LossTerms, omega_hat: Sequence[float]) -> float:
    """Weighted regression losses plus unweighted classification/objectness."""
    if len(omega_hat) != len(terms.reg_losses):
        raise ValidationError(
            f"omega_hat length {len(omega_hat)} does not match reg_losses length "
            f"{len(terms.reg_losses)}"
        )
    reg = float(np.dot(omega_hat, terms.reg_losses)) if omega_hat else 0.0
    return reg + terms.cls_loss + terms.obj_loss


def _reference_index(future_index: int, velocity: int, advanced: bool) -> int:
    if velocity == 0:
        # frozen stream: the adjacent frame is the frame itself
        return future_index
    if advanced:
        return future_index - 1
    return future_index - velocity


def triplet_trend_weights(
    clip: ClipStream,
    triplet: Triplet,
    cfg: TrendConfig = TrendConfig(),
    *,
    advanced: bool = False,
    reg_losses: Sequence[float] | None = None,
) -> TrendWeights:
    """Trend weights for every ground-truth object of a triplet's future frame.

    Matching is restricted to reference boxes of the same category, so an
    overlapping object of another class cannot suppress a weight. With
    ``advanced`` the reference is the native-rate neighbor of the future
    frame instead of the triplet's current frame. ``reg_losses`` defaults to
    all ones, which makes omega_hat a pure weight-shape diagnostic.
    """
    future = clip.frame_by_id(triplet.future_frame_id)
    ref_index = _reference_index(future.index_in_clip, triplet.velocity, advanced)
    if not 0 <= ref_index < len(clip.frames):
        raise ValidationError(
            f"triplet at frame {triplet.future_frame_id} has no reference frame "
            f"(index {ref_index}) in clip {clip.clip_id}"
        )
    reference = clip.frames[ref_index]

    ref_by_cat: dict[int, list[BBox]] = {}
    for box in reference.boxes:
        ref_by_cat.setdefault(box.category_id, []).append(box.bbox)

    m_iou: list[float] = []
    omega: list[float] = []
    for box in future.boxes:
        m, w = trend_factors([box.bbox], ref_by_cat.get(box.category_id, []), cfg)
        m_iou.append(m[0])
        omega.append(w[0])

    if reg_losses is None:
        reg_losses = [1.0] * len(omega)
    omega_hat = normalize_weights(omega, reg_losses)
    return TrendWeights(m_iou=tuple(m_iou), omega=tuple(omega), omega_hat=tuple(omega_hat))
