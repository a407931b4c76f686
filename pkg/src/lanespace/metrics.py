"""Segmentation and road-class evaluation: confusion counts, IoU, mIoU, accuracy."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import SegmentationMask

N_CLASSES = 3


@dataclass(frozen=True)
class ConfusionCounts:
    """Per-class true positive, false positive, false negative pixel counts."""

    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "fn"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            if arr.shape != (N_CLASSES,) or (arr < 0).any():
                raise ValueError(f"{name} must be {N_CLASSES} counts >= 0")
            object.__setattr__(self, name, arr)

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn
        )

    @classmethod
    def zero(cls) -> "ConfusionCounts":
        z = np.zeros(N_CLASSES, dtype=np.int64)
        return cls(z, z.copy(), z.copy())


def confusion(pred: SegmentationMask, gt: SegmentationMask) -> ConfusionCounts:
    """Single-pass confusion: pixel (pred=a, gt=b) is TP_a when a == b, else FP_a and FN_b."""
    if pred.data.shape != gt.data.shape:
        raise ValueError(
            f"shape mismatch: pred {pred.data.shape} vs gt {gt.data.shape}"
        )
    table = np.bincount(
        gt.data.ravel().astype(np.int64) * N_CLASSES + pred.data.ravel(),
        minlength=N_CLASSES * N_CLASSES,
    ).reshape(N_CLASSES, N_CLASSES)  # rows gt, cols pred
    tp = np.diag(table).copy()
    fp = table.sum(axis=0) - tp
    fn = table.sum(axis=1) - tp
    return ConfusionCounts(tp, fp, fn)


def iou(counts: ConfusionCounts, class_id: int) -> float | None:
    """TP / (FP + TP + FN); None when the class is absent (denominator 0)."""
    c = int(class_id)
    denom = int(counts.fp[c] + counts.tp[c] + counts.fn[c])
    if denom == 0:
        return None
    return float(counts.tp[c]) / denom


def miou(counts: ConfusionCounts) -> float:
    """Unweighted mean IoU over the classes that are not absent."""
    values = [v for c in range(N_CLASSES) if (v := iou(counts, c)) is not None]
    if not values:
        raise ValueError("mIoU undefined: every class is absent")
    return float(np.mean(values))


def accuracy(pred_classes: Sequence[int], gt_classes: Sequence[int]) -> float:
    """Fraction of exact road-class matches."""
    if len(pred_classes) != len(gt_classes):
        raise ValueError(
            f"length mismatch: {len(pred_classes)} pred vs {len(gt_classes)} gt"
        )
    if len(pred_classes) == 0:
        raise ValueError("accuracy of an empty batch")
    hits = sum(1 for p, g in zip(pred_classes, gt_classes) if int(p) == int(g))
    return hits / len(pred_classes)
