"""Class-agnostic segmentation metrics: symmetric covering and region F-measure."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import pngio
from .errors import InputError


@dataclass
class LabeledMask:
    """A label image with an optional ignore mask (True = excluded from scoring)."""

    labels: np.ndarray  # (H, W) int
    ignore: Optional[np.ndarray] = None

    @classmethod
    def from_png(cls, path, ignore_value: int = 0) -> "LabeledMask":
        labels = pngio.read_gray16(path).astype(np.int64)
        ignore = (labels == ignore_value) if ignore_value >= 0 else None
        return cls(labels=labels, ignore=ignore)

    @classmethod
    def from_array(cls, labels, ignore=None) -> "LabeledMask":
        return cls(labels=np.asarray(labels, dtype=np.int64), ignore=ignore)

    @property
    def shape(self):
        return self.labels.shape


def _scoring_mask(pred: LabeledMask, gt: LabeledMask) -> np.ndarray:
    if pred.shape != gt.shape:
        raise InputError(f"label images differ in size: {pred.shape} vs {gt.shape}")
    mask = np.ones(pred.shape, dtype=bool)
    if pred.ignore is not None:
        mask &= ~pred.ignore
    if gt.ignore is not None:
        mask &= ~gt.ignore
    return mask


def _overlap_table(pred: LabeledMask, gt: LabeledMask):
    """Region-by-region pixel overlap counts over the scored pixels."""
    mask = _scoring_mask(pred, gt)
    a = pred.labels[mask]
    b = gt.labels[mask]
    ua, ia = np.unique(a, return_inverse=True)
    ub, ib = np.unique(b, return_inverse=True)
    table = np.bincount(ia * ub.size + ib, minlength=ua.size * ub.size)
    return table.reshape(ua.size, ub.size).astype(np.float64), int(mask.sum())


def covering(pred: LabeledMask, gt: LabeledMask) -> float:
    """Symmetric segmentation covering in [0, 1].

    One direction covers each region of A by its best-IoU match in B, weighted
    by region size; the score is the mean of both directions.  1.0 exactly when
    the partitions agree up to region renaming; pixels under an ignore mask
    contribute nothing.
    """
    table, n = _overlap_table(pred, gt)
    if n == 0:
        return 1.0
    size_a = table.sum(axis=1)
    size_b = table.sum(axis=0)
    iou = table / (size_a[:, None] + size_b[None, :] - table)
    c_ab = float((size_a * iou.max(axis=1)).sum() / n)
    c_ba = float((size_b * iou.max(axis=0)).sum() / n)
    return 0.5 * (c_ab + c_ba)


def region_fmeasure(pred: LabeledMask, gt: LabeledMask) -> float:
    """Region F-measure in [0, 1] under best-overlap assignment.

    Precision credits each predicted region with its largest single-region
    overlap in the ground truth (recall swaps the roles); F is their harmonic
    mean.  An empty scored area counts as vacuous agreement (1.0).
    """
    table, n = _overlap_table(pred, gt)
    if n == 0:
        return 1.0
    precision = float(table.max(axis=1).sum() / n)
    recall = float(table.max(axis=0).sum() / n)
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)
