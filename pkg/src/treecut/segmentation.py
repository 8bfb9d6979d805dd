"""Flat segmentations (region id images plus per-region records) and label-image I/O."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import pngio
from .errors import InputError


@dataclass
class Region:
    """One region of a flat segmentation.

    ``kind`` is "object", "plane", or None for untyped cuts (plain horizontal
    cuts carry no labels).  Plane regions reference a retained plane candidate
    by index; several disconnected regions may share one plane index.
    """

    id: int
    node_id: int
    pixel_count: int
    kind: Optional[str] = None
    plane_index: Optional[int] = None
    energy: Optional[float] = None
    objectness: Optional[float] = None


@dataclass
class FlatSegmentation:
    """Per-pixel region ids (1-based) together with the region records.

    Region ids partition the image: every pixel carries exactly one id and the
    recorded pixel counts sum to width * height.
    """

    labels: np.ndarray  # (H, W) int32
    regions: list

    @property
    def n_regions(self) -> int:
        return len(self.regions)

    def validate(self) -> None:
        """Check the partition property; raises RuntimeError on violation."""
        if self.labels.size == 0:
            raise RuntimeError("empty segmentation")
        counts = np.bincount(self.labels.ravel(), minlength=len(self.regions) + 1)
        if counts[0] != 0:
            raise RuntimeError("segmentation has unassigned pixels (label 0)")
        if len(counts) != len(self.regions) + 1:
            raise RuntimeError("segmentation labels exceed the region records")
        for reg in self.regions:
            if counts[reg.id] != reg.pixel_count:
                raise RuntimeError(
                    f"region {reg.id}: recorded {reg.pixel_count} pixels, image has {counts[reg.id]}"
                )

    def save_png(self, path) -> None:
        if self.labels.max(initial=0) > 0xFFFF:
            raise InputError(f"cannot write {path}: more than 65535 regions")
        pngio.write_gray16(path, self.labels)


def load_label_png(path) -> np.ndarray:
    """Read a 16-bit label image as int32 region ids."""
    return pngio.read_gray16(path).astype(np.int32)
