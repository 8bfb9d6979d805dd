"""Boundary-gap objectness: how likely a tree node is a whole object.

A region flanked by a strong external boundary but only weak internal ones is
likely a complete object; a Gaussian prior over the creation level discounts
very coarse (under-segmented) and very fine (over-segmented) nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

# Scores are clamped to [OBJECTNESS_FLOOR, 1] so |R| * log f stays finite.
OBJECTNESS_FLOOR = 1e-6


@dataclass(frozen=True)
class ObjectnessConfig:
    """Level prior: peak at ``mid_level``, width ``sigma_level``."""

    mid_level: float = 0.3
    sigma_level: float = 0.2

    def __post_init__(self):
        if not 0.0 <= self.mid_level <= 1.0:
            raise InputError(f"mid_level must lie in [0, 1], got {self.mid_level}")
        if not self.sigma_level > 0:
            raise InputError(f"sigma_level must be positive, got {self.sigma_level}")


def objectness(b_ex, b_in, level, cfg: ObjectnessConfig = ObjectnessConfig()):
    """Objectness score in [1e-6, 1]; broadcasts over array inputs.

    score = |b_ex - b_in| * exp(-(level - mid_level)^2 / sigma_level^2)
    """
    gap = np.abs(np.asarray(b_ex, dtype=np.float64) - np.asarray(b_in, dtype=np.float64))
    dev = (np.asarray(level, dtype=np.float64) - cfg.mid_level) / cfg.sigma_level
    return np.clip(gap * np.exp(-(dev**2)), OBJECTNESS_FLOOR, 1.0)


def tree_objectness(tree, cfg: ObjectnessConfig = ObjectnessConfig()) -> np.ndarray:
    """Objectness score for every node of a segmentation tree."""
    return objectness(tree.b_ex, tree.b_in, tree.level, cfg)
