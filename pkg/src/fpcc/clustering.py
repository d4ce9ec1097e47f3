"""Inference phase: greedy center selection and feature-space assignment.

Center selection is a non-maximum suppression over points: candidates
above the score threshold are taken best-first, and each selection
removes every candidate within ``d_max`` of it. The survivors become
reference centers; every point then joins the center nearest in feature
space unless that center sits farther than ``d_max`` away in 3D, in
which case the point is left unassigned as noise.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import Scene
from .errors import InvalidInputError


@dataclass(frozen=True)
class NmsParams:
    """Score threshold and suppression radius for center selection."""

    d_max: float
    theta_th: float = 0.6

    def __post_init__(self):
        if not (np.isfinite(self.d_max) and self.d_max > 0):
            raise InvalidInputError("d_max must be positive and finite")
        if not (0.0 < self.theta_th < 1.0):
            raise InvalidInputError("theta_th must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class SegmentationResult:
    """Per-point instance assignment plus the selected centers.

    ``assignments[i]`` is the instance index in [0, K) or -1 for noise;
    instance k's reference point is ``center_indices[k]`` and its
    confidence is that center's predicted score.
    """

    center_indices: np.ndarray
    assignments: np.ndarray
    confidences: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "center_indices", np.asarray(self.center_indices, dtype=np.int64)
        )
        object.__setattr__(self, "assignments", np.asarray(self.assignments, dtype=np.int64))
        object.__setattr__(self, "confidences", np.asarray(self.confidences, dtype=np.float64))
        if len(self.center_indices) != len(self.confidences):
            raise InvalidInputError("one confidence per center is required")

    @property
    def instance_count(self) -> int:
        return len(self.center_indices)

    def instance_points(self, k: int) -> np.ndarray:
        """Indices of the points assigned to instance k."""
        return np.flatnonzero(self.assignments == k)


def select_centers(positions, scores, params: NmsParams) -> np.ndarray:
    """Greedy center selection over scored points.

    Points scoring at or below ``theta_th`` are never candidates. The
    highest-scoring survivor is taken repeatedly (score ties break toward
    the lowest point index) and all survivors within ``d_max`` of it are
    dropped. Returns the selected point indices in selection order; an
    empty result means nothing cleared the threshold.
    """
    pos = np.asarray(positions, dtype=np.float64)
    sc = np.asarray(scores, dtype=np.float64).reshape(-1)
    if pos.ndim != 2 or pos.shape[1] != 3:
        raise InvalidInputError("positions must have shape (N, 3)")
    if len(sc) != len(pos):
        raise InvalidInputError("one score per point is required")
    if not (np.isfinite(pos).all() and np.isfinite(sc).all()):
        raise InvalidInputError("positions and scores must be finite")

    candidates = np.flatnonzero(sc > params.theta_th)
    if len(candidates) == 0:
        return np.empty(0, dtype=np.int64)
    # stable sort on negated scores: descending score, ascending index on ties
    order = candidates[np.argsort(-sc[candidates], kind="stable")]
    return kernels.get_backend().select_centers(pos, order, params.d_max)


def assign_points(
    positions,
    embeddings,
    center_indices,
    params: NmsParams,
    scores=None,
) -> SegmentationResult:
    """Cluster points to their feature-nearest center with a noise gate.

    The gate applies to the feature-nearest center only: a point whose
    nearest center (by embedding distance, ties toward the lowest center
    index) lies beyond ``d_max`` in 3D becomes noise even if some other
    center is within reach. Each center always belongs to its own
    instance. ``scores``, when given, supplies the per-center confidences.
    """
    pos = np.asarray(positions, dtype=np.float64)
    emb = np.asarray(embeddings, dtype=np.float64)
    centers = np.asarray(center_indices, dtype=np.int64)
    if pos.ndim != 2 or pos.shape[1] != 3:
        raise InvalidInputError("positions must have shape (N, 3)")
    if emb.ndim != 2 or len(emb) != len(pos):
        raise InvalidInputError("embeddings must be (N, D) matching positions")

    if len(centers) == 0:
        warnings.warn("no centers selected; every point is labeled noise")
        return SegmentationResult(
            centers, np.full(len(pos), -1, dtype=np.int64), np.empty(0)
        )
    if (centers < 0).any() or (centers >= len(pos)).any():
        raise InvalidInputError("center indices out of range")

    assignments = kernels.get_backend().assign_points(
        emb, emb[centers], pos, pos[centers], params.d_max
    )
    # a center is its own instance even when embeddings tie exactly
    assignments[centers] = np.arange(len(centers))
    confidences = (
        np.asarray(scores, dtype=np.float64).reshape(-1)[centers]
        if scores is not None
        else np.ones(len(centers))
    )
    return SegmentationResult(centers, assignments, confidences)


def segment(scene: Scene, embeddings, pred_scores, params: NmsParams) -> SegmentationResult:
    """Full inference pass: select centers, then assign every point.

    Instance indices come out ordered by descending center confidence
    because greedy selection visits scores best-first.
    """
    pred = np.asarray(pred_scores, dtype=np.float64).reshape(-1)
    if len(pred) != len(scene):
        raise InvalidInputError("one predicted score per point is required")
    centers = select_centers(scene.positions, pred, params)
    return assign_points(scene.positions, embeddings, centers, params, scores=pred)
