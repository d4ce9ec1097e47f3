"""Pluggable embedding providers standing in for a trained feature extractor.

The oracle provider builds embeddings from per-instance anchor vectors:
anchors are mutually separated by at least ``anchor_separation`` in
feature space, every point receives its instance's anchor plus isotropic
Gaussian noise, and predicted center scores are the true scores plus
optional noise. A file loader accepts embeddings produced elsewhere.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import io as fpcc_io
from .core import Scene
from .errors import InvalidInputError
from .scoring import CenterScoreParams, score_scene


@dataclass(frozen=True)
class OracleParams:
    """Geometry of the synthetic feature space.

    ``intra_noise_sigma`` is the per-coordinate standard deviation of the
    Gaussian scatter around each anchor; keeping
    ``anchor_separation > 6 * intra_noise_sigma`` comfortably separates
    instances, but this is not enforced.
    """

    dim: int = 128
    anchor_separation: float = 12.0
    intra_noise_sigma: float = 0.5
    score_noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.dim < 2:
            raise InvalidInputError("embedding dim must be >= 2")
        if not (np.isfinite(self.anchor_separation) and self.anchor_separation > 0):
            raise InvalidInputError("anchor_separation must be positive")
        if self.intra_noise_sigma < 0 or self.score_noise_sigma < 0:
            raise InvalidInputError("noise sigmas must be non-negative")


@dataclass(frozen=True)
class EmbeddedScene:
    """A scene joined with per-point embeddings and predicted scores."""

    scene: Scene
    embeddings: np.ndarray
    pred_scores: np.ndarray | None = None

    def __post_init__(self):
        emb = np.asarray(self.embeddings, dtype=np.float64)
        if emb.ndim != 2 or len(emb) != len(self.scene):
            raise InvalidInputError(
                f"embeddings must be (N, D) with N={len(self.scene)}, got {emb.shape}"
            )
        if not np.isfinite(emb).all():
            raise InvalidInputError("embeddings must be finite")
        object.__setattr__(self, "embeddings", emb)
        if self.pred_scores is not None:
            scores = np.asarray(self.pred_scores, dtype=np.float64).reshape(-1)
            if scores.shape != (len(self.scene),):
                raise InvalidInputError("one predicted score per point is required")
            if not np.isfinite(scores).all():
                raise InvalidInputError("predicted scores must be finite")
            object.__setattr__(self, "pred_scores", scores)


def _sample_anchors(rng, count: int, dim: int, separation: float) -> np.ndarray:
    """Rejection-sample anchors in a ball of radius 10x the separation."""
    radius = 10.0 * separation
    anchors = np.empty((count, dim))
    placed = 0
    attempts = 0
    while placed < count:
        attempts += 1
        if attempts > 1000 * max(count, 1):
            raise InvalidInputError(
                f"could not place {count} anchors at separation {separation}"
            )
        v = rng.normal(size=dim)
        norm = np.linalg.norm(v)
        if norm == 0.0:
            continue
        point = v / norm * radius * rng.uniform() ** (1.0 / dim)
        if placed and np.linalg.norm(anchors[:placed] - point, axis=1).min() < separation:
            continue
        anchors[placed] = point
        placed += 1
    return anchors


def oracle_embed(scene: Scene, params: OracleParams, beta: float = 2.0) -> EmbeddedScene:
    """Build ideal embeddings and predicted scores for a labeled scene.

    Requires full labels and instance centers. Deterministic per seed:
    two calls with identical inputs produce identical embeddings.
    """
    if scene.instance_ids is None or not scene.labeled_mask.all():
        raise InvalidInputError("oracle embeddings need a fully labeled scene")
    if scene.instance_centers is None:
        raise InvalidInputError("oracle embeddings need instance centers")

    rng = np.random.default_rng(params.seed)
    unique_ids = np.unique(scene.instance_ids)
    anchors = _sample_anchors(rng, len(unique_ids), params.dim, params.anchor_separation)
    row_of = {int(i): k for k, i in enumerate(unique_ids)}
    rows = np.array([row_of[int(i)] for i in scene.instance_ids])

    embeddings = anchors[rows]
    if params.intra_noise_sigma > 0:
        embeddings = embeddings + rng.normal(
            scale=params.intra_noise_sigma, size=embeddings.shape
        )

    scores = score_scene(scene, CenterScoreParams(scene.d_max, beta))
    if params.score_noise_sigma > 0:
        scores = np.clip(
            scores + rng.normal(scale=params.score_noise_sigma, size=scores.shape), 0.0, 1.0
        )
    return EmbeddedScene(scene, embeddings, scores)


def load_embeddings(path, expected_n: int):
    """Read an embedding file and validate its row count.

    Returns ``(embeddings, pred_scores)`` where ``pred_scores`` is None
    (with a warning) when the file carries no score column.
    """
    embeddings, pred_scores = fpcc_io.parse_embeddings(path)
    if len(embeddings) != expected_n:
        raise InvalidInputError(
            f"{path}: expected {expected_n} embedding rows, found {len(embeddings)}"
        )
    if pred_scores is None:
        warnings.warn(f"{path}: no predicted score column present")
    return embeddings, pred_scores
