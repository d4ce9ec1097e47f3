"""Ground-truth center scores, the four pairwise matrices, and both loss
kernels.

The center score maps a point's distance to its instance center into
[0, 1]: 1 at the center, 0 at distance ``d_max``. The pairwise machinery
(feature distances, the binary valid-distance mask, attention scores, and
their product weight matrix) feeds the embedded-feature hinge loss; the
center-score branch uses a smooth L1 loss. All functions are forward-only
reference computations over immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import Scene
from .errors import InvalidInputError, OutOfRangeError


@dataclass(frozen=True)
class CenterScoreParams:
    """Shape of the center-score falloff: score = 1 - (dist / d_max) ** beta."""

    d_max: float
    beta: float = 2.0

    def __post_init__(self):
        if not (np.isfinite(self.d_max) and self.d_max > 0):
            raise InvalidInputError("d_max must be positive and finite")
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise InvalidInputError("beta must be positive and finite")


@dataclass(frozen=True)
class LossParams:
    """Margins and weighting switches for the pairwise feature loss.

    ``epsilon_1`` is the attraction margin for same-instance pairs,
    ``epsilon_2`` the repulsion margin for cross-instance pairs, and
    ``alpha`` weights the center-score branch in the combined loss.
    ``use_vdm`` / ``use_asm`` toggle the two weight factors for ablations.
    """

    epsilon_1: float = 5.0
    epsilon_2: float = 10.0
    alpha: float = 30.0
    use_vdm: bool = True
    use_asm: bool = True

    def __post_init__(self):
        if not (0 < self.epsilon_1 < self.epsilon_2):
            raise InvalidInputError("margins must satisfy 0 < epsilon_1 < epsilon_2")
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise InvalidInputError("alpha must be positive")


@dataclass(frozen=True)
class PairMatrices:
    """The four N x N matrices used by the pairwise loss."""

    feature_distance: np.ndarray
    valid_distance: np.ndarray
    attention_score: np.ndarray
    weight: np.ndarray


# distances this far (relatively) past d_max are treated as boundary rounding
_BOUNDARY_RTOL = 1e-9


def center_score(point, center, params: CenterScoreParams) -> float:
    """Score one point against its instance center.

    Raises :class:`OutOfRangeError` when the point lies farther than
    ``d_max`` from the center, since members of an instance cannot exceed
    the object radius. Floating error at the boundary (within a relative
    epsilon) is absorbed by clamping the score to [0, 1] instead.
    """
    point = np.asarray(point, dtype=np.float64).reshape(-1)
    center = np.asarray(center, dtype=np.float64).reshape(-1)
    dist = float(np.linalg.norm(point - center))
    if dist > params.d_max * (1.0 + _BOUNDARY_RTOL):
        raise OutOfRangeError(
            f"point {point.tolist()} lies {dist:.6g} from its center, beyond d_max={params.d_max:.6g}"
        )
    return float(np.clip(1.0 - (dist / params.d_max) ** params.beta, 0.0, 1.0))


def score_scene(scene: Scene, params: CenterScoreParams) -> np.ndarray:
    """Per-point ground-truth center scores; unlabeled points score 0."""
    labeled = scene.labeled_mask
    scores = np.zeros(len(scene), dtype=np.float64)
    if not labeled.any():
        return scores
    if scene.instance_centers is None:
        raise InvalidInputError("scene has labeled points but no instance_centers")
    ids = scene.instance_ids[labeled]
    centers = np.stack([scene.instance_centers[int(i)] for i in ids])
    dist = np.sqrt(((scene.positions[labeled] - centers) ** 2).sum(axis=1))
    over = dist > params.d_max * (1.0 + _BOUNDARY_RTOL)
    if over.any():
        offender = int(np.flatnonzero(labeled)[np.argmax(over)])
        raise OutOfRangeError(
            f"point {offender} lies {dist[np.argmax(over)]:.6g} from its center, "
            f"beyond d_max={params.d_max:.6g}"
        )
    scores[labeled] = np.clip(1.0 - (dist / params.d_max) ** params.beta, 0.0, 1.0)
    return scores


def feature_distance_matrix(embeddings) -> np.ndarray:
    """Pairwise Euclidean distances between embedding rows."""
    emb = np.asarray(embeddings, dtype=np.float64)
    if emb.ndim != 2:
        raise InvalidInputError("embeddings must be a 2D array")
    if not np.isfinite(emb).all():
        raise InvalidInputError("embeddings must be finite")
    return kernels.get_backend().pairwise_distances(emb)


def valid_distance_matrix(positions, d_max: float) -> np.ndarray:
    """Binary mask: 1 where two points sit strictly closer than 2 * d_max.

    Pairs farther apart cannot belong to one instance, so the mask zeroes
    their contribution to the pairwise loss.
    """
    pos = np.asarray(positions, dtype=np.float64)
    if pos.ndim != 2 or pos.shape[1] != 3:
        raise InvalidInputError("positions must have shape (N, 3)")
    if not (np.isfinite(d_max) and d_max > 0):
        raise InvalidInputError("d_max must be positive and finite")
    return kernels.get_backend().radius_mask(pos, 2.0 * d_max)


def attention_score_matrix(center_scores) -> np.ndarray:
    """Pair weights: the sum of the two points' center scores."""
    s = np.asarray(center_scores, dtype=np.float64).reshape(-1)
    if not np.isfinite(s).all() or (s < 0).any() or (s > 1).any():
        raise InvalidInputError("center scores must lie in [0, 1]")
    return s[:, None] + s[None, :]


def weight_matrix(valid_distance, attention_score, params: LossParams) -> np.ndarray:
    """Elementwise product of the two weight factors.

    With ``use_vdm`` off the distance mask is replaced by ones; with
    ``use_asm`` off the attention factor is replaced by ones. Both off
    yields the unweighted all-ones matrix.
    """
    dv = np.asarray(valid_distance, dtype=np.float64)
    sa = np.asarray(attention_score, dtype=np.float64)
    if dv.shape != sa.shape or dv.ndim != 2 or dv.shape[0] != dv.shape[1]:
        raise InvalidInputError(f"matrix shapes differ: {dv.shape} vs {sa.shape}")
    if not params.use_vdm:
        dv = np.ones_like(dv)
    if not params.use_asm:
        sa = np.ones_like(sa)
    return dv * sa


def same_instance_matrix(instance_ids) -> np.ndarray:
    """Boolean mask of pairs sharing a label.

    Unlabeled points (-1) count as different from every other point,
    including other unlabeled points; the diagonal is always true.
    """
    ids = np.asarray(instance_ids, dtype=np.int64).reshape(-1)
    same = (ids[:, None] == ids[None, :]) & (ids[:, None] >= 0)
    np.fill_diagonal(same, True)
    return same


def embedded_feature_loss(
    feature_distance,
    weight,
    same_instance,
    params: LossParams,
    normalize: bool = False,
) -> float:
    """Weighted pairwise hinge loss over embeddings.

    Same-instance pairs are pulled below ``epsilon_1``, all other pairs
    pushed beyond ``epsilon_2``; each term is scaled by the weight matrix
    and both pair orders contribute. Diagonal terms are always zero. With
    ``normalize`` the sum is divided by the total weight; that mode is an
    extension for comparing across block sizes, not part of the reference
    definition.
    """
    df = np.asarray(feature_distance, dtype=np.float64)
    w = np.asarray(weight, dtype=np.float64)
    same = np.asarray(same_instance, dtype=bool)
    if not (df.shape == w.shape == same.shape) or df.ndim != 2 or df.shape[0] != df.shape[1]:
        raise InvalidInputError(
            f"matrix shapes differ: {df.shape}, {w.shape}, {same.shape}"
        )
    if not same.diagonal().all():
        raise InvalidInputError("same_instance diagonal must be all true")
    loss = kernels.get_backend().margin_loss(df, w, same, params.epsilon_1, params.epsilon_2)
    if normalize:
        total = float(w.sum())
        return loss / total if total > 0 else 0.0
    return loss


def smooth_l1(x: float) -> float:
    """0.5 * x**2 for |x| < 1, |x| - 0.5 otherwise; both branches meet at 1."""
    ax = abs(float(x))
    if not np.isfinite(ax):
        raise InvalidInputError("smooth_l1 expects a finite value")
    return 0.5 * ax * ax if ax < 1.0 else ax - 0.5


def center_score_loss(gt_scores, pred_scores) -> float:
    """Mean smooth L1 deviation between true and predicted center scores."""
    gt = np.asarray(gt_scores, dtype=np.float64).reshape(-1)
    pred = np.asarray(pred_scores, dtype=np.float64).reshape(-1)
    if gt.shape != pred.shape:
        raise InvalidInputError(f"score lengths differ: {gt.shape} vs {pred.shape}")
    x = np.abs(gt - pred)
    return float(np.where(x < 1.0, 0.5 * x * x, x - 0.5).mean())


def total_loss(l_ef: float, l_cs: float, params: LossParams) -> float:
    """Combined loss: the pairwise term plus alpha times the score term."""
    return float(l_ef) + params.alpha * float(l_cs)


def pair_matrices(
    positions,
    embeddings,
    center_scores,
    d_max: float,
    params: LossParams,
) -> PairMatrices:
    """Assemble all four pairwise matrices for one point block."""
    df = feature_distance_matrix(embeddings)
    dv = valid_distance_matrix(positions, d_max)
    sa = attention_score_matrix(center_scores)
    w = weight_matrix(dv, sa, params)
    return PairMatrices(df, dv, sa, w)
