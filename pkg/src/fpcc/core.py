"""Scene data model, coordinate normalization, and block sampling.

A scene is a fixed-size collection of 3D points, each optionally carrying
an instance label, together with the object-specific radius ``d_max``
(the distance from an object's geometric center to its farthest surface
point). Scenes are immutable after construction and all operations here
are pure functions, safe to call concurrently.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidInputError


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=arr.dtype, copy=True, order="C")
    arr.setflags(write=False)
    return arr


def _check_positions(positions: np.ndarray, name: str = "positions") -> np.ndarray:
    positions = np.asarray(positions, dtype=np.float64)
    if positions.ndim != 2 or positions.shape[1] != 3:
        raise InvalidInputError(f"{name} must have shape (N, 3), got {positions.shape}")
    if positions.shape[0] < 1:
        raise InvalidInputError(f"{name} must contain at least one point")
    if not np.isfinite(positions).all():
        bad = int(np.argwhere(~np.isfinite(positions).all(axis=1))[0][0])
        raise InvalidInputError(f"non-finite coordinate at point {bad}")
    return positions


@dataclass(frozen=True)
class ScenePoint:
    """A single point with an optional instance label and center score."""

    position: np.ndarray
    instance_id: int | None = None
    gt_center_score: float | None = None

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=np.float64).reshape(-1)
        if pos.shape != (3,) or not np.isfinite(pos).all():
            raise InvalidInputError("position must be a finite 3-vector")
        object.__setattr__(self, "position", _readonly(pos))
        if self.instance_id is not None and self.instance_id < 0:
            raise InvalidInputError("instance_id must be non-negative or None")
        if self.gt_center_score is not None and not (0.0 <= self.gt_center_score <= 1.0):
            raise InvalidInputError("gt_center_score must lie in [0, 1]")


@dataclass(frozen=True)
class Scene:
    """An ordered point set with labels, instance centers, and d_max.

    ``instance_ids`` uses -1 for unlabeled points. When ``instance_centers``
    is provided it must cover every id referenced by the points.
    """

    positions: np.ndarray
    d_max: float
    instance_ids: np.ndarray | None = None
    instance_centers: Mapping[int, np.ndarray] | None = None
    gt_scores: np.ndarray | None = None

    def __post_init__(self):
        positions = _check_positions(self.positions)
        object.__setattr__(self, "positions", _readonly(positions))
        if not (np.isfinite(self.d_max) and self.d_max > 0):
            raise InvalidInputError(f"d_max must be positive and finite, got {self.d_max}")
        object.__setattr__(self, "d_max", float(self.d_max))

        n = len(positions)
        if self.instance_ids is not None:
            ids = np.asarray(self.instance_ids, dtype=np.int64)
            if ids.shape != (n,):
                raise InvalidInputError(f"instance_ids must have shape ({n},), got {ids.shape}")
            if (ids < -1).any():
                raise InvalidInputError("instance_ids must be >= -1")
            object.__setattr__(self, "instance_ids", _readonly(ids))

        if self.instance_centers is not None:
            centers = {}
            for key, value in self.instance_centers.items():
                c = np.asarray(value, dtype=np.float64).reshape(-1)
                if c.shape != (3,) or not np.isfinite(c).all():
                    raise InvalidInputError(f"center of instance {key} must be a finite 3-vector")
                centers[int(key)] = _readonly(c)
            object.__setattr__(self, "instance_centers", centers)
            if self.instance_ids is not None:
                referenced = set(np.unique(self.instance_ids).tolist()) - {-1}
                missing = referenced - set(centers)
                if missing:
                    raise InvalidInputError(
                        f"instances {sorted(missing)} are labeled but have no center"
                    )

        if self.gt_scores is not None:
            scores = np.asarray(self.gt_scores, dtype=np.float64)
            if scores.shape != (n,):
                raise InvalidInputError(f"gt_scores must have shape ({n},)")
            if not np.isfinite(scores).all() or (scores < 0).any() or (scores > 1).any():
                raise InvalidInputError("gt_scores must lie in [0, 1]")
            object.__setattr__(self, "gt_scores", _readonly(scores))

    def __len__(self) -> int:
        return len(self.positions)

    def point(self, index: int) -> ScenePoint:
        instance_id = None
        if self.instance_ids is not None and self.instance_ids[index] >= 0:
            instance_id = int(self.instance_ids[index])
        score = None if self.gt_scores is None else float(self.gt_scores[index])
        return ScenePoint(self.positions[index], instance_id, score)

    @property
    def labeled_mask(self) -> np.ndarray:
        if self.instance_ids is None:
            return np.zeros(len(self), dtype=bool)
        return self.instance_ids >= 0

    @classmethod
    def from_points(
        cls,
        points: Sequence[ScenePoint],
        d_max: float,
        instance_centers: Mapping[int, np.ndarray] | None = None,
    ) -> "Scene":
        if not points:
            raise InvalidInputError("a scene needs at least one point")
        positions = np.stack([p.position for p in points])
        ids = np.array(
            [-1 if p.instance_id is None else p.instance_id for p in points], dtype=np.int64
        )
        scores = None
        if any(p.gt_center_score is not None for p in points):
            scores = np.array(
                [0.0 if p.gt_center_score is None else p.gt_center_score for p in points]
            )
        return cls(positions, d_max, ids, instance_centers, scores)


@dataclass(frozen=True)
class RepresentedPoint:
    """The 6D input representation of one point: shifted XYZ plus a
    per-axis location normalized to [0, 1] over the whole scene."""

    shifted: np.ndarray
    normalized: np.ndarray


@dataclass(frozen=True)
class RepresentedScene:
    """Shifted and normalized coordinates for every point of a scene."""

    shifted: np.ndarray
    normalized: np.ndarray

    def __len__(self) -> int:
        return len(self.shifted)

    def __getitem__(self, index: int) -> RepresentedPoint:
        return RepresentedPoint(self.shifted[index], self.normalized[index])

    def as_array(self) -> np.ndarray:
        """The (N, 6) matrix of shifted and normalized coordinates."""
        return np.hstack([self.shifted, self.normalized])


def normalize_scene(scene: Scene) -> RepresentedScene:
    """Shift coordinates so each axis starts at zero and scale to [0, 1].

    An axis whose coordinates are all equal has zero range; its normalized
    component is defined as 0 for every point. Output order matches input
    order, and re-shifting the shifted output changes nothing.
    """
    pos = scene.positions
    lo = pos.min(axis=0)
    hi = pos.max(axis=0)
    shifted = pos - lo
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    normalized = np.where(span > 0, shifted / safe, 0.0)
    return RepresentedScene(_readonly(shifted), _readonly(normalized))


@dataclass(frozen=True)
class PointBlock:
    """Indices of one sampled block; the final block of a pass may carry
    ``pad_count`` duplicated fill indices drawn from its own remainder."""

    indices: np.ndarray
    pad_count: int = 0

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        object.__setattr__(self, "indices", _readonly(idx))

    @property
    def distinct_indices(self) -> np.ndarray:
        """Indices excluding pads (pads are always appended last)."""
        n = len(self.indices) - self.pad_count
        return self.indices[:n]


def sample_blocks(scene: Scene, block_size: int = 4096, seed: int = 0) -> list[PointBlock]:
    """Partition a scene into random fixed-size blocks without replacement.

    Each point lands in exactly one block. When the point count is not a
    multiple of ``block_size``, the last block holds the remainder padded
    up to size by resampling (with replacement) from that remainder, with
    ``pad_count`` recording how many pads were added. Deterministic for a
    fixed seed.
    """
    if block_size < 1:
        raise InvalidInputError("block_size must be >= 1")
    n = len(scene)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    full = n // block_size
    blocks = [
        PointBlock(perm[i * block_size : (i + 1) * block_size]) for i in range(full)
    ]
    remainder = perm[full * block_size :]
    if len(remainder) > 0:
        pad_count = block_size - len(remainder)
        pads = rng.choice(remainder, size=pad_count, replace=True)
        blocks.append(PointBlock(np.concatenate([remainder, pads]), pad_count))
    return blocks


def euclidean_distance(a, b) -> float:
    """L2 distance between two 3-vectors."""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape != (3,) or b.shape != (3,):
        raise InvalidInputError("euclidean_distance expects 3-vectors")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise InvalidInputError("euclidean_distance expects finite inputs")
    return float(np.linalg.norm(a - b))


def compute_d_max(model_points) -> float:
    """Maximum distance from the centroid of a point set to any of its points.

    A single repeated point yields 0, which is reported with a warning
    because downstream consumers require a strictly positive radius.
    """
    pts = _check_positions(np.atleast_2d(np.asarray(model_points, dtype=np.float64)),
                           name="model_points")
    centroid = pts.mean(axis=0)
    d = float(np.sqrt(((pts - centroid) ** 2).sum(axis=1)).max())
    if d == 0.0:
        warnings.warn("degenerate model: d_max is 0, downstream consumers need > 0")
    return d
