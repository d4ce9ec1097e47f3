"""Synthetic bin-picking scenes with full labels and instance centers.

A scene drops rigid copies of one object model into a bin: each instance
gets a uniform random rotation and a random translation that keeps its
bounding sphere inside the bin, and placements too close to an existing
instance center are rejected. An optional top-down depth grid culls
points hidden from above, approximating what a ceiling-mounted sensor
would see. No physics is simulated; the spacing rejection stands in for
non-interpenetration.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import io as fpcc_io
from .core import Scene, compute_d_max
from .errors import InvalidInputError

MODEL_KINDS = ("sphere", "box", "cylinder", "l_bracket")


@dataclass(frozen=True)
class ObjectModel:
    """Surface samples of one object in its model frame.

    ``centroid`` is the mean of the samples and ``d_max`` the distance
    from the centroid to the farthest sample; both are validated.
    """

    name: str
    surface_points: np.ndarray
    centroid: np.ndarray
    d_max: float

    def __post_init__(self):
        pts = np.asarray(self.surface_points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 1:
            raise InvalidInputError("surface_points must have shape (M, 3)")
        object.__setattr__(self, "surface_points", pts)
        centroid = np.asarray(self.centroid, dtype=np.float64).reshape(-1)
        if not np.allclose(centroid, pts.mean(axis=0), rtol=1e-9, atol=1e-12):
            raise InvalidInputError("centroid must equal the mean of surface_points")
        object.__setattr__(self, "centroid", centroid)
        expected = compute_d_max(pts)
        if not np.isclose(self.d_max, expected, rtol=1e-9):
            raise InvalidInputError("d_max must equal the centroid-to-farthest-point distance")

    @classmethod
    def from_points(cls, name: str, surface_points) -> "ObjectModel":
        pts = np.asarray(surface_points, dtype=np.float64)
        return cls(name, pts, pts.mean(axis=0), compute_d_max(pts))


@dataclass(frozen=True)
class SceneGenParams:
    """Knobs for one generated scene.

    ``min_center_spacing`` defaults to 1.05x the model's d_max and
    ``cell_size`` to a quarter of it; the culling tolerance equals
    ``cell_size``. ``visible_centroid`` switches the recorded instance
    center from the transformed model centroid to the centroid of the
    points that survive culling (a sensitivity experiment, off by default).
    """

    bin_extent: tuple[float, float, float]
    instance_count_range: tuple[int, int] = (10, 20)
    points_per_instance_range: tuple[int, int] = (300, 600)
    min_center_spacing: float | None = None
    occlusion: bool = False
    cell_size: float | None = None
    seed: int = 0
    visible_centroid: bool = False

    def __post_init__(self):
        extent = np.asarray(self.bin_extent, dtype=np.float64).reshape(-1)
        if extent.shape != (3,) or not (np.isfinite(extent).all() and (extent > 0).all()):
            raise InvalidInputError("bin_extent must be three positive lengths")
        object.__setattr__(self, "bin_extent", tuple(float(v) for v in extent))
        for name in ("instance_count_range", "points_per_instance_range"):
            lo, hi = getattr(self, name)
            if not (1 <= lo <= hi):
                raise InvalidInputError(f"{name} must satisfy 1 <= lo <= hi, got ({lo}, {hi})")
        if self.min_center_spacing is not None and self.min_center_spacing <= 0:
            raise InvalidInputError("min_center_spacing must be positive")
        if self.cell_size is not None and self.cell_size <= 0:
            raise InvalidInputError("cell_size must be positive")


def _box_surface(count: int, lo, hi, rng) -> np.ndarray:
    """Area-weighted uniform samples on an axis-aligned box surface."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    ext = hi - lo
    # face order: (axis 0 low/high, axis 1 low/high, axis 2 low/high)
    areas = np.array([ext[1] * ext[2]] * 2 + [ext[0] * ext[2]] * 2 + [ext[0] * ext[1]] * 2)
    faces = rng.choice(6, size=count, p=areas / areas.sum())
    uv = rng.uniform(size=(count, 2))
    pts = np.empty((count, 3))
    for axis in range(3):
        o1, o2 = [a for a in range(3) if a != axis]
        for side in range(2):
            m = faces == 2 * axis + side
            pts[m, axis] = hi[axis] if side else lo[axis]
            pts[m, o1] = lo[o1] + uv[m, 0] * ext[o1]
            pts[m, o2] = lo[o2] + uv[m, 1] * ext[o2]
    return pts


def _sphere_surface(count: int, radius: float, rng) -> np.ndarray:
    pts = rng.normal(size=(count, 3))
    norms = np.linalg.norm(pts, axis=1)
    while (norms == 0).any():  # essentially unreachable, but stay exact
        bad = norms == 0
        pts[bad] = rng.normal(size=(int(bad.sum()), 3))
        norms = np.linalg.norm(pts, axis=1)
    return pts / norms[:, None] * radius


def _cylinder_surface(count: int, radius: float, height: float, rng) -> np.ndarray:
    lateral = 2.0 * np.pi * radius * height
    cap = np.pi * radius * radius
    probs = np.array([lateral, cap, cap])
    part = rng.choice(3, size=count, p=probs / probs.sum())
    theta = rng.uniform(0.0, 2.0 * np.pi, size=count)
    u = rng.uniform(size=count)
    pts = np.empty((count, 3))
    m = part == 0
    pts[m, 0] = radius * np.cos(theta[m])
    pts[m, 1] = radius * np.sin(theta[m])
    pts[m, 2] = (u[m] - 0.5) * height
    for side, sign in ((1, -1.0), (2, 1.0)):
        m = part == side
        rr = radius * np.sqrt(u[m])
        pts[m, 0] = rr * np.cos(theta[m])
        pts[m, 1] = rr * np.sin(theta[m])
        pts[m, 2] = sign * height / 2.0
    return pts


def _l_bracket_surface(count: int, scale: float, rng) -> np.ndarray:
    # two plates of thickness 0.1*scale: a bottom slab and an upright slab
    t = 0.1 * scale
    lo_a, hi_a = np.array([0.0, 0.0, 0.0]), np.array([scale, scale, t])
    lo_b, hi_b = np.array([0.0, 0.0, t]), np.array([t, scale, scale])

    def area(lo, hi):
        e = hi - lo
        return 2.0 * (e[0] * e[1] + e[0] * e[2] + e[1] * e[2])

    p_a = area(lo_a, hi_a) / (area(lo_a, hi_a) + area(lo_b, hi_b))
    pick_a = rng.random(count) < p_a
    pts = np.empty((count, 3))
    pts[pick_a] = _box_surface(int(pick_a.sum()), lo_a, hi_a, rng)
    pts[~pick_a] = _box_surface(int((~pick_a).sum()), lo_b, hi_b, rng)
    return pts


def builtin_model(kind: str, scale: float = 1.0, samples: int = 1000, seed: int = 0) -> ObjectModel:
    """Uniform surface sampling of a primitive, deterministic per seed.

    Sizes per kind: sphere of radius ``scale``; box of side ``scale``;
    cylinder of radius ``scale / 2`` and height ``2 * scale``; L-bracket
    with legs of length ``scale`` and plates 0.1 * scale thick.
    """
    if samples < 50:
        raise InvalidInputError("at least 50 surface samples are required")
    if not (np.isfinite(scale) and scale > 0):
        raise InvalidInputError("scale must be positive")
    rng = np.random.default_rng(seed)
    if kind == "sphere":
        pts = _sphere_surface(samples, scale, rng)
    elif kind == "box":
        half = scale / 2.0
        pts = _box_surface(samples, [-half] * 3, [half] * 3, rng)
    elif kind == "cylinder":
        pts = _cylinder_surface(samples, scale / 2.0, 2.0 * scale, rng)
    elif kind == "l_bracket":
        pts = _l_bracket_surface(samples, scale, rng)
    else:
        raise InvalidInputError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    return ObjectModel.from_points(kind, pts)


def _random_rotation(rng) -> np.ndarray:
    """Uniform random rotation matrix from a normalized 4D Gaussian."""
    q = rng.normal(size=4)
    norm = np.linalg.norm(q)
    while norm < 1e-12:
        q = rng.normal(size=4)
        norm = np.linalg.norm(q)
    w, x, y, z = q / norm
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def _visible_mask(positions: np.ndarray, cell_size: float) -> np.ndarray:
    """Keep points within ``cell_size`` height of their (x, y) cell's top."""
    cells = np.floor(positions[:, :2] / cell_size).astype(np.int64)
    _, inverse = np.unique(cells, axis=0, return_inverse=True)
    top = np.full(inverse.max() + 1, -np.inf)
    np.maximum.at(top, inverse, positions[:, 2])
    return positions[:, 2] >= top[inverse] - cell_size


def generate_scene(model: ObjectModel, params: SceneGenParams) -> Scene:
    """Drop labeled instances of ``model`` into a bin.

    Returns fewer instances than requested (with a warning) when the
    spacing rejection cannot place them all within the attempt budget.
    Every emitted point lies within ``d_max`` of its instance center, and
    the whole generation is a pure function of the seed.
    """
    rng = np.random.default_rng(params.seed)
    d_max = model.d_max
    spacing = params.min_center_spacing if params.min_center_spacing is not None else 1.05 * d_max
    extent = np.asarray(params.bin_extent)
    lo, hi = np.full(3, d_max), extent - d_max
    if (hi <= lo).any():
        raise InvalidInputError(
            f"bin extent {tuple(extent)} cannot hold the model bounding sphere (d_max={d_max:.6g})"
        )

    want = int(rng.integers(params.instance_count_range[0], params.instance_count_range[1] + 1))
    centers = []
    attempts = 0
    while len(centers) < want and attempts < 200 * want:
        attempts += 1
        candidate = lo + rng.uniform(size=3) * (hi - lo)
        if centers and np.linalg.norm(np.asarray(centers) - candidate, axis=1).min() < spacing:
            continue
        centers.append(candidate)
    if len(centers) < want:
        warnings.warn(
            f"placed only {len(centers)} of {want} instances at spacing {spacing:.6g}"
        )

    chunks, ids = [], []
    center_map = {}
    plo, phi = params.points_per_instance_range
    m = len(model.surface_points)
    for k, center in enumerate(centers):
        rotation = _random_rotation(rng)
        npts = int(rng.integers(plo, phi + 1))
        idx = rng.choice(m, size=npts, replace=npts > m)
        chunks.append((model.surface_points[idx] - model.centroid) @ rotation.T + center)
        ids.append(np.full(npts, k, dtype=np.int64))
        center_map[k] = center
    positions = np.vstack(chunks)
    instance_ids = np.concatenate(ids)

    if params.occlusion:
        cell = params.cell_size if params.cell_size is not None else d_max / 4.0
        keep = _visible_mask(positions, cell)
        if not keep.any():
            raise InvalidInputError("occlusion culling removed every point")
        positions = positions[keep]
        instance_ids = instance_ids[keep]
        survivors = set(np.unique(instance_ids).tolist())
        center_map = {k: c for k, c in center_map.items() if k in survivors}

    if params.visible_centroid:
        center_map = {
            k: positions[instance_ids == k].mean(axis=0) for k in center_map
        }

    return Scene(positions, d_max, instance_ids, center_map)


def export_scene(scene: Scene, path) -> None:
    """Write a scene in the text format; the parser restores it exactly."""
    fpcc_io.write_scene(scene, path)
