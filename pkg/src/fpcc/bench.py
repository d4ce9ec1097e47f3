"""Wall-clock benchmarks of the pipeline stages.

Each configuration times the three stages (ground-truth scoring, center
selection, point assignment) separately over repeated runs, reporting
median and p95 milliseconds after discarding warm-up iterations. Rows
carry host metadata and can be produced for both kernel backends to
compare the JIT kernels against the pure NumPy fallback.
"""

from __future__ import annotations

import os
import platform
import time

import numpy as np

from . import kernels
from .clustering import NmsParams, assign_points, select_centers
from .embedding import OracleParams, oracle_embed
from .errors import InvalidInputError
from .scenegen import SceneGenParams, builtin_model, generate_scene
from .scoring import CenterScoreParams, score_scene

BENCH_COLUMNS = [
    "n_points", "instances", "centers", "dim", "stage", "backend", "threads",
    "reps", "median_ms", "p95_ms", "host", "python", "cpu_count",
]


def host_metadata() -> dict:
    return {
        "host": platform.platform(),
        "python": platform.python_version(),
        "cpu_count": str(os.cpu_count() or 1),
    }


def _active_threads() -> int:
    backend = kernels.get_backend()
    if backend.NAME == "numba":
        import numba

        return numba.get_num_threads()
    return 1


def measure(fn, reps: int, warmup: int) -> tuple[float, float]:
    """Median and p95 wall time in milliseconds, warm-ups excluded."""
    if warmup < 3:
        raise InvalidInputError("at least 3 warm-up iterations are required")
    if reps < 1:
        raise InvalidInputError("at least one measured repetition is required")
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(reps):
        start = time.perf_counter()
        fn()
        times.append((time.perf_counter() - start) * 1000.0)
    return float(np.median(times)), float(np.percentile(times, 95))


def synthetic_scene(n_points: int, instances: int, seed: int = 0, model=None):
    """A labeled scene of roughly ``n_points`` split over ``instances``.

    Instances are spaced at 1.6x d_max so that greedy selection on the
    true scores recovers one center per instance.
    """
    if model is None:
        model = builtin_model("l_bracket", scale=1.0, samples=900, seed=7)
    per_instance = max(1, n_points // instances)
    side = model.d_max * (2.2 * instances ** (1.0 / 3.0) + 2.4)
    params = SceneGenParams(
        bin_extent=(side, side, side),
        instance_count_range=(instances, instances),
        points_per_instance_range=(per_instance, per_instance),
        min_center_spacing=1.6 * model.d_max,
        seed=seed,
    )
    return generate_scene(model, params)


def run_benchmark(
    scene_sizes,
    instance_counts,
    reps: int = 5,
    warmup: int = 3,
    dim: int = 128,
    seed: int = 0,
    backends=None,
) -> list[dict]:
    """Time every (size, instance count) configuration per stage.

    ``backends`` defaults to the active backend only; pass several names
    to compare them on identical inputs.
    """
    if backends is None:
        backends = [kernels.get_backend().NAME]
    meta = host_metadata()
    rows = []
    for n_points in scene_sizes:
        for instances in instance_counts:
            scene = synthetic_scene(int(n_points), int(instances), seed=seed)
            score_params = CenterScoreParams(scene.d_max)
            nms = NmsParams(scene.d_max)
            gt_scores = score_scene(scene, score_params)
            embedded = oracle_embed(
                scene, OracleParams(dim=dim, intra_noise_sigma=0.0, seed=seed)
            )
            for backend_name in backends:
                with kernels.use_backend(backend_name):
                    centers = select_centers(scene.positions, embedded.pred_scores, nms)
                    stages = {
                        "scoring": lambda: score_scene(scene, score_params),
                        "nms": lambda: select_centers(scene.positions, embedded.pred_scores, nms),
                        "assignment": lambda: assign_points(
                            scene.positions, embedded.embeddings, centers, nms
                        ),
                    }
                    for stage, fn in stages.items():
                        median_ms, p95_ms = measure(fn, reps, warmup)
                        rows.append(
                            {
                                "n_points": str(len(scene)),
                                "instances": str(instances),
                                "centers": str(len(centers)),
                                "dim": str(dim),
                                "stage": stage,
                                "backend": backend_name,
                                "threads": str(_active_threads()),
                                "reps": str(reps),
                                "median_ms": f"{median_ms:.3f}",
                                "p95_ms": f"{p95_ms:.3f}",
                                **meta,
                            }
                        )
    return rows


def bench_table(rows) -> str:
    widths = {c: max(len(c), *(len(r[c]) for r in rows)) if rows else len(c) for c in BENCH_COLUMNS[:10]}
    header = "  ".join(c.ljust(widths[c]) for c in BENCH_COLUMNS[:10])
    lines = [header]
    for row in rows:
        lines.append("  ".join(row[c].ljust(widths[c]) for c in BENCH_COLUMNS[:10]))
    return "\n".join(lines)


def linear_fit_r2(x, y) -> float:
    """Coefficient of determination of a least-squares line through (x, y)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    predicted = slope * x + intercept
    residual = ((y - predicted) ** 2).sum()
    total = ((y - y.mean()) ** 2).sum()
    return 1.0 if total == 0 else float(1.0 - residual / total)
