"""Pure NumPy implementations of the hot kernels.

These are the reference semantics for the numba backend and the fallback
selected via ``FPCC_BACKEND=numpy``. Row blocks are processed in chunks to
bound scratch memory; all reductions run single-threaded in index order.
"""

import numpy as np

NAME = "numpy"

# cap on scratch elements per chunk, roughly 64 MB of float64
_CHUNK_ELEMS = 8_000_000


def set_threads(count):
    # single-threaded backend, nothing to configure
    pass


def pairwise_distances(x):
    """All-pairs Euclidean distance matrix for an (N, D) array."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    n, d = x.shape
    out = np.empty((n, n), dtype=np.float64)
    step = max(1, _CHUNK_ELEMS // max(n * d, 1))
    for s in range(0, n, step):
        e = min(s + step, n)
        diff = x[s:e, None, :] - x[None, :, :]
        np.sqrt(np.einsum("ijk,ijk->ij", diff, diff), out=out[s:e])
    return out


def radius_mask(positions, limit):
    """Binary (0.0/1.0) matrix marking pairs strictly closer than ``limit``."""
    d = pairwise_distances(positions)
    return (d < limit).astype(np.float64)


def select_centers(positions, candidate_order, d_max):
    """Greedy suppression over candidates sorted by descending score.

    ``candidate_order`` holds point indices already filtered by the score
    threshold and sorted (score descending, index ascending on ties). Each
    pass keeps the best survivor and drops every candidate within
    ``d_max`` of it, the survivor included.
    """
    pos = np.ascontiguousarray(positions, dtype=np.float64)[candidate_order]
    alive = np.ones(len(candidate_order), dtype=bool)
    selected = []
    for i in range(len(candidate_order)):
        if not alive[i]:
            continue
        selected.append(candidate_order[i])
        diff = pos - pos[i]
        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        alive &= dist > d_max
    return np.asarray(selected, dtype=np.int64)


def assign_points(embeddings, center_embeddings, positions, center_positions, d_max):
    """Nearest center in feature space, gated by Euclidean distance.

    Ties on squared feature distance resolve to the lowest center index.
    Returns -1 where the feature-nearest center sits farther than
    ``d_max`` in 3D space.
    """
    emb = np.ascontiguousarray(embeddings, dtype=np.float64)
    cemb = np.ascontiguousarray(center_embeddings, dtype=np.float64)
    pos = np.ascontiguousarray(positions, dtype=np.float64)
    cpos = np.ascontiguousarray(center_positions, dtype=np.float64)
    n, d = emb.shape
    k = cemb.shape[0]
    out = np.empty(n, dtype=np.int64)
    step = max(1, _CHUNK_ELEMS // max(k * d, 1))
    for s in range(0, n, step):
        e = min(s + step, n)
        diff = emb[s:e, None, :] - cemb[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        best = np.argmin(d2, axis=1)
        pdiff = pos[s:e] - cpos[best]
        dist = np.sqrt(np.einsum("ij,ij->i", pdiff, pdiff))
        out[s:e] = np.where(dist <= d_max, best, -1)
    return out


def margin_loss(feature_dist, weights, same_instance, eps_same, eps_diff):
    """Weighted hinge sum over all ordered pairs.

    Same-instance pairs contribute ``max(0, dist - eps_same)``, all other
    pairs ``max(0, eps_diff - dist)``, each scaled by its weight. Per-row
    sums accumulate in index order.
    """
    hinge = np.where(
        same_instance,
        np.maximum(feature_dist - eps_same, 0.0),
        np.maximum(eps_diff - feature_dist, 0.0),
    )
    rows = np.einsum("ij,ij->i", weights, hinge)
    return float(rows.sum())
