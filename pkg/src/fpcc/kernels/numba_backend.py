"""Numba JIT implementations of the hot kernels.

Semantics match :mod:`fpcc.kernels.numpy_backend`. Parallel loops only
write disjoint rows or elements and scalar reductions happen per row in
index order, so output is identical for any thread count.
"""

import math

import numba
import numpy as np
from numba import njit, prange

NAME = "numba"


def set_threads(count):
    numba.set_num_threads(min(int(count), numba.config.NUMBA_NUM_THREADS))


@njit(cache=True, parallel=True)
def _pairwise(x):
    n, d = x.shape
    out = np.empty((n, n), dtype=np.float64)
    for i in prange(n):
        for j in range(n):
            s = 0.0
            for k in range(d):
                t = x[i, k] - x[j, k]
                s += t * t
            out[i, j] = math.sqrt(s)
    return out


def pairwise_distances(x):
    return _pairwise(np.ascontiguousarray(x, dtype=np.float64))


@njit(cache=True, parallel=True)
def _radius_mask(pos, limit):
    n = pos.shape[0]
    out = np.empty((n, n), dtype=np.float64)
    for i in prange(n):
        for j in range(n):
            dx = pos[i, 0] - pos[j, 0]
            dy = pos[i, 1] - pos[j, 1]
            dz = pos[i, 2] - pos[j, 2]
            if math.sqrt(dx * dx + dy * dy + dz * dz) < limit:
                out[i, j] = 1.0
            else:
                out[i, j] = 0.0
    return out


def radius_mask(positions, limit):
    return _radius_mask(np.ascontiguousarray(positions, dtype=np.float64), float(limit))


@njit(cache=True)
def _select(pos, order, d_max):
    m = order.shape[0]
    alive = np.ones(m, dtype=np.bool_)
    selected = np.empty(m, dtype=np.int64)
    count = 0
    for i in range(m):
        if not alive[i]:
            continue
        pi = order[i]
        selected[count] = pi
        count += 1
        # everything before i is already dead or selected, scan forward only
        for j in range(i, m):
            if alive[j]:
                pj = order[j]
                dx = pos[pi, 0] - pos[pj, 0]
                dy = pos[pi, 1] - pos[pj, 1]
                dz = pos[pi, 2] - pos[pj, 2]
                if math.sqrt(dx * dx + dy * dy + dz * dz) <= d_max:
                    alive[j] = False
    return selected[:count].copy()


def select_centers(positions, candidate_order, d_max):
    pos = np.ascontiguousarray(positions, dtype=np.float64)
    order = np.ascontiguousarray(candidate_order, dtype=np.int64)
    return _select(pos, order, float(d_max))


@njit(cache=True, parallel=True)
def _assign(emb, cemb, pos, cpos, d_max):
    n, d = emb.shape
    k = cemb.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in prange(n):
        best = 0
        best_d2 = np.inf
        for c in range(k):
            s = 0.0
            for j in range(d):
                t = emb[i, j] - cemb[c, j]
                s += t * t
            if s < best_d2:
                best_d2 = s
                best = c
        dx = pos[i, 0] - cpos[best, 0]
        dy = pos[i, 1] - cpos[best, 1]
        dz = pos[i, 2] - cpos[best, 2]
        if math.sqrt(dx * dx + dy * dy + dz * dz) <= d_max:
            out[i] = best
        else:
            out[i] = -1
    return out


def assign_points(embeddings, center_embeddings, positions, center_positions, d_max):
    return _assign(
        np.ascontiguousarray(embeddings, dtype=np.float64),
        np.ascontiguousarray(center_embeddings, dtype=np.float64),
        np.ascontiguousarray(positions, dtype=np.float64),
        np.ascontiguousarray(center_positions, dtype=np.float64),
        float(d_max),
    )


@njit(cache=True, parallel=True)
def _margin_rows(dist, w, same, eps_same, eps_diff):
    n = dist.shape[0]
    rows = np.empty(n, dtype=np.float64)
    for i in prange(n):
        acc = 0.0
        for j in range(n):
            if same[i, j]:
                h = dist[i, j] - eps_same
            else:
                h = eps_diff - dist[i, j]
            if h > 0.0:
                acc += w[i, j] * h
        rows[i] = acc
    return rows


def margin_loss(feature_dist, weights, same_instance, eps_same, eps_diff):
    rows = _margin_rows(
        np.ascontiguousarray(feature_dist, dtype=np.float64),
        np.ascontiguousarray(weights, dtype=np.float64),
        np.ascontiguousarray(same_instance, dtype=np.bool_),
        float(eps_same),
        float(eps_diff),
    )
    return float(rows.sum())
