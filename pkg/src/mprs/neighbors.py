"""Nearest-sample search, per-point bandwidths and coupling precomputation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .core import InsufficientSamples, InvalidParameter, ModelParams, PointSet

# Tree search is used up to this dimension, exhaustive search above it.
TREE_MAX_DIM = 3
# Extra candidates fetched from the tree so that ties at the k-th rank can be
# resolved by sample index.
_TIE_MARGIN = 4
_BRUTE_CHUNK = 2048


@dataclass(frozen=True)
class NeighborGraph:
    """Bonds between every prediction point and its ``n_b`` nearest samples.

    Attributes
    ----------
    neighbor_idx : (P, n_b) int array
        Sample indices, nearest first.
    neighbor_dist : (P, n_b) float array
        Matching Euclidean distances, ascending along each row.
    bandwidth : (P,) float array
        Positive decay length of each prediction point.
    coupling : (P, n_b) float array
        ``J0 * exp(-neighbor_dist / bandwidth)``.
    """

    neighbor_idx: np.ndarray
    neighbor_dist: np.ndarray
    bandwidth: np.ndarray
    coupling: np.ndarray

    @property
    def n_pred(self) -> int:
        return self.neighbor_idx.shape[0]

    @property
    def n_b(self) -> int:
        return self.neighbor_idx.shape[1]

    def subset(self, rows) -> "NeighborGraph":
        rows = np.asarray(rows)
        return NeighborGraph(
            self.neighbor_idx[rows],
            self.neighbor_dist[rows],
            self.bandwidth[rows],
            self.coupling[rows],
        )


def _distances(sample_coords, query_coords, idx):
    # Same arithmetic for every candidate, so geometric ties compare equal.
    diff = sample_coords[idx] - query_coords[:, None, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def _rank(dist, idx, k):
    # Sort each row by (distance, sample index) and keep the first k.
    rows = np.arange(dist.shape[0])[:, None]
    order = np.lexsort((idx, dist))
    return idx[rows, order[:, :k]], dist[rows, order[:, :k]]


def _knn_brute(sample_coords, query_coords, k):
    n = sample_coords.shape[0]
    out_idx = np.empty((query_coords.shape[0], k), dtype=np.int64)
    out_dist = np.empty((query_coords.shape[0], k))
    all_idx = np.arange(n)
    for start in range(0, query_coords.shape[0], _BRUTE_CHUNK):
        q = query_coords[start:start + _BRUTE_CHUNK]
        cand = np.broadcast_to(all_idx, (q.shape[0], n))
        d = _distances(sample_coords, q, cand)
        out_idx[start:start + q.shape[0]], out_dist[start:start + q.shape[0]] = _rank(d, cand, k)
    return out_idx, out_dist


def knn(samples: PointSet, queries: PointSet, k: int):
    """Exact k nearest samples of every query point.

    Ties in distance are broken by the lower sample index.

    Returns
    -------
    idx : (P, k) int64 array
    dist : (P, k) float array, rows ascending
    """
    if samples.dim != queries.dim:
        raise InvalidParameter(f"dimension mismatch: samples {samples.dim}, queries {queries.dim}")
    if k < 1:
        raise InvalidParameter("k must be positive")
    n = samples.n
    if k > n:
        raise InsufficientSamples(f"need {k} neighbours but only {n} samples")
    s, q = samples.coords, queries.coords
    if q.shape[0] == 0:
        return np.empty((0, k), dtype=np.int64), np.empty((0, k))
    if samples.dim > TREE_MAX_DIM or n <= k + _TIE_MARGIN:
        return _knn_brute(s, q, k)

    m = k + _TIE_MARGIN
    tree = cKDTree(s)
    _, cand = tree.query(q, k=m)
    cand = cand.astype(np.int64)
    d = _distances(s, q, cand)
    idx, dist = _rank(d, cand, k)
    # A row is only trustworthy when the k-th distance is strictly inside the
    # candidate radius; otherwise an equidistant sample may have been missed.
    unsafe = dist[:, -1] >= d.max(axis=1) * (1.0 - 1e-12)
    if np.any(unsafe):
        rows = np.flatnonzero(unsafe)
        idx[rows], dist[rows] = _knn_brute(s, q[rows], k)
    return idx, dist


def median_bandwidth(dist_sorted, k=4):
    """Median of the ``k`` smallest distances in each row (rows ascending)."""
    d = np.asarray(dist_sorted)[:, :k]
    if d.shape[1] < k:
        raise InsufficientSamples(f"bandwidth needs {k} neighbour distances")
    return np.median(d, axis=1)


def _bandwidth_floor(samples: PointSet, queries: PointSet) -> float:
    pts = np.vstack([samples.coords, queries.coords])
    diag = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
    return 1e-12 * (diag if diag > 0 else 1.0)


def estimate_bandwidths(samples: PointSet, queries: PointSet, k: int = 4) -> np.ndarray:
    """Median distance from each query to its ``k`` nearest samples.

    Zero medians (a query stacked on several samples) are floored at
    ``1e-12`` times the diagonal of the bounding box of all sites.
    """
    if samples.n < k:
        raise InsufficientSamples(f"bandwidth needs {k} samples, have {samples.n}")
    _, dist = knn(samples, queries, k)
    return np.maximum(median_bandwidth(dist, k), _bandwidth_floor(samples, queries))


def build_graph(samples: PointSet, queries: PointSet, params: ModelParams = ModelParams()) -> NeighborGraph:
    n_b, k_bw = int(params.n_b), int(params.bandwidth_k)
    need = max(n_b, k_bw)
    if samples.n < need:
        raise InsufficientSamples(f"need at least {need} samples, have {samples.n}")
    idx, dist = knn(samples, queries, need)
    bw = np.maximum(median_bandwidth(dist, k_bw), _bandwidth_floor(samples, queries))
    idx, dist = idx[:, :n_b].copy(), dist[:, :n_b].copy()
    coupling = params.J0 * np.exp(-dist / bw[:, None])
    for a in (idx, dist, bw, coupling):
        a.setflags(write=False)
    return NeighborGraph(idx, dist, bw, coupling)
