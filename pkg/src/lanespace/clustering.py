"""DBSCAN over 2-D points: grid-indexed implementation plus an O(n^2) reference.

Both produce the classic sequential labeling: clusters are numbered by the
lowest-index core point they contain, a border point reachable from several
clusters belongs to the first cluster that claimed it in index order, and
clusters below min_cluster_size are relabeled to noise with the survivors
renumbered contiguously from 0.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

NOISE = -1


@dataclass(frozen=True)
class ClusterParams:
    eps: float = 1.5
    min_pts: int = 4
    min_cluster_size: int = 12

    def __post_init__(self) -> None:
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.min_pts < 1:
            raise ValueError(f"min_pts must be >= 1, got {self.min_pts}")
        if self.min_cluster_size < 3:
            raise ValueError(
                f"min_cluster_size must be >= 3, got {self.min_cluster_size}"
            )


def _size_filter(labels: np.ndarray, n_clusters: int, min_size: int) -> np.ndarray:
    if n_clusters == 0:
        return labels
    sizes = np.bincount(labels[labels >= 0], minlength=n_clusters)
    keep = sizes >= min_size
    mapping = np.where(keep, np.cumsum(keep) - 1, NOISE)
    assigned = labels >= 0
    labels[assigned] = mapping[labels[assigned]]
    return labels


def _grid_pairs(pts: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """All ordered pairs (i, j) with |pts[i] - pts[j]| <= eps, i = j included.

    Cells have side eps, so every neighbor lies in one of the 9 cells around a
    point's own cell.
    """
    n = len(pts)
    cx = np.floor(pts[:, 0] / eps).astype(np.int64)
    cy = np.floor(pts[:, 1] / eps).astype(np.int64)
    cx -= cx.min()
    cy -= cy.min()
    stride = cy.max() + 3
    key = cx * stride + cy
    order = np.argsort(key, kind="stable")
    uniq, start, count = np.unique(key[order], return_index=True, return_counts=True)
    eps2 = eps * eps
    out_i: list[np.ndarray] = []
    out_j: list[np.ndarray] = []
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            qkey = key + dx * stride + dy
            pos = np.minimum(np.searchsorted(uniq, qkey), len(uniq) - 1)
            lens = np.where(uniq[pos] == qkey, count[pos], 0)
            total = int(lens.sum())
            if total == 0:
                continue
            pi = np.repeat(np.arange(n), lens)
            first = np.cumsum(lens) - lens
            offsets = np.arange(total) - np.repeat(first, lens)
            pj = order[np.repeat(start[pos], lens) + offsets]
            d2 = (pts[pi, 0] - pts[pj, 0]) ** 2 + (pts[pi, 1] - pts[pj, 1]) ** 2
            near = d2 <= eps2
            out_i.append(pi[near])
            out_j.append(pj[near])
    if not out_i:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    return np.concatenate(out_i), np.concatenate(out_j)


def dbscan(points: np.ndarray, params: ClusterParams) -> np.ndarray:
    """Grid-indexed DBSCAN; returns one label per point (NOISE or 0..k-1)."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    pi, pj = _grid_pairs(pts, params.eps)
    core = np.bincount(pi, minlength=n) >= params.min_pts
    labels = np.full(n, NOISE, dtype=np.int64)
    core_idx = np.flatnonzero(core)
    n_clusters = 0
    if len(core_idx):
        # Clusters are the connected components of the core-core adjacency
        # graph, renumbered by their lowest member index to match the
        # sequential expansion order.
        remap = np.full(n, -1, dtype=np.int64)
        remap[core_idx] = np.arange(len(core_idx))
        cc = core[pi] & core[pj]
        graph = csr_matrix(
            (np.ones(int(cc.sum()), dtype=np.int8), (remap[pi[cc]], remap[pj[cc]])),
            shape=(len(core_idx), len(core_idx)),
        )
        n_clusters, comp = connected_components(graph, directed=False)
        first = np.full(n_clusters, n, dtype=np.int64)
        np.minimum.at(first, comp, core_idx)
        renumber = np.empty(n_clusters, dtype=np.int64)
        renumber[np.argsort(first, kind="stable")] = np.arange(n_clusters)
        labels[core_idx] = renumber[comp]
        # A border point goes to the lowest-numbered adjacent cluster: that is
        # the cluster whose expansion reaches it first.
        bc = ~core[pi] & core[pj]
        if bc.any():
            best = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
            np.minimum.at(best, pi[bc], labels[pj[bc]])
            claimed = ~core & (best < np.iinfo(np.int64).max)
            labels[claimed] = best[claimed]
    return _size_filter(labels, n_clusters, params.min_cluster_size)


def dbscan_bruteforce(points: np.ndarray, params: ClusterParams) -> np.ndarray:
    """Textbook sequential DBSCAN on an all-pairs distance matrix."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
    near = d2 <= params.eps * params.eps
    core = near.sum(axis=1) >= params.min_pts
    UNVISITED = -2
    labels = np.full(n, UNVISITED, dtype=np.int64)
    cluster = 0
    for seed in range(n):
        if labels[seed] != UNVISITED:
            continue
        if not core[seed]:
            labels[seed] = NOISE
            continue
        labels[seed] = cluster
        queue = deque(np.flatnonzero(near[seed]))
        while queue:
            q = queue.popleft()
            if labels[q] == NOISE:
                labels[q] = cluster
            if labels[q] != UNVISITED:
                continue
            labels[q] = cluster
            if core[q]:
                queue.extend(np.flatnonzero(near[q]))
        cluster += 1
    return _size_filter(labels, cluster, params.min_cluster_size)
