"""Grid-graph machinery behind the intrinsic-metric generators.

Spaces that the lab cannot write down in closed form are realized as
4-neighbor grid graphs with step h and measured with shortest paths; the
graph metric overestimates Euclidean lengths by up to a factor sqrt(2), a
slack every desk-scale tolerance in the test suite quotes.
"""
from __future__ import annotations

import os

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import DomainError
from .metric_core import FiniteMetricSpace


def worker_count() -> int:
    """Worker cap from METRIC_LAB_THREADS; results never depend on it."""
    try:
        return max(1, int(os.environ.get("METRIC_LAB_THREADS", "1")))
    except ValueError:
        return 1


class GridGraph:
    """Immutable weighted graph with node positions and hashable node keys."""

    def __init__(self, keys, positions, edges):
        self.keys = tuple(keys)
        self.index = {k: i for i, k in enumerate(self.keys)}
        if len(self.index) != len(self.keys):
            raise DomainError("duplicate node keys in grid graph")
        self.positions = np.asarray(positions, dtype=float)
        n = len(self.keys)
        seen = {}
        for u, v, w in edges:
            if u == v:
                continue
            pair = (u, v) if u < v else (v, u)
            seen[pair] = w
        rows, cols, data = [], [], []
        for (u, v), w in seen.items():
            rows += [u, v]
            cols += [v, u]
            data += [w, w]
        self.adjacency = csr_matrix((data, (rows, cols)), shape=(n, n))

    @property
    def n(self) -> int:
        return len(self.keys)

    def distances_from(self, sources) -> np.ndarray:
        """Shortest-path rows for the given source node ids.

        Single-source runs are independent, so METRIC_LAB_THREADS > 1 shards
        them across a thread pool; the result does not depend on the split.
        """
        sources = np.atleast_1d(np.asarray(sources, dtype=int))
        workers = worker_count()
        if workers <= 1 or len(sources) < 2 * workers:
            return dijkstra(self.adjacency, directed=False, indices=sources)
        from concurrent.futures import ThreadPoolExecutor

        chunks = np.array_split(sources, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(
                lambda idx: dijkstra(self.adjacency, directed=False, indices=idx),
                [c for c in chunks if len(c)]))
        return np.vstack(parts)

    def distance(self, u: int, v: int) -> float:
        return float(self.distances_from([u])[0, v])

    def space_on(self, node_ids) -> FiniteMetricSpace:
        """Metric subspace on the given nodes; paths run through the full graph."""
        node_ids = np.asarray(node_ids, dtype=int)
        rows = self.distances_from(node_ids)
        d = rows[:, node_ids]
        d = np.minimum(d, d.T)  # exact up to float noise; symmetrize it away
        if d.size and not np.all(np.isfinite(d)):
            raise DomainError("requested nodes are not mutually connected")
        return FiniteMetricSpace(d, tuple(self.keys[i] for i in node_ids))

    def space(self) -> FiniteMetricSpace:
        return self.space_on(np.arange(self.n))


class GraphBuilder:
    """Accumulates nodes (key + position) and edges, then freezes a GridGraph."""

    def __init__(self):
        self._index: dict = {}
        self._positions: list = []
        self._edges: list = []

    def node(self, key, pos) -> int:
        idx = self._index.get(key)
        if idx is None:
            idx = len(self._positions)
            self._index[key] = idx
            self._positions.append(pos)
        return idx

    def edge(self, u: int, v: int, w: float) -> None:
        self._edges.append((u, v, w))

    def build(self) -> GridGraph:
        keys = [None] * len(self._positions)
        for k, i in self._index.items():
            keys[i] = k
        return GridGraph(keys, self._positions, self._edges)
