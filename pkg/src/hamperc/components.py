"""Connected components of the occupied-site subgraph.

The census never builds the Hamming adjacency.  Occupied vertices on a
common axis-parallel line form a clique, so chaining consecutive occupied
vertices along every line preserves connectivity with at most ``d`` edges
per vertex.  The chained forest is then labelled by a sparse
connected-components pass.
"""

from __future__ import annotations

import heapq
import itertools
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as _cc

from .sampler import SiteConfig
from .torus import line_keys, neighbors


@dataclass(frozen=True)
class ComponentStats:
    component_sizes: np.ndarray = field(repr=False)  # descending
    largest: int
    second_largest: int
    isolated_count: int
    component_count: int
    occupied_count: int
    is_connected: bool

    @property
    def isolated_or_giant(self) -> bool:
        """True when every occupied vertex is isolated or in the largest
        component."""
        return self.component_count - self.isolated_count <= 1

    def histogram(self) -> list[tuple[int, int]]:
        """``(size, count)`` pairs, ascending by size."""
        sizes, counts = np.unique(self.component_sizes, return_counts=True)
        return [(int(s), int(c)) for s, c in zip(sizes, counts)]

    def summary(self) -> dict:
        return {
            "largest": self.largest,
            "second_largest": self.second_largest,
            "isolated_count": self.isolated_count,
            "component_count": self.component_count,
            "occupied_count": self.occupied_count,
            "is_connected": self.is_connected,
        }


def line_edges(config: SiteConfig, occupied: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Edges between consecutive occupied vertices along every line.

    Returned as two arrays of positions into ``occupied`` (the sorted
    occupied indices), which double as dense vertex ids.
    """
    spec = config.spec
    if occupied is None:
        occupied = config.occupied_indices()
    src, dst = [], []
    for axis in range(1, spec.d + 1):
        if spec.L[axis - 1] == 1:
            continue
        keys = line_keys(spec, occupied, axis)
        # occupied is ascending, so a stable sort on the line key keeps each
        # line ordered by its free coordinate
        order = np.argsort(keys, kind="stable")
        same = keys[order[1:]] == keys[order[:-1]]
        src.append(order[:-1][same])
        dst.append(order[1:][same])
    if not src:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty
    return np.concatenate(src), np.concatenate(dst)


def component_labels(config: SiteConfig) -> tuple[np.ndarray, np.ndarray]:
    """Sorted occupied vertex indices and the component label of each."""
    occupied = config.occupied_indices()
    m = occupied.size
    if m == 0:
        return occupied, np.zeros(0, dtype=np.int64)
    src, dst = line_edges(config, occupied)
    graph = coo_matrix((np.ones(src.size, dtype=np.int8), (src, dst)), shape=(m, m)).tocsr()
    _, labels = _cc(graph, directed=False)
    return occupied, labels


def stats_from_labels(labels: np.ndarray) -> ComponentStats:
    sizes = np.sort(np.bincount(labels))[::-1] if labels.size else np.zeros(0, dtype=np.int64)
    count = int(sizes.size)
    return ComponentStats(
        component_sizes=sizes,
        largest=int(sizes[0]) if count else 0,
        second_largest=int(sizes[1]) if count > 1 else 0,
        isolated_count=int(np.count_nonzero(sizes == 1)),
        component_count=count,
        occupied_count=int(labels.size),
        is_connected=count <= 1,
    )


def connected_components(config: SiteConfig) -> ComponentStats:
    """Exact component census of the occupied subgraph."""
    _, labels = component_labels(config)
    return stats_from_labels(labels)


@dataclass
class DiscoveryTrace:
    """State of a cluster-discovery run after ``step`` retirements.

    ``seen`` is the complement of the unseen set U_t; U_t itself is never
    stored since it covers almost the whole torus.
    """

    removed: set[int]
    active: set[int]
    seen: set[int]
    step: int

    def is_unseen(self, v: int) -> bool:
        return v not in self.seen


def _discover(config: SiteConfig, v: int, prune_shared: bool):
    spec = config.spec
    if not config.is_occupied(v):
        return
    trace = DiscoveryTrace(removed=set(), active={v}, seen={v}, step=0)
    heap = [v]  # lexicographic order on coordinates is ascending index order
    # number of active vertices adjacent to each vertex (modified variant only)
    active_nbrs: Counter[int] = Counter()
    if prune_shared:
        active_nbrs.update(neighbors(spec, v))
    yield trace
    while heap:
        vt = heapq.heappop(heap)
        trace.active.discard(vt)
        born = []
        for w in neighbors(spec, vt):
            if w in trace.seen:
                continue
            trace.seen.add(w)
            if config.is_occupied(w):
                born.append(w)
        trace.active.update(born)
        for w in born:
            heapq.heappush(heap, w)
        if prune_shared:
            active_nbrs.subtract(neighbors(spec, vt))
            for w in born:
                for x in neighbors(spec, w):
                    active_nbrs[x] += 1
                    # unseen vertices adjacent to two distinct active vertices
                    if active_nbrs[x] >= 2:
                        trace.seen.add(x)
            # counts only rise through newly born vertices, so vertices
            # shared with two older active vertices were pruned earlier
        trace.removed.add(vt)
        trace.step += 1
        yield trace


def discovery_trace(config: SiteConfig, v: int, modified: bool = False):
    """Yield the :class:`DiscoveryTrace` after each step (the same object,
    mutated in place)."""
    return _discover(config, v, modified)


def cluster_discovery(config: SiteConfig, v: int) -> set[int]:
    """Component of ``v`` revealed one retirement at a time, always expanding
    the lexicographically smallest active vertex.  Empty if ``v`` is
    unoccupied."""
    trace = None
    for trace in _discover(config, v, prune_shared=False):
        pass
    return set(trace.removed) if trace else set()


def modified_cluster_discovery(config: SiteConfig, v: int) -> set[int]:
    """Cluster discovery that also discards every unseen vertex adjacent to
    two distinct active vertices.  Returns the retired set, a subset of the
    component of ``v``."""
    trace = None
    for trace in _discover(config, v, prune_shared=True):
        pass
    return set(trace.removed) if trace else set()


def plane_occupancy_max(config: SiteConfig, k: int) -> int:
    """Largest number of occupied vertices in any axis-aligned plane that
    fixes ``k`` coordinates."""
    spec = config.spec
    if not 1 <= k <= spec.d - 1:
        raise ValueError(f"k must lie in [1, {spec.d - 1}]")
    occupied = config.occupied_indices()
    if occupied.size == 0:
        return 0
    coords = np.unravel_index(occupied, spec.L)
    best = 0
    for axes in itertools.combinations(range(spec.d), k):
        shape = tuple(spec.L[i] for i in axes)
        keys = np.ravel_multi_index(tuple(coords[i] for i in axes), shape)
        best = max(best, int(np.bincount(keys).max()))
    return best
