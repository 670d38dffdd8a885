"""Percolation configurations and cluster exploration in the intrinsic metric."""

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import _backend, rng
from .errors import DomainError
from .graphs import GraphSpec, edge_code, neighbor_array


@dataclass(frozen=True)
class PercolationSample:
    """A configuration determined entirely by ``(spec, p, seed)``.

    Edge ``e`` is open iff its uniform ``u(seed, e)`` is below ``p``, so for a
    fixed seed the open edge sets are nested in ``p``.
    """

    spec: GraphSpec
    p: float
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"p must lie in [0, 1], got {self.p!r}")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")

    @property
    def key(self):
        return rng.sample_key(self.seed)

    @property
    def thresh(self):
        return rng.threshold(self.p)

    def with_p(self, p):
        return PercolationSample(self.spec, p, self.seed)


def avoid_array(spec, avoid):
    """Normalise an avoid set (edge codes or ``EdgeId``s) to a sorted array."""
    if avoid is None or len(avoid) == 0:
        return np.empty(0, dtype=np.int64)
    if isinstance(avoid, np.ndarray):
        avoid = avoid.tolist()
    codes = set()
    for e in avoid:
        if isinstance(e, tuple):
            e = e[0] * spec.degree + e[1]
        e = int(e)
        if not 0 <= e < spec.V * spec.degree:
            raise DomainError(f"edge code {e} out of range for {spec}")
        codes.add(e)
    return np.array(sorted(codes), dtype=np.int64)


def edge_open(sample, u, v):
    """Whether the edge ``{u, v}`` is open in ``sample``."""
    return rng.edge_is_open(sample.key, edge_code(sample.spec, u, v), sample.thresh)


@dataclass
class ClusterReport:
    root: int
    size: int
    edge_count: int
    layers: tuple
    truncated: bool
    diameter: int | None = None
    vertices: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def radius(self):
        """Largest ``r`` with a non-empty sphere ``∂B(r)``."""
        return len(self.layers) - 1

    def distances(self):
        """Intrinsic distance from the root of each vertex in ``vertices``."""
        return np.repeat(np.arange(len(self.layers)), self.layers)

    def to_dict(self):
        out = {
            "root": self.root,
            "size": self.size,
            "edge_count": self.edge_count,
            "layers": list(self.layers),
            "truncated": self.truncated,
        }
        if self.diameter is not None:
            out["diameter"] = self.diameter
        return out


def _cap(x):
    if x is None or (isinstance(x, float) and math.isinf(x)):
        return -1
    x = int(x)
    if x < 0:
        raise DomainError("caps must be non-negative")
    return x


def explore_cluster(sample, v, r_max=None, size_cap=None, avoid=(), diameter=False):
    """Breadth-first exploration of the open cluster of ``v``.

    Parameters
    ----------
    sample : PercolationSample
    v : int
        Root vertex.
    r_max, size_cap : int or None
        Radius and vertex caps; ``None`` means unbounded.  ``truncated`` is
        set only when a cap actually cut off part of the cluster.
    avoid : iterable
        Edges treated as closed ("off" the set).
    diameter : bool
        Also compute the exact diameter of the explored vertex set.

    Returns
    -------
    ClusterReport
    """
    spec = sample.spec
    if not 0 <= v < spec.V:
        raise DomainError(f"vertex {v} out of range for {spec}")
    av = avoid_array(spec, avoid)
    order, layers, edges, truncated = _backend.kernels.explore(
        spec.kernel_params, sample.key, sample.thresh, int(v),
        _cap(r_max), _cap(size_cap), av, True,
    )
    report = ClusterReport(
        root=int(v),
        size=len(order),
        edge_count=edges,
        layers=tuple(int(x) for x in layers),
        truncated=truncated,
        vertices=order,
    )
    if diameter:
        report.diameter = cluster_diameter(sample, order, avoid=av)
    return report


def induced_open_edges(sample, vertices, avoid=()):
    """Open edges with both endpoints in ``vertices``.

    Returns ``(verts, lu, lv)`` where ``verts`` is the sorted vertex array and
    ``lu < lv`` index into it.
    """
    spec = sample.spec
    verts = np.unique(np.asarray(vertices, dtype=np.int64))
    av = avoid_array(spec, avoid)
    if len(verts) == 0:
        empty = np.empty(0, dtype=np.int64)
        return verts, empty, empty
    lus, lvs = [], []
    for i in range(spec.degree):
        nb = neighbor_array(spec, verts, i)
        up = verts < nb
        pos = np.searchsorted(verts, nb[up])
        pos_c = np.minimum(pos, len(verts) - 1)
        inside = verts[pos_c] == nb[up]
        src = np.flatnonzero(up)[inside]
        codes = verts[src] * spec.degree + i
        ok = rng.edges_open_array(sample.key, codes, sample.thresh)
        if len(av):
            ok &= ~np.isin(codes, av)
        lus.append(src[ok])
        lvs.append(pos_c[inside][ok])
    return verts, np.concatenate(lus), np.concatenate(lvs)


def cluster_diameter(sample, vertices, avoid=()):
    """Exact diameter of a connected open vertex set, by BFS from every vertex."""
    verts, lu, lv = induced_open_edges(sample, vertices, avoid)
    k = len(verts)
    if k == 0:
        raise DomainError("empty vertex set")
    if k == 1:
        return 0
    labels = np.zeros(k, dtype=np.int32)
    sizes = np.array([k], dtype=np.int64)
    ecc, hist = _backend.kernels.eccentricities(k, lu, lv, labels, sizes, 2)
    if hist.sum() != k * k:
        raise DomainError("vertex set is not connected by open edges")
    return int(ecc.max())


@dataclass
class LaneCensus:
    lanes: dict
    rich: bool
    reached: bool

    def to_dict(self):
        return {"lanes": {str(j): c for j, c in self.lanes.items()},
                "rich": self.rich, "reached": self.reached}


def lane_census(sample, v, k, r_prime, ell, avoid=(), report=None):
    """Count lanes for ``(v, r_prime)`` at every level ``0 < j < r_prime``.

    An edge from ``∂B_v(j-1)`` to ``∂B_v(j)`` is a lane when an open path
    starting with it reaches ``∂B_v(r_prime)`` without returning to
    ``∂B_v(j-1)``.  ``v`` is lane rich when more than half of the levels
    ``j`` in ``[k/2, k]`` carry at least ``ell`` lanes.

    ``report`` may pass an existing exploration of ``v``; it must reach
    radius ``r_prime`` or be untruncated.
    """
    if not 0 <= k < r_prime:
        raise DomainError("need 0 <= k < r_prime")
    if report is None:
        report = explore_cluster(sample, v, r_max=r_prime, avoid=avoid)
    elif report.truncated and report.radius < r_prime:
        raise DomainError(
            f"r_prime = {r_prime} exceeds the explored radius {report.radius}")
    dist_of = dict(zip(report.vertices.tolist(), report.distances().tolist()))
    ball = [u for u, d in dist_of.items() if d <= r_prime]
    verts, lu, lv = induced_open_edges(sample, ball, avoid)
    level = np.array([dist_of[u] for u in verts.tolist()])
    adj = [[] for _ in verts]
    for a, b in zip(lu.tolist(), lv.tolist()):
        adj[a].append(b)
        adj[b].append(a)
    targets = np.flatnonzero(level == r_prime).tolist()
    lanes = {}
    for j in range(1, r_prime):
        reach = np.zeros(len(verts), dtype=bool)
        queue = deque(targets)
        reach[targets] = True
        while queue:
            a = queue.popleft()
            for b in adj[a]:
                if not reach[b] and level[b] >= j:
                    reach[b] = True
                    queue.append(b)
        count = 0
        for a, b in zip(lu.tolist(), lv.tolist()):
            la, lb = level[a], level[b]
            if la == j - 1 and lb == j and reach[b]:
                count += 1
            elif lb == j - 1 and la == j and reach[a]:
                count += 1
        lanes[j] = count
    window = [j for j in range(math.ceil(k / 2), k + 1) if 0 < j < r_prime]
    good = sum(1 for j in window if lanes[j] >= ell)
    return LaneCensus(lanes=lanes, rich=bool(window) and good > len(window) / 2,
                      reached=bool(targets))
