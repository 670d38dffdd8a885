"""Exact observables by enumerating every configuration of a tiny graph.

Configuration ``mask`` opens the ``i``-th edge (in increasing edge-code
order) iff bit ``i`` of ``mask`` is set.  Its weight ``p**k (1-p)**(E-k)``
is formed in log space and accumulated in extended precision.
"""

import re
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _backend
from .errors import DomainError, ResourceError
from .graphs import GraphSpec, edge_arrays
from .percolation import ClusterReport

MAX_EDGES = 20
FIXTURE_SPECS = ("Q2", "Q3", "T3^2", "K4")
FIXTURE_PS = (0.1, 0.3, 0.5)
FIXTURE_VERSION = 1


def edge_bits(spec):
    """Array mapping each canonical edge code to its bit index (``-1`` elsewhere)."""
    _, _, codes = edge_arrays(spec)
    ebit = np.full(spec.V * spec.degree, -1, dtype=np.int64)
    ebit[codes] = np.arange(len(codes))
    return ebit


def _mask_int(spec, bitmask):
    if isinstance(bitmask, (int, np.integer)):
        mask = int(bitmask)
        if not 0 <= mask < 2**spec.n_edges:
            raise DomainError(f"mask does not fit in {spec.n_edges} bits")
        return mask
    bits = [bool(b) for b in bitmask]
    if len(bits) != spec.n_edges:
        raise DomainError(f"need {spec.n_edges} bits, got {len(bits)}")
    return sum(1 << i for i, b in enumerate(bits) if b)


def forced_assignment_bfs(spec, bitmask, root=0, r_max=None):
    """Explore the cluster of ``root`` with edge states read from ``bitmask``.

    ``bitmask`` is an integer or a sequence of ``|E|`` booleans indexed in
    increasing edge-code order.
    """
    if spec.n_edges > 64:
        raise ResourceError("forced assignments are limited to 64 edges")
    if not 0 <= root < spec.V:
        raise DomainError(f"vertex {root} out of range for {spec}")
    mask = _mask_int(spec, bitmask)
    order, layers, edges, truncated = _backend.kernels.explore(
        spec.kernel_params, 0, 0, int(root), -1 if r_max is None else int(r_max), -1,
        np.empty(0, dtype=np.int64), True, mask, edge_bits(spec))
    return ClusterReport(root=int(root), size=len(order), edge_count=edges,
                         layers=tuple(int(x) for x in layers), truncated=truncated,
                         vertices=order)


@dataclass
class ExactLaw:
    """Exact law of the cluster observables at one ``(spec, p, root)``.

    ``size_dist[k]`` is ``P(|C(root)| = k)``; ``onearm[r]`` and
    ``boundary[r]`` are ``P(∂B(r) ≠ ∅)`` and ``E|∂B(r)|`` for
    ``r = 0 .. r_max``; ``two_point[x, y]`` is ``P(x ↔ y)``.
    """

    spec: GraphSpec
    p: float
    root: int
    chi: float
    size_dist: np.ndarray
    onearm: np.ndarray
    boundary: np.ndarray
    largest: float
    two_point: np.ndarray = field(repr=False)

    def tail(self, k):
        """``P(|C| >= k)``."""
        return float(self.size_dist[k:].sum()) if k < len(self.size_dist) else 0.0

    @property
    def triangle(self):
        """``max_y sum_{u,v} tau(root,u) tau(u,v) tau(v,y)``, split as (y = root, y != root)."""
        row = self.two_point[self.root] @ self.two_point @ self.two_point
        off = np.delete(row, self.root)
        return float(row[self.root]), float(off.max()) if len(off) else 0.0

    def observables(self, tails=(2, 4, 6)):
        """Flat ``{name: value}`` map used for fixtures."""
        out = {"chi": self.chi, "largest": self.largest}
        for k in tails:
            out[f"tail/{k}"] = self.tail(k)
        for r in range(1, len(self.onearm)):
            out[f"onearm/{r}"] = float(self.onearm[r])
            out[f"boundary/{r}"] = float(self.boundary[r])
        diag, off = self.triangle
        out["triangle/diag"] = diag
        out["triangle/off"] = off
        return out


def _weights(spec, p):
    E = spec.n_edges
    masks = np.arange(2**E, dtype=np.int64)
    k = np.zeros(len(masks), dtype=np.int64)
    for i in range(E):
        k += (masks >> i) & 1
    if p == 0.0:
        return (k == 0).astype(np.longdouble)
    if p == 1.0:
        return (k == E).astype(np.longdouble)
    lp = np.log(np.longdouble(p))
    lq = np.log1p(-np.longdouble(p))
    by_k = np.exp(np.arange(E + 1, dtype=np.longdouble) * lp
                  + (E - np.arange(E + 1, dtype=np.longdouble)) * lq)
    return by_k[k]


@lru_cache(maxsize=32)
def _enumerate(spec, root, r_max):
    return _backend.kernels.enumerate_masks(
        spec.kernel_params, edge_bits(spec), spec.n_edges, root, r_max)


def enumerate_exact(spec, p, root=0, r_max=None):
    """Exact law over all ``2**|E|`` configurations.

    Parameters
    ----------
    spec : GraphSpec
        At most 20 edges.
    p : float
    root : int
    r_max : int, optional
        Largest radius reported; defaults to ``V - 1``.

    Raises
    ------
    ResourceError
        If ``spec`` has more than 20 edges.
    """
    if spec.n_edges > MAX_EDGES:
        raise ResourceError(f"{spec} has {spec.n_edges} edges; enumeration allows {MAX_EDGES}")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p!r}")
    if not 0 <= root < spec.V:
        raise DomainError(f"vertex {root} out of range for {spec}")
    r_max = spec.V - 1 if r_max is None else int(r_max)
    layers, labels, c1 = _enumerate(spec, int(root), r_max)
    w = _weights(spec, p)
    ld = np.longdouble
    sizes = np.count_nonzero(labels == labels[:, root:root + 1], axis=1)
    size_dist = np.array([w[sizes == s].sum(dtype=ld) for s in range(spec.V + 1)], dtype=ld)
    onearm = np.array([w[layers[:, r] > 0].sum(dtype=ld) for r in range(r_max + 1)])
    boundary = (w[:, None] * layers).sum(axis=0, dtype=ld)
    chi = (w * sizes).sum(dtype=ld)
    largest = (w * c1).sum(dtype=ld)
    V = spec.V
    tau = np.empty((V, V), dtype=ld)
    for x in range(V):
        same = labels == labels[:, x:x + 1]
        tau[x] = (w[:, None] * same).sum(axis=0, dtype=ld)
    return ExactLaw(spec=spec, p=float(p), root=int(root), chi=float(chi),
                    size_dist=size_dist.astype(np.float64),
                    onearm=onearm.astype(np.float64), boundary=boundary.astype(np.float64),
                    largest=float(largest), two_point=tau.astype(np.float64))


# fixtures


def _fmt_p(p):
    return repr(float(p))


def fixture_lines(spec, p, r_max=3):
    law = enumerate_exact(spec, p, r_max=r_max)
    return [f"{spec}/{_fmt_p(p)}/{name} = {value!r}"
            for name, value in law.observables().items()]


def emit_fixtures(path, specs=FIXTURE_SPECS, ps=FIXTURE_PS, r_max=3):
    """Write golden exact values as ``<spec>/<p>/<observable>[/<index>] = value``."""
    lines = [f"# perc-lab exact fixtures, format version {FIXTURE_VERSION}"]
    for s in specs:
        spec = GraphSpec.parse(s) if isinstance(s, str) else s
        for p in ps:
            lines.extend(fixture_lines(spec, p, r_max))
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


_LINE_RE = re.compile(r"^\s*(\S+)\s*=\s*(\S+)\s*$")


def read_fixtures(path):
    """Parse a fixtures file into ``{(spec, p, observable): value}``."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            match = _LINE_RE.match(line)
            if not match:
                raise DomainError(f"{path}:{lineno}: malformed fixture line")
            key, value = match.groups()
            spec, p, obs = key.split("/", 2)
            out[(spec, float(p), obs)] = float(value)
    return out
