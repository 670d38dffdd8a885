"""Transitive graph families with implicit adjacency.

Vertices are the integers ``0 .. V-1``.  On the hypercube a vertex is its bit
pattern; on tori and products of complete graphs it is the mixed-radix
encoding ``sum(x[c] * n**c)`` of its coordinates, coordinate 0 least
significant.  Neighbours are listed by direction index:

* ``Q<m>``: direction ``i`` flips bit ``i``;
* ``T<n>^<d>``: direction ``2c`` adds one to coordinate ``c``, ``2c + 1``
  subtracts one (mod ``n``);
* ``K<n>^<d>``: direction ``c*(n-1) + k`` sets coordinate ``c`` to the
  ``k``-th value other than its current one, in increasing order.
  ``K<n>`` is the single-factor case.

An undirected edge is identified by ``(low endpoint, direction from low)``,
encoded as the integer ``low * degree + direction``.
"""

import re
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError

HYPERCUBE = "hypercube"
TORUS = "torus"
COMPLETE = "complete"
PRODUCT = "product"

# kernel codes; the complete graph is the one-factor product
_KIND_CODES = {HYPERCUBE: 0, TORUS: 1, COMPLETE: 2, PRODUCT: 2}

_SPEC_RE = re.compile(r"^(Q|T|K)(\d+)(?:\^(\d+))?$")


@dataclass(frozen=True)
class GraphSpec:
    """Immutable descriptor of one graph of a transitive family."""

    kind: str
    n: int
    d: int

    def __post_init__(self):
        if self.kind == HYPERCUBE:
            if self.n != 2 or not 1 <= self.d <= 62:
                raise DomainError("hypercube needs 1 <= m <= 62")
        elif self.kind == TORUS:
            if self.n < 3:
                raise DomainError(
                    f"torus side length must be >= 3 (got {self.n}); "
                    "n = 1, 2 give loops or multi-edges"
                )
            if self.d < 1:
                raise DomainError("torus needs d >= 1")
        elif self.kind == COMPLETE:
            if self.n < 2 or self.d != 1:
                raise DomainError("complete graph needs n >= 2")
        elif self.kind == PRODUCT:
            if self.n < 2 or self.d < 1:
                raise DomainError("product of complete graphs needs n >= 2, d >= 1")
        else:
            raise DomainError(f"unknown graph kind {self.kind!r}")
        if self.n**self.d >= 2**62:
            raise DomainError("vertex count exceeds 2**62")

    @classmethod
    def hypercube(cls, m):
        return cls(HYPERCUBE, 2, int(m))

    @classmethod
    def torus(cls, n, d):
        return cls(TORUS, int(n), int(d))

    @classmethod
    def complete(cls, n):
        return cls(COMPLETE, int(n), 1)

    @classmethod
    def product(cls, n, d):
        return cls(PRODUCT, int(n), int(d))

    @classmethod
    def parse(cls, text):
        """Parse ``Q<m>``, ``T<n>^<d>``, ``K<n>`` or ``K<n>^<d>``."""
        match = _SPEC_RE.match(text.strip())
        if match is None:
            raise DomainError(f"cannot parse graph spec {text!r}")
        letter, a, b = match.group(1), int(match.group(2)), match.group(3)
        if letter == "Q":
            if b is not None:
                raise DomainError(f"hypercube spec takes no exponent: {text!r}")
            return cls.hypercube(a)
        if letter == "T":
            if b is None:
                raise DomainError(f"torus spec needs a dimension: {text!r}")
            return cls.torus(a, int(b))
        if b is None:
            return cls.complete(a)
        return cls.product(a, int(b))

    @property
    def V(self):
        return self.n**self.d

    @property
    def degree(self):
        if self.kind == HYPERCUBE:
            return self.d
        if self.kind == TORUS:
            return 2 * self.d
        return self.d * (self.n - 1)

    @property
    def n_edges(self):
        return self.V * self.degree // 2

    @property
    def diameter(self):
        """Graph distance diameter of the unpercolated graph."""
        if self.kind == HYPERCUBE:
            return self.d
        if self.kind == TORUS:
            return self.d * (self.n // 2)
        return self.d

    @property
    def group_shape(self):
        """Shape of the abelian group ``Z_n^d`` whose Cayley graph this is."""
        return (self.n,) * self.d

    @property
    def kernel_params(self):
        return (_KIND_CODES[self.kind], self.n, self.d)

    def __str__(self):
        if self.kind == HYPERCUBE:
            return f"Q{self.d}"
        if self.kind == TORUS:
            return f"T{self.n}^{self.d}"
        if self.kind == COMPLETE:
            return f"K{self.n}"
        return f"K{self.n}^{self.d}"


class EdgeId(NamedTuple):
    low: int
    direction: int

    def code(self, spec):
        return self.low * spec.degree + self.direction


def _check_vertex(spec, v):
    if not 0 <= v < spec.V:
        raise DomainError(f"vertex {v} out of range for {spec} (V = {spec.V})")


def neighbor(spec, v, i):
    """The neighbour of ``v`` in direction ``i`` (no range checks)."""
    if spec.kind == HYPERCUBE:
        return v ^ (1 << i)
    n = spec.n
    if spec.kind == TORUS:
        c, minus = divmod(i, 2)
        pw = n**c
        x = (v // pw) % n
        a = (x - 1) % n if minus else (x + 1) % n
        return v + (a - x) * pw
    c, k = divmod(i, n - 1)
    pw = n**c
    x = (v // pw) % n
    a = k if k < x else k + 1
    return v + (a - x) * pw


def reverse_direction(spec, u, i):
    """Direction index leading from ``neighbor(spec, u, i)`` back to ``u``."""
    if spec.kind == HYPERCUBE:
        return i
    if spec.kind == TORUS:
        return i ^ 1
    n = spec.n
    c = i // (n - 1)
    pw = n**c
    x = (u // pw) % n
    a = (neighbor(spec, u, i) // pw) % n
    return c * (n - 1) + (x if x < a else x - 1)


def neighbors(spec, v):
    """Neighbours of ``v`` ordered by direction index."""
    _check_vertex(spec, v)
    return [neighbor(spec, v, i) for i in range(spec.degree)]


def direction_to(spec, u, v):
    """Direction index of the edge ``u -> v``; raises if not adjacent."""
    _check_vertex(spec, u)
    _check_vertex(spec, v)
    if spec.kind == HYPERCUBE:
        x = u ^ v
        if x and x & (x - 1) == 0:
            return x.bit_length() - 1
    else:
        for i in range(spec.degree):
            if neighbor(spec, u, i) == v:
                return i
    raise DomainError(f"vertices {u} and {v} are not adjacent in {spec}")


def canonical_edge(spec, u, v):
    """Orientation-independent identifier of the edge ``{u, v}``."""
    i = direction_to(spec, u, v)
    if u < v:
        return EdgeId(u, i)
    return EdgeId(v, reverse_direction(spec, u, i))


def edge_code(spec, u, v):
    return canonical_edge(spec, u, v).code(spec)


def decode_edge(spec, code):
    """Endpoints ``(low, high)`` of the edge with integer code ``code``."""
    low, i = divmod(code, spec.degree)
    return low, neighbor(spec, low, i)


def iter_edges(spec):
    """All edges as ``(u, v, code)`` in increasing code order."""
    deg = spec.degree
    for u in range(spec.V):
        for i in range(deg):
            v = neighbor(spec, u, i)
            if u < v:
                yield u, v, u * deg + i


def neighbor_array(spec, vertices, i):
    """Vectorised :func:`neighbor` over an int64 array of vertices."""
    v = np.asarray(vertices, dtype=np.int64)
    if spec.kind == HYPERCUBE:
        return v ^ np.int64(1 << i)
    n = spec.n
    if spec.kind == TORUS:
        c, minus = divmod(i, 2)
        pw = n**c
        x = (v // pw) % n
        a = (x - 1) % n if minus else (x + 1) % n
        return v + (a - x) * pw
    c, k = divmod(i, n - 1)
    pw = n**c
    x = (v // pw) % n
    a = np.where(k < x, k, k + 1)
    return v + (a - x) * pw


def edge_arrays(spec):
    """Endpoint and code arrays of all edges, in increasing code order."""
    us, vs, codes = [], [], []
    deg = spec.degree
    base = np.arange(spec.V, dtype=np.int64)
    for i in range(deg):
        nb = neighbor_array(spec, base, i)
        keep = base < nb
        us.append(base[keep])
        vs.append(nb[keep])
        codes.append(base[keep] * deg + i)
    u = np.concatenate(us)
    v = np.concatenate(vs)
    c = np.concatenate(codes)
    order = np.argsort(c, kind="stable")
    return u[order], v[order], c[order]


def edges_touching(spec, vertices):
    """Codes of every edge with an endpoint in ``vertices``.

    Expresses the vertex form of "off A" as an edge set.
    """
    out = set()
    for u in vertices:
        _check_vertex(spec, u)
        for i in range(spec.degree):
            out.add(edge_code(spec, u, neighbor(spec, u, i)))
    return frozenset(out)
