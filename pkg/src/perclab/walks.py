"""Random walks on clusters and non-backtracking kernels on the host graph.

Lazy-walk mixing times are computed from the definition: the worst-start
total variation distance of the lazy walk is evaluated on exact powers of
the dense transition matrix.  Non-backtracking kernels are computed either
on directed edges (any family) or, on the hypercube, on the classes
(Hamming weight, whether the last flipped bit is set), which the
coordinate permutations fixing the origin leave invariant.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import comb

from . import _backend
from .errors import DivergenceError, DomainError, ResourceError
from .graphs import HYPERCUBE, neighbor_array

TMIX_BUDGET = 4000
EDGE_STATE_BUDGET = 2**22
TV_THRESHOLD = 0.25
_TV_SLACK = 1e-12


@dataclass
class ClusterGraph:
    """A finite connected graph relabelled to ``0 .. n-1`` (CSR adjacency)."""

    vertices: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray

    @classmethod
    def from_edges(cls, vertices, u, v):
        """Build from global vertex ids and an open edge list among them."""
        verts = np.unique(np.asarray(vertices, dtype=np.int64))
        lu = np.searchsorted(verts, np.asarray(u, dtype=np.int64))
        lv = np.searchsorted(verts, np.asarray(v, dtype=np.int64))
        return cls.from_local_edges(len(verts), lu, lv, vertices=verts)

    @classmethod
    def from_local_edges(cls, n, lu, lv, vertices=None):
        lu = np.asarray(lu, dtype=np.int64)
        lv = np.asarray(lv, dtype=np.int64)
        if np.any(lu == lv):
            raise DomainError("self-loops are not allowed")
        a = sp.coo_matrix((np.ones(2 * len(lu)), (np.r_[lu, lv], np.r_[lv, lu])),
                          shape=(n, n)).tocsr()
        if a.data.size and a.data.max() > 1:
            raise DomainError("multi-edges are not allowed")
        a.sort_indices()
        verts = np.arange(n, dtype=np.int64) if vertices is None else np.asarray(vertices)
        return cls(verts, a.indptr.astype(np.int64), a.indices.astype(np.int64))

    @classmethod
    def from_census(cls, summary, rank):
        """The ``rank``-th largest cluster of a census (rank 1 is the largest)."""
        verts = summary.cluster_vertices(rank)
        u, v = summary.cluster_edge_list(rank)
        return cls.from_edges(verts, u, v)

    @classmethod
    def from_report(cls, sample, report):
        from .percolation import induced_open_edges

        verts, lu, lv = induced_open_edges(sample, report.vertices)
        return cls.from_local_edges(len(verts), lu, lv, vertices=verts)

    @property
    def size(self):
        return len(self.indptr) - 1

    @property
    def edge_count(self):
        return len(self.indices) // 2

    @property
    def degrees(self):
        return np.diff(self.indptr)

    def edge_list(self):
        rows = np.repeat(np.arange(self.size), self.degrees)
        keep = rows < self.indices
        return rows[keep], self.indices[keep]

    def diameter(self):
        if self.size == 1:
            return 0
        lu, lv = self.edge_list()
        labels = np.zeros(self.size, dtype=np.int32)
        ecc, hist = _backend.kernels.eccentricities(
            self.size, lu, lv, labels, np.array([self.size]), 2)
        if hist.sum() != self.size**2:
            raise DomainError("graph is not connected")
        return int(ecc.max())


def lazy_transition_matrix(graph):
    n = graph.size
    deg = graph.degrees.astype(np.float64)
    P = np.zeros((n, n))
    rows = np.repeat(np.arange(n), graph.degrees)
    P[rows, graph.indices] = 0.5 / deg[rows]
    P[np.arange(n), np.arange(n)] += 0.5
    return P


def stationary(graph):
    deg = graph.degrees.astype(np.float64)
    return deg / deg.sum()


def _worst_tv(M, pi):
    return 0.5 * np.abs(M - pi).sum(axis=1).max()


def lazy_tv_trajectory(graph, t_max):
    """Worst-start TV distance of the lazy walk for ``t = 0 .. t_max``."""
    if graph.size == 1:
        return np.zeros(t_max + 1)
    P = lazy_transition_matrix(graph)
    pi = stationary(graph)
    M = np.eye(graph.size)
    out = [_worst_tv(M, pi)]
    for _ in range(t_max):
        M = M @ P
        out.append(_worst_tv(M, pi))
    return np.array(out)


def lazy_tmix_exact(graph, budget=TMIX_BUDGET, max_doublings=48):
    """Smallest ``t`` with worst-start TV distance at most 1/4.

    The worst-start distance is non-increasing in ``t``, so the first
    crossing is located by repeated squaring followed by a binary descent
    over the stored powers ``P**(2**j)``.
    """
    n = graph.size
    if n > budget:
        raise ResourceError(
            f"cluster of {n} vertices exceeds the dense budget {budget}; "
            "use lazy_tmix_bound")
    if n == 1:
        return 0
    if graph.degrees.min() == 0:
        raise DomainError("graph is not connected")
    P = lazy_transition_matrix(graph)
    pi = stationary(graph)

    def good(M):
        return _worst_tv(M, pi) <= TV_THRESHOLD + _TV_SLACK

    powers = [P]
    if good(P):
        return 1
    while not good(powers[-1]):
        if len(powers) > max_doublings:
            raise DivergenceError("lazy walk did not mix; is the graph connected?",
                                  best=2 ** len(powers))
        powers.append(powers[-1] @ powers[-1])
    # P**(2**(J-1)) is bad, P**(2**J) is good
    J = len(powers) - 1
    t = 2 ** (J - 1)
    cur = powers[J - 1]
    for j in range(J - 2, -1, -1):
        cand = cur @ powers[j]
        if not good(cand):
            cur = cand
            t += 2**j
    return t + 1


def lazy_tmix_bound(graph):
    """The commute-time bound ``8 |E| diam``."""
    return 8 * graph.edge_count * graph.diameter()


# non-backtracking kernels


@dataclass
class NBKernel:
    """``P^t(0, .)`` of the non-backtracking walk started at vertex 0.

    ``classes`` (hypercube method only) holds the mass on (Hamming weight,
    last flipped bit set) classes, shape ``(m + 1, 2)``; column 1 means the
    last step set a bit.
    """

    spec: object
    t: int
    distribution: np.ndarray
    method: str
    classes: np.ndarray | None = None


def _check_nb(spec):
    if spec.degree < 2:
        raise DomainError(f"{spec} has degree < 2; non-backtracking walks die out")


def _class_steps(m):
    """Yield the (weight, set-bit) class masses for ``t = 1, 2, ...``."""
    mass = np.zeros((m + 1, 2))
    mass[1, 1] = 1.0
    w = np.arange(m + 1, dtype=np.float64)
    q = 1.0 / (m - 1)
    while True:
        yield mass
        new = np.zeros_like(mass)
        # from (w, set): m-w unset bits go up, the other w-1 set bits go down
        # from (w, unset): m-w-1 other unset bits go up, w set bits go down
        up = mass[:, 1] * (m - w) * q + mass[:, 0] * np.maximum(m - w - 1, 0) * q
        down = mass[:, 1] * np.maximum(w - 1, 0) * q + mass[:, 0] * w * q
        new[1:, 1] = up[:-1]
        new[:-1, 0] = down[1:]
        mass = new


def _weight_profile(classes, m):
    """Per-vertex probability at each Hamming weight."""
    return classes.sum(axis=1) / comb(m, np.arange(m + 1))


def _popcounts(m):
    v = np.arange(2**m, dtype=np.int64)
    out = np.zeros(2**m, dtype=np.int64)
    for i in range(m):
        out += (v >> i) & 1
    return out


def _edge_state_operator(spec, budget):
    """Transpose of the directed-edge transition matrix, and state heads."""
    n_states = spec.V * spec.degree
    if n_states > budget:
        raise ResourceError(
            f"{spec} has {n_states} directed edges, over the budget of {budget}")
    deg = spec.degree
    states = np.arange(n_states, dtype=np.int64)
    tail = states // deg
    head = np.empty(n_states, dtype=np.int64)
    for i in range(deg):
        idx = states[i::deg]
        head[idx] = neighbor_array(spec, tail[idx], i)
    rows, cols = [], []
    for j in range(deg):
        nxt = neighbor_array(spec, head, j)
        ok = nxt != tail
        rows.append(states[ok])
        cols.append(head[ok] * deg + j)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    data = np.full(len(rows), 1.0 / (deg - 1))
    MT = sp.csr_matrix((data, (cols, rows)), shape=(n_states, n_states))
    return MT, head


def _generic_steps(spec, budget):
    """Yield full vertex distributions ``P^t(0, .)`` for ``t = 1, 2, ...``."""
    MT, head = _edge_state_operator(spec, budget)
    x = np.zeros(spec.V * spec.degree)
    x[: spec.degree] = 1.0 / spec.degree
    while True:
        yield np.bincount(head, weights=x, minlength=spec.V)
        x = MT @ x


def _use_classes(spec, method):
    if method == "auto":
        return spec.kind == HYPERCUBE
    if method == "class":
        if spec.kind != HYPERCUBE:
            raise DomainError("the class method applies to hypercubes only")
        return True
    if method == "generic":
        return False
    raise DomainError(f"unknown method {method!r}")


def nb_kernel(spec, t, method="auto", budget=EDGE_STATE_BUDGET):
    """Exact ``t``-step non-backtracking kernel from vertex 0."""
    if t < 1:
        raise DomainError("t must be >= 1")
    _check_nb(spec)
    if _use_classes(spec, method):
        m = spec.d
        for step, classes in enumerate(_class_steps(m), start=1):
            if step == t:
                break
        if spec.V > budget:
            dist = None
        else:
            dist = _weight_profile(classes, m)[_popcounts(m)]
        return NBKernel(spec, t, dist, "class", classes.copy())
    for step, dist in enumerate(_generic_steps(spec, budget), start=1):
        if step == t:
            return NBKernel(spec, t, dist, "generic")


def _profiles(spec, method, budget):
    """Yield ``(values, multiplicity)`` where values are distinct per-vertex
    probabilities of ``P^t(0, .)`` (grouped by class when possible)."""
    if _use_classes(spec, method):
        m = spec.d
        for classes in _class_steps(m):
            yield _weight_profile(classes, m)
    else:
        yield from _generic_steps(spec, budget)


def nb_tmix(spec, alpha, method="auto", t_cap=100_000, budget=EDGE_STATE_BUDGET):
    """Uniform non-backtracking mixing time.

    The smallest ``t >= 1`` with ``max_y (P^t(0,y) + P^{t+1}(0,y)) / 2 <=
    (1 + alpha) / V``; the maximum over starting points is dropped because
    every supported family is vertex-transitive.
    """
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    _check_nb(spec)
    bound = (1.0 + alpha) / spec.V
    gen = _profiles(spec, method, budget)
    prev = next(gen)
    best = (np.inf, None)
    for t in range(1, t_cap + 1):
        cur = next(gen)
        worst = 0.5 * (prev + cur).max()
        if worst <= bound:
            return t
        if worst < best[0]:
            best = (worst, t)
        prev = cur
    raise DivergenceError(
        f"criterion not met by t = {t_cap} (closest at t = {best[1]})", best=best[1])


def _group_conv_power(f, shape, k):
    """``k``-fold convolution power of ``f`` on the group ``Z_n^d``."""
    F = np.fft.fftn(f.reshape(shape))
    return np.real(np.fft.ifftn(F**k)).ravel()


def _group_conv(f, g, shape):
    F = np.fft.fftn(f.reshape(shape))
    G = np.fft.fftn(g.reshape(shape))
    return np.real(np.fft.ifftn(F * G)).ravel()


def kernel_sums(spec, t_max, method="auto", budget=EDGE_STATE_BUDGET):
    """Triple-kernel and heat-kernel sums up to ``t_max``.

    Returns ``(a2, heat)`` where ``a2 = max_y sum_{u,v} sum P^{t1}(0,u)
    P^{t2}(u,v) P^{t3}(v,y)`` over ``t_i in [0, t_max]`` with
    ``t1 + t2 + t3 >= 3``, and ``heat = sum_v sum_{t in [2, t_max]}
    sum_{s in [1, t]} s P^s(0,v) P^t(0,v)``.  Translation invariance of
    the walk on the Cayley graph of ``Z_n^d`` turns the double sum into
    group convolutions.
    """
    _check_nb(spec)
    V = spec.V
    if V > budget:
        raise ResourceError(f"{spec} has {V} vertices, over the budget of {budget}")
    if _use_classes(spec, method):
        pc = _popcounts(spec.d)
        gen = (prof[pc] for prof in _profiles(spec, "class", budget))
    else:
        gen = _generic_steps(spec, budget)
    delta = np.zeros(V)
    delta[0] = 1.0
    total = delta.copy()
    weighted = np.zeros(V)
    heat = 0.0
    f1 = f2 = None
    for t in range(1, t_max + 1):
        f = next(gen)
        if t == 1:
            f1 = f
        elif t == 2:
            f2 = f
        total += f
        weighted += t * f
        if t >= 2:
            heat += float(np.dot(weighted, f))
    shape = spec.group_shape
    triple = _group_conv_power(total, shape, 3)
    # remove (0,0,0), the three arrangements of (1,0,0), (2,0,0), (1,1,0)
    low = delta.copy()
    if f1 is not None:
        low += 3 * f1 + 3 * _group_conv(f1, f1, shape)
    if f2 is not None:
        low += 3 * f2
    return float((triple - low).max()), heat


def assumption_sums(spec, alpha, p_c=None, method="auto", budget=EDGE_STATE_BUDGET,
                    **pc_options):
    """Diagnostics for the mean-field assumptions at ``t = nb_tmix(spec, alpha)``.

    ``p_c`` defaults to :func:`find_pc` run with ``pc_options``; the result
    records which source was used.
    """
    from .estimators import find_pc

    t_mix = nb_tmix(spec, alpha, method=method, budget=budget)
    source = "given"
    if p_c is None:
        p_c = find_pc(spec, **pc_options).p_hat
        source = "find_pc"
    a2, heat = kernel_sums(spec, t_mix, method=method, budget=budget)
    a1 = abs((p_c * (spec.degree - 1)) ** t_mix - 1.0)
    return {"a1": a1, "a2": a2, "heat": heat, "t_mix": t_mix, "alpha": alpha,
            "p_c": p_c, "p_c_source": source}


def two_point_mc(spec, p, trials, seed, budget=TMIX_BUDGET):
    """Monte Carlo two-point matrix ``tau(x, y)`` from whole-graph censuses."""
    from .census import census
    from .percolation import PercolationSample
    from .rng import trial_seed

    if spec.V > budget:
        raise ResourceError(f"{spec} has {spec.V} vertices, over the budget of {budget}")
    tau = np.zeros((spec.V, spec.V))
    for i in range(trials):
        labels = census(PercolationSample(spec, p, trial_seed(seed, i))).labels
        tau += labels[:, None] == labels[None, :]
    return tau / trials


def triangle_sum(spec, p, mode="exact", trials=1000, seed=0, budget=TMIX_BUDGET):
    """Triple convolution ``sum_{u,v} tau(x,u) tau(u,v) tau(v,y)`` from ``x = 0``.

    Returns the value at ``y = x`` and the maximum over ``y != x``.
    """
    if mode == "exact":
        from .oracle import enumerate_exact

        tau = enumerate_exact(spec, p).two_point
    elif mode == "mc":
        tau = two_point_mc(spec, p, trials, seed, budget)
    else:
        raise DomainError(f"unknown mode {mode!r}")
    row = tau[0] @ tau @ tau
    return {"diagonal": float(row[0]),
            "off_diagonal": float(np.delete(row, 0).max()) if spec.V > 1 else 0.0,
            "mode": mode}
