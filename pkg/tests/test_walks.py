import itertools
import math

import numpy as np
import pytest

from perclab.census import census
from perclab.errors import DivergenceError, DomainError, ResourceError
from perclab.graphs import GraphSpec, neighbors
from perclab.oracle import enumerate_exact
from perclab.percolation import PercolationSample
from perclab.walks import (
    ClusterGraph,
    assumption_sums,
    kernel_sums,
    lazy_tmix_bound,
    lazy_tmix_exact,
    lazy_transition_matrix,
    lazy_tv_trajectory,
    nb_kernel,
    nb_tmix,
    stationary,
    triangle_sum,
)


def _path(n):
    return ClusterGraph.from_local_edges(n, np.arange(n - 1), np.arange(1, n))


def _cycle(n):
    return ClusterGraph.from_local_edges(n, np.arange(n), (np.arange(n) + 1) % n)


def test_lazy_small_cases():
    assert lazy_tmix_exact(ClusterGraph.from_local_edges(1, [], [])) == 0
    edge = _path(2)
    assert lazy_tmix_exact(edge) == 1 and lazy_tmix_bound(edge) == 8
    assert lazy_tmix_bound(_path(3)) == 32


def _brute_tmix(graph):
    """Iterate a distribution vector from each start separately."""
    n = graph.size
    adj = [graph.indices[graph.indptr[i]:graph.indptr[i + 1]] for i in range(n)]
    pi = graph.degrees / graph.degrees.sum()
    dists = [np.eye(n)[s] for s in range(n)]
    t = 0
    while max(0.5 * np.abs(d - pi).sum() for d in dists) > 0.25:
        new = []
        for d in dists:
            nd = 0.5 * d
            for i in range(n):
                nd[adj[i]] += 0.5 * d[i] / len(adj[i])
            new.append(nd)
        dists = new
        t += 1
    return t


@pytest.mark.parametrize("graph", [_cycle(8), _path(7), _cycle(5)], ids=["C8", "P7", "C5"])
def test_lazy_matches_brute_force(graph):
    assert lazy_tmix_exact(graph) == _brute_tmix(graph)


def test_lazy_tv_monotone_and_bound_on_clusters():
    spec = GraphSpec.hypercube(10)
    checked = 0
    for seed in range(100):
        s = census(PercolationSample(spec, 0.1, seed))
        for rank in range(1, min(4, s.n_clusters) + 1):
            g = ClusterGraph.from_census(s, rank)
            if g.size < 2:
                continue
            t = lazy_tmix_exact(g)
            assert lazy_tmix_bound(g) >= t
            tv = lazy_tv_trajectory(g, t + 3)
            assert np.all(np.diff(tv) <= 1e-12)
            assert tv[t] <= 0.25 + 1e-12 and (t == 0 or tv[t - 1] > 0.25)
            checked += 1
    assert checked > 100


def test_lazy_matrix_stochastic():
    g = _cycle(6)
    P = lazy_transition_matrix(g)
    assert np.allclose(P.sum(axis=1), 1.0)
    assert np.allclose(stationary(g) @ P, stationary(g))


def test_lazy_budget():
    with pytest.raises(ResourceError):
        lazy_tmix_exact(_path(50), budget=10)


def test_cluster_graph_validation():
    with pytest.raises(DomainError):
        ClusterGraph.from_local_edges(2, [0], [0])
    with pytest.raises(DomainError):
        ClusterGraph.from_local_edges(4, [0, 2], [1, 3]).diameter()


def test_nb_one_and_two_steps():
    for m in (4, 7):
        spec = GraphSpec.hypercube(m)
        k1 = nb_kernel(spec, 1).distribution
        assert np.allclose(k1[[1 << i for i in range(m)]], 1 / m)
        assert k1.sum() == pytest.approx(1.0)
        k2 = nb_kernel(spec, 2).distribution
        weight2 = [v for v in range(2**m) if bin(v).count("1") == 2]
        assert k2[0] == 0
        assert np.allclose(k2[weight2], 2 / (m * (m - 1)))


def test_nb_class_equals_generic():
    for m in range(3, 7):
        spec = GraphSpec.hypercube(m)
        for t in range(1, 13):
            a = nb_kernel(spec, t, method="class")
            b = nb_kernel(spec, t, method="generic")
            assert np.max(np.abs(a.distribution - b.distribution)) <= 1e-12
            assert abs(a.classes.sum() - 1) <= 1e-12 and abs(b.distribution.sum() - 1) <= 1e-12


def test_nb_symmetry_and_parity():
    spec = GraphSpec.hypercube(6)
    w = np.array([bin(v).count("1") for v in range(64)])
    for t in range(1, 10):
        d = nb_kernel(spec, t, method="generic").distribution
        for k in range(7):
            assert np.ptp(d[w == k]) < 1e-14
        if t % 2:
            assert d[0] == 0 and np.all(d[w % 2 == 0] == 0)


def _nb_paths(spec, t):
    """Distribution of the endpoint of a uniform non-backtracking t-step path."""
    out = np.zeros(spec.V)
    stack = [(0, -1, 1.0, 0)]
    while stack:
        u, prev, w, k = stack.pop()
        if k == t:
            out[u] += w
            continue
        nxt = [v for v in neighbors(spec, u) if v != prev]
        for v in nxt:
            stack.append((v, u, w / len(nxt), k + 1))
    return out


@pytest.mark.parametrize("spec", [GraphSpec.torus(5, 2), GraphSpec.product(3, 2),
                                  GraphSpec.complete(5)], ids=str)
def test_generic_kernel_matches_path_enumeration(spec):
    for t in range(1, 6):
        assert np.allclose(nb_kernel(spec, t).distribution, _nb_paths(spec, t), atol=1e-14)


def test_nb_tmix_values():
    t = nb_tmix(GraphSpec.complete(8), 0.1)
    assert t <= 3
    with pytest.raises(DivergenceError):
        nb_tmix(GraphSpec.hypercube(10), 0.1, t_cap=3)
    with pytest.raises(DomainError):
        nb_tmix(GraphSpec.hypercube(10), 0.0)
    with pytest.raises(DomainError):
        nb_kernel(GraphSpec.hypercube(1), 1)
    # the class and generic paths agree
    spec = GraphSpec.hypercube(8)
    assert nb_tmix(spec, 1 / 8) == nb_tmix(spec, 1 / 8, method="generic")


def _direct_sums(spec, T):
    ks = [np.eye(spec.V)[0]] + [_nb_paths(spec, t) for t in range(1, T + 1)]
    # P^t(x, y) = ks[t][x xor y] on the hypercube
    idx = np.arange(spec.V)
    mats = [k[idx[:, None] ^ idx[None, :]] for k in ks]
    a2 = np.zeros(spec.V)
    for t1, t2, t3 in itertools.product(range(T + 1), repeat=3):
        if t1 + t2 + t3 >= 3:
            a2 += (mats[t1] @ mats[t2] @ mats[t3])[0]
    heat = sum(s * ks[s] @ ks[t] for t in range(2, T + 1) for s in range(1, t + 1))
    return a2.max(), heat


def test_assumption_sums_match_path_enumeration():
    spec = GraphSpec.hypercube(6)
    res = assumption_sums(spec, 1 / 6, p_c=0.21)
    T = res["t_mix"]
    a2, heat = _direct_sums(spec, T)
    assert res["a2"] == pytest.approx(a2, rel=1e-12)
    assert res["heat"] == pytest.approx(heat, rel=1e-12)
    assert res["a1"] == pytest.approx(abs((0.21 * 5) ** T - 1))
    assert res["p_c_source"] == "given"
    # the single P^1 P^1 P^1 term is a positive lower bound
    assert res["a2"] > 0


def test_heat_on_complete_graph():
    # on K4 both P^1 and P^2 are (0, 1/3, 1/3, 1/3): from a neighbour the walk
    # may not return to 0, so it moves to one of the two other neighbours
    spec = GraphSpec.complete(4)
    third = np.array([0, 1, 1, 1]) / 3
    assert np.allclose(nb_kernel(spec, 1).distribution, third)
    assert np.allclose(nb_kernel(spec, 2).distribution, third)
    # 1 * <P^1, P^2> + 2 * <P^2, P^2> = 1/3 + 2/3
    _, heat = kernel_sums(spec, 2)
    assert heat == pytest.approx(1.0)


def test_triangle_sum():
    q3 = GraphSpec.hypercube(3)
    z = triangle_sum(q3, 0.0)
    assert (z["diagonal"], z["off_diagonal"]) == (1.0, 0.0)
    ex = triangle_sum(q3, 0.3)
    tau = enumerate_exact(q3, 0.3).two_point
    row = tau[0] @ tau @ tau
    assert ex["diagonal"] == pytest.approx(row[0])
    assert ex["off_diagonal"] == pytest.approx(row[1:].max())
    mc = triangle_sum(q3, 0.3, mode="mc", trials=3000, seed=2)
    assert mc["diagonal"] == pytest.approx(ex["diagonal"], rel=0.05)
    lo = triangle_sum(q3, 0.2, mode="mc", trials=300, seed=5)
    hi = triangle_sum(q3, 0.4, mode="mc", trials=300, seed=5)
    assert lo["diagonal"] <= hi["diagonal"] and lo["off_diagonal"] <= hi["off_diagonal"]
    with pytest.raises(ResourceError):
        triangle_sum(GraphSpec.hypercube(5), 0.3)
    with pytest.raises(ResourceError):
        triangle_sum(GraphSpec.hypercube(13), 0.3, mode="mc")
