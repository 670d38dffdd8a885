"""Exact oracle tests.

``_reference_law`` is a deliberately separate implementation (plain Python
adjacency lists, its own BFS and union-find) used to check both the oracle
and the frozen golden file.
"""

from collections import deque

import numpy as np
import pytest

from perclab.errors import ResourceError
from perclab.graphs import GraphSpec, iter_edges, neighbors
from perclab.oracle import (
    FIXTURE_PS,
    FIXTURE_SPECS,
    edge_bits,
    emit_fixtures,
    enumerate_exact,
    forced_assignment_bfs,
    read_fixtures,
)
from perclab.percolation import PercolationSample, edge_open, explore_cluster


def _reference_bfs(adj_open, root, r_max=None):
    dist = {root: 0}
    q = deque([root])
    while q:
        u = q.popleft()
        if r_max is not None and dist[u] == r_max:
            continue
        for w in adj_open[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                q.append(w)
    layers = [0] * (max(dist.values()) + 1)
    for d in dist.values():
        layers[d] += 1
    return layers, set(dist)


def _open_adj(V, edges, mask):
    adj = [[] for _ in range(V)]
    for i, (u, v) in enumerate(edges):
        if mask >> i & 1:
            adj[u].append(v)
            adj[v].append(u)
    return adj


def _reference_law(spec, p, r_max=3):
    edges = [(u, v) for u, v, _ in iter_edges(spec)]
    E = len(edges)
    out = {"chi": 0.0, "largest": 0.0}
    for k in (2, 4, 6):
        out[f"tail/{k}"] = 0.0
    for r in range(1, r_max + 1):
        out[f"onearm/{r}"] = 0.0
        out[f"boundary/{r}"] = 0.0
    for mask in range(2**E):
        k = bin(mask).count("1")
        w = p**k * (1 - p) ** (E - k)
        adj = _open_adj(spec.V, edges, mask)
        layers, comp = _reference_bfs(adj, 0)
        size = len(comp)
        out["chi"] += w * size
        for t in (2, 4, 6):
            out[f"tail/{t}"] += w * (size >= t)
        for r in range(1, r_max + 1):
            out[f"onearm/{r}"] += w * (len(layers) > r)
            out[f"boundary/{r}"] += w * (layers[r] if len(layers) > r else 0)
        parent = list(range(spec.V))

        def find(x):
            while parent[x] != x:
                x = parent[x]
            return x

        for u, v in edges:
            if mask >> edges.index((u, v)) & 1:
                parent[find(u)] = find(v)
        roots = [find(x) for x in range(spec.V)]
        out["largest"] += w * max(roots.count(r) for r in set(roots))
    return out


def test_q2_closed_form():
    p = 0.5
    closed = 1 + 2 * (p + (1 - p) * p**3) + (1 - (1 - p**2) ** 2)
    assert enumerate_exact(GraphSpec.hypercube(2), p).chi == pytest.approx(2.5625)
    assert closed == pytest.approx(2.5625)


def test_q3_chi_frozen():
    # frozen from two independent enumerations (see module docstring)
    assert enumerate_exact(GraphSpec.hypercube(3), 0.5).chi == pytest.approx(5.216552734375,
                                                                             abs=1e-15)


def test_degenerate_p():
    for spec in (GraphSpec.hypercube(3), GraphSpec.complete(4)):
        z = enumerate_exact(spec, 0.0)
        assert z.chi == 1.0 and z.onearm[1] == 0.0
        o = enumerate_exact(spec, 1.0)
        assert o.chi == spec.V and o.largest == spec.V


@pytest.mark.parametrize("name", ["Q2", "Q3", "K4"])
@pytest.mark.parametrize("p", [0.1, 0.5])
def test_against_reference(name, p):
    spec = GraphSpec.parse(name)
    ref = _reference_law(spec, p)
    got = enumerate_exact(spec, p, r_max=3).observables()
    for key, value in ref.items():
        assert got[key] == pytest.approx(value, rel=1e-12, abs=1e-15), key


def test_golden_file_matches_reference(golden):
    # T3^2 has 2**18 configurations; check one p there, all p elsewhere
    for name in FIXTURE_SPECS:
        spec = GraphSpec.parse(name)
        for p in FIXTURE_PS if name != "T3^2" else (0.3,):
            ref = _reference_law(spec, p)
            for key, value in ref.items():
                assert golden[(name, p, key)] == pytest.approx(value, rel=1e-10, abs=1e-15)


def test_golden_file_is_current(tmp_path, golden):
    path = tmp_path / "g.txt"
    emit_fixtures(path)
    assert read_fixtures(path) == golden


def test_law_identities():
    for name in FIXTURE_SPECS:
        spec = GraphSpec.parse(name)
        law = enumerate_exact(spec, 0.3)
        assert law.size_dist.sum() == pytest.approx(1.0, abs=1e-15)
        assert law.size_dist @ np.arange(len(law.size_dist)) == pytest.approx(law.chi)
        assert law.two_point[law.root].sum() == pytest.approx(law.chi)
        assert law.boundary.sum() == pytest.approx(law.chi)
        assert np.all((law.onearm >= 0) & (law.onearm <= 1 + 1e-15))
        assert np.all(np.diff(law.onearm) <= 1e-15)


def test_root_symmetry_q3():
    spec = GraphSpec.hypercube(3)
    chis = [enumerate_exact(spec, 0.3, root=v).chi for v in range(8)]
    assert np.ptp(chis) < 1e-14


def test_edge_budget():
    with pytest.raises(ResourceError):
        enumerate_exact(GraphSpec.hypercube(4), 0.5)


def test_forced_assignment_examples(backend):
    q3 = GraphSpec.hypercube(3)
    assert forced_assignment_bfs(q3, 0).size == 1
    full = forced_assignment_bfs(q3, [1] * 12)
    assert full.size == 8 and full.layers == (1, 3, 3, 1)


@pytest.mark.parametrize("name", ["Q3", "T3^2", "K4", "K3^2"])
def test_forced_assignment_matches_sampling(name, backend):
    spec = GraphSpec.parse(name)
    edges = [(u, v) for u, v, _ in iter_edges(spec)]
    for seed in range(40):
        sample = PercolationSample(spec, 0.45, seed)
        bits = [edge_open(sample, u, v) for u, v in edges]
        root = seed % spec.V
        forced = forced_assignment_bfs(spec, bits, root=root)
        direct = explore_cluster(sample, root)
        assert forced == direct
        mask = sum(1 << i for i, b in enumerate(bits) if b)
        layers, comp = _reference_bfs(_open_adj(spec.V, edges, mask), root)
        assert list(forced.layers) == layers and set(forced.vertices.tolist()) == comp


def test_edge_bits_layout():
    spec = GraphSpec.torus(3, 2)
    ebit = edge_bits(spec)
    assert sorted(ebit[ebit >= 0].tolist()) == list(range(spec.n_edges))
    for u in range(spec.V):
        for i, v in enumerate(neighbors(spec, u)):
            if u < v:
                assert ebit[u * spec.degree + i] >= 0


def test_fixture_format(tmp_path):
    path = tmp_path / "x.txt"
    text = emit_fixtures(path, specs=["Q2"], ps=[0.5])
    assert "Q2/0.5/chi = 2.5625" in text.splitlines()
    bad = tmp_path / "bad.txt"
    bad.write_text("not a fixture line\n")
    with pytest.raises(ValueError):
        read_fixtures(bad)
