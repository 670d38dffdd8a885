import numpy as np
import pytest

from perclab.errors import DomainError
from perclab.graphs import (
    EdgeId,
    GraphSpec,
    canonical_edge,
    decode_edge,
    edge_arrays,
    edges_touching,
    iter_edges,
    neighbor_array,
    neighbors,
)

SPECS = [GraphSpec.hypercube(3), GraphSpec.hypercube(6), GraphSpec.torus(3, 2),
         GraphSpec.torus(4, 3), GraphSpec.complete(4), GraphSpec.complete(7),
         GraphSpec.product(3, 3), GraphSpec.product(4, 2)]


def test_examples():
    assert neighbors(GraphSpec.hypercube(3), 0b000) == [0b001, 0b010, 0b100]
    t = GraphSpec.torus(4, 2)
    # vertex (x0, x1) has id x0 + 4 x1
    assert neighbors(t, 0) == [1, 3, 4, 12]
    assert neighbors(GraphSpec.complete(4), 2) == [0, 1, 3]


@pytest.mark.parametrize("text,V,deg", [("Q3", 8, 3), ("T3^2", 9, 4), ("K4", 4, 3),
                                        ("K3^2", 9, 4), ("Q20", 2**20, 20), ("T5^3", 125, 6)])
def test_parse_sizes(text, V, deg):
    spec = GraphSpec.parse(text)
    assert (spec.V, spec.degree, str(spec)) == (V, deg, text)
    assert spec.n_edges == V * deg // 2


@pytest.mark.parametrize("bad", ["Q", "Q3^2", "T3", "T2^2", "T1^5", "X4", "K1", "Q0", "Q3x"])
def test_parse_rejects(bad):
    with pytest.raises(DomainError):
        GraphSpec.parse(bad)


def test_edge_counts():
    assert len({canonical_edge(GraphSpec.hypercube(3), u, v)
                for u in range(8) for v in neighbors(GraphSpec.hypercube(3), u)}) == 12
    t = GraphSpec.torus(3, 2)
    assert len({canonical_edge(t, u, v) for u in range(9) for v in neighbors(t, u)}) == 18


@pytest.mark.parametrize("spec", SPECS, ids=str)
def test_symmetry_and_bijectivity(spec):
    codes = set()
    for u in range(spec.V):
        nb = neighbors(spec, u)
        assert len(set(nb)) == spec.degree and u not in nb
        for v in nb:
            assert u in neighbors(spec, v)
            e = canonical_edge(spec, u, v)
            assert e == canonical_edge(spec, v, u)
            codes.add(e.code(spec))
            assert sorted(decode_edge(spec, e.code(spec))) == sorted((u, v))
    assert len(codes) == spec.n_edges
    u, v, c = edge_arrays(spec)
    assert sorted(codes) == c.tolist()
    assert [x[2] for x in iter_edges(spec)] == c.tolist()


@pytest.mark.parametrize("spec", [GraphSpec.hypercube(20), GraphSpec.torus(50, 4),
                                  GraphSpec.product(5, 6)], ids=str)
def test_degree_regularity_random(spec):
    rs = np.random.default_rng(0)
    for v in rs.integers(0, spec.V, 1000).tolist():
        nb = neighbors(spec, v)
        assert len(set(nb)) == spec.degree


@pytest.mark.parametrize("spec", SPECS, ids=str)
def test_neighbor_array_matches_scalar(spec):
    base = np.arange(spec.V)
    for i in range(spec.degree):
        assert neighbor_array(spec, base, i).tolist() == [neighbors(spec, v)[i] for v in base]


def test_domain_errors():
    q = GraphSpec.hypercube(3)
    with pytest.raises(DomainError):
        neighbors(q, 8)
    with pytest.raises(DomainError):
        canonical_edge(q, 0, 3)
    with pytest.raises(DomainError):
        GraphSpec.torus(2, 3)


def test_edges_touching_and_edgeid():
    q = GraphSpec.hypercube(3)
    assert len(edges_touching(q, [0])) == 3
    assert len(edges_touching(q, [0, 1])) == 5
    assert EdgeId(0, 2).code(q) == 2


def test_group_shape_and_diameter():
    assert GraphSpec.hypercube(5).group_shape == (2,) * 5
    assert GraphSpec.torus(5, 2).diameter == 4
    assert GraphSpec.product(4, 3).diameter == 3
