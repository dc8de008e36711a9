import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quenchlab.errors import ArgumentError, SizeError, StateError, StructureError
from quenchlab.graph import (build_lattice_box, build_shift_invariant, contract_subdivisions,
                             dumps, ghost_augment, identify_vertices, loads, parallelize_edges,
                             spanning_tree, square_cell, subdivide_edges, triangular_cell,
                             with_exterior)
from quenchlab.inequalities import abstract_graph


def _brute_edges(d, L):
    pts = list(itertools.product(range(-L, L + 1), repeat=d))
    return sum(1 for a, b in itertools.combinations(pts, 2)
               if sum(abs(x - y) for x, y in zip(a, b)) == 1)


def test_box_counts():
    g = build_lattice_box(2, 1)
    assert g.num_vertices == 9 and g.num_edges == 12
    g = build_lattice_box(1, 0)
    assert g.num_vertices == 1 and g.num_edges == 0
    g = build_lattice_box(3, 1)
    assert g.num_vertices == 27 and g.num_edges == _brute_edges(3, 1) == 54


def test_box_boundary_is_inner_boundary():
    g = build_lattice_box(2, 2)
    expected = {i for i, c in enumerate(g.coords) if max(abs(t) for t in c) == 2}
    assert set(g.boundary) == expected


def test_box_errors():
    with pytest.raises(ArgumentError):
        build_lattice_box(0, 1)
    with pytest.raises(SizeError):
        build_lattice_box(3, 50, max_vertices=1000)


def test_subdivide():
    g = subdivide_edges(build_lattice_box(2, 1), 4)
    assert g.num_vertices == 9 + 12 * 3
    assert g.num_edges == 48
    g1 = build_lattice_box(2, 1)
    assert subdivide_edges(g1, 1) == g1
    e = abstract_graph(2, [(0, 1)])
    p = subdivide_edges(e, 3)
    assert p.num_vertices == 4 and p.num_edges == 3
    assert sum(r == "subdivision" for r in p.roles) == 2
    with pytest.raises(ArgumentError):
        subdivide_edges(g1, 0)


@given(st.integers(1, 5), st.integers(0, 2))
@settings(max_examples=15, deadline=None)
def test_subdivide_round_trip(n, L):
    g = build_lattice_box(2, L)
    back = contract_subdivisions(subdivide_edges(g, n))
    assert back.num_vertices == g.num_vertices
    assert sorted((e.u, e.v) for e in back.edges) == sorted((e.u, e.v) for e in g.edges)


def test_parallelize():
    g = build_lattice_box(2, 1)
    assert parallelize_edges(g, 3).num_edges == 36
    assert parallelize_edges(g, 1) == g
    p = parallelize_edges(abstract_graph(2, [(0, 1)]), 2)
    assert [(e.u, e.v) for e in p.edges] == [(0, 1), (0, 1)]
    assert len({e.k for e in p.edges}) == 2
    with pytest.raises(ArgumentError):
        parallelize_edges(g, 0)


def test_ghost_degree():
    g = ghost_augment(parallelize_edges(build_lattice_box(2, 1), 2))
    brute = sum(1 for c in itertools.product(range(-1, 2), repeat=2) if max(map(abs, c)) == 1)
    assert brute == 8
    assert g.degree(g.ghost) == brute + 1
    g0 = ghost_augment(build_lattice_box(2, 0))
    assert g0.degree(g0.ghost) == 2
    with pytest.raises(StateError):
        ghost_augment(g0)


def test_identify():
    path = abstract_graph(3, [(0, 1), (1, 2)])
    g = identify_vertices(path, 0, 2)
    assert g.num_vertices == 2 and g.num_edges == 2
    e = identify_vertices(abstract_graph(2, [(0, 1)]), 0, 1)
    assert e.num_vertices == 1 and e.num_edges == 0
    box = build_lattice_box(2, 1)
    c1, c2 = box.index_of((-1, -1)), box.index_of((1, 1))
    g = identify_vertices(box, c1, c2)
    assert g.num_vertices == 8 and g.num_edges == 12
    with pytest.raises(ArgumentError):
        identify_vertices(box, 0, 0)


@given(st.integers(0, 8), st.integers(0, 8))
@settings(max_examples=30, deadline=None)
def test_identify_never_grows(u, v):
    box = build_lattice_box(2, 1)
    if u == v:
        return
    g = identify_vertices(box, u, v)
    assert g.num_vertices == box.num_vertices - 1
    loops = sum({e.u, e.v} == {u, v} for e in box.edges)
    assert g.num_edges == box.num_edges - loops


def test_spanning_tree():
    pair = abstract_graph(2, [(0, 1), (0, 1)])
    assert tuple(spanning_tree(pair)) == (0,)
    box = build_lattice_box(2, 1)
    t = spanning_tree(box)
    assert len(t) == 8
    assert spanning_tree(box) == t
    # acyclic and spanning
    import networkx as nx
    G = nx.MultiGraph()
    G.add_nodes_from(range(box.num_vertices))
    G.add_edges_from((box.edges[i].u, box.edges[i].v) for i in t)
    assert nx.is_tree(G)
    g0 = ghost_augment(build_lattice_box(2, 0))
    assert len(spanning_tree(g0)) == 1
    two = abstract_graph(4, [(0, 1), (2, 3)])
    with pytest.raises(StructureError):
        spanning_tree(two)


def test_shift_invariant_square_matches_box():
    g = build_shift_invariant(square_cell(), 1)
    box = with_exterior(build_lattice_box(2, 1))
    assert g.num_vertices == box.num_vertices
    assert sorted(np.bincount(g.endpoints().ravel())) == sorted(np.bincount(box.endpoints().ravel()))


def test_shift_invariant_triangular_degree():
    g = build_shift_invariant(triangular_cell(), 2)
    deg = np.bincount(g.endpoints().ravel(), minlength=g.num_vertices)
    inner = [i for i, c in enumerate(g.coords)
             if g.roles[i] == "lattice" and max(abs(c[0]), abs(c[1])) < 1]
    assert inner and all(deg[i] == 6 for i in inner)


def test_text_round_trip():
    g = ghost_augment(parallelize_edges(build_lattice_box(2, 1), 2))
    h = loads(dumps(g))
    assert h.num_vertices == g.num_vertices
    assert [(e.u, e.v, e.k, e.slot) for e in h.edges] == [(e.u, e.v, e.k, e.slot) for e in g.edges]
    assert h.roles == g.roles
