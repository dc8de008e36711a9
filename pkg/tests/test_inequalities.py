import math

import pytest

from quenchlab.errors import ArgumentError
from quenchlab.graph import build_lattice_box, with_exterior
from quenchlab.inequalities import (abstract_graph, add_vertices, annealed_villain, chain,
                                    discrete_wells, domain_growth, ginibre_scan,
                                    height_conductance_scan, identification, metric_limit,
                                    percolation_scan, small_graphs, split_villain, square2,
                                    strip, villain_z_scan, wells_xy, wells_zxy)
from quenchlab.potentials import EdgePotential, MixingMeasure

ZXY_WELLS_AVG_3 = 2.844950906853726173788286  # mpmath, chain(1) at beta = 3
ZXY_CLEAN_075 = 0.6074889704673783952983779


def test_small_graph_census():
    # connected graphs on 2, 3, 4 vertices up to isomorphism: 1 + 2 + 6
    assert len(small_graphs(4)) == 9


def test_discrete_wells_nonnegative():
    c = discrete_wells(12)
    assert c.margin >= 0


def test_wells_xy_edge():
    c = wells_xy(abstract_graph(2, [(0, 1)]), 1.0, 1)
    assert c.passed(1e-10)
    assert abs(c.extra["table"].probs.sum() - 1) < 1e-12


def test_wells_zxy_chain_oracle():
    c = wells_zxy(chain(1), 3.0)
    assert abs(c.rhs - ZXY_WELLS_AVG_3) <= 1e-8
    assert abs(c.lhs - ZXY_CLEAN_075) <= 1e-8
    assert c.passed(1e-8)


def test_wells_domination():
    c = wells_zxy(square2(), 1.0)
    assert c.extra["cond_max"] <= c.extra["p0"] + 1e-12


def test_ginibre_triangle():
    c = ginibre_scan(3, [(0, 1), (1, 2), (0, 2)], ["xy", "villain", "xy"])
    assert c.passed(1e-10) and c.rhs > -1e-10


def test_monotone_heights():
    g = with_exterior(strip(1, 2))
    assert height_conductance_scan(g, "gaussian").passed(1e-10)
    assert height_conductance_scan(g, "bessel").passed(1e-10)
    assert percolation_scan(g, 1.0).passed(1e-10)
    assert domain_growth(0.5).passed(1e-10)
    with pytest.raises(ArgumentError):
        percolation_scan(with_exterior(build_lattice_box(2, 2)), 1.0)


def test_surgeries():
    tri = abstract_graph(3, [(0, 1), (1, 2), (0, 2)])
    assert split_villain(tri, 1.0, 0, 2, 0, 1).passed(1e-10)
    g = chain(1)
    pots = [EdgePotential.bessel(1.0)] * g.num_edges
    assert identification(g, pots, 0, 2, vertex=1).passed(1e-10)
    assert add_vertices(g, 1.0, 0, 2).passed(1e-10)


def test_split_single_edge_exact():
    # before the split the edge gives exp(-1/(2J))
    e = abstract_graph(2, [(0, 1)])
    c = split_villain(e, 2.0, 0, 2, 0, 1)
    assert abs(c.rhs - math.exp(-0.25)) < 1e-12
    assert c.lhs < c.rhs


def test_metric_limit_trend():
    c = metric_limit(2.0, abstract_graph(2, [(0, 1)]), 0, 1, ns=range(1, 6))
    errs = c.extra["errors"]
    assert errs[-1] < errs[0]


def test_annealed_pair():
    kappa = MixingMeasure.points([(0.5, 0.3), (2.0, 0.7)])
    c = annealed_villain(abstract_graph(2, [(0, 1), (0, 1)]), 1.0, kappa, 0, 1)
    assert c.extra["identity_err"] < 1e-10
    assert c.margin > 0


def test_villain_z_monotone():
    assert villain_z_scan(abstract_graph(3, [(0, 1), (1, 2), (0, 2)]), 1.0).passed()
