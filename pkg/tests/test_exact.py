import math

import numpy as np
import pytest

from quenchlab.errors import ArgumentError
from quenchlab.exact import (GibbsSpec, MeasureTable, angle_quadrature, exact_angle, exact_height,
                             two_point, wells_disorder)
from quenchlab.graph import build_lattice_box, with_exterior
from quenchlab.inequalities import abstract_graph, chain, strip
from quenchlab.potentials import EdgePotential

# mpmath reference values (30 digits, rounded)
XY2_EDGE = 0.697774657964007982006790592552  # I1(2)/I0(2)
GFF_VAR_15 = 1.49999999997541738607009972818  # discrete Gaussian, parameter 1.5
ZXY_CHAIN_3 = 2.872144216185726713971034
ZXY_CHAIN_075 = 0.6074889704673783952983779

EDGE = abstract_graph(2, [(0, 1)])


def test_xy_edge():
    r = exact_angle(GibbsSpec.build(EDGE, EdgePotential.xy(2.0)), two_point(0, 1))
    assert abs(r.value - XY2_EDGE) <= 1e-10
    assert r.err <= 1e-10


def test_villain_edge():
    r = exact_angle(GibbsSpec.build(EDGE, EdgePotential.villain(1.0)), two_point(0, 1))
    assert abs(r.value - math.exp(-0.5)) <= 1e-12


def test_villain_series_path():
    g = abstract_graph(3, [(0, 1), (1, 2)])
    r = exact_angle(GibbsSpec.build(g, EdgePotential.villain(2.0)), two_point(0, 2))
    assert abs(r.value - math.exp(-0.5)) <= 1e-12


def test_angle_against_quadrature():
    g = strip(2, 2)
    spec = GibbsSpec.build(g, EdgePotential.xy(1.0))
    a = exact_angle(spec, two_point(0, 3))
    q = angle_quadrature(spec, two_point(0, 3))
    assert abs(a.value - q.value) <= 1e-8


def test_free_edges_decouple():
    spec = GibbsSpec.build(EDGE, EdgePotential.xy(0.0))
    assert abs(exact_angle(spec, two_point(0, 1)).value) <= 1e-14


def test_gff_height_oracle():
    r = exact_height(GibbsSpec.build(chain(0), EdgePotential.gaussian(3.0), "height"))
    assert abs(r.value - GFF_VAR_15) <= 1e-9


def test_zxy_chain_oracle():
    g = chain(1)
    for beta, ref in ((3.0, ZXY_CHAIN_3), (0.75, ZXY_CHAIN_075)):
        r = exact_height(GibbsSpec.build(g, EdgePotential.bessel(beta), "height"))
        assert abs(r.value - ref) <= 1e-9
        assert r.within_tol


def test_gff_matches_brute_force():
    # three sites on a path pinned at both ends, brute-force sum over heights
    g = chain(1)
    beta = 0.8
    M = 12
    tot, sq = 0.0, 0.0
    rng = range(-M, M + 1)
    for a in rng:
        for b in rng:
            for c in rng:
                w = math.exp(-(a * a + (a - b) ** 2 + (b - c) ** 2 + c * c) / (2 * beta))
                tot += w
                sq += w * b * b
    r = exact_height(GibbsSpec.build(g, EdgePotential.gaussian(beta), "height"))
    assert abs(r.value - sq / tot) <= 1e-9


def test_frozen_edges_pin():
    g = chain(1)
    pots = tuple(EdgePotential.frozen() for _ in g.edges)
    r = exact_height(GibbsSpec(g, pots, "height"))
    assert r.value == 0.0


def test_log_z_consistency():
    # log Z of one XY edge: (2 pi)^2 I_0(J)
    J = 1.3
    z = exact_angle(GibbsSpec.build(EDGE, EdgePotential.xy(J)), None).value
    from scipy.special import iv
    assert abs(z - math.log((2 * math.pi) ** 2 * iv(0, J))) <= 1e-10


def test_wells_disorder_table():
    g = EDGE
    t = wells_disorder(lambda r: GibbsSpec.build(g, EdgePotential.xy(1.0), "angle", r=r), [0, 1])
    assert abs(t.probs.sum() - 1) <= 1e-12 and np.all(t.probs > 0)
    p = MeasureTable.product([0, 1], 0.25)
    assert np.allclose(sorted(p.probs), sorted([0.0625, 0.1875, 0.1875, 0.5625]))


def test_validation():
    with pytest.raises(ArgumentError):
        GibbsSpec(EDGE, (), "angle")
    with pytest.raises(ArgumentError):
        GibbsSpec.build(EDGE, EdgePotential.xy(1.0), "spin")
