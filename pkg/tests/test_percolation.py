import numpy as np
import pytest

from quenchlab.errors import ArgumentError, GeometryError
from quenchlab.exact import MeasureTable
from quenchlab.graph import build_lattice_box, with_exterior
from quenchlab.percolation import (check_conditional_domination, crossed, dual_config, dumps,
                                   good_box, loads, rectangle_sizes,
                                   renormalized_sites, sample_bernoulli, sample_box_edges)


def test_sampling_deterministic_and_frequency():
    a = sample_box_edges(20, 0.3, seed=5)
    b = sample_box_edges(20, 0.3, seed=5)
    assert np.array_equal(a.bits, b.bits)
    n = len(a.bits)
    assert abs(a.bits.mean() - 0.3) < 4 * np.sqrt(0.21 / n)
    with pytest.raises(ArgumentError):
        sample_box_edges(3, 1.5)


def test_site_sampling_keeps_non_lattice_open():
    g = with_exterior(build_lattice_box(2, 2))
    r = sample_bernoulli(g, "site", 0.0, seed=1)
    assert all(b == (role != "lattice") for b, role in zip(r.bits, g.roles))


def test_dual_is_involution():
    w = sample_box_edges(6, 0.5, seed=3)
    ds = dual_config(w)
    back = dual_config(ds)
    assert np.array_equal(back.bits, w.bits)
    assert ds.bits.sum() == len(w.bits) - w.bits.sum()


def test_rectangle_sizes_round_up():
    assert rectangle_sizes(10) == (1, 22, 11)
    assert rectangle_sizes(101) == (2, 223, 112)
    assert rectangle_sizes(3, micro=True) == (1, 8, 4)


def test_crossing_by_hand():
    R = 4
    # closed dual edges sit across open primal edges
    ds = dual_config(sample_box_edges(R, 0.0, seed=0))
    rect = (-2, -1, 2, 0)
    assert not crossed(ds, rect, True)
    ds1 = dual_config(sample_box_edges(R, 1.0, seed=0))
    assert crossed(ds1, rect, True) and crossed(ds1, rect, False)
    with pytest.raises(GeometryError):
        crossed(ds1, (-10, 0, 0, 1), True)


def test_good_box_extremes():
    L = 10
    R = 2 * L
    assert good_box(dual_config(sample_box_edges(R, 1.0)), (0, 0), L).verdict
    rep = good_box(dual_config(sample_box_edges(R, 0.0)), (0, 0), L)
    assert not rep.verdict and rep.failures and rep.checked == 1
    with pytest.raises(ArgumentError):
        good_box(dual_config(sample_box_edges(R, 0.0)), (0, 0), 5)


def test_renormalized_sites_micro():
    w = sample_box_edges(12, 1.0)
    r = renormalized_sites(w, 1, 1, micro=True)
    assert r.kind == "site" and r.bits.all()
    w = sample_box_edges(12, 0.0)
    assert not renormalized_sites(w, 1, 1, micro=True).bits.any()


def test_domination_product_measure():
    t = MeasureTable.product([0, 1, 2], 0.3)
    assert abs(t.probs.sum() - 1) < 1e-12
    rep = check_conditional_domination(t, 0.3, slack=1e-12)
    assert rep.passed and abs(rep.max_conditional - 0.3) < 1e-12
    assert not check_conditional_domination(t, 0.29).passed


def test_text_round_trip():
    w = sample_box_edges(5, 0.4, seed=9)
    back = loads(dumps(w), w.graph)
    assert np.array_equal(back.bits, w.bits) and back.seed == 9 and back.p == 0.4
    with pytest.raises(ArgumentError):
        loads("edge 3 - -\n1:2\n", w.graph)
