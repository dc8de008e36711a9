import math

import numpy as np
import pytest

from quenchlab import mcmc
from quenchlab.errors import ArgumentError
from quenchlab.exact import GibbsSpec, exact_angle, exact_height, two_point
from quenchlab.inequalities import abstract_graph, chain
from quenchlab.potentials import EdgePotential

XY2_EDGE = 0.697774657964007982006790592552
CFG = mcmc.ChainConfig(sweeps=40_000, burn_in=2000, seed=3)


def _z(est, ref):
    return abs(est.mean - ref) / est.stderr


def test_xy_edge_against_oracle():
    spec = GibbsSpec.build(abstract_graph(2, [(0, 1)]), EdgePotential.xy(2.0))
    est = mcmc.run_angle_chain(spec, CFG, [(0, 1)])[0]
    assert _z(est, XY2_EDGE) < 4


def test_villain_triangle_against_exact():
    g = abstract_graph(3, [(0, 1), (1, 2), (0, 2)])
    spec = GibbsSpec.build(g, EdgePotential.villain(1.0))
    ref = exact_angle(spec, two_point(0, 2)).value
    est = mcmc.run_angle_chain(spec, CFG, [(0, 2)])[0]
    assert _z(est, ref) < 4


@pytest.mark.parametrize("pot", [EdgePotential.gaussian(1.0), EdgePotential.bessel(2.0)])
def test_height_chain_against_exact(pot):
    spec = GibbsSpec.build(chain(1), pot, "height")
    ref = exact_height(spec).value
    est = mcmc.run_height_chain(spec, CFG)[0]
    assert _z(est, ref) < 4


def test_determinism():
    spec = GibbsSpec.build(chain(1), EdgePotential.bessel(1.0), "height")
    cfg = mcmc.ChainConfig(sweeps=2000, burn_in=100, seed=11)
    a = mcmc.height_series(spec, cfg, [1])
    b = mcmc.height_series(spec, cfg, [1])
    assert np.array_equal(a, b)
    c = mcmc.height_series(spec, mcmc.ChainConfig(sweeps=2000, burn_in=100, seed=12), [1])
    assert not np.array_equal(a, c)


def test_all_frozen_is_zero():
    g = chain(1)
    spec = GibbsSpec(g, tuple(EdgePotential.frozen() for _ in g.edges), "height")
    est = mcmc.run_height_chain(spec, mcmc.ChainConfig(sweeps=500, burn_in=10))[0]
    assert est.mean == 0.0


def test_batch_means_iid():
    x = mcmc.stream(1).normal(size=64_000)
    est = mcmc.batch_means(x)
    assert abs(est.stderr - 1 / math.sqrt(len(x))) < 0.3 / math.sqrt(len(x))


def test_combine_pools():
    a = mcmc.Estimate(1.0, 0.1, 100.0)
    b = mcmc.Estimate(3.0, 0.1, 100.0)
    c = mcmc.combine([a, b])
    assert abs(c.mean - 2.0) < 1e-12 and c.replicas == 2


def test_weighted_fit_exact_line():
    x = np.log([4, 8, 16, 32])
    f = mcmc.weighted_fit(x, 0.5 * x + 1, np.full(4, 0.1))
    assert abs(f.slope - 0.5) < 1e-12 and abs(f.intercept - 1) < 1e-12


def test_config_validation():
    with pytest.raises(ArgumentError):
        mcmc.ChainConfig(sweeps=0)
    with pytest.raises(ArgumentError):
        mcmc.ChainConfig(sweeps=100, burn_in=200)


def test_box_variance_pinned_origin():
    cfg = mcmc.ChainConfig(sweeps=400, burn_in=40, seed=1)
    e = mcmc.height_box_variance("gff", 1.0, 0.0, 2, cfg, dsamples=2)
    assert e.mean == 0.0
