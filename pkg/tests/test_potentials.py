import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quenchlab.errors import ArgumentError, UnsupportedMeasureError
from quenchlab.potentials import (EdgePotential, MixingMeasure, annealed_villain_eval,
                                  bessel_I, bessel_power, fourier_coeffs, heat_kernel,
                                  mixture_identity_check)

# mpmath reference values (30 digits, rounded)
THETA3_E1 = 1.77263720482665215303125055116  # sum_k exp(-k^2)
I1_2 = 1.590636854637329063382254425
I0_2 = 2.27958530233606726743720444081
I2_2 = 0.688948447698738204054950015812


def test_heat_kernel_values():
    assert heat_kernel(0.0, 1.3) == 1.0
    assert abs(heat_kernel(0.5, 0.0) - THETA3_E1) < 1e-12
    a = heat_kernel(0.5, 0.0, method="gauss")
    b = heat_kernel(0.5, 0.0, method="fourier")
    assert abs(a - b) <= 1e-12 * abs(a)


@given(st.floats(1e-3, 1e3), st.floats(0, 2 * math.pi))
@settings(max_examples=200, deadline=None)
def test_heat_kernel_two_representations(beta, theta):
    a = heat_kernel(beta, theta, method="gauss")
    b = heat_kernel(beta, theta, method="fourier")
    assert abs(a - b) <= 1e-12 * max(abs(a), 1e-300) + 1e-300
    assert abs(heat_kernel(beta, 2 * math.pi - theta) - heat_kernel(beta, theta)) <= 1e-12 * a


def test_bessel_values():
    assert bessel_I(0, 0.0) == 1.0 and bessel_I(3, 0.0) == 0.0
    assert abs(bessel_I(1, 2.0) - I1_2) < 1e-12
    assert bessel_I(-2, 2.0) == bessel_I(2, 2.0)


def test_bessel_large_x():
    for k in (0, 1, 2):
        for J in (50.0, 100.0, 200.0):
            scaled = bessel_I(k, J) * math.sqrt(2 * math.pi * J) * math.exp(-J)
            first = 1 - (4 * k * k - 1) / (8 * J)
            assert abs(scaled - first) < 5 / J ** 2


def test_fourier_coeffs():
    fs = fourier_coeffs(EdgePotential.villain(1.0), 4)
    assert abs(fs.symmetric()[5] - math.exp(-0.5)) < 1e-15
    fs = fourier_coeffs(EdgePotential.xy(2.0), 2)
    expect = np.array([I0_2, I1_2, I2_2]) / I0_2
    assert np.allclose(fs.coeffs, expect, rtol=1e-12, atol=0)
    single = EdgePotential.mixture(MixingMeasure.points([(1.0, 1.0)]), 1.0)
    ks = np.arange(6)
    assert np.allclose(single.coefficient(ks), EdgePotential.villain(1.0).coefficient(ks))


@pytest.mark.parametrize("p", [EdgePotential.xy(0.7), EdgePotential.villain(2.0),
                               EdgePotential.bessel(5.0), EdgePotential.gaussian(0.3),
                               EdgePotential.mixture(MixingMeasure.points([(0.5, 0.5), (3, 0.5)]), 1.0),
                               EdgePotential.mixture(MixingMeasure.registered("abs"), 2.0)])
def test_coefficients_nonnegative_even(p):
    ks = np.arange(-30, 31)
    c = p.coefficient(ks)
    assert np.all(c >= 0)
    assert np.allclose(c, c[::-1])


def test_fourier_tail_is_an_upper_bound():
    for p in (EdgePotential.xy(3.0), EdgePotential.villain(2.0)):
        K = 6
        fs = fourier_coeffs(p, K)
        rest = 2 * sum(float(p.relative_coefficient(k)) for k in range(K + 1, 200))
        assert rest <= fs.tail


def test_mixture_identity():
    grid = [0.0, 0.5, 1.0, 2.0, 4.0]
    assert mixture_identity_check("quadratic", grid) == 0.0
    assert mixture_identity_check("abs", [0.0]) <= 1e-12
    assert mixture_identity_check("abs", grid) <= 1e-10
    with pytest.raises(ArgumentError):
        mixture_identity_check("cosh", grid)


def test_annealed_villain():
    k1 = MixingMeasure.points([(1.0, 1.0)])
    th = np.linspace(0, 6, 7)
    assert np.allclose(annealed_villain_eval(k1, 1.0, th), heat_kernel(1.0, th))
    assert np.all(annealed_villain_eval(k1, 0.0, th) == 1.0)
    k2 = MixingMeasure.points([(1.0, 0.5), (2.0, 0.5)])
    expect = 0.5 * heat_kernel(1.0, 0.0) + 0.5 * heat_kernel(2.0, 0.0)
    assert abs(annealed_villain_eval(k2, 1.0, 0.0) - expect) < 1e-12


def test_measure_validation():
    with pytest.raises(ArgumentError):
        MixingMeasure.points([(1.0, 0.4)])
    with pytest.raises(ArgumentError):
        MixingMeasure.points([(-1.0, 1.0)])
    with pytest.raises(UnsupportedMeasureError):
        MixingMeasure("lognormal")
    m = MixingMeasure.from_table("0.5 0.25\n2.0 0.75  # tail\n")
    assert m.atoms == ((0.5, 0.25), (2.0, 0.75))


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_bessel_power_converges(beta):
    for k in (0, 1, 2):
        target = math.exp(-k * k / (2 * beta))
        errs = [abs(bessel_power(k, n, beta) - target) for n in range(1, 65)]
        assert all(n * e <= 3 for n, e in enumerate(errs, 1))
        assert errs[-1] <= errs[0] + 1e-15


def test_villain_series_composition():
    # convolution multiplies coefficients: conductances add in series
    b1, b2 = 0.7, 1.9
    ks = np.arange(8)
    prod = EdgePotential.villain(b1).coefficient(ks) * EdgePotential.villain(b2).coefficient(ks)
    assert np.allclose(prod, EdgePotential.villain(b1 * b2 / (b1 + b2)).coefficient(ks),
                       rtol=1e-14, atol=0)


def test_potential_validation():
    with pytest.raises(ArgumentError):
        EdgePotential("xy", -1.0)
    with pytest.raises(ArgumentError):
        EdgePotential("lattice", 1.0)
