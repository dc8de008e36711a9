"""Exact engines on tiny graphs.

Run with ``python demos/01_exact_engines.py``. Each cell prints a value
next to a closed form so the engines can be eyeballed.
"""
# %%
import math

from scipy.special import iv

from quenchlab.exact import GibbsSpec, exact_angle, exact_height, two_point
from quenchlab.inequalities import abstract_graph, chain
from quenchlab.potentials import EdgePotential, heat_kernel

# %% one XY edge: the two-point function is a Bessel ratio
edge = abstract_graph(2, [(0, 1)])
for J in (0.5, 1.0, 2.0):
    r = exact_angle(GibbsSpec.build(edge, EdgePotential.xy(J)), two_point(0, 1))
    print(f"XY J={J}: engine {r.value:.12f}  I1/I0 {iv(1, J) / iv(0, J):.12f}  bound {r.err:.1e}")

# %% Villain couplings compose in series along a path
path = abstract_graph(4, [(0, 1), (1, 2), (2, 3)])
r = exact_angle(GibbsSpec.build(path, EdgePotential.villain(3.0)), two_point(0, 3))
print(f"Villain path: {r.value:.12f}  vs exp(-1/2) = {math.exp(-0.5):.12f}")

# %% heat kernel: image sum against Fourier sum
for beta, th in ((0.5, 0.0), (3.0, 3.0), (40.0, 2.5)):
    a = heat_kernel(beta, th, method="gauss")
    b = heat_kernel(beta, th, method="fourier")
    print(f"v_{beta}({th}) = {a:.15e}  rel diff {abs(a - b) / a:.1e}")

# %% integer heights pinned outside a three-site chain
g = chain(1)
for beta in (0.5, 1.0, 3.0):
    gff = exact_height(GibbsSpec.build(g, EdgePotential.gaussian(beta), "height"))
    zxy = exact_height(GibbsSpec.build(g, EdgePotential.bessel(beta), "height"))
    print(f"beta={beta}: Var GFF {gff.value:.10f}  Var Z-XY {zxy.value:.10f}  (M={zxy.M})")
