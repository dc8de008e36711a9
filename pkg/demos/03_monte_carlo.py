"""Monte Carlo on small boxes and a short variance scan.

Run with ``python demos/03_monte_carlo.py`` (about a minute on one core).
The full scans live behind ``quenchlab scan`` and ``quenchlab accept 10``.
"""
# %%
from quenchlab import mcmc
from quenchlab.exact import GibbsSpec, exact_height
from quenchlab.graph import build_lattice_box, with_exterior
from quenchlab.potentials import EdgePotential

# %% chain against the exact engine on a 3x3 box
g = with_exterior(build_lattice_box(2, 1))
spec = GibbsSpec.build(g, EdgePotential.bessel(2.0), "height")
ref = exact_height(spec).value
est = mcmc.run_height_chain(spec, mcmc.ChainConfig(sweeps=50_000, burn_in=2000, seed=1))[0]
print(f"Z-XY 3x3: chain {est.mean:.4f} +- {est.stderr:.4f}  exact {ref:.4f}  "
      f"z {(est.mean - ref) / est.stderr:+.2f}")

# %% Var[phi(0)] grows like ln L at large beta, also with diluted edges
cfg = mcmc.ChainConfig(sweeps=4000, burn_in=400, seed=2)
rows, fits = mcmc.variance_scan("gff", [10.0], [1.0, 0.9], [4, 8, 16], cfg, dsamples=4)
for key, f in fits.items():
    print(f"beta, p = {key}: slope in ln L {f.slope:.3f} +- {f.stderr:.3f}  t = {f.t:.1f}")
