"""Wells disorder and the height/spin duality, checked exactly.

Run with ``python demos/02_wells_and_duality.py``.
"""
# %%
from quenchlab.duality import duality_check, wells_generalized
from quenchlab.inequalities import chain, square2, wells_xy, wells_zxy
from quenchlab.graph import build_lattice_box

# %% XY: clean two-point at beta/4 sits below the disorder average at beta
box = build_lattice_box(2, 1)
x = box.index_of((1, 1))
for beta in (0.5, 1.0, 2.0):
    c = wells_xy(box, beta, x)
    print(f"XY beta={beta}: clean {c.lhs:.6f} <= average {c.rhs:.6f}  "
          f"cond max {c.extra['cond_max']:.4f} <= p0 {c.extra['p0']:.4f}")

# %% heights: the same comparison for Var[phi(0)]
for name, g in (("chain", chain(1)), ("2x2", square2())):
    for beta in (1.0, 3.0):
        c = wells_zxy(g, beta)
        print(f"Z-XY {name} beta={beta}: clean {c.lhs:.6f} <= average {c.rhs:.6f}")

# %% the generalised XY model with a ghost
clean, avg, _ = wells_generalized(0, 2, 1.0, 1.0, 2.0)
print(f"generalised: <cos> clean {clean:.6f} <= average {avg:.6f}")

# %% duality: height variance against the spin expression
for L, n, lam in ((0, 1, 2.0), (0, 2, 4.0), (1, 1, 2.0)):
    rep = duality_check(L, n, 1.0, 1.0, lam)
    print(f"L={L} n={n} lambda={lam}: height {rep.height:.10f} spin {rep.spin:.10f} "
          f"|diff| {rep.diff:.1e}  Z rel err {rep.z_rel_err:.1e}")
