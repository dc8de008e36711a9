"""Coarse-graining a diluted lattice into a height model on good cells.

Run with ``python demos/04_renormalization.py``.
"""
# %%
from quenchlab.percolation import dual_config, good_box, required_radius, sample_box_edges
from quenchlab.renorm import bound_chain, coarse_grain

# %% one configuration at the micro scale
L0, beta = 1, 0.4
R = required_radius(L0, 1, micro=True)
w = sample_box_edges(R, 0.95, seed=4)
cs = coarse_grain(w, L0, beta, 1, micro=True)
print("good cells:", cs.r1.bits.reshape(3, 3))
print("C-edge counts:", dict(sorted(cs.counts.items())))

# %% the variance can only go down along fine -> thinned -> coarse
# at p = 0.85 the thinned field usually pins the origin, so both later values are 0
for p in (0.85, 0.95):
    for seed in range(4):
        ch = bound_chain(sample_box_edges(R, p, seed), L0, beta)
        print(p, seed, "  ".join(f"{lab} {res.value:.3e}" for lab, res in ch))

# %% good boxes at the literal scale need long crossings
w = sample_box_edges(30, 0.95, seed=3)
rep = good_box(dual_config(w), (0, 0), 10, full=False)
print(f"L=10 at p=0.95: good={rep.verdict} after {rep.checked} rectangles")
