"""Acceptance suite: every inequality and trend test as report rows.

Each criterion function returns a list of :class:`ReportRow`. A row
passes iff ``margin >= -tol``; rows flagged ``strict`` need
``margin > tol`` instead. Runtimes are checked against per-criterion
budgets in seconds.
"""
from __future__ import annotations

import functools
import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from . import inequalities as iq
from . import mcmc
from .duality import domination, duality_check, ghost_graph, wells_generalized
from .exact import GibbsSpec, exact_angle, exact_height, height_marginals, two_point
from .graph import build_lattice_box, with_exterior
from .percolation import dual_config, good_box, rectangle_sizes, required_radius, sample_box_edges
from .potentials import EdgePotential, MixingMeasure, mixture_identity_check
from .renorm import bound_chain, chain_margins


@dataclass
class ReportRow:
    test_id: str
    anchor: str
    lhs: float
    rhs: float
    margin: float
    tol: float
    verdict: bool
    runtime: float = 0.0
    strict: bool = False

    @classmethod
    def make(cls, test_id, anchor, lhs, rhs, tol=0.0, strict=False, runtime=0.0):
        lhs, rhs = float(lhs), float(rhs)
        margin = rhs - lhs
        ok = margin > tol if strict else margin >= -tol
        return cls(test_id, anchor, lhs, rhs, margin, tol, bool(ok), runtime, strict)

    def as_dict(self) -> dict:
        return {"test_id": self.test_id, "anchor": self.anchor, "lhs": self.lhs,
                "rhs": self.rhs, "margin": self.margin, "tol": self.tol,
                "verdict": "pass" if self.verdict else "FAIL",
                "runtime": round(self.runtime, 3)}


def _row(tid, anchor, check: iq.Check, tol):
    return ReportRow.make(tid, anchor, check.lhs, check.rhs, tol + check.err)


# ---------------------------------------------------------------------------
# 1-3: Wells inequalities and domination

A_WELLS_XY = "wells/xy-two-point"
A_WELLS_H = "wells/height-variance"
A_P0 = "domination/p0-bound"
A_DOM = "domination/uniform-in-n-beta2"


@functools.lru_cache(maxsize=None)
def _wells_xy_checks():
    out = []
    box = build_lattice_box(2, 1)
    s23 = iq.strip(2, 3)
    for beta in (0.5, 1.0, 2.0):
        out.append(("box", beta, iq.wells_xy(box, beta, box.index_of((1, 1)))))
        out.append(("strip2x3", beta, iq.wells_xy(s23, beta, s23.num_vertices - 1, 0)))
    return tuple(out)


@functools.lru_cache(maxsize=None)
def _wells_height_checks():
    out = []
    for name, g, v in (("chain3", iq.chain(1), iq.chain(1).index_of((0,))),
                       ("square2", iq.square2(), 0)):
        for beta in (1.0, 3.0):
            out.append((name, f"zxy beta={beta}", iq.wells_zxy(g, beta, v)))
        for n in (2, 3):
            for b2 in (0.5, 2.0, 8.0):
                out.append((name, f"mult n={n} b1=1 b2={b2}",
                            iq.wells_multigraph(g, n, 1.0, b2, v)))
    return tuple(out)


def criterion_1():
    return [_row(f"c1 wells-xy {name} beta={b}", A_WELLS_XY, c, 1e-8)
            for name, b, c in _wells_xy_checks()]


def criterion_2():
    return [_row(f"c2 wells-height {name} {lab}", A_WELLS_H, c, 1e-7)
            for name, lab, c in _wells_height_checks()]


def criterion_3():
    rows = []
    for name, b, c in _wells_xy_checks():
        rows.append(ReportRow.make(f"c3 domination xy {name} beta={b}", A_P0,
                                   c.extra["cond_max"], c.extra["p0"], 1e-10))
    for name, lab, c in _wells_height_checks():
        rows.append(ReportRow.make(f"c3 domination {name} {lab}", A_DOM,
                                   c.extra["cond_max"], c.extra["p0"], 1e-10))
    # generalised model on the ghost multigraph, uniform over beta2
    for b2 in (0.5, 2.0, 8.0):
        _, _, table = wells_generalized(0, 2, 1.0, b2, 2.0, 1)
        m, p = domination(table, 1.0)
        rows.append(ReportRow.make(f"c3 domination ghost n=2 b1=1 b2={b2}", A_DOM, m, p, 1e-10))
    return rows


# ---------------------------------------------------------------------------
# 4: duality

A_VAR = "duality/variance"
A_Z = "duality/partition-function"


def duality_instances():
    for L in (0, 1):
        for n in (1, 2):
            for lam in (2.0, 4.0):
                for closed in (False, True):
                    r = None
                    if closed:
                        g = ghost_graph(L, n)
                        r = {g.index_of((1, 1)) if L else 0: 0}
                    yield L, n, lam, closed, r


def criterion_4():
    rows = []
    for L, n, lam, closed, r in duality_instances():
        rep = duality_check(L, n, 1.0, 1.0, lam, r)
        tag = f"L={L} n={n} lam={lam} closed={int(closed)}"
        rows.append(ReportRow.make(f"c4 variance {tag}", A_VAR, rep.diff, 0.0, 1e-5))
        rows.append(ReportRow.make(f"c4 forms {tag}", A_VAR, rep.forms_diff, 0.0, 1e-5))
        rows.append(ReportRow.make(f"c4 partition {tag}", A_Z, rep.z_rel_err, 0.0, 1e-8))
    return rows


# ---------------------------------------------------------------------------
# 5-6: monotonicity and surgeries

A_GIN = "ginibre/two-point-monotone"
A_COND = "height/conductance-monotone"
A_INC = "height/increasing-in-r-omega-L"


def criterion_5():
    rows = []
    worst = None
    for n, pairs in iq.small_graphs(4):
        m = len(pairs)
        for mix, kinds in (("xy", ["xy"] * m), ("villain", ["villain"] * m),
                           ("mixed", [("xy", "villain")[i % 2] for i in range(m)])):
            c = iq.ginibre_scan(n, pairs, kinds)
            if worst is None or c.margin + c.err < worst[1].margin + worst[1].err:
                worst = (f"n={n} m={m} {mix}", c)
    rows.append(_row(f"c5 ginibre worst {worst[0]}", A_GIN, worst[1], 1e-9))
    sq = iq.square2()
    for kind in ("gaussian", "bessel"):
        rows.append(_row(f"c5 conductance {kind} square2", A_COND,
                         iq.height_conductance_scan(sq, kind, vertex=0), 1e-9))
        rows.append(_row(f"c5 domain L=1->2 {kind}", A_INC, iq.domain_growth(0.25, kind), 1e-9))
        rows.append(_row(f"c5 site-r {kind} square2", A_INC,
                         iq.site_disorder_scan(sq, 1.0, kind, 0), 1e-9))
    rows.append(_row("c5 edge-omega gaussian 1x2", A_INC,
                     iq.percolation_scan(with_exterior(iq.strip(1, 2)), 1.0, vertex=0), 1e-9))
    return rows


A_SPLIT = "surgery/villain-split"
A_IDENT = "surgery/identification"
A_ADD = "surgery/vertex-addition"


def criterion_6():
    rows = []
    tri = iq.abstract_graph(3, [(0, 1), (1, 2), (0, 2)])
    for k in (2, 3):
        rows.append(_row(f"c6 split k={k}", A_SPLIT, iq.split_villain(tri, 2.0, 0, k, 0, 1), 1e-9))
    sq = iq.square2()
    for kind in ("gaussian", "bessel"):
        pots = [getattr(EdgePotential, kind)(1.0)] * sq.num_edges
        rows.append(_row(f"c6 identify 1,2 {kind}", A_IDENT,
                         iq.identification(sq, pots, 1, 2, 0), 1e-9))
        rows.append(_row(f"c6 identify 3,ext {kind}", A_IDENT,
                         iq.identification(sq, pots, 3, sq.num_vertices - 1, 0), 1e-9))
    for k in (1, 2, 3):
        rows.append(_row(f"c6 add-vertices k={k}", A_ADD, iq.add_vertices(sq, 1.0, 0, k, 0), 1e-9))
    return rows


# ---------------------------------------------------------------------------
# 7-8: limits and annealed models

A_METRIC = "metric-limit/two-point"
A_POWER = "metric-limit/bessel-power"


def criterion_7():
    rows = []
    edge = iq.abstract_graph(2, [(0, 1)])
    chain = build_lattice_box(1, 1)
    for beta in (0.5, 2.0):
        for name, g, x, y in (("edge", edge, 0, 1), ("chain", chain, 0, 2)):
            c = iq.metric_limit(beta, g, x, y)
            steps = -np.diff(c.extra["errors"])
            i = int(np.argmin(steps))
            rows.append(ReportRow.make(f"c7 strictly-decreasing {name} beta={beta} (n={i + 1}->{i + 2})",
                                       A_METRIC, 0.0, steps[i], 0.0, strict=True))
            rows.append(ReportRow.make(f"c7 err8<=err2/2 {name} beta={beta}", A_METRIC,
                                       c.lhs, c.rhs, c.err))
        worst = iq.bessel_power_errors(beta).max()
        rows.append(ReportRow.make(f"c7 bessel-power n*err<=3 beta={beta}", A_POWER, worst, 3.0))
    return rows


A_MIX = "annealed/mixture-identity"
A_FKG = "annealed/fkg-direction"
A_ZINC = "annealed/partition-increasing"


def criterion_8():
    rows = []
    e = mixture_identity_check("abs", [0.0, 0.5, 1.0, 2.0, 4.0])
    rows.append(ReportRow.make("c8 mixture-identity abs", A_MIX, e, 0.0, 1e-10))
    kappa = MixingMeasure.points([(0.5, 0.3), (2.0, 0.7)])
    # two parallel edges: on a tree Z would not depend on the couplings
    pair = iq.abstract_graph(2, [(0, 1), (0, 1)])
    c = iq.annealed_villain(pair, 1.0, kappa, 0, 1)
    rows.append(_row("c8 annealed>=quenched 2-edge", A_FKG, c, 1e-9))
    rows.append(ReportRow.make("c8 annealed=Z-weighted 2-edge", A_FKG, c.extra["identity_err"],
                               0.0, 1e-9))
    tri = iq.abstract_graph(3, [(0, 1), (1, 2), (0, 2)])
    rows.append(_row("c8 villain-Z increasing triangle", A_ZINC, iq.villain_z_scan(tri, 1.0), 0.0))
    return rows


# ---------------------------------------------------------------------------
# 9: chain validation

A_MC = "spins/two-point-estimand"
A_DELOC = "heights/variance-estimand"


def _sigma_row(tid, anchor, est: mcmc.Estimate, exact: float, k: float = 3.0):
    return ReportRow.make(tid, anchor, abs(est.mean - exact), k * est.stderr, 0.0)


def criterion_9(sweeps: int = 100_000, chi2_samples: int = 1_000_000):
    rows = []
    cfg = mcmc.ChainConfig(sweeps=sweeps, burn_in=1000, seed=2024, replicas=2)
    edge = iq.abstract_graph(2, [(0, 1)])
    est = mcmc.run_angle_chain(GibbsSpec(edge, (EdgePotential.xy(2.0),), "angle"), cfg, [(0, 1)])[0]
    rows.append(_sigma_row("c9 xy(2) edge", A_MC, est, special.i1(2.0) / special.i0(2.0)))
    est = mcmc.run_angle_chain(GibbsSpec(edge, (EdgePotential.xy(0.0),), "angle"), cfg, [(0, 1)])[0]
    rows.append(_sigma_row("c9 beta=0 edge", A_MC, est, 0.0))
    g = iq.strip(2, 2)
    spec = GibbsSpec(g, (EdgePotential.villain(1.0),) * g.num_edges, "angle")
    est = mcmc.run_angle_chain(spec, cfg, [(0, 3)])[0]
    rows.append(_sigma_row("c9 villain(1) 2x2", A_MC, est, exact_angle(spec, two_point(0, 3)).value))
    c = iq.chain(0)
    spec = GibbsSpec(c, (EdgePotential.gaussian(1.5),) * c.num_edges, "height")
    est = mcmc.run_height_chain(spec, cfg)[0]
    rows.append(_sigma_row("c9 gff single site", A_DELOC, est, exact_height(spec).value))
    b3 = with_exterior(build_lattice_box(2, 1))
    spec = GibbsSpec(b3, (EdgePotential.frozen(),) * b3.num_edges, "height")
    est = mcmc.run_height_chain(spec, cfg)[0]
    rows.append(ReportRow.make("c9 all closed var=0", A_DELOC, abs(est.mean), 0.0))
    spec = GibbsSpec(b3, (EdgePotential.bessel(2.0),) * b3.num_edges, "height")
    est = mcmc.run_height_chain(spec, cfg)[0]
    rows.append(_sigma_row("c9 zxy(2) 3x3", A_DELOC, est, exact_height(spec).value))
    for name, pot in (("gff(1)", EdgePotential.gaussian(1.0)), ("zxy(2)", EdgePotential.bessel(2.0))):
        p = chi2_height(pot, chi2_samples)
        rows.append(ReportRow.make(f"c9 chi2 3-site {name}", A_DELOC, 0.01, p, 0.0, strict=True))
    return rows


def chi2_height(pot: EdgePotential, samples: int, thin: int = 4, seed: int = 3,
                M: int = 8) -> float:
    """p-value of the chain's ``phi(0)`` histogram on the 3-site chain."""
    c = iq.chain(1)
    spec = GibbsSpec(c, (pot,) * c.num_edges, "height")
    cfg = mcmc.ChainConfig(sweeps=1000 + samples * thin, burn_in=1000, thin=thin, seed=seed)
    x = mcmc.height_series(spec, cfg, [c.origin])[:, 0].astype(int)
    probs = np.asarray(height_marginals(spec, [c.origin], M)).ravel()
    obs = np.array([(x == k).sum() for k in range(-M, M + 1)], dtype=float)
    exp = probs * len(x)
    keep = exp > 5
    o = np.append(obs[keep], obs[~keep].sum())
    e = np.append(exp[keep], exp[~keep].sum())
    return float(stats.chisquare(o, e * o.sum() / e.sum()).pvalue)


# ---------------------------------------------------------------------------
# 10: trend scans

A_LOC = "heights/localised-regime"


@dataclass(frozen=True)
class ScanPlan:
    Ls: tuple = (4, 8, 16, 32)
    ps: tuple = (1.0, 0.9, 0.75)
    sweeps: int = 20_000
    disorder_sweeps: int = 4_000
    dsamples: int = 16
    loc_Ls: tuple = (32, 64)
    loc_sweeps: int = 4_000
    villain_L: int = 16
    villain_sweeps: int = 20_000
    villain_dsamples: int = 4
    seed: int = 10


def criterion_10(plan: ScanPlan = ScanPlan()):
    rows = []
    for p in plan.ps:
        if p >= 1.0:
            cfg = mcmc.ChainConfig(sweeps=plan.sweeps, burn_in=plan.sweeps // 10, seed=plan.seed)
            ds = 1
        else:
            cfg = mcmc.ChainConfig(sweeps=plan.disorder_sweeps, burn_in=plan.disorder_sweeps // 8,
                                   seed=plan.seed)
            ds = plan.dsamples
        _, fits = mcmc.variance_scan("gff", [10.0], [p], plan.Ls, cfg, dsamples=ds)
        f = fits[(10.0, p)]
        rows.append(ReportRow.make(f"c10 gff beta=10 p={p} slope={f.slope:.3f} t>3", A_DELOC,
                                   3.0, f.t, 0.0, strict=True))
    cfg = mcmc.ChainConfig(sweeps=plan.loc_sweeps, burn_in=plan.loc_sweeps // 8, seed=plan.seed)
    scan, _ = mcmc.variance_scan("gff", [0.1], [1.0], plan.loc_Ls, cfg)
    a, b = scan[0][4], scan[1][4]
    rows.append(ReportRow.make(f"c10 gff beta=0.1 L={plan.loc_Ls[0]} vs {plan.loc_Ls[1]}", A_LOC,
                               abs(b.mean - a.mean), 2 * math.hypot(a.stderr, b.stderr), 0.0))
    cfg = mcmc.ChainConfig(sweeps=plan.villain_sweeps, burn_in=plan.villain_sweeps // 10,
                           seed=plan.seed, scale=0.6)
    xs = (2, 4, 8)
    ests = mcmc.villain_profile(5.0, 0.9, plan.villain_L, xs, cfg, dsamples=plan.villain_dsamples)
    lo = min(e.mean for e in ests)
    rows.append(ReportRow.make("c10 villain beta=5 p=0.9 positive", A_MC, 0.0, lo, 0.0,
                               strict=True))
    if lo > 0:
        fit = mcmc.weighted_fit(np.log(xs), np.log([e.mean for e in ests]),
                                [e.stderr / e.mean for e in ests])
        expo = -fit.slope
    else:
        expo = math.nan
    rows.append(ReportRow.make(f"c10 villain exponent={expo:.4f} > 0", A_MC, 0.0, expo, 0.0,
                               strict=True))
    rows.append(ReportRow.make(f"c10 villain exponent={expo:.4f} < 3", A_MC, expo, 3.0, 0.0,
                               strict=True))
    return rows


# ---------------------------------------------------------------------------
# 11: renormalisation

A_PART = "renorm/bound-chain"
A_EXP = "renorm/good-box-probability"


def criterion_11(seeds: int = 50, goodbox_samples: int = 200):
    rows = []
    R = required_radius(1, 1, True)
    worst, bad_tol = math.inf, 0
    for s in range(seeds):
        ch = bound_chain(sample_box_edges(R, 0.85, s), 1, 0.4)
        bad_tol += sum(not r.within_tol for _, r in ch)
        for _, d, slack in chain_margins(ch, rtol=1e-12):
            worst = min(worst, d + slack)
    rows.append(ReportRow.make(f"c11 bound-chain {seeds} seeds p=0.85", A_PART, 0.0, worst, 1e-9))
    rows.append(ReportRow.make("c11 bound-chain truncation within tolerance", A_PART,
                               bad_tol, 0.0))
    probs = goodbox_probabilities(0.6, (10, 20, 40), goodbox_samples)
    for (La, pa), (Lb, pb) in zip(probs[:-1], probs[1:]):
        rows.append(ReportRow.make(f"c11 good-box P(L={La})={pa:.3f} < P(L={Lb})={pb:.3f}",
                                   A_EXP, pa, pb, 0.0, strict=True))
    return rows


def goodbox_probabilities(p: float, Ls, samples: int, seed: int = 0) -> list:
    """Empirical ``P[G_{0,L}]`` on independent configurations."""
    out = []
    for L in Ls:
        _, _, H = rectangle_sizes(L)
        R = H + 2
        hits = sum(good_box(dual_config(sample_box_edges(R, p, (seed, L, s))), (0, 0), L).verdict
                   for s in range(samples))
        out.append((L, hits / samples))
    return out


# ---------------------------------------------------------------------------
# registry

CRITERIA = {
    1: (criterion_1, 120.0),
    2: (criterion_2, 600.0),
    3: (criterion_3, 120.0),
    4: (criterion_4, 300.0),
    5: (criterion_5, 600.0),
    6: (criterion_6, 300.0),
    7: (criterion_7, 120.0),
    8: (criterion_8, 180.0),
    9: (criterion_9, 900.0),
    10: (criterion_10, 2700.0),
    11: (criterion_11, 600.0),
}


def run_criterion(k: int, **kw) -> list:
    """Rows of criterion ``k`` plus a runtime row against its budget."""
    fn, budget = CRITERIA[k]
    t = time.perf_counter()
    rows = fn(**kw)
    dt = time.perf_counter() - t
    for r in rows:
        r.runtime = dt
    rows.append(ReportRow.make(f"c{k} runtime", "runtime budget", dt, budget, 0.0, runtime=dt))
    return rows
