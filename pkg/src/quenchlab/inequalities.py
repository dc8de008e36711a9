"""Exact checks of correlation inequalities on small instances.

Every check returns a :class:`Check`: ``lhs <= rhs`` is the claimed
inequality, ``margin = rhs - lhs`` and ``err`` bounds the numerical error
of the margin. Checks only compute; deciding pass/fail at a tolerance is
left to the caller via :meth:`Check.passed`.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .errors import ArgumentError
from .exact import (GibbsSpec, MeasureTable, conditional_open_max, exact_angle, exact_height,
                    two_point, wells_disorder)
from .graph import (LatticeGraph, _make_edges, build_lattice_box, build_region,
                    identify_vertices, parallelize_edges, subdivide_edges, with_exterior)
from .potentials import EdgePotential, MixingMeasure, bessel_power

# ---------------------------------------------------------------------------
# result type


@dataclass
class Check:
    name: str
    lhs: float
    rhs: float
    err: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def passed(self, tol: float = 0.0) -> bool:
        return self.margin >= -(tol + self.err)


def p0(beta: float, d: int) -> float:
    """Bernoulli parameter dominating the Wells disorder."""
    return 1.0 / (1.0 + math.exp(-2 * d * beta))


def _mean(table: MeasureTable, values) -> float:
    return float(np.dot(table.probs, values))


# ---------------------------------------------------------------------------
# instances


def strip(w: int, h: int) -> LatticeGraph:
    """The ``w x h`` rectangle ``{0..w-1} x {0..h-1}``."""
    return build_region(itertools.product(range(w), range(h)), d=2)


def chain(L: int) -> LatticeGraph:
    """``{-L..L}`` in one dimension with an exterior vertex."""
    return with_exterior(build_lattice_box(1, L))


def square2() -> LatticeGraph:
    """The 2x2 region ``{0,1}^2`` with an exterior vertex."""
    return with_exterior(strip(2, 2))


def lattice_sites(g: LatticeGraph) -> list:
    return [i for i, r in enumerate(g.roles) if r == "lattice"]


def multigraph_slots(n: int, beta1: float, beta2: float):
    """Potentials of the multigraph height model: first and last copies at
    ``beta1``, the ``n - 2`` middle copies at ``n beta2``."""
    def f(e):
        if "/" not in e.slot:
            return EdgePotential.bessel(beta1)
        j = int(e.slot.rsplit("/", 1)[1])
        return EdgePotential.bessel(beta1 if j in (1, n) else n * beta2)
    return f


def multigraph_spec(g: LatticeGraph, n: int, beta1: float, beta2: float, r=None) -> GibbsSpec:
    """Disordered multigraph model; only the end copies see ``r``."""
    gm = parallelize_edges(g, n)
    return GibbsSpec.build(gm, multigraph_slots(n, beta1, beta2), "height", r=r)


# ---------------------------------------------------------------------------
# Wells inequalities


def wells_xy(g: LatticeGraph, beta: float, x: int, y: int | None = None) -> Check:
    """``<cos(theta_x - theta_y)>`` at ``beta/4`` against its Wells average at ``beta``.

    The disorder multiplies the coupling of ``{u, v}`` by ``r_u r_v``; every
    vertex of ``g`` is a disorder site. ``y`` defaults to the origin.
    """
    y = g.origin if y is None else y
    sites = list(range(g.num_vertices))
    base = EdgePotential.xy(beta)
    table = wells_disorder(lambda r: GibbsSpec.build(g, base, "angle", r=r), sites)
    vals, err = [], 0.0
    for i in range(2 ** len(sites)):
        res = exact_angle(GibbsSpec.build(g, base, "angle", r=table.config(i)), two_point(x, y))
        vals.append(res.value)
        err = max(err, res.err)
    clean = exact_angle(GibbsSpec.build(g, EdgePotential.xy(beta / 4), "angle"), two_point(x, y))
    dom = conditional_open_max(table)
    return Check(f"wells-xy beta={beta}", clean.value, _mean(table, vals), err + clean.err,
                 {"table": table, "cond_max": dom[0], "p0": p0(beta, g.d)})


def wells_zxy(g: LatticeGraph, beta: float, vertex: int | None = None) -> Check:
    """``Var[phi]`` of the XY height function at ``beta/4`` against the Wells average."""
    sites = lattice_sites(g)
    base = EdgePotential.bessel(beta)
    table = wells_disorder(lambda r: GibbsSpec.build(g, base, "height", r=r), sites)
    vals, err = [], 0.0
    for i in range(2 ** len(sites)):
        res = exact_height(GibbsSpec.build(g, base, "height", r=table.config(i)), vertex)
        vals.append(res.value)
        err = max(err, res.err)
    clean = exact_height(GibbsSpec.build(g, EdgePotential.bessel(beta / 4), "height"), vertex)
    dom = conditional_open_max(table)
    return Check(f"wells-zxy beta={beta}", clean.value, _mean(table, vals), err + clean.err,
                 {"table": table, "cond_max": dom[0], "p0": p0(beta, g.d)})


def wells_multigraph(g: LatticeGraph, n: int, beta1: float, beta2: float,
                     vertex: int | None = None) -> Check:
    """Multigraph height model at ``(beta1/2, beta2)`` against its Wells average."""
    sites = lattice_sites(g)
    table = wells_disorder(lambda r: multigraph_spec(g, n, beta1, beta2, r), sites)
    vals, err = [], 0.0
    for i in range(2 ** len(sites)):
        res = exact_height(multigraph_spec(g, n, beta1, beta2, table.config(i)), vertex)
        vals.append(res.value)
        err = max(err, res.err)
    clean = exact_height(multigraph_spec(g, n, beta1 / 2, beta2), vertex)
    dom = conditional_open_max(table)
    return Check(f"wells-mult n={n} beta1={beta1} beta2={beta2}", clean.value,
                 _mean(table, vals), err + clean.err,
                 {"table": table, "cond_max": dom[0], "p0": p0(beta1, g.d)})


def discrete_wells(n_max: int = 12) -> Check:
    """``min sum_{r in {0,1}} (r - 1/2)^a (r + 1/2)^b`` over ``a, b <= n_max``.

    Evaluated in exact rational arithmetic.
    """
    from fractions import Fraction
    h = Fraction(1, 2)
    worst = min(sum((r - h) ** a * (r + h) ** b for r in (0, 1))
                for a in range(n_max + 1) for b in range(n_max + 1))
    return Check("discrete-wells", 0.0, float(worst))


# ---------------------------------------------------------------------------
# metric-graph limit


def metric_limit(beta: float, base: LatticeGraph, x: int, y: int, ns=range(1, 9)) -> Check:
    """Errors ``|XY two-point on the n-subdivision at n beta - Villain two-point|``.

    ``lhs`` is the last error and ``rhs`` half the error at ``n = 2``.
    """
    vil = exact_angle(GibbsSpec.build(base, EdgePotential.villain(beta), "angle"),
                      two_point(x, y))
    errs = []
    for n in ns:
        g = subdivide_edges(base, n)
        res = exact_angle(GibbsSpec.build(g, EdgePotential.xy(n * beta), "angle"),
                          two_point(x, y))
        errs.append(abs(res.value - vil.value))
    errs = np.array(errs)
    ns = list(ns)
    monotone = bool(np.all(np.diff(errs) < 0))
    i2 = ns.index(2) if 2 in ns else 0
    return Check(f"metric-limit beta={beta}", float(errs[-1]), float(errs[i2] / 2), vil.err,
                 {"errors": errs, "ns": ns, "strictly_decreasing": monotone})


def bessel_power_errors(beta: float, ks=(0, 1, 2), ns=range(1, 9)) -> np.ndarray:
    """``n * |(I_k(n beta)/I_0(n beta))^n - exp(-k^2/(2 beta))|`` per ``(n, k)``."""
    out = np.zeros((len(list(ns)), len(ks)))
    for i, n in enumerate(ns):
        for j, k in enumerate(ks):
            out[i, j] = n * abs(bessel_power(k, n, beta) - math.exp(-k * k / (2 * beta)))
    return out


# ---------------------------------------------------------------------------
# Ginibre and monotonicity


def small_graphs(max_vertices: int = 4) -> list:
    """Connected simple graphs up to isomorphism, as lists of vertex pairs."""
    out = []
    for n in range(2, max_vertices + 1):
        seen = []
        pairs = list(itertools.combinations(range(n), 2))
        for m in range(n - 1, len(pairs) + 1):
            for es in itertools.combinations(pairs, m):
                G = nx.Graph(es)
                if G.number_of_nodes() != n or not nx.is_connected(G):
                    continue
                if any(nx.is_isomorphic(G, H) for H in seen):
                    continue
                seen.append(G)
                out.append((n, list(es)))
    return out


def abstract_graph(n: int, pairs) -> LatticeGraph:
    """Graph on ``n`` points of the unit circle, origin at vertex 0."""
    coords = tuple((0.0, 0.0) if i == 0 else (math.cos(i), math.sin(i)) for i in range(n))
    return LatticeGraph(2, coords, ("lattice",) * n,
                        _make_edges([(u, v, f"e{j}") for j, (u, v) in enumerate(pairs)]))


def ginibre_scan(n: int, pairs, kinds, grid=(0.5, 1.0, 2.0), base: float = 1.0) -> Check:
    """Smallest finite difference of any two-point function in any ``J_e``.

    ``kinds[e]`` is ``"xy"`` or ``"villain"``. Other couplings stay at ``base``.
    """
    g = abstract_graph(n, pairs)
    worst, err = math.inf, 0.0
    where = None

    def spec(J):
        return GibbsSpec(g, tuple(getattr(EdgePotential, k)(j) for k, j in zip(kinds, J)),
                         "angle")

    for e in range(len(pairs)):
        for x, y in itertools.combinations(range(n), 2):
            prev = None
            for Je in grid:
                J = [base] * len(pairs)
                J[e] = Je
                res = exact_angle(spec(J), two_point(x, y))
                err = max(err, res.err)
                if prev is not None and res.value - prev < worst:
                    worst, where = res.value - prev, (e, x, y, Je)
                prev = res.value
    return Check(f"ginibre n={n} m={len(pairs)}", 0.0, worst, 2 * err, {"where": where})


def height_conductance_scan(g: LatticeGraph, kind: str = "gaussian", grid=(0.5, 1.0, 2.0),
                            base: float = 1.0, vertex: int | None = None) -> Check:
    """Smallest finite difference of ``Var[phi]`` in any one conductance."""
    worst, err, where = math.inf, 0.0, None
    for e in range(g.num_edges):
        prev = None
        for b in grid:
            pots = [getattr(EdgePotential, kind)(base)] * g.num_edges
            pots[e] = getattr(EdgePotential, kind)(b)
            res = exact_height(GibbsSpec(g, tuple(pots), "height"), vertex)
            err = max(err, res.err)
            if prev is not None and res.value - prev < worst:
                worst, where = res.value - prev, (e, b)
            prev = res.value
    return Check(f"conductance-{kind}", 0.0, worst, 2 * err, {"where": where})


def percolation_scan(g: LatticeGraph, beta: float, kind: str = "gaussian",
                     vertex: int | None = None) -> Check:
    """Smallest change of ``Var[phi]`` when one closed edge is opened.

    Runs over every edge configuration of ``g`` (closed edges are rigid).
    """
    E = g.num_edges
    if E > 14:
        raise ArgumentError("too many edges for a full scan")
    vals = np.zeros(2 ** E)
    err = 0.0
    pot = getattr(EdgePotential, kind)(beta)
    for i in range(2 ** E):
        pots = tuple(pot if (i >> e) & 1 else EdgePotential.frozen() for e in range(E))
        res = exact_height(GibbsSpec(g, pots, "height"), vertex)
        vals[i] = res.value
        err = max(err, res.err)
    worst, where = math.inf, None
    for i in range(2 ** E):
        for e in range(E):
            if not (i >> e) & 1:
                d = vals[i | (1 << e)] - vals[i]
                if d < worst:
                    worst, where = d, (i, e)
    return Check(f"percolation-{kind}", 0.0, worst, 2 * err, {"where": where})


def site_disorder_scan(g: LatticeGraph, beta: float, kind: str = "bessel",
                      vertex: int | None = None) -> Check:
    """Smallest change of ``Var[phi]`` when one closed site is opened.

    Site ``x`` scales ``beta`` on its edges by ``r_x``; a closed site is
    glued to its neighbours.
    """
    sites = lattice_sites(g)
    pot = getattr(EdgePotential, kind)(beta)
    vals, err = {}, 0.0
    for bits in itertools.product((0, 1), repeat=len(sites)):
        res = exact_height(GibbsSpec.build(g, pot, "height", r=dict(zip(sites, bits))), vertex)
        vals[bits] = res.value
        err = max(err, res.err)
    worst, where = math.inf, None
    for bits, v in vals.items():
        for i, b in enumerate(bits):
            if not b:
                up = bits[:i] + (1,) + bits[i + 1:]
                if vals[up] - v < worst:
                    worst, where = vals[up] - v, (bits, sites[i])
    return Check(f"site-disorder-{kind}", 0.0, worst, 2 * err, {"where": where})


def domain_growth(beta: float, kind: str = "gaussian", d: int = 2, L: int = 1) -> Check:
    """``Var[phi(0)]`` on ``Lambda_L`` against ``Lambda_{L+1}`` (zero outside)."""
    pot = getattr(EdgePotential, kind)(beta)
    small = exact_height(GibbsSpec.build(with_exterior(build_lattice_box(d, L)), pot, "height"))
    big = exact_height(GibbsSpec.build(with_exterior(build_lattice_box(d, L + 1)), pot, "height"))
    return Check(f"domain L={L}->{L + 1}", small.value, big.value, small.err + big.err)


# ---------------------------------------------------------------------------
# surgeries


def split_villain(g: LatticeGraph, J: float, edge: int, k: int, x: int, y: int) -> Check:
    """Villain edge ``J`` replaced by ``k`` parallel edges ``J/k``: the two-point decreases."""
    pots = [EdgePotential.villain(J)] * g.num_edges
    before = exact_angle(GibbsSpec(g, tuple(pots), "angle"), two_point(x, y))
    e0 = g.edges[edge]
    triples = [(e.u, e.v, e.slot) for e in g.edges] + [(e0.u, e0.v, e0.slot)] * (k - 1)
    g2 = LatticeGraph(g.d, g.coords, g.roles, _make_edges(triples), g.boundary, g.L)
    pots2 = [p if i != edge else EdgePotential.villain(J / k) for i, p in enumerate(pots)]
    pots2 += [EdgePotential.villain(J / k)] * (k - 1)
    after = exact_angle(GibbsSpec(g2, tuple(pots2), "angle"), two_point(x, y))
    return Check(f"split-villain k={k}", after.value, before.value, before.err + after.err)


def identification(g: LatticeGraph, pots, u: int, v: int, vertex: int | None = None) -> Check:
    """Identifying ``u`` and ``v`` lowers ``Var[phi(vertex)]``."""
    vertex = g.origin if vertex is None else vertex
    before = exact_height(GibbsSpec(g, tuple(pots), "height"), vertex)
    g2 = identify_vertices(g, u, v)
    keep, gone = min(u, v), max(u, v)
    pots2 = [p for e, p in zip(g.edges, pots) if {e.u, e.v} != {u, v}]
    w = keep if vertex == gone else vertex - (vertex > gone)
    after = exact_height(GibbsSpec(g2, tuple(pots2), "height"), w)
    return Check(f"identify {u},{v}", after.value, before.value, before.err + after.err)


def add_vertices(g: LatticeGraph, beta: float, edge: int, k: int,
                 vertex: int | None = None) -> Check:
    """Subdividing one Gaussian edge ``beta`` into ``k + 1`` edges ``beta/(k+1)``."""
    vertex = g.origin if vertex is None else vertex
    pots = [EdgePotential.gaussian(beta)] * g.num_edges
    before = exact_height(GibbsSpec(g, tuple(pots), "height"), vertex)
    g2 = subdivide_edges(g, k + 1, [edge])
    # segments of the chosen edge are the ones touching a subdivision vertex
    sub = [i for i, r in enumerate(g2.roles) if r == "subdivision"]
    pots2 = tuple(EdgePotential.gaussian(beta / (k + 1)) if (e.u in sub or e.v in sub)
                  else EdgePotential.gaussian(beta) for e in g2.edges)
    after = exact_height(GibbsSpec(g2, pots2, "height"), vertex)
    return Check(f"add-vertices k={k}", after.value, before.value, before.err + after.err)


# ---------------------------------------------------------------------------
# annealed models


def annealed_villain(g: LatticeGraph, beta: float, kappa: MixingMeasure, x: int, y: int) -> Check:
    """Annealed two-point against the plain average of quenched two-points.

    Also checks that the annealed value is the ``Z``-weighted quenched average.
    """
    js, ws = kappa.as_points()
    E = g.num_edges
    ann = exact_angle(GibbsSpec.build(g, EdgePotential.mixture(kappa, beta), "angle"),
                      two_point(x, y))
    q_vals, log_w = [], []
    err = ann.err
    for idx in itertools.product(range(len(js)), repeat=E):
        pots = tuple(EdgePotential.villain(beta * js[i]) for i in idx)
        spec = GibbsSpec(g, pots, "angle")
        res = exact_angle(spec, two_point(x, y))
        z = exact_angle(spec, None)
        q_vals.append(res.value)
        log_w.append(z.value + sum(math.log(ws[i]) for i in idx))
        err = max(err, res.err)
    log_w = np.array(log_w)
    prob = np.array([math.prod(ws[i] for i in idx)
                     for idx in itertools.product(range(len(js)), repeat=E)])
    zw = np.exp(log_w - log_w.max())
    weighted = float(np.dot(zw, q_vals) / zw.sum())
    plain = float(np.dot(prob, q_vals))
    return Check("annealed-fkg", plain, ann.value, 2 * err,
                 {"weighted": weighted, "identity_err": abs(weighted - ann.value)})


def villain_z_scan(g: LatticeGraph, beta: float, grid=(0.5, 1.0, 2.0)) -> Check:
    """Smallest finite difference of ``log Z`` of the Villain model in any ``J_e``."""
    worst, where = math.inf, None
    for e in range(g.num_edges):
        prev = None
        for J in grid:
            pots = [EdgePotential.villain(beta)] * g.num_edges
            pots[e] = EdgePotential.villain(beta * J)
            z = exact_angle(GibbsSpec(g, tuple(pots), "angle"), None).value
            if prev is not None and z - prev < worst:
                worst, where = z - prev, (e, J)
            prev = z
    return Check("villain-z", 0.0, worst, 1e-10, {"where": where})
