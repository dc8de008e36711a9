"""Exact finite-volume Gibbs computations.

Two engines with independent cross-checks:

* angle models (``exact_angle``) are summed in the integer-flow
  representation, ``Z = (2 pi)^V sum_{div k = 0} prod_e c_e(k_e)``, with the
  flow lattice parametrised by an integral cycle basis;
  ``angle_quadrature`` integrates the vertex angles on a periodic grid;
* height models (``exact_height``) are summed over ``|phi| <= M`` with a
  spanning-tree majorant for the discarded configurations.

All weights are normalised by their value at zero, so truncated sums are
at least one and error bounds are relative.
"""
from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.special import logsumexp

from . import _contract
from ._cycles import cycle_basis, forest_flow, spanning_forest
from .errors import ArgumentError, ResourceError, StructureError
from .graph import LatticeGraph, vertex_components
from .potentials import EdgePotential, fourier_coeffs

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# model descriptions


def disorder_factor(g: LatticeGraph, e, r) -> float:
    """Multiplier of ``beta`` on edge ``e`` under the site configuration ``r``.

    Parallel copies ``slot/j`` carry ``r_u`` on ``j = 1`` and ``r_v`` on
    ``j = n`` and nothing in between; other edges carry the product of
    ``r`` over their endpoints. Vertices missing from ``r`` count as open.
    """
    def rv(x):
        return float(r.get(x, 1)) if isinstance(r, Mapping) else (
            float(r[x]) if x < len(r) else 1.0)

    if "/" in e.slot:
        j = int(e.slot.rsplit("/", 1)[1])
        if j == 1:
            return rv(e.u)
        if j == g.n:
            return rv(e.v)
        return 1.0
    return rv(e.u) * rv(e.v)


@dataclass(frozen=True)
class GibbsSpec:
    """A Gibbs measure on a finite graph.

    Attributes
    ----------
    graph : LatticeGraph
    potentials : tuple of EdgePotential
        One per edge. ``frozen`` edges are rigid (equal angles resp. equal
        heights); ``free`` edges carry weight one in the model's own
        variables.
    family : {"angle", "height"}
    frozen : tuple of int
        Extra vertices pinned at height zero; exterior and ghost vertices
        are always pinned for heights.
    lam : float
        Heights only: extra weight ``I_{phi(x)}(lam)`` at ``lam_vertex``
        (the origin by default).
    """

    graph: LatticeGraph
    potentials: tuple
    family: str = "angle"
    frozen: tuple = ()
    lam: float = 0.0
    lam_vertex: int | None = None

    def __post_init__(self):
        if self.family not in ("angle", "height"):
            raise ArgumentError(f"unknown family {self.family!r}")
        if len(self.potentials) != self.graph.num_edges:
            raise ArgumentError("one potential per edge required")

    @classmethod
    def build(cls, graph: LatticeGraph, slots, family: str = "angle", r=None,
              disorder_slots=None, **kw) -> "GibbsSpec":
        """Assign potentials by slot and apply a site configuration.

        ``slots`` is an EdgePotential, a mapping from slot name (or the part
        before ``/``) to EdgePotential, or a callable on edges. When ``r`` is
        given, edges whose base slot is in ``disorder_slots`` (default: all
        but ``lambda``) have ``beta`` scaled by :func:`disorder_factor`.
        """
        pots = []
        for e in graph.edges:
            if isinstance(slots, EdgePotential):
                p = slots
            elif callable(slots) and not isinstance(slots, Mapping):
                p = slots(e)
            else:
                p = slots.get(e.slot, slots.get(e.slot.split("/")[0]))
                if p is None:
                    raise ArgumentError(f"no potential for slot {e.slot!r}")
            if r is not None:
                base = e.slot.split("/")[0]
                hit = base != "lambda" if disorder_slots is None else base in disorder_slots
                if hit:
                    p = p.scaled(disorder_factor(graph, e, r))
            pots.append(p)
        return cls(graph, tuple(pots), family, **kw)

    def replace_potential(self, edge_id: int, p: EdgePotential) -> "GibbsSpec":
        pots = list(self.potentials)
        pots[edge_id] = p
        return GibbsSpec(self.graph, tuple(pots), self.family, self.frozen, self.lam,
                         self.lam_vertex)

    @property
    def pinned(self) -> tuple:
        g = self.graph
        out = set(self.frozen) | set(g.frozen)
        if g.ghost is not None:
            out.add(g.ghost)
        return tuple(sorted(out))


@dataclass
class ExactResult:
    """Value with a rigorous truncation bound.

    ``K`` is the largest flow cut-off and ``M`` the height cut-off; the one
    that does not apply is ``None``. ``within_tol`` is False when the
    budget did not allow the bound to reach the requested tolerance.
    """

    value: float
    err: float
    K: int | None = None
    M: int | None = None
    work: float = 0.0
    log_z: float = math.nan
    within_tol: bool = True
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# shared preprocessing


class _UF:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, x):
        while self.p[x] != x:
            self.p[x] = self.p[self.p[x]]
            x = self.p[x]
        return x

    def union(self, a, b):
        a, b = self.find(a), self.find(b)
        if a != b:
            self.p[max(a, b)] = min(a, b)


def _reduce_angle(spec: GibbsSpec):
    """Contract frozen edges, drop weight-one edges.

    Returns ``(nv, ends, pots, vmap, log_const)`` where ``log_const``
    collects the density at zero of edges that became self-loops.
    """
    g = spec.graph
    uf = _UF(g.num_vertices)
    for e, p in zip(g.edges, spec.potentials):
        if p.kind == "frozen":
            uf.union(e.u, e.v)
    roots = sorted({uf.find(x) for x in range(g.num_vertices)})
    vid = {r: i for i, r in enumerate(roots)}
    vmap = np.array([vid[uf.find(x)] for x in range(g.num_vertices)], dtype=np.int64)
    ends, pots = [], []
    log_const = 0.0
    for e, p in zip(g.edges, spec.potentials):
        if p.kind in ("frozen", "free") or p.is_delta():
            continue
        a, b = vmap[e.u], vmap[e.v]
        if a == b:
            log_const += float(p.log_density(0.0))
            continue
        ends.append((a, b) if a < b else (b, a))
        pots.append(p)
    return len(roots), np.array(ends, dtype=np.int64).reshape(-1, 2), pots, vmap, log_const


def _charges(nv, vmap, charges, m):
    a = np.zeros(nv, dtype=np.int64)
    if charges:
        for x, q in charges.items():
            a[vmap[x]] += int(q) * m
    return a


def two_point(x: int, y: int) -> dict:
    """Charges for ``cos(theta_x - theta_y)``."""
    return {x: 1, y: -1} if x != y else {}


# ---------------------------------------------------------------------------
# angle engine: flows


def _cycle_ranges(C, k0, caps, active, rounds=50):
    """Integer boxes containing every cycle vector ``c`` with ``|k0 + C^T c| <= caps``."""
    m = C.shape[0]
    if m == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    lo = np.full(m, -np.inf)
    hi = np.full(m, np.inf)
    Ca = C[:, active].astype(float)
    k0a = k0[active].astype(float)
    capa = caps[active].astype(float)
    # interval propagation over the constraints -cap <= k0 + sum_i C_ie c_i <= cap
    for _ in range(rounds):
        changed = False
        for col in range(Ca.shape[1]):
            coef = Ca[:, col]
            nz = np.nonzero(coef)[0]
            if len(nz) == 0:
                continue
            for i in nz:
                others = [j for j in nz if j != i]
                smin = sum(min(coef[j] * lo[j], coef[j] * hi[j]) for j in others)
                smax = sum(max(coef[j] * lo[j], coef[j] * hi[j]) for j in others)
                if not (math.isfinite(smin) and math.isfinite(smax)):
                    continue
                a = (-capa[col] - k0a[col] - smax) / coef[i]
                b = (capa[col] - k0a[col] - smin) / coef[i]
                nlo, nhi = min(a, b), max(a, b)
                nlo, nhi = math.ceil(nlo - 1e-9), math.floor(nhi + 1e-9)
                if nlo > lo[i]:
                    lo[i] = nlo
                    changed = True
                if nhi < hi[i]:
                    hi[i] = nhi
                    changed = True
        if not changed:
            break
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        lo, hi = _inverse_ranges(C, k0, caps, active, lo, hi)
    return lo.astype(np.int64), hi.astype(np.int64)


def _inverse_ranges(C, k0, caps, active, lo, hi):
    """Fallback bound through a square unimodular minor of ``C``."""
    m = C.shape[0]
    cols = []
    rank = 0
    for col in active:
        trial = C[:, cols + [col]].astype(float)
        if np.linalg.matrix_rank(trial) > rank:
            cols.append(col)
            rank += 1
        if rank == m:
            break
    Minv = np.linalg.inv(C[:, cols].astype(float).T)
    span = np.abs(k0[cols]) + caps[cols]
    bound = np.abs(Minv) @ span
    centre = Minv @ (-k0[cols].astype(float))
    lo = np.maximum(lo, np.floor(centre - bound))
    hi = np.minimum(hi, np.ceil(centre + bound))
    return lo, hi


def _flow_factors(C, k0, series, pots, lo, hi):
    """Einsum factors ``c_e(k0_e + sum_i C_ie c_i) / c_e(0)``; bridges give a constant."""
    factors = []
    const = 1.0
    for e in range(C.shape[1]):
        coefs = C[:, e]
        sup = np.nonzero(coefs)[0]
        if len(sup) == 0:
            const *= float(pots[e].relative_coefficient(int(k0[e])))
            continue
        fs = series[e]
        arg = np.full([1] * len(sup), int(k0[e]), dtype=np.int64)
        for pos, i in enumerate(sup):
            shape = [1] * len(sup)
            shape[pos] = hi[i] - lo[i] + 1
            arg = arg + coefs[i] * np.arange(lo[i], hi[i] + 1).reshape(shape)
        table = np.append(fs.coeffs, 0.0)
        vals = table[np.minimum(np.abs(arg), fs.K + 1)]
        factors.append((vals, [int(i) for i in sup]))
    return factors, const


def exact_angle(spec: GibbsSpec, charges: dict | None = None, m: int = 1,
                tol: float = 1e-10, max_size: float = 2e8) -> ExactResult:
    """Exact expectation of ``cos(m sum_x a_x theta_x)`` in an angle model.

    With ``charges=None`` the value is ``log Z`` for the Lebesgue measure
    on ``[0, 2 pi)^V``.

    Parameters
    ----------
    spec : GibbsSpec
    charges : dict, optional
        Integer coefficients ``a_x``; use :func:`two_point` for two-point
        functions.
    m : int
        Multiplier of the linear combination.
    tol : float
        Target for the rigorous truncation bound.
    max_size : float
        Largest tensor intermediate allowed before raising ResourceError.
    """
    nv, ends, pots, vmap, log_const = _reduce_angle(spec)
    a = _charges(nv, vmap, charges, m)
    E = len(ends)
    k0 = forest_flow(nv, ends, a)
    want_z = charges is None
    if k0 is None:
        return ExactResult(0.0, 0.0, 0, None, 0.0)
    C = cycle_basis(nv, ends)
    in_cycle = np.any(C != 0, axis=0) if len(C) else np.zeros(E, dtype=bool)
    active = np.nonzero(in_cycle)[0]
    # S_e = sum_k c_e(k)/c_e(0) = density(0)/c_e(0)
    S = np.array([math.exp(float(p.log_density(0.0)) - float(p.log_coefficient(0)))
                  for p in pots]) if E else np.zeros(0)
    logS = float(np.log(S[active]).sum()) if len(active) else 0.0
    n_act = max(len(active), 1)
    eps = tol / (4.0 * n_act) * math.exp(-logS)
    series = []
    for e, p in enumerate(pots):
        if in_cycle[e]:
            K = 1
            while True:
                fs = fourier_coeffs(p, K)
                if fs.tail <= eps * S[e] or K > 100000:
                    break
                K = K * 2 if not math.isfinite(fs.tail) else K + max(1, K // 3)
            series.append(fs)
        else:
            series.append(fourier_coeffs(p, 0))
    caps = np.array([series[e].K for e in range(E)], dtype=np.int64)

    def flow_sum(k0v):
        lo, hi = _cycle_ranges(C, k0v, caps, active)
        factors, const = _flow_factors(C, k0v, series, pots, lo, hi)
        if not factors:
            return const, 0.0
        flops, _ = _contract.contraction_cost(factors)
        val = float(_contract.contract(factors, max_size=max_size))
        return const * val, flops

    z0, w0 = flow_sum(np.zeros(E, dtype=np.int64))
    tails = np.array([series[e].tail / S[e] for e in active]) if len(active) else np.zeros(0)
    B = math.exp(logS) * float(tails.sum())
    log_z = (nv * math.log(TWO_PI) + log_const
             + sum(float(p.log_coefficient(0)) for p in pots) + math.log(z0))
    Kmax = int(caps[active].max()) if len(active) else 0
    if want_z:
        err = B / z0
        return ExactResult(log_z, err, Kmax, None, w0, log_z, err <= tol)
    za, wa = flow_sum(k0)
    value = za / z0
    err = (B / z0) * (1.0 + abs(value))
    return ExactResult(value, err, Kmax, None, w0 + wa, log_z, err <= tol)


# ---------------------------------------------------------------------------
# angle engine: vertex quadrature (cross-check)


def angle_quadrature(spec: GibbsSpec, charges: dict | None = None, m: int = 1,
                     N0: int = 16, tol: float = 1e-12, N_max: int = 1024,
                     max_size: float = 2e8) -> ExactResult:
    """Periodic trapezoid rule over gauge-fixed vertex angles.

    The grid size doubles until two successive values differ by less than
    ``tol``; that difference is reported as ``err``.
    """
    nv, ends, pots, vmap, log_const = _reduce_angle(spec)
    a = _charges(nv, vmap, charges, m)
    ncomp, labels = vertex_components(nv, ends)
    fixed = {int(np.nonzero(labels == c)[0][0]) for c in range(ncomp)}
    for c in range(ncomp):
        if a[labels == c].sum() != 0:
            return ExactResult(0.0, 0.0)

    def run(N):
        th = TWO_PI * np.arange(N) / N
        diff = th[:, None] - th[None, :]
        factors = []
        for (u, v), p in zip(ends, pots):
            mat = np.exp(p.log_density(diff) - p.log_density_max())
            if u in fixed and v in fixed:
                factors.append((mat[:1, :1].reshape(()), []))
            elif u in fixed:
                factors.append((mat[0, :], [int(v)]))
            elif v in fixed:
                factors.append((mat[:, 0], [int(u)]))
            else:
                factors.append((mat, [int(u), int(v)]))
        free = [x for x in range(nv) if x not in fixed]
        for x in free:
            factors.append((np.ones(N), [x]))
        z = float(np.real(_contract.contract(factors, max_size=max_size)))
        num = None
        if charges is not None:
            f2 = list(factors)
            for x in free:
                if a[x]:
                    f2.append((np.exp(1j * a[x] * th), [x]))
            num = complex(_contract.contract(f2, max_size=max_size)).real
        logz = (log_const + ncomp * math.log(TWO_PI) + len(free) * math.log(TWO_PI / N)
                + sum(p.log_density_max() for p in pots) + math.log(z))
        return (logz if num is None else num / z), logz

    N = N0
    prev, _ = run(N)
    while True:
        N *= 2
        cur, logz = run(N)
        if abs(cur - prev) < tol or N >= N_max:
            return ExactResult(cur, abs(cur - prev), N, None, 0.0, logz, abs(cur - prev) < tol)
        prev = cur


# ---------------------------------------------------------------------------
# height engine


@dataclass
class _HeightProblem:
    nvar: int
    groups: dict  # (a, b) with b = -1 for the root -> list of EdgePotential
    log_const: float
    vmap: np.ndarray
    depth: np.ndarray
    tree: list  # list of group keys forming a BFS tree
    tree_path: dict  # var -> list of group keys on its path to the root


def _reduce_height(spec: GibbsSpec) -> _HeightProblem:
    g = spec.graph
    nv = g.num_vertices
    uf = _UF(nv + 1)  # index nv is the root
    ROOT = nv
    for x in spec.pinned:
        uf.union(x, ROOT)
    edges = list(zip(((e.u, e.v) for e in g.edges), spec.potentials))
    if spec.lam > 0:
        x0 = spec.lam_vertex if spec.lam_vertex is not None else g.origin
        edges.append(((x0, ROOT), EdgePotential.bessel(spec.lam)))
    for (u, v), p in edges:
        if p.kind == "frozen" or p.is_delta():
            uf.union(u, v)
    root = uf.find(ROOT)
    classes = sorted({uf.find(x) for x in range(nv + 1)} - {root})
    cid = {c: i for i, c in enumerate(classes)}
    cid[root] = -1
    vmap = np.array([cid[uf.find(x)] for x in range(nv)], dtype=np.int64)
    groups = defaultdict(list)
    log_const = 0.0
    for (u, v), p in edges:
        if p.kind in ("frozen", "free") or p.is_delta():
            continue
        a = cid[uf.find(u)]
        b = cid[uf.find(v)]
        if a == b:
            log_const += float(p.log_coefficient(0))
            continue
        if b == -1 or (a != -1 and a > b):
            a, b = b, a
        # canonical: root (-1) first
        key = (b, -1) if a == -1 else (a, b)
        groups[key].append(p)
        log_const += float(p.log_coefficient(0))
    nvar = len(classes)
    # BFS from the root through groups
    adj = defaultdict(list)
    for key in sorted(groups, key=lambda k: (k[1], k[0])):
        a, b = key
        adj[a].append((b, key))
        adj[b].append((a, key))
    depth = np.full(nvar, -1, dtype=np.int64)
    path = {}
    queue = deque([(-1, [])])
    seen = {-1}
    tree = []
    while queue:
        x, pth = queue.popleft()
        for y, key in adj[x]:
            if y not in seen:
                seen.add(y)
                tree.append(key)
                path[y] = pth + [key]
                depth[y] = len(pth) + 1
                queue.append((y, pth + [key]))
    if len(seen) != nvar + 1:
        raise StructureError("some heights are not tied to a pinned vertex; the measure "
                             "is not normalisable")
    return _HeightProblem(nvar, dict(groups), log_const, vmap, depth, tree, path)


def _group_weight(pots, deltas):
    """``prod_e c_e(delta) / c_e(0)`` on an integer array."""
    w = np.ones(deltas.shape)
    for p in pots:
        w = w * np.asarray(p.relative_coefficient(deltas), dtype=float)
    return w


def _group_tails(pots, K):
    """Bounds on ``sum_{|k|>K} w(k)`` and ``sum_{|k|>K} k^2 w(k)`` for a group."""
    best = None
    for p in pots:
        fs = fourier_coeffs(p, K)
        if best is None or fs.tail < best.tail:
            best = fs
    return best.tail, min(fourier_coeffs(p, K).tail2 for p in pots)


def _height_factors(prob: _HeightProblem, M: int, dense: bool = True):
    hs = np.arange(-M, M + 1)
    factors = []
    for (a, b), pots in prob.groups.items():
        if b == -1:
            factors.append((_group_weight(pots, hs), [a]))
        else:
            factors.append((_group_weight(pots, hs[:, None] - hs[None, :]), [a, b]))
    for x in range(prob.nvar):
        factors.append((np.ones(2 * M + 1), [x]))
    return factors


def _height_cost(prob, M, target=None):
    shapes = []
    n = 2 * M + 1
    for (a, b) in prob.groups:
        shapes.append((np.broadcast_to(np.float64(0), (n,) if b == -1 else (n, n)),
                       [a] if b == -1 else [a, b]))
    for x in range(prob.nvar):
        shapes.append((np.broadcast_to(np.float64(0), (n,)), [x]))
    return _contract.contraction_cost(shapes, output=() if target is None else (target,))


def _height_bound(prob, M, target):
    """Rigorous bounds on the discarded mass of ``Z`` and of ``phi_target^2``.

    Non-tree weights are bounded by one, which turns the sum into a
    product over tree edges. The event ``|phi_y| > M`` then only involves
    the root path of ``y``, whose height is a sum of independent steps;
    its tail is evaluated by convolution on ``|step| <= K`` plus a crude
    bound for larger steps.
    """
    K = 2 * M + 32
    ks = np.arange(-K, K + 1)
    W, S, S2, T, T2 = {}, {}, {}, {}, {}
    for key in prob.tree:
        w = _group_weight(prob.groups[key], ks)
        T[key], T2[key] = _group_tails(prob.groups[key], K)
        W[key] = w
        S[key] = float(w.sum()) + T[key]
        S2[key] = float((ks ** 2 * w).sum()) + T2[key]
    logPS = sum(math.log(S[k]) for k in prob.tree)

    def path_tail(P, second):
        conv = np.ones(1)
        for key in P:
            conv = np.convolve(conv, W[key])
        sv = np.arange(-len(P) * K, len(P) * K + 1)
        out = sv ** 2 if second else np.ones(len(sv))
        main = float((out * conv)[np.abs(sv) > M].sum())
        logSP = sum(math.log(S[k]) for k in P)
        extra = 0.0
        for e in P:
            rest = math.exp(logSP - math.log(S[e]))
            if not second:
                extra += T[e] * rest
                continue
            for f in P:
                if f == e:
                    extra += len(P) * T2[e] * rest
                else:
                    extra += len(P) * T[e] * S2[f] * rest / S[f]
        return math.exp(logPS - logSP) * (main + extra)

    zmiss = sum(path_tail(prob.tree_path[y], False) for y in range(prob.nvar))
    if target is None:
        return zmiss, 0.0
    nmiss = path_tail(prob.tree_path[target], True) + M * M * zmiss
    return zmiss, nmiss


def _gaussian_precision(prob):
    """Precision matrix when every group is Gaussian, else None."""
    Q = np.zeros((prob.nvar, prob.nvar))
    for (a, b), pots in prob.groups.items():
        if any(p.kind != "gaussian" for p in pots):
            return None
        c = sum(1.0 / p.beta for p in pots)
        Q[a, a] += c
        if b >= 0:
            Q[b, b] += c
            Q[a, b] -= c
            Q[b, a] -= c
    return Q


def _gaussian_bound(prob, M, target, G):
    """Tail bounds for purely Gaussian weights, in units of the exact ``Z``.

    By Poisson summation a lattice Gaussian has ``E exp(t phi_y) <=
    exp(t^2 G_yy / 2)`` with ``G`` the continuum covariance, so
    ``P(|phi_y| >= k) <= 2 exp(-k^2 / (2 G_yy))``.
    """
    g = np.diag(G)

    def tail(k, gy):
        return min(1.0, 2.0 * math.exp(-k * k / (2.0 * gy)))

    B = sum(tail(M + 1, gy) for gy in g)
    if target is None:
        return B, 0.0
    gy = g[target]
    t2 = (M + 1) ** 2 * tail(M + 1, gy)
    k = M + 2
    while True:
        term = (2 * k - 1) * tail(k, gy)
        t2 += term
        if term < 1e-300 or (k > M + 10 and term < 1e-18 * t2):
            break
        k += 1
    return B, t2 + M * M * B


def _bounds(prob, M, target, G, z=1.0):
    """``(zb, nb)`` relative to the truncated partition function ``z``.

    The truncated sum is at least one, so ``z = 1`` is a safe default
    before it is known.
    """
    zb, nb = _height_bound(prob, M, target)
    out = (zb / z, nb / z)
    if G is not None:
        B, T = _gaussian_bound(prob, M, target, G)
        if B < 1:
            out = (min(out[0], B / (1.0 - B)), min(out[1], T / (1.0 - B)))
    return out


def exact_height(spec: GibbsSpec, vertex: int | None = None, M: int | None = None,
                 tol: float = 1e-10, budget: float = 1e8, M_max: int = 400,
                 marginal: bool = False) -> ExactResult:
    """Exact ``Var[phi(vertex)]`` and ``log Z`` of a height model.

    Heights are pinned to zero on ``spec.pinned``; rigid edges (frozen or
    zero inverse temperature) merge their endpoints. When ``M`` is not
    given, the smallest cut-off whose rigorous bound is below ``tol`` is
    used, subject to the contraction ``budget`` (largest intermediate).

    Parameters
    ----------
    vertex : int, optional
        Target vertex; defaults to the origin. Pinned targets have zero
        variance.
    marginal : bool
        Also return the distribution of ``phi(vertex)`` in ``extra``.
    """
    g = spec.graph
    prob = _reduce_height(spec)
    if vertex is None:
        vertex = g.origin
    t = int(prob.vmap[vertex])
    target = None if t < 0 else t
    Q = _gaussian_precision(prob)
    G = np.linalg.inv(Q) if Q is not None and prob.nvar else None
    if M is None:
        chosen = None
        last_ok = None
        for Mc in range(1, M_max + 1):
            flops, largest = _height_cost(prob, Mc, target)
            if largest > budget:
                break
            last_ok = Mc
            zb, nb = _bounds(prob, Mc, target, G)
            if nb <= tol / 2 and zb <= tol * 1e-2:
                chosen = Mc
                break
        M = chosen or last_ok
        if M is None:
            raise ResourceError("even M = 1 exceeds the contraction budget")
    factors = _height_factors(prob, M)
    flops, _ = _contract.contraction_cost(factors, output=())
    if target is None:
        z = float(_contract.contract(factors, max_size=budget))
        var, pm = 0.0, None
    else:
        pm = np.asarray(_contract.contract(factors, output=[target], max_size=budget))
        z = float(pm.sum())
        hs = np.arange(-M, M + 1)
        var = float((hs ** 2 * pm).sum() / z)
    zb, nb = _bounds(prob, M, target, G, z)
    err = nb + var * zb if math.isfinite(zb) and math.isfinite(nb) else math.inf
    log_z = prob.log_const + math.log(z)
    res = ExactResult(var, err, None, M, flops, log_z, err <= tol)
    res.extra["z_rel_err"] = zb
    if marginal:
        res.extra["marginal"] = (np.arange(-M, M + 1), None if pm is None else pm / z)
    return res


def height_marginals(spec: GibbsSpec, vertices, M: int) -> np.ndarray:
    """Joint distribution of heights at ``vertices`` with cut-off ``M``."""
    prob = _reduce_height(spec)
    ids = [int(prob.vmap[v]) for v in vertices]
    if any(i < 0 for i in ids) or len(set(ids)) != len(ids):
        raise ArgumentError("targets must be distinct unpinned classes")
    factors = _height_factors(prob, M)
    p = np.asarray(_contract.contract(factors, output=ids))
    return p / p.sum()


# ---------------------------------------------------------------------------
# Wells disorder tables


@dataclass
class MeasureTable:
    """Probabilities over ``{0,1}^s`` with the partition values behind them.

    Row ``i`` corresponds to the configuration whose bit ``j`` is
    ``(i >> j) & 1`` for site ``sites[j]``.
    """

    sites: tuple
    probs: np.ndarray
    log_z: np.ndarray

    def __post_init__(self):
        if len(self.sites) > 20:
            raise ArgumentError("at most 20 disorder sites")
        if abs(self.probs.sum() - 1) > 1e-12 or np.any(self.probs <= 0):
            raise ArgumentError("table must be positive and normalised")

    @property
    def s(self) -> int:
        return len(self.sites)

    def config(self, i: int) -> dict:
        return {x: (i >> j) & 1 for j, x in enumerate(self.sites)}

    @classmethod
    def from_log_weights(cls, sites, log_w) -> "MeasureTable":
        log_w = np.asarray(log_w, dtype=float)
        p = np.exp(log_w - logsumexp(log_w))
        return cls(tuple(sites), p / p.sum(), log_w)

    @classmethod
    def product(cls, sites, q: float) -> "MeasureTable":
        s = len(sites)
        idx = np.arange(2 ** s)
        ones = np.array([bin(i).count("1") for i in idx])
        logw = ones * math.log(q) + (s - ones) * math.log(1 - q)
        return cls.from_log_weights(sites, logw)


def wells_disorder(make_spec: Callable[[dict], GibbsSpec], sites, engine: str = "auto",
                   **engine_kw) -> MeasureTable:
    """Table of ``nu(r)`` proportional to ``Z_r`` over the listed sites.

    ``make_spec(r)`` builds the model for a configuration ``r`` (a dict
    site -> 0/1). ``engine`` is ``angle``, ``height`` or ``auto`` (from
    ``spec.family``).
    """
    logs = []
    for i in range(2 ** len(sites)):
        r = {x: (i >> j) & 1 for j, x in enumerate(sites)}
        spec = make_spec(r)
        fam = spec.family if engine == "auto" else engine
        try:
            if fam == "angle":
                res = exact_angle(spec, None, **engine_kw)
            else:
                res = exact_height(spec, **engine_kw)
        except Exception as exc:  # pragma: no cover - annotated re-raise
            raise type(exc)(f"configuration {i} ({r}): {exc}") from exc
        logs.append(res.log_z)
    return MeasureTable.from_log_weights(sites, logs)


def conditional_open_max(table: MeasureTable) -> tuple:
    """``max_{x, rest} nu(r_x = 1 | rest)`` and the maximising ``(x, config)``."""
    p = table.probs
    best = (-1.0, None, None)
    idx = np.arange(len(p))
    for j, x in enumerate(table.sites):
        zero = idx[(idx >> j) & 1 == 0]
        one = zero | (1 << j)
        cond = p[one] / (p[one] + p[zero])
        k = int(np.argmax(cond))
        if cond[k] > best[0]:
            best = (float(cond[k]), x, table.config(int(one[k])))
    return best
