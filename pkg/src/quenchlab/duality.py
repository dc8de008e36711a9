"""Divergence-free angle configurations and the generalised XY model.

The space of edge angles with zero divergence (mod 2 pi) at every vertex,
ghost included, is a torus. A spanning tree ``T`` identifies it with the
angles on the free edges ``E \\ T``: every edge angle is an integer
combination of free angles (the extension matrix), and uniform free
angles push forward to the Haar measure.

The generalised XY model weights a configuration by
``exp(sum_e J_e cos theta_e)``; the ``lambda`` edge joins the origin to the
ghost. Its dual is the XY height function with the extra weight
``I_{phi(0)}(lambda)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _contract
from ._cycles import fundamental_cycles, spanning_forest, triangular_cycles
from .errors import ArgumentError, ResourceError, StructureError
from .exact import ExactResult, GibbsSpec, MeasureTable, conditional_open_max, exact_height
from .graph import LatticeGraph, build_lattice_box, ghost_augment, parallelize_edges, spanning_tree
from .potentials import EdgePotential

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class DivS1Space:
    """Zero-divergence angles on a ghost graph, parametrised by free edges.

    Attributes
    ----------
    graph : LatticeGraph
    tree : tuple of int
        Spanning tree edge ids.
    free : tuple of int
        Remaining edge ids, in increasing order.
    A : ndarray
        ``(E, m)`` integer extension matrix: ``theta = A psi mod 2 pi`` for
        free angles ``psi``; rows of free edges are unit vectors.
    """

    graph: LatticeGraph
    tree: tuple
    free: tuple
    A: np.ndarray

    @property
    def m(self) -> int:
        return len(self.free)

    def extend(self, psi) -> np.ndarray:
        """Edge angles in ``[0, 2 pi)`` from free angles (last axis)."""
        psi = np.asarray(psi, dtype=float)
        return np.mod(psi @ self.A.T, TWO_PI)

    def divergence(self, theta) -> np.ndarray:
        """Signed angle sum at each vertex, wrapped to ``(-pi, pi]``."""
        B = self.graph.incidence()
        s = np.asarray(theta) @ B.T
        return np.angle(np.exp(1j * s))


def build_divS1(g: LatticeGraph, tree=None, check: int = 100, seed: int = 0) -> DivS1Space:
    """Extension matrix of the divergence-free space for a spanning tree.

    The default tree is :func:`spanning_tree` (breadth-first from the ghost).
    ``check`` random free configurations are extended and their divergence
    verified to vanish.
    """
    if g.ghost is None:
        raise StructureError("graph needs a ghost vertex")
    if not g.is_connected():
        raise StructureError("graph is disconnected")
    tree = spanning_tree(g) if tree is None else tuple(sorted(tree))
    if len(tree) != g.num_vertices - 1:
        raise ArgumentError("tree must have |V| - 1 edges")
    ends = g.endpoints()
    C = fundamental_cycles(g.num_vertices, ends, tree)
    tset = set(tree)
    free = tuple(e for e in range(g.num_edges) if e not in tset)
    A = np.ascontiguousarray(C.T)
    sp = DivS1Space(g, tree, free, A)
    if check and sp.m:
        rng = np.random.default_rng(seed)
        th = sp.extend(rng.uniform(0, TWO_PI, size=(check, sp.m)))
        if np.max(np.abs(sp.divergence(th))) > 1e-12:
            raise StructureError("extension is not divergence free")
    return sp


def haar_sample(space: DivS1Space, seed=None, size: int | None = None) -> np.ndarray:
    """Haar-distributed edge angles (one row per sample when ``size`` is set)."""
    rng = np.random.default_rng(seed)
    shape = (space.m,) if size is None else (size, space.m)
    return space.extend(rng.uniform(0.0, TWO_PI, size=shape))


# ---------------------------------------------------------------------------
# generalised XY model


def ghost_graph(L: int, n: int = 1, d: int = 2) -> LatticeGraph:
    """``Lambda_L`` with ``n`` parallel edges, plus the ghost."""
    return ghost_augment(parallelize_edges(build_lattice_box(d, L), n))


def _rv(r, x):
    return 1.0 if r is None else float(r.get(x, 1))


def couplings(g: LatticeGraph, n: int, beta1: float, beta2: float, lam: float,
              r=None) -> np.ndarray:
    """Coupling of each edge of a ghost graph.

    Lattice copies ``1`` and ``n`` carry ``r beta1`` (first endpoint resp.
    second), the middle copies ``n beta2``; with ``n = 1`` the single copy
    carries ``r_x r_y beta1``. Ghost edges carry ``r_x beta1`` and the
    ``lambda`` edge carries ``lam``.
    """
    J = np.zeros(g.num_edges)
    for e in g.edges:
        base = e.slot.split("/")[0]
        if base == "lambda":
            J[e.id] = lam
        elif base == "ghost":
            x = e.u if e.v == g.ghost else e.v
            J[e.id] = _rv(r, x) * beta1
        elif n == 1:
            J[e.id] = _rv(r, e.u) * _rv(r, e.v) * beta1
        else:
            j = int(e.slot.rsplit("/", 1)[1])
            J[e.id] = (_rv(r, e.u) * beta1 if j == 1 else
                       _rv(r, e.v) * beta1 if j == n else n * beta2)
    return J


@dataclass
class GeneralizedXYSpec:
    space: DivS1Space
    J: np.ndarray
    lam_edge: int

    @classmethod
    def build(cls, L: int, n: int, beta1: float, beta2: float, lam: float, r=None,
              tree=None, d: int = 2) -> "GeneralizedXYSpec":
        g = ghost_graph(L, n, d)
        sp = build_divS1(g, tree)
        lam_edge = next(e.id for e in g.edges if e.slot == "lambda")
        return cls(sp, couplings(g, n, beta1, beta2, lam, r), lam_edge)


@dataclass
class SpinResult:
    """Expectations under the generalised XY model.

    ``values`` maps an observable name to its expectation; ``log_z`` is the
    log of the Haar integral of the weight.
    """

    values: dict
    log_z: float
    err: float
    N: int
    extra: dict = field(default_factory=dict)


def lambda_free_tree(g: LatticeGraph, lam_edge: int) -> tuple:
    """Breadth-first tree from the ghost that avoids the ``lambda`` edge."""
    ends = g.endpoints()
    keep = [e for e in range(g.num_edges) if e != lam_edge]
    tree, _, _ = spanning_forest(g.num_vertices, ends[keep], roots=(g.ghost,))
    if len(tree) != g.num_vertices - 1:
        return tuple(spanning_tree(g))
    return tuple(sorted(keep[t] for t in tree))


def parametrisation(space: DivS1Space, kind: str = "short", lam_edge: int | None = None):
    """Integer ``(E, m)`` matrix whose uniform pushforward is the Haar measure.

    ``tree`` is the space's own extension matrix; ``short`` uses a
    unimodular basis of short cycles built on a tree avoiding ``lam_edge``,
    so that edge's angle is the last basis variable.
    """
    if kind == "tree":
        return space.A
    if kind != "short":
        raise ArgumentError(f"unknown parametrisation {kind!r}")
    g = space.graph
    ends = g.endpoints()
    tree = space.tree if lam_edge is None else lambda_free_tree(g, lam_edge)
    last = () if lam_edge is None or lam_edge in tree else (lam_edge,)
    C = triangular_cycles(g.num_vertices, ends, tree, last)
    return np.ascontiguousarray(C.T)


def _edge_factors(A, J, N: int, max_size: float = 2e8):
    th = TWO_PI * np.arange(N) / N
    factors = []
    log_c = 0.0
    for e in range(A.shape[0]):
        idx = [int(i) for i in np.nonzero(A[e])[0]]
        if J[e] == 0:
            continue
        if float(N) ** len(idx) > max_size:
            raise ResourceError(f"edge {e} couples {len(idx)} variables at N = {N}")
        grids = np.ix_(*([th] * len(idx))) if idx else ()
        ang = sum(int(A[e, i]) * gq for i, gq in zip(idx, grids)) if idx else np.zeros(())
        factors.append((np.exp(J[e] * (np.cos(ang) - 1.0)), idx))
        log_c += J[e]
    for i in range(A.shape[1]):
        factors.append((np.full(N, 1.0 / N), [i]))
    return factors, log_c


_OBS = {
    "cos": np.cos,
    "cos2": lambda a: np.cos(2 * a),
    "cossq": lambda a: np.cos(a) ** 2,
}


def _lam_marginal(A, J, N, lam_edge, max_size):
    """Distribution of ``theta_0g`` on the grid and ``log`` of the Haar integral."""
    th = TWO_PI * np.arange(N) / N
    fac, log_c = _edge_factors(A, J, N, max_size)
    row = A[lam_edge]
    idx = np.nonzero(row)[0]
    if len(idx) == 1 and abs(row[idx[0]]) == 1:
        out = int(idx[0])
        w = np.asarray(_contract.contract(fac, output=[out], max_size=max_size))
        if row[out] < 0:
            w = np.roll(w[::-1], 1)
        z = float(w.sum())
        return th, w / z, log_c + math.log(z)
    # general position: one contraction per observable
    z = float(_contract.contract(fac, max_size=max_size))
    return None, (fac, z), log_c + math.log(z)


def spin_expectations(spec: GeneralizedXYSpec, observables=("cos", "cos2", "cossq"),
                      N0: int = 8, tol: float = 1e-9, N_max: int = 256,
                      max_size: float = 2e8, param: str = "short") -> SpinResult:
    """Periodic trapezoid rule in the Haar variables, doubling ``N`` until stable.

    Observables are functions of the ``lambda`` edge angle ``theta_0g``.
    """
    A = parametrisation(spec.space, param, spec.lam_edge)
    row = A[spec.lam_edge]
    th_idx = [int(i) for i in np.nonzero(row)[0]]

    def run(N):
        th, w, lz = _lam_marginal(A, spec.J, N, spec.lam_edge, max_size)
        if th is not None:
            return {k: float(np.dot(w, _OBS[k](th))) for k in observables}, lz
        fac, z = w
        grid = TWO_PI * np.arange(N) / N
        grids = np.ix_(*([grid] * len(th_idx)))
        ang = sum(int(row[i]) * gq for i, gq in zip(th_idx, grids))
        vals = {}
        for k in observables:
            f2 = fac + [(np.asarray(_OBS[k](ang), dtype=float), th_idx)]
            vals[k] = float(_contract.contract(f2, max_size=max_size)) / z
        return vals, lz

    N = N0
    prev, plz = run(N)
    while True:
        N *= 2
        if N > N_max:
            raise ResourceError(f"quadrature did not settle by N = {N_max}")
        cur, lz = run(N)
        diff = max([abs(cur[k] - prev[k]) for k in cur] + [abs(lz - plz)])
        if diff < tol:
            return SpinResult(cur, lz, diff, N)
        prev, plz = cur, lz


def height_spec(L: int, n: int, beta1: float, beta2: float, lam: float, r=None,
                d: int = 2) -> GibbsSpec:
    """Dual height model on the same ghost graph (ghost pinned at zero)."""
    g = ghost_graph(L, n, d)
    J = couplings(g, n, beta1, beta2, lam, r)
    return GibbsSpec(g, tuple(EdgePotential.bessel(j) for j in J), "height")


def exact_generalized_xy(spec: GeneralizedXYSpec, m: int = 1, **kw) -> ExactResult:
    """``<cos(m theta_0g)>`` for ``m`` in ``{1, 2}``."""
    if m not in (1, 2):
        raise ArgumentError("only m = 1 and m = 2 are supported")
    name = "cos" if m == 1 else "cos2"
    res = spin_expectations(spec, (name,), **kw)
    return ExactResult(res.values[name], res.err, res.N, None, 0.0, res.log_z)


@dataclass
class DualityReport:
    height: float
    spin: float
    spin_alt: float
    height_err: float
    spin_err: float
    log_z_height: float
    log_z_spin: float

    @property
    def diff(self) -> float:
        return abs(self.height - self.spin)

    @property
    def forms_diff(self) -> float:
        return abs(self.spin - self.spin_alt)

    @property
    def z_rel_err(self) -> float:
        return abs(math.expm1(self.log_z_height - self.log_z_spin))


def duality_check(L: int, n: int, beta1: float, beta2: float, lam: float, r=None,
                  d: int = 2, **kw) -> DualityReport:
    """Both sides of the variance identity and of ``Z`` (height vs Haar integral)."""
    hs = exact_height(height_spec(L, n, beta1, beta2, lam, r, d), tol=1e-12)
    spec = GeneralizedXYSpec.build(L, n, beta1, beta2, lam, r, d=d)
    sr = spin_expectations(spec, **kw)
    v = sr.values
    spin = lam * v["cos"] + lam ** 2 / 2 * v["cos2"] - lam ** 2 / 2
    alt = lam * v["cos"] + lam ** 2 * v["cossq"] - lam ** 2
    # the spin side has the Haar measure; the height sum has no volume factor
    return DualityReport(hs.value, spin, alt, hs.err, sr.err * (lam + lam ** 2),
                         hs.log_z, sr.log_z)


def wells_generalized(L: int, n: int, beta1: float, beta2: float, lam: float, m: int = 1,
                      d: int = 2, **kw) -> tuple:
    """``(clean at beta1/2, Wells average at beta1, table)`` of ``<cos(m theta_0g)>``.

    Disorder sites are the lattice vertices; ``nu(r)`` is proportional to the
    partition function of the disordered model.
    """
    g = ghost_graph(L, n, d)
    sites = [i for i, rr in enumerate(g.roles) if rr == "lattice"]
    name = "cos" if m == 1 else "cos2"
    logs, vals = [], []
    for i in range(2 ** len(sites)):
        r = {x: (i >> j) & 1 for j, x in enumerate(sites)}
        res = spin_expectations(GeneralizedXYSpec.build(L, n, beta1, beta2, lam, r, d=d),
                                (name,), **kw)
        logs.append(res.log_z)
        vals.append(res.values[name])
    table = MeasureTable.from_log_weights(sites, logs)
    clean = spin_expectations(GeneralizedXYSpec.build(L, n, beta1 / 2, beta2, lam, d=d),
                              (name,), **kw)
    return clean.values[name], float(np.dot(table.probs, vals)), table


def lambda_limit(L: int, n: int, beta1: float, beta2: float, lams=(10.0, 20.0, 40.0),
                 d: int = 2) -> np.ndarray:
    """``|Var_lambda[phi(0)] - Var[phi(0)]|`` for each ``lambda``.

    The reference drops the ``lambda`` edge, leaving the height function
    pinned at the ghost.
    """
    ref = exact_height(height_spec(L, n, beta1, beta2, 0.0, d=d).replace_potential(
        _lam_edge(L, n, d), EdgePotential.free()), tol=1e-12).value
    out = []
    for lam in lams:
        out.append(abs(exact_height(height_spec(L, n, beta1, beta2, lam, d=d), tol=1e-12).value
                       - ref))
    return np.array(out)


def _lam_edge(L, n, d):
    g = ghost_graph(L, n, d)
    return next(e.id for e in g.edges if e.slot == "lambda")


def domination(table: MeasureTable, beta1: float, d: int = 2) -> tuple:
    """``(max conditional, p0)`` for a Wells table."""
    return conditional_open_max(table)[0], 1.0 / (1.0 + math.exp(-2 * d * beta1))
