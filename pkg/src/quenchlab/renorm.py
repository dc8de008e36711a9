"""Coarse graining of a supercritical edge configuration.

Pipeline: dual configuration, good cells, crossing paths ``C*``, the
thinned configuration ``w_C`` (open exactly on the primal edges ``C``
dual to ``C*``) and finally a height model on the coarse box with
diagonal edges. Each step can only lower ``Var[phi(0)]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError
from .exact import GibbsSpec, exact_height
from .graph import LatticeGraph, _make_edges, edge_sites, vertex_components, with_exterior
from .percolation import (CrossingPaths, DisorderConfig, box_arrays, dual_config,
                          extract_crossing_paths, renormalized_sites, required_radius,
                          square_box, window_radius)
from .potentials import EdgePotential

_DIRS = {(1, 0): "nn", (0, 1): "nn", (1, 1): "diag", (1, -1): "diag"}


@dataclass
class CoarseSpec:
    """Coarse height model built from one edge configuration.

    Attributes
    ----------
    graph : LatticeGraph
        Coarse box ``{-window..window}^2`` plus one exterior vertex.
        Slots: ``nn`` and ``diag`` for the box edges with diagonals,
        ``extra`` for couplings between cells that are not neighbours
        (including the exterior), ``rigid`` for cells sharing a component.
    spec : GibbsSpec
    r1 : DisorderConfig
        Good-cell field.
    counts : dict
        ``(coarse u, coarse v) -> number of C-edges`` between their components.
    component : np.ndarray
        Component label of every vertex of the fine graph.
    omega_c : np.ndarray
        Bits of the thinned configuration on the fine graph edges.
    """

    L0: int
    window: int
    beta: float
    graph: LatticeGraph
    spec: GibbsSpec
    r1: DisorderConfig
    counts: dict
    component: np.ndarray
    omega_c: np.ndarray
    fine: LatticeGraph
    omega: np.ndarray
    paths: CrossingPaths = None
    extra: dict = field(default_factory=dict)


def fine_graph(L0: int, window: int) -> LatticeGraph:
    """Dirichlet box covering the coarse window, with an exterior vertex."""
    return with_exterior(square_box(window_radius(L0, window)))


def restrict(w: DisorderConfig, fine: LatticeGraph) -> np.ndarray:
    """Bits of a box configuration on the edges of ``fine`` (exterior edges included)."""
    h, v = box_arrays(w)
    R = w.graph.L
    out = np.zeros(fine.num_edges, dtype=np.uint8)
    for i, (a, b) in enumerate(edge_sites(fine)):
        a, b = sorted([a, b])
        if max(abs(c) for c in a + b) > R:
            raise ArgumentError("configuration does not cover the fine box")
        if b[0] == a[0] + 1:
            out[i] = h[a[0] + R, a[1] + R]
        else:
            out[i] = v[a[0] + R, a[1] + R]
    return out


def fine_spec(fine: LatticeGraph, bits, beta: float) -> GibbsSpec:
    """Integer Gaussian field: open edges at ``beta``, closed edges rigid."""
    pots = tuple(EdgePotential.gaussian(beta) if b else EdgePotential.frozen() for b in bits)
    return GibbsSpec(fine, pots, "height")


def _merge_pockets(fine: LatticeGraph, in_c: np.ndarray, centres) -> tuple:
    """Components of ``fine`` minus ``in_c``, with centre-free pockets merged.

    A pocket (a component holding neither a cell centre nor the exterior)
    loses its C-edges towards one neighbouring component, chosen with the
    smallest label. Edited in place; returns ``(labels, merges)``.
    """
    ext = fine.num_vertices - 1
    uv = fine.endpoints()
    merges = 0
    while True:
        _, comp = vertex_components(fine.num_vertices, uv[~in_c].tolist())
        good = set(int(comp[x]) for x in centres) | {int(comp[ext])}
        cu, cv = comp[uv[:, 0]], comp[uv[:, 1]]
        bad = [k for k in np.unique(comp) if int(k) not in good]
        if not bad:
            return comp, merges
        k = bad[0]
        touch = in_c & ((cu == k) ^ (cv == k))
        if not touch.any():
            raise ArgumentError("isolated component without a cell centre")
        other = np.where(cu == k, cv, cu)
        target = other[touch].min()
        in_c[touch & (other == target)] = False
        merges += 1


def coarse_grain(w: DisorderConfig, L0: int, beta: float, window: int = 1,
                 micro: bool = False) -> CoarseSpec:
    """Build the coarse height model of an edge configuration.

    ``w`` must live on ``square_box(R)`` with ``R >= required_radius``.
    """
    if w.graph.L < required_radius(L0, window, micro):
        raise ArgumentError("configuration too small for the requested window")
    ds = dual_config(w)
    r1 = renormalized_sites(ds, L0, window, micro)
    cp = extract_crossing_paths(ds, r1, L0, micro, validate=False)
    fine = fine_graph(L0, window)
    sites = edge_sites(fine)
    omega = restrict(w, fine)
    in_c = np.array([tuple(sorted(ab)) in cp.primal_edges for ab in sites], dtype=bool)
    if np.any(in_c & (omega == 0)):
        raise ArgumentError("crossing path uses a closed primal edge")
    cg = square_box(window)
    ncg = cg.num_vertices
    fidx = {tuple(int(t) for t in c): i for i, c in enumerate(fine.coords[:-1])}
    centres = [fidx[tuple(int((2 * L0 + 1) * t) for t in c)] for c in cg.coords]
    comp, repaired = _merge_pockets(fine, in_c, centres)
    omega_c = in_c.astype(np.uint8)

    ext = fine.num_vertices - 1
    # representative coarse vertex of every component; cells sharing one are tied
    rep = {int(comp[ext]): ncg}
    rigid = []
    for i, x in enumerate(centres):
        k = int(comp[x])
        if k in rep:
            rigid.append((rep[k], i))
        else:
            rep[k] = i
    counts = {}
    for e, c in zip(fine.edges, in_c):
        if not c:
            continue
        a, b = rep.get(int(comp[e.u])), rep.get(int(comp[e.v]))
        if a is None or b is None:
            raise ArgumentError("a C-edge touches a component without a cell centre")
        if a == b:
            continue
        key = (min(a, b), max(a, b))
        counts[key] = counts.get(key, 0) + 1

    cidx = {tuple(int(t) for t in c): i for i, c in enumerate(cg.coords)}
    triples, pots = [], []
    seen = set()
    for c, i in sorted(cidx.items(), key=lambda t: t[1]):
        for d, slot in _DIRS.items():
            j = cidx.get((c[0] + d[0], c[1] + d[1]))
            if j is None:
                continue
            key = (min(i, j), max(i, j))
            seen.add(key)
            if slot == "nn" and not (r1.bits[i] and r1.bits[j]):
                p = EdgePotential.frozen()
            elif key in counts:
                p = EdgePotential.gaussian(beta / counts[key])
            else:
                p = EdgePotential.free()
            triples.append((i, j, slot))
            pots.append(p)
    for key, n in sorted(counts.items()):
        if key not in seen:
            triples.append((key[0], key[1], "extra"))
            pots.append(EdgePotential.gaussian(beta / n))
    for a, b in rigid:
        triples.append((a, b, "rigid"))
        pots.append(EdgePotential.frozen())
    graph = LatticeGraph(2, cg.coords + ((float("nan"),) * 2,),
                         ("lattice",) * ncg + ("exterior",), _make_edges(triples),
                         cg.boundary, window)
    spec = GibbsSpec(graph, tuple(pots), "height")
    return CoarseSpec(L0, window, beta, graph, spec, r1, counts, comp, omega_c, fine,
                      omega, cp, {"pockets_merged": repaired})


def bound_chain(w: DisorderConfig, L0: int, beta: float, window: int = 1,
                micro: bool = True, tol: float = 1e-10, **kw) -> list:
    """``[(label, ExactResult)]`` for the fine, thinned and coarse models.

    The values should be non-increasing along the list.
    """
    cs = coarse_grain(w, L0, beta, window, micro)
    fine = cs.fine
    v0 = exact_height(fine_spec(fine, cs.omega, beta), tol=tol, **kw)
    v1 = exact_height(fine_spec(fine, cs.omega_c, beta), tol=tol, **kw)
    origin = cs.graph.index_of((0.0, 0.0))
    v2 = exact_height(cs.spec, vertex=origin, tol=tol, **kw)
    return [("fine", v0), ("thinned", v1), ("coarse", v2)]


def chain_margins(chain, rtol: float = 1e-12) -> list:
    """Differences ``value[i] - value[i+1]`` with the matching error slack.

    The slack adds rounding at ``rtol`` to the certified errors, since the
    thinned and coarse values agree exactly in exact arithmetic.
    """
    out = []
    for (la, a), (lb, b) in zip(chain[:-1], chain[1:]):
        slack = a.err + b.err + rtol * max(abs(a.value), abs(b.value))
        out.append((f"{la}>={lb}", a.value - b.value, slack))
    return out
