"""Bernoulli disorder, dual configurations, good boxes and crossing paths.

Edge configurations on a square box ``{-R..R}^2`` are also viewed as two
arrays: ``h[x+R, y+R]`` for the edge ``(x,y)-(x+1,y)`` and ``v[x+R, y+R]``
for ``(x,y)-(x,y+1)``. Dual vertex ``(i, j)`` stands for the point
``(i + 1/2, j + 1/2)``.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ArgumentError, GeometryError, PathValidationError
from .exact import MeasureTable, conditional_open_max
from .graph import LatticeGraph, build_lattice_box, vertex_components


# ---------------------------------------------------------------------------
# configurations


@dataclass(frozen=True)
class DisorderConfig:
    """A 0/1 field on the vertices (``site``) or edges (``edge``) of a graph."""

    kind: str
    bits: np.ndarray
    graph: LatticeGraph
    seed: int | None = None
    p: float | None = None

    def __post_init__(self):
        if self.kind not in ("site", "edge"):
            raise ArgumentError(f"unknown kind {self.kind!r}")
        n = self.graph.num_vertices if self.kind == "site" else self.graph.num_edges
        if len(self.bits) != n:
            raise ArgumentError(f"{len(self.bits)} bits for {n} {self.kind}s")

    def as_dict(self) -> dict:
        return {i: int(b) for i, b in enumerate(self.bits)}


def sample_bernoulli(g: LatticeGraph, kind: str, p: float, seed=None) -> DisorderConfig:
    """I.i.d. Bernoulli(p) bits; non-lattice sites are always open."""
    if not 0.0 <= p <= 1.0:
        raise ArgumentError("p must lie in [0, 1]")
    if kind not in ("site", "edge"):
        raise ArgumentError(f"unknown kind {kind!r}")
    n = g.num_vertices if kind == "site" else g.num_edges
    rng = np.random.default_rng(seed)
    bits = (rng.random(n) < p).astype(np.uint8)
    if kind == "site":
        bits[np.array([r != "lattice" for r in g.roles], dtype=bool)] = 1
    return DisorderConfig(kind, bits, g, seed, p)


@lru_cache(maxsize=16)
def square_box(R: int) -> LatticeGraph:
    """Cached ``build_lattice_box(2, R)``."""
    return build_lattice_box(2, R)


@lru_cache(maxsize=16)
def _box_index(R: int):
    g = square_box(R)
    c = np.array(g.coords, dtype=np.int64) + R
    ends = g.endpoints()
    du = c[ends[:, 1]] - c[ends[:, 0]]
    horiz = du[:, 0] == 1
    base = c[ends[:, 0]]
    return horiz, base


def box_arrays(cfg: DisorderConfig) -> tuple:
    """``(h, v)`` arrays of an edge configuration on ``square_box(R)``."""
    g = cfg.graph
    R = g.L
    if cfg.kind != "edge" or g.d != 2 or R is None or g.num_vertices != (2 * R + 1) ** 2:
        raise ArgumentError("need an edge configuration on a square box")
    horiz, base = _box_index(R)
    h = np.zeros((2 * R, 2 * R + 1), dtype=np.uint8)
    v = np.zeros((2 * R + 1, 2 * R), dtype=np.uint8)
    h[base[horiz, 0], base[horiz, 1]] = cfg.bits[horiz]
    v[base[~horiz, 0], base[~horiz, 1]] = cfg.bits[~horiz]
    return h, v


def from_box_arrays(h, v, seed=None, p=None) -> DisorderConfig:
    R = h.shape[0] // 2
    horiz, base = _box_index(R)
    bits = np.empty(len(horiz), dtype=np.uint8)
    bits[horiz] = h[base[horiz, 0], base[horiz, 1]]
    bits[~horiz] = v[base[~horiz, 0], base[~horiz, 1]]
    return DisorderConfig("edge", bits, square_box(R), seed, p)


def sample_box_edges(R: int, p: float, seed=None) -> DisorderConfig:
    """Bernoulli edge configuration on ``square_box(R)``."""
    return sample_bernoulli(square_box(R), "edge", p, seed)


@dataclass(frozen=True)
class DualConfig:
    """Dual edge bits of a primal box configuration.

    ``dh[a, b]`` is the dual edge ``(a-R-1, b-R)-(a-R, b-R)`` and ``dv[a, b]``
    the dual edge ``(a-R, b-R-1)-(a-R, b-R)``. Dual vertices run over
    ``[-R-1, R]^2``; only dual edges crossing a primal edge are stored.
    """

    R: int
    dh: np.ndarray
    dv: np.ndarray

    @property
    def bits(self) -> np.ndarray:
        return np.concatenate([self.dh.ravel(), self.dv.ravel()])


def dual_config(w):
    """``w*_e* = 1 - w_e``; maps primal to dual and dual back to primal."""
    if isinstance(w, DualConfig):
        return from_box_arrays(1 - w.dv, 1 - w.dh)
    if not isinstance(w, DisorderConfig) or w.kind != "edge" or w.graph.d != 2:
        raise ArgumentError("dual configurations need a 2D edge configuration")
    h, v = box_arrays(w)
    return DualConfig(w.graph.L, (1 - v).astype(np.uint8), (1 - h).astype(np.uint8))


# ---------------------------------------------------------------------------
# good boxes


def rectangle_sizes(L: int, micro: bool = False) -> tuple:
    """``(short, long, half-size of the box)`` for scale ``L``.

    The micro mode uses a ``1 x (2L + 2)`` rectangle and keeps the box size;
    the long side must span both neighbouring strips so that the crossings
    around a cell close up.
    """
    H = math.ceil(11 * L / 10)
    if micro:
        return 1, 2 * L + 2, H
    return math.ceil(L / 100), math.ceil(22 * L / 10), H


def _closed_graph(ds: DualConfig, i0, j0, i1, j1):
    """Closed dual edges inside the vertex rectangle ``[i0,i1] x [j0,j1]``."""
    R = ds.R
    if i0 < -R or j0 < -R or i1 > R - 1 or j1 > R - 1:
        raise GeometryError(f"rectangle {(i0, j0, i1, j1)} leaves the configuration")
    W, Hh = i1 - i0 + 1, j1 - j0 + 1
    # horizontal dual edges (i,j)-(i+1,j): dh[i+R+1, j+R]
    hcl = ds.dh[i0 + R + 1:i1 + R + 1, j0 + R:j1 + R + 1] == 0
    vcl = ds.dv[i0 + R:i1 + R + 1, j0 + R + 1:j1 + R + 1] == 0
    ids = np.arange(W * Hh).reshape(W, Hh)
    a = np.concatenate([ids[:-1, :][hcl], ids[:, :-1][vcl]])
    b = np.concatenate([ids[1:, :][hcl], ids[:, 1:][vcl]])
    return W, Hh, ids, a, b


def crossed(ds: DualConfig, rect, horizontal: bool) -> bool:
    """Whether closed dual edges cross ``rect`` between its short sides."""
    W, Hh, ids, a, b = _closed_graph(ds, *rect)
    n = W * Hh
    src, dst = n, n + 1
    s_side = ids[0, :] if horizontal else ids[:, 0]
    t_side = ids[-1, :] if horizontal else ids[:, -1]
    rows = np.concatenate([a, np.full(len(s_side), src), np.full(len(t_side), dst)])
    cols = np.concatenate([b, s_side, t_side])
    m = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n + 2, n + 2))
    _, lab = connected_components(m, directed=False)
    return bool(lab[src] == lab[dst])


@dataclass
class GoodBoxReport:
    center: tuple
    L: int
    verdict: bool
    checked: int = 0
    failures: list = field(default_factory=list)


def good_box(ds: DualConfig, x, L: int, micro: bool = False, full: bool = False) -> GoodBoxReport:
    """Whether every admissible rectangle in ``x + box`` is long-crossed.

    Rectangles are enumerated horizontally then vertically, lower-left
    corner in lexicographic order. Unless ``full`` the scan stops at the
    first failure, which is kept as the witness.
    """
    if not micro and L < 10:
        raise ArgumentError("good boxes need L >= 10 outside micro mode")
    if L < 1:
        raise ArgumentError("L must be positive")
    s, ell, H = rectangle_sizes(L, micro)
    xi, xj = int(x[0]), int(x[1])
    rep = GoodBoxReport((xi, xj), L, True)
    for horizontal in (True, False):
        w, h = (ell, s) if horizontal else (s, ell)
        for i0 in range(xi - H, xi + H - w + 1):
            for j0 in range(xj - H, xj + H - h + 1):
                rect = (i0, j0, i0 + w, j0 + h)
                rep.checked += 1
                if not crossed(ds, rect, horizontal):
                    rep.verdict = False
                    rep.failures.append((rect, horizontal))
                    if not full:
                        return rep
    return rep


def coarse_center(z, L0: int) -> tuple:
    """Dual index of the centre of coarse cell ``z``."""
    return tuple((2 * L0 + 1) * int(c) for c in z)


def required_radius(L0: int, window: int, micro: bool = False) -> int:
    """Smallest primal box radius on which a coarse window can be analysed."""
    _, _, H = rectangle_sizes(L0, micro)
    return (2 * L0 + 1) * window + H + 1


def renormalized_sites(w, L0: int, window: int = 1, micro: bool = False) -> DisorderConfig:
    """Coarse site field on ``{-window..window}^2``: open iff the cell is good."""
    ds = w if isinstance(w, DualConfig) else dual_config(w)
    if not micro and L0 < 10:
        raise ArgumentError("L0 >= 10 required outside micro mode")
    cg = square_box(window)
    bits = np.zeros(cg.num_vertices, dtype=np.uint8)
    for i, c in enumerate(cg.coords):
        bits[i] = good_box(ds, coarse_center(c, L0), L0, micro).verdict
    return DisorderConfig("site", bits, cg)


def bridge_rectangle(z, axis: int, L0: int, micro: bool = False) -> tuple:
    """Rectangle straddling the common side of cells ``z`` and ``z + e_axis``.

    Returns ``(rect, horizontal)``; the long side is parallel to the common
    side, so the crossing runs along the other axis.
    """
    s, ell, _ = rectangle_sizes(L0, micro)
    c = coarse_center(z, L0)
    lo = c[1 - axis] - ell // 2
    a0 = c[axis] + L0
    if axis == 0:
        return (a0, lo, a0 + s, lo + ell), False
    return (lo, a0, lo + ell, a0 + s), True


def _bfs(adj, sources):
    dist = {v: 0 for v in sources}
    queue = deque(sorted(sources))
    while queue:
        x = queue.popleft()
        for y in adj.get(x, ()):
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    return dist


def crossing_path(ds: DualConfig, rect, horizontal: bool):
    """Shortest closed-dual path between the short sides, lexicographically least.

    Returns the vertex sequence as a list of dual indices, or None.
    """
    i0, j0, i1, j1 = rect
    W, Hh, ids, a, b = _closed_graph(ds, *rect)
    adj = {}
    for u, v in zip(a.tolist(), b.tolist()):
        pu = (i0 + u // Hh, j0 + u % Hh)
        pv = (i0 + v // Hh, j0 + v % Hh)
        adj.setdefault(pu, []).append(pv)
        adj.setdefault(pv, []).append(pu)
    if horizontal:
        S = [(i0, j) for j in range(j0, j1 + 1)]
        T = [(i1, j) for j in range(j0, j1 + 1)]
    else:
        S = [(i, j0) for i in range(i0, i1 + 1)]
        T = [(i, j1) for i in range(i0, i1 + 1)]
    ds_ = _bfs(adj, S)
    dt = _bfs(adj, T)
    reach = [t for t in T if t in ds_]
    if not reach:
        return None
    D = min(ds_[t] for t in reach)
    cur = min(s for s in S if dt.get(s) == D)
    path = [cur]
    while dt[cur] > 0:
        cur = min(y for y in adj[cur] if ds_.get(y) == ds_[cur] + 1 and dt.get(y) == dt[cur] - 1)
        path.append(cur)
    return path


def primal_of_dual(p, q) -> tuple:
    """Primal edge crossed by the dual edge between dual vertices ``p`` and ``q``."""
    (i, j), (k, l) = sorted([tuple(p), tuple(q)])
    if j == l:  # horizontal dual edge (i,j)-(i+1,j)
        return ((i + 1, j), (i + 1, j + 1))
    return ((i, j + 1), (i + 1, j + 1))


@dataclass
class CrossingPaths:
    dual_edges: frozenset
    primal_edges: frozenset
    paths: dict


def extract_crossing_paths(ds: DualConfig, r1: DisorderConfig, L0: int,
                           micro: bool = False, validate: bool = True) -> CrossingPaths:
    """One crossing path per coarse edge joining two open cells.

    ``primal_edges`` are pairs of integer points ``(a, b)`` with ``a < b``.
    With ``validate`` every component of the window minus these edges that
    does not touch the window border must contain a point of
    ``(2 L0 + 1) Z^2``; otherwise PathValidationError carries it.
    """
    W = r1.graph.L
    cg = r1.graph
    idx = {tuple(int(t) for t in c): i for i, c in enumerate(cg.coords)}
    paths = {}
    dual = set()
    for z, i in sorted(idx.items()):
        if not r1.bits[i]:
            continue
        for axis in (0, 1):
            nb = list(z)
            nb[axis] += 1
            j = idx.get(tuple(nb))
            if j is None or not r1.bits[j]:
                continue
            rect, horizontal = bridge_rectangle(z, axis, L0, micro)
            path = crossing_path(ds, rect, horizontal)
            if path is None:
                raise PathValidationError(f"no crossing of {rect} between open cells {z}", [])
            paths[(z, tuple(nb))] = path
            for p, q in zip(path[:-1], path[1:]):
                dual.add(tuple(sorted((p, q))))
    primal = frozenset(primal_of_dual(p, q) for p, q in dual)
    out = CrossingPaths(frozenset(dual), primal, paths)
    if validate:
        check_components(out, L0, W)
    return out


def window_radius(L0: int, window: int) -> int:
    """Primal radius of the union of the coarse cells of a window."""
    return (2 * L0 + 1) * window + L0


def check_components(cp: CrossingPaths, L0: int, window: int) -> None:
    Rw = window_radius(L0, window)
    g = square_box(Rw)
    cut = cp.primal_edges
    keep = []
    for e in g.edges:
        a = tuple(int(t) for t in g.coords[e.u])
        b = tuple(int(t) for t in g.coords[e.v])
        if (a, b) not in cut:
            keep.append((e.u, e.v))
    ncomp, lab = vertex_components(g.num_vertices, keep)
    coords = np.array(g.coords, dtype=np.int64)
    border = np.zeros(ncomp, dtype=bool)
    border[lab[list(g.boundary)]] = True
    centre = np.zeros(ncomp, dtype=bool)
    on_grid = np.all(coords % (2 * L0 + 1) == 0, axis=1)
    centre[lab[on_grid]] = True
    bad = np.nonzero(~border & ~centre)[0]
    if len(bad):
        comp = [tuple(int(t) for t in coords[x]) for x in np.nonzero(lab == bad[0])[0]]
        raise PathValidationError(f"component of {len(comp)} sites without a cell centre", comp)


# ---------------------------------------------------------------------------
# stochastic domination


@dataclass
class DominationReport:
    max_conditional: float
    p: float
    passed: bool
    site: object
    config: dict


def check_conditional_domination(nu: MeasureTable, p: float, slack: float = 0.0) -> DominationReport:
    """Sufficient criterion for domination by Bernoulli site percolation.

    Passes iff ``nu(r_x = 1 | rest) <= p + slack`` for every site and
    every configuration of the other sites.
    """
    if np.any(nu.probs <= 0):
        raise ArgumentError("measure must be strictly positive")
    m, x, cfg = conditional_open_max(nu)
    return DominationReport(m, p, m <= p + slack, x, cfg)


# ---------------------------------------------------------------------------
# text format


def dumps(cfg: DisorderConfig) -> str:
    """Run-length encoding: header ``kind n seed p`` then ``bit:count`` runs."""
    bits = np.asarray(cfg.bits, dtype=np.uint8)
    runs = []
    i = 0
    while i < len(bits):
        j = i
        while j < len(bits) and bits[j] == bits[i]:
            j += 1
        runs.append(f"{int(bits[i])}:{j - i}")
        i = j
    seed = "-" if cfg.seed is None else str(cfg.seed)
    p = "-" if cfg.p is None else repr(float(cfg.p))
    return f"{cfg.kind} {len(bits)} {seed} {p}\n" + " ".join(runs) + "\n"


def loads(text: str, graph: LatticeGraph) -> DisorderConfig:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    kind, n, seed, p = lines[0].split()
    bits = []
    for tok in " ".join(lines[1:]).split():
        b, c = tok.split(":")
        bits += [int(b)] * int(c)
    if len(bits) != int(n):
        raise ArgumentError("run lengths do not add up to the header count")
    return DisorderConfig(kind, np.array(bits, dtype=np.uint8), graph,
                          None if seed == "-" else int(seed), None if p == "-" else float(p))
