"""Finite lattice graphs and the surgeries applied to them.

Graphs are immutable. Vertex ids are dense integers: lattice vertices come
first in row-major coordinate order, then subdivision vertices, then a
ghost or exterior vertex. Every edge is stored once with ``u < v``, which
fixes its orientation.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ArgumentError, SizeError, StateError, StructureError

MAX_VERTICES = 5_000_000

ROLES = ("lattice", "subdivision", "ghost", "exterior")


@dataclass(frozen=True)
class Edge:
    id: int
    u: int
    v: int
    k: int = 1
    slot: str = "bulk"


@dataclass(frozen=True)
class LatticeGraph:
    """Finite multigraph with an embedding.

    Attributes
    ----------
    d : int
        Dimension of the ambient lattice.
    coords : tuple of tuple of float
        Position of each vertex; the ghost sits at NaN.
    roles : tuple of str
        One of ``lattice``, ``subdivision``, ``ghost``, ``exterior``. The
        ``exterior`` vertex stands for every site outside a finite region
        and is always held at height zero.
    edges : tuple of Edge
    boundary : frozenset of int
        Inner boundary of the underlying box or region.
    L : int or None
        Box radius when the graph is built from a box.
    n : int
        Subdivision or multiplicity parameter, for bookkeeping only.
    """

    d: int
    coords: tuple
    roles: tuple
    edges: tuple
    boundary: frozenset = field(default_factory=frozenset)
    L: int | None = None
    n: int = 1

    def __post_init__(self):
        nv = len(self.coords)
        if len(self.roles) != nv:
            raise StructureError("roles and coords differ in length")
        seen = set()
        for i, e in enumerate(self.edges):
            if e.id != i:
                raise StructureError("edge ids must be dense and ordered")
            if not (0 <= e.u < nv and 0 <= e.v < nv) or e.u >= e.v:
                raise StructureError(f"bad endpoints on edge {e}")
            key = (e.u, e.v, e.k)
            if key in seen:
                raise StructureError(f"duplicate parallel index on edge {e}")
            seen.add(key)
        if sum(r == "ghost" for r in self.roles) > 1:
            raise StructureError("more than one ghost vertex")

    # basic queries
    @property
    def num_vertices(self) -> int:
        return len(self.coords)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def ghost(self) -> int | None:
        for i, r in enumerate(self.roles):
            if r == "ghost":
                return i
        return None

    @property
    def frozen(self) -> tuple:
        """Vertices pinned to height zero (exterior vertices)."""
        return tuple(i for i, r in enumerate(self.roles) if r == "exterior")

    @property
    def origin(self) -> int:
        return self.index_of((0,) * self.d)

    def index_of(self, coord) -> int:
        target = tuple(float(c) for c in coord)
        for i, c in enumerate(self.coords):
            if c == target and self.roles[i] != "ghost":
                return i
        raise ArgumentError(f"no vertex at {coord}")

    def endpoints(self) -> np.ndarray:
        """``(E, 2)`` integer array of oriented endpoints."""
        if not self.edges:
            return np.zeros((0, 2), dtype=np.int64)
        return np.array([(e.u, e.v) for e in self.edges], dtype=np.int64)

    def incidence(self) -> np.ndarray:
        """``(V, E)`` matrix with ``+1`` at the tail ``u`` and ``-1`` at ``v``."""
        B = np.zeros((self.num_vertices, self.num_edges), dtype=np.int64)
        for e in self.edges:
            B[e.u, e.id] += 1
            B[e.v, e.id] -= 1
        return B

    def degree(self, x: int) -> int:
        return sum((e.u == x) + (e.v == x) for e in self.edges)

    def neighbours(self) -> list:
        """Adjacency lists of ``(neighbour, edge id)`` sorted by edge id."""
        adj = [[] for _ in range(self.num_vertices)]
        for e in self.edges:
            adj[e.u].append((e.v, e.id))
            adj[e.v].append((e.u, e.id))
        return adj

    def components(self, edge_ids=None) -> tuple:
        """Connected components using only ``edge_ids`` (default: all)."""
        ids = range(self.num_edges) if edge_ids is None else list(edge_ids)
        uv = [(self.edges[i].u, self.edges[i].v) for i in ids]
        return vertex_components(self.num_vertices, uv)

    def is_connected(self) -> bool:
        return self.components()[0] <= 1


def vertex_components(nv: int, pairs) -> tuple:
    """``(count, labels)`` for the graph on ``nv`` vertices with edge list ``pairs``."""
    if nv == 0:
        return 0, np.zeros(0, dtype=np.int64)
    pairs = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
    m = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(nv, nv))
    return connected_components(m, directed=False)


def _make_edges(triples) -> tuple:
    """Canonical edges from ``(u, v, slot)``; parallel indices assigned in order."""
    count = {}
    out = []
    for u, v, slot in triples:
        a, b = (u, v) if u < v else (v, u)
        count[(a, b)] = count.get((a, b), 0) + 1
        out.append(Edge(len(out), a, b, count[(a, b)], slot))
    return tuple(out)


# ---------------------------------------------------------------------------
# constructors


def build_lattice_box(d: int, L: int, max_vertices: int = MAX_VERTICES) -> LatticeGraph:
    """The box ``{-L..L}^d`` with nearest-neighbour edges."""
    if d < 1 or L < 0:
        raise ArgumentError("need d >= 1 and L >= 0")
    if (2 * L + 1) ** d > max_vertices:
        raise SizeError(f"box with {(2 * L + 1) ** d} vertices exceeds {max_vertices}")
    return build_region(itertools.product(range(-L, L + 1), repeat=d), d=d, L=L)


def build_region(points, d: int | None = None, L: int | None = None) -> LatticeGraph:
    """Induced subgraph of ``Z^d`` on a finite point set, sorted row-major."""
    pts = sorted({tuple(int(c) for c in p) for p in points})
    if not pts:
        raise ArgumentError("empty region")
    d = d or len(pts[0])
    index = {p: i for i, p in enumerate(pts)}
    triples = []
    boundary = set()
    for p in pts:
        for axis in range(d):
            for s in (1, -1):
                q = list(p)
                q[axis] += s
                q = tuple(q)
                if q not in index:
                    boundary.add(index[p])
                elif s == 1:
                    triples.append((index[p], index[q], "bulk"))
    return LatticeGraph(d, tuple(tuple(float(c) for c in p) for p in pts),
                        ("lattice",) * len(pts), _make_edges(triples),
                        frozenset(boundary), L)


def with_exterior(g: LatticeGraph) -> LatticeGraph:
    """Attach one frozen vertex standing for all sites outside the region.

    Each missing nearest neighbour of a lattice vertex becomes its own
    edge to the exterior, so corners get parallel edges.
    """
    if g.frozen or g.ghost is not None:
        raise StateError("graph already has an exterior or ghost vertex")
    lat = {c: i for i, c in enumerate(g.coords) if g.roles[i] == "lattice"}
    x = g.num_vertices
    triples = [(e.u, e.v, e.slot) for e in g.edges]
    for c, i in lat.items():
        for axis in range(g.d):
            for s in (1, -1):
                q = list(c)
                q[axis] += s
                if tuple(q) not in lat:
                    triples.append((i, x, "exterior"))
    return replace(g, coords=g.coords + ((math.nan,) * g.d,),
                   roles=g.roles + ("exterior",), edges=_make_edges(triples))


def edge_sites(g: LatticeGraph) -> list:
    """Integer coordinates of both ends of every edge of a box-like graph.

    Exterior edges report the missing outside neighbour as their second end,
    following the order used by :func:`with_exterior`.
    """
    lat = {c: i for i, c in enumerate(g.coords) if g.roles[i] == "lattice"}
    outside = {}
    for c, i in lat.items():
        for axis in range(g.d):
            for s in (1, -1):
                q = list(c)
                q[axis] += s
                if tuple(q) not in lat:
                    outside.setdefault(i, []).append(tuple(int(t) for t in q))
    out = []
    for e in g.edges:
        a = tuple(int(t) for t in g.coords[e.u])
        if e.slot == "exterior":
            out.append((a, outside[e.u].pop(0)))
        else:
            out.append((a, tuple(int(t) for t in g.coords[e.v])))
    return out


def subdivide_edges(g: LatticeGraph, n: int, edge_ids=None) -> LatticeGraph:
    """Replace each selected edge by a path of ``n`` segments.

    Segments keep the slot of the original edge; end segments are the ones
    touching a non-subdivision vertex.
    """
    if n < 1:
        raise ArgumentError("n must be at least 1")
    if n == 1:
        return g
    sel = set(range(g.num_edges) if edge_ids is None else edge_ids)
    coords = list(g.coords)
    roles = list(g.roles)
    triples = []
    for e in g.edges:
        if e.id not in sel:
            triples.append((e.u, e.v, e.slot))
            continue
        a, b = np.array(coords[e.u]), np.array(coords[e.v])
        chain = [e.u]
        for j in range(1, n):
            coords.append(tuple(float(c) for c in a + (b - a) * j / n))
            roles.append("subdivision")
            chain.append(len(coords) - 1)
        chain.append(e.v)
        for s, t in zip(chain[:-1], chain[1:]):
            triples.append((s, t, e.slot))
    return replace(g, coords=tuple(coords), roles=tuple(roles), edges=_make_edges(triples),
                   n=n)


def contract_subdivisions(g: LatticeGraph) -> LatticeGraph:
    """Undo :func:`subdivide_edges` by splicing out degree-2 subdivision vertices."""
    keep = [i for i, r in enumerate(g.roles) if r != "subdivision"]
    new_id = {old: j for j, old in enumerate(keep)}
    adj = g.neighbours()
    triples = []
    done = set()
    for e in g.edges:
        if e.id in done:
            continue
        done.add(e.id)
        ends = []
        for x in (e.u, e.v):
            prev = e.id
            while g.roles[x] == "subdivision":
                x, prev = next((w, eid) for w, eid in adj[x] if eid != prev)
                done.add(prev)
            ends.append(x)
        triples.append((new_id[ends[0]], new_id[ends[1]], e.slot))
    return replace(g, coords=tuple(g.coords[i] for i in keep),
                   roles=tuple(g.roles[i] for i in keep), edges=_make_edges(triples),
                   boundary=frozenset(new_id[b] for b in g.boundary if b in new_id), n=1)


def parallelize_edges(g: LatticeGraph, n: int) -> LatticeGraph:
    """Replace each edge by ``n`` parallel copies with slots ``slot/1..slot/n``.

    Copy ``j`` of an edge with parallel index ``k`` gets index ``(k-1)n + j``.
    """
    if n < 1:
        raise ArgumentError("n must be at least 1")
    if n == 1:
        return g
    edges = []
    for e in g.edges:
        for j in range(1, n + 1):
            edges.append(Edge(len(edges), e.u, e.v, (e.k - 1) * n + j, f"{e.slot}/{j}"))
    return replace(g, edges=tuple(edges), n=n)


def ghost_augment(g: LatticeGraph) -> LatticeGraph:
    """Add a ghost joined to each boundary vertex and, once more, to the origin.

    The boundary edges get slot ``ghost`` and the extra origin edge gets
    slot ``lambda``.
    """
    if g.ghost is not None:
        raise StateError("graph already contains a ghost")
    if g.frozen:
        raise StateError("ghost and exterior vertices are exclusive")
    o = g.origin
    gh = g.num_vertices
    triples = [(e.u, e.v, e.slot) for e in g.edges]
    triples += [(b, gh, "ghost") for b in sorted(g.boundary)]
    triples.append((o, gh, "lambda"))
    return replace(g, coords=g.coords + ((math.nan,) * g.d,), roles=g.roles + ("ghost",),
                   edges=_make_edges(triples))


def identify_vertices(g: LatticeGraph, u: int, v: int) -> LatticeGraph:
    """Merge ``v`` into ``u`` (the smaller id survives); self-loops are dropped."""
    nv = g.num_vertices
    if u == v or not (0 <= u < nv and 0 <= v < nv):
        raise ArgumentError("need two distinct existing vertices")
    keep, gone = min(u, v), max(u, v)
    if g.roles[gone] in ("ghost", "exterior") and g.roles[keep] not in ("ghost", "exterior"):
        role_keep = g.roles[gone]
        coord_keep = g.coords[gone]
    else:
        role_keep, coord_keep = g.roles[keep], g.coords[keep]

    def f(x):
        x = keep if x == gone else x
        return x - (x > gone)

    triples = [(f(e.u), f(e.v), e.slot) for e in g.edges if f(e.u) != f(e.v)]
    coords = list(g.coords)
    roles = list(g.roles)
    coords[keep], roles[keep] = coord_keep, role_keep
    del coords[gone], roles[gone]
    bnd = {f(b) for b in g.boundary}
    return replace(g, coords=tuple(coords), roles=tuple(roles), edges=_make_edges(triples),
                   boundary=frozenset(bnd))


def add_edge(g: LatticeGraph, u: int, v: int, slot: str = "bulk") -> LatticeGraph:
    triples = [(e.u, e.v, e.slot) for e in g.edges] + [(u, v, slot)]
    return replace(g, edges=_make_edges(triples))


def remove_edges(g: LatticeGraph, edge_ids) -> LatticeGraph:
    drop = set(edge_ids)
    triples = [(e.u, e.v, e.slot) for e in g.edges if e.id not in drop]
    return replace(g, edges=_make_edges(triples))


def spanning_tree(g: LatticeGraph) -> tuple:
    """Breadth-first spanning tree from the ghost (else vertex 0).

    Neighbours are scanned in edge-id order, so the result is deterministic.
    Returns the sorted tree edge ids.
    """
    if g.num_vertices == 0:
        return ()
    root = g.ghost if g.ghost is not None else 0
    adj = g.neighbours()
    seen = {root}
    tree = []
    queue = deque([root])
    while queue:
        x = queue.popleft()
        for y, eid in adj[x]:
            if y not in seen:
                seen.add(y)
                tree.append(eid)
                queue.append(y)
    if len(seen) != g.num_vertices:
        raise StructureError("graph is disconnected")
    return tuple(sorted(tree))


# ---------------------------------------------------------------------------
# shift-invariant graphs


@dataclass(frozen=True)
class ShiftInvariantSpec:
    """Periodic planar graph given by one cell.

    ``cell_edges`` holds ``(a, b, (i, j))``: vertex ``a`` of a cell joined to
    vertex ``b`` of the cell shifted by ``i v1 + j v2``.
    """

    cell_vertices: tuple
    cell_edges: tuple
    lattice_vectors: tuple
    R_G: int = 1

    def __post_init__(self):
        m = np.array(self.lattice_vectors, dtype=float)
        if m.shape != (2, 2) or abs(np.linalg.det(m)) < 1e-12:
            raise ArgumentError("lattice vectors must be two independent vectors in R^2")
        if not any(np.allclose(p, 0) for p in self.cell_vertices):
            raise ArgumentError("0 must be a cell vertex")


def square_cell() -> ShiftInvariantSpec:
    return ShiftInvariantSpec(((0.0, 0.0),), ((0, 0, (1, 0)), (0, 0, (0, 1))),
                              ((1.0, 0.0), (0.0, 1.0)))


def triangular_cell() -> ShiftInvariantSpec:
    return ShiftInvariantSpec(((0.0, 0.0),), ((0, 0, (1, 0)), (0, 0, (0, 1)), (0, 0, (-1, 1))),
                              ((1.0, 0.0), (0.5, math.sqrt(3) / 2)))


def build_shift_invariant(spec: ShiftInvariantSpec, L: int, ndigits: int = 9) -> LatticeGraph:
    """Clip a periodic graph to ``[-L, L]^2`` with a collapsed frozen exterior."""
    P = np.array(spec.cell_vertices, dtype=float)
    M = np.array(spec.lattice_vectors, dtype=float)
    reach = max(np.abs(P).max(), 1.0) + L
    inv_norm = np.abs(np.linalg.inv(M)).sum(axis=0).max()
    span = int(math.ceil(reach * inv_norm)) + 2
    cells = list(itertools.product(range(-span, span + 1), repeat=2))

    def pos(a, c):
        return P[a] + c[0] * M[0] + c[1] * M[1]

    def inside(x):
        return bool(np.all(np.abs(x) <= L + 1e-9))

    keyed = {}
    for c in cells:
        for a in range(len(P)):
            x = pos(a, c)
            if inside(x):
                keyed[(a, c)] = tuple(round(float(t), ndigits) + 0.0 for t in x)
    order = sorted(set(keyed.values()))
    index = {x: i for i, x in enumerate(order)}
    ext = len(order)
    triples = []
    boundary = set()
    for c in cells:
        for a, b, off in spec.cell_edges:
            c2 = (c[0] + off[0], c[1] + off[1])
            ia = index.get(keyed.get((a, c)))
            ib = index.get(keyed.get((b, c2)))
            if ia is None and ib is None:
                continue
            if ia is None or ib is None:
                inner = ia if ia is not None else ib
                boundary.add(inner)
                triples.append((inner, ext, "exterior"))
            elif ia != ib:
                triples.append((ia, ib, "bulk"))
    triples.sort(key=lambda t: (min(t[0], t[1]), max(t[0], t[1]), t[2]))
    g = LatticeGraph(2, tuple(order) + ((math.nan, math.nan),),
                     ("lattice",) * len(order) + ("exterior",), _make_edges(triples),
                     frozenset(boundary), L)
    if not g.is_connected():
        raise StructureError("clipped graph is disconnected")
    return g


# ---------------------------------------------------------------------------
# text format


def dumps(g: LatticeGraph) -> str:
    """Line format: ``d L n`` header, ``V``/``E`` records, one ``B`` line."""
    lines = [f"{g.d} {-1 if g.L is None else g.L} {g.n}"]
    for i, (c, r) in enumerate(zip(g.coords, g.roles)):
        lines.append("V " + " ".join([str(i)] + [repr(float(x)) for x in c] + [r]))
    for e in g.edges:
        lines.append(f"E {e.id} {e.u} {e.v} {e.k} {e.slot}")
    lines.append("B " + " ".join(str(b) for b in sorted(g.boundary)))
    return "\n".join(lines) + "\n"


def loads(text: str) -> LatticeGraph:
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    d, L, n = (int(t) for t in rows[0])
    coords, roles, edges, boundary = [], [], [], frozenset()
    for r in rows[1:]:
        if r[0] == "V":
            coords.append(tuple(float(x) for x in r[2:2 + d]))
            roles.append(r[2 + d])
        elif r[0] == "E":
            edges.append(Edge(int(r[1]), int(r[2]), int(r[3]), int(r[4]), r[5]))
        elif r[0] == "B":
            boundary = frozenset(int(x) for x in r[1:])
        else:
            raise ArgumentError(f"unknown record {r[0]!r}")
    return LatticeGraph(d, tuple(coords), tuple(roles), tuple(edges), boundary,
                        None if L < 0 else L, n)
