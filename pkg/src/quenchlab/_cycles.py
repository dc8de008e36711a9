"""Integral cycle bases and forest flows for small multigraphs."""
from __future__ import annotations

from collections import deque

import numpy as np


def _adjacency(nv, ends):
    adj = [[] for _ in range(nv)]
    for eid, (u, v) in enumerate(ends):
        adj[u].append((v, eid))
        adj[v].append((u, eid))
    return adj


def spanning_forest(nv: int, ends, roots=()) -> tuple:
    """BFS forest; returns ``(tree edge ids, parent edge per vertex, order)``.

    Roots listed in ``roots`` are visited first, then the remaining
    vertices in id order. ``parent[x]`` is -1 for roots.
    """
    adj = _adjacency(nv, ends)
    parent = np.full(nv, -1, dtype=np.int64)
    seen = np.zeros(nv, dtype=bool)
    order = []
    tree = []
    for r in list(roots) + list(range(nv)):
        if seen[r]:
            continue
        seen[r] = True
        queue = deque([r])
        while queue:
            x = queue.popleft()
            order.append(x)
            for y, eid in adj[x]:
                if not seen[y]:
                    seen[y] = True
                    parent[y] = eid
                    tree.append(eid)
                    queue.append(y)
    return sorted(tree), parent, order


def forest_flow(nv: int, ends, charges) -> np.ndarray | None:
    """Integer flow ``k`` on forest edges with ``B k = charges``.

    ``B`` has ``+1`` at the tail and ``-1`` at the head of each edge.
    Returns ``None`` when some component carries a nonzero net charge.
    """
    ends = np.asarray(ends, dtype=np.int64).reshape(-1, 2)
    _, parent, order = spanning_forest(nv, ends)
    need = np.array(charges, dtype=np.int64).copy()
    k = np.zeros(len(ends), dtype=np.int64)
    for x in reversed(order):
        eid = parent[x]
        if eid < 0:
            if need[x] != 0:
                return None
            continue
        u, v = ends[eid]
        # flow on eid contributes +k at u and -k at v
        if x == u:
            k[eid] = need[x]
            need[v] += need[x]
        else:
            k[eid] = -need[x]
            need[u] += need[x]
        need[x] = 0
    return k


def _shortest_cycle_through(adj, ends, eid):
    """Signed edge vector of a shortest cycle through ``eid`` (or None)."""
    u, v = ends[eid]
    prev = {v: None}
    queue = deque([v])
    while queue and u not in prev:
        x = queue.popleft()
        for y, f in adj[x]:
            if f == eid or y in prev:
                continue
            prev[y] = (x, f)
            queue.append(y)
    if u not in prev:
        return None
    vec = np.zeros(len(ends), dtype=np.int64)
    vec[eid] = 1  # traverse u -> v
    x = u
    path = []
    while prev[x] is not None:
        px, f = prev[x]
        path.append((px, x, f))
        x = px
    # path goes v -> ... -> u when read backwards
    for a, b, f in reversed(path):
        vec[f] += 1 if tuple(ends[f]) == (a, b) else -1
    return vec


def cycle_basis(nv: int, ends, prefer_short: bool = True) -> np.ndarray:
    """Integral basis of the integer cycle lattice ``{k : B k = 0}``.

    Greedily collects shortest cycles through each edge; the result is
    accepted only if it spans the lattice over Z (unimodular on the
    non-tree coordinates), otherwise fundamental cycles are used.
    Returns an ``(m, E)`` integer array.
    """
    ends = np.asarray(ends, dtype=np.int64).reshape(-1, 2)
    E = len(ends)
    tree, _, _ = spanning_forest(nv, ends)
    nontree = [e for e in range(E) if e not in set(tree)]
    m = len(nontree)
    if m == 0:
        return np.zeros((0, E), dtype=np.int64)
    adj = _adjacency(nv, ends)
    if prefer_short:
        cands = []
        for eid in range(E):
            c = _shortest_cycle_through(adj, ends, eid)
            if c is not None:
                cands.append((int(np.abs(c).sum()), eid, c))
        cands.sort(key=lambda t: (t[0], t[1]))
        rows = []
        rank = 0
        for _, _, c in cands:
            trial = np.array(rows + [c], dtype=float)
            r = np.linalg.matrix_rank(trial)
            if r > rank:
                rows.append(c)
                rank = r
                if rank == m:
                    break
        C = np.array(rows, dtype=np.int64)
        if len(rows) == m and abs(round(np.linalg.det(C[:, nontree].astype(float)))) == 1:
            return C
    return fundamental_cycles(nv, ends)


def fundamental_cycles(nv: int, ends, tree=None) -> np.ndarray:
    """Fundamental cycles of a spanning forest, oriented along each non-tree edge."""
    ends = np.asarray(ends, dtype=np.int64).reshape(-1, 2)
    E = len(ends)
    if tree is None:
        tree, _, _ = spanning_forest(nv, ends)
    tset = set(int(t) for t in tree)
    nontree = [e for e in range(E) if e not in tset]
    tends = ends[sorted(tset)]
    tid = sorted(tset)
    rows = []
    for f in nontree:
        # flow of one unit along f (u -> v) must return from v to u through the tree
        u, v = ends[f]
        charges = np.zeros(nv, dtype=np.int64)
        charges[v] += 1
        charges[u] -= 1
        kt = forest_flow(nv, tends, charges)
        row = np.zeros(E, dtype=np.int64)
        row[f] = 1
        row[tid] = kt
        rows.append(row)
    return np.array(rows, dtype=np.int64).reshape(len(nontree), E)


def _shortest_path(adj, allowed, src, dst):
    """Signed edge list of a shortest ``src -> dst`` path using ``allowed`` edges."""
    prev = {src: None}
    queue = deque([src])
    while queue and dst not in prev:
        x = queue.popleft()
        for y, f in adj[x]:
            if f in allowed and y not in prev:
                prev[y] = (x, f)
                queue.append(y)
    if dst not in prev:
        return None
    path = []
    x = dst
    while prev[x] is not None:
        px, f = prev[x]
        path.append((px, x, f))
        x = px
    return path[::-1]


def triangular_cycles(nv: int, ends, tree, last=()) -> np.ndarray:
    """Unimodular cycle basis built from short cycles.

    Non-tree edges are added one at a time, always the one closing the
    shortest cycle through edges already present (the tree plus earlier
    picks). Restricted to the non-tree columns the basis is unit lower
    triangular in pick order, hence a basis of the integer cycle lattice.
    Non-tree edges in ``last`` are picked after all others, in order, so
    their angles are single basis variables.
    """
    ends = np.asarray(ends, dtype=np.int64).reshape(-1, 2)
    E = len(ends)
    adj = _adjacency(nv, ends)
    allowed = set(int(t) for t in tree)
    late = [int(e) for e in last if int(e) not in allowed]
    todo = [e for e in range(E) if e not in allowed and e not in late]
    rows = []
    while todo or late:
        if not todo:
            todo = [late.pop(0)]
        best = None
        for f in todo:
            u, v = ends[f]
            path = _shortest_path(adj, allowed, int(v), int(u))
            if path is None:
                raise ValueError("tree does not span the graph")
            if best is None or len(path) < len(best[1]):
                best = (f, path)
        f, path = best
        row = np.zeros(E, dtype=np.int64)
        row[f] = 1
        for a, b, g in path:
            row[g] += 1 if tuple(ends[g]) == (a, b) else -1
        rows.append(row)
        allowed.add(f)
        todo.remove(f)
    return np.array(rows, dtype=np.int64).reshape(len(rows), E)
