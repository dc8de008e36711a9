"""Sum-product contraction of small factor graphs by variable elimination."""
from __future__ import annotations

import math

import numpy as np

from .errors import ResourceError


def _plan(factors, output):
    """Greedy min-size elimination order on labels only.

    Returns ``(order, flops, largest)`` where each step of ``order`` is a
    label to sum out.
    """
    dims = {}
    scopes = []
    for arr, idx in factors:
        for i, n in zip(idx, np.shape(arr)):
            dims[i] = n
        scopes.append(frozenset(idx))
    keep = set(output)
    todo = set(dims) - keep
    order = []
    flops = 0.0
    largest = 1.0
    while todo:
        best = None
        for v in todo:
            union = set()
            for sc in scopes:
                if v in sc:
                    union |= sc
            size_out = math.prod(dims[i] for i in union if i != v)
            key = (size_out, repr(v))
            if best is None or key < best[0]:
                best = (key, v, union)
        (size_out, _), v, union = best
        flops += size_out * dims[v]
        largest = max(largest, size_out)
        scopes = [sc for sc in scopes if v not in sc] + [frozenset(union - {v})]
        todo.discard(v)
        order.append(v)
    final = set()
    for sc in scopes:
        final |= sc
    largest = max(largest, math.prod(dims[i] for i in final) if final else 1)
    return order, flops, float(largest)


def contraction_cost(factors, output=()) -> tuple:
    """``(flop estimate, largest intermediate size)`` of the elimination plan."""
    if not factors:
        return 0.0, 1.0
    _, flops, largest = _plan(factors, output)
    return flops, largest


def _einsum(parts, out):
    labels = {}
    for _, idx in parts:
        for i in idx:
            labels.setdefault(i, len(labels))
    ops = []
    for arr, idx in parts:
        ops += [arr, [labels[i] for i in idx]]
    ops.append([labels[i] for i in out])
    return np.einsum(*ops, optimize=len(parts) > 2)


def contract(factors, output=(), max_size: float = 4e8):
    """Sum the product of ``factors`` over all indices not in ``output``.

    Parameters
    ----------
    factors : list of (ndarray, sequence of hashable)
        Each array's axes are labelled by the matching index names.
    output : sequence of hashable
        Indices kept in the result, in this order.
    max_size : float
        Refuse plans whose largest intermediate has more elements.
    """
    if not factors:
        return np.array(1.0)
    order, _, largest = _plan(factors, output)
    if largest > max_size:
        raise ResourceError(f"largest intermediate {largest:.3g} exceeds {max_size:.3g}")
    pool = [(np.asarray(a), list(i)) for a, i in factors]
    for v in order:
        bucket = [f for f in pool if v in f[1]]
        pool = [f for f in pool if v not in f[1]]
        out = []
        for _, idx in bucket:
            for i in idx:
                if i != v and i not in out:
                    out.append(i)
        pool.append((_einsum(bucket, out), out))
    return _einsum(pool, list(output))
