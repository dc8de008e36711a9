"""Markov chain Monte Carlo for angle and height models.

Angle models use single-site Metropolis moves with wrapped Gaussian
proposals; height models use single-site heat-bath updates on a window
around the local mean. Vertices joined by rigid edges move as one block.

Randomness comes from Philox streams keyed by ``(seed, replica, sample)``;
within a stream the draws are consumed in a fixed (sweep, site) order, so
results do not depend on scheduling.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numba as nb
import numpy as np

from .errors import (ArgumentError, InitializationError, ResourceError,
                     UnsupportedMeasureError)
from .exact import GibbsSpec, _UF
from .graph import LatticeGraph, build_lattice_box, with_exterior
from .percolation import sample_bernoulli
from .potentials import EdgePotential

N_BATCHES = 32
_BLOCK = 256  # sweeps per random-number block


@dataclass(frozen=True)
class ChainConfig:
    sweeps: int = 10_000
    burn_in: int = 1_000
    thin: int = 1
    scale: float = 1.0
    seed: int = 0
    replicas: int = 1

    def __post_init__(self):
        if not 0 <= self.burn_in < self.sweeps:
            raise ArgumentError("need 0 <= burn_in < sweeps")
        if self.thin < 1 or self.replicas < 1:
            raise ArgumentError("thin and replicas must be positive")
        if self.scale <= 0:
            raise ArgumentError("proposal scale must be positive")

    @property
    def samples(self) -> int:
        return (self.sweeps - self.burn_in) // self.thin


@dataclass
class Estimate:
    """Mean with a batch-means standard error."""

    mean: float
    stderr: float
    neff: float
    replicas: int = 1
    dsamples: int = 1
    samples: int = 0
    extra: dict = field(default_factory=dict)


def stream(seed: int, replica: int = 0, sample: int = 0) -> np.random.Generator:
    """Independent Philox stream for one chain."""
    key = np.random.SeedSequence([int(seed) & (2 ** 63 - 1), replica, sample]).generate_state(
        2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def batch_means(x, n_batches: int = N_BATCHES) -> Estimate:
    """Batch-means estimate of the mean of a correlated series."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < n_batches:
        raise ArgumentError(f"need at least {n_batches} samples")
    b = n // n_batches
    means = x[: b * n_batches].reshape(n_batches, b).mean(axis=1)
    se = float(means.std(ddof=1) / math.sqrt(n_batches))
    var = float(x.var())
    neff = float(n) if se == 0 else min(float(n), var / se ** 2)
    return Estimate(float(x.mean()), se, neff, 1, 1, n)


def combine(ests) -> Estimate:
    """Pool independent estimates (replicas) by plain averaging."""
    ests = list(ests)
    k = len(ests)
    mean = sum(e.mean for e in ests) / k
    se = math.sqrt(sum(e.stderr ** 2 for e in ests)) / k
    return Estimate(mean, se, sum(e.neff for e in ests), k, ests[0].dsamples,
                    sum(e.samples for e in ests))


def _threads() -> int:
    return max(1, int(os.environ.get("QUENCHLAB_THREADS", "1")))


# ---------------------------------------------------------------------------
# block structure


def _blocks(g: LatticeGraph, rigid, pinned=()):
    """Union-find over rigid edges; returns ``(labels, n_blocks, pinned flags)``."""
    uf = _UF(g.num_vertices)
    for e in g.edges:
        if rigid[e.id]:
            uf.union(e.u, e.v)
    roots = {}
    lab = np.empty(g.num_vertices, dtype=np.int64)
    for x in range(g.num_vertices):
        lab[x] = roots.setdefault(uf.find(x), len(roots))
    pin = np.zeros(len(roots), dtype=bool)
    for x in pinned:
        pin[lab[x]] = True
    return lab, len(roots), pin


def _csr(n, pairs):
    """Adjacency in CSR form from ``(site, other, edge payload index)`` triples."""
    deg = np.zeros(n + 1, dtype=np.int64)
    for s, _, _ in pairs:
        deg[s + 1] += 1
    ptr = np.cumsum(deg)
    nbr = np.empty(len(pairs), dtype=np.int64)
    eid = np.empty(len(pairs), dtype=np.int64)
    fill = ptr[:-1].copy()
    for s, o, e in pairs:
        nbr[fill[s]] = o
        eid[fill[s]] = e
        fill[s] += 1
    return ptr, nbr, eid


# ---------------------------------------------------------------------------
# angle chains

_XY, _VIL = 0, 1


@nb.njit(cache=True, nogil=True)
def _wrap(x):
    return x - 2.0 * math.pi * math.floor((x + math.pi) / (2.0 * math.pi))


@nb.njit(cache=True, nogil=True)
def _log_w(kind, beta, x):
    if kind == _XY:
        return beta * math.cos(x)
    x = _wrap(x)
    if beta >= 1.0 / (2.0 * math.pi):
        s = 0.0
        for m in range(-5, 6):
            y = x + 2.0 * math.pi * m
            s += math.exp(-0.5 * beta * (y * y - x * x))
        return -0.5 * beta * x * x + math.log(s)
    s = 1.0
    for k in range(1, 12):
        s += 2.0 * math.exp(-k * k / (2.0 * beta)) * math.cos(k * x)
    return math.log(max(s, 1e-300))


@nb.njit(cache=True, nogil=True)
def _angle_block(theta, active, ptr, nbr, eid, kind, beta, normals, uniforms, scale,
                 oa, ob, record, out):
    acc = 0
    for t in range(normals.shape[0]):
        for i in range(active.shape[0]):
            s = active[i]
            old = theta[s]
            new = old + scale * normals[t, i]
            d = 0.0
            for j in range(ptr[s], ptr[s + 1]):
                y = theta[nbr[j]]
                e = eid[j]
                d += _log_w(kind[e], beta[e], new - y) - _log_w(kind[e], beta[e], old - y)
            if d >= 0.0 or math.log(uniforms[t, i]) < d:
                theta[s] = _wrap(new)
                acc += 1
        if record[t] >= 0:
            for k in range(oa.shape[0]):
                out[record[t], k] = math.cos(theta[oa[k]] - theta[ob[k]])
    return acc


@dataclass
class _AngleSystem:
    lab: np.ndarray
    n: int
    ptr: np.ndarray
    nbr: np.ndarray
    eid: np.ndarray
    kind: np.ndarray
    beta: np.ndarray
    active: np.ndarray


def _angle_system(spec: GibbsSpec) -> _AngleSystem:
    if spec.family != "angle":
        raise ArgumentError("angle chain needs an angle spec")
    g = spec.graph
    rigid = [p.kind == "frozen" for p in spec.potentials]
    lab, n, _ = _blocks(g, rigid)
    pairs, kinds, betas = [], [], []
    for e, p in zip(g.edges, spec.potentials):
        a, b = lab[e.u], lab[e.v]
        if p.kind == "frozen" or a == b or p.kind == "free" or p.beta == 0:
            continue
        if p.kind == "xy":
            k = _XY
        elif p.kind == "villain":
            k = _VIL
        else:
            raise UnsupportedMeasureError(f"angle chain does not support {p.kind!r} edges")
        idx = len(kinds)
        kinds.append(k)
        betas.append(p.beta)
        pairs += [(a, b, idx), (b, a, idx)]
    ptr, nbr, eid = _csr(n, pairs)
    return _AngleSystem(lab, n, ptr, nbr, eid, np.array(kinds, dtype=np.int64),
                        np.array(betas, dtype=float), np.arange(n, dtype=np.int64))


def _record_plan(t0, B, cfg):
    """Sample slot recorded after each sweep of a block, or -1."""
    rec = np.full(B, -1, dtype=np.int64)
    for t in range(B):
        s = t0 + t + 1
        if s > cfg.burn_in and (s - cfg.burn_in) % cfg.thin == 0:
            k = (s - cfg.burn_in) // cfg.thin - 1
            if k < cfg.samples:
                rec[t] = k
    return rec


def angle_series(spec: GibbsSpec, cfg: ChainConfig, pairs, replica: int = 0,
                 sample: int = 0, init=None) -> np.ndarray:
    """Recorded ``cos(theta_x - theta_y)`` series, shape ``(samples, len(pairs))``."""
    sys = _angle_system(spec)
    rng = stream(cfg.seed, replica, sample)
    theta = np.zeros(sys.n) if init is None else np.asarray(init, dtype=float).copy()
    oa = np.array([sys.lab[x] for x, _ in pairs], dtype=np.int64)
    ob = np.array([sys.lab[y] for _, y in pairs], dtype=np.int64)
    out = np.zeros((cfg.samples, len(pairs)))
    t0 = 0
    while t0 < cfg.sweeps:
        B = min(_BLOCK, cfg.sweeps - t0)
        normals = rng.standard_normal((B, sys.n))
        uniforms = rng.random((B, sys.n))
        _angle_block(theta, sys.active, sys.ptr, sys.nbr, sys.eid, sys.kind, sys.beta,
                     normals, uniforms, cfg.scale, oa, ob, _record_plan(t0, B, cfg), out)
        t0 += B
    return out


def run_angle_chain(spec: GibbsSpec, cfg: ChainConfig, pairs) -> list:
    """One :class:`Estimate` of ``<cos(theta_x - theta_y)>`` per pair."""
    def job(r):
        return angle_series(spec, cfg, pairs, replica=r)

    series = _map(job, range(cfg.replicas))
    return [combine(batch_means(s[:, k]) for s in series) for k in range(len(pairs))]


# ---------------------------------------------------------------------------
# height chains


@nb.njit(cache=True, nogil=True)
def _height_block(phi, active, ptr, nbr, eid, table, prec, uniforms, width, targets,
                  record, out):
    """Heat-bath sweeps; returns -1 if a difference left the table."""
    K = table.shape[1] - 1
    buf = np.empty(4096)
    for t in range(uniforms.shape[0]):
        for i in range(active.shape[0]):
            s = active[i]
            w = 0.0
            m = 0.0
            for j in range(ptr[s], ptr[s + 1]):
                w += prec[eid[j]]
                m += prec[eid[j]] * phi[nbr[j]]
            if w == 0.0:
                return -2
            m /= w
            half = width * (1.0 / math.sqrt(w) + 1.0)
            lo = int(math.floor(m - half))
            hi = int(math.ceil(m + half))
            if hi - lo + 1 > buf.shape[0]:
                return -1
            top = -1e300
            for h in range(lo, hi + 1):
                lw = 0.0
                for j in range(ptr[s], ptr[s + 1]):
                    d = abs(h - phi[nbr[j]])
                    if d > K:
                        return -1
                    lw += table[eid[j], d]
                buf[h - lo] = lw
                if lw > top:
                    top = lw
            tot = 0.0
            for h in range(lo, hi + 1):
                buf[h - lo] = math.exp(buf[h - lo] - top)
                tot += buf[h - lo]
            u = uniforms[t, i] * tot
            acc = 0.0
            new = hi
            for h in range(lo, hi + 1):
                acc += buf[h - lo]
                if u < acc:
                    new = h
                    break
            phi[s] = new
        if record[t] >= 0:
            for k in range(targets.shape[0]):
                out[record[t], k] = phi[targets[k]]
    return 0


@dataclass
class _HeightSystem:
    lab: np.ndarray
    n: int
    ptr: np.ndarray
    nbr: np.ndarray
    eid: np.ndarray
    table: np.ndarray
    prec: np.ndarray
    active: np.ndarray
    pinned_slot: int


def _height_system(spec: GibbsSpec, K: int = 512) -> _HeightSystem:
    if spec.family != "height":
        raise ArgumentError("height chain needs a height spec")
    if spec.lam:
        raise UnsupportedMeasureError("ghost weight is not supported by the chain")
    g = spec.graph
    rigid = [p.kind == "frozen" or p.is_delta() for p in spec.potentials]
    lab, n, pin = _blocks(g, rigid, spec.pinned)
    # pinned blocks share one slot held at zero
    slot = np.where(pin, n, np.arange(n))
    lab = slot[lab]
    pairs, rows, prec = [], [], []
    ks = np.arange(K + 1)
    for e, p in zip(g.edges, spec.potentials):
        a, b = lab[e.u], lab[e.v]
        if rigid[e.id] or a == b or p.kind == "free":
            continue
        row = np.asarray(p.log_coefficient(ks), dtype=float) - float(p.log_coefficient(0))
        idx = len(rows)
        rows.append(row)
        prec.append(1.0 / max(p.beta, 1e-12))
        if a < n:
            pairs.append((a, b, idx))
        if b < n:
            pairs.append((b, a, idx))
    active = np.array(sorted(set(int(s) for s, _, _ in pairs)), dtype=np.int64)
    ptr, nbr, eid = _csr(n + 1, pairs)
    table = np.array(rows) if rows else np.zeros((0, K + 1))
    return _HeightSystem(lab, n, ptr, nbr, eid, table, np.array(prec), active, n)


def height_series(spec: GibbsSpec, cfg: ChainConfig, targets, replica: int = 0,
                  sample: int = 0, width: float = 6.0) -> np.ndarray:
    """Recorded heights at ``targets``, shape ``(samples, len(targets))``."""
    sys = _height_system(spec)
    free_blocks = set(range(sys.n)) - set(int(a) for a in sys.active)
    for x in targets:
        if sys.lab[x] in free_blocks:
            raise InitializationError(f"vertex {x} has no coupling; its height is not normalisable")
    rng = stream(cfg.seed, replica, sample)
    phi = np.zeros(sys.n + 1, dtype=np.int64)
    tg = np.array([sys.lab[x] for x in targets], dtype=np.int64)
    out = np.zeros((cfg.samples, len(targets)))
    t0 = 0
    while t0 < cfg.sweeps:
        B = min(_BLOCK, cfg.sweeps - t0)
        uniforms = rng.random((B, len(sys.active)))
        code = _height_block(phi, sys.active, sys.ptr, sys.nbr, sys.eid, sys.table, sys.prec,
                             uniforms, width, tg, _record_plan(t0, B, cfg), out)
        if code == -1:
            raise ResourceError("height window exceeded the coefficient table")
        t0 += B
    return out


def run_height_chain(spec: GibbsSpec, cfg: ChainConfig, targets=None) -> list:
    """One :class:`Estimate` of ``Var[phi(x)] = E[phi(x)^2]`` per target.

    The laws are symmetric under ``phi -> -phi``, so the mean is zero.
    """
    targets = [spec.graph.origin] if targets is None else list(targets)

    def job(r):
        return height_series(spec, cfg, targets, replica=r)

    series = _map(job, range(cfg.replicas))
    return [combine(batch_means(s[:, k] ** 2) for s in series) for k in range(len(targets))]


def _map(f, items):
    items = list(items)
    nt = _threads()
    if nt == 1 or len(items) == 1:
        return [f(i) for i in items]
    with ThreadPoolExecutor(nt) as ex:
        return list(ex.map(f, items))


# ---------------------------------------------------------------------------
# disorder averages and scans


def disorder_average(estimator, g: LatticeGraph, kind: str, p: float, samples: int,
                     cfg: ChainConfig) -> Estimate:
    """Outer average over Bernoulli configurations of an inner chain estimate.

    ``estimator(config, cfg, sample)`` returns an :class:`Estimate`. The
    standard error is the spread between samples, which contains the inner
    noise; with one sample the inner error is used.
    """
    if samples < 1:
        raise ArgumentError("need at least one disorder sample")
    seeds = np.random.SeedSequence([int(cfg.seed), 0xD15]).generate_state(samples)

    def job(s):
        w = sample_bernoulli(g, kind, p, int(seeds[s]))
        return estimator(w, cfg, s)

    ests = _map(job, range(samples))
    means = np.array([e.mean for e in ests])
    if samples == 1:
        e = ests[0]
        return replace(e, dsamples=1)
    se = float(means.std(ddof=1) / math.sqrt(samples))
    return Estimate(float(means.mean()), se, float(sum(e.neff for e in ests)),
                    ests[0].replicas, samples, sum(e.samples for e in ests),
                    {"per_sample": means})


def disordered_height_spec(g: LatticeGraph, w, pot: EdgePotential) -> GibbsSpec:
    """Closed edges are rigid, open edges carry ``pot``."""
    return GibbsSpec(g, tuple(pot if b else EdgePotential.frozen() for b in w.bits), "height")


def disordered_angle_spec(g: LatticeGraph, w, pot: EdgePotential) -> GibbsSpec:
    """Closed edges carry no interaction."""
    return GibbsSpec(g, tuple(pot if b else EdgePotential.free() for b in w.bits), "angle")


_HEIGHT_MODELS = {"gff": EdgePotential.gaussian, "zxy": EdgePotential.bessel}


def height_box_variance(model: str, beta: float, p: float, L: int, cfg: ChainConfig,
                        dsamples: int = 1, d: int = 2) -> Estimate:
    """``E_p[Var[phi(0)]]`` on ``Lambda_L`` with zero boundary and edge disorder."""
    if model not in _HEIGHT_MODELS:
        raise ArgumentError(f"unknown height model {model!r}")
    g = with_exterior(build_lattice_box(d, L))
    pot = _HEIGHT_MODELS[model](beta)

    def est(w, c, s):
        spec = disordered_height_spec(g, w, pot)
        if _pinned_origin(spec):
            return Estimate(0.0, 0.0, float(c.samples), c.replicas, 1, c.samples)
        series = [height_series(spec, c, [g.origin], replica=r, sample=s)
                  for r in range(c.replicas)]
        return combine(batch_means(x[:, 0] ** 2) for x in series)

    if p >= 1.0:
        ones = sample_bernoulli(g, "edge", 1.0, 0)
        return est(ones, cfg, 0)
    return disorder_average(est, g, "edge", p, dsamples, cfg)


def _pinned_origin(spec: GibbsSpec) -> bool:
    sys = _height_system(spec)
    return int(sys.lab[spec.graph.origin]) == sys.pinned_slot


def villain_two_point(beta: float, p: float, L: int, distances, cfg: ChainConfig,
                      dsamples: int = 1, d: int = 2) -> list:
    """``E_p[<cos(theta_0 - theta_x)>]`` along the first axis, free boundary."""
    g = build_lattice_box(d, L)
    o = g.origin
    xs = [g.index_of((r,) + (0,) * (d - 1)) for r in distances]
    pairs = [(o, x) for x in xs]
    pot = EdgePotential.villain(beta)
    out = []
    for k in range(len(pairs)):
        def est(w, c, s, k=k):
            spec = disordered_angle_spec(g, w, pot)
            series = [angle_series(spec, c, pairs, replica=r, sample=s)
                      for r in range(c.replicas)]
            return combine(batch_means(x[:, k]) for x in series)
        out.append(disorder_average(est, g, "edge", p, dsamples, cfg))
    return out


def villain_profile(beta: float, p: float, L: int, distances, cfg: ChainConfig,
                    dsamples: int = 1, d: int = 2) -> list:
    """Like :func:`villain_two_point` but one chain per disorder sample serves all distances."""
    g = build_lattice_box(d, L)
    o = g.origin
    xs = [g.index_of((r,) + (0,) * (d - 1)) for r in distances]
    pairs = [(o, x) for x in xs]
    pot = EdgePotential.villain(beta)
    seeds = np.random.SeedSequence([int(cfg.seed), 0xD15]).generate_state(dsamples)

    def job(s):
        w = sample_bernoulli(g, "edge", p, int(seeds[s])) if p < 1 else \
            sample_bernoulli(g, "edge", 1.0, 0)
        spec = disordered_angle_spec(g, w, pot)
        series = [angle_series(spec, cfg, pairs, replica=r, sample=s)
                  for r in range(cfg.replicas)]
        return [combine(batch_means(x[:, k]) for x in series) for k in range(len(pairs))]

    per = _map(job, range(dsamples))
    out = []
    for k in range(len(pairs)):
        ests = [row[k] for row in per]
        if dsamples == 1:
            out.append(ests[0])
            continue
        m = np.array([e.mean for e in ests])
        out.append(Estimate(float(m.mean()), float(m.std(ddof=1) / math.sqrt(dsamples)),
                            float(sum(e.neff for e in ests)), cfg.replicas, dsamples,
                            sum(e.samples for e in ests)))
    return out


@dataclass
class Fit:
    slope: float
    intercept: float
    stderr: float

    @property
    def t(self) -> float:
        return math.inf if self.stderr == 0 else self.slope / self.stderr


def weighted_fit(x, y, se) -> Fit:
    """Weighted least squares line ``y = a + b x``; ``stderr`` of ``b``."""
    x, y, se = (np.asarray(v, dtype=float) for v in (x, y, se))
    w = 1.0 / np.maximum(se, 1e-12) ** 2
    W = w.sum()
    xm = (w * x).sum() / W
    ym = (w * y).sum() / W
    sxx = (w * (x - xm) ** 2).sum()
    b = (w * (x - xm) * (y - ym)).sum() / sxx
    return Fit(float(b), float(ym - b * xm), float(math.sqrt(1.0 / sxx)))


def variance_scan(model: str, betas, ps, Ls, cfg: ChainConfig, dsamples: int = 1) -> tuple:
    """Rows ``(model, beta, p, L, Estimate)`` and one ``ln L`` fit per ``(beta, p)``."""
    if not (list(betas) and list(ps) and list(Ls)):
        raise ArgumentError("scan lists must be nonempty")
    rows, fits = [], {}
    for beta in betas:
        for p in ps:
            ests = []
            for L in Ls:
                c = replace(cfg, seed=hash((cfg.seed, L)) & 0x7FFFFFFF)
                e = height_box_variance(model, beta, p, L, c, dsamples)
                rows.append((model, beta, p, L, e))
                ests.append(e)
            if len(Ls) > 1:
                fits[(beta, p)] = weighted_fit(np.log(Ls), [e.mean for e in ests],
                                               [e.stderr for e in ests])
    return rows, fits
