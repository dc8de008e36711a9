"""Experiment configuration, scenario runners and the acceptance runner.

A configuration file holds ``key = value`` lines; values are Python
literals (numbers, strings, lists). Lines starting with ``#`` are ignored.
Recognised keys:

``scenario``
    one of :data:`SCENARIOS`.
``beta``, ``beta1``, ``beta2``, ``p``, ``L``, ``n``, ``L0``, ``lam``, ``x``
    parameter grids; a scalar is read as a one-element grid.
``seed``, ``sweeps``, ``burn_in``, ``replicas``, ``dsamples``, ``seeds``
    integers.
``out``
    output directory.
``max_seconds``
    wall-clock budget; when exceeded the CSV is closed with a marker line.

Outputs are comma-separated with a header row; for a fixed seed they are
byte-identical across runs.
"""
from __future__ import annotations

import ast
import csv
import io
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import acceptance, mcmc
from .errors import ArgumentError
from .exact import GibbsSpec, exact_angle, exact_height, two_point
from .inequalities import abstract_graph, annealed_villain, chain
from .percolation import required_radius, sample_box_edges
from .potentials import EdgePotential, MixingMeasure, mixture_identity_check
from .renorm import bound_chain, coarse_grain

SCENARIOS = ("bkt-villain", "deloc-gff", "deloc-zxy", "annealed-villain", "annealed-potential",
             "wells-suite", "duality-suite", "renorm-suite")

_GRIDS = ("beta", "beta1", "beta2", "p", "L", "n", "L0", "lam", "x")
_INTS = ("seed", "sweeps", "burn_in", "replicas", "dsamples", "seeds")

_DEFAULTS = {
    "bkt-villain": {"beta": [5.0], "p": [0.9], "L": [16], "x": [2, 4, 8], "sweeps": 20_000},
    "deloc-gff": {"beta": [10.0], "p": [1.0, 0.9], "L": [8, 16, 32], "sweeps": 10_000},
    "deloc-zxy": {"beta": [10.0], "p": [1.0, 0.9], "L": [8, 16, 32], "sweeps": 10_000},
    "annealed-villain": {"beta": [0.5, 1.0, 2.0]},
    "annealed-potential": {"beta": [0.5, 1.0, 2.0], "L": [1]},
    "wells-suite": {},
    "duality-suite": {},
    "renorm-suite": {"p": [0.85], "beta": [0.4], "L0": [1], "seeds": 10},
}


@dataclass
class ExperimentConfig:
    scenario: str
    grids: dict = field(default_factory=dict)
    seed: int = 0
    out: str = "."
    sweeps: int = 10_000
    burn_in: int | None = None
    replicas: int = 1
    dsamples: int = 4
    seeds: int = 10
    max_seconds: float = math.inf

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ArgumentError(f"unknown scenario {self.scenario!r}")
        merged = dict(_DEFAULTS[self.scenario])
        merged.update(self.grids)
        grids = {}
        for k, v in merged.items():
            if k in _INTS:
                setattr(self, k, int(v))
                continue
            v = list(v) if isinstance(v, (list, tuple)) else [v]
            if not v:
                raise ArgumentError(f"grid {k!r} is empty")
            grids[k] = v
        self.grids = grids
        if self.sweeps < 1 or self.replicas < 1 or self.dsamples < 1 or self.max_seconds <= 0:
            raise ArgumentError("budgets must be positive")

    def chain(self) -> mcmc.ChainConfig:
        burn = self.sweeps // 10 if self.burn_in is None else self.burn_in
        return mcmc.ChainConfig(sweeps=self.sweeps, burn_in=burn, seed=self.seed,
                                replicas=self.replicas)


def parse_config(text: str) -> dict:
    """``key = literal`` lines to a dict."""
    out = {}
    for i, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ArgumentError(f"line {i}: expected key = value")
        k, v = (t.strip() for t in line.split("=", 1))
        try:
            out[k] = ast.literal_eval(v)
        except (ValueError, SyntaxError):
            out[k] = v
    return out


def load_config(path, **override) -> ExperimentConfig:
    raw = parse_config(Path(path).read_text())
    raw.update({k: v for k, v in override.items() if v is not None})
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    raw = dict(raw)
    if "scenario" not in raw:
        raise ArgumentError("config needs a scenario")
    kw = {k: raw.pop(k) for k in ("scenario", "out", "max_seconds", "burn_in") if k in raw}
    if "max_seconds" in kw:
        kw["max_seconds"] = float(kw["max_seconds"])
    return ExperimentConfig(grids=raw, **kw)


# ---------------------------------------------------------------------------
# scenarios; each yields CSV rows after a header


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _deloc(cfg: ExperimentConfig, model: str):
    yield ["model", "beta", "p", "L", "mean", "stderr", "neff", "replicas", "dsamples"]
    fits = []
    for beta in cfg.grids["beta"]:
        for p in cfg.grids["p"]:
            ests = []
            for L in cfg.grids["L"]:
                c = cfg.chain()
                e = mcmc.height_box_variance(model, float(beta), float(p), int(L), c,
                                             dsamples=1 if p >= 1 else cfg.dsamples)
                ests.append(e)
                yield [model, beta, p, L, e.mean, e.stderr, e.neff, e.replicas, e.dsamples]
            if len(ests) > 1:
                f = mcmc.weighted_fit([math.log(L) for L in cfg.grids["L"]],
                                      [e.mean for e in ests], [e.stderr for e in ests])
                fits.append((beta, p, f))
    for beta, p, f in fits:
        yield ["#fit", beta, p, "lnL", f.slope, f.stderr, f.t, "", ""]


def _bkt(cfg: ExperimentConfig):
    yield ["model", "beta", "p", "L", "x", "mean", "stderr", "neff", "replicas", "dsamples"]
    c = cfg.chain()
    c = mcmc.ChainConfig(c.sweeps, c.burn_in, c.thin, 0.6, c.seed, c.replicas)
    xs = [int(x) for x in cfg.grids["x"]]
    for beta in cfg.grids["beta"]:
        for p in cfg.grids["p"]:
            for L in cfg.grids["L"]:
                ests = mcmc.villain_profile(float(beta), float(p), int(L), xs, c,
                                            dsamples=1 if p >= 1 else cfg.dsamples)
                for x, e in zip(xs, ests):
                    yield ["villain", beta, p, L, x, e.mean, e.stderr, e.neff, e.replicas,
                           e.dsamples]


_KAPPA = MixingMeasure.points([(0.5, 0.3), (2.0, 0.7)])


def _annealed_villain(cfg: ExperimentConfig):
    yield ["graph", "beta", "annealed", "quenched_mean", "z_weighted", "margin"]
    graphs = {"pair": (abstract_graph(2, [(0, 1), (0, 1)]), 0, 1),
              "triangle": (abstract_graph(3, [(0, 1), (1, 2), (0, 2)]), 0, 1)}
    for beta in cfg.grids["beta"]:
        for name, (g, x, y) in graphs.items():
            c = annealed_villain(g, float(beta), _KAPPA, x, y)
            yield [name, beta, c.rhs, c.lhs, c.extra["weighted"], c.margin]


def _annealed_potential(cfg: ExperimentConfig):
    yield ["quantity", "beta", "L", "value", "err"]
    yield ["mixture_identity_abs", "", "", mixture_identity_check("abs", [0, 0.5, 1, 2, 4]), ""]
    for L in cfg.grids["L"]:
        g = chain(int(L))
        for beta in cfg.grids["beta"]:
            spec = GibbsSpec.build(g, EdgePotential.mixture(_KAPPA, float(beta)), "height")
            r = exact_height(spec)
            yield ["var_phi0_mixture", beta, L, r.value, r.err]
            spec = GibbsSpec.build(g, EdgePotential.gaussian(float(beta)), "height")
            r = exact_height(spec)
            yield ["var_phi0_gaussian", beta, L, r.value, r.err]


def _rows_scenario(fns):
    def run(cfg):
        yield ["test_id", "anchor", "lhs", "rhs", "margin", "tol", "verdict"]
        for fn in fns:
            for r in fn():
                d = r.as_dict()
                yield [d[k] for k in ("test_id", "anchor", "lhs", "rhs", "margin", "tol",
                                      "verdict")]
    return run


def _renorm(cfg: ExperimentConfig):
    yield ["p", "beta", "L0", "seed", "fine", "thinned", "coarse", "pockets_merged"]
    for p in cfg.grids["p"]:
        for beta in cfg.grids["beta"]:
            for L0 in cfg.grids["L0"]:
                R = required_radius(int(L0), 1, True)
                for s in range(cfg.seeds):
                    w = sample_box_edges(R, float(p), cfg.seed + s)
                    ch = bound_chain(w, int(L0), float(beta))
                    cs = coarse_grain(w, int(L0), float(beta), 1, True)
                    yield [p, beta, L0, cfg.seed + s] + [r.value for _, r in ch] + \
                        [cs.extra["pockets_merged"]]


_RUNNERS = {
    "deloc-gff": lambda c: _deloc(c, "gff"),
    "deloc-zxy": lambda c: _deloc(c, "zxy"),
    "bkt-villain": _bkt,
    "annealed-villain": _annealed_villain,
    "annealed-potential": _annealed_potential,
    "wells-suite": _rows_scenario([acceptance.criterion_1, acceptance.criterion_2,
                                   acceptance.criterion_3]),
    "duality-suite": _rows_scenario([acceptance.criterion_4]),
    "renorm-suite": _renorm,
}


def run_experiment(cfg: ExperimentConfig) -> Path:
    """Write ``<out>/<scenario>.csv`` and return its path."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{cfg.scenario}.csv"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    t0 = time.perf_counter()
    for row in _RUNNERS[cfg.scenario](cfg):
        w.writerow([_fmt(v) for v in row])
        if time.perf_counter() - t0 > cfg.max_seconds:
            w.writerow(["#incomplete", "budget exceeded"])
            break
    path.write_text(buf.getvalue())
    return path


# ---------------------------------------------------------------------------
# acceptance


def run_acceptance(criteria=None, out=None, echo=print, **kw) -> tuple:
    """Run acceptance criteria; returns ``(rows, exit_status)``.

    ``kw`` maps a criterion number to keyword arguments for it.
    """
    criteria = sorted(acceptance.CRITERIA) if criteria is None else list(criteria)
    rows = []
    for k in criteria:
        rs = acceptance.run_criterion(k, **kw.get(k, {}))
        rows += rs
        if echo:
            ok = all(r.verdict for r in rs)
            echo(f"criterion {k}: {'PASS' if ok else 'FAIL'} "
                 f"({sum(r.verdict for r in rs)}/{len(rs)} rows)")
            for r in rs:
                if not r.verdict:
                    echo(f"  failed: {r.test_id} margin={r.margin:.4g} tol={r.tol:.1g}")
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        with open(Path(out) / "acceptance.csv", "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=list(rows[0].as_dict()), lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow(r.as_dict())
    return rows, 0 if all(r.verdict for r in rows) else 1


def set_threads(n: int | None) -> None:
    if n is not None:
        if n < 1:
            raise ArgumentError("threads must be positive")
        os.environ["QUENCHLAB_THREADS"] = str(n)
