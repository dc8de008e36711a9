"""Command line entry point ``quenchlab``."""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import lab, mcmc
from .duality import duality_check, ghost_graph
from .errors import QuenchlabError
from .exact import GibbsSpec, exact_angle, exact_height, two_point
from .graph import build_lattice_box, with_exterior
from .percolation import (dual_config, dumps, good_box, renormalized_sites, required_radius,
                          sample_box_edges)
from .potentials import EdgePotential
from .renorm import bound_chain, coarse_grain

_POT = {"xy": ("angle", EdgePotential.xy), "villain": ("angle", EdgePotential.villain),
        "gff": ("height", EdgePotential.gaussian), "zxy": ("height", EdgePotential.bessel)}


def _writer(out):
    if out is None or out == "-":
        return csv.writer(sys.stdout, lineterminator="\n"), None
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    f = open(out, "w", newline="")
    return csv.writer(f, lineterminator="\n"), f


def _finish(f):
    if f is not None:
        f.close()


def cmd_perc(a):
    w = sample_box_edges(a.L, a.p, a.seed)
    if a.action == "sample":
        sys.stdout.write(dumps(w))
    elif a.action == "dual":
        ds = dual_config(w)
        back = dual_config(ds)
        print(f"dual_closed_fraction={float((ds.bits == 0).mean()):.6f} "
              f"involution={int(bool((back.bits == w.bits).all()))}")
    elif a.action == "goodbox":
        rep = good_box(dual_config(w), (0, 0), a.L0, micro=a.micro)
        print(f"good={int(rep.verdict)} checked={rep.checked}")
    else:
        r1 = renormalized_sites(w, a.L0, 1, a.micro)
        print(" ".join(str(int(b)) for b in r1.bits))
    return 0


def cmd_exact(a):
    fam, make = _POT[a.model]
    g = build_lattice_box(a.d, a.L)
    wr, f = _writer(a.out)
    wr.writerow(["quantity", "value", "err_bound", "K", "M", "work"])
    if fam == "angle":
        y = g.index_of((a.L,) + (0,) * (a.d - 1))
        res = exact_angle(GibbsSpec.build(g, make(a.beta), "angle"), two_point(g.origin, y))
        q = f"cos(theta_0-theta_{a.L})"
    else:
        res = exact_height(GibbsSpec.build(with_exterior(g), make(a.beta), "height"))
        q = "var_phi0"
    wr.writerow([q, repr(res.value), repr(res.err), res.K, res.M, res.work])
    _finish(f)
    return 0


def cmd_mcmc(a):
    cfg = mcmc.ChainConfig(sweeps=a.sweeps, burn_in=a.sweeps // 10, seed=a.seed,
                           replicas=a.replicas)
    wr, f = _writer(a.out)
    wr.writerow(["model", "beta", "p", "L", "mean", "stderr", "neff", "replicas", "dsamples"])
    if a.model in ("gff", "zxy"):
        e = mcmc.height_box_variance(a.model, a.beta, a.p, a.L, cfg, a.dsamples)
    else:
        e = mcmc.villain_profile(a.beta, a.p, a.L, [max(1, a.L // 2)], cfg, a.dsamples)[0]
    wr.writerow([a.model, a.beta, a.p, a.L, repr(e.mean), repr(e.stderr), repr(e.neff),
                 e.replicas, e.dsamples])
    _finish(f)
    return 0


def cmd_duality(a):
    r = None
    if a.disorder:
        g = ghost_graph(a.L, a.n)
        r = {}
        for line in Path(a.disorder).read_text().split("\n"):
            parts = line.split()
            if len(parts) >= a.d + 1:
                r[g.index_of(tuple(int(t) for t in parts[:a.d]))] = int(parts[a.d])
    rep = duality_check(a.L, a.n, a.beta1, a.beta2, a.lam, r, d=a.d)
    wr, f = _writer(a.out)
    wr.writerow(["L", "n", "lambda", "beta1", "beta2", "height_side", "spin_side", "margin",
                 "z_rel_err"])
    wr.writerow([a.L, a.n, a.lam, a.beta1, a.beta2, repr(rep.height), repr(rep.spin),
                 repr(rep.diff), repr(rep.z_rel_err)])
    _finish(f)
    return 0


def cmd_renorm(a):
    micro = a.micro or a.L0 < 10
    R = required_radius(a.L0, a.window, micro)
    w = sample_box_edges(R, a.p, a.seed)
    cs = coarse_grain(w, a.L0, a.beta, a.window, micro)
    wr, f = _writer(a.out)
    wr.writerow(["key", "value"])
    wr.writerow(["open_cells", int(cs.r1.bits.sum())])
    wr.writerow(["c_edges", int(cs.omega_c.sum())])
    wr.writerow(["pockets_merged", cs.extra["pockets_merged"]])
    for (u, v), n in sorted(cs.counts.items()):
        wr.writerow([f"count_{u}_{v}", n])
    if a.window == 1:
        for label, res in bound_chain(w, a.L0, a.beta, a.window, micro):
            wr.writerow([f"var_{label}", repr(res.value)])
    _finish(f)
    return 0


def cmd_scan(a):
    if a.config is None:
        raise QuenchlabError("scan needs --config")
    cfg = lab.load_config(a.config, seed=a.seed if a.seed_given else None, out=a.out)
    print(lab.run_experiment(cfg))
    return 0


def cmd_accept(a):
    _, status = lab.run_acceptance(a.criteria or None, out=a.out)
    return status


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", default=None)
    common.add_argument("--threads", type=int, default=None)

    p = argparse.ArgumentParser(prog="quenchlab")
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("perc", parents=[common])
    s.add_argument("action", choices=["sample", "dual", "goodbox", "renorm"])
    s.add_argument("--p", type=float, default=0.5)
    s.add_argument("--L", type=int, default=12)
    s.add_argument("--L0", type=int, default=10)
    s.add_argument("--micro", action="store_true")
    s.set_defaults(fn=cmd_perc)

    s = sub.add_parser("exact", parents=[common])
    s.add_argument("--model", choices=sorted(_POT), default="gff")
    s.add_argument("--beta", type=float, default=1.0)
    s.add_argument("--L", type=int, default=1)
    s.add_argument("--d", type=int, default=1)
    s.set_defaults(fn=cmd_exact)

    s = sub.add_parser("mcmc", parents=[common])
    s.add_argument("--model", choices=["gff", "zxy", "villain"], default="gff")
    s.add_argument("--beta", type=float, default=1.0)
    s.add_argument("--p", type=float, default=1.0)
    s.add_argument("--L", type=int, default=8)
    s.add_argument("--sweeps", type=int, default=10_000)
    s.add_argument("--replicas", type=int, default=1)
    s.add_argument("--dsamples", type=int, default=1)
    s.set_defaults(fn=cmd_mcmc)

    s = sub.add_parser("duality", parents=[common])
    s.add_argument("action", choices=["check"], nargs="?", default="check")
    s.add_argument("--L", type=int, default=0)
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--lambda", dest="lam", type=float, default=2.0)
    s.add_argument("--beta1", type=float, default=1.0)
    s.add_argument("--beta2", type=float, default=1.0)
    s.add_argument("--disorder", default=None, help="lines 'x y r'")
    s.set_defaults(fn=cmd_duality)

    s = sub.add_parser("renorm", parents=[common])
    s.add_argument("--p", type=float, default=0.85)
    s.add_argument("--L0", type=int, default=1)
    s.add_argument("--beta", type=float, default=0.4)
    s.add_argument("--window", type=int, default=1)
    s.add_argument("--micro", action="store_true")
    s.set_defaults(fn=cmd_renorm)

    s = sub.add_parser("scan", parents=[common])
    s.set_defaults(fn=cmd_scan)

    s = sub.add_parser("accept", parents=[common])
    s.add_argument("criteria", nargs="*", type=int)
    s.set_defaults(fn=cmd_accept)
    return p


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    lab.set_threads(a.threads)
    a.seed_given = a.seed is not None
    if a.seed is None:
        a.seed = 0
    try:
        return a.fn(a)
    except QuenchlabError as e:
        print(f"quenchlab: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
