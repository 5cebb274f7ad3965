"""Command-line front end.

Every subcommand writes CSV or JSON files into ``--out``.  CSV files start with
a comment line carrying the config hash and tool version, then a header row;
floats are written with 17 significant digits so reruns are byte-identical.

Exit codes: 0 success, 2 invalid configuration, 3 dimension/truncation guard.
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .equilibrium import ClassicalGibbs, QuantumGibbs, kms_residual_classical, kms_residual_quantum
from .lattice import GuardError, LatticeObservable, Region
from .semiclassics import cartesian, derivation_limit_defect, dgr_defect, gibbs_limit_gap, scan
from .su2_special import clebsch_gordan, six_j, wigner_small_d
from .uniqueness import (
    Truncation,
    beta_classical,
    beta_quantum,
    k_s,
    ks_solve_classical,
    ks_solve_quantum,
    potential_norm,
)

DEFAULT_CONFIG = """
[[potential.terms]]
offsets = [[0]]
coeffs = [{site = 0, l = 1, m = 0, re = 0.5, im = 0.0}]
"""


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        if v == 0:
            return "0"
        return format(v, ".17g")
    return str(v)


def spin_str(t2: int) -> str:
    return str(t2 // 2) if t2 % 2 == 0 else f"{t2}/2"


class Writer:
    def __init__(self, out: str, header_comment: str):
        self.out = out
        self.comment = header_comment
        os.makedirs(out, exist_ok=True)

    def csv(self, name, header, rows, footer=None):
        path = os.path.join(self.out, name)
        with open(path, "w", newline="\n") as fh:
            fh.write(f"# {self.comment}\n")
            fh.write(",".join(header) + "\n")
            for r in rows:
                fh.write(",".join(fmt(v) for v in r) + "\n")
            if footer:
                fh.write(",".join(fmt(v) for v in footer) + "\n")
        return path

    def json(self, name, obj):
        path = os.path.join(self.out, name)
        with open(path, "w", newline="\n") as fh:
            fh.write(to_json(obj) + "\n")
        return path


def to_json(obj, indent=0) -> str:
    pad = "  " * (indent + 1)
    if isinstance(obj, dict):
        items = [f'{pad}{json.dumps(str(k))}: {to_json(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(to_json(v, indent + 1) for v in obj) + "]"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (float, np.floating)) and not math.isfinite(float(obj)):
        return json.dumps(fmt(obj))
    return fmt(obj)


def _js(cfg: ExperimentConfig, default):
    return [float(j) for j in cfg.get("js", default)]


def _observable(cfg, name, default):
    return cfg.observables.get(name, default)


# ---------------------------------------------------------------------------
# subcommands


def cmd_special(args, cfg, w: Writer):
    tmax = int(round(2 * args.max_j))
    if args.kind == "cg":
        rows = []
        for t1 in range(tmax + 1):
            for t2 in range(tmax + 1):
                for tj in range(abs(t1 - t2), t1 + t2 + 1, 2):
                    for m1 in range(-t1, t1 + 1, 2):
                        for m2 in range(-t2, t2 + 1, 2):
                            M = m1 + m2
                            if abs(M) > tj:
                                continue
                            v = clebsch_gordan(t1 / 2, m1 / 2, t2 / 2, m2 / 2, tj / 2, M / 2)
                            rows.append([spin_str(t1), spin_str(m1), spin_str(t2), spin_str(m2), spin_str(tj), spin_str(M), v])
        w.csv("special_cg.csv", ["j1", "m1", "j2", "m2", "j", "m", "value"], rows)
    elif args.kind == "6j":
        rows = []
        rng = range(tmax + 1)
        for a, b, c, d, e, f in itertools.product(rng, repeat=6):
            v = six_j(a / 2, b / 2, c / 2, d / 2, e / 2, f / 2)
            if v != 0.0:
                rows.append([spin_str(x) for x in (a, b, c, d, e, f)] + [v])
        w.csv("special_6j.csv", ["j1", "j2", "j3", "j4", "j5", "j6", "value"], rows)
    else:
        rows = []
        betas = [0.5, 1.25, 2.75]
        for tj in range(tmax + 1):
            for tm in range(-tj, tj + 1, 2):
                for tk in range(-tj, tj + 1, 2):
                    for b in betas:
                        v = wigner_small_d(tj / 2, tm / 2, tk / 2, b)
                        rows.append([spin_str(tj), spin_str(tm), spin_str(tk), b, v])
        w.csv("special_d.csv", ["j", "m", "k", "beta", "value"], rows)
    return 0


def _scan_csv(w, name, res):
    footer = ["slope", res.slope if res.slope is not None else "identically_zero"]
    w.csv(name, ["j", "value"], res.rows(), footer)


def cmd_dgr_scan(args, cfg, w):
    x1, x2, _ = cartesian()
    a = _observable(cfg, "a", x1)
    b = _observable(cfg, "b", x2)
    res = scan(dgr_defect, _js(cfg, [0.5, 1, 1.5, 2, 3, 4, 6, 8, 10]), a, b)
    _scan_csv(w, "dgr_scan.csv", res)
    return 0


def cmd_deriv_limit(args, cfg, w):
    a = _observable(cfg, "a", LatticeObservable.monomial(Region.path(1), [((0,), 1, 1)]))
    res = scan(derivation_limit_defect, _js(cfg, [1, 2, 3, 4, 5]), cfg.potential, a)
    _scan_csv(w, "deriv_limit.csv", res)
    return 0


def cmd_gibbs_compare(args, cfg, w):
    region = cfg.region()
    a = _observable(cfg, "a", LatticeObservable.monomial(Region.path(1), [((0,), 1, 0)]))
    beta = float(cfg.get("beta", 1.0))
    degree = int(cfg.get("degree", 48))
    res = scan(gibbs_limit_gap, _js(cfg, [1, 2, 3, 4, 5, 6]), cfg.potential, region, beta, a, degree=degree)
    _scan_csv(w, "gibbs_compare.csv", res)
    return 0


def cmd_kms_check(args, cfg, w):
    region = cfg.region()
    rng = np.random.default_rng(args.seed)
    rows = []
    for beta in [float(b) for b in cfg.get("betas", [0.0, 0.1, 1.0])]:
        for j in _js(cfg, [0.5, 1]):
            g = QuantumGibbs(j, cfg.potential, region, beta)
            n = g.dim
            A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            B = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            scale = np.linalg.norm(A, 2) * np.linalg.norm(B, 2)
            rows.append(["quantum", j, beta, kms_residual_quantum(g, A, B) / scale])
        if len(region) <= 2:
            cg = ClassicalGibbs(cfg.potential, region, beta, int(cfg.get("degree", 32)))
            s0 = region.sites[0]
            a = LatticeObservable.monomial(region, [(s0, 1, 1)])
            b = LatticeObservable.monomial(region, [(s0, 1, -1)])
            rows.append(["classical", "", beta, kms_residual_classical(cg, a, b)])
    w.csv("kms_check.csv", ["kind", "j", "beta", "residual"], rows)
    return 0


def cmd_critical_beta(args, cfg, w):
    s, eps = args.s, args.eps
    K = k_s(s)
    out = {
        "k_s": K,
        "c_delta_mode": "spectral",
        "norm_0s": potential_norm(cfg.potential, 0.0, s, 1.0, K),
        "norm_eps_s": potential_norm(cfg.potential, eps, s, 1.0, K),
        "beta_classical": beta_classical(cfg.potential, s),
        "beta_quantum": beta_quantum(cfg.potential, eps, s),
    }
    w.json("critical_beta.json", out)
    return 0


def cmd_ks_solve(args, cfg, w):
    region = cfg.region()
    t = Truncation(region, args.lmax, args.nmax, args.haar_degree)
    if args.mode == "classical":
        rep = ks_solve_classical(cfg.potential, args.beta, t, s=args.s)
    else:
        if args.lmax > 2 * args.j:
            raise GuardError(f"lmax={args.lmax} exceeds 2j={2 * args.j}")
        rep = ks_solve_quantum(args.j, cfg.potential, args.beta, t, eps=args.eps, s=args.s)
    summary = {"mode": args.mode}
    if args.mode == "quantum":
        summary["j"] = args.j
    summary.update(rep.summary())
    w.json("ks_report.json", summary)
    w.csv("ks_moments.csv", ["region", "l", "m", "re", "im"], rep.moments.rows())
    return 0


COMMANDS = {
    "special": cmd_special,
    "dgr-scan": cmd_dgr_scan,
    "deriv-limit": cmd_deriv_limit,
    "gibbs-compare": cmd_gibbs_compare,
    "kms-check": cmd_kms_check,
    "critical-beta": cmd_critical_beta,
    "ks-solve": cmd_ks_solve,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (TOML)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    p = argparse.ArgumentParser(prog="berezin-kms", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("special", parents=[common], help="CG, 6j or Wigner-d tables")
    sp.add_argument("--kind", choices=["cg", "6j", "d"], required=True)
    sp.add_argument("--max-j", type=float, default=2.0)
    for name, text in [
        ("dgr-scan", "DGR defect scan over j"),
        ("deriv-limit", "derivation-limit defect scan over j"),
        ("gibbs-compare", "quantum vs classical Gibbs expectation gap over j"),
        ("kms-check", "KMS residuals of Gibbs states"),
    ]:
        sub.add_parser(name, parents=[common], help=text)
    cb = sub.add_parser("critical-beta", parents=[common], help="K_s, potential norms and thresholds")
    cb.add_argument("--s", type=int, default=2)
    cb.add_argument("--eps", type=float, default=1.0)
    ks = sub.add_parser("ks-solve", parents=[common], help="Kirkwood-Salzburg fixed point")
    ks.add_argument("--mode", choices=["classical", "quantum"], required=True)
    ks.add_argument("--beta", type=float, required=True)
    ks.add_argument("--lmax", type=int, default=6)
    ks.add_argument("--nmax", type=int, default=5)
    ks.add_argument("--haar-degree", type=int, default=24)
    ks.add_argument("--j", type=float, default=1.0)
    ks.add_argument("--s", type=int, default=2)
    ks.add_argument("--eps", type=float, default=1.0)
    return p


def _args_digest(args) -> str:
    skip = {"out", "threads", "config"}
    items = sorted((k, repr(v)) for k, v in vars(args).items() if k not in skip)
    return hashlib.sha256(repr(items).encode()).hexdigest()[:16]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config) if args.config else parse_config(DEFAULT_CONFIG, "<default>")
        if not args.config:
            cfg.raw = DEFAULT_CONFIG.encode()
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return 2
    comment = f"config_sha256={cfg.sha256} args={_args_digest(args)} tool=berezin-kms {__version__} command={args.command}"
    w = Writer(args.out, comment)
    try:
        return COMMANDS[args.command](args, cfg, w)
    except GuardError as e:
        print(f"guard: {e}", file=sys.stderr)
        return 3
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
