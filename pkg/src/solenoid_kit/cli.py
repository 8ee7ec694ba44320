"""Command-line driver: ``solenoid-kit <command> --config cfg.json --out dir``.

Exit codes: 0 success, 1 configuration or I/O error, 2 a mathematical check
failed or an iteration did not converge.  The config schema is described in
docs/config.md.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import multiplicity as mult
from . import pathspace as ps
from . import solenoid as sol
from . import transfer as tr
from . import wavelet as wv
from .dynamics import CircleMap, Point, circle_point, parse_system, structure_flags
from .errors import ConfigError, SolenoidKitError
from .steps import CircleFunction, StepFunction, dump_json

log = logging.getLogger("solenoid_kit")

EXIT_OK, EXIT_CONFIG, EXIT_MATH = 0, 1, 2


# ---------------------------------------------------------------------------
# config helpers

def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _params(cfg):
    p = cfg.get("params", {})
    if not isinstance(p, dict):
        raise ConfigError("params must be an object")
    return p


def get_filter(cfg):
    entry = cfg.get("filter")
    if entry is None:
        raise ConfigError("config needs a 'filter'")
    name = entry.get("name") if isinstance(entry, dict) else entry
    if name == "haar":
        return wv.haar(int(entry.get("N", 2)) if isinstance(entry, dict) else 2)
    if name == "shannon":
        return wv.shannon()
    if not isinstance(entry, dict):
        raise ConfigError(f"unknown filter {entry!r}")
    return wv.parse_filter(entry)


def get_system(cfg):
    if "system" in cfg:
        return parse_system(cfg["system"])
    if "filter" in cfg:
        return CircleMap(get_filter(cfg).N)
    raise ConfigError("config needs a 'system' or a 'filter'")


def get_step(sys, obj, what):
    try:
        vals = np.asarray(obj["values"], dtype=float)
        if vals.ndim == 2:
            vals = vals[:, 0] + 1j * vals[:, 1]
        return StepFunction(sys, int(obj["resolution"]), vals)
    except (KeyError, TypeError, ValueError, SolenoidKitError) as exc:
        raise ConfigError(f"bad step function for {what}: {exc}") from exc


def get_h(cfg, sys):
    if "h" not in cfg:
        return StepFunction.constant(sys, 1, 1.0)
    return get_step(sys, cfg["h"], "h")


def get_weight(cfg, sys):
    w = cfg.get("weight", "normalized")
    if w == "normalized":
        return tr.normalized_weight(sys, 2 if sys.kind == "sft" else 1)
    if isinstance(w, (int, float)) and not isinstance(w, bool):
        return StepFunction.constant(sys, 1, float(w))
    if isinstance(w, dict):
        return get_step(sys, w, "weight")
    raise ConfigError(f"bad weight {w!r}")


def get_point(sys, obj):
    if obj is None:
        if sys.kind == "circle":
            return circle_point(sys.N, 0, 1)
        raise ConfigError("params.x is required for symbolic systems")
    try:
        if "word" in obj:
            return Point(tuple(obj["word"]))
        return circle_point(sys.N, int(obj["j"]), int(obj["level"]))
    except (KeyError, TypeError, ValueError, SolenoidKitError) as exc:
        raise ConfigError(f"bad point {obj!r}: {exc}") from exc


def filter_step(filt, p):
    return wv.as_step(filt, int(p.get("level", 10)))


def _csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _num(v):
    return repr(float(v))


# ---------------------------------------------------------------------------
# commands

def cmd_perron(cfg, args):
    sys_ = get_system(cfg)
    W = get_weight(cfg, sys_)
    p = _params(cfg)
    data = tr.solve_perron(W, tol=args.tol or float(p.get("tol", 1e-12)),
                           maxit=int(p.get("maxit", 10000)), depth=p.get("depth"))
    dump_json(data.to_json(), os.path.join(args.out, "perron.json"))
    if args.figures:
        from .plotting import plot_bars
        plot_bars(data.h.values, os.path.join(args.out, "perron_h.png"),
                  f"eigenfunction h, lambda0 = {data.lambda0:.10g}", "h")
    return EXIT_OK


def cmd_check(cfg, args):
    filt = get_filter(cfg)
    p = _params(cfg)
    tol = args.tol or float(p.get("tol", 1e-10))
    m0 = filter_step(filt, p)
    sys_ = m0.sys
    h = get_h(cfg, sys_)
    fam = sol.OmegaFamily(m0, h)
    rng = np.random.default_rng(args.seed if args.seed is not None else int(p.get("seed", 0)))
    f = StepFunction(sys_, 3, rng.random(sys_.N ** 3))
    nmax = int(p.get("n", 3))
    words = int(p.get("words", 6))
    P = ps.PathMeasure(sys_, fam.W, h, circle_point(sys_.N, 0, 1))
    path_res = max(ps.consistency_residual(P, w)
                   for d in range(words) for w in ps.all_words(P, d))
    checks = [
        ("strong_invariance", tr.strong_invariance_residual(fam.mu)),
        ("prf", tr.prf_residual(m0, h)),
        ("omega_compat", max(sol.omega_compat_residual(fam, f, n) for n in range(nmax + 1))),
        ("radon_nikodym", max(sol.radon_nikodym_residual(fam, f, n) for n in range(nmax + 1))),
        ("path_consistency", path_res),
    ]
    report = {"tol": tol, "checks": [
        {"name": name, "value": float(v), "tol": tol, "pass": bool(v <= tol)}
        for name, v in checks]}
    report["pass"] = all(c["pass"] for c in report["checks"])
    dump_json(report, os.path.join(args.out, "check.json"))
    for c in report["checks"]:
        print(f"{c['name']:18s} {c['value']:.3e}  {'ok' if c['pass'] else 'FAILED'}")
    if args.figures:
        from .plotting import plot_bars
        plot_bars([max(c["value"], 1e-18) for c in report["checks"]],
                  os.path.join(args.out, "check.png"), "residuals", "value")
    return EXIT_OK if report["pass"] else EXIT_MATH


def cmd_cascade(cfg, args):
    filt = get_filter(cfg)
    p = _params(cfg)
    grid = wv.FreqGrid(float(p.get("T", 8.0)), int(p.get("M", 2048)))
    K = int(p.get("K", 8))
    s = wv.cascade_product(filt, filt.N, K, grid)
    s.to_csv(os.path.join(args.out, "cascade.csv"))
    summary = {"K": K, "T": grid.T, "M": grid.M,
               "phi_hat_at_0": float(abs(wv.cascade_eval(filt, filt.N, K, 0.0))),
               "scaling_residual_aligned": wv.scaling_residual(s, filt, filt.N, aligned_only=True),
               "scaling_residual": wv.scaling_residual(s, filt, filt.N)}
    dump_json(summary, os.path.join(args.out, "cascade.json"))
    if args.figures:
        from .plotting import plot_cascade
        plot_cascade(grid.x, s.values, os.path.join(args.out, "cascade.png"),
                     f"cascade product, K = {K}")
    return EXIT_OK


def _path_weight(cfg, sys_, p):
    """Analytic weight for coefficient filters, step weight otherwise."""
    if "filter" in cfg:
        filt = get_filter(cfg)
        if isinstance(filt, wv.FilterCoeffs):
            return CircleFunction(sys_, lambda x: np.abs(wv.m0_eval(filt, x)) ** 2 / filt.N, "W")
        return tr.filter_weight(filt.m0)
    return get_weight(cfg, sys_)


def cmd_pathsim(cfg, args):
    sys_ = get_system(cfg)
    p = _params(cfg)
    seed = args.seed if args.seed is not None else int(p.get("seed", 0))
    n = int(p.get("n", 8))
    samples = int(p.get("samples", 1000))
    h = get_h(cfg, sys_)
    W = _path_weight(cfg, sys_, p)
    f = get_step(sys_, p["f"], "f") if "f" in p else StepFunction.constant(sys_, 1, 1.0)
    P = ps.PathMeasure(sys_, W, h, get_point(sys_, p.get("x")))
    words, obs = ps.sample_paths(P, n, samples, seed, observe=[f])
    end = np.real(obs[0][:, -1])
    rows = [[i] + [int(k) for k in w] + [_num(v)] for i, (w, v) in enumerate(zip(words, end))]
    _csv(os.path.join(args.out, "pathsim.csv"),
         ["path"] + [f"w{j + 1}" for j in range(n)] + ["f_end"], rows)
    summary = {"n": n, "samples": samples, "seed": seed,
               "mean": float(end.mean()),
               "stderr": float(end.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0}
    if n:
        counts = np.bincount(words[:, 0], minlength=structure_flags(sys_)["max_branches"])
        summary["first_branch_frequencies"] = [float(c) / samples for c in counts]
    if p.get("disintegration") and "filter" in cfg:
        m0 = filter_step(get_filter(cfg), p)
        fam = sol.OmegaFamily(m0, h)
        d = ps.disintegration_residual(fam, f.real(), int(p.get("disintegration_n", min(n, 4))),
                                       samples=samples, seed=seed)
        summary["disintegration"] = {k: float(v) for k, v in d.items()}
    dump_json(summary, os.path.join(args.out, "pathsim.json"))
    if args.figures:
        from .plotting import plot_histogram
        plot_histogram(words[:, 0] if n else end, os.path.join(args.out, "pathsim.png"),
                       "first branch of sampled paths", "branch")
    return EXIT_OK


def cmd_multiplicity(cfg, args):
    sys_ = get_system(cfg)
    entry = cfg.get("multiplicity")
    if entry is None:
        raise ConfigError("config needs a 'multiplicity' object")
    m = mult.MultFn.from_json(entry, sys_)
    induced = mult.induced_multiplicity(m)
    dump_json(induced.to_json(), os.path.join(args.out, "induced.json"))
    detail = mult.detail_multiplicity(m)
    dump_json(detail.to_json(), os.path.join(args.out, "detail.json"))
    if args.figures:
        from .plotting import plot_bars
        plot_bars(np.nan_to_num(detail.values, posinf=-1), os.path.join(args.out, "detail.png"),
                  "detail multiplicity (inf drawn as -1)", "m_W")
    return EXIT_OK


def cmd_solenoid(cfg, args):
    filt = get_filter(cfg)
    p = _params(cfg)
    m0 = filter_step(filt, p)
    sys_ = m0.sys
    h = get_h(cfg, sys_)
    fam = sol.OmegaFamily(m0, h)
    xi = get_step(sys_, p["xi"], "xi") if "xi" in p else StepFunction.indicator(sys_, 1, [0])
    K = int(p.get("K", 4))
    m = sol.lift_to_martingale(fam, xi, int(p.get("n", 0)), K)
    norms = m.level_norms()
    _csv(os.path.join(args.out, "levels.csv"), ["level", "norm2"],
         [[i, _num(v)] for i, v in enumerate(norms)])
    out = m.to_json()
    out["norm"] = m.norm()
    out["compat_residual"] = m.compat_residual()
    out["U_norm"] = sol.apply_U(m).norm()
    dump_json(out, os.path.join(args.out, "martingale.json"))
    if args.figures:
        from .plotting import plot_series
        plot_series(norms, os.path.join(args.out, "levels.png"),
                    "level norms", "level n", r"$\omega_n(|\xi_n|^2)$")
    return EXIT_OK


COMMANDS = {"perron": cmd_perron, "check": cmd_check, "cascade": cmd_cascade,
            "pathsim": cmd_pathsim, "multiplicity": cmd_multiplicity,
            "solenoid": cmd_solenoid}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="experiment config (JSON)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=None, help="64-bit seed, overrides config")
    common.add_argument("--tol", type=float, default=None, help="tolerance, overrides config")
    common.add_argument("--figures", action="store_true", help="also write PNG figures")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="solenoid-kit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must fit in 64 bits", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, OSError, KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolenoidKitError, ArithmeticError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_MATH
