"""Command-line entry point: ``bosemix {check,hartree,manybody,sweep,fit,plots}``."""

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from .. import io
from ..meanfield import HartreeState, HartreeSystem, MixtureSize
from .config import ConfigError, load_config
from .fit import FitError, fit_rate
from .plots import emit_plots
from .sweep import NUMERICAL_FAILURES, _fmt, run_point, run_sweep, sweep_failed, write_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _cmd_check(args):
    cfg = load_config(args.config)
    print(f"config ok: R^2 = {cfg.R2}, {len(cfg.mixtures)} mixture point(s), kinds {cfg.kinetic1.kind}/{cfg.kinetic2.kind}")
    print(f"(SR) margin: {cfg.sr_margin:.6f}")
    return EXIT_OK


def _cmd_hartree(args):
    cfg = load_config(args.config)
    out = Path(args.output or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    mixture = cfg.mixtures[0]
    system = HartreeSystem(cfg.grid, cfg.couplings, cfg.kinetic1, cfg.kinetic2, mixture.R)
    psi0, phi0 = cfg.initial_fields()
    state = HartreeState(psi0, phi0, 0.0)
    dt = cfg.dt / cfg.hartree_substeps
    stride = cfg.stride * cfg.hartree_substeps
    n_total = cfg.n_steps * cfg.hartree_substeps
    e0 = system.energy_report(state, mixture).e_total
    rows, step = [], 0
    while True:
        rep = system.energy_report(state, mixture)
        rows.append((step * dt, state.psi.norm(), state.phi.norm(), rep.e_total,
                     abs(rep.e_total - e0) / max(abs(e0), 1e-300)))
        if step >= n_total:
            break
        n = min(stride, n_total - step)
        if cfg.integrator == "picard":
            state = system.picard_solve(state, n * dt, n_quad=n + 1, tol=1e-11).state
        else:
            state = system.evolve(state, dt, n, order=cfg.order)
        step += n
    with open(out / "hartree.csv", "w") as fh:
        fh.write("t,mass1,mass2,energy,energy_drift\n")
        for r in rows:
            fh.write(",".join(_fmt(x) for x in r) + "\n")
    for name, f in (("psi", state.psi), ("phi", state.phi)):
        path = out / f"{name}.bmix"
        io.write_field(path, f)
        io.write_sidecar(path, state.t, cfg.couplings, (cfg.kinetic1, cfg.kinetic2), mixture)
    print(f"wrote {out / 'hartree.csv'}; final energy drift {rows[-1][-1]:.3e}")
    return EXIT_OK


def _cmd_manybody(args):
    cfg = load_config(args.config)
    out = Path(args.output or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    mixture = MixtureSize(args.N1, args.N2) if args.N1 else cfg.mixtures[0]
    if mixture.R2 != cfg.R2:
        raise ConfigError([f"(MF) N=({mixture.N1},{mixture.N2}) does not match R^2 = {cfg.R2}"])
    rows, summary = run_point(cfg, mixture)
    write_csv(out / "manybody.csv", rows)
    (out / "manybody.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    if summary["status"] != "ok":
        print(f"numerical failure: {summary['error']}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"wrote {out / 'manybody.csv'}; {summary['violations']} violation(s)")
    return EXIT_OK


def _cmd_sweep(args):
    cfg = load_config(args.config)
    if args.workers:
        cfg.workers = args.workers
    out = run_sweep(cfg, args.output)
    print(f"wrote {out / 'sweep.csv'} and {out / 'summary.json'}")
    return EXIT_NUMERICAL if sweep_failed(out) else EXIT_OK


def _cmd_fit(args):
    fit = fit_rate(args.csv, args.quantity, args.t, args.theta)
    rec = asdict(fit)
    rec["deviation"] = fit.deviation
    print(json.dumps(rec, indent=2))
    return EXIT_OK


def _cmd_plots(args):
    for p in emit_plots(args.dir):
        print(p)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="bosemix", description="Two-species Bose mixture mean-field diagnostics")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="validate a config and report the (SR) margin")
    c.add_argument("config")
    c.set_defaults(func=_cmd_check)

    for name, func, hlp in (("hartree", _cmd_hartree, "mean-field run only"),
                            ("manybody", _cmd_manybody, "one exact N-body run with diagnostics"),
                            ("sweep", _cmd_sweep, "all mixture points, CSV and JSON summary")):
        s = sub.add_parser(name, help=hlp)
        s.add_argument("config")
        s.add_argument("-o", "--output", help="output directory (default from config)")
        s.set_defaults(func=func)
        if name == "manybody":
            s.add_argument("--N1", type=int)
            s.add_argument("--N2", type=int)
        if name == "sweep":
            s.add_argument("-j", "--workers", type=int)

    f = sub.add_parser("fit", help="log-log rate fit of a sweep quantity against N1")
    f.add_argument("csv")
    f.add_argument("--quantity", default="a1+a2")
    f.add_argument("--t", type=float, required=True)
    f.add_argument("--theta", type=float, default=0.0)
    f.set_defaults(func=_cmd_fit)

    pl = sub.add_parser("plots", help="emit plotting scripts for a sweep directory")
    pl.add_argument("dir")
    pl.set_defaults(func=_cmd_plots)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_FAILURES as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (FitError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
