"""Convergence sweeps over N at fixed R: exact and mean-field runs side by side."""

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ..fidelity import SLACK, bound_checks, energy_bookkeeping
from ..fock import ManyBodyHamiltonian, StateSizeError, product_state, propagate, symmetry_defect
from ..krylov import LanczosError
from ..meanfield import HartreeState, HartreeSystem, MixtureSize, PicardError
from .config import RunConfig

log = logging.getLogger(__name__)

COLUMNS = ("t", "N1", "N2", "theta", "trace_norm", "hs_norm", "a1", "a2", "est_a_bound",
           "thm23_bound", "A_N", "B_N", "energy_drift", "violations")

NUMERICAL_FAILURES = (LanczosError, PicardError, StateSizeError, FloatingPointError)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return repr(float(x))


def _hartree_advance(system: HartreeSystem, state: HartreeState, cfg: RunConfig, n_exact: int):
    """Advance the mean-field pair by n_exact exact-propagation steps."""
    substeps = n_exact * cfg.hartree_substeps
    if cfg.integrator == "picard":
        res = system.picard_solve(state, n_exact * cfg.dt, n_quad=substeps + 1, tol=1e-11)
        return res.state
    return system.evolve(state, cfg.dt / cfg.hartree_substeps, substeps, order=cfg.order)


def run_point(cfg: RunConfig, mixture: MixtureSize):
    """One exact run and its mean-field partner. Returns (rows, summary dict)."""
    started = time.perf_counter()
    grid = cfg.grid
    psi0, phi0 = cfg.initial_fields()
    system = HartreeSystem(grid, cfg.couplings, cfg.kinetic1, cfg.kinetic2, mixture.R)
    rng = np.random.default_rng([cfg.seed, mixture.N1, mixture.N2])
    rows = []
    summary = {"N1": mixture.N1, "N2": mixture.N2, "status": "ok", "violations": 0}
    try:
        H = ManyBodyHamiltonian(grid, cfg.kinetic1, cfg.kinetic2, cfg.couplings, mixture)
        s = product_state(psi0, phi0, mixture)
        state = HartreeState(psi0, phi0, 0.0)
        e0 = H.expectation(s)
        h0 = system.energy_report(state, mixture).hN_per_particle
        worst = {"energy_drift": 0.0, "bookkeeping": 0.0, "symmetry": 0.0, "hartree_energy_drift": 0.0}
        step = 0
        while True:
            t = step * cfg.dt
            rep = bound_checks(s, state.psi, state.phi, cfg.kinetic1, cfg.kinetic2, cfg.k, cfg.l,
                               cfg.thetas, t=t, n_observables=cfg.observables, rng=rng)
            drift = abs(H.expectation(s) - e0) / max(abs(e0), 1e-300)
            lhs, rhs = energy_bookkeeping(s, state.psi, state.phi, H, system, psi0, phi0)
            book = abs(lhs - rhs)
            sym = symmetry_defect(s)
            h_drift = abs(system.energy_report(state, mixture).hN_per_particle - h0) / max(abs(h0), 1e-300)
            for key, val in (("energy_drift", drift), ("bookkeeping", book), ("symmetry", sym),
                             ("hartree_energy_drift", h_drift)):
                worst[key] = max(worst[key], val)
            violations = list(rep.violations)
            if book > SLACK:
                violations.append(f"energy_bookkeeping: |{lhs:.6e} - {rhs:.6e}| > {SLACK:g}")
            summary["violations"] += len(violations)
            for e in rep.thetas:
                rows.append((t, mixture.N1, mixture.N2, e.theta, e.trace_norm, e.hs_norm, rep.a1, rep.a2,
                             rep.est_a_bound, e.thm23_bound, rep.A_N, rep.B_N, drift, ";".join(violations)))
            if step >= cfg.n_steps:
                break
            n = min(cfg.stride, cfg.n_steps - step)
            s = propagate(H, s, cfg.dt, n)
            state = _hartree_advance(system, state, cfg, n)
            step += n
        summary.update(worst)
    except NUMERICAL_FAILURES as exc:
        log.error("N=(%d,%d) aborted: %s", mixture.N1, mixture.N2, exc)
        summary["status"] = "failed"
        summary["error"] = f"{type(exc).__name__}: {exc}"
    summary["wall_seconds"] = time.perf_counter() - started
    return rows, summary


def _run_point_args(args):
    return run_point(*args)


def write_csv(path: Path, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def run_sweep(cfg: RunConfig, output=None):
    """Run every mixture point and write sweep.csv and summary.json. Returns the output dir."""
    out = Path(output or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(cfg, m) for m in cfg.mixtures]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_point_args, jobs))
    else:
        results = [run_point(*j) for j in jobs]
    rows = [r for point_rows, _ in results for r in point_rows]
    write_csv(out / "sweep.csv", rows)
    summary = {
        "grid": {"d": cfg.grid.d, "M": cfg.grid.M, "L": cfg.grid.L},
        "kinds": [cfg.kinetic1.kind, cfg.kinetic2.kind],
        "R2": str(cfg.R2),
        "sr_margin": cfg.sr_margin,
        "T": cfg.T,
        "dt": cfg.dt,
        "integrator": cfg.integrator,
        "points": [s for _, s in results],
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return out


def sweep_failed(out: Path) -> bool:
    summary = json.loads((Path(out) / "summary.json").read_text())
    return any(p["status"] != "ok" for p in summary["points"])
