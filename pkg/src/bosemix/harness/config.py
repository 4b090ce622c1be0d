"""Run configuration: a TOML file with dotted sections, validated against the model assumptions.

Example::

    [grid]
    d = 1
    M = 8
    L = 8.0

    [kinetics.species1]
    kind = "semirelativistic"   # or "magnetic"
    mass = 1.0
    A = "zero"                  # magnetic only: "zero", a constant vector, or "sine"
    A_amplitude = 0.5           # used by "sine"

    [couplings]
    lambda11 = 0.0
    lambda22 = 0.0
    lambda12 = -1.0
    mu12 = 0.5
    # epsilon defaults to 2 h

    [mixture]
    pairs = [[1, 1], [2, 2], [3, 3]]

    [initial.species1]
    center = [-1.0]
    width = 1.0
    momentum = [1.0]

    [time]
    dt = 0.05          # exact propagation step
    T = 0.5
    stride = 5         # sample every `stride` exact steps
    hartree_substeps = 10
    order = 4          # Hartree splitting order, 2 or 4

    [diagnostics]
    thetas = [0.0, 0.25, 0.5, 0.75]
    k = 1
    l = 1
    observables = 20

    [run]
    integrator = "strang"   # or "picard"
    seed = 0
    output = "out"
    workers = 1
"""

import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import List, Tuple

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..interaction import CouplingMatrix, check_sr_stability
from ..lattice import KINDS, MAGNETIC, SEMIRELATIVISTIC, Field, GridSpec, KineticSpec, gaussian
from ..meanfield import MixtureSize

INTEGRATORS = ("strang", "picard")


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class SineProfile:
    """A_e(x) = amplitude sin(2 pi x_0 / L) in every component (periodic, bounded)."""

    amplitude: float
    L: float

    def __call__(self, x):
        val = self.amplitude * np.sin(2 * np.pi * x[0] / self.L)
        return np.broadcast_to(val, x.shape)


@dataclass(frozen=True)
class ConstantPotential:
    vector: Tuple[float, ...]

    def __call__(self, x):
        v = np.asarray(self.vector, dtype=float).reshape((-1,) + (1,) * (x.ndim - 1))
        return np.broadcast_to(v, x.shape)


@dataclass(frozen=True)
class Packet:
    center: Tuple[float, ...]
    width: float
    momentum: Tuple[float, ...]

    def field(self, grid: GridSpec) -> Field:
        return gaussian(grid, self.center, self.width, self.momentum)


@dataclass
class RunConfig:
    grid: GridSpec
    kinetic1: KineticSpec
    kinetic2: KineticSpec
    couplings: CouplingMatrix
    mixtures: List[MixtureSize]
    initial1: Packet
    initial2: Packet
    dt: float = 0.05
    T: float = 0.5
    stride: int = 1
    hartree_substeps: int = 10
    order: int = 4
    thetas: Tuple[float, ...] = (0.0, 0.25, 0.5, 0.75)
    k: int = 1
    l: int = 1
    observables: int = 20
    integrator: str = "strang"
    seed: int = 0
    output: Path = Path("out")
    workers: int = 1
    sr_margin: float = field(default=float("nan"))

    @property
    def R2(self) -> Fraction:
        return self.mixtures[0].R2

    @property
    def n_steps(self) -> int:
        n = round(self.T / self.dt)
        return n

    def initial_fields(self):
        return self.initial1.field(self.grid), self.initial2.field(self.grid)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from exc
    cfg = validate_config(raw)
    if not cfg.output.is_absolute():
        cfg.output = path.parent / cfg.output
    return cfg


def _vector(value, d, name, errors):
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.repeat(arr, d)
    if arr.size != d:
        errors.append(f"{name}: expected {d} components, got {arr.size}")
        return (0.0,) * d
    return tuple(float(x) for x in arr)


def _kinetic(sec, name, grid, errors):
    kind = sec.get("kind", MAGNETIC)
    if kind not in KINDS:
        errors.append(f"{name}.kind: unknown kind {kind!r}, expected one of {KINDS}")
        kind = MAGNETIC
    mass = float(sec.get("mass", 1.0))
    label = "(RM)" if kind == MAGNETIC else "(RS)"
    if not mass > 0:
        errors.append(f"{label} {name}.mass must be positive, got {mass}")
        mass = 1.0
    A = sec.get("A", "zero")
    pot = None
    if kind == SEMIRELATIVISTIC and A not in ("zero", None):
        errors.append(f"(RS) {name}: the semi-relativistic operator takes no vector potential")
    elif kind == MAGNETIC:
        if isinstance(A, str):
            if A == "sine":
                pot = SineProfile(float(sec.get("A_amplitude", 0.5)), grid.L)
            elif A != "zero":
                errors.append(f"(RM) {name}.A: unknown profile {A!r}, expected 'zero', 'sine' or a vector")
        else:
            vec = _vector(A, grid.d, f"{name}.A", errors)
            if not np.all(np.isfinite(vec)):
                errors.append(f"(RM) {name}.A must be finite")
            elif any(vec):
                pot = ConstantPotential(vec)
    return KineticSpec(kind, mass, pot)


def _packet(sec, name, grid, errors):
    width = float(sec.get("width", 1.0))
    if not width > 0:
        errors.append(f"{name}.width must be positive")
        width = 1.0
    return Packet(
        _vector(sec.get("center", 0.0), grid.d, f"{name}.center", errors),
        width,
        _vector(sec.get("momentum", 0.0), grid.d, f"{name}.momentum", errors),
    )


def validate_config(raw: dict) -> RunConfig:
    """Normalize a parsed config; raise ConfigError listing every violated assumption."""
    errors = []
    g = raw.get("grid", {})
    try:
        grid = GridSpec(int(g.get("d", 1)), int(g.get("M", 8)), float(g.get("L", 8.0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError([f"grid: {exc}"]) from exc

    kin = raw.get("kinetics", {})
    k1 = _kinetic(kin.get("species1", {}), "kinetics.species1", grid, errors)
    k2 = _kinetic(kin.get("species2", {}), "kinetics.species2", grid, errors)
    if k1.kind != k2.kind:
        errors.append("(RM)/(RS): both species must use the same kinetic kind")

    c = dict(raw.get("couplings", {}))
    c.setdefault("epsilon", 2 * grid.h)
    known = {"lambda11", "lambda22", "lambda12", "mu11", "mu22", "mu12", "epsilon"}
    unknown = set(c) - known
    if unknown:
        errors.append(f"couplings: unknown keys {sorted(unknown)}")
    try:
        couplings = CouplingMatrix(**{k: float(v) for k, v in c.items() if k in known})
    except ValueError as exc:
        errors.append(f"couplings: {exc}")
        couplings = CouplingMatrix(epsilon=2 * grid.h)

    sr = check_sr_stability(couplings)
    if SEMIRELATIVISTIC in (k1.kind, k2.kind) and not sr.passed:
        errors.append(f"(SR) violated: stability margin {sr.margin:.6f} <= 0")

    pairs = raw.get("mixture", {}).get("pairs", [[1, 1]])
    mixtures = []
    for p in pairs:
        try:
            mixtures.append(MixtureSize(*p))
        except (TypeError, ValueError) as exc:
            errors.append(f"(MF) mixture pair {p}: {exc}")
    if not mixtures:
        errors.append("(MF) mixture list is empty")
    ratios = {m.R2 for m in mixtures}
    if len(ratios) > 1:
        listed = ", ".join(f"({m.N1},{m.N2}): R^2={m.R2}" for m in mixtures)
        errors.append(f"(MF) mixture pairs do not share one R: {listed}")

    init = raw.get("initial", {})
    p1 = _packet(init.get("species1", {}), "initial.species1", grid, errors)
    p2 = _packet(init.get("species2", {}), "initial.species2", grid, errors)

    t = raw.get("time", {})
    dt, T = float(t.get("dt", 0.05)), float(t.get("T", 0.5))
    stride = int(t.get("stride", 1))
    substeps = int(t.get("hartree_substeps", 10))
    order = int(t.get("order", 4))
    if not (dt > 0 and T >= 0):
        errors.append("time: need dt > 0 and T >= 0")
    elif abs(T / dt - round(T / dt)) > 1e-9 * max(1.0, T / dt):
        errors.append(f"time: T = {T} is not a whole number of steps dt = {dt}")
    if stride < 1 or substeps < 1:
        errors.append("time: stride and hartree_substeps must be >= 1")
    if order not in (2, 4):
        errors.append(f"time.order must be 2 or 4, got {order}")

    dg = raw.get("diagnostics", {})
    thetas = tuple(float(x) for x in dg.get("thetas", (0.0, 0.25, 0.5, 0.75)))
    if any(not 0 <= x < 1 for x in thetas):
        errors.append("diagnostics.thetas must lie in [0, 1)")
    kk, ll = int(dg.get("k", 1)), int(dg.get("l", 1))
    if kk < 0 or ll < 0 or kk + ll == 0:
        errors.append("diagnostics: need k, l >= 0, not both zero")
    for m in mixtures:
        if kk > m.N1 or ll > m.N2:
            errors.append(f"diagnostics: (k,l)=({kk},{ll}) exceeds N=({m.N1},{m.N2})")

    run = raw.get("run", {})
    integrator = run.get("integrator", "strang")
    if integrator not in INTEGRATORS:
        errors.append(f"run.integrator must be one of {INTEGRATORS}")
    if errors:
        raise ConfigError(errors)
    return RunConfig(
        grid=grid, kinetic1=k1, kinetic2=k2, couplings=couplings, mixtures=mixtures,
        initial1=p1, initial2=p2, dt=dt, T=T, stride=stride, hartree_substeps=substeps,
        order=order, thetas=thetas, k=kk, l=ll, observables=int(dg.get("observables", 20)),
        integrator=integrator, seed=int(run.get("seed", 0)), output=Path(run.get("output", "out")),
        workers=max(1, int(run.get("workers", 1))), sr_margin=sr.margin,
    )
