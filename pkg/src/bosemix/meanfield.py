"""Coupled two-species Hartree dynamics and their conserved functionals."""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, NamedTuple, Optional

import numpy as np

from .interaction import SR_CRITICAL, CouplingMatrix, check_sr_stability, mean_field_potential
from .lattice import MAGNETIC, Field, GridMismatchError, GridSpec, KineticSpec

log = logging.getLogger(__name__)

# Yoshida triple-jump weights turning a symmetric 2nd-order step into 4th order
_YOSHIDA_W1 = 1 / (2 - 2 ** (1 / 3))
_YOSHIDA_W0 = -(2 ** (1 / 3)) * _YOSHIDA_W1


@dataclass(frozen=True)
class MixtureSize:
    N1: int
    N2: int

    def __post_init__(self):
        for n in (self.N1, self.N2):
            if int(n) != n or n < 1:
                raise ValueError(f"particle numbers must be positive integers, got {n}")

    @property
    def R(self) -> float:
        return float(np.sqrt(self.N1 / self.N2))

    @property
    def R2(self) -> Fraction:
        """R^2 = N1 / N2 as an exact rational."""
        return Fraction(self.N1, self.N2)

    @property
    def m(self) -> float:
        return float(np.sqrt(self.N1 * self.N2))

    @property
    def n_particles(self) -> int:
        return self.N1 + self.N2


@dataclass(frozen=True)
class HartreeState:
    psi: Field
    phi: Field
    t: float = 0.0

    def __post_init__(self):
        if self.psi.grid != self.phi.grid:
            raise GridMismatchError("psi and phi live on different grids")

    @property
    def grid(self) -> GridSpec:
        return self.psi.grid

    def distance(self, other: "HartreeState") -> float:
        """L^2 distance of the orbital pair, sqrt(|psi - psi'|^2 + |phi - phi'|^2)."""
        d1 = (self.psi.values - other.psi.values).ravel()
        d2 = (self.phi.values - other.phi.values).ravel()
        return float(np.sqrt(self.grid.cell * (np.vdot(d1, d1).real + np.vdot(d2, d2).real)))


@dataclass(frozen=True)
class EnergyReport:
    kinetic1: float
    kinetic2: float
    pot11: float
    pot22: float
    pot12: float
    e_total: float
    hN_per_particle: Optional[float]
    mass1: float
    mass2: float


class PicardError(RuntimeError):
    def __init__(self, msg, residuals):
        super().__init__(msg)
        self.residuals = residuals


class PicardResult(NamedTuple):
    state: HartreeState
    residuals: List[float]


class HartreeSystem:
    """The coupled Hartree system for fixed couplings, kinetic energies and ratio R."""

    def __init__(self, grid: GridSpec, couplings: CouplingMatrix, kinetic1: KineticSpec,
                 kinetic2: KineticSpec, R: float):
        if not R > 0:
            raise ValueError("R must be positive")
        self.grid = grid
        self.couplings = couplings
        self.kinetics = (kinetic1, kinetic2)
        self.R = float(R)
        self.u11 = couplings.kernel(grid, 1, 1)
        self.u22 = couplings.kernel(grid, 2, 2)
        self.u12 = couplings.kernel(grid, 1, 2)
        self.ops = (kinetic1.operator(grid), kinetic2.operator(grid))

    # -- nonlinearity -----------------------------------------------------

    def potentials(self, psi: np.ndarray, phi: np.ndarray):
        """Mean-field potentials (f, g) acting on psi and phi respectively."""
        rho1 = np.abs(psi) ** 2
        rho2 = np.abs(phi) ** 2
        f = mean_field_potential(self.u11, rho1) + mean_field_potential(self.u12, rho2) / self.R
        g = mean_field_potential(self.u22, rho2) + self.R * mean_field_potential(self.u12, rho1)
        return f, g

    def rhs(self, s: HartreeState):
        """Time derivatives (d psi/dt, d phi/dt)."""
        self._check(s)
        psi, phi = s.psi.values, s.phi.values
        f, g = self.potentials(psi, phi)
        dpsi = -1j * (self.ops[0].apply(psi) + f * psi)
        dphi = -1j * (self.ops[1].apply(phi) + g * phi)
        return Field(self.grid, dpsi), Field(self.grid, dphi)

    def _check(self, s: HartreeState):
        if s.grid != self.grid:
            raise GridMismatchError(f"state grid {s.grid} does not match system grid {self.grid}")

    # -- integrators ------------------------------------------------------

    def _strang(self, psi, phi, dt):
        psi = self.ops[0].propagate(psi, dt / 2)
        phi = self.ops[1].propagate(phi, dt / 2)
        # densities are invariant under the phase step, so freezing them is exact
        f, g = self.potentials(psi, phi)
        psi = np.exp(-1j * dt * f) * psi
        phi = np.exp(-1j * dt * g) * phi
        psi = self.ops[0].propagate(psi, dt / 2)
        phi = self.ops[1].propagate(phi, dt / 2)
        return psi, phi

    def _step(self, psi, phi, dt, order):
        if order == 2:
            return self._strang(psi, phi, dt)
        if order == 4:
            for w in (_YOSHIDA_W1, _YOSHIDA_W0, _YOSHIDA_W1):
                psi, phi = self._strang(psi, phi, w * dt)
            return psi, phi
        raise ValueError(f"splitting order must be 2 or 4, got {order}")

    def strang_step(self, s: HartreeState, dt: float, order: int = 2) -> HartreeState:
        if not dt > 0:
            raise ValueError("dt must be positive")
        self._check(s)
        psi, phi = self._step(s.psi.values, s.phi.values, dt, order)
        return HartreeState(Field(self.grid, psi), Field(self.grid, phi), s.t + dt)

    def evolve(self, s: HartreeState, dt: float, n_steps: int, order: int = 2,
               observer: Optional[Callable[[HartreeState], None]] = None, stride: int = 1) -> HartreeState:
        """Advance `n_steps` splitting steps; `observer` sees the state every `stride` steps."""
        if not dt > 0:
            raise ValueError("dt must be positive")
        self._check(s)
        psi, phi = s.psi.values, s.phi.values
        if observer is not None:
            observer(s)
        for n in range(1, n_steps + 1):
            psi, phi = self._step(psi, phi, dt, order)
            if observer is not None and n % stride == 0:
                observer(HartreeState(Field(self.grid, psi), Field(self.grid, phi), s.t + n * dt))
        return HartreeState(Field(self.grid, psi), Field(self.grid, phi), s.t + n_steps * dt)

    def evolve_to(self, s: HartreeState, T: float, dt: float, order: int = 2) -> HartreeState:
        return self.evolve(s, dt, steps_for(T, dt), order)

    def picard_solve(self, s0: HartreeState, T: float, n_iter: int = 50, n_quad: int = 501,
                     tol: float = 1e-8) -> PicardResult:
        """Fixed-point iteration of the Duhamel map on [0, T].

        The time integral is discretized by the composite trapezoid rule on
        `n_quad` equally spaced nodes, accumulated with the recursion
        I_n = U(h) I_{n-1} + h/2 (U(h) g_{n-1} + g_n), which is the composite
        rule exactly. Iteration stops once successive iterates differ by less
        than `tol` in the sup-in-time L^2 distance.
        """
        self._check(s0)
        if n_quad < 2:
            raise ValueError("need at least two quadrature nodes")
        h = T / (n_quad - 1)
        U1 = lambda v: self.ops[0].propagate(v, h)
        U2 = lambda v: self.ops[1].propagate(v, h)

        free1 = np.empty((n_quad,) + self.grid.shape, dtype=complex)
        free2 = np.empty_like(free1)
        free1[0], free2[0] = s0.psi.values, s0.phi.values
        for n in range(1, n_quad):
            free1[n] = U1(free1[n - 1])
            free2[n] = U2(free2[n - 1])

        psi, phi = free1.copy(), free2.copy()
        residuals = []
        for it in range(n_iter):
            new1 = np.empty_like(psi)
            new2 = np.empty_like(phi)
            new1[0], new2[0] = free1[0], free2[0]
            f, g = self.potentials(psi[0], phi[0])
            g1_prev, g2_prev = f * psi[0], g * phi[0]
            I1 = np.zeros(self.grid.shape, dtype=complex)
            I2 = np.zeros_like(I1)
            for n in range(1, n_quad):
                f, g = self.potentials(psi[n], phi[n])
                g1, g2 = f * psi[n], g * phi[n]
                I1 = U1(I1 + 0.5 * h * g1_prev) + 0.5 * h * g1
                I2 = U2(I2 + 0.5 * h * g2_prev) + 0.5 * h * g2
                new1[n] = free1[n] - 1j * I1
                new2[n] = free2[n] - 1j * I2
                g1_prev, g2_prev = g1, g2
            diff = np.sum(np.abs(new1 - psi) ** 2 + np.abs(new2 - phi) ** 2,
                          axis=tuple(range(1, self.grid.d + 1)))
            res = float(np.sqrt(self.grid.cell * diff.max()))
            residuals.append(res)
            log.debug("picard iteration %d residual %.3e", it + 1, res)
            psi, phi = new1, new2
            if res < tol:
                state = HartreeState(Field(self.grid, psi[-1]), Field(self.grid, phi[-1]), s0.t + T)
                return PicardResult(state, residuals)
            if len(residuals) >= 4 and all(
                residuals[-i] > residuals[-i - 1] for i in range(1, 4)
            ):
                raise PicardError(f"Picard iteration diverging, residual {res:.3e}", residuals)
        raise PicardError(
            f"no contraction within {n_iter} iterations, final residual {residuals[-1]:.3e}", residuals
        )

    # -- functionals ------------------------------------------------------

    def energy_report(self, s: HartreeState, mixture: Optional[MixtureSize] = None) -> EnergyReport:
        self._check(s)
        cell = self.grid.cell
        psi, phi = s.psi.values, s.phi.values
        rho1, rho2 = np.abs(psi) ** 2, np.abs(phi) ** 2
        k1 = cell * np.vdot(psi, self.ops[0].apply(psi)).real
        k2 = cell * np.vdot(phi, self.ops[1].apply(phi)).real
        p11 = cell * np.sum(mean_field_potential(self.u11, rho1) * rho1)
        p22 = cell * np.sum(mean_field_potential(self.u22, rho2) * rho2)
        p12 = cell * np.sum(mean_field_potential(self.u12, rho2) * rho1)
        R = self.R
        e_total = R * (k1 + 0.5 * p11) + (k2 + 0.5 * p22) / R + p12
        hN = None
        if mixture is not None:
            hN = hartree_functional(mixture, k1, k2, p11, p22, p12) / mixture.N2
        return EnergyReport(float(k1), float(k2), float(p11), float(p22), float(p12), float(e_total),
                            hN, float(cell * rho1.sum()), float(cell * rho2.sum()))

    def gradient_norms(self, s: HartreeState):
        """(|D_A psi|, |D_A phi|) in the magnetic case, (|grad psi|, |grad phi|) otherwise."""
        out = []
        for op, f in zip(self.ops, (s.psi.values, s.phi.values)):
            if op.spec.kind == MAGNETIC:
                val = 2 * op.spec.mass * self.grid.cell * np.vdot(f, op.apply(f)).real
            else:
                fk = np.fft.fftn(f)
                val = self.grid.cell * np.sum(self.grid.momentum_sq() * np.abs(fk) ** 2) / self.grid.n_sites
            out.append(float(np.sqrt(max(val, 0.0))))
        return tuple(out)


def hartree_functional(mixture: MixtureSize, k1, k2, p11, p22, p12) -> float:
    """<psi^N1 phi^N2, H_N psi^N1 phi^N2> for N_i >= 2, from the orbital energies."""
    N1, N2 = mixture.N1, mixture.N2
    return N1 * k1 + N2 * k2 + 0.5 * N1 * p11 + 0.5 * N2 * p22 + N1 * N2 / mixture.m * p12


def steps_for(T: float, dt: float) -> int:
    n = int(round(T / dt))
    if n < 0 or abs(n * dt - T) > 1e-9 * max(1.0, abs(T)):
        raise ValueError(f"T={T} is not an integer multiple of dt={dt}")
    return n


def sr_coercivity(report: EnergyReport, couplings: CouplingMatrix, R: float):
    """Evaluate both sides of the completion-of-the-square lower bound for E_sr.

    With a_i^2 the semi-relativistic kinetic expectations, returns a dict with
    ``lower`` = R(1 - pi n11/4) a1^2 + R^-1 (1 - pi n22/4) a2^2 - (pi/2) n12 a1 a2,
    its decomposition ``square`` + ``cross``, and the energy ``e_total``.
    """
    n11, n22, n12 = couplings.negative_parts()
    a1 = np.sqrt(max(report.kinetic1, 0.0))
    a2 = np.sqrt(max(report.kinetic2, 0.0))
    lower = R * (1 - np.pi * n11 / 4) * a1**2 + (1 - np.pi * n22 / 4) * a2**2 / R \
        - 0.5 * np.pi * n12 * a1 * a2
    g1, g2 = SR_CRITICAL - n11, SR_CRITICAL - n22
    square = np.nan
    cross = np.nan
    if g1 >= 0 and g2 >= 0:
        square = 0.25 * np.pi * (np.sqrt(R * g1) * a1 - np.sqrt(g2 / R) * a2) ** 2
        cross = 0.5 * np.pi * a1 * a2 * (np.sqrt(g1 * g2) - n12)
    return {"lower": float(lower), "square": float(square), "cross": float(cross),
            "e_total": report.e_total}


def sr_apriori_constant(couplings: CouplingMatrix, R: float) -> float:
    """C with a1^2 + a2^2 <= C * E_sr whenever the Kato lower bound holds.

    C is the inverse smallest eigenvalue of the quadratic form in (a1, a2)
    obtained by completing the square; infinite when (SR) fails.
    """
    if not check_sr_stability(couplings).passed:
        return float("inf")
    n11, n22, n12 = couplings.negative_parts()
    Q = np.array([[R * (1 - np.pi * n11 / 4), -np.pi * n12 / 4],
                  [-np.pi * n12 / 4, (1 - np.pi * n22 / 4) / R]])
    return float(1 / np.linalg.eigvalsh(Q)[0])


def exponential_envelope(times, values):
    """Least-squares fit log(values) = log(c) + rate * t; returns (c, rate)."""
    times = np.asarray(times, dtype=float)
    values = np.maximum(np.asarray(values, dtype=float), 1e-300)
    rate, logc = np.polyfit(times, np.log(values), 1)
    return float(np.exp(logc)), float(rate)
