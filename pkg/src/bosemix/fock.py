"""Exact N-body wavefunctions of the two-species mixture and their propagation.

A state stores one axis per particle (species-1 particles first), each axis
running over the flat site index of the grid. Amplitudes are function values,
so the norm carries the weight h^(d (N1 + N2)).
"""

import itertools
import logging
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .interaction import CouplingMatrix
from .krylov import expm_multiply_hermitian
from .lattice import Field, GridMismatchError, GridSpec, KineticSpec
from .meanfield import MixtureSize

log = logging.getLogger(__name__)

STATE_CAP = 2**25
DENSE_CAP = 4096


class StateSizeError(ValueError):
    pass


def _check_cap(n_amplitudes, cap):
    if n_amplitudes > cap:
        raise StateSizeError(f"{n_amplitudes} amplitudes exceed the state-vector cap {cap}")


@dataclass(frozen=True, eq=False)
class ManyBodyState:
    mixture: MixtureSize
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        shape = (self.grid.n_sites,) * self.mixture.n_particles
        vals = np.asarray(self.values, dtype=complex)
        if vals.size != int(np.prod(shape)):
            raise GridMismatchError(f"state has {vals.size} amplitudes, expected shape {shape}")
        object.__setattr__(self, "values", vals.reshape(shape))

    @property
    def weight(self) -> float:
        return self.grid.cell**self.mixture.n_particles

    def coefficients(self) -> np.ndarray:
        """Amplitudes in the orthonormal site basis (sum |c|^2 = norm^2)."""
        return np.sqrt(self.weight) * self.values

    def norm(self) -> float:
        return float(np.sqrt(self.weight * np.vdot(self.values, self.values).real))

    def inner(self, other: "ManyBodyState") -> complex:
        return complex(self.weight * np.vdot(self.values, other.values))

    def species_axes(self, species: int):
        N1 = self.mixture.N1
        return tuple(range(N1)) if species == 1 else tuple(range(N1, N1 + self.mixture.N2))

    def with_values(self, values) -> "ManyBodyState":
        return ManyBodyState(self.mixture, self.grid, values)


def orbital_coefficients(f: Field) -> np.ndarray:
    """Flat orthonormal-basis coefficients of a one-particle field."""
    return np.sqrt(f.grid.cell) * f.values.ravel()


def product_state(psi0: Field, phi0: Field, mixture: MixtureSize, cap: int = STATE_CAP) -> ManyBodyState:
    if psi0.grid != phi0.grid:
        raise GridMismatchError("orbitals live on different grids")
    grid = psi0.grid
    _check_cap(grid.n_sites**mixture.n_particles, cap)
    factors = [psi0.values.ravel()] * mixture.N1 + [phi0.values.ravel()] * mixture.N2
    return ManyBodyState(mixture, grid, reduce(np.multiply.outer, factors))


def apply_along_axis(values: np.ndarray, matrix: np.ndarray, axis: int) -> np.ndarray:
    """Apply a one-particle matrix to particle `axis` of a many-body array."""
    moved = np.moveaxis(values, axis, -1)
    return np.moveaxis(moved @ matrix.T, -1, axis)


class ManyBodyHamiltonian:
    """Mean-field scaled H_N, applied matrix-free.

    Kinetic terms act particle by particle through the lattice operators;
    pair potentials form a diagonal in the product site basis with
    intraspecies prefactor 1/(N_i - 1) and interspecies prefactor 1/sqrt(N1 N2).
    """

    def __init__(self, grid: GridSpec, kinetic1: KineticSpec, kinetic2: KineticSpec,
                 couplings: CouplingMatrix, mixture: MixtureSize, cap: int = STATE_CAP):
        self.grid = grid
        self.kinetics = (kinetic1, kinetic2)
        self.ops = (kinetic1.operator(grid), kinetic2.operator(grid))
        self.couplings = couplings
        self.mixture = mixture
        self.cap = cap
        n = grid.n_sites
        _check_cap(n**mixture.n_particles, cap)
        self.pair = {
            key: couplings.kernel(grid, *key).pair_matrix() for key in ((1, 1), (2, 2), (1, 2))
        }
        self.potential = self._diagonal()

    def _diagonal(self) -> np.ndarray:
        N1, N2 = self.mixture.N1, self.mixture.N2
        npart = N1 + N2
        n = self.grid.n_sites
        V = np.zeros((n,) * npart)

        def add(a, b, U, coef):
            shape = [1] * npart
            shape[a], shape[b] = n, n
            np.add(V, coef * U.reshape(shape), out=V)

        # N_i = 1 leaves the intraspecies pair sum empty; its prefactor is never formed
        if N1 > 1 and self.couplings.lambda11 != 0:
            for a, b in itertools.combinations(range(N1), 2):
                add(a, b, self.pair[(1, 1)], 1.0 / (N1 - 1))
        if N2 > 1 and self.couplings.lambda22 != 0:
            for a, b in itertools.combinations(range(N1, npart), 2):
                add(a, b, self.pair[(2, 2)], 1.0 / (N2 - 1))
        if self.couplings.lambda12 != 0:
            for a in range(N1):
                for b in range(N1, npart):
                    add(a, b, self.pair[(1, 2)], 1.0 / self.mixture.m)
        return V

    def _kinetic(self, values, axis):
        op = self.ops[0] if axis < self.mixture.N1 else self.ops[1]
        moved = np.moveaxis(values, axis, -1)
        batch = moved.reshape((-1,) + self.grid.shape)
        out = op.apply(batch).reshape(moved.shape)
        return np.moveaxis(out, -1, axis)

    def apply_values(self, values: np.ndarray) -> np.ndarray:
        out = self.potential * values
        for axis in range(self.mixture.n_particles):
            out += self._kinetic(values, axis)
        return out

    def apply(self, s: ManyBodyState) -> ManyBodyState:
        self._check(s)
        return s.with_values(self.apply_values(s.values))

    def expectation(self, s: ManyBodyState) -> float:
        self._check(s)
        return float((s.weight * np.vdot(s.values, self.apply_values(s.values))).real)

    def potential_expectation(self, s: ManyBodyState) -> float:
        return float(s.weight * np.sum(self.potential * np.abs(s.values) ** 2))

    def _check(self, s: ManyBodyState):
        if s.grid != self.grid or s.mixture != self.mixture:
            raise GridMismatchError("state does not match the Hamiltonian's grid or mixture")

    def dense(self, cap: int = DENSE_CAP) -> np.ndarray:
        """Dense matrix in the product site basis, for oracle-sized systems."""
        dim = self.grid.n_sites**self.mixture.n_particles
        if dim > cap:
            raise StateSizeError(f"dense dimension {dim} exceeds cap {cap}")
        n = self.grid.n_sites
        mats = [self.ops[0].matrix] * self.mixture.N1 + [self.ops[1].matrix] * self.mixture.N2
        H = np.diag(self.potential.ravel()).astype(complex)
        for i, K in enumerate(mats):
            left = np.eye(n**i)
            right = np.eye(n ** (len(mats) - i - 1))
            H += np.kron(np.kron(left, K), right)
        return H


def apply_hamiltonian(H: ManyBodyHamiltonian, s: ManyBodyState) -> ManyBodyState:
    return H.apply(s)


def propagate(H: ManyBodyHamiltonian, s: ManyBodyState, dt: float, steps: int,
              krylov_dim: int = 20, tol: float = 1e-10) -> ManyBodyState:
    """Apply exp(-i H dt) `steps` times with the Lanczos propagator."""
    H._check(s)
    shape = s.values.shape
    v = s.values.ravel()
    mv = lambda x: H.apply_values(x.reshape(shape)).ravel()
    for _ in range(steps):
        v = expm_multiply_hermitian(mv, v, dt, krylov_dim=krylov_dim, tol=tol)
    return s.with_values(v.reshape(shape))


def permute_particles(values: np.ndarray, a: int, b: int) -> np.ndarray:
    return np.swapaxes(values, a, b)


def symmetry_defect(s: ManyBodyState, max_pairs: int = 64) -> float:
    """Largest ||s - s o tau|| over within-species transpositions tau.

    All transpositions are used when there are at most `max_pairs` of them,
    otherwise a fixed set: every transposition involving the first particle
    of each species (which generates the symmetric group).
    """
    pairs = []
    for sp in (1, 2):
        axes = s.species_axes(sp)
        allp = list(itertools.combinations(axes, 2))
        if len(allp) > max_pairs:
            allp = [(axes[0], b) for b in axes[1:]]
        pairs.extend(allp)
    worst = 0.0
    for a, b in pairs:
        diff = s.values - permute_particles(s.values, a, b)
        worst = max(worst, float(np.sqrt(s.weight * np.vdot(diff, diff).real)))
    return worst


def symmetrize(s: ManyBodyState) -> ManyBodyState:
    """Project onto the states symmetric within each species block."""
    vals = s.values
    N1, N2 = s.mixture.N1, s.mixture.N2
    for axes in (list(range(N1)), list(range(N1, N1 + N2))):
        if len(axes) < 2:
            continue
        acc = np.zeros_like(vals)
        perms = list(itertools.permutations(axes))
        for p in perms:
            order = list(range(vals.ndim))
            for src, dst in zip(axes, p):
                order[src] = dst
            acc += np.transpose(vals, order)
        vals = acc / len(perms)
    return s.with_values(vals)
