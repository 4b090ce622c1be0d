"""Periodic-box discretization of space and of the one-particle kinetic operators.

Fields are stored as arrays of shape ``(M,) * d`` (row-major site order).
Kinetic operators act on the trailing ``d`` axes, so a batch of fields of
shape ``(..., M, ..., M)`` can be transformed in one call; the many-body code
relies on this.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Union

import numpy as np

from .krylov import expm_multiply_hermitian

MAGNETIC = "magnetic"
SEMIRELATIVISTIC = "semirelativistic"
KINDS = (MAGNETIC, SEMIRELATIVISTIC)


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    d: int
    M: int
    L: float

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.M < 4 or self.M % 2:
            raise ValueError(f"points per axis must be even and >= 4, got {self.M}")
        if not self.L > 0:
            raise ValueError(f"box length must be positive, got {self.L}")

    @property
    def h(self) -> float:
        return self.L / self.M

    @property
    def shape(self) -> tuple:
        return (self.M,) * self.d

    @property
    def n_sites(self) -> int:
        return self.M**self.d

    @property
    def cell(self) -> float:
        """Volume element h^d."""
        return self.h**self.d

    def momenta_1d(self) -> np.ndarray:
        # fftfreq puts the Nyquist mode at -M/2, i.e. momentum -pi M / L
        return 2 * np.pi * np.fft.fftfreq(self.M, d=self.h)

    def momentum_sq(self) -> np.ndarray:
        k = self.momenta_1d()
        grids = np.meshgrid(*([k] * self.d), indexing="ij")
        return sum(g**2 for g in grids)

    def coords(self) -> np.ndarray:
        """Site positions, shape (d, M, ..., M); site j sits at j*h."""
        x = np.arange(self.M) * self.h
        return np.array(np.meshgrid(*([x] * self.d), indexing="ij"))

    def centered_coords(self) -> np.ndarray:
        """Site positions with the box centred on the origin, x in [-L/2, L/2)."""
        x = (np.arange(self.M) - self.M // 2) * self.h
        return np.array(np.meshgrid(*([x] * self.d), indexing="ij"))

    def min_image_displacement(self) -> np.ndarray:
        """Minimum-image displacement of every site from site 0, shape (d, M, ..., M)."""
        n = np.arange(self.M)
        n = np.where(n >= self.M // 2, n - self.M, n)
        x = n * self.h
        return np.array(np.meshgrid(*([x] * self.d), indexing="ij"))


@dataclass(frozen=True, eq=False)
class Field:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.size != self.grid.n_sites:
            raise GridMismatchError(
                f"field has {vals.size} values, grid has {self.grid.n_sites} sites"
            )
        vals = vals.reshape(self.grid.shape).copy()
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def norm(self) -> float:
        return norm(self)

    def normalized(self) -> "Field":
        return Field(self.grid, self.values / self.norm())

    def with_values(self, values) -> "Field":
        return Field(self.grid, values)


def _check_same_grid(f: Field, g: Field):
    if f.grid != g.grid:
        raise GridMismatchError(f"grid mismatch: {f.grid} vs {g.grid}")


def inner(f: Field, g: Field) -> complex:
    _check_same_grid(f, g)
    return complex(f.grid.cell * np.vdot(f.values, g.values))


def norm(f: Field) -> float:
    return float(np.sqrt(f.grid.cell * np.vdot(f.values, f.values).real))


# A vector potential is either a sampler x -> A(x) taking positions of shape
# (d, ...) and returning components of shape (d, ...), or an array of link
# values of shape (d, M, ..., M) where entry [e, j] is A_e at the midpoint of
# the link j -> j + e.
VectorPotential = Union[Callable[[np.ndarray], np.ndarray], np.ndarray]


def link_values(A: Optional[VectorPotential], grid: GridSpec) -> Optional[np.ndarray]:
    """Sample A on the link midpoints of `grid`."""
    if A is None:
        return None
    if callable(A):
        x = grid.coords()
        links = np.empty((grid.d,) + grid.shape)
        for e in range(grid.d):
            mid = x.copy()
            mid[e] += 0.5 * grid.h
            links[e] = np.asarray(A(mid), dtype=float)[e]
    else:
        links = np.asarray(A, dtype=float)
        if links.shape != (grid.d,) + grid.shape:
            raise GridMismatchError(
                f"link array has shape {links.shape}, expected {(grid.d,) + grid.shape}"
            )
    if not np.all(np.isfinite(links)):
        raise ValueError("vector potential is not finite on all links")
    return links


@dataclass(frozen=True, eq=False)
class KineticSpec:
    """One-particle kinetic energy.

    ``magnetic`` is D_A^2 / (2 m); with no (or an identically zero) vector
    potential it is applied as the Fourier multiplier |k|^2 / (2 m), otherwise
    as the Peierls link-phase operator. ``semirelativistic`` is sqrt(m^2 - Delta).
    """

    kind: str
    mass: float = 1.0
    A: Optional[VectorPotential] = None
    krylov_dim: int = 20
    krylov_tol: float = 1e-10

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kinetic kind {self.kind!r}")
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if self.kind == SEMIRELATIVISTIC and self.A is not None:
            raise ValueError("the semi-relativistic operator takes no vector potential")

    def operator(self, grid: GridSpec) -> "KineticOperator":
        cache = self.__dict__.setdefault("_ops", {})
        if grid not in cache:
            cache[grid] = KineticOperator(self, grid)
        return cache[grid]


class KineticOperator:
    """A KineticSpec bound to a grid."""

    def __init__(self, spec: KineticSpec, grid: GridSpec):
        self.spec = spec
        self.grid = grid
        links = link_values(spec.A, grid) if spec.kind == MAGNETIC else None
        if links is not None and not np.any(links):
            links = None
        self.links = links
        self._axes = tuple(range(-grid.d, 0))
        if links is None:
            k2 = grid.momentum_sq()
            if spec.kind == SEMIRELATIVISTIC:
                self.symbol = np.sqrt(spec.mass**2 + k2)
            else:
                self.symbol = k2 / (2 * spec.mass)
        else:
            self.symbol = None
            # U[e, j] = exp(-i h A_e(j + e/2)) is the hopping phase j -> j+e
            self.phases = np.exp(-1j * grid.h * links)

    @property
    def is_diagonal(self) -> bool:
        return self.symbol is not None

    def _check(self, values):
        if values.shape[values.ndim - self.grid.d:] != self.grid.shape:
            raise GridMismatchError(
                f"trailing shape {values.shape[-self.grid.d:]} does not match grid {self.grid.shape}"
            )

    def apply(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=complex)
        self._check(values)
        if self.symbol is not None:
            return np.fft.ifftn(self.symbol * np.fft.fftn(values, axes=self._axes), axes=self._axes)
        out = np.zeros_like(values)
        for e in range(self.grid.d):
            ax = values.ndim - self.grid.d + e
            U = self.phases[e]
            out += 2 * values - U * np.roll(values, -1, axis=ax) - np.roll(U.conj() * values, 1, axis=ax)
        return out / (2 * self.spec.mass * self.grid.h**2)

    def propagate(self, values: np.ndarray, dt: float) -> np.ndarray:
        """exp(-i S dt) applied to a single field (or a batch for diagonal kinds)."""
        values = np.asarray(values, dtype=complex)
        self._check(values)
        if dt == 0:
            return values.copy()
        if self.symbol is not None:
            return np.fft.ifftn(
                np.exp(-1j * dt * self.symbol) * np.fft.fftn(values, axes=self._axes), axes=self._axes
            )
        shape = values.shape
        batch = values.reshape((-1,) + self.grid.shape)
        out = np.empty_like(batch)
        for b in range(batch.shape[0]):
            out[b] = expm_multiply_hermitian(
                lambda v: self.apply(v.reshape(self.grid.shape)).ravel(),
                batch[b].ravel(),
                dt,
                krylov_dim=self.spec.krylov_dim,
                tol=self.spec.krylov_tol,
            ).reshape(self.grid.shape)
        return out.reshape(shape)

    @cached_property
    def matrix(self) -> np.ndarray:
        """Dense matrix in the site basis (row-major flat index)."""
        n = self.grid.n_sites
        eye = np.eye(n, dtype=complex).reshape((n,) + self.grid.shape)
        cols = self.apply(eye).reshape(n, n)
        mat = cols.T
        return 0.5 * (mat + mat.conj().T)

    @cached_property
    def eigh(self):
        """(eigenvalues, eigenvectors as columns) of the dense matrix."""
        return np.linalg.eigh(self.matrix)

    def function_matrix(self, fn) -> np.ndarray:
        """fn(S) as a dense matrix via the eigendecomposition."""
        w, U = self.eigh
        return (U * fn(w)) @ U.conj().T


def apply_kinetic(spec: KineticSpec, f: Field) -> Field:
    return Field(f.grid, spec.operator(f.grid).apply(f.values))


def kinetic_propagator(spec: KineticSpec, dt: float, f: Field) -> Field:
    if not np.isfinite(dt):
        raise ValueError("dt must be finite")
    return Field(f.grid, spec.operator(f.grid).propagate(f.values, dt))


def kinetic_form(spec: KineticSpec, f: Field) -> float:
    """<f, S f>, real part."""
    return inner(f, apply_kinetic(spec, f)).real


def gauge_transform(f: Field, A: VectorPotential, chi: np.ndarray):
    """Return (e^{i chi} f, A') with A'_e(j + e/2) = A_e(j + e/2) + (chi_{j+e} - chi_j) / h.

    A' is returned as link values, usable directly as a KineticSpec vector potential.
    """
    grid = f.grid
    chi = np.asarray(chi, dtype=float)
    if chi.shape != grid.shape:
        raise GridMismatchError(f"gauge function shape {chi.shape} does not match {grid.shape}")
    links = link_values(A, grid)
    if links is None:
        links = np.zeros((grid.d,) + grid.shape)
    new = np.empty_like(links)
    for e in range(grid.d):
        new[e] = links[e] + (np.roll(chi, -1, axis=e) - chi) / grid.h
    return Field(grid, np.exp(1j * chi) * f.values), new


def gaussian(grid: GridSpec, center, width, momentum=0.0) -> Field:
    """Normalized periodic Gaussian wave packet exp(-|x-c|^2/(2w^2) + i k.x).

    The momentum is snapped to the nearest box momentum 2 pi n / L so the
    packet stays smooth across the periodic boundary.
    """
    x = grid.centered_coords()
    c = np.broadcast_to(np.asarray(center, dtype=float), (grid.d,))
    k = np.broadcast_to(np.asarray(momentum, dtype=float), (grid.d,))
    dk = 2 * np.pi / grid.L
    k = np.round(k / dk) * dk
    dx = x - c.reshape((grid.d,) + (1,) * grid.d)
    dx = (dx + grid.L / 2) % grid.L - grid.L / 2
    r2 = np.sum(dx**2, axis=0)
    phase = np.tensordot(k, x, axes=(0, 0))
    return Field(grid, np.exp(-r2 / (2 * width**2) + 1j * phase)).normalized()
