"""Regularized Yukawa kernels, mean-field convolutions and coupling stability checks."""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse.linalg as spla

from .lattice import GridMismatchError, GridSpec, KineticSpec, MAGNETIC

KATO_CONSTANT = np.pi / 2
# critical coupling of the semi-relativistic stability condition, 2 / Kato constant
SR_CRITICAL = 4 / np.pi


@dataclass(frozen=True)
class CouplingMatrix:
    lambda11: float = 0.0
    lambda22: float = 0.0
    lambda12: float = 0.0
    mu11: float = 0.0
    mu22: float = 0.0
    mu12: float = 0.0
    epsilon: float = 1.0

    def __post_init__(self):
        if min(self.mu11, self.mu22, self.mu12) < 0:
            raise ValueError("screening lengths mu must be >= 0")
        if not self.epsilon > 0:
            raise ValueError("core regularization epsilon must be > 0")

    def lam(self, i, j) -> float:
        return {(1, 1): self.lambda11, (2, 2): self.lambda22}.get((i, j), self.lambda12)

    def mu(self, i, j) -> float:
        return {(1, 1): self.mu11, (2, 2): self.mu22}.get((i, j), self.mu12)

    def negative_parts(self):
        """(lambda11_-, lambda22_-, lambda12_-) with x_- = -min(0, x)."""
        return tuple(-min(0.0, x) for x in (self.lambda11, self.lambda22, self.lambda12))

    def scaled(self, t: float) -> "CouplingMatrix":
        return CouplingMatrix(
            self.lambda11 * t, self.lambda22 * t, self.lambda12 * t,
            self.mu11, self.mu22, self.mu12, self.epsilon,
        )

    def kernel(self, grid: GridSpec, i: int, j: int) -> "Kernel":
        return build_kernel(grid, self.lam(i, j), self.mu(i, j), self.epsilon)


@dataclass(frozen=True, eq=False)
class Kernel:
    grid: GridSpec
    values: np.ndarray
    lam: float
    mu: float
    epsilon: float

    @property
    def fourier(self) -> np.ndarray:
        cache = self.__dict__.get("_fourier")
        if cache is None:
            cache = np.fft.fftn(self.values)
            object.__setattr__(self, "_fourier", cache)
        return cache

    def pair_matrix(self) -> np.ndarray:
        """U[a, b] = u(x_a - x_b) over flat site indices."""
        idx = np.indices(self.grid.shape).reshape(self.grid.d, -1)
        diff = (idx[:, :, None] - idx[:, None, :]) % self.grid.M
        return self.values[tuple(diff)]


def regularized_yukawa(r, lam, mu, epsilon):
    return lam * np.exp(-mu * r) / np.sqrt(r**2 + epsilon**2)


def build_kernel(grid: GridSpec, lam: float, mu: float, epsilon: float) -> Kernel:
    """u(x) = lam exp(-mu r) / sqrt(r^2 + eps^2), r the minimum-image distance to 0."""
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    if mu < 0:
        raise ValueError("mu must be >= 0")
    r = np.sqrt(np.sum(grid.min_image_displacement() ** 2, axis=0))
    vals = regularized_yukawa(r, lam, mu, epsilon)
    # the Nyquist row maps to -L/2 both ways; evenness holds by construction
    vals.setflags(write=False)
    return Kernel(grid, vals, lam, mu, epsilon)


def mean_field_potential(u: Kernel, density: np.ndarray) -> np.ndarray:
    """Periodic convolution h^d (u * density), computed with FFTs."""
    density = np.asarray(density, dtype=float)
    if density.shape != u.grid.shape:
        raise GridMismatchError(f"density shape {density.shape} does not match {u.grid.shape}")
    if density.min() < -1e-12:
        raise ValueError("density must be nonnegative")
    if u.lam == 0:
        return np.zeros(u.grid.shape)
    conv = np.fft.ifftn(u.fourier * np.fft.fftn(density))
    return u.grid.cell * conv.real


class SRCheck(NamedTuple):
    passed: bool
    margin: float


def check_sr_stability(c: CouplingMatrix) -> SRCheck:
    """Semi-relativistic stability of the coupling negative parts.

    Passes iff lambda11_-, lambda22_- < 4/pi and
    (lambda12_-)^2 < (4/pi - lambda11_-)(4/pi - lambda22_-).
    """
    n11, n22, n12 = c.negative_parts()
    g1 = SR_CRITICAL - n11
    g2 = SR_CRITICAL - n22
    cross = g1 * g2 - n12**2
    margin = min(g1, g2, cross)
    return SRCheck(bool(g1 > 0 and g2 > 0 and cross > 0), float(margin))


def kato_margin(grid: GridSpec, mu: float, epsilon: float, lam: float = 1.0, size_cap: int = 4096) -> float:
    """Lowest eigenvalue of (pi/2) |k| - u_eps / |lam| on the lattice.

    The continuum value is >= 0 in three dimensions. For lam = 0 the
    potential is dropped. Above `size_cap` sites the lowest Ritz value of a
    Lanczos run is returned instead of a dense eigenvalue.
    """
    n = grid.n_sites
    if lam == 0:
        pot = np.zeros(grid.shape)
    else:
        pot = build_kernel(grid, 1.0, mu, epsilon).values
    k = np.sqrt(grid.momentum_sq())
    if n <= size_cap:
        H = KATO_CONSTANT * np.real(_multiplier_matrix(grid, k)) - np.diag(pot.ravel())
        return float(np.linalg.eigvalsh(H)[0])
    if n > 2**21:
        raise ValueError(f"{n} sites exceed the Ritz size cap")

    def mv(v):
        v = v.reshape(grid.shape)
        out = KATO_CONSTANT * np.fft.ifftn(k * np.fft.fftn(v)) - pot * v
        return out.ravel()

    op = spla.LinearOperator((n, n), matvec=mv, dtype=complex)
    return float(spla.eigsh(op, k=1, which="SA", return_eigenvectors=False)[0])


def _multiplier_matrix(grid: GridSpec, symbol: np.ndarray) -> np.ndarray:
    n = grid.n_sites
    eye = np.eye(n).reshape((n,) + grid.shape)
    cols = np.fft.ifftn(symbol * np.fft.fftn(eye, axes=tuple(range(1, grid.d + 1))),
                        axes=tuple(range(1, grid.d + 1))).reshape(n, n)
    mat = cols.T
    return 0.5 * (mat + mat.conj().T)


def form_bound_overshoot(kernel: Kernel, kinetic: KineticSpec, trials: int = 100, rng=None) -> float:
    """Empirical overshoot of <f, u^2 f> <= 4 lam^2 <f, D_A^2 f> over random f.

    Returns max_f ratio - 1 (negative when the bound holds with room). For the
    magnetic kind D_A^2 = 2 m S; for the semi-relativistic kind -Delta is used.
    """
    rng = np.random.default_rng(rng)
    grid = kernel.grid
    if kernel.lam == 0:
        return -1.0
    if kinetic.kind == MAGNETIC:
        op = kinetic.operator(grid)
        scale = 2 * kinetic.mass
    else:
        op = KineticSpec(MAGNETIC, 0.5).operator(grid)
        scale = 1.0
    worst = -np.inf
    for _ in range(trials):
        f = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
        lhs = np.sum(kernel.values**2 * np.abs(f) ** 2)
        rhs = 4 * kernel.lam**2 * scale * np.vdot(f, op.apply(f)).real
        worst = max(worst, lhs / rhs)
    return float(worst - 1)
