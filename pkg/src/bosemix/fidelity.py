"""Condensate-fidelity diagnostics for exact N-body states against Hartree orbitals.

All matrices live in the orthonormal site basis of (k + l) particle slots,
species-1 slots first. Single-particle operators enter through dense
eigendecompositions, so Sobolev weights are exact diagonal scalings.
"""

from dataclasses import dataclass, field
from typing import List, NamedTuple, Sequence

import numpy as np

from .fock import DENSE_CAP, ManyBodyHamiltonian, ManyBodyState, StateSizeError, apply_along_axis, orbital_coefficients
from .lattice import Field, GridMismatchError, KineticSpec
from .meanfield import HartreeSystem

SLACK = 1e-8

REDUCED = "reduced"
PROJECTOR = "projector"
DIFFERENCE = "difference"


@dataclass(frozen=True, eq=False)
class ReducedDensity:
    k: int
    l: int
    n_sites: int
    matrix: np.ndarray
    role: str = REDUCED

    def __post_init__(self):
        if self.k < 0 or self.l < 0 or self.k + self.l == 0:
            raise ValueError("need k, l >= 0, not both zero")
        dim = self.n_sites ** (self.k + self.l)
        if self.matrix.shape != (dim, dim):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match {(dim, dim)}")

    @property
    def n_slots(self) -> int:
        return self.k + self.l

    def __sub__(self, other: "ReducedDensity") -> "ReducedDensity":
        if (self.k, self.l, self.n_sites) != (other.k, other.l, other.n_sites):
            raise ValueError("reduced densities act on different slot spaces")
        return ReducedDensity(self.k, self.l, self.n_sites, self.matrix - other.matrix, DIFFERENCE)


def reduce(s: ManyBodyState, k: int, l: int, cap: int = DENSE_CAP) -> ReducedDensity:
    """gamma^(k,l): keep the first k species-1 slots and the last l species-2 slots."""
    N1, N2 = s.mixture.N1, s.mixture.N2
    if not (0 <= k <= N1 and 0 <= l <= N2) or k + l == 0:
        raise ValueError(f"cannot reduce N=({N1},{N2}) to (k,l)=({k},{l})")
    n = s.grid.n_sites
    dim = n ** (k + l)
    if dim > cap:
        raise StateSizeError(f"reduced density of dimension {dim} exceeds cap {cap}")
    c = s.coefficients()
    keep = list(range(k)) + list(range(N1 + N2 - l, N1 + N2))
    traced = [a for a in range(N1 + N2) if a not in keep]
    gamma = np.tensordot(c, c.conj(), axes=(traced, traced))
    return ReducedDensity(k, l, n, gamma.reshape(dim, dim), REDUCED)


def hartree_projector(psi: Field, phi: Field, k: int, l: int) -> ReducedDensity:
    """P^(k,l) = (|psi><psi|)^k (x) (|phi><phi|)^l."""
    vec = np.ones(1, dtype=complex)
    for f in [psi] * k + [phi] * l:
        vec = np.kron(vec, orbital_coefficients(f))
    return ReducedDensity(k, l, psi.grid.n_sites, np.outer(vec, vec.conj()), PROJECTOR)


def pickl_a(s: ManyBodyState, psi: Field, phi: Field):
    """(a1, a2) = (|q psi on slot 1 of species 1|^2, |q phi on slot 1 of species 2|^2)."""
    if psi.grid != s.grid or phi.grid != s.grid:
        raise GridMismatchError("orbitals and state live on different grids")
    c = s.coefficients()
    out = []
    for axis, f in ((0, psi), (s.mixture.N1, phi)):
        v = orbital_coefficients(f)
        overlap = np.tensordot(v.conj(), c, axes=(0, axis))
        q = c - np.moveaxis(np.multiply.outer(v, overlap), 0, axis)
        out.append(float(min(1.0, max(0.0, np.vdot(q, q).real))))
    return tuple(out)


def trace_norm(X: np.ndarray) -> float:
    return float(np.sum(np.linalg.svd(X, compute_uv=False)))


def hs_norm(X: np.ndarray) -> float:
    return float(np.linalg.norm(X))


class SobolevWeight:
    """S_{k,l,theta} = sum over species-1 slots (1 + S1)^theta + species-2 slots (1 + S2)^theta.

    Diagonal in the tensor product of one-particle eigenbases.

    `active` restricts the sum to a subset of slots, giving S_{k',l',theta} (x) 1
    on a larger slot space.
    """

    def __init__(self, theta: float, k: int, l: int, spectrum1, spectrum2, active=None):
        if not 0 <= theta <= 1:
            raise ValueError("theta must lie in [0, 1]")
        self.theta = float(theta)
        self.k, self.l = k, l
        self.evals = [spectrum1[0]] * k + [spectrum2[0]] * l
        self.evecs = [spectrum1[1]] * k + [spectrum2[1]] * l
        self.n_sites = spectrum1[0].size
        self.active = tuple(range(k + l)) if active is None else tuple(sorted(active))
        if not self.active or not set(self.active) <= set(range(k + l)):
            raise ValueError(f"active slots {active} not a nonempty subset of {k + l} slots")

    @classmethod
    def from_kinetics(cls, theta, k, l, kinetic1: KineticSpec, kinetic2: KineticSpec, grid, active=None):
        return cls(theta, k, l, kinetic1.operator(grid).eigh, kinetic2.operator(grid).eigh, active)

    def with_theta(self, theta) -> "SobolevWeight":
        w = SobolevWeight.__new__(SobolevWeight)
        w.__dict__.update(self.__dict__)
        w.theta = float(theta)
        w.__dict__.pop("_diag", None)
        return w

    def diagonal(self) -> np.ndarray:
        if "_diag" not in self.__dict__:
            total = np.zeros(1)
            n_slots = len(self.evals)
            for i in self.active:
                ev = self.evals[i]
                term = np.clip(1 + ev, 0, None) ** self.theta
                shape = [1] * n_slots
                shape[i] = ev.size
                total = total + term.reshape(shape)
            self._diag = np.broadcast_to(total, (self.n_sites,) * n_slots).ravel()
        return self._diag

    def to_eigenbasis(self, X: np.ndarray) -> np.ndarray:
        """U^dagger X U with U the tensor product of one-particle eigenbases."""
        r = len(self.evecs)
        n = self.n_sites
        T = X.reshape((n,) * (2 * r))
        for i, U in enumerate(self.evecs):
            T = apply_along_axis(T, U.conj().T, i)
            T = apply_along_axis(T, U.T, r + i)
        return T.reshape(X.shape)

    def weighted(self, X: np.ndarray, power: float = 0.5) -> np.ndarray:
        """S^power X S^power, expressed in the eigenbasis."""
        w = self.diagonal() ** power
        return w[:, None] * self.to_eigenbasis(X) * w[None, :]


class WeightedNorms(NamedTuple):
    trace: float
    hs: float


def weighted_norms(diff: ReducedDensity, w: SobolevWeight) -> WeightedNorms:
    """Trace and Hilbert-Schmidt norms of S^1/2 diff S^1/2."""
    if (diff.k, diff.l, diff.n_sites) != (w.k, w.l, w.n_sites):
        raise ValueError("weight and density act on different slot spaces")
    Y = w.weighted(diff.matrix)
    return WeightedNorms(trace_norm(Y), hs_norm(Y))


def partial_trace(rho: np.ndarray, dims: Sequence[int], q_keep: int) -> np.ndarray:
    """Trace out factors q_keep+1..m of an operator on the product of `dims`."""
    dims = list(dims)
    D = int(np.prod(dims))
    if rho.shape != (D, D):
        raise ValueError(f"matrix shape {rho.shape} inconsistent with factor dims {dims}")
    if not 0 < q_keep <= len(dims):
        raise ValueError("must keep between 1 and all factors")
    Dk = int(np.prod(dims[:q_keep]))
    Dt = D // Dk
    return np.einsum("iaja->ij", rho.reshape(Dk, Dt, Dk, Dt))


def partial_trace_slots(X: np.ndarray, n: int, n_slots: int, keep: Sequence[int]) -> np.ndarray:
    """Trace out every slot not in `keep` from an operator on n^n_slots."""
    keep = sorted(keep)
    traced = [i for i in range(n_slots) if i not in keep]
    T = X.reshape((n,) * (2 * n_slots))
    # sum the diagonal of each traced slot, highest first so lower indices stay valid
    for i in sorted(traced, reverse=True):
        r = T.ndim // 2
        T = np.trace(T, axis1=i, axis2=r + i)
    dim = n ** len(keep)
    return T.reshape(dim, dim)


def partial_trace_contraction(rho: np.ndarray, dims: Sequence[int], q_keep: int):
    """(tr|tr_{q+1..m} rho|, tr|rho|); the first never exceeds the second."""
    return trace_norm(partial_trace(rho, dims, q_keep)), trace_norm(rho)


def est_a_bound(a1: float, a2: float, k: int, l: int) -> float:
    """sqrt(8 (k a1 + l a2)), the depletion bound on tr|gamma - P|."""
    return float(np.sqrt(8 * max(k * a1 + l * a2, 0.0)))


def interpolation_constant(mean_s_half: float, psi: Field, phi: Field, kinetic1: KineticSpec,
                           kinetic2: KineticSpec) -> float:
    """2 (|S_{1,1,1/2} Psi| + |(1+S1)^1/2 psi| + |(1+S2)^1/2 phi|)^2."""
    terms = [mean_s_half]
    for f, kin in ((psi, kinetic1), (phi, kinetic2)):
        v = orbital_coefficients(f)
        Sv = kin.operator(f.grid).matrix @ v
        terms.append(np.sqrt(max(np.vdot(v, v).real + np.vdot(v, Sv).real, 0.0)))
    return float(2 * sum(terms) ** 2)


def interpolation_bound(C: float, k: int, l: int, a1: float, a2: float, hs: float, theta: float) -> float:
    """C (k + l) (a1^e + a2^e + |gamma - P|_HS^(1 - theta)), e = min(1/2, 1 - theta)."""
    e = min(0.5, 1 - theta)
    return float(C * (k + l) * (a1**e + a2**e + hs ** (1 - theta)))


def _one_body_expectation(c: np.ndarray, matrix: np.ndarray, axis: int) -> float:
    return float(np.vdot(c, apply_along_axis(c, matrix, axis)).real)


def kinetic_gaps(s: ManyBodyState, psi: Field, phi: Field, kinetic1: KineticSpec, kinetic2: KineticSpec):
    """(A_N, B_N, |S_{1,1,1/2} Psi|).

    A_N = <Psi, S1 on slot 1 of species 1 Psi> - <psi, S1 psi>, B_N likewise.
    """
    grid = s.grid
    c = s.coefficients()
    op1, op2 = kinetic1.operator(grid), kinetic2.operator(grid)
    ax2 = s.mixture.N1
    gaps = []
    for op, f, axis in ((op1, psi, 0), (op2, phi, ax2)):
        v = orbital_coefficients(f)
        gaps.append(_one_body_expectation(c, op.matrix, axis) - np.vdot(v, op.matrix @ v).real)
    root = lambda w: np.sqrt(np.clip(1 + w, 0, None))
    half = apply_along_axis(c, op1.function_matrix(root), 0) + apply_along_axis(c, op2.function_matrix(root), ax2)
    return gaps[0], gaps[1], float(np.sqrt(np.vdot(half, half).real))


def pair_expectations(s: ManyBodyState, H: ManyBodyHamiltonian):
    """<Psi, u(x_a - x_b) Psi> for the first intraspecies pairs and the first interspecies pair.

    Intraspecies entries are None when the species has a single particle.
    """
    prob = np.abs(s.coefficients()) ** 2
    N1, N2 = s.mixture.N1, s.mixture.N2
    npart = N1 + N2

    def marginal(a, b):
        other = tuple(x for x in range(npart) if x not in (a, b))
        return prob.sum(axis=other)

    e11 = float(np.sum(H.pair[(1, 1)] * marginal(0, 1))) if N1 > 1 else None
    e22 = float(np.sum(H.pair[(2, 2)] * marginal(N1, N1 + 1))) if N2 > 1 else None
    e12 = float(np.sum(H.pair[(1, 2)] * marginal(0, N1)))
    return e11, e22, e12


def energy_bookkeeping(s: ManyBodyState, psi: Field, phi: Field, H: ManyBodyHamiltonian,
                       system: HartreeSystem, psi0: Field, phi0: Field):
    """Both sides of R^2 A_N + B_N = -(potential gaps), using conservation of both energies.

    For N_i = 1 the many-body intraspecies term is absent while the Hartree
    functional keeps it; the identity then carries the constant offset fixed
    by the initial orbitals psi0, phi0.
    """
    from .meanfield import HartreeState

    mixture = s.mixture
    R2 = mixture.N1 / mixture.N2
    R = np.sqrt(R2)
    A, B, _ = kinetic_gaps(s, psi, phi, *H.kinetics)
    e11, e22, e12 = pair_expectations(s, H)
    rep = system.energy_report(HartreeState(psi, phi))
    mb11 = e11 if e11 is not None else 0.0
    mb22 = e22 if e22 is not None else 0.0
    offset = 0.0
    if e11 is None or e22 is None:
        rep0 = system.energy_report(HartreeState(psi0, phi0))
        if e11 is None:
            offset -= 0.5 * R2 * rep0.pot11
        if e22 is None:
            offset -= 0.5 * rep0.pot22
    lhs = R2 * A + B
    rhs = -0.5 * R2 * (mb11 - rep.pot11) - 0.5 * (mb22 - rep.pot22) - R * (e12 - rep.pot12) + offset
    return float(lhs), float(rhs)


def monotonicity_check(s: ManyBodyState, psi: Field, phi: Field, kinetic1: KineticSpec,
                       kinetic2: KineticSpec, k0: int, l0: int, k: int, l: int, theta: float):
    """(weighted (k,l) trace norm, (S_{k,l,theta} (x) 1)-weighted (k0,l0) trace norm).

    The (k,l) difference is a partial trace of the (k0,l0) difference, so the
    first value never exceeds the second.
    """
    if not (k <= k0 and l <= l0):
        raise ValueError("(k, l) must be contained in (k0, l0)")
    grid = s.grid
    small = reduce(s, k, l) - hartree_projector(psi, phi, k, l)
    big = reduce(s, k0, l0) - hartree_projector(psi, phi, k0, l0)
    w_small = SobolevWeight.from_kinetics(theta, k, l, kinetic1, kinetic2, grid)
    # reduce keeps the first species-1 and the last species-2 slots
    active = list(range(k)) + list(range(k0 + l0 - l, k0 + l0))
    w_big = SobolevWeight.from_kinetics(theta, k0, l0, kinetic1, kinetic2, grid, active=active)
    return weighted_norms(small, w_small).trace, weighted_norms(big, w_big).trace


def interpolation_check(X: np.ndarray, w: SobolevWeight):
    """(weighted HS norm at w.theta, HS_1^theta * HS_0^(1 - theta)), both weighted."""
    hs = lambda th: hs_norm(w.with_theta(th).weighted(X))
    th = w.theta
    return hs(th), hs(1.0) ** th * hs(0.0) ** (1 - th)


def random_hermitian(dim: int, rng) -> np.ndarray:
    X = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (X + X.conj().T)


def duality_check(diff: ReducedDensity, observable: np.ndarray, w: SobolevWeight):
    """(|tr(A diff)|, |S^-1/2 A S^-1/2| tr|S^1/2 diff S^1/2|)."""
    lhs = abs(np.trace(observable @ diff.matrix))
    scaled = w.weighted(observable, power=-0.5)
    op_norm = np.max(np.abs(np.linalg.eigvalsh(0.5 * (scaled + scaled.conj().T))))
    return float(lhs), float(op_norm * weighted_norms(diff, w).trace)


@dataclass
class ThetaEntry:
    theta: float
    trace_norm: float
    hs_norm: float
    thm23_bound: float


@dataclass
class FidelityReport:
    t: float
    N1: int
    N2: int
    k: int
    l: int
    a1: float
    a2: float
    raw_trace_norm: float
    raw_hs_norm: float
    est_a_bound: float
    interpolation_constant: float
    A_N: float
    B_N: float
    meanS_half: float
    thetas: List[ThetaEntry] = field(default_factory=list)
    violations: List[str] = field(default_factory=list)

    def records(self) -> List[dict]:
        """One JSON-ready record per theta."""
        out = []
        for e in self.thetas:
            out.append({
                "t": self.t, "N1": self.N1, "N2": self.N2, "theta": e.theta,
                "trace_norm": e.trace_norm, "hs_norm": e.hs_norm,
                "a1": self.a1, "a2": self.a2,
                "est_a_bound": self.est_a_bound, "thm23_bound": e.thm23_bound,
                "A_N": self.A_N, "B_N": self.B_N, "meanS_half": self.meanS_half,
                "violations": list(self.violations),
            })
        return out


def bound_checks(s: ManyBodyState, psi: Field, phi: Field, kinetic1: KineticSpec, kinetic2: KineticSpec,
                 k: int, l: int, thetas: Sequence[float], t: float = 0.0, n_observables: int = 0,
                 rng=None, slack: float = SLACK, cap: int = DENSE_CAP) -> FidelityReport:
    """Evaluate every computable inequality on one snapshot.

    Checked: the depletion bound on tr|gamma - P|, the interpolation bound for
    each 0 < theta < 1, the observable duality bound (with `n_observables`
    random Hermitian observables per theta) and the partial-trace contraction
    of the weighted difference. Violations beyond `slack` are listed, never raised.
    """
    rng = np.random.default_rng(rng)
    grid = s.grid
    gamma = reduce(s, k, l, cap=cap)
    diff = gamma - hartree_projector(psi, phi, k, l)
    a1, a2 = pickl_a(s, psi, phi)
    A, B, mean_half = kinetic_gaps(s, psi, phi, kinetic1, kinetic2)
    raw_tr = trace_norm(diff.matrix)
    raw_hs = hs_norm(diff.matrix)
    bound_a = est_a_bound(a1, a2, k, l)
    C = interpolation_constant(mean_half, psi, phi, kinetic1, kinetic2)
    report = FidelityReport(t, s.mixture.N1, s.mixture.N2, k, l, a1, a2, raw_tr, raw_hs, bound_a, C,
                            A, B, mean_half)
    if raw_tr > bound_a + slack:
        report.violations.append(f"est_a: {raw_tr:.6e} > {bound_a:.6e}")
    base = SobolevWeight.from_kinetics(0.0, k, l, kinetic1, kinetic2, grid)
    dims = [grid.n_sites] * (k + l)
    for theta in thetas:
        w = base.with_theta(theta)
        Y = w.weighted(diff.matrix)
        tr, hs = trace_norm(Y), hs_norm(Y)
        b23 = interpolation_bound(C, k, l, a1, a2, raw_hs, theta)
        report.thetas.append(ThetaEntry(float(theta), tr, hs, b23))
        if 0 < theta < 1 and tr > b23 + slack:
            report.violations.append(f"thm23(theta={theta}): {tr:.6e} > {b23:.6e}")
        for _ in range(n_observables):
            obs = random_hermitian(diff.matrix.shape[0], rng)
            lhs, rhs = duality_check(diff, obs, w)
            if lhs > rhs + slack * max(1.0, rhs):
                report.violations.append(f"duality(theta={theta}): {lhs:.6e} > {rhs:.6e}")
        if k + l >= 2:
            lhs, rhs = partial_trace_contraction(Y, dims, k + l - 1)
            if lhs > rhs + slack:
                report.violations.append(f"partial_trace(theta={theta}): {lhs:.6e} > {rhs:.6e}")
    return report


def fidelity_report(*args, **kwargs) -> FidelityReport:
    return bound_checks(*args, **kwargs)
