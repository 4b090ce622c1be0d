"""Two-species Bose mixtures: mean-field dynamics, exact few-body propagation and condensate-fidelity diagnostics."""

from .fidelity import (FidelityReport, ReducedDensity, SobolevWeight, bound_checks, hartree_projector,
                       kinetic_gaps, partial_trace_contraction, pickl_a, reduce, weighted_norms)
from .fock import ManyBodyHamiltonian, ManyBodyState, apply_hamiltonian, product_state, propagate, symmetry_defect
from .interaction import CouplingMatrix, build_kernel, check_sr_stability, mean_field_potential
from .lattice import Field, GridSpec, KineticSpec, apply_kinetic, gauge_transform, gaussian, kinetic_propagator
from .meanfield import HartreeState, HartreeSystem, MixtureSize

__version__ = "0.1.0"
