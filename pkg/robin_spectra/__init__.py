"""
robin_spectra - Spectral enclosures and stability for discrete Robin Schrödinger operators.

The operators J_a + V act on sequences over the half-line {1, 2, 3, ...}:
J_a is tridiagonal with off-diagonals 1 and (1,1) entry a (a = 0 Dirichlet,
a = 1 Neumann), V is a complex diagonal potential.

Features:
- Green kernel of J_a in closed form and the enclosure function g_a
- Optimal enclosures for l1 potentials: membership, boundary tracing,
  one-site witnesses realising boundary points
- Hardy weights for the Dirichlet and Robin Laplacians, the generalized
  Hardy identity and optimality certificates
- Stability verdicts (purely continuous spectrum / no eigenvalues)
- Finite-section eigenvalues, rank-one eigenvalues in closed form and
  argument-principle counts
"""

__version__ = "1.0.0"

from .enclosure import (
    EnclosureCurve,
    OptimalityWitness,
    construct_optimality_witness,
    enclosure_indicator,
    simple_enclosure_member,
    trace_boundary,
)
from .errors import InputError, NumericalError, RobinSpectraError
from .hardy import HardyWeight, identity_residual, optimality_certificate, q_max, weight
from .lattice import (
    Potential,
    RobinCoupling,
    SpectralPoint,
    TridiagonalMatrix,
    build_truncation,
    duality_transform,
    inverse_joukowski,
    joukowski,
)
from .resolvent import g_a, gamma_a, green_entry
from .spectra import (
    bs_norm,
    count_outside_band,
    eigenvalues_dense,
    rank_one_eigenvalues_exact,
    truncation_spectrum,
)
from .stability import StabilityVerdict, VerdictLevel, kprime_hs_norm_sq, kprime_op_norm, verdict

__all__ = [
    "EnclosureCurve",
    "HardyWeight",
    "InputError",
    "NumericalError",
    "OptimalityWitness",
    "Potential",
    "RobinCoupling",
    "RobinSpectraError",
    "SpectralPoint",
    "StabilityVerdict",
    "TridiagonalMatrix",
    "VerdictLevel",
    "bs_norm",
    "build_truncation",
    "construct_optimality_witness",
    "count_outside_band",
    "duality_transform",
    "eigenvalues_dense",
    "enclosure_indicator",
    "g_a",
    "gamma_a",
    "green_entry",
    "identity_residual",
    "inverse_joukowski",
    "joukowski",
    "kprime_hs_norm_sq",
    "kprime_op_norm",
    "optimality_certificate",
    "q_max",
    "rank_one_eigenvalues_exact",
    "simple_enclosure_member",
    "trace_boundary",
    "truncation_spectrum",
    "verdict",
    "weight",
]
