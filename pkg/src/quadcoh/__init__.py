"""Coherence of continuous-variable states in the quadrature basis.

The two measures are the l1-style coherence ``C = ∫∫ |<x|rho|x'>| dx dx'``
and the regularized relative entropy of coherence
``S_reg = -S(rho) + h(p)``, with ``p(x) = <x|rho|x>``.  Conventions:
``a = X + iY``, so ``[X, Y] = i/2`` and the vacuum has ``ΔX = 1/2``.
"""

from .errors import (
    CapacityError,
    ContractError,
    ConvergenceError,
    CoverageError,
    NumericError,
    PositivityError,
    QuadcohError,
    UnsupportedStateError,
)
from .measures import (
    CoherenceReport,
    IncoherentApprox,
    chi_diagonal,
    chi_entropy_term,
    chi_fock_matrix,
    coherence_l1,
    coherence_l1_numeric,
    hilbert_schmidt_distance,
    relative_entropy_coherence,
    xi_gaussian_incoherent_state,
    xi_incoherent_state,
)
from .numerics import Options, build_grid, hermite_psi, integrate_1d, integrate_2d, integrate_abs_2d
from .states import (
    FockDensityMatrix,
    FockVector,
    GaussianPureState,
    ProductState,
    ThermalState,
    fock_representation,
    fock_truncate,
    load_state,
    mean_photon_number,
    quadrature_pdf,
    squeezed_vacuum_for_energy,
    state_from_dict,
    vacuum,
)
from .transforms import (
    TwoModePure,
    beam_split,
    coherence_two_mode_pure,
    displace,
    rotate,
    rotation_coherence_curve,
    squeeze,
    squeeze_entropy_shift,
    two_mode_squeeze,
)

__version__ = "0.1.0"
