"""Space-time theta and dG(q) discretisations of u' + A u = f, u(0) - Phi u(T) = xi0.

Core pieces: discrete Gelfand triples (``triple``), Gram and Legendre tools in
time (``timepoly``), the two schemes, discrete norms and error bundles
(``norms``) and inf-sup constants (``bnb``).  Experiment drivers and the CLI
live in :mod:`spacetime_bnb.harness`.
"""
__version__ = "0.1.0"

from .bnb import (BnbReport, Scheme, assemble_b_matrix, bnb_report, cfl_threshold, check_condlim,
                  check_peterpaul2, check_zigoto, gram_X_surrogate, infsup_constant)
from .dg_scheme import DgSolution, assemble_dg_system, corrected_derivative, solve_dg
from .errors import (ConditioningError, ConstructionError, ContractionViolation, NumericalError,
                     RescaleInfeasible, SingularSchemeError, SpaceTimeError)
from .grid import TimeGrid
from .norms import (ModalFunction, NormBundle, SineSeriesFunction, best_approximation, error_bundle,
                    hat_derivative_vprime_norm, norm_bundle, sup_h_norm, v_norm)
from .theta_scheme import ThetaSolution, average_form, solve_theta
from .timepoly import gram_inverse_formula, hilbert_gram, legendre_shifted, psi_basis
from .triple import (ContractionMap, FormSpec, SpaceTriple, make_contraction, make_form, make_p1_fem_triple,
                     make_spectral_triple, rescale_problem)

__all__ = [
    "__version__", "BnbReport", "Scheme", "assemble_b_matrix", "bnb_report", "cfl_threshold", "check_condlim",
    "check_peterpaul2", "check_zigoto", "gram_X_surrogate", "infsup_constant", "DgSolution",
    "assemble_dg_system", "corrected_derivative", "solve_dg", "ConditioningError", "ConstructionError",
    "ContractionViolation", "NumericalError", "RescaleInfeasible", "SingularSchemeError", "SpaceTimeError",
    "TimeGrid", "ModalFunction", "NormBundle", "SineSeriesFunction", "best_approximation", "error_bundle",
    "hat_derivative_vprime_norm", "norm_bundle", "sup_h_norm", "v_norm", "ThetaSolution", "average_form",
    "solve_theta", "gram_inverse_formula", "hilbert_gram", "legendre_shifted", "psi_basis", "ContractionMap",
    "FormSpec", "SpaceTriple", "make_contraction", "make_form", "make_p1_fem_triple", "make_spectral_triple",
    "rescale_problem",
]
