"""decotime: short-time decoherence timescales of an N-qubit register.

The register couples to spontaneous-emission modes, cavity-decay
quasi-modes and its own centre-of-mass vibrations (with Lamb-Dicke recoil
couplings to every field).  This package evaluates the quadratic
decoherence time tau_2 of the short-time fidelity expansion for arbitrary
pure states, carries the published closed-form special cases
(Hadamard / GHZ / SE-only / no-SE), and validates the analytic variance
engine against exact brute-force evolution on small discrete instances.
"""

from .config import load_model, load_model_file, serialize_model
from .errors import (ConfigError, ModelValidationError, NumericsError,
                     RequiresNormalModesError, StateClassMismatchError)
from .model import (CONSTANTS, CavityDecayParams, CavityParams, DerivedParams,
                    GatingSnapshot, Geometry, Model, PhysicalConstants,
                    QubitParams, SEBathParams, SpectralProfile, ValidatedModel,
                    VibTopology, derived_quantities, validate_model)
from .modesums import (SpectralSumResult, cavity_decay_sum, extract_F,
                       f_closed, lamb_dicke_cavity_sum, lamb_dicke_se_sum,
                       se_cross_sum, se_cross_sum_scaled, se_diagonal_sum,
                       thermal_occupation)
from .oracle import (FidelityCurve, OracleDecayMode, OracleSEMode, OracleSpec,
                     OracleVibMode, build_small_system, cross_validate,
                     evolve_fidelity, fit_tau2, regression_specs)
from .states import (CavityMoments, CavityState, QubitRegisterState,
                     build_state, cavity_moments)
from .tau2 import (DecoherenceReport, SweepResult, TermList,
                   assemble_interaction_terms, classify_decoherence,
                   discrete_term_list, fidelity_short_time, scaling_sweep,
                   tau2_closed_form, tau2_general)
from .vibrations import (CouplingMatrix, NormalModes, build_coupling_matrix,
                         lamb_dicke_coefficients, mean_inverse_frequency,
                         normal_modes_for, solve_normal_modes)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
