"""Quadrature squeezing of a single-mode optomechanical cavity.

Five rival dynamical descriptions of the same system -- full quantum,
classical phase-space ensemble, three mean-field hybrids, and a hybrid
continuous-measurement model -- plus their open-cavity variants, all
reporting the theta-minimized quadrature variance on a common time grid.
"""

__version__ = "0.1.0"

from .core import (Envelopes, NumericalInvariantError, PhysicalParams,
                   QuadratureSeries, RandomSource, envelope_functions,
                   thermal_occupation_classical, thermal_occupation_quantum)
from .analytic import (BlockadeCheck, ClassicalEnvelope, blockade_check,
                       classical_variance, meanfield_variance,
                       min_variance_from_moments, minimize_over_theta,
                       minimize_variance_curve, quantum_variance,
                       revival_approximation, sweep_variance_at_tau,
                       variance_from_moments)
from .classical import (ClassicalState, ensemble_variance, evolve_classical,
                        hamilton_ode_oracle, sample_initial_conditions)
from .hilbert import (BlockLindblad, DensityOperator, FieldMoments,
                      TruncatedJointState, closed_field_moments,
                      closed_variance_series, default_truncations,
                      evolve_closed, evolve_lindblad_cavity,
                      evolve_lindblad_mech, field_moments,
                      field_variance_from_state, initial_joint_state,
                      lindblad_variance_series)
from .measurement import (CollapseSummary, EnsembleResult,
                          HybridTrajectoryState, TrajectoryRecord,
                          collapse_diagnostics, ensemble_average,
                          run_trajectory, sde_step)

__all__ = [name for name in dir() if not name.startswith("_")]
