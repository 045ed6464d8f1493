"""Numerical calculus for open quantum systems in (S, L, H) form."""

from .errors import (ChannelMismatchError, CouplingError, EmbeddingError,
                     FitUndefinedError, IllPosedLoopError,
                     InvalidDimensionError, NotLinearError, NotQuadraticError,
                     OrderingError, SlhnetError, SpaceMismatchError,
                     StateError, StepSizeError, TripleInvariantError)
from .hilbert import (FOCK, QUBIT, SCALAR_SPACE, Factor, HilbertSpace,
                      compose_spaces, fock_space, qubit_space)
from .operators import (DensityMatrix, Operator, OrderingResult, StateVector,
                        as_operator, basis_state, boundary_project,
                        boundary_projector, coherent_state, commutator, embed,
                        expectation, fock_ops, is_psd, order_leq, qubit_ops,
                        vacuum_state)
from .network import (ChannelPartition, DirectCoupling, SLHTriple,
                      concatenate, conjugate_through, direct_coupling,
                      inverse, lft, permutation_system, series, static_system,
                      wedge_lft, wedge_series)
from .generator import (GeneratorHandle, adjoint_generator, dissipator,
                        generator, verify_series_generator)
from .dissipation import (CertificateReport, ExosystemClass, ExosystemSample,
                          GainRate, NaturalRate, PassivityRate,
                          StabilityBound, StabilityFormRate,
                          check_bounded_real, check_dissipation,
                          check_positive_real,
                          check_strict_passivity_stability,
                          extract_quadratic_coeffs, natural_supply_rate,
                          stability_certificate, uncertainty_decompose)
from .dynamics import (DecayFit, DriftMatrix, SimTrace, Trajectory, decay_fit,
                       evolve, expectation_trace, mean_drift_matrix)

__version__ = "0.1.0"
