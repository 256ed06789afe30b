"""Numerical laboratory for conservation-law limits on quantum measurement.

The package builds finite-dimensional indirect measurement models
(object, probe, optional ancilla factors), checks operator identities
that follow from additive conservation laws, evaluates the resulting
error/disturbance trade-off bounds, and searches for the best CNOT
gate fidelity attainable when the interaction must commute with a
conserved quantity.
"""

from .operators import (
    HilbertSpec,
    Operator,
    StateVector,
    commutator,
    eig_hermitian,
    expectation,
    expm_skew,
    identity,
    operator_norm,
    partial_trace,
    std_dev,
    tensor,
    tensor_states,
    zero,
)
from .measurement import (
    CertificationResult,
    IndirectMeasurementModel,
    OutcomeDistribution,
    certification_states,
    disturbance_operator,
    error_operator,
    heisenberg,
    is_nondisturbing,
    is_precise,
    outcome_distribution,
    rms_disturbance,
    rms_error,
)
from .conservation import (
    CommutantBasis,
    ConservationError,
    ConservationLaw,
    commutant_basis,
    conservation_residual,
    conserving_unitary,
    sample_conserving_unitary,
)
from .bounds import (
    BoundReport,
    fundamental_bound,
    identity_reports,
    identity_residuals,
    qway_bounds,
    summed_bound,
)
from .cnot import (
    FidelityResult,
    GateImplementation,
    SearchConfig,
    channel_apply,
    cnot_unitary,
    gate_fidelity,
    grid_search_fidelity,
    measurement_view,
    noise_fidelity_link,
    pauli,
    state_fidelity,
)
from .scenarios import (
    BosonScenario,
    OptimizationRun,
    OptimizeConfig,
    SpinScenario,
    build_boson,
    build_spin,
    ceiling_boson,
    ceiling_qubit,
    optimize_fidelity,
    projected_gate_coefficients,
    sigma_l3_bound_check,
    way_positive_control,
)

__version__ = "0.1.0"

__all__ = [
    "HilbertSpec",
    "Operator",
    "StateVector",
    "commutator",
    "eig_hermitian",
    "expectation",
    "expm_skew",
    "identity",
    "operator_norm",
    "partial_trace",
    "std_dev",
    "tensor",
    "tensor_states",
    "zero",
    "CertificationResult",
    "certification_states",
    "IndirectMeasurementModel",
    "OutcomeDistribution",
    "disturbance_operator",
    "error_operator",
    "heisenberg",
    "is_nondisturbing",
    "is_precise",
    "outcome_distribution",
    "rms_disturbance",
    "rms_error",
    "CommutantBasis",
    "ConservationError",
    "ConservationLaw",
    "commutant_basis",
    "conservation_residual",
    "conserving_unitary",
    "sample_conserving_unitary",
    "BoundReport",
    "fundamental_bound",
    "identity_reports",
    "identity_residuals",
    "qway_bounds",
    "summed_bound",
    "FidelityResult",
    "GateImplementation",
    "SearchConfig",
    "channel_apply",
    "cnot_unitary",
    "gate_fidelity",
    "grid_search_fidelity",
    "measurement_view",
    "noise_fidelity_link",
    "pauli",
    "state_fidelity",
    "BosonScenario",
    "OptimizationRun",
    "OptimizeConfig",
    "SpinScenario",
    "build_boson",
    "build_spin",
    "ceiling_boson",
    "ceiling_qubit",
    "optimize_fidelity",
    "projected_gate_coefficients",
    "sigma_l3_bound_check",
    "way_positive_control",
    "__version__",
]
