"""Indirect measurement models and their error/disturbance figures.

A model couples an object system to a probe (and optionally an ancilla
group) through a unitary interaction, after which a pointer observable
is read out on the probe.  The quality of the scheme for measuring a
given object observable is captured by two root-mean-square figures:
the error (pointer after the interaction vs. observable before) and the
disturbance (observable after vs. before).  Both are defined through
Heisenberg-picture operators on the total space, which is also where
the conservation-law identities and bounds live.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .operators import (
    HilbertSpec,
    Operator,
    StateVector,
    eig_hermitian,
    expectation,
    tensor_states,
)

__all__ = [
    "IndirectMeasurementModel",
    "OutcomeDistribution",
    "CertificationResult",
    "heisenberg",
    "error_operator",
    "disturbance_operator",
    "rms_error",
    "rms_disturbance",
    "outcome_distribution",
    "certification_states",
    "is_precise",
    "is_nondisturbing",
]

PREDICATE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class IndirectMeasurementModel:
    """Object-probe(-ancilla) measurement scheme.

    Parameters
    ----------
    spec
        Factorization of the total space.
    probe_state
        Initial probe state (the pointer's ready state).
    ancilla_state
        Initial ancilla-group state; ``None`` means the trivial state on
        a spec without ancilla.
    interaction
        Unitary on the total space coupling the factors.
    pointer
        Hermitian observable read out on the probe after the interaction.
    observable
        Hermitian object observable the scheme is meant to measure.
    """

    spec: HilbertSpec
    probe_state: StateVector
    ancilla_state: StateVector | None
    interaction: Operator
    pointer: Operator
    observable: Operator

    def __post_init__(self) -> None:
        s = self.spec
        if self.probe_state.dim != s.probe_dim:
            raise ValueError(f"probe state dim {self.probe_state.dim}, expected {s.probe_dim}")
        anc = self.ancilla_state
        if anc is None:
            anc = StateVector(np.ones(1))
            object.__setattr__(self, "ancilla_state", anc)
        if anc.dim != s.ancilla_dim:
            raise ValueError(f"ancilla state dim {anc.dim}, expected {s.ancilla_dim}")
        if self.interaction.dim != s.total_dim:
            raise ValueError(
                f"interaction dim {self.interaction.dim}, expected {s.total_dim}"
            )
        if not self.interaction.is_unitary():
            raise ValueError("interaction must be unitary (within 1e-10)")
        if self.pointer.dim != s.probe_dim or not self.pointer.is_hermitian():
            raise ValueError("pointer must be Hermitian on the probe factor")
        if self.observable.dim != s.object_dim or not self.observable.is_hermitian():
            raise ValueError("observable must be Hermitian on the object factor")

    def initial_state(self, psi: StateVector) -> StateVector:
        """Product state object x probe x ancilla for object state psi."""
        if psi.dim != self.spec.object_dim:
            raise ValueError(f"object state dim {psi.dim}, expected {self.spec.object_dim}")
        if self.spec.has_ancilla:
            return tensor_states(psi, self.probe_state, self.ancilla_state)
        return tensor_states(psi, self.probe_state)


def heisenberg(
    model: IndirectMeasurementModel,
    observable: Literal["measured", "pointer"],
    *,
    evolved: bool,
) -> Operator:
    """Heisenberg-picture operator on the total space.

    ``observable="measured"`` lifts the object observable,
    ``"pointer"`` the probe pointer.  With ``evolved=True`` the lifted
    operator is conjugated by the interaction,
    ``U^dag (op x I) U``, i.e. taken after the coupling; with
    ``evolved=False`` it is the time-zero embedding.  Spectra are
    preserved either way.
    """
    if observable == "measured":
        emb = model.spec.embed(model.observable, "object")
    elif observable == "pointer":
        emb = model.spec.embed(model.pointer, "probe")
    else:
        raise ValueError(f"unknown observable role {observable!r}")
    if not evolved:
        return emb
    u = model.interaction.entries
    return Operator(u.conj().T @ emb.entries @ u, hermitian=True)


def error_operator(model: IndirectMeasurementModel) -> Operator:
    """Pointer after the interaction minus observable before it."""
    return Operator(
        heisenberg(model, "pointer", evolved=True).entries
        - heisenberg(model, "measured", evolved=False).entries,
        hermitian=True,
    )


def disturbance_operator(model: IndirectMeasurementModel) -> Operator:
    """Observable after the interaction minus observable before it."""
    return Operator(
        heisenberg(model, "measured", evolved=True).entries
        - heisenberg(model, "measured", evolved=False).entries,
        hermitian=True,
    )


def _rms(op: Operator, state: StateVector) -> float:
    vec = op.entries @ state.amplitudes
    return math.sqrt(max(float(np.real(np.vdot(vec, vec))), 0.0))


def rms_error(model: IndirectMeasurementModel, psi: StateVector) -> float:
    """Root-mean-square error <E^2>^(1/2) in the product input state."""
    return _rms(error_operator(model), model.initial_state(psi))


def rms_disturbance(model: IndirectMeasurementModel, psi: StateVector) -> float:
    """Root-mean-square disturbance <D^2>^(1/2) in the product input state."""
    return _rms(disturbance_operator(model), model.initial_state(psi))


@dataclass(frozen=True)
class OutcomeDistribution:
    """Discrete outcome distribution of a sharp observable.

    Outcomes are strictly ascending; probabilities are nonnegative and
    sum to one within 1e-10 (validated at construction).
    """

    outcomes: tuple[float, ...]
    probabilities: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.outcomes) != len(self.probabilities):
            raise ValueError("outcomes and probabilities must have equal length")
        if any(b <= a for a, b in zip(self.outcomes, self.outcomes[1:])):
            raise ValueError("outcomes must be strictly ascending")
        if min(self.probabilities, default=0.0) < -1e-10:
            raise ValueError("negative probability")
        if abs(sum(self.probabilities) - 1.0) > 1e-10:
            raise ValueError(f"probabilities sum to {sum(self.probabilities)!r}, not 1")

    def moment(self, k: int = 1) -> float:
        return float(sum(p * x**k for x, p in zip(self.outcomes, self.probabilities)))


def outcome_distribution(
    model: IndirectMeasurementModel,
    psi: StateVector,
    observable: Literal["measured", "pointer"],
    *,
    evolved: bool,
) -> OutcomeDistribution:
    """Born distribution of a Heisenberg-picture observable.

    Degenerate eigenvalues (within the operator-core clustering
    tolerance) are merged into a single outcome.
    """
    op = heisenberg(model, observable, evolved=evolved)
    state = model.initial_state(psi)
    vals, projs = eig_hermitian(op)
    probs = []
    for proj in projs:
        p = float(np.real(expectation(proj, state)))
        probs.append(min(max(p, 0.0), 1.0))
    return OutcomeDistribution(tuple(float(v) for v in vals), tuple(probs))


@dataclass(frozen=True)
class CertificationResult:
    """Outcome of a worst-case predicate over a family of input states.

    ``ok`` says whether every probed state stayed below the tolerance;
    ``worst_value`` and ``witness`` identify the worst offender either
    way, so a failure always comes with a concrete state to inspect.
    """

    ok: bool
    worst_value: float
    witness: StateVector

    def __bool__(self) -> bool:
        return self.ok


def certification_states(dim: int, sample_count: int = 8, seed: int = 0) -> list[StateVector]:
    """Deterministic family of object states used to certify predicates.

    Computational basis states, all two-level superpositions
    ``(|i> + |j>)/sqrt(2)`` and ``(|i> + i|j>)/sqrt(2)``, plus
    ``sample_count`` seeded pseudo-random states.
    """
    if sample_count < 0:
        raise ValueError("sample_count must be nonnegative")
    states = [StateVector.basis(dim, i) for i in range(dim)]
    for i in range(dim):
        for j in range(i + 1, dim):
            amps = np.zeros(dim, dtype=np.complex128)
            amps[i] = 1.0
            amps[j] = 1.0
            states.append(StateVector.from_amplitudes(amps))
            amps = np.zeros(dim, dtype=np.complex128)
            amps[i] = 1.0
            amps[j] = 1.0j
            states.append(StateVector.from_amplitudes(amps))
    rng = np.random.default_rng(seed)
    for _ in range(sample_count):
        raw = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        states.append(StateVector.from_amplitudes(raw))
    return states


def _certify(
    model: IndirectMeasurementModel,
    op: Operator,
    sample_count: int,
    tol: float,
    seed: int,
) -> CertificationResult:
    worst = -1.0
    witness: StateVector | None = None
    for psi in certification_states(model.spec.object_dim, sample_count, seed):
        value = _rms(op, model.initial_state(psi))
        if value > worst:
            worst = value
            witness = psi
    assert witness is not None
    return CertificationResult(ok=worst <= tol, worst_value=worst, witness=witness)


def is_precise(
    model: IndirectMeasurementModel,
    sample_count: int = 8,
    tol: float = PREDICATE_TOL,
    seed: int = 0,
) -> CertificationResult:
    """Whether the rms error vanishes on the certification family.

    Zero error on the full family (basis states plus pairwise
    superpositions plus random draws) pins the error operator down on
    the whole object space, not just on a lucky input.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be at least 1")
    return _certify(model, error_operator(model), sample_count, tol, seed)


def is_nondisturbing(
    model: IndirectMeasurementModel,
    sample_count: int = 8,
    tol: float = PREDICATE_TOL,
    seed: int = 0,
) -> CertificationResult:
    """Whether the rms disturbance vanishes on the certification family."""
    if sample_count < 1:
        raise ValueError("sample_count must be at least 1")
    return _certify(model, disturbance_operator(model), sample_count, tol, seed)
