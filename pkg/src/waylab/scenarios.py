"""Concrete conservation scenarios and the fidelity-ceiling optimizer.

Two families are built here.  The spin family puts a CNOT on n qubits
total (control, target, and n-2 ancilla qubits) under conservation of
the total x spin component; the resulting fidelity ceiling is
F^2 <= 1 - 1/(4 n^2).  The bosonic family replaces the spin ancilla by
a truncated coherent field mode with charge 2N; its ceiling in terms of
the mean photon number is F^2 <= 1 - 1/(16 nbar), with the rigorous
per-implementation form using the measured deviation of the evolved
charge.  :func:`optimize_fidelity` probes how closely conserving
implementations approach these ceilings by derivative-free search over
commutant coefficients, asserting along the way that no evaluated point
ever crosses its ceiling.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import optimize as sp_optimize
from scipy.special import gammaln
from scipy.stats import poisson

from .bounds import BoundReport
from .cnot import (
    GateImplementation,
    SearchConfig,
    candidate_control_states,
    cnot_unitary,
    gate_fidelity,
    implementation_to_json,
    pauli,
)
from .conservation import (
    CommutantBasis,
    ConservationLaw,
    commutant_basis,
    conserving_unitary,
)
from .measurement import IndirectMeasurementModel
from .operators import HilbertSpec, Operator, StateVector, commutator, std_dev, tensor_states
from .serialize import digest

__all__ = [
    "SpinScenario",
    "BosonScenario",
    "OptimizeConfig",
    "OptimizationRun",
    "build_spin",
    "build_boson",
    "ceiling_qubit",
    "ceiling_boson",
    "poisson_cutoff",
    "truncated_coherent",
    "sigma_l3_bound_check",
    "projected_gate_coefficients",
    "optimize_fidelity",
    "way_positive_control",
]

# Search box for commutant coefficients: exp(-i c B) is 2*pi-periodic
# along any single unit-norm generator direction, so a wider box only
# revisits the same unitaries.
COEFF_BOX = 2.0 * math.pi


def ceiling_qubit(n: int) -> float:
    """Fidelity-squared ceiling 1 - 1/(4 n^2) for an n-qubit implementation.

    Follows from the noise-fidelity chain with sigma(L3') bounded by the
    ancilla charge norm n - 2.  At n=2 the ceiling is 15/16: the
    worst-case error probability of any spin-conserving two-qubit CNOT
    is at least 1/16.
    """
    if n < 2:
        raise ValueError(f"need at least control and target qubits, got n={n}")
    return 1.0 - 1.0 / (4.0 * n * n)


def ceiling_boson(nbar: float) -> float:
    """Fidelity-squared ceiling 1 - 1/(16 nbar) for a coherent control field.

    Uses the Poissonian input statistics (Delta N)^2 = <N>; the value
    may be <= 0 for nbar <= 1/16, where the formula degenerates and
    excludes nothing.
    """
    if nbar <= 0:
        raise ValueError(f"mean photon number must be positive, got {nbar}")
    return 1.0 - 1.0 / (16.0 * nbar)


@dataclass(frozen=True, eq=False)
class SpinScenario:
    """CNOT on n qubits under total-x-spin conservation."""

    n: int
    spec: HilbertSpec
    law: ConservationLaw
    ancilla_state: StateVector | None
    ceiling_fsq: float

    @property
    def size(self) -> int:
        """Implementation size: the total qubit count."""
        return self.n

    @property
    def label(self) -> str:
        return f"spin-n{self.n}"


@dataclass(frozen=True, eq=False)
class BosonScenario:
    """CNOT with a truncated coherent field mode as the control reservoir.

    The ancilla charge is twice the number operator; the coherent state
    amplitude is real, ``alpha_amp = sqrt(nbar)``.  ``size`` follows the
    field convention 2*sqrt(<N>).
    """

    nbar: float
    cutoff: int
    alpha_amp: complex
    spec: HilbertSpec
    law: ConservationLaw
    ancilla_state: StateVector
    ceiling_fsq: float

    @property
    def size(self) -> float:
        return 2.0 * math.sqrt(self.nbar)

    @property
    def label(self) -> str:
        return f"boson-nbar{self.nbar:g}"


def _sum_single_site(op2: np.ndarray, sites: int) -> Operator:
    """Sum of a one-qubit operator over each site of a spin register."""
    dim = 2**sites
    total = np.zeros((dim, dim), dtype=np.complex128)
    for k in range(sites):
        total += np.kron(
            np.kron(np.eye(2**k), op2), np.eye(2 ** (sites - k - 1))
        )
    return Operator(total, hermitian=True)


def build_spin(n: int, ancilla_state: StateVector | None = None) -> SpinScenario:
    """Spin scenario on n >= 2 qubits.

    The conservation law is Pauli X on the control, Pauli X on the
    target, and the summed X over the n-2 ancilla qubits (absent for
    n=2).  The default ancilla state is |0>^(n-2).  The choice matters:
    an ancilla prepared in an eigenstate of its conserved charge (any
    product of |+> and |->) pins the total charge sector, and a sector
    argument then forces the worst-case fidelity of *every* conserving
    implementation to zero.  Computational-basis states spread evenly
    over the charge sectors and act as a coherent reservoir, the same
    role the coherent state plays in the bosonic family.
    """
    if n < 2:
        raise ValueError(f"need at least control and target qubits, got n={n}")
    anc_qubits = n - 2
    spec = HilbertSpec((2, 2) + (2,) * anc_qubits)
    x = pauli("X")
    if anc_qubits == 0:
        law = ConservationLaw(spec, x, x, None)
        anc_state = None
    else:
        law = ConservationLaw(spec, x, x, _sum_single_site(x.entries, anc_qubits))
        if ancilla_state is None:
            ancilla_state = StateVector.basis(spec.ancilla_dim, 0)
        anc_state = ancilla_state
    if anc_state is not None and anc_state.dim != spec.ancilla_dim:
        raise ValueError(
            f"ancilla state dim {anc_state.dim}, expected {spec.ancilla_dim}"
        )
    return SpinScenario(
        n=n, spec=spec, law=law, ancilla_state=anc_state, ceiling_fsq=ceiling_qubit(n)
    )


def poisson_cutoff(nbar: float, tail_tol: float = 1e-10) -> int:
    """Smallest Fock dimension whose neglected Poisson tail is < tail_tol."""
    if nbar <= 0:
        raise ValueError(f"mean photon number must be positive, got {nbar}")
    if not 0 < tail_tol < 1:
        raise ValueError(f"tail tolerance must be in (0, 1), got {tail_tol}")
    d = 1
    while float(poisson.sf(d - 1, nbar)) >= tail_tol:
        d += 1
        if d > 100_000:
            raise RuntimeError("Poisson tail failed to fall below tolerance")
    return d


def truncated_coherent(nbar: float, cutoff: int) -> StateVector:
    """Coherent state of mean photon number nbar on the lowest ``cutoff``
    Fock levels, renormalized after truncation.

    Amplitudes alpha^k / sqrt(k!) are evaluated in log space (log-gamma
    for the factorial) so large cutoffs do not overflow.
    """
    if nbar <= 0:
        raise ValueError(f"mean photon number must be positive, got {nbar}")
    if cutoff < 1:
        raise ValueError(f"cutoff must be at least 1, got {cutoff}")
    alpha = math.sqrt(nbar)
    ks = np.arange(cutoff)
    log_amp = ks * math.log(alpha) - 0.5 * gammaln(ks + 1.0) - 0.5 * nbar
    return StateVector.from_amplitudes(np.exp(log_amp))


def build_boson(nbar: float, tail_tol: float = 1e-10, cutoff: int | None = None) -> BosonScenario:
    """Bosonic scenario: CNOT qubits plus one truncated field mode.

    The cutoff defaults to the smallest dimension meeting the tail
    tolerance; pass ``cutoff`` explicitly to study truncation
    sensitivity.  Mean photon numbers below 1e-6 are rejected: the
    vacuum limit leaves no reservoir and the truncation itself would
    degenerate.
    """
    if nbar < 1e-6:
        raise ValueError(f"mean photon number {nbar} below the supported 1e-6 floor")
    d = cutoff if cutoff is not None else poisson_cutoff(nbar, tail_tol)
    spec = HilbertSpec((2, 2, d))
    number_op = Operator(np.diag(np.arange(d, dtype=float)), hermitian=True)
    x = pauli("X")
    law = ConservationLaw(spec, x, x, Operator(2.0 * number_op.entries, hermitian=True))
    xi = truncated_coherent(nbar, d)
    return BosonScenario(
        nbar=float(nbar),
        cutoff=d,
        alpha_amp=complex(math.sqrt(nbar)),
        spec=spec,
        law=law,
        ancilla_state=xi,
        ceiling_fsq=ceiling_boson(nbar),
    )


def _evolved_ancilla_charge(impl: GateImplementation, law: ConservationLaw) -> Operator:
    u = impl.unitary.entries
    emb = impl.spec.embed(law.ancilla_part, "ancilla").entries
    return Operator(u.conj().T @ emb @ u, hermitian=True)


def _full_input(impl: GateImplementation, control: StateVector) -> StateVector:
    target_ready = StateVector.basis(2, 0)
    if impl.spec.has_ancilla:
        return tensor_states(control, target_ready, impl.ancilla_state)
    return tensor_states(control, target_ready)


def sigma_l3_bound_check(impl: GateImplementation, scenario: BosonScenario) -> BoundReport:
    """Check the evolved field charge's deviation against 2*sqrt(<N>+2).

    The chain behind the nbar-form ceiling estimates sigma(L3') = 2*
    (Delta N') assuming the evolved field keeps Poissonian statistics
    and gains at most the two qubits' worth of charge.  Neither step is
    exact after an arbitrary conserving interaction, so this measures
    sigma(L3') directly in the standard input (control (|0>+i|1>)/
    sqrt(2), target |0>, coherent ancilla), compares it against the
    claimed cap, and records the Poissonian residual |Delta N' -
    sqrt(<N'>)| and the mean-shift margin in the details.  The report's
    pass/fail is data about the approximation, not a build gate.
    """
    if impl.spec.factor_dims != scenario.spec.factor_dims:
        raise ValueError("implementation does not live on the scenario's space")
    control = candidate_control_states()["iplus"]
    full = _full_input(impl, control)
    l3_evolved = _evolved_ancilla_charge(impl, scenario.law)
    sigma = std_dev(l3_evolved, full)

    u = impl.unitary.entries
    n_emb = impl.spec.embed(
        Operator(0.5 * scenario.law.ancilla_part.entries, hermitian=True), "ancilla"
    ).entries
    n_evolved = Operator(u.conj().T @ n_emb @ u, hermitian=True)
    vec = n_evolved.entries @ full.amplitudes
    mean_n = float(np.real(np.vdot(full.amplitudes, vec)))
    var_n = max(float(np.real(np.vdot(vec, vec))) - mean_n**2, 0.0)

    rhs = 2.0 * math.sqrt(scenario.nbar + 2.0)
    details = {
        "sigma_l3_evolved": sigma,
        "mean_n_evolved": mean_n,
        "mean_n_input": scenario.nbar,
        "mean_shift_margin": (scenario.nbar + 2.0) - mean_n,
        "poissonian_residual": abs(math.sqrt(var_n) - math.sqrt(max(mean_n, 0.0))),
        "sigma_ceiling_fsq": 1.0 - 1.0 / (4.0 * (2.0 + sigma) ** 2),
        "nbar_ceiling_fsq": scenario.ceiling_fsq,
    }
    tag = digest(
        implementation=implementation_to_json(impl),
        scenario={"nbar": scenario.nbar, "cutoff": scenario.cutoff},
    )
    return BoundReport("sigma-l3", "inequality", sigma, rhs, rhs - sigma, tag, details)


@dataclass(frozen=True)
class OptimizeConfig:
    """Budget and seeding for the outer fidelity maximization.

    ``restarts`` random coefficient starts are drawn from one PCG64
    stream (so a larger budget extends, rather than reshuffles, a
    smaller one); ``initial_points`` adds caller-chosen coefficient
    vectors, e.g. a projection of a known-good interaction.  The inner
    worst-case fidelity search runs with ``inner`` during the climb
    and with the stronger ``final`` once, on the best point found, so
    the reported value is not inflated by an under-converged minimum.
    ``simplex_spread`` sets the edge length of the initial Nelder-Mead
    simplex; the default 0.6 is large enough to step off the wide
    F = 0 plateau that surrounds most of the coefficient box.
    """

    restarts: int = 3
    max_iter: int = 120
    seed: int = 0
    coeff_scale: float = 1.0
    polish_steps: int = 60
    simplex_spread: float = 0.6
    inner: SearchConfig = field(
        default_factory=lambda: SearchConfig(restarts=8, max_iter=150)
    )
    final: SearchConfig = field(
        default_factory=lambda: SearchConfig(restarts=32, max_iter=300)
    )
    initial_points: tuple[tuple[float, ...], ...] = ()


@dataclass(frozen=True)
class OptimizationRun:
    """Result of one ceiling-probing run.

    ``gap`` is the reference ceiling minus the best fidelity-squared;
    ``min_gap_evaluated`` is the smallest per-evaluation margin seen
    anywhere during the search (negative would mean a ceiling
    violation; for bosonic runs the per-evaluation margin uses the
    rigorous sigma(L3')-form ceiling).
    """

    scenario: str
    ceiling_fsq: float
    best_fidelity: float
    best_fidelity_sq: float
    gap: float
    min_gap_evaluated: float
    coefficients: tuple[float, ...]
    evaluations: int
    wall_time_s: float
    details: dict[str, float] = field(default_factory=dict)
    trace: tuple[dict[str, float], ...] = field(default=(), repr=False)

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario,
            "ceiling_fsq": self.ceiling_fsq,
            "best_fidelity": self.best_fidelity,
            "best_fidelity_sq": self.best_fidelity_sq,
            "gap": self.gap,
            "min_gap_evaluated": self.min_gap_evaluated,
            "coefficients": list(self.coefficients),
            "evaluations": self.evaluations,
            "wall_time_s": self.wall_time_s,
            "details": dict(sorted(self.details.items())),
            "trace": [dict(t) for t in self.trace],
        }


class _CeilingViolation(AssertionError):
    pass


def projected_gate_coefficients(
    scenario: SpinScenario | BosonScenario, basis: CommutantBasis | None = None
) -> np.ndarray:
    """Commutant coefficients of the ideal gate's generator.

    The CNOT is exp(-i H) with H = (pi/2)(I - U_CN); projecting H
    (padded with identity on the ancilla) onto the conserving span
    gives the closest conserving generator in the Frobenius sense.
    Random coefficient vectors almost surely sit on the wide F = 0
    plateau of the maximin landscape, so this point is the one start
    that reliably lands inside a basin with nonzero fidelity.
    """
    if basis is None:
        basis = commutant_basis(scenario.law)
    h = (math.pi / 2.0) * (np.eye(4) - cnot_unitary().entries)
    lifted = Operator(
        np.kron(h, np.eye(scenario.spec.ancilla_dim)), hermitian=True
    )
    coeffs, _ = basis.project_coefficients(lifted)
    return coeffs


def optimize_fidelity(
    scenario: SpinScenario | BosonScenario, config: OptimizeConfig | None = None
) -> OptimizationRun:
    """Maximize the worst-case CNOT fidelity over conserving unitaries.

    Multi-start Nelder-Mead over the commutant coefficient box
    [-2*pi, 2*pi] -- always including the projected-gate start from
    :func:`projected_gate_coefficients` -- followed by a coordinate
    compass polish of the best point.  Every evaluated implementation is checked against its
    ceiling (the fixed 1 - 1/(4 n^2) for spin; the measured
    sigma(L3')-form for bosonic runs) and the run aborts loudly if any
    point lands above ceiling + 1e-9, since that would contradict the
    conservation-law bound rather than merely disappoint.
    """
    cfg = config or OptimizeConfig()
    basis = commutant_basis(scenario.law)
    count = basis.generator_count
    is_boson = isinstance(scenario, BosonScenario)
    l3_emb = scenario.spec.embed(scenario.law.ancilla_part, "ancilla").entries
    control = candidate_control_states()["iplus"]

    state = {
        "best_f": -1.0,
        "best_x": np.zeros(count),
        "min_gap": math.inf,
        "evaluations": 0,
    }

    def evaluate(raw: np.ndarray, search: SearchConfig | None = None) -> float:
        coeffs = np.clip(np.asarray(raw, dtype=float), -COEFF_BOX, COEFF_BOX)
        u = conserving_unitary(basis, coeffs)
        impl = GateImplementation(
            spec=scenario.spec, unitary=u, ancilla_state=scenario.ancilla_state
        )
        res = gate_fidelity(impl, search or cfg.inner)
        if is_boson:
            full = _full_input(impl, control)
            l3_evolved = Operator(
                u.entries.conj().T @ l3_emb @ u.entries, hermitian=True
            )
            sigma = std_dev(l3_evolved, full)
            ceiling = 1.0 - 1.0 / (4.0 * (2.0 + sigma) ** 2)
        else:
            ceiling = scenario.ceiling_fsq
        gap = ceiling - res.fidelity_sq
        state["evaluations"] += 1
        if gap < state["min_gap"]:
            state["min_gap"] = gap
        if gap < -1e-9:
            raise _CeilingViolation(
                f"implementation at F^2 = {res.fidelity_sq!r} exceeds ceiling "
                f"{ceiling!r} by {-gap:.3e} in {scenario.label}"
            )
        if res.fidelity > state["best_f"]:
            state["best_f"] = res.fidelity
            state["best_x"] = coeffs
        return -res.fidelity

    rng = np.random.default_rng(cfg.seed)
    starts = [projected_gate_coefficients(scenario, basis)]
    starts += [
        np.clip(np.asarray(p, dtype=float), -COEFF_BOX, COEFF_BOX)
        for p in cfg.initial_points
    ]
    if any(s.size != count for s in starts):
        raise ValueError(f"initial points must have {count} coefficients")
    starts += [
        rng.standard_normal(count) * cfg.coeff_scale for _ in range(cfg.restarts)
    ]

    t0 = time.perf_counter()
    trace: list[dict[str, float]] = []
    for i, x0 in enumerate(starts):
        f0 = -evaluate(x0)
        simplex = np.tile(x0, (count + 1, 1))
        simplex[1:] += np.eye(count) * cfg.simplex_spread
        res = sp_optimize.minimize(
            evaluate,
            x0,
            method="Nelder-Mead",
            options={
                "maxiter": cfg.max_iter,
                "fatol": 1e-9,
                "xatol": 1e-6,
                "initial_simplex": simplex,
            },
        )
        trace.append(
            {
                "start": float(i),
                "initial": float(f0),
                "final": float(-res.fun),
                "iterations": float(res.nit),
            }
        )

    # Compass polish: deterministic coordinate probes with a halving
    # step, catching axis-aligned improvements the simplex missed.
    x = np.array(state["best_x"], copy=True)
    f_best = state["best_f"]
    step = 0.25
    budget = cfg.polish_steps
    while budget > 0 and step > 1e-4:
        improved = False
        for k in range(count):
            if budget <= 0:
                break
            for sgn in (1.0, -1.0):
                trial = np.array(x, copy=True)
                trial[k] += sgn * step
                f_trial = -evaluate(trial)
                budget -= 1
                if f_trial > f_best + 1e-12:
                    x, f_best = trial, f_trial
                    improved = True
                    break
                if budget <= 0:
                    break
        if not improved:
            step *= 0.5

    # One strong evaluation of the winner: the search estimates are
    # upper bounds on the true worst-case fidelity (a finite inner
    # search can miss the minimizing input), so the reported number
    # comes from the heavier `final` configuration.
    search_estimate = float(state["best_f"])
    best_x = np.array(state["best_x"], copy=True)
    state["best_f"] = -1.0
    evaluate(best_x, cfg.final)
    wall = time.perf_counter() - t0

    best_f = float(state["best_f"])
    best_fsq = best_f * best_f
    details: dict[str, float] = {"search_estimate_fsq": search_estimate**2}
    if is_boson:
        u = conserving_unitary(basis, state["best_x"])
        impl = GateImplementation(scenario.spec, u, scenario.ancilla_state)
        full = _full_input(impl, control)
        l3_evolved = Operator(u.entries.conj().T @ l3_emb @ u.entries, hermitian=True)
        sigma = std_dev(l3_evolved, full)
        details["sigma_l3_at_best"] = sigma
        details["sigma_ceiling_at_best"] = 1.0 - 1.0 / (4.0 * (2.0 + sigma) ** 2)
    return OptimizationRun(
        scenario=scenario.label,
        ceiling_fsq=scenario.ceiling_fsq,
        best_fidelity=best_f,
        best_fidelity_sq=best_fsq,
        gap=scenario.ceiling_fsq - best_fsq,
        min_gap_evaluated=float(state["min_gap"]),
        coefficients=tuple(float(c) for c in state["best_x"]),
        evaluations=int(state["evaluations"]),
        wall_time_s=wall,
        details=details,
        trace=tuple(trace),
    )


def _swap_two_qubits() -> np.ndarray:
    swap = np.zeros((4, 4), dtype=np.complex128)
    for y in (0, 1):
        for z in (0, 1):
            swap[2 * z + y, 2 * y + z] = 1.0
    return swap


def way_positive_control(observable: Operator, law: ConservationLaw) -> IndirectMeasurementModel:
    """Precise, non-disturbing measurement of an observable commuting
    with the conserved object charge.

    This is the contrapositive's witness: the trade-off bounds force
    noise only when [A, L1] != 0, and this construction shows the
    commuting case really does admit a perfect scheme under an exactly
    conserving interaction.  For a nondegenerate qubit observable the
    model is a controlled swap: the object's two eigenspaces either
    leave the probe/ancilla pair alone or exchange it, with the probe
    prepared in the pointer eigenstate matching the upper object
    eigenvalue and the ancilla in the one matching the lower.  The swap
    branch commutes with any law whose probe and ancilla charges are
    the same operator, and the eigenspace projectors commute with L1 by
    hypothesis, so conservation is exact.

    Requires qubit object/probe/ancilla factors with equal probe and
    ancilla charges, except for scalar observables where the identity
    interaction works under any law on any spec.
    """
    if observable.dim != law.spec.object_dim:
        raise ValueError(
            f"observable dim {observable.dim} does not match object factor "
            f"{law.spec.object_dim}"
        )
    if not observable.is_hermitian():
        raise ValueError("observable must be Hermitian")
    comm_norm = float(
        np.linalg.norm(commutator(observable, law.object_part).entries, ord=2)
    )
    if comm_norm > 1e-12:
        raise ValueError(
            f"observable does not commute with the object charge "
            f"(|[A, L1]| = {comm_norm:.3e}); no precise non-disturbing "
            f"scheme is promised in that regime"
        )

    spec = law.spec
    vals, vecs = np.linalg.eigh(observable.entries)
    scalar = vals[-1] - vals[0] <= 1e-12

    if scalar:
        c = float(np.mean(vals))
        pointer = Operator(c * np.eye(spec.probe_dim), hermitian=True)
        return IndirectMeasurementModel(
            spec=spec,
            probe_state=StateVector.basis(spec.probe_dim, 0),
            ancilla_state=(
                StateVector.basis(spec.ancilla_dim, 0) if spec.has_ancilla else None
            ),
            interaction=Operator(np.eye(spec.total_dim), unitary=True),
            pointer=pointer,
            observable=observable,
        )

    if spec.factor_dims != (2, 2, 2):
        raise ValueError(
            f"nondegenerate construction needs qubit object/probe/ancilla "
            f"factors, got {spec.factor_dims}"
        )
    charge_gap = float(
        np.max(np.abs(law.probe_part.entries - law.ancilla_part.entries))
    )
    if charge_gap > 1e-12:
        raise ValueError(
            "nondegenerate construction needs equal probe and ancilla "
            f"charges (the swap branch conserves only then); parts differ "
            f"by {charge_gap:.3e}"
        )

    lower, upper = vecs[:, 0], vecs[:, 1]
    p_upper = np.outer(upper, upper.conj())
    p_lower = np.outer(lower, lower.conj())
    u = np.kron(p_upper, np.eye(4)) + np.kron(p_lower, _swap_two_qubits())
    return IndirectMeasurementModel(
        spec=spec,
        probe_state=StateVector(upper),
        ancilla_state=StateVector(lower),
        interaction=Operator(u, unitary=True),
        pointer=Operator(observable.entries, hermitian=True),
        observable=observable,
    )
