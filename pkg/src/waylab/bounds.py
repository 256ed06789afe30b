"""Operator identities and error-disturbance bounds under conservation.

When the interaction of a measurement model commutes with an additive
conserved quantity ``L1 + L2 + L3`` (object + probe + ancilla parts),
the commutator of the measured observable with the object charge can be
rewritten exactly in terms of the error and disturbance operators:

    [A(0), L1(0)] = [L1(dt), E] + [L2(dt), D] + [L3(dt), D]
    [A(0), L1(0)] = [L1(dt), E] + [L2(dt), D] + [L3(dt), E]

(the ancilla term can be carried by either the disturbance or the error
operator).  Taking expectations in a product input state and applying
Robertson-type estimates turns each identity into a trade-off bound on
the rms error and disturbance:

    |<[A, L1]>|/2 <= eps*sigma(L1(dt)) + eta*sigma(L2(dt)) + eta*sigma(L3(dt))
    |<[A, L1]>|/2 <= eps*sigma(L1(dt)) + eta*sigma(L2(dt)) + eps*sigma(L3(dt))

Summing and bounding the deviations by operator norms gives the
state-independent forms

    |<[A, L1]>| <= (eps + eta) * (2*max(sigma1, sigma2) + sigma3)
    |<[A, L1]>|^2 / (2*(2*max(||L1||, ||L2||) + sigma3)^2) <= eps^2 + eta^2

Every evaluation is emitted as a :class:`BoundReport` carrying both
sides, the slack, and a digest of the inputs, so CLI runs and tests
share one audit format.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .conservation import ConservationError, ConservationLaw, conservation_residual
from .measurement import (
    IndirectMeasurementModel,
    disturbance_operator,
    error_operator,
    rms_disturbance,
    rms_error,
)
from .operators import Operator, StateVector, commutator, expectation, operator_norm, std_dev
from .serialize import canonical_json, digest

__all__ = [
    "BoundReport",
    "CONSERVATION_TOL",
    "identity_residuals",
    "identity_reports",
    "qway_bounds",
    "summed_bound",
    "fundamental_bound",
    "reports_to_csv",
]

# A model must conserve the total charge at least this well before any
# identity or bound evaluation is meaningful.
CONSERVATION_TOL = 1e-9


@dataclass(frozen=True)
class BoundReport:
    """One audited relation evaluation.

    ``kind`` is ``"identity"`` (slack is the residual norm, pass means
    slack <= tol) or ``"inequality"`` (slack = rhs - lhs, pass means
    slack >= -tol).  ``digest`` identifies the inputs that produced the
    numbers; ``details`` carries auxiliary measured quantities.
    """

    relation: str
    kind: str
    lhs: float
    rhs: float
    slack: float
    digest: str
    details: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in ("identity", "inequality"):
            raise ValueError(f"unknown report kind {self.kind!r}")

    def passed(self, tol: float = CONSERVATION_TOL) -> bool:
        if self.kind == "identity":
            return self.slack <= tol
        return self.slack >= -tol

    def to_json_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "relation": self.relation,
            "kind": self.kind,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "digest": self.digest,
        }
        if self.details:
            out["details"] = dict(sorted(self.details.items()))
        return out


def reports_to_csv(reports: Sequence[BoundReport]) -> str:
    """CSV rendering of reports with the same columns as the JSON form."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["relation", "kind", "lhs", "rhs", "slack", "digest", "details"])
    for r in reports:
        writer.writerow(
            [
                r.relation,
                r.kind,
                repr(r.lhs),
                repr(r.rhs),
                repr(r.slack),
                r.digest,
                canonical_json(dict(sorted(r.details.items()))) if r.details else "",
            ]
        )
    return buf.getvalue()


def _require_conserving(model: IndirectMeasurementModel, law: ConservationLaw) -> None:
    if model.spec.factor_dims != law.spec.factor_dims:
        raise ValueError(
            f"model factors {model.spec.factor_dims} do not match law factors "
            f"{law.spec.factor_dims}"
        )
    residual = conservation_residual(model.interaction, law)
    if residual > CONSERVATION_TOL:
        raise ConservationError(residual, CONSERVATION_TOL)


def _charges_evolved(
    model: IndirectMeasurementModel, law: ConservationLaw
) -> tuple[Operator, Operator, Operator]:
    """The three charge parts, lifted and conjugated by the interaction."""
    s = model.spec
    u = model.interaction.entries
    out = []
    for part, role in (
        (law.object_part, "object"),
        (law.probe_part, "probe"),
        (law.ancilla_part, "ancilla"),
    ):
        emb = s.embed(part, role).entries
        out.append(Operator(u.conj().T @ emb @ u, hermitian=True))
    return out[0], out[1], out[2]


def identity_residuals(
    model: IndirectMeasurementModel, law: ConservationLaw
) -> tuple[float, float]:
    """Spectral-norm residuals of the two commutation identities.

    Requires the interaction to conserve the total charge (residual
    <= 1e-9), otherwise :class:`ConservationError` is raised: the
    identities are consequences of conservation and are not expected to
    hold without it.
    """
    _require_conserving(model, law)
    s = model.spec
    lhs = commutator(
        s.embed(model.observable, "object"), s.embed(law.object_part, "object")
    ).entries
    err = error_operator(model).entries
    dist = disturbance_operator(model).entries
    l1t, l2t, l3t = (op.entries for op in _charges_evolved(model, law))

    def comm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a @ b - b @ a

    rhs1 = comm(l1t, err) + comm(l2t, dist) + comm(l3t, dist)
    rhs2 = comm(l1t, err) + comm(l2t, dist) + comm(l3t, err)
    r1 = float(np.linalg.norm(lhs - rhs1, ord=2))
    r2 = float(np.linalg.norm(lhs - rhs2, ord=2))
    return r1, r2


def identity_reports(
    model: IndirectMeasurementModel, law: ConservationLaw
) -> tuple[BoundReport, BoundReport]:
    """The two identity residuals wrapped as audit records."""
    r1, r2 = identity_residuals(model, law)
    tag = digest(model=model, law=law)
    return (
        BoundReport("identity-1", "identity", r1, 0.0, r1, tag),
        BoundReport("identity-2", "identity", r2, 0.0, r2, tag),
    )


def _trade_off_ingredients(
    model: IndirectMeasurementModel, law: ConservationLaw, psi: StateVector
) -> dict[str, float]:
    _require_conserving(model, law)
    state = model.initial_state(psi)
    l1t, l2t, l3t = _charges_evolved(model, law)
    comm_obj = commutator(model.observable, law.object_part)
    return {
        "eps": rms_error(model, psi),
        "eta": rms_disturbance(model, psi),
        "sigma_l1": std_dev(l1t, state),
        "sigma_l2": std_dev(l2t, state),
        "sigma_l3": std_dev(l3t, state),
        "commutator_abs": abs(expectation(comm_obj, psi)),
    }


def qway_bounds(
    model: IndirectMeasurementModel, law: ConservationLaw, psi: StateVector
) -> tuple[BoundReport, BoundReport]:
    """Both state-dependent trade-off bounds at the given object state.

    Returns the variant whose ancilla term is weighted by the
    disturbance first, then the variant weighted by the error.
    """
    q = _trade_off_ingredients(model, law, psi)
    lhs = 0.5 * q["commutator_abs"]
    rhs1 = q["eps"] * q["sigma_l1"] + q["eta"] * q["sigma_l2"] + q["eta"] * q["sigma_l3"]
    rhs2 = q["eps"] * q["sigma_l1"] + q["eta"] * q["sigma_l2"] + q["eps"] * q["sigma_l3"]
    tag = digest(model=model, law=law, psi=psi)
    details = {k: v for k, v in q.items()}
    return (
        BoundReport("qway-1", "inequality", lhs, rhs1, rhs1 - lhs, tag, details),
        BoundReport("qway-2", "inequality", lhs, rhs2, rhs2 - lhs, tag, details),
    )


def summed_bound(
    model: IndirectMeasurementModel, law: ConservationLaw, psi: StateVector
) -> BoundReport:
    """State-dependent bound obtained by adding the two base variants:
    ``|<[A, L1]>| <= (eps + eta) * (2*max(sigma1, sigma2) + sigma3)``."""
    q = _trade_off_ingredients(model, law, psi)
    lhs = q["commutator_abs"]
    rhs = (q["eps"] + q["eta"]) * (2.0 * max(q["sigma_l1"], q["sigma_l2"]) + q["sigma_l3"])
    tag = digest(model=model, law=law, psi=psi)
    return BoundReport("summed", "inequality", lhs, rhs, rhs - lhs, tag, dict(q))


def fundamental_bound(
    model: IndirectMeasurementModel, law: ConservationLaw, psi: StateVector
) -> BoundReport:
    """Norm-based lower bound on the squared noise:
    ``|<[A, L1]>|^2 / (2*(2*max(||L1||, ||L2||) + sigma3)^2) <= eps^2 + eta^2``.

    The operator norms make the denominator state-independent.  A
    strictly tighter variant replaces them with the evolved-charge
    deviations ``sigma1, sigma2``; its left side is recorded in
    ``details["lhs_sigma_variant"]`` for comparison but the reported
    relation uses the norm form.
    """
    q = _trade_off_ingredients(model, law, psi)
    rhs = q["eps"] ** 2 + q["eta"] ** 2
    norm_den = 2.0 * max(operator_norm(law.object_part), operator_norm(law.probe_part))
    lhs = _safe_ratio(q["commutator_abs"] ** 2, 2.0 * (norm_den + q["sigma_l3"]) ** 2)
    sig_den = 2.0 * max(q["sigma_l1"], q["sigma_l2"])
    lhs_sigma = _safe_ratio(q["commutator_abs"] ** 2, 2.0 * (sig_den + q["sigma_l3"]) ** 2)
    details = dict(q)
    details["lhs_sigma_variant"] = lhs_sigma
    tag = digest(model=model, law=law, psi=psi)
    return BoundReport("fundamental", "inequality", lhs, rhs, rhs - lhs, tag, details)


def _safe_ratio(num: float, den: float) -> float:
    """num/den with the 0/0 case (trivial law, vanishing commutator)
    resolved to 0 and a genuinely unbounded ratio passed through as
    infinity.

    The numerator is a squared commutator expectation, so float noise
    leaves it around eps^2 ~ 1e-32 when it is exactly zero in exact
    arithmetic; the trade-off bound itself guarantees it vanishes
    whenever the denominator does, so anything below 1e-18 counts as
    the 0/0 case rather than a diverging ratio.
    """
    if den == 0.0:
        return 0.0 if num <= 1e-18 else float("inf")
    return num / den
