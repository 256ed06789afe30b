"""Trade-off bound tests: identities, inequality slack, report plumbing.

Structural relations double as oracles here: the summed bound must
majorize the sum of the two base variants, and the norm-form noise bound
must be weaker than its recorded sigma-variant, on every sample.
"""

import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from waylab import (
    BoundReport,
    ConservationError,
    ConservationLaw,
    HilbertSpec,
    IndirectMeasurementModel,
    StateVector,
    cnot_unitary,
    fundamental_bound,
    identity,
    identity_reports,
    identity_residuals,
    qway_bounds,
    summed_bound,
)
from waylab.bounds import reports_to_csv
from waylab.cnot import pauli
from waylab.sampling import random_conserving_model, random_state


Z = pauli("Z")


def _random_object_state(seed: int, dim: int = 2) -> StateVector:
    return random_state(np.random.default_rng(seed), dim)


def test_identity_residuals_vanish_on_conserving_models():
    spec = HilbertSpec((2, 2, 2))
    for seed in range(10):
        model, law = random_conserving_model(seed, spec)
        r1, r2 = identity_residuals(model, law)
        assert r1 <= 1e-9
        assert r2 <= 1e-9


def test_identity_reports_structure():
    model, law = random_conserving_model(3, HilbertSpec((2, 2)))
    rep1, rep2 = identity_reports(model, law)
    assert rep1.relation == "identity-1"
    assert rep2.relation == "identity-2"
    for rep in (rep1, rep2):
        assert rep.kind == "identity"
        assert rep.rhs == 0.0
        assert rep.slack == rep.lhs
        assert rep.passed(1e-9)
        assert len(rep.digest) == 16
    assert rep1.digest == rep2.digest


def test_identity_rejects_nonconserving_interaction():
    # CNOT does not conserve total X
    x = pauli("X")
    spec = HilbertSpec((2, 2))
    law = ConservationLaw(spec, x, x)
    model = IndirectMeasurementModel(
        spec=spec,
        probe_state=StateVector.basis(2, 0),
        ancilla_state=None,
        interaction=cnot_unitary(),
        pointer=Z,
        observable=Z,
    )
    with pytest.raises(ConservationError) as exc:
        identity_residuals(model, law)
    assert exc.value.residual > 1e-9


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_trade_off_bounds_hold(seed):
    model, law = random_conserving_model(seed, HilbertSpec((2, 2)))
    psi = _random_object_state(seed + 17)
    b1, b2 = qway_bounds(model, law, psi)
    bs = summed_bound(model, law, psi)
    bf = fundamental_bound(model, law, psi)
    for rep in (b1, b2, bs, bf):
        assert rep.kind == "inequality"
        assert rep.slack >= -1e-9, rep.relation


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_summed_majorizes_base_variants(seed):
    model, law = random_conserving_model(seed, HilbertSpec((2, 2, 2)))
    psi = _random_object_state(seed + 1)
    b1, b2 = qway_bounds(model, law, psi)
    bs = summed_bound(model, law, psi)
    # both base bounds state (1/2)|<c>| <= rhs; the summed form doubles
    # the left side and can only widen the right side
    assert bs.lhs == pytest.approx(2.0 * b1.lhs, rel=1e-12)
    assert bs.rhs >= b1.rhs + b2.rhs - 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_fundamental_sigma_variant_is_tighter(seed):
    model, law = random_conserving_model(seed, HilbertSpec((2, 2)))
    psi = _random_object_state(seed + 5)
    rep = fundamental_bound(model, law, psi)
    assert "lhs_sigma_variant" in rep.details
    # deviations never exceed operator norms, so the sigma-form lower
    # bound is at least as large, and it still sits under the noise
    assert rep.details["lhs_sigma_variant"] >= rep.lhs - 1e-12
    assert rep.details["lhs_sigma_variant"] <= rep.rhs + 1e-9


def test_commuting_law_degenerates_gracefully():
    # observable Z, charges Z: <[A, L1]> = 0, bounds hold with lhs 0
    spec = HilbertSpec((2, 2))
    law = ConservationLaw(spec, Z, Z)
    model = IndirectMeasurementModel(
        spec=spec,
        probe_state=StateVector.basis(2, 0),
        ancilla_state=None,
        interaction=identity(4),
        pointer=Z,
        observable=Z,
    )
    psi = _random_object_state(9)
    b1, b2 = qway_bounds(model, law, psi)
    assert b1.lhs == pytest.approx(0.0, abs=1e-12)
    assert b1.passed() and b2.passed()
    bf = fundamental_bound(model, law, psi)
    assert bf.lhs == pytest.approx(0.0, abs=1e-12)
    assert bf.passed()


def test_bound_report_passed_semantics():
    ident = BoundReport("r", "identity", 1e-12, 0.0, 1e-12, "deadbeefdeadbeef")
    assert ident.passed(1e-9)
    assert not BoundReport("r", "identity", 1e-3, 0.0, 1e-3, "d" * 16).passed(1e-9)
    ineq = BoundReport("r", "inequality", 1.0, 2.0, 1.0, "d" * 16)
    assert ineq.passed(1e-9)
    assert not BoundReport("r", "inequality", 2.0, 1.0, -1.0, "d" * 16).passed(1e-9)
    with pytest.raises(ValueError):
        BoundReport("r", "mystery", 0.0, 0.0, 0.0, "d" * 16)


def test_report_json_dict_sorts_details():
    rep = BoundReport(
        "r", "inequality", 1.0, 2.0, 1.0, "d" * 16, details={"zeta": 1.0, "alpha": 2.0}
    )
    data = rep.to_json_dict()
    assert list(data["details"].keys()) == ["alpha", "zeta"]
    assert data["relation"] == "r"
    assert data["slack"] == 1.0


def test_reports_csv_roundtrip():
    model, law = random_conserving_model(1, HilbertSpec((2, 2)))
    psi = _random_object_state(2)
    reports = [*qway_bounds(model, law, psi), summed_bound(model, law, psi)]
    text = reports_to_csv(reports)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 3
    assert rows[0]["relation"] == reports[0].relation
    for row, rep in zip(rows, reports):
        assert float(row["slack"]) == pytest.approx(rep.slack, rel=1e-15)
        assert row["digest"] == rep.digest
