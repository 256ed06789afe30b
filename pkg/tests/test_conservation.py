"""Conservation-law plumbing: commutant construction and sampling.

The key cross-check is against a brute-force nullspace count: the space
of matrices commuting with L has complex dimension sum(m_i^2) over the
eigenvalue multiplicities, which a dense superoperator rank computation
confirms without reusing any of the block logic under test.
"""

import numpy as np
import pytest

from waylab import (
    ConservationError,
    ConservationLaw,
    HilbertSpec,
    Operator,
    StateVector,
    commutant_basis,
    commutator,
    conservation_residual,
    conserving_unitary,
    expm_skew,
    identity,
    operator_norm,
    sample_conserving_unitary,
    tensor,
    zero,
)
from waylab.cnot import pauli


X = pauli("X")
Z = pauli("Z")


def _xx_law() -> ConservationLaw:
    return ConservationLaw(HilbertSpec((2, 2)), X, X)


def _xxx_law() -> ConservationLaw:
    return ConservationLaw(HilbertSpec((2, 2, 2)), X, X, X)


def test_law_total_is_embedded_sum():
    law = _xx_law()
    expected = np.kron(X.entries, np.eye(2)) + np.kron(np.eye(2), X.entries)
    np.testing.assert_allclose(law.total().entries, expected, atol=1e-15)


def test_law_defaults_ancilla_to_zero():
    law = ConservationLaw(HilbertSpec((2, 2, 2)), X, X)
    np.testing.assert_allclose(law.ancilla_part.entries, np.zeros((2, 2)))


def test_law_validates_parts():
    spec = HilbertSpec((2, 2))
    with pytest.raises(ValueError):
        ConservationLaw(spec, X, identity(3))
    nonherm = Operator(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        ConservationLaw(spec, X, nonherm)


def test_conservation_error_carries_numbers():
    err = ConservationError(residual=0.5, tol=1e-9)
    assert err.residual == 0.5
    assert err.tol == 1e-9
    message = str(err)
    assert "residual" in message and "5.0" in message
    assert isinstance(err, ValueError)


def test_conservation_residual_zero_for_commuting():
    law = _xx_law()
    u = expm_skew(Operator(law.total().entries, hermitian=True), 0.37)
    assert conservation_residual(u, law) < 1e-12


def test_conservation_residual_detects_violation():
    law = _xx_law()
    u = Operator(np.kron(Z.entries, np.eye(2)), unitary=True)
    assert conservation_residual(u, law) > 1.0


def test_commutant_generator_counts():
    # multiplicities of X1+X2: {-2: 1, 0: 2, +2: 1} -> 1 + 4 + 1
    assert commutant_basis(_xx_law()).generator_count == 6
    # X1+X2+X3: {-3: 1, -1: 3, +1: 3, +3: 1} -> 1 + 9 + 9 + 1
    assert commutant_basis(_xxx_law()).generator_count == 20


def test_block_structure_matches_multiplicities():
    # keys are clustered eigenvalues (floats), so compare with tolerance
    basis = commutant_basis(_xx_law())
    items = sorted(basis.block_structure.items())
    np.testing.assert_allclose([v for v, _ in items], [-2.0, 0.0, 2.0], atol=1e-12)
    assert [m for _, m in items] == [1, 2, 1]


@pytest.mark.parametrize("law_fn", [_xx_law, _xxx_law])
def test_commutant_count_matches_nullspace(law_fn):
    # brute force: vec([B, L]) = (I (x) L - L^T (x) I) vec(B) = 0
    law = law_fn()
    l_tot = law.total().entries
    d = l_tot.shape[0]
    superop = np.kron(np.eye(d), l_tot) - np.kron(l_tot.T, np.eye(d))
    rank = np.linalg.matrix_rank(superop, tol=1e-9)
    nullity = d * d - rank
    assert commutant_basis(law).generator_count == nullity


def test_generators_are_orthonormal_hermitian_and_commute():
    basis = commutant_basis(_xx_law())
    gens = basis.generators
    l_tot = _xx_law().total()
    for i, g in enumerate(gens):
        assert g.is_hermitian()
        assert operator_norm(commutator(g, l_tot)) < 1e-12
        for j in range(i, len(gens)):
            ip = np.trace(g.entries.conj().T @ gens[j].entries)
            assert ip == pytest.approx(1.0 if i == j else 0.0, abs=1e-12)


def test_conserving_unitary_matches_dense_exponential():
    basis = commutant_basis(_xx_law())
    rng = np.random.default_rng(5)
    coeffs = rng.standard_normal(basis.generator_count)
    u = conserving_unitary(basis, coeffs)
    dense = sum(
        (c * g.entries for c, g in zip(coeffs, basis.generators)),
        np.zeros((4, 4), dtype=complex),
    )
    expected = expm_skew(Operator(dense, hermitian=True))
    np.testing.assert_allclose(u.entries, expected.entries, atol=1e-12)
    assert u.is_unitary()


def test_conserving_unitary_conserves():
    law = _xxx_law()
    basis = commutant_basis(law)
    rng = np.random.default_rng(9)
    for _ in range(5):
        u = conserving_unitary(basis, rng.standard_normal(basis.generator_count))
        assert conservation_residual(u, law) < 1e-10


def test_conserving_unitary_rejects_bad_length():
    basis = commutant_basis(_xx_law())
    with pytest.raises(ValueError):
        conserving_unitary(basis, np.zeros(basis.generator_count + 1))


def test_project_coefficients_roundtrip():
    basis = commutant_basis(_xx_law())
    rng = np.random.default_rng(2)
    coeffs = rng.standard_normal(basis.generator_count)
    dense = sum(
        (c * g.entries for c, g in zip(coeffs, basis.generators)),
        np.zeros((4, 4), dtype=complex),
    )
    out, residual = basis.project_coefficients(Operator(dense, hermitian=True))
    np.testing.assert_allclose(out, coeffs, atol=1e-12)
    assert residual == pytest.approx(0.0, abs=1e-10)


def test_project_coefficients_pythagoras():
    # in-block mass plus the reported residual^2 must recover the full
    # Frobenius mass of any Hermitian input
    basis = commutant_basis(_xx_law())
    rng = np.random.default_rng(8)
    m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    h = Operator((m + m.conj().T) / 2, hermitian=True)
    coeffs, residual = basis.project_coefficients(h)
    frob_sq = np.linalg.norm(h.entries, "fro") ** 2
    assert np.sum(coeffs**2) + residual**2 == pytest.approx(frob_sq, rel=1e-12)


def test_project_detects_nonconserving_direction():
    # Z (x) I does not commute with X1+X2, so it must leave a residual
    basis = commutant_basis(_xx_law())
    h = Operator(np.kron(Z.entries, np.eye(2)), hermitian=True)
    _, residual = basis.project_coefficients(h)
    assert residual > 0.5


def test_coefficient_blocks_reassemble_generator_sum():
    basis = commutant_basis(_xxx_law())
    rng = np.random.default_rng(4)
    coeffs = rng.standard_normal(basis.generator_count)
    dense = sum(
        (c * g.entries for c, g in zip(coeffs, basis.generators)),
        np.zeros((8, 8), dtype=complex),
    )
    # blocks live in the eigenbasis, ordered like the block slices
    eb = basis.eigenbasis
    rotated = eb.conj().T @ dense @ eb
    offset = 0
    for block, d in zip(basis.coefficient_blocks(coeffs), basis.block_dims):
        np.testing.assert_allclose(
            block, rotated[offset : offset + d, offset : offset + d], atol=1e-12
        )
        offset += d


def test_sample_conserving_unitary_deterministic():
    basis = commutant_basis(_xx_law())
    u1, c1 = sample_conserving_unitary(basis, seed=42)
    u2, c2 = sample_conserving_unitary(basis, seed=42)
    np.testing.assert_array_equal(u1.entries, u2.entries)
    np.testing.assert_array_equal(c1, c2)
    u3, _ = sample_conserving_unitary(basis, seed=43)
    assert not np.allclose(u1.entries, u3.entries)


def test_sample_strength_scales_coefficients():
    basis = commutant_basis(_xx_law())
    _, c1 = sample_conserving_unitary(basis, seed=7, strength=1.0)
    _, c2 = sample_conserving_unitary(basis, seed=7, strength=0.5)
    np.testing.assert_allclose(c2, 0.5 * c1, atol=1e-15)


def test_commutant_spans_trivial_law():
    # L = 0 conserves everything: the commutant is the full Hermitian
    # space and any Hermitian projects with zero residual
    spec = HilbertSpec((2, 2))
    law = ConservationLaw(spec, zero(2), zero(2))
    basis = commutant_basis(law)
    assert basis.generator_count == 16
    rng = np.random.default_rng(1)
    m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    h = Operator((m + m.conj().T) / 2, hermitian=True)
    _, residual = basis.project_coefficients(h)
    assert residual == pytest.approx(0.0, abs=1e-10)
