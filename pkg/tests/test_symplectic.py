import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symprank import bounds as bd
from symprank import fock as fk
from symprank import gaussian as gs
from symprank import symplectic as sp
from symprank.errors import ValidationError


def test_omega_single_mode():
    np.testing.assert_array_equal(sp.omega(1), [[0, 1], [-1, 0]])


def test_omega_two_blocks():
    W = sp.omega(2)
    np.testing.assert_array_equal(W[:2, :2], sp.omega(1))
    np.testing.assert_array_equal(W[2:, 2:], sp.omega(1))
    assert not W[:2, 2:].any() and not W[2:, :2].any()


def test_omega_squares_to_minus_identity():
    np.testing.assert_array_equal(sp.omega(3) @ sp.omega(3), -np.eye(6))


def test_eigenvalues_vacuum():
    np.testing.assert_allclose(sp.symplectic_eigenvalues(np.eye(4)), [1, 1])


def test_eigenvalues_fock1_from_oracle():
    V = fk.moments(fk.fock([1])).V
    np.testing.assert_allclose(V, 3 * np.eye(2), atol=1e-12)
    np.testing.assert_allclose(sp.symplectic_eigenvalues(V), [3.0])


def test_eigenvalues_two_mode_squeezed_vacuum():
    r = 0.7
    c, s = np.cosh(2 * r), np.sinh(2 * r)
    Z = np.diag([1.0, -1.0])
    V = np.block([[c * np.eye(2), s * Z], [s * Z, c * np.eye(2)]])
    np.testing.assert_allclose(sp.symplectic_eigenvalues(V), [1, 1], atol=1e-12)


def test_eigenvalues_positive_definite_below_one():
    # V > 0 but violating the uncertainty principle is accepted; d < 1 is reported
    np.testing.assert_allclose(sp.symplectic_eigenvalues(np.diag([0.5, 0.5])), [0.5])


def test_eigenvalues_reject_invalid():
    with pytest.raises(ValidationError):
        sp.symplectic_eigenvalues(np.diag([1.0, -1.0]))
    with pytest.raises(ValidationError):
        sp.symplectic_eigenvalues(np.array([[1.0, 0.3], [0.0, 1.0]]))


def test_williamson_vacuum():
    w = sp.williamson(np.eye(6))
    np.testing.assert_allclose(w.S, np.eye(6), atol=1e-12)
    np.testing.assert_allclose(w.d, np.ones(3))


def test_williamson_squeezed_vacuum():
    z = 1.8
    w = sp.williamson(np.diag([z ** 2, z ** -2]))
    np.testing.assert_allclose(w.d, [1.0])
    np.testing.assert_allclose(w.S, np.diag([z, 1 / z]), atol=1e-12)


def test_williamson_recovers_constructed_spectrum(rng):
    for n in range(1, 6):
        S0 = sp.random_symplectic(n, rng, 0.8)
        d0 = np.sort(1 + rng.uniform(0, 3, n))[::-1]
        V = S0 @ np.diag(np.repeat(d0, 2)) @ S0.T
        w = sp.williamson(V)
        np.testing.assert_allclose(w.d, d0, atol=1e-9)
        assert sp.symplectic_defect(w.S) < 1e-9
        np.testing.assert_allclose(w.reconstruct(), V, atol=1e-9)


def test_williamson_degenerate_spectrum(rng):
    S0 = sp.random_symplectic(3, rng, 0.5)
    V = S0 @ np.diag(np.repeat([2.0, 2.0, 1.0], 2)) @ S0.T
    w = sp.williamson(V)
    np.testing.assert_allclose(w.d, [2, 2, 1], atol=1e-9)
    np.testing.assert_allclose(w.reconstruct(), V, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 5), seed=st.integers(0, 2 ** 32 - 1))
def test_williamson_round_trip_property(n, seed):
    r = np.random.default_rng(seed)
    V = sp.random_covariance(n, r, max_squeeze=1.0)
    w = sp.williamson(V)
    assert np.all(w.d >= 1 - 1e-9)
    assert np.all(np.diff(w.d) <= 1e-12)
    np.testing.assert_allclose(w.reconstruct(), V, atol=1e-8 * np.max(np.abs(V)))
    assert sp.symplectic_defect(w.S) < 1e-8


def test_euler_identity():
    e = sp.euler(np.eye(4))
    np.testing.assert_allclose(e.z, [1, 1])
    np.testing.assert_allclose(e.reconstruct(), np.eye(4), atol=1e-12)
    assert sp.is_orthosymplectic(e.O1) and sp.is_orthosymplectic(e.O2)


def test_euler_single_squeezer():
    e = sp.euler(np.diag([2.5, 0.4]))
    np.testing.assert_allclose(e.z, [2.5])
    np.testing.assert_allclose(e.reconstruct(), np.diag([2.5, 0.4]), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 5), seed=st.integers(0, 2 ** 32 - 1))
def test_euler_reconstruction_property(n, seed):
    S = sp.random_symplectic(n, np.random.default_rng(seed), 1.2)
    e = sp.euler(S)
    assert np.max(np.abs(e.reconstruct() - S)) < 1e-9
    assert np.all(e.z >= 1 - 1e-12)
    assert sp.is_orthosymplectic(e.O1, 1e-9) and sp.is_orthosymplectic(e.O2, 1e-9)


def test_orthosymp_identity():
    np.testing.assert_allclose(sp.orthosymp_to_unitary(np.eye(4)), np.eye(2), atol=1e-12)


def test_phase_rotation_matches_fock_action():
    theta = 0.7
    U = np.array([[np.exp(1j * theta)]])
    O = sp.unitary_to_orthosymp(U)
    np.testing.assert_allclose(sp.orthosymp_to_unitary(O), U, atol=1e-12)
    beta = 0.6 - 0.2j
    # G_U^dag a G_U = conj(U) a, so G_U |beta> = |conj(U) beta>
    out = fk.apply_gate(fk.coherent(beta, 20), fk.Passive(U, (0,)), leak_budget=1e-10)
    want = fk.coherent(np.conj(U[0, 0]) * beta, 20)
    assert fk.fidelity_pure(out, want) > 1 - 1e-10


def test_beamsplitter_round_trip_and_action():
    U = np.array([[1, 1], [-1, 1]]) / np.sqrt(2)
    O = sp.unitary_to_orthosymp(U)
    Ub = sp.orthosymp_to_unitary(O)
    np.testing.assert_allclose(np.abs(Ub), np.full((2, 2), 1 / np.sqrt(2)), atol=1e-12)
    beta = np.array([0.5, -0.3j])
    out = fk.apply_gate(fk.coherent(beta, 16), fk.Passive(Ub, (0, 1)), leak_budget=1e-10)
    assert fk.fidelity_pure(out, fk.coherent(Ub.conj() @ beta, 16)) > 1 - 1e-10


def test_orthosymp_rejects_squeezer():
    with pytest.raises(ValidationError):
        sp.orthosymp_to_unitary(np.diag([2.0, 0.5]))


def test_condition_number_anchors():
    assert sp.condition_number(np.eye(2)) == pytest.approx(1.0)
    assert sp.condition_number(np.diag([4.0, 0.25])) == pytest.approx(16.0)


def test_condition_number_energy_bound(rng):
    for _ in range(20):
        s = fk.random_state(2, 6, rng, 4)
        V = fk.moments(s).V
        assert sp.condition_number(V) <= bd.condition_number_bound(fk.energy_moments(s)["energy2"])


def test_symplectic_inverse(rng):
    S = sp.random_symplectic(3, rng)
    np.testing.assert_allclose(sp.symplectic_inverse(S) @ S, np.eye(6), atol=1e-10)


def test_check_symplectic_rejects():
    with pytest.raises(ValidationError):
        sp.check_symplectic(np.diag([2.0, 2.0]))
    with pytest.raises(ValidationError):
        gs.GaussianUnitaryDesc(np.eye(3), np.zeros(3))
