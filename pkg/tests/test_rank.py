import math

import numpy as np
import pytest

from symprank import fock as fk
from symprank import gaussian as gs
from symprank import rank as rk
from symprank.errors import DomainError, ValidationError


def _compressible(rng, n, core, cutoff):
    G0 = gs.random_gaussian_unitary(n, rng, 0.2, 0.3)
    full = fk.embed_vacuum(core.with_cutoff(cutoff), n - core.n_modes)
    return G0, fk.apply_gaussian(full, G0, leak_budget=1e-6).normalized()


# ---------------------------------------------------------------- exact rank

@pytest.mark.parametrize("k,want", [((0,), 0), ((2,), 1), ((1, 1), 2), ((3, 0, 1), 2)])
def test_rank_anchors(k, want):
    assert rk.symplectic_rank_pure(fk.fock(k)) == want


def test_rank_rejects_mixed():
    with pytest.raises(DomainError):
        rk.symplectic_rank_pure(fk.DensityOp.from_pure(fk.vacuum(1)))


def test_rank_of_gaussian_moments(rng):
    assert rk.symplectic_rank_pure(gs.state_of(gs.random_gaussian_unitary(3, rng))) == 0


# ---------------------------------------------------------------- compression

def test_compress_already_compressed():
    st = fk.fock((1, 0, 0), 6)
    c = rk.compress(st)
    assert c.rank == 1 and c.residual < 1e-9
    assert c.G.is_passive(1e-9)
    assert abs(fk.overlap(c.reconstruct().with_cutoff(6), st)) ** 2 > 1 - 1e-12


def test_compress_round_trip_rank1(rng):
    G0, psi = _compressible(rng, 2, fk.fock((1,)), 14)
    c = rk.compress(psi)
    assert c.rank == 1
    rec = c.reconstruct(leak_budget=1e-6).with_cutoff(14)
    assert abs(fk.overlap(rec, psi)) ** 2 >= 1 - 1e-7


def test_compress_round_trip_rank2_photons(rng):
    G0, psi = _compressible(rng, 3, fk.fock((2, 1)), 16)
    c = rk.compress(psi, leak_budget=1e-8)
    assert c.rank == 2
    assert c.diagnostics["phi_photons"] <= c.diagnostics["psi_photons"] + 1e-9
    # phi has covariance diag(d) and zero mean
    assert c.diagnostics["phi_cov_error"] < 1e-6
    np.testing.assert_allclose(fk.moments(c.phi).m, 0, atol=1e-6)


def test_compress_gaussian_state(rng):
    G = gs.random_gaussian_unitary(2, rng, 0.3, 0.3)
    c = rk.compress(fk.gaussian_state(G, 20).normalized())
    assert c.rank == 0 and c.phi.n_modes == 0
    assert c.residual < 1e-8


def test_compress_requires_normalized():
    with pytest.raises(ValidationError):
        rk.compress(fk.FockState(1, 2, np.array([1.0, 1.0, 0.0])))


# ---------------------------------------------------------------- symplectic fidelity

def test_fidelity_at_rank_is_one(rng):
    G0, psi = _compressible(rng, 2, fk.fock((1,)), 12)
    cfg = rk.OptimizerConfig(restarts=1, core_cutoff=18)
    for k in (1, 2):
        assert rk.symplectic_fidelity(psi, k, cfg).value >= 1 - 1e-6


def test_fidelity_vacuum():
    assert rk.symplectic_fidelity(fk.vacuum(1, 4), 0).value == pytest.approx(1.0)


def test_f0_fock1_matches_grid():
    res = rk.symplectic_fidelity(fk.fock((1,), 30), 0, rk.OptimizerConfig(restarts=3))
    assert res.value == pytest.approx(rk.f0_single_mode_fock1_grid(), abs=1e-4)
    # closed form of the same supremum
    assert res.value == pytest.approx(3 * math.sqrt(3) / (4 * math.e), abs=1e-6)
    assert res.value <= 1


def test_fidelity_is_reproducible():
    cfg = rk.OptimizerConfig(restarts=2, seed=7, maxfev=400)
    st = fk.fock((1,), 12)
    with pytest.warns(RuntimeWarning):
        a = rk.symplectic_fidelity(st, 0, cfg)
    with pytest.warns(RuntimeWarning):
        b = rk.symplectic_fidelity(st, 0, cfg)
    assert a.value == b.value and a.restart_values == b.restart_values


def test_fidelity_k_range():
    with pytest.raises(ValidationError):
        rk.symplectic_fidelity(fk.vacuum(1), 2)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_fidelity_curve_monotone():
    curve = rk.fidelity_curve(fk.fock((1, 1), 6), rk.OptimizerConfig(restarts=1, maxfev=300))
    vals = [r.value for r in curve]
    assert vals == sorted(vals) and vals[-1] == 1.0


# ---------------------------------------------------------------- approximate rank and witness

@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_approx_rank_exact_limit():
    assert rk.approx_symplectic_rank(fk.fock((1, 1), 4), 1e-9,
                                     rk.OptimizerConfig(restarts=1, maxfev=200)) == 2


def test_approx_rank_small_perturbation_of_vacuum():
    eps = 0.05
    n = math.ceil(1 / eps)
    st = fk.FockState.from_dict(1, n, {(0,): math.sqrt(1 - eps ** 2), (n,): eps})
    assert rk.symplectic_rank_pure(st) == 1
    assert rk.approx_symplectic_rank(st, 0.01, rk.OptimizerConfig(restarts=2)) == 0


def test_witness_anchors():
    assert rk.eigenvalue_witness(fk.vacuum(2), 0.1) == 0
    assert rk.eigenvalue_witness(fk.fock((1,)), 0.1) == 1


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_witness_bounds_approx_rank(rng):
    cfg = rk.OptimizerConfig(restarts=1, maxfev=300)
    for _ in range(20):
        base = fk.tensor(fk.random_state(1, 3, rng), fk.vacuum(1, 3), cutoff=12)
        st = fk.apply_gaussian(base, gs.random_gaussian_unitary(2, rng, 0.15, 0.15),
                               leak_budget=1e-6).normalized()
        eps = float(rng.uniform(0.01, 0.3))
        t = rk.eigenvalue_witness(st, eps)
        assert rk.approx_symplectic_rank(st, eps, cfg) <= t


# ---------------------------------------------------------------- monotonicity

def test_gaussian_unitary_keeps_rank(rng):
    _, psi = _compressible(rng, 2, fk.fock((1,)), 16)
    assert rk.symplectic_rank_pure(psi) == 1


def test_heterodyne_does_not_increase_rank(rng):
    _, psi = _compressible(rng, 2, fk.fock((1,)), 20)
    for _ in range(50):
        alpha = complex(rng.normal(), rng.normal())
        post, dens = fk.heterodyne_project(psi, [alpha], [1])
        assert rk.symplectic_rank_pure(post) <= 1


def test_tensor_with_squeezed_vacuum_keeps_rank():
    sq = fk.gaussian_state(gs.GaussianUnitaryDesc.squeezing([0.4]), 20)
    st = fk.tensor(fk.fock((1,), 20), sq, cutoff=20)
    assert rk.symplectic_rank_pure(st.normalized()) == 1


def test_monotonicity_suite_clean():
    rep = rk.monotonicity_suite(fk.fock((1, 1), 24), seed=3, n_steps=3, leak_budget=1e-8)
    assert rep.ok and rep.steps


# ---------------------------------------------------------------- conversion

def test_conversion_two_to_one_one():
    c = rk.conversion_bounds((2,), (1, 1))
    assert (c.distill_upper, c.cost_lower, c.verdict) == (0.5, 1.0, "irreversible")


@pytest.mark.parametrize("n", range(2, 7))
def test_conversion_fock_to_ones(n):
    assert rk.conversion_bounds((n,), (1,) * n).distill_upper == pytest.approx(1 / n)


def test_conversion_identity():
    c = rk.conversion_bounds((1,), (1,))
    assert c.distill_upper == 1 and c.cost_lower == 1
    assert c.verdict != "irreversible"


def test_conversion_gaussian_output():
    assert rk.conversion_bounds((1,), (0,)).distill_upper == math.inf
