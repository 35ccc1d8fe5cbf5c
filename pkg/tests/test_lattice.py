import numpy as np
import pytest
from pydantic import ValidationError

from fput.errors import ConfigurationError
from fput.lattice import (
    ChainState, LatticeParams, acceleration, fundamental_period, hamiltonian_physical, total_momentum,
)


@pytest.fixture
def params():
    """Unit chain with cubic springs"""
    return LatticeParams(N=16, kappa=1.0, m=1.0, beta=0.8)


def random_state(N, seed=0, scale=0.3):
    rng = np.random.default_rng(seed)
    return ChainState(q=scale * rng.standard_normal(N), p=scale * rng.standard_normal(N))


def test_lattice_params_validation():
    """Test chain size and positivity constraints"""
    with pytest.raises(ValidationError):
        LatticeParams(N=3)
    with pytest.raises(ValidationError):
        LatticeParams(N=8, m=0.0)
    with pytest.raises(ValidationError):
        LatticeParams(N=8, kappa=-1.0)


def test_beta_n_is_derived():
    """Test βN exposure and construction from βN"""
    params = LatticeParams.from_beta_n(200, 0.5)
    assert params.beta == pytest.approx(0.0025)
    assert params.betaN == pytest.approx(0.5, rel=1e-12)


def test_equilibrium_has_no_acceleration(params):
    """Test the chain at rest stays at rest"""
    assert np.all(acceleration(ChainState.at_rest(params), params) == 0)


def test_uniform_translation_has_no_acceleration(params):
    """Test a rigid shift produces no force"""
    state = ChainState(q=np.full(params.N, 2.5), p=np.zeros(params.N))
    np.testing.assert_allclose(acceleration(state, params), 0.0, atol=1e-15)


def test_harmonic_acceleration_by_hand():
    """Test q=(1,0,-1,0) and the k=2 eigenvector against hand evaluation"""
    params = LatticeParams(N=4)
    state = ChainState(q=np.array([1.0, 0.0, -1.0, 0.0]), p=np.zeros(4))
    np.testing.assert_allclose(acceleration(state, params), [-2.0, 0.0, 2.0, 0.0])

    # k=2 has ω(2)^2 = 4 for N=4
    zigzag = ChainState(q=np.array([1.0, -1.0, 1.0, -1.0]), p=np.zeros(4))
    np.testing.assert_allclose(acceleration(zigzag, params), -4.0 * zigzag.q)


def test_dimension_mismatch(params):
    """Test states of the wrong length are rejected"""
    with pytest.raises(ConfigurationError, match="do not match"):
        acceleration(ChainState(q=np.zeros(5), p=np.zeros(5)), params)


def test_hamiltonian_examples():
    """Test hand-evaluated energies"""
    params = LatticeParams(N=4, kappa=1.0, m=1.0, beta=1.0)
    assert hamiltonian_physical(ChainState.at_rest(params), params) == 0.0

    kinetic = ChainState(q=np.zeros(4), p=np.array([1.0, 0.0, 0.0, 0.0]))
    assert hamiltonian_physical(kinetic, params) == pytest.approx(0.5)

    stretched = ChainState(q=np.array([1.0, 0.0, 0.0, 0.0]), p=np.zeros(4))
    assert hamiltonian_physical(stretched, params) == pytest.approx(1.5)


@pytest.mark.parametrize("seed", range(5))
def test_acceleration_is_energy_gradient(params, seed):
    """Test m·q̈ = -∂H/∂q by central differences"""
    state = random_state(params.N, seed)
    accel = acceleration(state, params)
    eps = 1e-5
    for j in range(params.N):
        shift = np.zeros(params.N)
        shift[j] = eps
        plus = hamiltonian_physical(ChainState(q=state.q + shift, p=state.p), params)
        minus = hamiltonian_physical(ChainState(q=state.q - shift, p=state.p), params)
        assert abs((plus - minus) / (2 * eps) + params.m * accel[j]) <= 1e-6


def test_internal_forces_sum_to_zero(params):
    """Test momentum conservation of the spring forces"""
    accel = acceleration(random_state(params.N, 3, scale=1.0), params)
    assert abs(np.sum(accel)) <= 1e-12 * params.N * np.max(np.abs(accel))
    assert total_momentum(ChainState(q=np.zeros(3), p=np.array([1.0, -2.0, 0.5]))) == pytest.approx(-0.5)


def test_fundamental_period_close_to_n():
    """Test T_f = 2π/ω(1) ≈ N for κ = m = 1"""
    for N in (200, 500, 1000):
        assert fundamental_period(LatticeParams(N=N)) == pytest.approx(N, rel=1e-4)
