import math

import numpy as np
import pytest

from fput.errors import ConfigurationError, NonResonanceError
from fput.experiment import init_thermal
from fput.lattice import LatticeParams
from fput.normalform import (
    Branch, QuartetKey, RandomField, apply_transform, branch_terms, coefficient_A, denominator_identity_check,
    deviation, monte_carlo_M, normal_form_correction, sample_cubic_sums, scan_bound, scan_bound_many,
    tail_fraction, validity_ratio, wick_M, wick_second_moment,
)


@pytest.fixture
def params16():
    return LatticeParams(N=16)


def test_quartet_key_validation():
    """Test keys off the delta manifold or out of range are rejected"""
    with pytest.raises(ConfigurationError, match="delta condition"):
        QuartetKey(16, 5, 1, 1, 1, Branch.B1)
    with pytest.raises(ConfigurationError, match="outside"):
        QuartetKey(16, 0, 1, 1, 14, Branch.B1)
    key = QuartetKey(16, 1, 5, 6, 6, "B1")
    assert key.branch is Branch.B1
    assert key.exact_sum == -16
    assert key.winding == -1


def test_coefficient_examples():
    """Test hand-evaluated A on the B1 and B3 branches for N=6"""
    params = LatticeParams(N=6)
    assert coefficient_A(QuartetKey(6, 3, 1, 1, 1, Branch.B1), params) == pytest.approx(-0.75 * math.sqrt(2.0))
    assert coefficient_A(QuartetKey(6, 3, 1, 1, 1, Branch.B3), params) == pytest.approx(0.75 * math.sqrt(2.0) / 5)
    assert coefficient_A(QuartetKey(6, 3, 1, 1, 1, Branch.B3), params) == pytest.approx(0.21213, abs=1e-5)


def test_coefficient_rejects_mismatched_n(params16):
    """Test a key built for another chain is refused"""
    with pytest.raises(ConfigurationError, match="N=6"):
        coefficient_A(QuartetKey(6, 3, 1, 1, 1, Branch.B1), params16)


def test_denominator_identity_example():
    """Test the sine-product factorization at N=64, (10, 5, 3, 2)"""
    params = LatticeParams(N=64)
    lhs, rhs = denominator_identity_check(QuartetKey(64, 10, 5, 3, 2, Branch.B1), params)
    assert lhs == pytest.approx(rhs, abs=1e-12)


@pytest.mark.parametrize("N", [64, 256])
def test_denominator_identity_random_quartets(N):
    """Test the factorization on random direct B1 quartets"""
    params = LatticeParams(N=N, kappa=2.0, m=0.5)
    rng = np.random.default_rng(N)
    checked = 0
    while checked < 2000:
        k2, k3, k4 = (int(k) for k in rng.integers(1, N, size=3))
        if k2 + k3 + k4 >= N:
            continue
        lhs, rhs = denominator_identity_check(QuartetKey(N, k2 + k3 + k4, k2, k3, k4, Branch.B1), params)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))
        assert lhs < 0
        checked += 1


def test_denominator_identity_precondition():
    """Test wrapped or non-B1 keys are refused by the factorization"""
    params = LatticeParams(N=16)
    with pytest.raises(ConfigurationError, match="exact B1"):
        denominator_identity_check(QuartetKey(16, 5, 5, 1, 15, Branch.B1), params)
    with pytest.raises(ConfigurationError, match="exact B1"):
        denominator_identity_check(QuartetKey(16, 3, 1, 1, 11, Branch.B3), params)


def test_branch_terms_satisfy_delta(params16):
    """Test every enumerated term lies on its branch and k4 is never zero"""
    for branch in Branch:
        terms = branch_terms(16, 5, branch, params16)
        assert len(terms) > 0
        assert np.all(terms.k4 != 0)
        if branch is Branch.B1:
            total = terms.k1 - terms.k2 - terms.k3 - terms.k4
        elif branch is Branch.B2:
            total = terms.k1 - terms.k2 + terms.k3 + terms.k4
        else:
            total = terms.k1 + terms.k2 + terms.k3 + terms.k4
        np.testing.assert_array_equal(total, 16 * terms.winding)


@pytest.mark.parametrize("N", [16, 33, 64])
def test_umklapp_symmetry(N):
    """Test B1 terms with sum 0 at k1 mirror those with sum -2N at N-k1 under k -> N-k"""
    params = LatticeParams(N=N)
    for k1 in range(3, N):
        direct = branch_terms(N, k1, Branch.B1, params)
        mirrored = branch_terms(N, N - k1, Branch.B1, params)
        lookup = {
            (int(a), int(b), int(c)): A
            for a, b, c, w, A in zip(mirrored.k2, mirrored.k3, mirrored.k4, mirrored.winding, mirrored.A)
            if w == -2
        }
        inside = direct.winding == 0
        assert len(lookup) == int(np.sum(inside))
        for a, b, c, A in zip(direct.k2[inside], direct.k3[inside], direct.k4[inside], direct.A[inside]):
            assert lookup[(N - int(a), N - int(b), N - int(c))] == pytest.approx(A, rel=1e-12, abs=1e-14)


def test_scan_bound_non_resonance_audit():
    """Test every denominator stays away from zero for all k1 at N=64"""
    for result in scan_bound_many(64, range(1, 64), threads=4):
        assert result.min_abs_denominator > 1e-14
        assert all(np.isfinite(result.sums))


def test_scan_bound_grows_with_n():
    """Test the coefficient sum increases from N=64 to N=128 at k1 = N/2"""
    assert scan_bound(128, 64).total > scan_bound(64, 32).total


def test_scan_bound_b3_is_order_n_squared():
    """Test Σ|A3|^2 ≤ 10 N^2"""
    for N in (64, 128, 256):
        result = scan_bound(N, N // 2)
        assert result.sums[2] <= 10 * N ** 2


def test_scan_bound_windings_partition_the_sums():
    """Test per-winding contributions add back up to each branch sum"""
    result = scan_bound(32, 7)
    for index, branch in enumerate(Branch):
        parts = sum(v for (b, _), v in result.by_winding.items() if b == branch.value)
        assert parts == pytest.approx(result.sums[index], rel=1e-12)
    assert result.normalized == pytest.approx(result.total / (32 ** 2 * math.log(32)))


def test_scan_bound_arguments():
    """Test out-of-range N and k1 are refused"""
    with pytest.raises(ConfigurationError):
        scan_bound(3, 1)
    with pytest.raises(ConfigurationError):
        scan_bound(16, 16)


def test_scan_bound_many_keeps_order():
    """Test threaded scans come back in input order with sequential values"""
    results = scan_bound_many(32, [9, 2, 17], threads=3)
    assert [r.k1 for r in results] == [9, 2, 17]
    assert results[0].total == scan_bound(32, 9).total


def test_random_field_validation():
    """Test φ must be finite and non-negative"""
    with pytest.raises(ConfigurationError):
        RandomField(phi=np.array([1.0, -0.5, 1.0]))
    with pytest.raises(ConfigurationError):
        RandomField(phi=np.array([1.0, np.nan, 1.0]))


def test_random_field_draw_statistics(params16):
    """Test E|b_k|^2 = φ_k for both η distributions"""
    rng = np.random.default_rng(0)
    for eta in ("complex-gaussian", "uniform-circle"):
        field = RandomField.inverse_frequency(params16, eta_dist=eta)
        b = field.draw(20000, rng)
        np.testing.assert_allclose(np.mean(np.abs(b) ** 2, axis=0), field.phi, rtol=0.05)


def test_wick_single_mode(params16):
    """Test a single populated mode κ only reaches k1 = 3κ"""
    phi = np.zeros(15)
    phi[2] = 1.0
    field = RandomField(phi=phi)
    A = coefficient_A(QuartetKey(16, 9, 3, 3, 3, Branch.B1), params16)
    assert wick_M(9, field, params16) == pytest.approx(A ** 2)
    assert wick_M(8, field, params16) == 0.0


def test_wick_phi_cancellation(params16):
    """Test constant φ = c gives c^3 times the B1 coefficient sum"""
    field = RandomField.constant(16, 2.0)
    assert wick_M(8, field, params16) == pytest.approx(8.0 * scan_bound(16, 8).sums[0], rel=1e-12)


def test_gaussian_second_moment_counts_every_pairing(params16):
    """Test E|Σ|^2 = 3! M for complex Gaussian η"""
    field = RandomField.inverse_frequency(params16)
    for k1 in (1, 5, 8, 13):
        assert wick_second_moment(k1, field, params16) == pytest.approx(6.0 * wick_M(k1, field, params16), rel=1e-12)


def test_monte_carlo_zero_field(params16):
    """Test φ ≡ 0 yields an exactly vanishing estimate"""
    assert monte_carlo_M(8, RandomField.constant(16, 0.0), 200, params16) == (0.0, 0.0)


@pytest.mark.parametrize("phi_kind", ["ones", "inverse-omega"])
@pytest.mark.parametrize("eta", ["complex-gaussian", "uniform-circle"])
def test_monte_carlo_agrees_with_exact_moment(params16, phi_kind, eta):
    """Test 10^4 samples land within 3 standard errors of the exact second moment"""
    if phi_kind == "ones":
        field = RandomField.constant(16, 1.0, eta_dist=eta, seed=11)
    else:
        field = RandomField.inverse_frequency(params16, eta_dist=eta, seed=11)
    exact = wick_second_moment(8, field, params16)
    mean, stderr = monte_carlo_M(8, field, 10_000, params16)
    assert abs(mean - exact) <= 3 * stderr


def test_tail_fraction(params16):
    """Test few realizations exceed three times the typical size"""
    field = RandomField.constant(16, 1.0, seed=3)
    sums = sample_cubic_sums(8, field, 5000, params16)
    assert tail_fraction(sums, wick_second_moment(8, field, params16)) <= 0.05
    assert tail_fraction(sums, 0.0) == 0.0


@pytest.mark.parametrize("eta", ["complex-gaussian", "uniform-circle"])
def test_monte_carlo_blocks_do_not_depend_on_length(params16, eta):
    """Test the first samples are the same however many are requested"""
    field = RandomField.constant(16, 1.0, eta_dist=eta, seed=5)
    short = sample_cubic_sums(8, field, 300, params16)
    long = sample_cubic_sums(8, field, 512, params16)
    np.testing.assert_array_equal(short, long[:300])


def test_monte_carlo_limits(params16):
    """Test sample-count and chain-size limits"""
    with pytest.raises(ConfigurationError, match="at least 100"):
        monte_carlo_M(8, RandomField.constant(16), 50, params16)
    big = LatticeParams(N=128)
    with pytest.raises(ConfigurationError, match="limited"):
        sample_cubic_sums(8, RandomField.constant(128), 100, big)


def test_transform_identity_at_zero_beta():
    """Test β = 0 leaves the field unchanged"""
    params = LatticeParams(N=32)
    b = init_thermal(32, params, seed=1)
    np.testing.assert_array_equal(apply_transform(b, params).a, b.a)


def test_transform_is_linear_in_beta():
    """Test a - b scales exactly with β"""
    params = LatticeParams(N=32)
    b = init_thermal(32, params, seed=2)
    small = apply_transform(b, params.with_beta(0.01)).a - b.a
    large = apply_transform(b, params.with_beta(0.02)).a - b.a
    np.testing.assert_allclose(large, 2.0 * small, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(small, 0.01 / 3.0 * normal_form_correction(b, params), rtol=1e-9, atol=1e-12)


def test_deviation_grows_with_beta():
    """Test d is monotone in βN for a fixed field"""
    params = LatticeParams(N=32)
    b = init_thermal(32, params, seed=3)
    values = [deviation(apply_transform(b, params.with_beta(betaN / 32)), b)[0] for betaN in (0.01, 0.1, 1.0)]
    assert values == sorted(values)
    assert values[0] > 0


def test_near_identity_regime():
    """Test N=64, βN=0.01 thermal fields stay within d < 0.05"""
    params = LatticeParams.from_beta_n(64, 0.01)
    below = [deviation(apply_transform(b, params), b)[0] < 0.05
             for b in (init_thermal(64, params, seed) for seed in range(20))]
    assert sum(below) >= 19


def test_transform_size_limit():
    """Test the reference transform refuses large chains"""
    params = LatticeParams(N=256, beta=0.01)
    with pytest.raises(ConfigurationError, match="limited"):
        apply_transform(init_thermal(256, params, seed=0), params)


def test_validity_ratio(params16):
    """Test the validity ratio scales with β and is infinite for an empty mode"""
    field = RandomField.inverse_frequency(params16)
    small = validity_ratio(8, field, params16.with_beta(0.01))
    assert validity_ratio(8, field, params16.with_beta(0.02)) == pytest.approx(2 * small)
    phi = np.ones(15)
    phi[7] = 0.0
    assert validity_ratio(8, RandomField(phi=phi), params16.with_beta(0.01)) == math.inf


def test_non_resonance_error_details():
    """Test the violation carries the offending quartet"""
    error = NonResonanceError((5, 1, 2, 2), "B1", 1e-16)
    assert error.quartet == (5, 1, 2, 2)
    assert "B1" in str(error)
