import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twoway_dmt.channel import (
    ChannelEstimate,
    Duplex,
    alpha_batch,
    complex_normal,
    eigen_profile,
    estimate_batch,
    mmse_estimate,
    mutual_info_lower_bound,
    power_controlled_estimate,
    received_energy,
    sample_fading_pair,
)


def test_tdd_scalar_pair_is_reciprocal():
    pair = sample_fading_pair(1, 1, "TDD", np.random.default_rng(1))
    assert pair.backward[0, 0] == pair.forward[0, 0]


def test_tdd_pair_shapes_and_transpose():
    pair = sample_fading_pair(2, 3, Duplex.TDD, np.random.default_rng(2))
    assert pair.forward.shape == (3, 2)
    assert pair.backward.shape == (2, 3)
    assert np.array_equal(pair.backward, pair.forward.T)


def test_fdd_entry_power_and_independence():
    rng = np.random.default_rng(3)
    fw = np.empty((100_000, 2, 2), complex)
    bw = np.empty((100_000, 2, 2), complex)
    for i in range(fw.shape[0] // 1000):
        block = [sample_fading_pair(2, 2, "FDD", rng) for _ in range(1000)]
        fw[i * 1000:(i + 1) * 1000] = [p.forward for p in block]
        bw[i * 1000:(i + 1) * 1000] = [p.backward for p in block]
    power = np.mean(np.abs(fw) ** 2, axis=0)
    assert np.all(np.abs(power - 1.0) < 0.02)
    corr = np.mean(fw * np.conj(np.swapaxes(bw, 1, 2)), axis=0)
    assert np.all(np.abs(corr) < 0.02)


@pytest.mark.parametrize("m,n", [(0, 1), (1, 0), (-1, 2)])
def test_bad_dimensions_rejected(m, n):
    with pytest.raises(ValueError):
        sample_fading_pair(m, n, "FDD", np.random.default_rng(0))


def test_zero_training_gives_prior_mean():
    est = mmse_estimate(np.array([[1.0 + 0j]]), 0.0, np.random.default_rng(0))
    assert est.estimate[0, 0] == 0
    assert est.per_entry_error_variance == 1.0


def test_noiseless_mmse_shrinkage():
    h = np.array([[0.3 - 1.2j, 2.0 + 0.1j]])
    est = mmse_estimate(h, 100.0)
    assert np.allclose(est.estimate, 100 / 101 * h, rtol=1e-14)


def test_negative_power_rejected():
    with pytest.raises(ValueError):
        mmse_estimate(np.ones((1, 1)), -1.0)
    with pytest.raises(ValueError):
        power_controlled_estimate(np.ones((1, 1)), -1.0)
    with pytest.raises(ValueError):
        received_energy(-1.0, np.ones((1, 1)))


def _siso_draws(P, N, seed):
    rng = np.random.default_rng(seed)
    h = complex_normal(rng, (N, 1, 1))
    y = np.sqrt(P) * h + complex_normal(rng, (N, 1, 1))
    return h[:, 0, 0], y[:, 0, 0]


def test_mmse_orthogonality():
    P = 100.0
    h, y = _siso_draws(P, 100_000, 4)
    hhat = np.sqrt(P) / (1 + P) * y
    prod = (h - hhat) * np.conj(y)
    se = np.std(prod) / math.sqrt(len(prod))
    assert abs(np.mean(prod)) < 3 * se


def test_mmse_error_variance():
    P = 1e4
    rng = np.random.default_rng(5)
    h = complex_normal(rng, (100_000, 1, 1))
    hhat = estimate_batch(h, np.full(100_000, P), rng)
    var = np.mean(np.abs(h - hhat) ** 2)
    assert abs(var - 1 / (1 + P)) < 0.1 / (1 + P)


def test_pc_estimate_zero_power():
    est = power_controlled_estimate(np.array([[1.0 + 0j]]), 0.0)
    assert est.estimate[0, 0] == 0
    assert est.power_controlled


def test_pc_estimate_noiseless_scale():
    est = power_controlled_estimate(np.array([[1.0 + 0j]]), 1e6)
    assert abs(est.estimate[0, 0] - 1e3) / 1e3 < 1e-5


def test_pc_estimate_error_at_noise_floor():
    P = 1e4
    h, y = _siso_draws(P, 100_000, 6)
    g = P / (1 + P) * y
    assert np.mean(np.abs(np.sqrt(P) * h - g) ** 2) <= 1.1


def test_eigen_profile_identity():
    prof = eigen_profile(np.eye(2), 100.0)
    assert np.allclose(prof.eigenvalues, [1, 1])
    assert np.allclose(prof.alpha, [0, 0])


def test_eigen_profile_diagonal():
    prof = eigen_profile(np.diag([1e-2, 1.0]), 1e4)
    assert np.allclose(prof.eigenvalues, [1e-4, 1])
    assert np.allclose(prof.alpha, [1, 0])


def test_eigen_profile_rejects_low_snr():
    with pytest.raises(ValueError):
        eigen_profile(np.eye(2), 1.0)


def _matrix(seed, a, b):
    return complex_normal(np.random.default_rng(seed), (a, b))


@given(st.integers(0, 10_000), st.integers(1, 4), st.integers(1, 4))
@settings(max_examples=60, deadline=None)
def test_eigen_trace_identity(seed, a, b):
    M = _matrix(seed, a, b)
    prof = eigen_profile(M, 1e3)
    assert len(prof.alpha) == min(a, b)
    fro = np.sum(np.abs(M) ** 2)
    assert abs(prof.eigenvalues.sum() - fro) <= 1e-9 * fro
    assert np.all(np.diff(prof.alpha) <= 1e-12)
    assert np.all(np.diff(prof.eigenvalues) >= -1e-12)
    assert np.allclose(prof.eigenvalues, 1e3 ** (-prof.alpha))


@given(st.integers(0, 10_000), st.integers(1, 3))
@settings(max_examples=40, deadline=None)
def test_alpha_unitary_invariance(seed, a):
    M = _matrix(seed, a, a)
    Q, _ = np.linalg.qr(_matrix(seed + 1, a, a))
    left = eigen_profile(M, 1e3).alpha
    right = eigen_profile(Q @ M, 1e3).alpha
    assert np.allclose(left, right, atol=1e-8)


def test_mi_perfect_siso():
    est = ChannelEstimate(np.array([[1.0 + 0j]]), 100.0, 0.0)
    assert math.isclose(mutual_info_lower_bound(est, 100.0, 100.0), math.log2(101))


def test_mi_perfect_identity_2x2():
    est = ChannelEstimate(np.eye(2, dtype=complex), 200.0, 0.0)
    assert math.isclose(mutual_info_lower_bound(est, 200.0, 100.0), 2 * math.log2(101))


def test_mi_mismatch_never_exceeds_perfect():
    rng = np.random.default_rng(7)
    for _ in range(10_000):
        Pt = 10 ** rng.uniform(0, 4)
        P = 10 ** rng.uniform(0, 4)
        est = mmse_estimate(complex_normal(rng, (1, 1)), Pt, rng)
        perfect = ChannelEstimate(est.estimate, Pt, 0.0)
        assert mutual_info_lower_bound(est, P) <= mutual_info_lower_bound(perfect, P) + 1e-12


@given(st.integers(0, 10_000), st.floats(0, 1e5), st.floats(0, 1e5))
@settings(max_examples=60, deadline=None)
def test_mi_monotone_in_power(seed, p1, p2):
    rng = np.random.default_rng(seed)
    est = mmse_estimate(complex_normal(rng, (2, 2)), 50.0, rng)
    lo, hi = sorted((p1, p2))
    assert mutual_info_lower_bound(est, lo) <= mutual_info_lower_bound(est, hi) + 1e-12


def test_received_energy_examples():
    assert received_energy(0.0, np.array([[0.7 + 0j]])) == 0.0
    assert received_energy(1e4, np.array([[1.0 + 0j]])) == pytest.approx(1e4)
    S = 1e4
    hf = np.array([[math.sqrt(S ** -1.0) + 0j]])
    e = received_energy(S ** 1.45, hf)
    assert S ** 0.45 / 2 <= e <= 2 * S ** 0.45


def test_received_energy_noise_floor_mean():
    rng = np.random.default_rng(8)
    e = received_energy(0.0, np.zeros((2, 1)), rng, repeats=20_000)
    assert abs(e - 2.0) < 0.05


def test_training_resolvability_siso():
    # train at SNR^p with p = 1; look at draws with alpha < p - 0.2
    fractions = []
    for k, snr in enumerate((1e2, 1e3, 1e4)):
        rng = np.random.default_rng(100 + k)
        h = complex_normal(rng, (400_000, 1, 1))
        a = alpha_batch(h, snr)[:, 0]
        ahat = alpha_batch(estimate_batch(h, np.full(h.shape[0], snr), rng), snr)[:, 0]
        sel = a < 0.8
        fractions.append(np.mean(np.abs(a[sel] - ahat[sel]) > 0.1))
    assert fractions[0] >= fractions[1] >= fractions[2]
    assert fractions[2] < 0.02
