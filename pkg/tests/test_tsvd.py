import numpy as np
import pytest

from seqstop import (
    DesignMatrix,
    OracleUnavailableError,
    RankExhaustedError,
    TruncatedSvd,
    datagen,
)
from seqstop.rng import make_rng


def diag_problem(lam, response, **kwargs):
    return TruncatedSvd(DesignMatrix.from_diagonal(np.asarray(lam, dtype=float)),
                        np.asarray(response, dtype=float), **kwargs)


def test_iteration_zero_state():
    alg = diag_problem([1.0, 0.5], [2.0, 1.0])
    assert np.all(alg.log.estimates[0] == 0.0)
    assert alg.residuals[0] == pytest.approx(5.0)


def test_hand_example_two_components():
    alg = diag_problem([1.0, 0.7071, 0.5774], [2.0, 1.0, 1.0])
    alg.iterate(2)
    estimate = alg.get_estimate(2)
    assert np.allclose(estimate, [2.0, 1.0 / 0.7071, 0.0], atol=1e-10)


def test_weak_variance_is_delta2_times_m():
    inst = datagen.diagonal_problem(200, "smooth", 0.01, seed=1)
    alg = TruncatedSvd(inst.design, inst.response, inst.true_signal, inst.noise_level)
    alg.iterate(50)
    for m in (0, 1, 17, 50):
        assert alg.weak_variance[m] == 0.01**2 * m


def test_discrepancy_stop_at_zero_for_large_kappa():
    inst = datagen.diagonal_problem(100, "smooth", 0.01, seed=2)
    alg = TruncatedSvd(inst.design, inst.response)
    norm2 = inst.response @ inst.response
    stop = alg.get_discrepancy_stop(norm2 * 1.001, 100)
    assert stop.value == 0 and stop.reached


def test_zero_noise_stops_at_signal_support_rank():
    lam = np.array([1.0, 0.5, 0.25])
    signal = np.array([1.0, 1.0, 0.0])
    response = lam * signal
    alg = diag_problem(lam, response)
    stop = alg.get_discrepancy_stop(0.0, 3)
    assert stop.reached and stop.value == 2


def test_balanced_oracle_hand_crossing():
    # weak_bias2 = (4, 0, 0), weak_variance = (0, 1, 2)
    alg = diag_problem([1.0, 1.0], [0.0, 0.0], true_signal=np.array([2.0, 0.0]),
                       true_noise_level=1.0)
    stop = alg.get_weak_balanced_oracle(2)
    assert stop.reached and stop.value == 1


def test_zero_signal_oracle_is_zero():
    alg = diag_problem([1.0, 0.5], [0.3, -0.2], true_signal=np.zeros(2),
                       true_noise_level=0.1)
    assert alg.get_weak_balanced_oracle(2).value == 0
    assert alg.get_strong_balanced_oracle(2).value == 0


def test_oracle_unavailable():
    alg = diag_problem([1.0], [1.0])
    with pytest.raises(OracleUnavailableError):
        alg.get_weak_balanced_oracle(1)
    alg = diag_problem([1.0], [1.0], true_signal=np.ones(1))
    with pytest.raises(OracleUnavailableError):
        alg.get_weak_balanced_oracle(1)
    with pytest.raises(OracleUnavailableError):
        alg.get_aic_two_step(0)


def test_aic_two_step_toy():
    # <Y, v_i>^2 = (9 delta^2, delta^2) with lambda = 1: argmin at 1
    delta = 0.5
    alg = diag_problem([1.0, 1.0], [3.0 * delta, delta])
    alg.iterate(2)
    assert alg.get_aic_two_step(2, noise_level=delta) == 1
    assert alg.get_aic_two_step(0, noise_level=delta) == 0


def test_two_step_never_exceeds_stop():
    inst = datagen.diagonal_problem(2000, "smooth", 0.01, seed=3)
    alg = TruncatedSvd(inst.design, inst.response, inst.true_signal, inst.noise_level)
    stop = alg.get_discrepancy_stop(2000 * 0.01**2, 2000)
    two_step = alg.get_aic_two_step(stop)
    assert 0 <= two_step <= stop.value


def test_monotone_oracle_tracks():
    inst = datagen.diagonal_problem(300, "smooth", 0.05, seed=4)
    alg = TruncatedSvd(inst.design, inst.response, inst.true_signal, inst.noise_level)
    alg.iterate(100)
    assert np.all(np.diff(alg.strong_bias2) <= 0)
    assert np.all(np.diff(alg.weak_bias2) <= 0)
    assert np.all(np.diff(alg.strong_variance) > 0)
    assert np.all(np.diff(alg.weak_variance) > 0)


def test_residual_pythagoras_identity():
    rng = make_rng(6)
    a = rng.standard_normal((6, 6))
    y = rng.standard_normal(6)
    alg = TruncatedSvd(a, y)
    alg.iterate(6)
    coeffs2 = np.array([(t.left @ y) ** 2 for t in alg.triplets])
    for m in range(7):
        assert alg.residuals[m] + coeffs2[:m].sum() == pytest.approx(y @ y, rel=1e-8)


def test_dense_and_diagonal_modes_agree():
    lam = np.array([1.5, 1.0, 0.5, 0.25])
    rng = make_rng(7)
    y = rng.standard_normal(4)
    diag = TruncatedSvd(DesignMatrix.from_diagonal(lam), y)
    dense = TruncatedSvd(np.diag(lam), y)
    diag.iterate(4)
    dense.iterate(4)
    for m in range(5):
        assert np.allclose(diag.get_estimate(m), dense.get_estimate(m), atol=1e-6)


def test_stopped_complexity_counts_triplets():
    rng = make_rng(8)
    a = rng.standard_normal((12, 12))
    f = rng.standard_normal(12)
    y = a @ f + 0.5 * rng.standard_normal(12)
    alg = TruncatedSvd(a, y)
    stop = alg.get_discrepancy_stop(0.25 * 12, 12)
    assert stop.reached
    assert len(alg.triplets) == stop.value


def test_rank_exhaustion_raises():
    alg = diag_problem([1.0, 0.5], [1.0, 1.0])
    with pytest.raises(RankExhaustedError):
        alg.iterate(3)


def test_precomputed_triplets_match_lazy_path():
    from seqstop import top_k_svd

    rng = make_rng(9)
    a = rng.standard_normal((8, 8))
    y = rng.standard_normal(8)
    triplets = top_k_svd(a, 8)
    lazy = TruncatedSvd(a, y)
    cached = TruncatedSvd(a, y, precomputed_triplets=triplets)
    lazy.iterate(6)
    cached.iterate(6)
    assert np.allclose(lazy.get_estimate(6), cached.get_estimate(6), atol=1e-8)
