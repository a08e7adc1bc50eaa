import warnings

import numpy as np
import pytest

from seqstop import DesignMatrix, Landweber, OracleUnavailableError, datagen
from seqstop.rng import make_rng


def test_first_iterate_is_omega_aty():
    rng = make_rng(1)
    a = rng.standard_normal((5, 4))
    y = rng.standard_normal(5)
    omega = 0.01
    alg = Landweber(a, y, learning_rate=omega)
    alg.iterate(1)
    assert np.allclose(alg.get_estimate(1), omega * a.T @ y, atol=1e-12)


def test_unit_diagonal_solves_in_one_step():
    design = DesignMatrix.from_diagonal(np.ones(3))
    y = np.array([1.0, -2.0, 0.5])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        alg = Landweber(design, y, learning_rate=1.0, true_signal=y, true_noise_level=0.0)
    alg.iterate(1)
    assert np.allclose(alg.get_estimate(1), y, atol=1e-12)
    assert alg.strong_bias2[1] == pytest.approx(0.0, abs=1e-20)


def test_dense_closed_form_after_three_steps():
    rng = make_rng(2)
    a = rng.standard_normal((2, 2))
    y = rng.standard_normal(2)
    gram = a.T @ a
    omega = 0.5 / np.linalg.eigvalsh(gram).max()
    alg = Landweber(a, y, learning_rate=omega)
    alg.iterate(3)
    contraction = np.eye(2) - omega * gram
    closed = (np.eye(2) - np.linalg.matrix_power(contraction, 3)) @ np.linalg.solve(gram, a.T @ y)
    assert np.allclose(alg.get_estimate(3), closed, atol=1e-10)


def test_discrepancy_stop_zero_for_large_kappa():
    rng = make_rng(3)
    a = rng.standard_normal((6, 6))
    y = rng.standard_normal(6)
    alg = Landweber(a, y)
    stop = alg.get_discrepancy_stop(float(y @ y) + 1.0, 100)
    assert stop.value == 0 and stop.reached


def test_hand_crossing_by_geometric_series():
    lam = np.array([1.0, 0.5])
    signal = np.array([0.0, 1.0])
    delta = 0.3
    design = DesignMatrix.from_diagonal(lam)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        alg = Landweber(design, lam * signal, learning_rate=1.0,
                        true_signal=signal, true_noise_level=delta)
    # hand formulas: q = 1 - lam^2 = (0, 0.75)
    # weak_bias2[m]  = 0.25 * 0.75^(2m)
    # weak_var[m]    = delta^2 ((m>0) + (1 - 0.75^m)^2)
    expect = None
    for m in range(200):
        bias = 0.25 * 0.75 ** (2 * m)
        var = delta**2 * ((1.0 if m > 0 else 0.0) + (1.0 - 0.75**m) ** 2)
        if bias <= var:
            expect = m
            break
    stop = alg.get_weak_balanced_oracle(200)
    assert stop.reached and stop.value == expect


def test_zero_signal_oracles_are_zero():
    design = DesignMatrix.from_diagonal(np.array([1.0, 0.5]))
    alg = Landweber(design, np.array([0.1, -0.1]), learning_rate=0.5,
                    true_signal=np.zeros(2), true_noise_level=0.1)
    assert alg.get_weak_balanced_oracle(10).value == 0
    assert alg.get_strong_balanced_oracle(10).value == 0


def test_residual_monotone():
    rng = make_rng(4)
    a = rng.standard_normal((8, 5))
    y = rng.standard_normal(8)
    alg = Landweber(a, y)
    alg.iterate(60)
    assert np.all(np.diff(alg.residuals) <= 1e-12)


def test_diagonal_and_dense_paths_agree():
    lam = np.array([1.0, 0.6, 0.3])
    rng = make_rng(5)
    signal = rng.standard_normal(3)
    y = lam * signal + 0.05 * rng.standard_normal(3)
    kwargs = dict(learning_rate=0.9, true_signal=signal, true_noise_level=0.05)
    diag = Landweber(DesignMatrix.from_diagonal(lam), y, **kwargs)
    dense = Landweber(np.diag(lam), y, **kwargs)
    diag.iterate(40)
    dense.iterate(40)
    assert np.allclose(diag.get_estimate(40), dense.get_estimate(40), atol=1e-8)
    assert np.allclose(diag.strong_bias2, dense.strong_bias2, atol=1e-8)
    assert np.allclose(diag.weak_variance, dense.weak_variance, atol=1e-8)
    assert np.allclose(diag.strong_variance, dense.strong_variance, atol=1e-8)


def test_variance_limits_at_large_iteration():
    rng = make_rng(6)
    a = rng.standard_normal((4, 4))
    delta = 0.2
    signal = rng.standard_normal(4)
    y = a @ signal
    alg = Landweber(a, y, true_signal=signal, true_noise_level=delta)
    alg.iterate(4000)
    gram_inv = np.linalg.inv(a.T @ a)
    assert alg.strong_variance[-1] == pytest.approx(delta**2 * np.trace(gram_inv), rel=1e-3)
    assert alg.weak_variance[-1] == pytest.approx(delta**2 * 4, rel=1e-3)


def test_bias_recursion_equals_direct_power_formula():
    rng = make_rng(7)
    a = rng.standard_normal((5, 3))
    signal = rng.standard_normal(3)
    y = a @ signal
    omega = 0.3 / np.linalg.norm(a, 2) ** 2
    alg = Landweber(a, y, learning_rate=omega, true_signal=signal, true_noise_level=0.1)
    alg.iterate(30)
    contraction = np.eye(3) - omega * (a.T @ a)
    power = np.eye(3)
    for m in range(31):
        direct = power @ signal
        assert alg.strong_bias2[m] == pytest.approx(float(direct @ direct), abs=1e-8)
        power = power @ contraction


def test_learning_rate_validation():
    design = DesignMatrix.from_diagonal(np.array([2.0, 1.0]))  # ||A||^2 = 4
    y = np.array([1.0, 1.0])
    with pytest.raises(ValueError):
        Landweber(design, y, learning_rate=0.3)
    with pytest.warns(UserWarning):
        Landweber(design, y, learning_rate=0.25)
    with pytest.raises(ValueError):
        Landweber(design, y, learning_rate=0.0)
