import numpy as np
import pytest
from scipy.integrate import dblquad, quad

from seqstop import InvalidSizeError, RegressionTree, datagen


def test_smooth_signal_first_entry():
    inst = datagen.diagonal_problem(10, "smooth", 0.01, seed=0)
    assert inst.true_signal[0] == pytest.approx(49.9992, abs=1e-3)
    assert inst.true_signal[0] == 5000.0 * abs(np.sin(0.01))


def test_diagonal_problem_zero_noise():
    inst = datagen.diagonal_problem(3, "smooth", 0.0, seed=5)
    lam = inst.design.diagonal
    assert np.array_equal(inst.response, lam * inst.true_signal)
    assert np.all(inst.noise == 0.0)


def test_diagonal_problem_noise_identity():
    inst = datagen.diagonal_problem(50, "smooth", 0.3, seed=9)
    reconstructed = inst.design.matvec(inst.true_signal) + inst.noise
    assert np.array_equal(inst.response, reconstructed)


def test_generators_are_pure_functions_of_seed():
    a = datagen.diagonal_problem(100, "rough", 0.1, seed=42)
    b = datagen.diagonal_problem(100, "rough", 0.1, seed=42)
    assert np.array_equal(a.response, b.response)
    c = datagen.gaussian_design(20, 5, seed=7)
    d = datagen.gaussian_design(20, 5, seed=7)
    assert np.array_equal(c, d)


def _phi(u):
    return np.where(np.abs(u) < 3.0, 1.0 + np.cos(np.pi * u / 3.0), 0.0)


def test_phillips_symmetric():
    design, _ = datagen.phillips(8)
    a = design.to_dense()
    assert np.max(np.abs(a - a.T)) < 1e-12


def test_phillips_invalid_size():
    with pytest.raises(InvalidSizeError):
        datagen.phillips(10)


def test_phillips_signal_support():
    _, signal = datagen.phillips(100)
    h = 12.0 / 100
    centers = -6.0 + h * (np.arange(100) + 0.5)
    outside = np.abs(centers) >= 3.0 + h
    assert np.all(signal[outside] == 0.0)


def test_phillips_matches_quadrature_oracle():
    n = 100
    design, signal = datagen.phillips(n)
    a = design.to_dense()
    h = 12.0 / n
    edges = -6.0 + h * np.arange(n + 1)
    # banded Toeplitz: checking each distinct offset checks every entry
    for offset in range(n // 4 + 2):
        i, j = 0, offset
        want, _ = dblquad(
            lambda t, s: float(_phi(s - t)),
            edges[i], edges[i + 1],
            lambda s: edges[j], lambda s: edges[j + 1],
            epsabs=1e-10, epsrel=1e-10,
        )
        assert a[i, j] == pytest.approx(want / h, abs=1e-6)
    for i in range(0, n, 17):
        want, _ = quad(lambda t: float(_phi(t)), edges[i], edges[i + 1], epsabs=1e-12)
        assert signal[i] == pytest.approx(want / np.sqrt(h), abs=1e-6)


def test_gravity_positive_entries():
    design, _ = datagen.gravity(2)
    assert np.all(design.to_dense() > 0.0)


def test_gravity_condition_number_grows():
    small = datagen.gravity(10)[0].to_dense()
    large = datagen.gravity(100)[0].to_dense()
    assert np.linalg.cond(large) > np.linalg.cond(small)


def test_gravity_matches_direct_formula():
    n, depth = 10, 0.25
    design, signal = datagen.gravity(n, depth)
    a = design.to_dense()
    h = 1.0 / n
    for i in range(n):
        s = (i + 0.5) * h
        for j in range(n):
            t = (j + 0.5) * h
            want = h * depth * (depth**2 + (s - t) ** 2) ** (-1.5)
            assert a[i, j] == pytest.approx(want, abs=1e-14)
        assert signal[i] == pytest.approx(np.sin(np.pi * s) + 0.5 * np.sin(2 * np.pi * s))


def test_gamma_sparse_rescaling():
    assert datagen.gamma_sparse_signal(1, 2.0) == pytest.approx([10.0])
    beta = datagen.gamma_sparse_signal(1000, 3.0)
    assert np.sum(np.abs(beta)) == pytest.approx(10.0, abs=1e-10)


def test_gamma_sparse_harmonic_weights():
    beta = datagen.gamma_sparse_signal(4, 1.0)
    raw = np.array([1.0, 1 / 2, 1 / 3, 1 / 4])
    assert np.allclose(beta, 10.0 * raw / raw.sum())
    assert np.sum(np.abs(beta)) == pytest.approx(10.0)


def test_s_sparse_signal():
    assert np.array_equal(datagen.s_sparse_signal(5, 5, 1.0), np.ones(5))
    with pytest.raises(ValueError):
        datagen.s_sparse_signal(5, 0, 1.0)
    beta = datagen.s_sparse_signal(1000, 15, 10.0 / 15)
    assert np.sum(np.abs(beta)) == pytest.approx(10.0, abs=1e-10)


def test_gaussian_design_column_statistics():
    x = datagen.gaussian_design(1000, 1000, seed=3)
    variances = x.var(axis=0)
    assert variances.min() > 0.85 and variances.max() < 1.15
    y = datagen.gaussian_design(1000, 2, seed=4)
    corr = np.corrcoef(y[:, 0], y[:, 1])[0, 1]
    assert abs(corr) < 0.1


def test_additive_model_shapes():
    for kind in ("smooth", "step", "linear", "hills"):
        inst = datagen.additive_model(kind, 1, 1.0, seed=0)
        assert inst.covariates.shape == (1, 30)
        assert inst.response.shape == (1,)


def test_additive_step_takes_finitely_many_values():
    grid = np.linspace(-2.5, 2.5, 10**4)
    for g in datagen.additive_components("step"):
        assert len(np.unique(g(grid))) <= 3


def test_additive_components_amplitude():
    grid = np.linspace(-2.5, 2.5, 10**4)
    for kind in ("smooth", "linear", "hills"):
        for g in datagen.additive_components(kind):
            assert np.max(np.abs(g(grid))) == pytest.approx(2.0, abs=1e-3)


def test_additive_smooth_noiseless_tree_fit():
    inst = datagen.additive_model("smooth", 300, 0.0, seed=1)
    tree = RegressionTree(inst.covariates, inst.response)
    tree.iterate(30)
    baseline = inst.response.var()
    assert tree.residuals[-1] < 0.05 * baseline
