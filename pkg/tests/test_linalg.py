import numpy as np
import pytest

from seqstop import DesignMatrix, ZeroMatrixError, deflate, jacobi_svd, top_k_svd, top_singular_triplet
from seqstop.rng import make_rng


def test_identity_top_triplet():
    trip = top_singular_triplet(np.eye(2))
    assert trip.sigma == pytest.approx(1.0, abs=1e-10)
    assert np.allclose(np.eye(2) @ trip.right, trip.sigma * trip.left, atol=1e-10)


def test_diagonal_dominant_triplet():
    design = DesignMatrix.from_diagonal([3.0, 1.0])
    trip = top_singular_triplet(design)
    assert trip.sigma == 3.0
    assert np.allclose(trip.right, [1.0, 0.0])
    assert np.allclose(trip.left, [1.0, 0.0])


def test_random_5x5_matches_jacobi_oracle():
    a = make_rng(17).standard_normal((5, 5))
    oracle = jacobi_svd(a)
    trip = top_singular_triplet(a)
    assert trip.sigma == pytest.approx(oracle[0].sigma, abs=1e-8)


def test_triplet_unit_norms_and_consistency():
    a = make_rng(4).standard_normal((6, 4))
    trip = top_singular_triplet(a)
    assert np.linalg.norm(trip.left) == pytest.approx(1.0, abs=1e-10)
    assert np.linalg.norm(trip.right) == pytest.approx(1.0, abs=1e-10)
    assert np.allclose(a @ trip.right, trip.sigma * trip.left, atol=1e-8)


def test_zero_matrix_raises():
    with pytest.raises(ZeroMatrixError):
        top_singular_triplet(np.zeros((3, 3)))


def test_nonconvergence_flag():
    a = make_rng(2).standard_normal((8, 8))
    trip = top_singular_triplet(a, tol=1e-15, max_power_iters=2)
    assert not trip.converged


def test_deflate_diagonal_example():
    design = DesignMatrix.from_diagonal([3.0, 1.0])
    trip = top_singular_triplet(design)
    deflated = deflate(design, trip)
    assert np.allclose(deflated.to_dense(), np.diag([0.0, 1.0]), atol=1e-12)


def test_deflate_rank_one_to_zero():
    u = np.array([1.0, 2.0, 2.0]) / 3.0
    v = np.array([3.0, 4.0]) / 5.0
    a = 2.5 * np.outer(u, v)
    trip = top_singular_triplet(a)
    assert np.max(np.abs(deflate(a, trip).to_dense())) < 1e-10


def test_deflate_spectral_norm_is_second_singular_value():
    a = make_rng(21).standard_normal((4, 4))
    oracle = jacobi_svd(a)
    trip = top_singular_triplet(a)
    second = top_singular_triplet(deflate(a, trip))
    assert second.sigma == pytest.approx(oracle[1].sigma, abs=1e-8)


def test_top_k_svd_diagonal_analytic():
    lam = 1.0 / np.sqrt(np.array([1.0, 2.0, 3.0]))
    triplets = top_k_svd(DesignMatrix.from_diagonal(lam), 3)
    sigmas = [t.sigma for t in triplets]
    assert np.allclose(sigmas, [1.0, 0.7071, 0.5774], atol=5e-5)


def test_top_k_svd_identity():
    triplets = top_k_svd(np.eye(3), 2)
    assert len(triplets) == 2
    assert all(t.sigma == pytest.approx(1.0, abs=1e-9) for t in triplets)


def test_top_k_svd_matches_jacobi():
    a = make_rng(31).standard_normal((6, 4))
    triplets = top_k_svd(a, 4)
    oracle = jacobi_svd(a)
    for got, want in zip(triplets, oracle):
        assert got.sigma == pytest.approx(want.sigma, abs=1e-7)


def test_top_k_svd_rank_exhaustion_returns_fewer():
    u = make_rng(8).standard_normal((5, 2))
    a = u @ u.T  # rank 2
    triplets = top_k_svd(a, 5)
    assert len(triplets) == 2


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_reconstruction_error_monotone(seed):
    a = make_rng(seed).standard_normal((5, 4))
    triplets = top_k_svd(a, 4)
    errors = []
    approx = np.zeros_like(a)
    for trip in triplets:
        approx = approx + trip.sigma * np.outer(trip.left, trip.right)
        errors.append(np.linalg.norm(a - approx))
    assert all(e1 <= e0 + 1e-10 for e0, e1 in zip(errors, errors[1:]))
    assert errors[-1] < 1e-7


def test_pairwise_orthogonality_and_sigma_order():
    a = make_rng(12).standard_normal((6, 5))
    triplets = top_k_svd(a, 5)
    sigmas = [t.sigma for t in triplets]
    assert all(s0 >= s1 - 1e-12 for s0, s1 in zip(sigmas, sigmas[1:]))
    for i in range(len(triplets)):
        for j in range(i + 1, len(triplets)):
            assert abs(triplets[i].left @ triplets[j].left) < 1e-6
            assert abs(triplets[i].right @ triplets[j].right) < 1e-6


def test_diagonal_fast_path_agrees_with_dense():
    lam = np.array([2.0, 0.5, 1.5, 0.25])
    fast = top_k_svd(DesignMatrix.from_diagonal(lam), 4)
    dense = top_k_svd(np.diag(lam), 4)
    for a, b in zip(fast, dense):
        assert a.sigma == pytest.approx(b.sigma, abs=1e-8)


def test_design_matrix_validation():
    with pytest.raises(ValueError):
        DesignMatrix.from_diagonal([1.0, -2.0])
    with pytest.raises(ValueError):
        DesignMatrix.dense(np.array([[np.inf, 0.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        DesignMatrix(entries=np.eye(2), diagonal=np.ones(2))
