"""Minimal dense linear algebra for the estimators.

Provides the design-matrix wrapper with a diagonal fast path, power-method
extraction of leading singular triplets with rank-one deflation, and a
brute-force Jacobi SVD used as an independent oracle in the tests.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ZeroMatrixError

# Rayleigh-change tolerance; the vector error at stop scales like sqrt(tol),
# so the pairwise-orthogonality guarantee of 1e-6 needs tol well below 1e-12.
DEFAULT_POWER_TOL = 1e-14
MIN_POWER_ITERS = 300


class DesignMatrix:
    """Dense n x p or diagonal operator with fast-path dispatch.

    Construct through `DesignMatrix.dense` or `DesignMatrix.from_diagonal`.
    All entries must be finite; diagonal entries must be strictly positive
    (the diagonal variant represents the singular values of an already
    diagonalised operator, so n = p).
    """

    def __init__(self, entries=None, diagonal=None):
        if (entries is None) == (diagonal is None):
            raise ValueError("provide exactly one of entries or diagonal")
        if entries is not None:
            entries = np.asarray(entries, dtype=float)
            if entries.ndim != 2:
                raise ValueError("dense design must be a 2-D array")
            if not np.all(np.isfinite(entries)):
                raise ValueError("design entries must be finite")
        else:
            diagonal = np.asarray(diagonal, dtype=float)
            if diagonal.ndim != 1:
                raise ValueError("diagonal must be a 1-D array")
            if not np.all(np.isfinite(diagonal)):
                raise ValueError("diagonal entries must be finite")
            if np.any(diagonal <= 0):
                raise ValueError("diagonal entries must be strictly positive")
        self._entries = entries
        self._diagonal = diagonal

    @classmethod
    def dense(cls, entries):
        return cls(entries=entries)

    @classmethod
    def from_diagonal(cls, diagonal):
        return cls(diagonal=diagonal)

    @property
    def is_diagonal(self) -> bool:
        return self._diagonal is not None

    @property
    def diagonal(self) -> np.ndarray:
        if self._diagonal is None:
            raise ValueError("not a diagonal design")
        return self._diagonal

    @property
    def shape(self):
        if self._diagonal is not None:
            n = self._diagonal.shape[0]
            return (n, n)
        return self._entries.shape

    def matvec(self, x):
        """A @ x."""
        if self._diagonal is not None:
            return self._diagonal * x
        return self._entries @ x

    def rmatvec(self, y):
        """A.T @ y."""
        if self._diagonal is not None:
            return self._diagonal * y
        return self._entries.T @ y

    def to_dense(self) -> np.ndarray:
        if self._diagonal is not None:
            return np.diag(self._diagonal)
        return self._entries.copy()


def as_design(design) -> DesignMatrix:
    """Wrap a raw 2-D array as a dense design; pass DesignMatrix through."""
    if isinstance(design, DesignMatrix):
        return design
    return DesignMatrix.dense(np.asarray(design, dtype=float))


@dataclass
class SvdTriplet:
    """One singular triplet (sigma, left, right) with A @ right = sigma * left."""

    sigma: float
    left: np.ndarray
    right: np.ndarray
    converged: bool = field(default=True)


def _fix_sign(right, left):
    # sign convention: first non-negligible component of the right vector > 0
    scale = np.max(np.abs(right))
    if scale == 0.0:
        return right, left
    idx = np.argmax(np.abs(right) > 1e-12 * scale)
    if right[idx] < 0:
        return -right, -left
    return right, left


def top_singular_triplet(design, tol=DEFAULT_POWER_TOL, max_power_iters=None) -> SvdTriplet:
    """Dominant singular triplet via power iteration on the Gram matrix.

    Uses a deterministic start vector (normalised all-ones, falling back to
    unit vectors if that happens to lie in the null space), so repeated calls
    are reproducible without any RNG.  Iterates until the relative change of
    the Rayleigh estimate falls below `tol` or `max_power_iters` is reached;
    in the latter case the triplet is returned with ``converged=False``.

    Raises
    ------
    ZeroMatrixError
        If the operator's spectral norm is below the machine threshold.
    """
    design = as_design(design)
    n, p = design.shape
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_power_iters is None:
        max_power_iters = max(10 * max(n, p), MIN_POWER_ITERS)

    if design.is_diagonal:
        lam = design.diagonal
        j = int(np.argmax(lam))  # ties: smallest index
        left = np.zeros(n)
        right = np.zeros(p)
        left[j] = 1.0
        right[j] = 1.0
        return SvdTriplet(float(lam[j]), left, right)

    starts = [np.ones(p) / np.sqrt(p)]
    starts += [np.eye(p)[j] for j in range(min(p, 3))]
    w = None
    for start in starts:
        if np.linalg.norm(design.matvec(start)) > 0:
            w = start
            break
    if w is None:
        raise ZeroMatrixError("operator is numerically zero")

    sigma = 0.0
    converged = False
    for _ in range(max_power_iters):
        aw = design.matvec(w)
        sigma_new = np.linalg.norm(aw)
        if sigma_new == 0.0:
            raise ZeroMatrixError("operator is numerically zero")
        # two Gram applications per step: clustered spectra contract faster
        z = design.rmatvec(aw)
        z = design.rmatvec(design.matvec(z))
        nz = np.linalg.norm(z)
        if nz == 0.0:
            # w maps into the null space of A.T; keep the current estimate
            break
        w = z / nz
        if abs(sigma_new - sigma) <= tol * sigma_new:
            sigma = sigma_new
            converged = True
            break
        sigma = sigma_new
    if sigma == 0.0:
        raise ZeroMatrixError("operator is numerically zero")
    aw = design.matvec(w)
    sigma = float(np.linalg.norm(aw))
    right, left = _fix_sign(w, aw / sigma)
    return SvdTriplet(sigma, left, right, converged=converged)


def deflate(design, triplet: SvdTriplet) -> DesignMatrix:
    """Rank-one downdate A - sigma * left @ right.T (always dense)."""
    design = as_design(design)
    n, p = design.shape
    if triplet.left.shape != (n,) or triplet.right.shape != (p,):
        raise ValueError("triplet shape does not match design")
    return DesignMatrix.dense(
        design.to_dense() - triplet.sigma * np.outer(triplet.left, triplet.right)
    )


def top_k_svd(design, k, tol=DEFAULT_POWER_TOL) -> list[SvdTriplet]:
    """Leading k singular triplets with non-increasing sigma.

    Dense designs alternate `top_singular_triplet` and `deflate`; the
    diagonal variant short-circuits to sorting the diagonal.  If the
    numerical rank is exhausted before k components, the returned list is
    shorter than k.
    """
    design = as_design(design)
    n, p = design.shape
    if not 1 <= k <= min(n, p):
        raise ValueError("k must satisfy 1 <= k <= min(n, p)")

    if design.is_diagonal:
        lam = design.diagonal
        order = np.argsort(-lam, kind="stable")
        triplets = []
        for j in order[:k]:
            left = np.zeros(n)
            right = np.zeros(p)
            left[j] = 1.0
            right[j] = 1.0
            triplets.append(SvdTriplet(float(lam[j]), left, right))
        return triplets

    triplets = []
    current = design
    sigma_max = None
    for _ in range(k):
        try:
            trip = top_singular_triplet(current, tol=tol)
        except ZeroMatrixError:
            break
        if sigma_max is None:
            sigma_max = trip.sigma
        elif trip.sigma <= max(n, p) * 1e-14 * sigma_max:
            break  # numerical rank exhausted
        triplets.append(trip)
        current = deflate(current, trip)
    return triplets


def jacobi_svd(matrix) -> list[SvdTriplet]:
    """Full SVD of a small dense matrix by cyclic Jacobi on A.T @ A.

    Brute-force oracle, independent of the power-method path.  Only intended
    for small matrices in tests and cross-checks.
    """
    a = np.asarray(matrix, dtype=float)
    n, p = a.shape
    g = a.T @ a
    v = np.eye(p)
    off_scale = np.linalg.norm(g)
    for _ in range(100):
        off = 0.0
        for i in range(p - 1):
            for j in range(i + 1, p):
                off = max(off, abs(g[i, j]))
                if abs(g[i, j]) <= 1e-15 * max(off_scale, 1e-300):
                    continue
                # symmetric Jacobi rotation zeroing g[i, j]
                theta = 0.5 * np.arctan2(2.0 * g[i, j], g[i, i] - g[j, j])
                c, s = np.cos(theta), np.sin(theta)
                rot = np.eye(p)
                rot[i, i] = c
                rot[j, j] = c
                rot[i, j] = -s
                rot[j, i] = s
                g = rot.T @ g @ rot
                v = v @ rot
        if off <= 1e-15 * max(off_scale, 1e-300):
            break
    eigs = np.diag(g).copy()
    order = np.argsort(-eigs, kind="stable")
    triplets = []
    for idx in order[: min(n, p)]:
        sigma = float(np.sqrt(max(eigs[idx], 0.0)))
        right = v[:, idx]
        if sigma > 1e-14 * np.sqrt(max(eigs[order[0]], 0.0) + 1e-300):
            left = a @ right / sigma
        else:
            left = np.zeros(n)
        right, left = _fix_sign(right, left)
        triplets.append(SvdTriplet(sigma, left, right))
    return triplets
