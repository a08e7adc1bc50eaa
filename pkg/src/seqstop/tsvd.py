"""Truncated SVD (spectral cut-off) estimator with sequential stopping.

Singular triplets are computed on demand, one per iteration, so a stopped run
never pays for components beyond the stopping time.  Diagonal designs take a
fast path that avoids the power method entirely and stores the per-component
coefficients instead of dense iterate copies; estimate vectors are assembled
from them on access.
"""

import numpy as np

from . import core, linalg
from .errors import OracleUnavailableError, RankExhaustedError


class _DiagonalEstimates:
    """Lazy view of the estimate path f^(m) in the diagonal fast path.

    The m-th estimate has coefficients y_j / lambda_j on the first m sorted
    components; only those scalars are stored and every component is computed
    exactly once.  Indexing materialises a fresh dense vector.
    """

    def __init__(self, order, coefficients):
        self._order = order
        self._coefficients = coefficients  # grows with the iteration
        self._size = order.shape[0]
        self._count = 0

    def push(self):
        self._count += 1

    def __len__(self):
        return self._count + 1

    def _materialize(self, m):
        vec = np.zeros(self._size)
        idx = self._order[:m]
        vec[idx] = self._coefficients[:m]
        return vec

    def __getitem__(self, m):
        if isinstance(m, slice):
            return [self[i] for i in range(*m.indices(len(self)))]
        if m < 0:
            m += len(self)
        if not 0 <= m < len(self):
            raise IndexError(m)
        return self._materialize(m)


class TruncatedSvd:
    """Spectral cut-off estimator f^(m) = sum_{j<=m} (v_j' Y / lambda_j) u_j.

    Parameters
    ----------
    design : DesignMatrix or ndarray
        Forward operator.  A diagonal DesignMatrix activates the fast path.
    response : ndarray
        Observation vector Y.
    true_signal : ndarray, optional
        Enables the weak/strong bias tracks and the balanced oracles.
    true_noise_level : float, optional
        Noise level delta; enables the variance tracks and the AIC criterion.
    power_tol, max_power_iters :
        Power-method controls for dense designs.
    precomputed_triplets : list of SvdTriplet, optional
        Shared SVD cache for Monte-Carlo studies over a fixed design; the
        estimator falls back to on-demand computation past its end.

    Attributes
    ----------
    iteration : int
        Maximal computed iteration.
    residuals : ndarray
        Squared residual norms ||Y - A f^(m)||^2 for m = 0..iteration.
    weak_bias2, weak_variance, strong_bias2, strong_variance : ndarray
        Oracle tracks; only populated when the truth was supplied.
    """

    def __init__(self, design, response, true_signal=None, true_noise_level=None,
                 power_tol=linalg.DEFAULT_POWER_TOL, max_power_iters=None,
                 precomputed_triplets=None):
        self.design = linalg.as_design(design)
        self.response = np.asarray(response, dtype=float)
        self.sample_size, self.parameter_size = self.design.shape
        if self.response.shape != (self.sample_size,):
            raise ValueError("response length does not match design")
        self.true_signal = None if true_signal is None else np.asarray(true_signal, dtype=float)
        self.true_noise_level = true_noise_level
        self.diagonal_mode = self.design.is_diagonal
        self.power_tol = power_tol
        self.max_power_iters = max_power_iters
        self.rank_exhausted = False

        self.log = core.IterateLog()
        self.oracle = core.OracleTrack() if self.true_signal is not None else None

        if self.diagonal_mode:
            lam = self.design.diagonal
            self._order = np.argsort(-lam, kind="stable")
            self._lam_sorted = lam[self._order]
            self._y_sorted = self.response[self._order]
            self._coefficients = self._y_sorted / self._lam_sorted
            y2 = self._y_sorted**2
            # residual suffix sums: resid[m] = sum_{j > m} (v_j' Y)^2
            self._resid_suffix = np.concatenate((np.cumsum(y2[::-1])[::-1], [0.0]))
            self.log.estimates = _DiagonalEstimates(self._order, self._coefficients)
            self.log.residual_norm2.append(float(self._resid_suffix[0]))
            self._triplet_cache = []
            if self.true_signal is not None:
                f_sorted = self.true_signal[self._order]
                self._strong_bias_suffix = np.concatenate(
                    (np.cumsum(f_sorted[::-1] ** 2)[::-1], [0.0]))
                wb = (self._lam_sorted * f_sorted) ** 2
                self._weak_bias_suffix = np.concatenate((np.cumsum(wb[::-1])[::-1], [0.0]))
        else:
            self.log.append(np.zeros(self.parameter_size), self.response @ self.response)
            self._deflated = self.design
            self._sigma_first = None
            self._f_perp = None if self.true_signal is None else self.true_signal.copy()
            self._triplets = []

        self._precomputed = list(precomputed_triplets) if precomputed_triplets else []
        self._strong_var_acc = 0.0

        if self.oracle is not None:
            self._record_oracle(0)

    # -- iteration ---------------------------------------------------------

    @property
    def iteration(self) -> int:
        return self.log.iteration

    @property
    def residuals(self) -> np.ndarray:
        return np.asarray(self.log.residual_norm2)

    @property
    def triplets(self):
        """Computed singular triplets (assembled lazily in diagonal mode)."""
        if not self.diagonal_mode:
            return self._triplets
        while len(self._triplet_cache) < self.iteration:
            m = len(self._triplet_cache)
            j = self._order[m]
            left = np.zeros(self.sample_size)
            right = np.zeros(self.parameter_size)
            left[j] = 1.0
            right[j] = 1.0
            self._triplet_cache.append(
                linalg.SvdTriplet(float(self._lam_sorted[m]), left, right))
        return self._triplet_cache

    def iterate(self, number_of_iterations):
        """Compute the next `number_of_iterations` singular components."""
        if self.iteration + number_of_iterations > min(self.sample_size, self.parameter_size):
            raise RankExhaustedError(
                "cannot iterate beyond min(n, p) = %d"
                % min(self.sample_size, self.parameter_size))
        for _ in range(number_of_iterations):
            if not self._advance():
                raise RankExhaustedError("numerical rank exhausted at iteration %d"
                                         % self.iteration)
        return self

    def _next_dense_triplet(self):
        m = self.iteration
        if m < len(self._precomputed):
            return self._precomputed[m]
        try:
            trip = linalg.top_singular_triplet(
                self._deflated, tol=self.power_tol, max_power_iters=self.max_power_iters)
        except linalg.ZeroMatrixError:
            return None
        if self._sigma_first is None:
            self._sigma_first = trip.sigma
        elif trip.sigma <= max(self.design.shape) * 1e-14 * self._sigma_first:
            return None
        return trip

    def _advance(self):
        """Compute one more component; False once the rank is exhausted."""
        if self.rank_exhausted or self.iteration >= min(self.sample_size, self.parameter_size):
            return False
        if self.diagonal_mode:
            m = self.iteration + 1
            self.log.estimates.push()
            self.log.residual_norm2.append(float(self._resid_suffix[m]))
        else:
            trip = self._next_dense_triplet()
            if trip is None:
                self.rank_exhausted = True
                return False
            self._triplets.append(trip)
            m = self.iteration + 1
            coeff = trip.left @ self.response
            estimate = self.log.estimates[-1] + (coeff / trip.sigma) * trip.right
            self._deflated = linalg.deflate(self._deflated, trip)
            r = self.response - self.design.matvec(estimate)
            self.log.append(estimate, r @ r)
        if self.oracle is not None:
            self._record_oracle(m)
        return True

    def _record_oracle(self, m):
        if self.diagonal_mode:
            strong_bias2 = float(self._strong_bias_suffix[m])
            weak_bias2 = float(self._weak_bias_suffix[m])
        else:
            if m > 0:
                trip = self._triplets[m - 1]
                self._f_perp = self._f_perp - (trip.right @ self._f_perp) * trip.right
            strong_bias2 = float(self._f_perp @ self._f_perp)
            af = self.design.matvec(self._f_perp)
            weak_bias2 = float(af @ af)
        self.oracle.strong_bias2.append(strong_bias2)
        self.oracle.weak_bias2.append(weak_bias2)
        if self.true_noise_level is not None:
            if m > 0:
                sigma = self._lam_sorted[m - 1] if self.diagonal_mode else self._triplets[m - 1].sigma
                self._strong_var_acc += 1.0 / sigma**2
            delta2 = self.true_noise_level**2
            self.oracle.strong_variance.append(delta2 * self._strong_var_acc)
            self.oracle.weak_variance.append(delta2 * m)

    # -- oracle tracks -----------------------------------------------------

    def _require_oracle(self, need_noise=True):
        if self.oracle is None:
            raise OracleUnavailableError("true_signal was not supplied")
        if need_noise and self.true_noise_level is None:
            raise OracleUnavailableError("true_noise_level was not supplied")

    @property
    def weak_bias2(self):
        self._require_oracle(need_noise=False)
        return np.asarray(self.oracle.weak_bias2)

    @property
    def strong_bias2(self):
        self._require_oracle(need_noise=False)
        return np.asarray(self.oracle.strong_bias2)

    @property
    def weak_variance(self):
        self._require_oracle()
        return np.asarray(self.oracle.weak_variance)

    @property
    def strong_variance(self):
        self._require_oracle()
        return np.asarray(self.oracle.strong_variance)

    def get_estimate(self, iteration):
        """Estimate at an already-computed (or reachable) iteration."""
        m = int(iteration.value if isinstance(iteration, core.StopIndex) else iteration)
        while self.iteration < m:
            if not self._advance():
                raise RankExhaustedError("cannot reach iteration %d" % m)
        if self.diagonal_mode:
            return self.log.estimates[m]
        return self.log.estimates[m].copy()

    # -- stopping rules ----------------------------------------------------

    def get_discrepancy_stop(self, critical_value, max_iteration) -> core.StopIndex:
        """First m with ||Y - A f^(m)||^2 <= critical_value."""
        max_iteration = min(max_iteration, min(self.sample_size, self.parameter_size))
        return core.scan_discrepancy(self.log, critical_value, self._advance, max_iteration)

    def get_weak_balanced_oracle(self, max_iteration) -> core.StopIndex:
        self._require_oracle()
        max_iteration = min(max_iteration, min(self.sample_size, self.parameter_size))
        return core.balanced_crossing(
            self.oracle.weak_bias2, self.oracle.weak_variance, self._advance, max_iteration)

    def get_strong_balanced_oracle(self, max_iteration) -> core.StopIndex:
        self._require_oracle()
        max_iteration = min(max_iteration, min(self.sample_size, self.parameter_size))
        return core.balanced_crossing(
            self.oracle.strong_bias2, self.oracle.strong_variance, self._advance, max_iteration)

    def _classical_oracle(self, weak, max_iteration):
        self._require_oracle()
        max_iteration = min(max_iteration, min(self.sample_size, self.parameter_size))
        while self.iteration < max_iteration and self._advance():
            pass
        upto = min(max_iteration, self.iteration)
        bias2 = self.oracle.weak_bias2 if weak else self.oracle.strong_bias2
        variance = self.oracle.weak_variance if weak else self.oracle.strong_variance
        risk = np.asarray(bias2[: upto + 1]) + np.asarray(variance[: upto + 1])
        return core.argmin_risk(risk, upto)

    def get_weak_classical_oracle(self, max_iteration) -> int:
        """argmin of the weak risk over 0..max_iteration."""
        return self._classical_oracle(True, max_iteration)

    def get_strong_classical_oracle(self, max_iteration) -> int:
        """argmin of the strong risk over 0..max_iteration."""
        return self._classical_oracle(False, max_iteration)

    def get_aic_two_step(self, stop, noise_level=None) -> int:
        """argmin over m <= stop of the AIC along the already-computed path.

        AIC(m) = -sum_{i<=m} lambda_i^(-2) <Y, v_i>^2
                 + 2 delta^2 sum_{i<=m} lambda_i^(-2).
        """
        delta = noise_level if noise_level is not None else self.true_noise_level
        if delta is None:
            raise OracleUnavailableError("noise level required for the AIC criterion")
        m_max = int(stop.value if isinstance(stop, core.StopIndex) else stop)
        if m_max > self.iteration:
            raise ValueError("AIC path requested beyond the computed iteration")
        if self.diagonal_mode:
            lam = self._lam_sorted[:m_max]
            coeff = self._y_sorted[:m_max]
        else:
            lam = np.array([t.sigma for t in self._triplets[:m_max]])
            coeff = np.array([t.left @ self.response for t in self._triplets[:m_max]])
        inv2 = 1.0 / lam**2 if m_max else np.zeros(0)
        terms = -inv2 * coeff**2 + 2.0 * delta**2 * inv2
        aic = np.concatenate(([0.0], np.cumsum(terms)))
        return int(np.argmin(aic))
