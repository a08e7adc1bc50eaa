"""Landweber (gradient-descent) iteration with oracle tracking.

The bias tracks are maintained through the recursion on the estimator mean;
the variance tracks are evaluated spectrally on diagonal designs and through
accumulated matrix powers on dense ones (one p x p multiplication per
iteration, acceptable at desk scale).
"""

import warnings

import numpy as np

from . import core, linalg
from .errors import OracleUnavailableError

STABILITY_SLACK = 1e-9


class Landweber:
    """Gradient descent f^(m+1) = f^(m) + omega A'(Y - A f^(m)).

    Parameters
    ----------
    design : DesignMatrix or ndarray
    response : ndarray
    learning_rate : float, optional
        Step size omega; defaults to 1 / ||A||^2.  Values above the
        stability bound raise, the boundary itself only warns.
    true_signal, true_noise_level : optional
        Enable the bias/variance oracle tracks.
    """

    def __init__(self, design, response, learning_rate=None,
                 true_signal=None, true_noise_level=None):
        self.design = linalg.as_design(design)
        self.response = np.asarray(response, dtype=float)
        self.sample_size, self.parameter_size = self.design.shape
        if self.response.shape != (self.sample_size,):
            raise ValueError("response length does not match design")
        self.true_signal = None if true_signal is None else np.asarray(true_signal, dtype=float)
        self.true_noise_level = true_noise_level
        self.diagonal_mode = self.design.is_diagonal

        if self.diagonal_mode:
            spectral_norm2 = float(np.max(self.design.diagonal) ** 2)
        else:
            spectral_norm2 = linalg.top_singular_triplet(self.design).sigma ** 2
        if learning_rate is None:
            learning_rate = 1.0 / spectral_norm2
        if learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        product = learning_rate * spectral_norm2
        if product > 1.0 + STABILITY_SLACK:
            raise ValueError(
                "learning_rate %g exceeds the stability bound 1/||A||^2 = %g"
                % (learning_rate, 1.0 / spectral_norm2))
        if product > 1.0 - STABILITY_SLACK:
            warnings.warn("learning_rate sits at the stability boundary 1/||A||^2",
                          stacklevel=2)
        self.learning_rate = float(learning_rate)

        self.log = core.IterateLog()
        self.log.append(np.zeros(self.parameter_size), self.response @ self.response)

        self.oracle = None
        if self.true_signal is not None:
            self.oracle = core.OracleTrack()
            self.mean_estimate = np.zeros(self.parameter_size)
            self._signal_image = self.design.matvec(self.true_signal)
            if self.diagonal_mode:
                lam2 = self.design.diagonal**2
                self._one_minus = 1.0 - self.learning_rate * lam2
                self._power = np.ones(self.parameter_size)  # (1 - omega lam^2)^m
                self._lam2 = lam2
            else:
                gram = self.design.to_dense().T @ self.design.to_dense()
                self._gram = gram
                self._contraction = np.eye(self.parameter_size) - self.learning_rate * gram
                self._power_sum = np.zeros((self.parameter_size, self.parameter_size))
                self._power = np.eye(self.parameter_size)  # (I - omega A'A)^m
            self._record_oracle(0)

    @property
    def iteration(self) -> int:
        return self.log.iteration

    @property
    def residuals(self) -> np.ndarray:
        return np.asarray(self.log.residual_norm2)

    def iterate(self, number_of_iterations):
        for _ in range(number_of_iterations):
            self._advance()
        return self

    def _advance(self):
        estimate = self.log.estimates[-1]
        residual_vec = self.response - self.design.matvec(estimate)
        estimate = estimate + self.learning_rate * self.design.rmatvec(residual_vec)
        r = self.response - self.design.matvec(estimate)
        self.log.append(estimate, r @ r)
        if self.oracle is not None:
            self.mean_estimate = self.mean_estimate + self.learning_rate * self.design.rmatvec(
                self._signal_image - self.design.matvec(self.mean_estimate))
            self._record_oracle(self.iteration)
        return True

    def _record_oracle(self, m):
        diff = self.true_signal - self.mean_estimate
        self.oracle.strong_bias2.append(float(diff @ diff))
        a_diff = self.design.matvec(diff)
        self.oracle.weak_bias2.append(float(a_diff @ a_diff))
        if self.true_noise_level is None:
            return
        delta2 = self.true_noise_level**2
        if self.diagonal_mode:
            if m > 0:
                self._power = self._power * self._one_minus
            filt = 1.0 - self._power
            self.oracle.strong_variance.append(float(delta2 * np.sum(filt**2 / self._lam2)))
            self.oracle.weak_variance.append(float(delta2 * np.sum(filt**2)))
        else:
            if m > 0:
                self._power_sum = self._power_sum + self._power
                self._power = self._power @ self._contraction
            omega2 = self.learning_rate**2
            t = self._power_sum @ self._gram
            self.oracle.strong_variance.append(float(delta2 * omega2 * np.sum(t * self._power_sum)))
            self.oracle.weak_variance.append(float(delta2 * omega2 * np.sum(t * t.T)))

    # -- tracks ------------------------------------------------------------

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
        m = int(iteration.value if isinstance(iteration, core.StopIndex) else iteration)
        while self.iteration < m:
            self._advance()
        return self.log.estimates[m].copy()

    # -- stopping rules ----------------------------------------------------

    def get_discrepancy_stop(self, critical_value, max_iteration) -> core.StopIndex:
        """First m with ||Y - A f^(m)||^2 <= critical_value."""
        return core.scan_discrepancy(self.log, critical_value, self._advance, max_iteration)

    def get_weak_balanced_oracle(self, max_iteration) -> core.StopIndex:
        self._require_oracle()
        return core.balanced_crossing(
            self.oracle.weak_bias2, self.oracle.weak_variance, self._advance, max_iteration)

    def get_strong_balanced_oracle(self, max_iteration) -> core.StopIndex:
        self._require_oracle()
        return core.balanced_crossing(
            self.oracle.strong_bias2, self.oracle.strong_variance, self._advance, max_iteration)

    def get_weak_classical_oracle(self, max_iteration) -> int:
        return self._classical_oracle(True, max_iteration)

    def get_strong_classical_oracle(self, max_iteration) -> int:
        return self._classical_oracle(False, max_iteration)

    def _classical_oracle(self, weak, max_iteration):
        self._require_oracle()
        while self.iteration < max_iteration:
            self._advance()
        bias2 = self.oracle.weak_bias2 if weak else self.oracle.strong_bias2
        variance = self.oracle.weak_variance if weak else self.oracle.strong_variance
        risk = np.asarray(bias2[: max_iteration + 1]) + np.asarray(variance[: max_iteration + 1])
        return core.argmin_risk(risk, max_iteration)
