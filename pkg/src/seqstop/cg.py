"""Conjugate gradients for the normal equation A'Y = A'A f.

Uses the efficient three-term recurrence on A directly (the Gram matrix is
never formed).  An emergency stop fires when the Gram residual norm falls
below the computation threshold, preventing divisions by near-zero.  Both
stopping and oracle quantities come in a non-interpolated (integer) and a
linearly interpolated (fractional) version.
"""

import numpy as np

from . import core, linalg
from .errors import OracleUnavailableError

DEFAULT_COMPUTATION_THRESHOLD = 1e-8


def segment_root(res2_left, res2_right, cross, kappa):
    """Smallest alpha in (0, 1] with ||(1-a) r_m + a r_{m+1}||^2 = kappa.

    `cross` is the inner product <r_m, r_{m+1}>.  Assumes the bracketing
    res2_left > kappa >= res2_right, which guarantees a root in (0, 1].
    """
    a = res2_left - 2.0 * cross + res2_right  # ||r_m - r_{m+1}||^2
    b = 2.0 * (cross - res2_left)
    c = res2_left - kappa
    if a <= 0.0:
        # degenerate segment: the residual norm is linear in alpha
        return min(max(-c / b, 0.0), 1.0) if b != 0 else 1.0
    disc = max(b * b - 4.0 * a * c, 0.0)
    roots = sorted(((-b - np.sqrt(disc)) / (2.0 * a), (-b + np.sqrt(disc)) / (2.0 * a)))
    for root in roots:
        if 0.0 < root <= 1.0 + 1e-12:
            return min(root, 1.0)
    return 1.0


def segment_minimum(err_left, err_right):
    """Minimiser of ||(1-a) e_m + a e_{m+1}||^2 over a in [0, 1].

    Returns (alpha, squared value).
    """
    diff = err_right - err_left
    denom = diff @ diff
    if denom == 0.0:
        return 0.0, float(err_left @ err_left)
    alpha = float(min(max(-(err_left @ diff) / denom, 0.0), 1.0))
    vec = err_left + alpha * diff
    return alpha, float(vec @ vec)


class ConjugateGradients:
    """CG for the normal equation, stopped by the discrepancy principle.

    Parameters
    ----------
    design : DesignMatrix or ndarray
    response : ndarray
    true_signal : ndarray, optional
        Enables the empirical error sequences and empirical oracles.
    true_noise_level : float, optional
        Stored for reference; the CG oracles are empirical and do not use it.
    computation_threshold : float
        Emergency stop fires once ||A' r^(m)||^2 falls below this value.
    """

    def __init__(self, design, response, true_signal=None, true_noise_level=None,
                 computation_threshold=DEFAULT_COMPUTATION_THRESHOLD):
        if computation_threshold <= 0:
            raise ValueError("computation_threshold must be positive")
        self.design = linalg.as_design(design)
        self.response = np.asarray(response, dtype=float)
        self.sample_size, self.parameter_size = self.design.shape
        if self.response.shape != (self.sample_size,):
            raise ValueError("response length does not match design")
        self.true_signal = None if true_signal is None else np.asarray(true_signal, dtype=float)
        self.true_noise_level = true_noise_level
        self.computation_threshold = computation_threshold
        self.max_meaningful_iteration = min(self.sample_size, self.parameter_size)

        self.terminated = False
        self.log = core.IterateLog()
        self.log.append(np.zeros(self.parameter_size), self.response @ self.response)
        self.residual_vectors = [self.response.copy()]
        self._residual_vec = self.response.copy()
        self._search_direction = self.design.rmatvec(self._residual_vec)
        self.gram_residual_norm2 = float(self._search_direction @ self._search_direction)

        self.strong_empirical_errors = []
        self.weak_empirical_errors = []
        if self.true_signal is not None:
            self._record_errors(self.log.estimates[0])

    @property
    def iteration(self) -> int:
        return self.log.iteration

    @property
    def residuals(self) -> np.ndarray:
        return np.asarray(self.log.residual_norm2)

    def _record_errors(self, estimate):
        err = estimate - self.true_signal
        self.strong_empirical_errors.append(float(err @ err))
        a_err = self.design.matvec(err)
        self.weak_empirical_errors.append(float(a_err @ a_err))

    def iterate(self, number_of_iterations):
        """Advance the recurrence; silently a no-op once terminated."""
        for _ in range(number_of_iterations):
            if not self._advance():
                break
        return self

    def _advance(self):
        if self.terminated or self.iteration >= self.max_meaningful_iteration:
            if self.iteration >= self.max_meaningful_iteration:
                self.terminated = True
            return False
        if self.gram_residual_norm2 < self.computation_threshold:
            self.terminated = True
            return False
        aq = self.design.matvec(self._search_direction)
        aq_norm2 = aq @ aq
        if aq_norm2 == 0.0:
            self.terminated = True
            return False
        alpha = self.gram_residual_norm2 / aq_norm2
        estimate = self.log.estimates[-1] + alpha * self._search_direction
        self._residual_vec = self._residual_vec - alpha * aq
        gram_res = self.design.rmatvec(self._residual_vec)
        gram_norm2_new = float(gram_res @ gram_res)
        self._search_direction = gram_res + (
            gram_norm2_new / self.gram_residual_norm2) * self._search_direction
        self.gram_residual_norm2 = gram_norm2_new
        self.log.append(estimate, self._residual_vec @ self._residual_vec)
        self.residual_vectors.append(self._residual_vec.copy())
        if self.true_signal is not None:
            self._record_errors(estimate)
        return True

    def get_estimate(self, iteration):
        """Estimate at an integer or fractional (interpolated) iteration."""
        t = float(iteration.value if isinstance(iteration, core.StopIndex) else iteration)
        m = int(np.floor(t))
        alpha = t - m
        while self.iteration < m + (1 if alpha > 0 else 0):
            if not self._advance():
                raise ValueError("iteration %g is beyond the reachable path" % t)
        if alpha == 0.0:
            return self.log.estimates[m].copy()
        return (1.0 - alpha) * self.log.estimates[m] + alpha * self.log.estimates[m + 1]

    # -- stopping ----------------------------------------------------------

    def get_discrepancy_stop(self, critical_value, max_iteration,
                             interpolation=False) -> core.StopIndex:
        """First time with squared residual norm <= critical_value.

        Interpolated mode returns the fractional t = m + alpha at which the
        linearly interpolated residual first crosses the critical value.
        """
        if critical_value < 0:
            raise ValueError("critical_value must be nonnegative")
        max_iteration = min(max_iteration, self.max_meaningful_iteration)
        stop = core.scan_discrepancy(self.log, critical_value, self._advance, max_iteration)
        if not interpolation or not stop.reached:
            return stop
        m = int(stop.value)
        if m == 0:
            return stop
        r_prev = self.residual_vectors[m - 1]
        r_next = self.residual_vectors[m]
        alpha = segment_root(
            self.log.residual_norm2[m - 1],
            self.log.residual_norm2[m],
            float(r_prev @ r_next),
            critical_value,
        )
        return core.StopIndex(m - 1 + alpha, True)

    # -- empirical oracles ---------------------------------------------------

    def _require_signal(self):
        if self.true_signal is None:
            raise OracleUnavailableError("true_signal was not supplied")

    def _extend_to(self, max_iteration):
        while self.iteration < max_iteration:
            if not self._advance():
                break
        return min(max_iteration, self.iteration)

    def get_empirical_risks(self, max_iteration):
        """Sequences ||f^(m) - f*||^2 and ||A(f^(m) - f*)||^2 up to max_iteration."""
        self._require_signal()
        upto = self._extend_to(max_iteration)
        return (np.asarray(self.strong_empirical_errors[: upto + 1]),
                np.asarray(self.weak_empirical_errors[: upto + 1]))

    def _empirical_oracle(self, weak, max_iteration, interpolation):
        self._require_signal()
        upto = self._extend_to(max_iteration)
        errors2 = self.weak_empirical_errors if weak else self.strong_empirical_errors
        if not interpolation:
            return core.StopIndex(float(core.argmin_risk(errors2, upto)), True)
        best_t, best_val = 0.0, errors2[0]
        for m in range(upto):
            e_left = self._error_vector(m, weak)
            e_right = self._error_vector(m + 1, weak)
            alpha, val = segment_minimum(e_left, e_right)
            if val < best_val - 1e-15 * max(best_val, 1.0):
                best_t, best_val = m + alpha, val
        return core.StopIndex(float(best_t), True)

    def _error_vector(self, m, weak):
        err = self.log.estimates[m] - self.true_signal
        return self.design.matvec(err) if weak else err

    def get_strong_empirical_oracle(self, max_iteration, interpolation=False) -> core.StopIndex:
        """Minimiser of the empirical reconstruction error along the path."""
        return self._empirical_oracle(False, max_iteration, interpolation)

    def get_weak_empirical_oracle(self, max_iteration, interpolation=False) -> core.StopIndex:
        """Minimiser of the empirical prediction error along the path."""
        return self._empirical_oracle(True, max_iteration, interpolation)
