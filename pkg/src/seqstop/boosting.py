"""L2-boosting via orthogonal matching pursuit for high-dimensional linear
models.

All inner products and norms in this module are empirical, <a, b>_n =
n^(-1) sum_i a_i b_i, matching the high-dimensional regression convention.
The projection onto the selected columns is maintained through incremental
Gram-Schmidt: one new orthonormal vector per iteration.
"""

from dataclasses import dataclass

import numpy as np

from . import core
from .errors import OracleUnavailableError
from .linalg import DesignMatrix

DEPENDENT_COLUMN_TOL = 1e-8


def hd_aic_argmin(residuals, penalty_per_step) -> int:
    """argmin_m residuals[m] + penalty_per_step * m (ties -> smallest m)."""
    residuals = np.asarray(residuals, dtype=float)
    values = residuals + penalty_per_step * np.arange(len(residuals))
    return int(np.argmin(values))


@dataclass
class NoiseEstimate:
    """Scaled-lasso noise level estimate."""

    sigma_hat2: float
    lasso_coefficients: np.ndarray
    iterations_used: int
    converged: bool = True


def scaled_lasso_noise(covariates, response, tol=1e-6, max_rounds=50,
                       cd_tol=1e-8, cd_max_sweeps=1000) -> NoiseEstimate:
    """Joint lasso/noise-scale estimation by alternation.

    Given the current scale sigma, solves the lasso with penalty
    lambda = sigma * sqrt(2 log(p) / n) by cyclic (ascending) coordinate
    descent on (2n)^(-1) ||Y - X b||^2 + lambda ||b||_1, then updates
    sigma = ||Y - X b||_n; repeats until the scale moves less than `tol`
    or `max_rounds` alternations were used (flagged as not converged).
    """
    x = np.asfortranarray(covariates, dtype=float)
    y = np.asarray(response, dtype=float)
    n, p = x.shape
    lam0 = np.sqrt(2.0 * np.log(p) / n)
    col_norm2 = (x**2).sum(axis=0) / n
    beta = np.zeros(p)
    residual = y.copy()
    sigma = float(np.sqrt((y**2).mean()))
    if sigma == 0.0:
        return NoiseEstimate(0.0, beta, 0)
    active = col_norm2 > 0
    for rounds in range(1, max_rounds + 1):
        lam = lam0 * sigma
        for _ in range(cd_max_sweeps):
            max_change = 0.0
            for j in range(p):
                if not active[j]:
                    continue
                old = beta[j]
                rho = (x[:, j] @ residual) / n + col_norm2[j] * old
                new = np.sign(rho) * max(abs(rho) - lam, 0.0) / col_norm2[j]
                if new != old:
                    residual += x[:, j] * (old - new)
                    beta[j] = new
                    max_change = max(max_change, abs(new - old))
            if max_change < cd_tol:
                break
        sigma_new = float(np.sqrt((residual**2).mean()))
        if abs(sigma_new - sigma) < tol:
            return NoiseEstimate(sigma_new**2, beta.copy(), rounds)
        sigma = sigma_new
        if sigma == 0.0:
            return NoiseEstimate(0.0, beta.copy(), rounds)
    return NoiseEstimate(sigma**2, beta.copy(), max_rounds, converged=False)


class L2Boost:
    """Orthogonal matching pursuit with sequential stopping rules.

    Parameters
    ----------
    design : ndarray (n x p)
        Covariate matrix X.
    response : ndarray
        Observation vector Y.
    true_coefficients : ndarray, optional
        beta*; enables the empirical bias/stochastic-error decomposition
        (with f* = X beta* and eps = Y - X beta*) and the balanced oracle.

    Attributes
    ----------
    selected_set : list of int
        Column indices in selection order (no index appears twice).
    residuals : ndarray
        Empirical squared residual norms ||Y - f^(m)||_n^2.
    bias2, stochastic_error, risk : ndarray
        Oracle tracks, when beta* was supplied.
    selection_terminated : bool
        True once selection stopped early on numerically dependent columns.
    """

    def __init__(self, design, response, true_coefficients=None):
        if isinstance(design, DesignMatrix):
            design = design.to_dense()
        self.covariates = np.asarray(design, dtype=float)
        if self.covariates.ndim != 2:
            raise ValueError("design must be a 2-D array")
        self.response = np.asarray(response, dtype=float)
        self.sample_size, self.parameter_size = self.covariates.shape
        if self.response.shape != (self.sample_size,):
            raise ValueError("response length does not match design")
        self.true_coefficients = (None if true_coefficients is None
                                  else np.asarray(true_coefficients, dtype=float))

        n = self.sample_size
        self._col_norm = np.sqrt((self.covariates**2).sum(axis=0) / n)
        self._selectable = self._col_norm > 0
        self.selected_set = []
        self._basis = []  # orthonormal in <.,.>_n
        self.selection_terminated = False
        self._noise_estimate = None

        self.log = core.IterateLog()
        self.log.append(np.zeros(n), float((self.response**2).mean()))

        self.bias2_list = None
        if self.true_coefficients is not None:
            self.true_function_values = self.covariates @ self.true_coefficients
            self.noise_vector = self.response - self.true_function_values
            self._signal_perp = self.true_function_values.copy()
            self.bias2_list = [float((self._signal_perp**2).mean())]
            self.stochastic_error_list = [0.0]

    @property
    def iteration(self) -> int:
        return self.log.iteration

    @property
    def residuals(self) -> np.ndarray:
        return np.asarray(self.log.residual_norm2)

    @property
    def bias2(self) -> np.ndarray:
        self._require_oracle()
        return np.asarray(self.bias2_list)

    @property
    def stochastic_error(self) -> np.ndarray:
        self._require_oracle()
        return np.asarray(self.stochastic_error_list)

    @property
    def risk(self) -> np.ndarray:
        return self.bias2 + self.stochastic_error

    def _require_oracle(self):
        if self.bias2_list is None:
            raise OracleUnavailableError("true_coefficients were not supplied")

    def iterate(self, number_of_iterations):
        if len(self.selected_set) + number_of_iterations > min(self.sample_size,
                                                               self.parameter_size):
            raise ValueError("cannot select more than min(n, p) columns")
        for _ in range(number_of_iterations):
            if not self._advance():
                break
        return self

    def _candidate(self, excluded):
        residual = self.response - self.log.estimates[-1]
        corr = np.abs(self.covariates.T @ residual) / self.sample_size
        with np.errstate(invalid="ignore"):
            corr = np.where(self._selectable, corr / np.where(self._col_norm > 0,
                                                              self._col_norm, 1.0), -np.inf)
        corr[self.selected_set] = -np.inf
        corr[list(excluded)] = -np.inf
        if not np.isfinite(corr).any():
            return None
        return int(np.argmax(corr))  # ties -> smallest index

    def _advance(self):
        if self.selection_terminated:
            return False
        if len(self.selected_set) >= min(self.sample_size, self.parameter_size):
            return False
        excluded = set()
        for _ in range(2):  # skip-and-reselect once on a dependent column
            j = self._candidate(excluded)
            if j is None:
                self.selection_terminated = True
                return False
            column = self.covariates[:, j].astype(float)
            vec = column.copy()
            for q in self._basis:
                vec -= (q @ vec / self.sample_size) * q
            norm = np.sqrt((vec**2).mean())
            if norm <= DEPENDENT_COLUMN_TOL * self._col_norm[j]:
                # re-orthogonalise once before declaring dependence
                for q in self._basis:
                    vec -= (q @ vec / self.sample_size) * q
                norm = np.sqrt((vec**2).mean())
            if norm > DEPENDENT_COLUMN_TOL * self._col_norm[j]:
                self._append_component(j, vec / norm)
                return True
            excluded.add(j)
        self.selection_terminated = True
        return False

    def _append_component(self, j, q):
        n = self.sample_size
        self.selected_set.append(j)
        self._basis.append(q)
        coeff = q @ self.response / n
        estimate = self.log.estimates[-1] + coeff * q
        residual = self.response - estimate
        self.log.append(estimate, float((residual**2).mean()))
        if self.bias2_list is not None:
            proj = q @ self._signal_perp / n
            self._signal_perp = self._signal_perp - proj * q
            self.bias2_list.append(max(self.bias2_list[-1] - proj**2, 0.0))
            eps_coeff = q @ self.noise_vector / n
            self.stochastic_error_list.append(self.stochastic_error_list[-1] + eps_coeff**2)

    def get_estimate(self, iteration):
        m = int(iteration.value if isinstance(iteration, core.StopIndex) else iteration)
        while self.iteration < m:
            if not self._advance():
                raise ValueError("iteration %d is beyond the reachable path" % m)
        return self.log.estimates[m].copy()

    # -- noise estimation ----------------------------------------------------

    def get_noise_estimate(self) -> NoiseEstimate:
        """Scaled-lasso estimate of the noise level (cached)."""
        if self._noise_estimate is None:
            self._noise_estimate = scaled_lasso_noise(self.covariates, self.response)
        return self._noise_estimate

    # -- stopping rules ------------------------------------------------------

    def get_discrepancy_stop(self, critical_value, max_iteration,
                             iteration_dependent=False) -> core.StopIndex:
        """First m with ||Y - f^(m)||_n^2 below the critical value.

        In the default constant mode the threshold is `critical_value`
        itself (in practice the noise estimate).  With
        ``iteration_dependent=True`` the theoretical threshold
        kappa_m = critical_value * (1 + 8 m log n) is used instead.
        """
        if critical_value < 0:
            raise ValueError("critical_value must be nonnegative")
        max_iteration = min(max_iteration, min(self.sample_size, self.parameter_size))
        if not iteration_dependent:
            return core.scan_discrepancy(self.log, critical_value, self._advance, max_iteration)
        log_n = np.log(self.sample_size)
        return core.scan_first(
            self.log.residual_norm2,
            lambda m: self.log.residual_norm2[m] <= critical_value * (1.0 + 8.0 * m * log_n),
            self._advance,
            max_iteration,
        )

    def get_residual_ratio_stop(self, max_iteration, K=1.2, alpha=0.95) -> core.StopIndex:
        """First m whose residual ratio exceeds 1 - 4 K log(2p / alpha) / n.

        Checking index m requires iterate m + 1; the returned stop is m.
        A residual that is exactly zero stops immediately (the ratio is
        undefined there and nothing is left to fit).
        """
        if K <= 0:
            raise ValueError("K must be positive")
        if not 0.0 < alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        threshold = 1.0 - 4.0 * K * np.log(2.0 * self.parameter_size / alpha) / self.sample_size
        max_iteration = min(max_iteration, min(self.sample_size, self.parameter_size))
        m = 0
        while m <= max_iteration:
            if self.log.residual_norm2[m] == 0.0:
                return core.StopIndex(float(m), True)
            if m + 1 > self.iteration:
                if not self._advance():
                    return core.StopIndex(float(min(max_iteration, self.iteration)), False)
                continue
            if self.log.residual_norm2[m + 1] / self.log.residual_norm2[m] >= threshold:
                return core.StopIndex(float(m), True)
            m += 1
        return core.StopIndex(float(max_iteration), False)

    def get_aic_iteration(self, K=2.0, max_iteration=None) -> int:
        """argmin over 0..max_iteration of the high-dimensional AIC.

        AIC(m) = ||Y - f^(m)||_n^2 + K sigma_hat^2 m log(p) / n with the
        scaled-lasso noise estimate.  Passing a stopping time as
        `max_iteration` yields the two-step procedure.
        """
        if max_iteration is None:
            max_iteration = self.iteration
        m_max = int(max_iteration.value if isinstance(max_iteration, core.StopIndex)
                    else max_iteration)
        m_max = min(m_max, min(self.sample_size, self.parameter_size))
        while self.iteration < m_max:
            if not self._advance():
                break
        m_max = min(m_max, self.iteration)
        sigma_hat2 = self.get_noise_estimate().sigma_hat2
        penalty = K * sigma_hat2 * np.log(self.parameter_size) / self.sample_size
        return hd_aic_argmin(self.log.residual_norm2[: m_max + 1], penalty)

    def get_balanced_oracle(self, max_iteration) -> core.StopIndex:
        """First m with empirical bias2 <= stochastic error (needs beta*)."""
        self._require_oracle()
        max_iteration = min(max_iteration, min(self.sample_size, self.parameter_size))
        return core.balanced_crossing(
            self.bias2_list, self.stochastic_error_list, self._advance, max_iteration)
