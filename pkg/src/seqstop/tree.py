"""Breadth-first CART for nonparametric regression with early stopping.

One iteration grows one tree level: every splittable terminal node is split
at the (coordinate, threshold) pair minimising the children's summed squared
residuals, with thresholds restricted to midpoints between consecutive
distinct values inside the node.  Residuals, bias and variance all use the
empirical norm ||a||_n^2 = n^(-1) sum a_i^2.  A projection-flow interpolation
between consecutive levels provides fractional stopping times.
"""

import numpy as np

from . import core
from .cg import segment_root
from .errors import OracleUnavailableError


def best_split(values, targets):
    """Exhaustive split search on one node, vectorised over coordinates.

    Returns (sse, coordinate, threshold) for the split minimising the summed
    squared residuals of the two children, or None when no coordinate has two
    distinct values.  Ties are broken towards the smallest coordinate, then
    the smallest threshold.
    """
    q, p = values.shape
    if q < 2:
        return None
    order = np.argsort(values, axis=0, kind="stable")
    sorted_values = np.take_along_axis(values, order, axis=0)
    sorted_targets = targets[order]
    cum1 = np.cumsum(sorted_targets, axis=0)
    cum2 = np.cumsum(sorted_targets**2, axis=0)
    total1 = cum1[-1, 0]
    total2 = cum2[-1, 0]
    left_size = np.arange(1, q, dtype=float)[:, None]
    sse_left = cum2[:-1] - cum1[:-1] ** 2 / left_size
    sse_right = (total2 - cum2[:-1]) - (total1 - cum1[:-1]) ** 2 / (q - left_size)
    total = sse_left + sse_right
    valid = sorted_values[1:] > sorted_values[:-1]
    if not valid.any():
        return None
    total = np.where(valid, total, np.inf)
    flat = np.argmin(total.T.ravel())  # coordinate-major: ties -> smallest j, then c
    j, k = divmod(int(flat), q - 1)
    threshold = 0.5 * (sorted_values[k, j] + sorted_values[k + 1, j])
    return float(total[k, j]), j, threshold


class _Node:
    __slots__ = ("member_indices", "node_mean", "level", "split", "children")

    def __init__(self, member_indices, node_mean, level):
        self.member_indices = member_indices
        self.node_mean = node_mean
        self.level = level
        self.split = None      # (coordinate, threshold)
        self.children = None   # (left node id, right node id)


class RegressionTree:
    """Level-indexed CART with discrepancy stopping and oracle tracking.

    Parameters
    ----------
    design : ndarray (n x p)
        Covariates.
    response : ndarray
        Observations Y.
    min_samples_split : int
        Nodes with more than this many observations are split (default 1).
    true_signal : ndarray, optional
        The values f*(X_i) on the training points.
    true_noise_vector : ndarray, optional
        The realised noise; together with `true_signal` enables the
        balanced oracle.

    Attributes
    ----------
    iteration : int
        Deepest computed level.
    residuals : ndarray
        ||Y - P_m Y||_n^2 per level.
    bias2, variance : ndarray
        ||(I - P_m) f*||_n^2 and ||P_m eps||_n^2 per level, when supplied.
    saturated : bool
        True once no terminal node can be split further.
    """

    def __init__(self, design, response, min_samples_split=1,
                 true_signal=None, true_noise_vector=None):
        self.covariates = np.asarray(design, dtype=float)
        if self.covariates.ndim != 2:
            raise ValueError("design must be a 2-D array")
        self.response = np.asarray(response, dtype=float)
        self.sample_size, self.parameter_size = self.covariates.shape
        if self.response.shape != (self.sample_size,):
            raise ValueError("response length does not match design")
        if min_samples_split < 1:
            raise ValueError("min_samples_split must be at least 1")
        self.min_samples_split = min_samples_split
        self.true_signal = None if true_signal is None else np.asarray(true_signal, dtype=float)
        self.true_noise_vector = (None if true_noise_vector is None
                                  else np.asarray(true_noise_vector, dtype=float))
        self.saturated = False

        root = _Node(np.arange(self.sample_size), float(self.response.mean()), 0)
        self.nodes = [root]
        self.levels = [[0]]
        fitted = np.full(self.sample_size, root.node_mean)
        self.log = core.IterateLog()
        self.log.append(fitted, float(((self.response - fitted) ** 2).mean()))

        self.bias2_list = None
        if self.true_signal is not None and self.true_noise_vector is not None:
            self.bias2_list = [self._projected_bias2(level=0)]
            self.variance_list = [self._projected_noise2(level=0)]

    def _node_average(self, vector, level):
        out = np.empty(self.sample_size)
        for nid in self.levels[level]:
            nd = self.nodes[nid]
            out[nd.member_indices] = vector[nd.member_indices].mean()
        return out

    def _projected_bias2(self, level):
        proj = self._node_average(self.true_signal, level)
        return float(((self.true_signal - proj) ** 2).mean())

    def _projected_noise2(self, level):
        proj = self._node_average(self.true_noise_vector, level)
        return float((proj**2).mean())

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
    def variance(self) -> np.ndarray:
        self._require_oracle()
        return np.asarray(self.variance_list)

    def _require_oracle(self):
        if self.bias2_list is None:
            raise OracleUnavailableError(
                "true_signal and true_noise_vector are required for oracle quantities")

    def iterate(self, max_depth):
        """Grow the tree breadth-first up to the given level."""
        if max_depth < self.iteration:
            raise ValueError("max_depth is below the current level")
        while self.iteration < max_depth:
            if not self._advance():
                break
        return self

    def _advance(self):
        """Split every splittable terminal node once; False at saturation."""
        if self.saturated:
            return False
        current = self.levels[-1]
        next_level = []
        fitted = self.log.estimates[-1].copy()
        changed = False
        for nid in current:
            nd = self.nodes[nid]
            idx = nd.member_indices
            if len(idx) > self.min_samples_split:
                found = best_split(self.covariates[idx], self.response[idx])
                if found is not None:
                    _, j, c = found
                    mask = self.covariates[idx, j] < c
                    left_idx, right_idx = idx[mask], idx[~mask]
                    level = len(self.levels)
                    left = _Node(left_idx, float(self.response[left_idx].mean()), level)
                    right = _Node(right_idx, float(self.response[right_idx].mean()), level)
                    self.nodes.append(left)
                    self.nodes.append(right)
                    nd.split = (j, c)
                    nd.children = (len(self.nodes) - 2, len(self.nodes) - 1)
                    next_level += [nd.children[0], nd.children[1]]
                    fitted[left_idx] = left.node_mean
                    fitted[right_idx] = right.node_mean
                    changed = True
                    continue
            next_level.append(nid)
        if not changed:
            self.saturated = True
            return False
        self.levels.append(next_level)
        self.log.append(fitted, float(((self.response - fitted) ** 2).mean()))
        if self.bias2_list is not None:
            level = len(self.levels) - 1
            self.bias2_list.append(self._projected_bias2(level))
            self.variance_list.append(self._projected_noise2(level))
        return True

    # -- stopping ------------------------------------------------------------

    def get_discrepancy_stop(self, critical_value, max_depth,
                             interpolated=False) -> core.StopIndex:
        """First level with empirical squared residual <= critical_value.

        The interpolated variant returns the fractional t = m + alpha at
        which the projection-flow residual crosses the critical value.
        """
        if critical_value < 0:
            raise ValueError("critical_value must be nonnegative")
        stop = core.scan_discrepancy(self.log, critical_value, self._advance, max_depth)
        if not interpolated or not stop.reached:
            return stop
        m = int(stop.value)
        if m == 0:
            return stop
        n = self.sample_size
        r_prev = self.response - self.log.estimates[m - 1]
        r_next = self.response - self.log.estimates[m]
        alpha = segment_root(
            self.log.residual_norm2[m - 1],
            self.log.residual_norm2[m],
            float(r_prev @ r_next) / n,
            critical_value,
        )
        return core.StopIndex(m - 1 + alpha, True)

    def get_balanced_oracle(self, max_depth) -> core.StopIndex:
        """First level with ||(I - P_m) f*||_n^2 <= ||P_m eps||_n^2."""
        self._require_oracle()
        return core.balanced_crossing(
            self.bias2_list, self.variance_list, self._advance, max_depth)

    # -- prediction ----------------------------------------------------------

    def _route(self, query_points, level):
        """Node means for each query point with the tree frozen at `level`."""
        out = np.empty(len(query_points))
        for i, x in enumerate(query_points):
            nd = self.nodes[0]
            while nd.children is not None and nd.level < level:
                j, c = nd.split
                nd = self.nodes[nd.children[0] if x[j] < c else nd.children[1]]
            out[i] = nd.node_mean
        return out

    def predict(self, query_points, iteration):
        """Predictions at an integer level or fractional flow time t."""
        query_points = np.atleast_2d(np.asarray(query_points, dtype=float))
        t = float(iteration.value if isinstance(iteration, core.StopIndex) else iteration)
        if t < 0:
            raise ValueError("iteration must be nonnegative")
        m = int(np.floor(t))
        alpha = t - m
        needs_upper = alpha > 0.0
        if m > self.iteration or (needs_upper and m + 1 > self.iteration and not self.saturated):
            raise ValueError("level %g is beyond the computed depth" % t)
        base = self._route(query_points, m)
        if not needs_upper:
            return base
        # past saturation the flow is constant, so the upper level equals m
        upper = self._route(query_points, min(m + 1, self.iteration))
        return (1.0 - alpha) * base + alpha * upper

    def predict_level_paths(self, query_points):
        """Matrix of predictions at every computed level (levels x queries).

        Routes each query point down the tree once, so the whole path costs
        the same as a single deep prediction.
        """
        query_points = np.atleast_2d(np.asarray(query_points, dtype=float))
        nq = len(query_points)
        depth = self.iteration
        preds = np.empty((depth + 1, nq))
        assign = np.zeros(nq, dtype=int)
        preds[0] = self.nodes[0].node_mean
        for level in range(1, depth + 1):
            for i in range(nq):
                nd = self.nodes[assign[i]]
                if nd.children is not None and nd.level < level:
                    j, c = nd.split
                    assign[i] = nd.children[0] if query_points[i, j] < c else nd.children[1]
            preds[level] = [self.nodes[a].node_mean for a in assign]
        return preds
