"""Shared iterate-once bookkeeping and generic residual-based stopping scans.

Every estimator owns an `IterateLog` that grows monotonically: each iteration
is computed at most once and queries at already-computed indices never
recompute anything.  The scan helpers extend the log lazily through a
caller-supplied `extend` callback and stop extending the moment their
criterion fires.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class StopIndex:
    """A stopping coordinate plus a reached/exhausted flag.

    `value` is an integer for non-interpolated rules and a fractional
    t = m + alpha for interpolated ones.  `reached` is False when the
    iteration budget (or the procedure itself) was exhausted before the
    defining inequality fired; the value is then capped at the maximal
    available iteration.
    """

    value: float
    reached: bool

    def __post_init__(self):
        self.value = float(self.value)

    def __index__(self):
        return int(self.value)


class IterateLog:
    """Per-iteration estimates and squared residual norms."""

    def __init__(self):
        self.estimates = []
        self.residual_norm2 = []

    @property
    def iteration(self) -> int:
        """Maximal computed iteration."""
        return len(self.residual_norm2) - 1

    def append(self, estimate, residual_norm2):
        self.estimates.append(estimate)
        self.residual_norm2.append(float(residual_norm2))


@dataclass
class OracleTrack:
    """Squared-bias and variance sequences indexed by iteration."""

    weak_bias2: list = field(default_factory=list)
    weak_variance: list = field(default_factory=list)
    strong_bias2: list = field(default_factory=list)
    strong_variance: list = field(default_factory=list)


def scan_first(values, predicate, extend, max_iteration):
    """First index m <= max_iteration with predicate(m), extending on demand."""
    m = 0
    while m <= max_iteration:
        if m >= len(values):
            if not extend():
                # saturated before the criterion fired
                return StopIndex(float(min(max_iteration, len(values) - 1)), False)
            continue
        if predicate(m):
            return StopIndex(float(m), True)
        m += 1
    return StopIndex(float(max_iteration), False)


def scan_discrepancy(log: IterateLog, kappa, extend, max_iteration) -> StopIndex:
    """First m with residual_norm2[m] <= kappa, extending the log as needed.

    `extend` must advance the log by exactly one iteration and return False
    once no further iteration can be produced.  It is never called after the
    criterion fires, so computations stop at the stopping time.  Exhaustion
    is not an error: the result carries ``reached=False`` and a value capped
    at `max_iteration`.
    """
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    return scan_first(
        log.residual_norm2,
        lambda m: log.residual_norm2[m] <= kappa,
        extend,
        max_iteration,
    )


def balanced_crossing(bias2, variance, extend, max_iteration) -> StopIndex:
    """First m with bias2[m] <= variance[m], extending the tracks as needed."""
    return scan_first(
        bias2,
        lambda m: bias2[m] <= variance[m],
        extend,
        max_iteration,
    )


def argmin_risk(risk, upto) -> int:
    """Smallest index attaining the minimum of risk[0..upto]."""
    if upto >= len(risk):
        raise ValueError("risk sequence is shorter than upto")
    return int(np.argmin(np.asarray(risk[: upto + 1])))
