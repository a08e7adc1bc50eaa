import numpy as np
import pytest

from seqstop import core
from seqstop.rng import make_rng


class FakeLog:
    """Replays a fixed residual sequence one extension at a time."""

    def __init__(self, residuals, available=1):
        self._all = list(residuals)
        self.residual_norm2 = self._all[:available]
        self.extend_calls = 0

    @property
    def iteration(self):
        return len(self.residual_norm2) - 1

    def extend(self):
        self.extend_calls += 1
        if len(self.residual_norm2) < len(self._all):
            self.residual_norm2.append(self._all[len(self.residual_norm2)])
            return True
        return False


def test_scan_discrepancy_examples():
    log = FakeLog([5.0, 3.0, 1.0])
    stop = core.scan_discrepancy(log, 2.0, log.extend, 10)
    assert stop.value == 2 and stop.reached

    log = FakeLog([5.0, 3.0, 1.0])
    stop = core.scan_discrepancy(log, 10.0, log.extend, 10)
    assert stop.value == 0 and stop.reached
    assert log.extend_calls == 0  # stop before the first iteration


def test_scan_discrepancy_sequentiality():
    log = FakeLog([5.0, 3.0, 1.0, 0.5, 0.1])
    core.scan_discrepancy(log, 1.0, log.extend, 10)
    # the criterion fires at index 2; indices 3, 4 are never computed
    assert log.extend_calls == 2
    assert log.iteration == 2


def test_scan_discrepancy_exhaustion():
    log = FakeLog([5.0, 3.0])
    stop = core.scan_discrepancy(log, 0.5, log.extend, 6)
    assert not stop.reached
    assert stop.value == 1  # saturated below max_iteration

    log = FakeLog([5.0, 4.0, 3.0, 2.5, 2.2, 2.0, 1.9])
    stop = core.scan_discrepancy(log, 0.5, log.extend, 4)
    assert not stop.reached
    assert stop.value == 4


def test_scan_discrepancy_monotone_in_kappa():
    rng = make_rng(0)
    for _ in range(20):
        residuals = np.sort(rng.uniform(0, 10, 12))[::-1]
        kappas = sorted(rng.uniform(0, 12, 2))
        stops = []
        for kappa in kappas:
            log = FakeLog(residuals)
            stops.append(core.scan_discrepancy(log, kappa, log.extend, 11).value)
        assert stops[0] >= stops[1]  # smaller kappa never stops earlier


def test_scan_discrepancy_rejects_negative_kappa():
    log = FakeLog([1.0])
    with pytest.raises(ValueError):
        core.scan_discrepancy(log, -1.0, log.extend, 5)


def test_balanced_crossing_examples():
    stop = core.balanced_crossing([0.0, 0.0], [0.0, 1.0], lambda: False, 5)
    assert stop.value == 0 and stop.reached

    bias2 = [4.0, 1.0, 0.1]
    variance = [0.0, 2.0, 3.0]
    stop = core.balanced_crossing(bias2, variance, lambda: False, 5)
    assert stop.value == 1 and stop.reached


def test_balanced_crossing_unique_for_monotone_tracks():
    rng = make_rng(3)
    for _ in range(10):
        bias2 = np.sort(rng.uniform(0, 5, 15))[::-1]
        variance = np.sort(rng.uniform(0, 5, 15))
        stop = core.balanced_crossing(list(bias2), list(variance), lambda: False, 14)
        crossings = [m for m in range(15) if bias2[m] <= variance[m]]
        if crossings:
            assert stop.reached and stop.value == crossings[0]
            # monotone tracks: every later index also satisfies the inequality
            assert crossings == list(range(crossings[0], 15))
        else:
            assert not stop.reached


def test_argmin_risk():
    assert core.argmin_risk([3.0, 1.0, 1.0, 2.0], 3) == 1
    assert core.argmin_risk([5.0, 4.0, 3.0, 2.0], 3) == 3
    with pytest.raises(ValueError):
        core.argmin_risk([1.0], 5)


def test_stop_index_is_plain_float():
    stop = core.StopIndex(np.float64(2.5), True)
    assert isinstance(stop.value, float)
    assert int(stop) == 2
