"""Monte-Carlo harness: seeded parallel replication and CSV emission.

Each replication draws fresh noise from seed = base_seed + replication_id,
so the output is identical regardless of how many worker processes execute
the batch.  Records are collected in replication order and written as CSV
with `# key=value` metadata lines; wall-clock timings are kept on the record
objects but excluded from the CSV so files stay bitwise reproducible.
"""

import csv
import io
import multiprocessing
import time
from dataclasses import dataclass

import numpy as np

from . import datagen
from .boosting import L2Boost
from .cg import ConjugateGradients
from .landweber import Landweber
from .linalg import as_design, top_k_svd
from .rng import RNG_ALGORITHM, make_rng
from .tree import RegressionTree
from .tsvd import TruncatedSvd

PACKAGE_VERSION = "0.1.0"

RECORD_CSV_FIELDS = [
    "replication_id", "seed", "estimator", "stop_rule", "stop_value", "reached",
    "weak_balanced_oracle", "strong_balanced_oracle",
    "weak_classical_oracle", "strong_classical_oracle",
    "error_at_stop_strong", "error_at_stop_weak",
    "min_error_strong", "min_error_weak",
    "relative_efficiency_strong", "relative_efficiency_weak",
    "error",
]


@dataclass
class SimulationParameters:
    """Validated inputs for a Monte-Carlo study over a fixed design."""

    design: object
    true_signal: np.ndarray
    true_noise_level: float
    monte_carlo_runs: int = 1
    cores: int = 1
    max_iteration: int = 1000
    base_seed: int = 0
    critical_value: float = None  # default n * delta^2 downstream
    learning_rate: float = None
    interpolation: bool = False
    computation_threshold: float = 1e-8
    rule: str = "dp"
    residual_ratio_constant: float = 1.2
    residual_ratio_alpha: float = 0.95
    aic_constant: float = 2.0
    collect: str = "full"  # "full" tracks oracles and error paths, "stops" only stops

    def __post_init__(self):
        self.design = as_design(self.design)
        self.true_signal = np.asarray(self.true_signal, dtype=float)
        n, p = self.design.shape
        if self.true_signal.shape != (p,):
            raise ValueError("true_signal length %d does not match design columns %d"
                             % (self.true_signal.size, p))
        if self.true_noise_level < 0:
            raise ValueError("true_noise_level must be nonnegative")
        if self.monte_carlo_runs < 1:
            raise ValueError("monte_carlo_runs must be at least 1")
        if self.cores < 1:
            raise ValueError("cores must be at least 1")
        if self.max_iteration < 0:
            raise ValueError("max_iteration must be nonnegative")
        if self.collect not in ("full", "stops"):
            raise ValueError("collect must be 'full' or 'stops'")
        if self.rule not in ("dp", "rr", "dp2step", "rr2step"):
            raise ValueError("unknown stopping rule %r" % self.rule)

    def default_critical_value(self):
        n, _ = self.design.shape
        if self.critical_value is not None:
            return self.critical_value
        return n * self.true_noise_level**2


@dataclass
class SimulationRecord:
    """One Monte-Carlo replication's stopping times, errors and efficiencies."""

    replication_id: int
    seed: int
    estimator: str
    stop_rule: str
    stop_value: float = None
    reached: bool = None
    weak_balanced_oracle: float = None
    strong_balanced_oracle: float = None
    weak_classical_oracle: float = None
    strong_classical_oracle: float = None
    error_at_stop_strong: float = None
    error_at_stop_weak: float = None
    min_error_strong: float = None
    min_error_weak: float = None
    relative_efficiency_strong: float = None
    relative_efficiency_weak: float = None
    wall_time_ms: float = None
    error: str = None


@dataclass
class SimulationResult:
    """Records plus (optionally) the per-replication error paths."""

    records: list
    strong_error_paths: np.ndarray = None
    weak_error_paths: np.ndarray = None

    def __iter__(self):
        return iter(self.records)


def _error_paths(estimator, upto):
    """Squared strong/weak error sequences from the stored estimates."""
    truth = estimator.true_signal
    strong = np.empty(upto + 1)
    weak = np.empty(upto + 1)
    for m in range(upto + 1):
        err = estimator.log.estimates[m] - truth
        strong[m] = err @ err
        a_err = estimator.design.matvec(err)
        weak[m] = a_err @ a_err
    return strong, weak


def _pad_path(path, length):
    if len(path) >= length + 1:
        return np.asarray(path[: length + 1])
    return np.concatenate((path, np.full(length + 1 - len(path), path[-1])))


def _build_inverse_estimator(kind, params, response, with_truth, payload):
    truth = params.true_signal if with_truth else None
    noise_level = params.true_noise_level if with_truth else None
    if kind == "tsvd":
        return TruncatedSvd(params.design, response, true_signal=truth,
                            true_noise_level=noise_level,
                            precomputed_triplets=payload.get("triplets"))
    if kind == "landweber":
        return Landweber(params.design, response, learning_rate=params.learning_rate,
                         true_signal=truth, true_noise_level=noise_level)
    if kind == "cg":
        return ConjugateGradients(params.design, response, true_signal=truth,
                                  true_noise_level=noise_level,
                                  computation_threshold=params.computation_threshold)
    raise ValueError("unknown estimator kind %r" % kind)


def _replicate_inverse(kind, params, rep_id, payload):
    seed = params.base_seed + rep_id
    record = SimulationRecord(rep_id, seed, kind, "dp-interp" if
                              (kind == "cg" and params.interpolation) else "dp")
    start = time.perf_counter()
    try:
        rng = make_rng(seed)
        n, _ = params.design.shape
        noise = params.true_noise_level * rng.standard_normal(n)
        response = params.design.matvec(params.true_signal) + noise
        kappa = params.default_critical_value()
        with_truth = params.collect == "full"
        alg = _build_inverse_estimator(kind, params, response, with_truth, payload)

        if kind == "cg":
            stop = alg.get_discrepancy_stop(kappa, params.max_iteration,
                                            interpolation=params.interpolation)
        else:
            stop = alg.get_discrepancy_stop(kappa, params.max_iteration)
        record.stop_value = stop.value
        record.reached = stop.reached

        if params.collect == "stops":
            estimate = _final_estimate(alg, stop)
            err = estimate - params.true_signal
            record.error_at_stop_strong = float(np.sqrt(err @ err))
            a_err = params.design.matvec(err)
            record.error_at_stop_weak = float(np.sqrt(a_err @ a_err))
            return record, None, None

        if kind in ("tsvd", "landweber"):
            weak_bal = alg.get_weak_balanced_oracle(params.max_iteration)
            strong_bal = alg.get_strong_balanced_oracle(params.max_iteration)
            record.weak_balanced_oracle = weak_bal.value if weak_bal.reached else None
            record.strong_balanced_oracle = strong_bal.value if strong_bal.reached else None
            record.weak_classical_oracle = alg.get_weak_classical_oracle(
                params.max_iteration)
            record.strong_classical_oracle = alg.get_strong_classical_oracle(
                params.max_iteration)
            upto = params.max_iteration
        else:
            strong_oracle = alg.get_strong_empirical_oracle(
                params.max_iteration, interpolation=params.interpolation)
            weak_oracle = alg.get_weak_empirical_oracle(
                params.max_iteration, interpolation=params.interpolation)
            record.strong_classical_oracle = strong_oracle.value
            record.weak_classical_oracle = weak_oracle.value
            upto = alg.iteration

        while alg.iteration < upto:
            if not alg._advance():
                break
        upto = min(upto, alg.iteration)
        strong_path, weak_path = _error_paths(alg, upto)

        estimate = _final_estimate(alg, stop)
        err = estimate - params.true_signal
        err_stop_strong = float(err @ err)
        a_err = params.design.matvec(err)
        err_stop_weak = float(a_err @ a_err)

        min_strong = float(np.min(strong_path))
        min_weak = float(np.min(weak_path))
        if kind == "cg" and params.interpolation:
            # with interpolation the path minimum lives on the flow, not the grid
            t_s = alg.get_strong_empirical_oracle(params.max_iteration, interpolation=True)
            t_w = alg.get_weak_empirical_oracle(params.max_iteration, interpolation=True)
            e_s = alg.get_estimate(t_s) - params.true_signal
            min_strong = min(min_strong, float(e_s @ e_s))
            e_w = params.design.matvec(alg.get_estimate(t_w) - params.true_signal)
            min_weak = min(min_weak, float(e_w @ e_w))

        record.error_at_stop_strong = float(np.sqrt(err_stop_strong))
        record.error_at_stop_weak = float(np.sqrt(err_stop_weak))
        record.min_error_strong = float(np.sqrt(min_strong))
        record.min_error_weak = float(np.sqrt(min_weak))
        if err_stop_strong > 0:
            record.relative_efficiency_strong = record.min_error_strong / record.error_at_stop_strong
        if err_stop_weak > 0:
            record.relative_efficiency_weak = record.min_error_weak / record.error_at_stop_weak
        return record, _pad_path(strong_path, params.max_iteration), _pad_path(
            weak_path, params.max_iteration)
    except Exception as exc:  # recorded, never aborts the batch
        record.error = "%s: %s" % (type(exc).__name__, exc)
        return record, None, None
    finally:
        record.wall_time_ms = (time.perf_counter() - start) * 1e3


def _final_estimate(alg, stop):
    if isinstance(alg, ConjugateGradients):
        return alg.get_estimate(stop)
    return alg.get_estimate(int(stop.value))


def _replicate_boost(params, rep_id, payload):
    seed = params.base_seed + rep_id
    record = SimulationRecord(rep_id, seed, "boost", params.rule)
    start = time.perf_counter()
    try:
        rng = make_rng(seed)
        design = payload["covariates"]
        n = design.shape[0]
        truth_values = design @ params.true_signal
        response = truth_values + params.true_noise_level * rng.standard_normal(n)
        alg = L2Boost(design, response, true_coefficients=params.true_signal)

        kappa = params.critical_value
        if params.rule in ("dp", "dp2step") and kappa is None:
            kappa = alg.get_noise_estimate().sigma_hat2
        if params.rule in ("dp", "dp2step"):
            stop = alg.get_discrepancy_stop(kappa, params.max_iteration)
        else:
            stop = alg.get_residual_ratio_stop(params.max_iteration,
                                               K=params.residual_ratio_constant,
                                               alpha=params.residual_ratio_alpha)
        raw_value = stop.value
        if params.rule.endswith("2step"):
            record.stop_value = alg.get_aic_iteration(K=params.aic_constant,
                                                      max_iteration=int(raw_value))
            record.reached = stop.reached
        else:
            record.stop_value = raw_value
            record.reached = stop.reached

        balanced = alg.get_balanced_oracle(params.max_iteration)
        record.weak_balanced_oracle = balanced.value if balanced.reached else None

        while alg.iteration < params.max_iteration:
            if not alg._advance():
                break
        upto = alg.iteration
        path = np.empty(upto + 1)
        for m in range(upto + 1):
            diff = alg.log.estimates[m] - truth_values
            path[m] = (diff**2).mean()
        record.strong_classical_oracle = int(np.argmin(path))

        at_stop = path[int(record.stop_value)]
        record.error_at_stop_strong = float(np.sqrt(at_stop))
        record.min_error_strong = float(np.sqrt(np.min(path)))
        if at_stop > 0:
            record.relative_efficiency_strong = record.min_error_strong / record.error_at_stop_strong
        return record, _pad_path(path, params.max_iteration), None
    except Exception as exc:
        record.error = "%s: %s" % (type(exc).__name__, exc)
        return record, None, None
    finally:
        record.wall_time_ms = (time.perf_counter() - start) * 1e3


def _run_one(args):
    kind, params, rep_id, payload = args
    if kind == "boost":
        return _replicate_boost(params, rep_id, payload)
    return _replicate_inverse(kind, params, rep_id, payload)


def run(params: SimulationParameters, estimator_kind: str) -> SimulationResult:
    """Execute the Monte-Carlo study; deterministic for any core count."""
    kind = estimator_kind.lower()
    payload = {}
    if kind == "boost":
        payload["covariates"] = params.design.to_dense()
        if params.rule not in ("dp", "rr", "dp2step", "rr2step"):
            raise ValueError("unknown boosting rule %r" % params.rule)
    elif kind == "tsvd" and not params.design.is_diagonal and params.collect == "full":
        n, p = params.design.shape
        payload["triplets"] = top_k_svd(params.design, min(params.max_iteration, min(n, p)))
    elif kind not in ("tsvd", "landweber", "cg"):
        raise ValueError("unknown estimator kind %r" % estimator_kind)

    tasks = [(kind, params, rep, payload) for rep in range(params.monte_carlo_runs)]
    if params.cores > 1:
        with multiprocessing.get_context("fork").Pool(params.cores) as pool:
            outcomes = pool.map(_run_one, tasks)
    else:
        outcomes = [_run_one(task) for task in tasks]

    records = [rec for rec, _, _ in outcomes]
    strong_paths = [sp for _, sp, _ in outcomes]
    weak_paths = [wp for _, _, wp in outcomes]
    result = SimulationResult(records)
    if all(sp is not None for sp in strong_paths):
        result.strong_error_paths = np.vstack(strong_paths)
    if all(wp is not None for wp in weak_paths):
        result.weak_error_paths = np.vstack(weak_paths)
    return result


def run_tree_study(kind, sample_size, noise_level, critical_value=None,
                   max_depth=30, monte_carlo_runs=1, base_seed=0, cores=1,
                   test_size=None) -> SimulationResult:
    """Monte-Carlo study for the regression tree on the additive models.

    Each replication draws a fresh training and test set; the discrepancy
    stop uses critical_value (default noise_level^2).  Records are emitted
    for both the global ("dp") and the interpolated ("dp-interp") rule.
    """
    if critical_value is None:
        critical_value = noise_level**2
    if test_size is None:
        test_size = sample_size
    tasks = [(kind, sample_size, noise_level, critical_value, max_depth,
              base_seed, rep, test_size) for rep in range(monte_carlo_runs)]
    if cores > 1:
        with multiprocessing.get_context("fork").Pool(cores) as pool:
            outcomes = pool.map(_tree_replication, tasks)
    else:
        outcomes = [_tree_replication(task) for task in tasks]
    records = [rec for pair in outcomes for rec in pair]
    return SimulationResult(records)


def _tree_replication(args):
    kind, n, noise_level, kappa, max_depth, base_seed, rep_id, test_size = args
    seed = base_seed + 2 * rep_id
    records = [SimulationRecord(rep_id, seed, "tree", "dp"),
               SimulationRecord(rep_id, seed, "tree", "dp-interp")]
    start = time.perf_counter()
    try:
        train = datagen.additive_model(kind, n, noise_level, seed=seed)
        test = datagen.additive_model(kind, test_size, noise_level, seed=seed + 1)
        alg = RegressionTree(train.covariates, train.response,
                             true_signal=train.true_function_values,
                             true_noise_vector=train.noise)
        stop = alg.get_discrepancy_stop(kappa, max_depth)
        stop_interp = alg.get_discrepancy_stop(kappa, max_depth, interpolated=True)
        oracle = alg.get_balanced_oracle(max_depth)
        alg.iterate(max_depth)

        preds = alg.predict_level_paths(test.covariates)
        errors = np.sqrt(((preds - test.true_function_values) ** 2).mean(axis=1))
        best = float(np.min(errors))
        best_level = int(np.argmin(errors))

        for record, s in zip(records, (stop, stop_interp)):
            record.stop_value = s.value
            record.reached = s.reached
            record.weak_balanced_oracle = oracle.value if oracle.reached else None
            record.strong_classical_oracle = best_level
            pred_stop = alg.predict(test.covariates, s)
            err_stop = float(np.sqrt(((pred_stop - test.true_function_values) ** 2).mean()))
            record.error_at_stop_strong = err_stop
            record.min_error_strong = best
            if err_stop > 0:
                record.relative_efficiency_strong = min(best / err_stop, 1.0)
        return records
    except Exception as exc:
        for record in records:
            record.error = "%s: %s" % (type(exc).__name__, exc)
        return records
    finally:
        elapsed = (time.perf_counter() - start) * 1e3
        for record in records:
            record.wall_time_ms = elapsed


def aggregate(result) -> list:
    """Per (estimator, rule) quartile summaries for box-plot reconstruction."""
    records = result.records if isinstance(result, SimulationResult) else list(result)
    if not records:
        raise ValueError("no records to aggregate")
    groups = {}
    for record in records:
        groups.setdefault((record.estimator, record.stop_rule), []).append(record)

    def quartiles(values):
        values = [v for v in values if v is not None]
        if not values:
            return (None, None, None)
        arr = np.asarray(values, dtype=float)
        return tuple(float(np.percentile(arr, q)) for q in (25, 50, 75))

    rows = []
    for (estimator, rule), group in sorted(groups.items()):
        ok = [r for r in group if r.error is None]
        row = {
            "estimator": estimator,
            "stop_rule": rule,
            "records": len(group),
            "failures": len(group) - len(ok),
        }
        q25, med, q75 = quartiles([r.stop_value for r in ok])
        row.update(stop_q25=q25, stop_median=med, stop_q75=q75)
        ratios = [r.stop_value / r.weak_balanced_oracle for r in ok
                  if r.weak_balanced_oracle not in (None, 0)]
        q25, med, q75 = quartiles(ratios)
        row.update(stop_over_oracle_q25=q25, stop_over_oracle_median=med,
                   stop_over_oracle_q75=q75)
        for label in ("weak", "strong"):
            effs = [getattr(r, "relative_efficiency_%s" % label) for r in ok]
            q25, med, q75 = quartiles(effs)
            row.update({"efficiency_%s_q25" % label: q25,
                        "efficiency_%s_median" % label: med,
                        "efficiency_%s_q75" % label: q75})
        rows.append(row)

    if isinstance(result, SimulationResult):
        _attach_expected_efficiencies(result, rows)
    return rows


def _attach_expected_efficiencies(result, rows):
    """Expectation-based efficiencies: ratios of root-mean-squared errors."""
    for label, paths in (("strong", result.strong_error_paths),
                         ("weak", result.weak_error_paths)):
        if paths is None:
            continue
        ok = [r for r in result.records if r.error is None]
        if not ok or any(r.stop_value is None for r in ok):
            continue
        at_stop = [getattr(r, "error_at_stop_%s" % label) for r in ok]
        if any(v is None for v in at_stop):
            continue
        numerator = float(np.sqrt(np.min(paths.mean(axis=0))))
        denominator = float(np.sqrt(np.mean(np.asarray(at_stop) ** 2)))
        for row in rows:
            row["expected_efficiency_%s" % label] = (
                numerator / denominator if denominator > 0 else None)


def format_float(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_records_csv(path_or_file, records, metadata=None):
    """Write records as CSV with `# key=value` metadata comment lines.

    Numeric fields use full round-trip precision; wall times are omitted so
    repeated runs produce bitwise-identical files.
    """
    own = isinstance(path_or_file, (str, bytes))
    handle = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        handle.write("# rng=%s\n" % RNG_ALGORITHM)
        handle.write("# version=%s\n" % PACKAGE_VERSION)
        for key, value in (metadata or {}).items():
            handle.write("# %s=%s\n" % (key, value))
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(RECORD_CSV_FIELDS)
        for record in records:
            row = []
            for name in RECORD_CSV_FIELDS:
                value = getattr(record, name)
                row.append("" if value is None else
                           value if isinstance(value, str) else format_float(value))
            writer.writerow(row)
    finally:
        if own:
            handle.close()


def records_csv_text(records, metadata=None) -> str:
    buffer = io.StringIO()
    write_records_csv(buffer, records, metadata)
    return buffer.getvalue()
