"""Command-line interface.

Subcommands: `datagen` (emit generated data as CSV), `estimate` (single run
with a one-line summary), `replicate` (Monte-Carlo studies), `compare`
(cross-estimator study on the ill-posed test problems) and `bench` (timing
table).  A flat key=value config file can pre-set any flag; explicit flags
win.  Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""

import argparse
import csv
import sys
import time

import numpy as np

from . import datagen, simulation
from .boosting import L2Boost
from .cg import ConjugateGradients
from .errors import SeqstopError
from .landweber import Landweber
from .rng import RNG_ALGORITHM, make_rng
from .tree import RegressionTree
from .tsvd import TruncatedSvd

SIGNAL_CHOICES = ("supersmooth", "smooth", "rough")
TREE_KINDS = ("smooth", "step", "linear", "hills")
BOOST_SIGNALS = ("gamma1", "gamma2", "gamma3", "s15", "s60", "s90")


class _Parser(argparse.ArgumentParser):
    # spec'd exit codes: usage/validation errors exit 1, not argparse's 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, "%s: error: %s\n" % (self.prog, message))


def _float_str(value):
    return simulation.format_float(value)


def _write_vector_csv(path, values, metadata):
    with open(path, "w", newline="") as handle:
        for key, val in metadata.items():
            handle.write("# %s=%s\n" % (key, val))
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["index", "value"])
        for i, v in enumerate(np.asarray(values).ravel()):
            writer.writerow([i, _float_str(float(v))])


def _write_matrix_csv(path, matrix, metadata):
    matrix = np.asarray(matrix)
    with open(path, "w", newline="") as handle:
        for key, val in metadata.items():
            handle.write("# %s=%s\n" % (key, val))
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["n", "p"])
        writer.writerow([matrix.shape[0], matrix.shape[1]])
        for row in matrix:
            writer.writerow([_float_str(float(v)) for v in row])


def build_parser():
    parser = _Parser(prog="seqstop",
                     description="Sequential early stopping for iterative estimators.")
    parser.add_argument("--config", default=None,
                        help="flat key=value file providing flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("datagen", help="generate a dataset and write CSV files")
    gen.add_argument("--problem", required=True,
                     choices=("diagonal", "phillips", "gravity", "gamma-sparse",
                              "s-sparse", "gaussian-design", "additive"))
    gen.add_argument("--n", type=int, default=1000, help="sample size")
    gen.add_argument("--p", type=int, default=1000, help="parameter size")
    gen.add_argument("--signal", choices=SIGNAL_CHOICES, default="smooth")
    gen.add_argument("--kind", choices=TREE_KINDS, default="smooth",
                     help="additive-model kind")
    gen.add_argument("--delta", type=float, default=0.01, help="noise level")
    gen.add_argument("--sigma", type=float, default=1.0, help="regression noise level")
    gen.add_argument("--gamma", type=float, default=3.0, help="decay of gamma-sparse signal")
    gen.add_argument("--sparsity", type=int, default=15, help="support size of s-sparse signal")
    gen.add_argument("--magnitude", type=float, default=None,
                     help="s-sparse magnitude (default: 10/sparsity)")
    gen.add_argument("--depth", type=float, default=0.25, help="gravity source depth")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="output path or stem")

    est = sub.add_parser("estimate", help="single run, one-line summary")
    est.add_argument("kind", choices=("tsvd", "landweber", "cg", "boost", "tree"))
    est.add_argument("--n", type=int, default=1000)
    est.add_argument("--p", type=int, default=1000)
    est.add_argument("--signal", choices=SIGNAL_CHOICES + BOOST_SIGNALS, default="smooth")
    est.add_argument("--kind-additive", dest="kind_additive", choices=TREE_KINDS,
                     default="smooth")
    est.add_argument("--delta", type=float, default=0.01)
    est.add_argument("--sigma", type=float, default=1.0)
    est.add_argument("--kappa", type=float, default=None,
                     help="critical value (default n*delta^2, sigma^2 for trees)")
    est.add_argument("--max-iter", type=int, default=1000)
    est.add_argument("--learning-rate", type=float, default=None)
    est.add_argument("--interpolate", action="store_true")
    est.add_argument("--threshold", type=float, default=1e-8,
                     help="CG emergency-stop threshold")
    est.add_argument("--seed", type=int, default=0)

    rep = sub.add_parser("replicate", help="Monte-Carlo replication study")
    rep.add_argument("kind", choices=("tsvd", "landweber", "cg", "boost", "tree"))
    rep.add_argument("--n", type=int, default=10000)
    rep.add_argument("--p", type=int, default=1000)
    rep.add_argument("--signal", choices=SIGNAL_CHOICES + BOOST_SIGNALS, default="smooth")
    rep.add_argument("--kind-additive", dest="kind_additive", choices=TREE_KINDS,
                     default="smooth")
    rep.add_argument("--delta", type=float, default=0.01)
    rep.add_argument("--sigma", type=float, default=1.0)
    rep.add_argument("--kappa", type=float, default=None)
    rep.add_argument("--max-iter", type=int, default=1000)
    rep.add_argument("--learning-rate", type=float, default=None)
    rep.add_argument("--interpolate", action="store_true")
    rep.add_argument("--threshold", type=float, default=1e-8)
    rep.add_argument("--rule", choices=("dp", "rr", "dp2step", "rr2step"), default="dp",
                     help="boosting stopping rule")
    rep.add_argument("--mc-runs", type=int, default=100)
    rep.add_argument("--cores", type=int, default=1)
    rep.add_argument("--seed", type=int, default=0)
    rep.add_argument("--out", required=True)

    cmp_ = sub.add_parser("compare", help="cross-estimator study on phillips/gravity")
    cmp_.add_argument("--problem", choices=("phillips", "gravity"), default="phillips")
    cmp_.add_argument("--n", type=int, default=100)
    cmp_.add_argument("--delta", type=float, default=0.1)
    cmp_.add_argument("--kappa", type=float, default=None)
    cmp_.add_argument("--max-iter", type=int, default=10000)
    cmp_.add_argument("--max-iter-tsvd", type=int, default=None,
                      help="cap for tsvd/cg (default min(n, max-iter))")
    cmp_.add_argument("--mc-runs", type=int, default=100)
    cmp_.add_argument("--cores", type=int, default=1)
    cmp_.add_argument("--seed", type=int, default=0)
    cmp_.add_argument("--out", required=True)

    ben = sub.add_parser("bench", help="timing table for 100-iteration runs")
    ben.add_argument("--n", type=int, default=1000)
    ben.add_argument("--iters", type=int, default=100)
    ben.add_argument("--repeats", type=int, default=1)
    ben.add_argument("--seed", type=int, default=0)
    ben.add_argument("--out", default=None, help="optional CSV output")
    return parser


def _apply_config(parser, args, argv):
    if args.config is None:
        return args
    try:
        pairs = {}
        with open(args.config) as handle:
            for line_no, raw in enumerate(handle, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ValueError("line %d is not key=value" % line_no)
                key, value = line.split("=", 1)
                pairs[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        parser.error("cannot read config: %s" % exc)

    provided = set()
    for token in argv:
        if token.startswith("--"):
            provided.add(token[2:].split("=", 1)[0].replace("-", "_"))
    valid = set(vars(args))
    for key, value in pairs.items():
        if key not in valid:
            parser.error("unknown config key %r" % key)
        if key in provided:
            continue  # explicit flags win
        current = getattr(args, key)
        if isinstance(current, bool):
            setattr(args, key, value.lower() in ("1", "true", "yes", "on"))
        elif isinstance(current, int):
            setattr(args, key, int(value))
        elif isinstance(current, float):
            setattr(args, key, float(value))
        else:
            setattr(args, key, value)
    return args


# -- datagen -----------------------------------------------------------------


def _cmd_datagen(args):
    meta = {"rng": RNG_ALGORITHM, "seed": args.seed, "problem": args.problem}
    if args.problem == "diagonal":
        inst = datagen.diagonal_problem(args.n, args.signal, args.delta, args.seed)
        stem = args.out
        _write_vector_csv(stem + "_design.csv", inst.design.diagonal,
                          {**meta, "component": "design-diagonal"})
        _write_vector_csv(stem + "_signal.csv", inst.true_signal,
                          {**meta, "component": "signal"})
        _write_vector_csv(stem + "_response.csv", inst.response,
                          {**meta, "component": "response"})
        _write_vector_csv(stem + "_noise.csv", inst.noise, {**meta, "component": "noise"})
        print("wrote %s_{design,signal,response,noise}.csv" % stem)
    elif args.problem in ("phillips", "gravity"):
        if args.problem == "phillips":
            design, signal = datagen.phillips(args.n)
        else:
            design, signal = datagen.gravity(args.n, args.depth)
        _write_matrix_csv(args.out + "_design.csv", design.to_dense(),
                          {**meta, "component": "design"})
        _write_vector_csv(args.out + "_signal.csv", signal, {**meta, "component": "signal"})
        print("wrote %s_{design,signal}.csv" % args.out)
    elif args.problem == "gamma-sparse":
        _write_vector_csv(args.out, datagen.gamma_sparse_signal(args.p, args.gamma), meta)
        print("wrote %s" % args.out)
    elif args.problem == "s-sparse":
        magnitude = args.magnitude if args.magnitude is not None else 10.0 / args.sparsity
        _write_vector_csv(args.out, datagen.s_sparse_signal(args.p, args.sparsity, magnitude),
                          meta)
        print("wrote %s" % args.out)
    elif args.problem == "gaussian-design":
        _write_matrix_csv(args.out, datagen.gaussian_design(args.n, args.p, args.seed), meta)
        print("wrote %s" % args.out)
    else:
        inst = datagen.additive_model(args.kind, args.n, args.sigma, args.seed)
        _write_matrix_csv(args.out + "_design.csv", inst.covariates,
                          {**meta, "component": "design"})
        _write_vector_csv(args.out + "_response.csv", inst.response,
                          {**meta, "component": "response"})
        _write_vector_csv(args.out + "_signal.csv", inst.true_function_values,
                          {**meta, "component": "signal-values"})
        _write_vector_csv(args.out + "_noise.csv", inst.noise, {**meta, "component": "noise"})
        print("wrote %s_{design,response,signal,noise}.csv" % args.out)
    return 0


# -- estimate ----------------------------------------------------------------


def _boost_signal(name, p):
    if name.startswith("gamma"):
        return datagen.gamma_sparse_signal(p, float(name[len("gamma"):]))
    s = int(name[1:])
    return datagen.s_sparse_signal(p, s, 10.0 / s)


def _cmd_estimate(args):
    if args.kind == "tree":
        inst = datagen.additive_model(args.kind_additive, args.n, args.sigma, args.seed)
        kappa = args.kappa if args.kappa is not None else args.sigma**2
        alg = RegressionTree(inst.covariates, inst.response,
                             true_signal=inst.true_function_values,
                             true_noise_vector=inst.noise)
        stop = alg.get_discrepancy_stop(kappa, args.max_iter, interpolated=args.interpolate)
        oracle = alg.get_balanced_oracle(args.max_iter)
        residual = float(np.mean((inst.response - alg.predict(inst.covariates, stop)) ** 2))
        print("estimator=tree stop=%g reached=%s residual=%.6g oracle=%g"
              % (stop.value, stop.reached, residual, oracle.value))
        return 0
    if args.kind == "boost":
        beta = _boost_signal(args.signal if args.signal in BOOST_SIGNALS else "gamma3", args.p)
        design = datagen.gaussian_design(args.n, args.p, args.seed)
        rng = make_rng(args.seed + 1)
        response = design @ beta + args.sigma * rng.standard_normal(args.n)
        alg = L2Boost(design, response, true_coefficients=beta)
        kappa = args.kappa if args.kappa is not None else alg.get_noise_estimate().sigma_hat2
        stop = alg.get_discrepancy_stop(kappa, args.max_iter)
        two_step = alg.get_aic_iteration(max_iteration=int(stop.value))
        print("estimator=boost stop=%g reached=%s two_step=%d residual=%.6g"
              % (stop.value, stop.reached, two_step,
                 alg.log.residual_norm2[int(stop.value)]))
        return 0

    signal = args.signal if args.signal in SIGNAL_CHOICES else "smooth"
    inst = datagen.diagonal_problem(args.n, signal, args.delta, args.seed)
    kappa = args.kappa if args.kappa is not None else args.n * args.delta**2
    if args.kind == "tsvd":
        alg = TruncatedSvd(inst.design, inst.response, inst.true_signal, inst.noise_level)
        stop = alg.get_discrepancy_stop(kappa, args.max_iter)
        oracle = alg.get_weak_balanced_oracle(args.max_iter)
    elif args.kind == "landweber":
        alg = Landweber(inst.design, inst.response, learning_rate=args.learning_rate,
                        true_signal=inst.true_signal, true_noise_level=inst.noise_level)
        stop = alg.get_discrepancy_stop(kappa, args.max_iter)
        oracle = alg.get_weak_balanced_oracle(args.max_iter)
    else:
        alg = ConjugateGradients(inst.design, inst.response, true_signal=inst.true_signal,
                                 true_noise_level=inst.noise_level,
                                 computation_threshold=args.threshold)
        stop = alg.get_discrepancy_stop(kappa, args.max_iter, interpolation=args.interpolate)
        oracle = alg.get_weak_empirical_oracle(args.max_iter)
    residual = alg.log.residual_norm2[min(int(np.ceil(stop.value)), alg.iteration)]
    print("estimator=%s stop=%g reached=%s residual=%.6g oracle=%g"
          % (args.kind, stop.value, stop.reached, residual, oracle.value))
    return 0


# -- replicate -----------------------------------------------------------------


def _cmd_replicate(args):
    meta = {
        "base_seed": args.seed, "estimator": args.kind, "mc_runs": args.mc_runs,
        "max_iteration": args.max_iter, "n": args.n,
    }
    if args.kind == "tree":
        result = simulation.run_tree_study(
            args.kind_additive, args.n, args.sigma, critical_value=args.kappa,
            max_depth=args.max_iter, monte_carlo_runs=args.mc_runs,
            base_seed=args.seed, cores=args.cores)
        rule = "dp-interp" if args.interpolate else "dp"
        records = [r for r in result.records if r.stop_rule == rule]
        meta.update(kind=args.kind_additive, sigma=args.sigma, rule=rule,
                    kappa=args.kappa if args.kappa is not None else args.sigma**2)
        simulation.write_records_csv(args.out, records, meta)
        summary = simulation.aggregate(records)
    elif args.kind == "boost":
        beta = _boost_signal(args.signal if args.signal in BOOST_SIGNALS else "gamma3", args.p)
        design = datagen.gaussian_design(args.n, args.p, args.seed + 10**6)
        params = simulation.SimulationParameters(
            design=design, true_signal=beta, true_noise_level=args.sigma,
            monte_carlo_runs=args.mc_runs, cores=args.cores, max_iteration=args.max_iter,
            base_seed=args.seed, critical_value=args.kappa, rule=args.rule)
        result = simulation.run(params, "boost")
        meta.update(p=args.p, signal=args.signal, sigma=args.sigma, rule=args.rule,
                    kappa="noise-estimate" if args.kappa is None else args.kappa)
        simulation.write_records_csv(args.out, result.records, meta)
        summary = simulation.aggregate(result)
    else:
        signal = args.signal if args.signal in SIGNAL_CHOICES else "smooth"
        inst = datagen.diagonal_problem(args.n, signal, args.delta, seed=0)
        params = simulation.SimulationParameters(
            design=inst.design, true_signal=inst.true_signal, true_noise_level=args.delta,
            monte_carlo_runs=args.mc_runs, cores=args.cores, max_iteration=args.max_iter,
            base_seed=args.seed, critical_value=args.kappa,
            learning_rate=args.learning_rate, interpolation=args.interpolate,
            computation_threshold=args.threshold)
        result = simulation.run(params, args.kind)
        meta.update(signal=signal, delta=args.delta,
                    kappa=params.default_critical_value())
        simulation.write_records_csv(args.out, result.records, meta)
        summary = simulation.aggregate(result)
    for row in summary:
        print(" ".join("%s=%s" % (k, v) for k, v in row.items()))
    print("wrote %s" % args.out)
    return 0


# -- compare -------------------------------------------------------------------


def _cmd_compare(args):
    if args.problem == "phillips":
        design, signal = datagen.phillips(args.n)
    else:
        design, signal = datagen.gravity(args.n)
    kappa = args.kappa if args.kappa is not None else args.n * args.delta**2
    cap = args.max_iter_tsvd if args.max_iter_tsvd is not None else min(args.n, args.max_iter)
    all_records = []
    for kind, max_iter in (("tsvd", cap), ("landweber", args.max_iter), ("cg", cap)):
        params = simulation.SimulationParameters(
            design=design, true_signal=signal, true_noise_level=args.delta,
            monte_carlo_runs=args.mc_runs, cores=args.cores, max_iteration=max_iter,
            base_seed=args.seed, critical_value=kappa, collect="stops")
        result = simulation.run(params, kind)
        all_records.extend(result.records)
    meta = {"problem": args.problem, "n": args.n, "delta": args.delta, "kappa": kappa,
            "base_seed": args.seed, "mc_runs": args.mc_runs,
            "max_iteration": args.max_iter}
    simulation.write_records_csv(args.out, all_records, meta)
    for row in simulation.aggregate(all_records):
        print(" ".join("%s=%s" % (k, v) for k, v in row.items()))
    print("wrote %s" % args.out)
    return 0


# -- bench ---------------------------------------------------------------------


def _bench_problems(n, seed):
    rng = make_rng(seed)
    problems = {}
    gdesign, gsignal = datagen.gravity(n)
    problems["gravity"] = (gdesign, gdesign.matvec(gsignal)
                           + 0.01 * rng.standard_normal(n))
    pn = n - n % 4 if n % 4 else n
    pdesign, psignal = datagen.phillips(pn)
    problems["phillips"] = (pdesign, pdesign.matvec(psignal)
                            + 0.01 * rng.standard_normal(pn))
    for kind in SIGNAL_CHOICES[::-1]:
        inst = datagen.diagonal_problem(n, kind, 0.01, seed)
        problems[kind] = (inst.design, inst.response)
    return problems


def _cmd_bench(args):
    problems = _bench_problems(args.n, args.seed)
    estimators = ("tsvd", "landweber", "cg")
    rows = []
    for name, (design, response) in problems.items():
        row = {"data": name}
        for kind in estimators:
            times = []
            completed = None
            for _ in range(args.repeats):
                if kind == "tsvd":
                    alg = TruncatedSvd(design, response)
                elif kind == "landweber":
                    alg = Landweber(design, response)
                else:
                    alg = ConjugateGradients(design, response)
                iters = min(args.iters, min(design.shape))
                start = time.perf_counter()
                alg.iterate(iters)
                times.append(time.perf_counter() - start)
                completed = alg.iteration
            row[kind] = float(np.mean(times))
            row["%s_iterations" % kind] = completed
        rows.append(row)

    header = ["data"] + [e for e in estimators] + ["%s_iterations" % e for e in estimators]
    print("%-12s" % "data" + "".join("%14s" % e for e in estimators))
    for row in rows:
        print("%-12s" % row["data"]
              + "".join("%14.6f" % row[e] for e in estimators))
    if args.out:
        with open(args.out, "w", newline="") as handle:
            handle.write("# n=%d iters=%d repeats=%d seed=%d\n"
                         % (args.n, args.iters, args.repeats, args.seed))
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([row["data"]]
                                + [simulation.format_float(row[e]) for e in estimators]
                                + [row["%s_iterations" % e] for e in estimators])
        print("wrote %s" % args.out)
    return 0


def main(argv=None):
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args = _apply_config(parser, args, argv)
    commands = {
        "datagen": _cmd_datagen,
        "estimate": _cmd_estimate,
        "replicate": _cmd_replicate,
        "compare": _cmd_compare,
        "bench": _cmd_bench,
    }
    try:
        return commands[args.command](args)
    except (SeqstopError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print("failure: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
