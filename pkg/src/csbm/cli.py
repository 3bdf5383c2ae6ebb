"""Command-line interface.

Subcommands: sample, cycles, detect, saw, recover, oracle, lr, run, sweep,
summarize.  Tabular output is CSV with a header row; single objects are
JSON.  Exit codes: 0 ok, 1 usage, 2 domain/infeasible, 3 internal.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import cycles, harness, lr_expansion, oracle, recovery, saw
from .errors import DomainError, UsageError
from .model import ModelParams, load_instance, sample_instance, save_instance


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _out_stream(args):
    return open(args.out, "w") if args.out else sys.stdout


def _emit(args, text):
    stream = _out_stream(args)
    stream.write(text)
    if not text.endswith("\n"):
        stream.write("\n")
    if stream is not sys.stdout:
        stream.close()


def _params_from_args(args, n=None, p=None):
    n = n if n is not None else args.n
    if p is None:
        p = getattr(args, "p", None)
    if p:
        return ModelParams.from_np(
            lam=args.lam, mu=args.mu, d=args.d, n=n, p=p
        )
    return ModelParams.from_gamma(
        lam=args.lam, mu=args.mu, d=args.d, gamma=args.gamma, n=n
    )


def _add_param_flags(p, require_n=True):
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    if require_n:
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--p", type=int, default=None)


def build_parser() -> _Parser:
    top = _Parser(prog="csbm", description=__doc__)
    top.add_argument("--seed", type=int, default=0)
    top.add_argument("--threads", type=int, default=1)
    top.add_argument("--out", type=str, default=None)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample an instance to a file")
    _add_param_flags(p)

    p = sub.add_parser("cycles", help="one cycle statistic as a CSV row")
    p.add_argument("--instance", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--budget", type=int, default=cycles.DEFAULT_BUDGET)

    p = sub.add_parser("detect", help="cycle-statistic detection test")
    p.add_argument("--instance", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--level", type=float, default=0.05)
    _add_param_flags(p, require_n=False)

    p = sub.add_parser("saw", help="pair-estimate matrix upper triangle as CSV")
    p.add_argument("--instance", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--method", choices=[saw.EXACT, saw.WALK], default=saw.WALK)
    p.add_argument("--budget", type=int, default=saw.DEFAULT_PATH_BUDGET)

    p = sub.add_parser("recover", help="weak-recovery pipeline, JSON report")
    p.add_argument("--instance", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--method", choices=[saw.EXACT, saw.WALK], default=saw.WALK)

    p = sub.add_parser("oracle", help="brute-force references")
    osub = p.add_subparsers(dest="oracle_command", required=True)
    q = osub.add_parser("lr", help="exact log likelihood ratio, JSON")
    q.add_argument("--instance", required=True)
    _add_param_flags(q, require_n=False)
    q = osub.add_parser("posterior", help="pairwise posterior matrix, CSV")
    q.add_argument("--instance", required=True)
    _add_param_flags(q, require_n=False)
    q = osub.add_parser("cycles", help="naive cycle statistic, JSON")
    q.add_argument("--instance", required=True)
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--l", type=int, required=True)

    p = sub.add_parser("lr", help="limiting log-LR series")
    lsub = p.add_subparsers(dest="lr_command", required=True)
    q = lsub.add_parser("sample", help="draw limiting null log-LR samples, CSV")
    q.add_argument("--K", type=int, default=lr_expansion.DEFAULT_K)
    q.add_argument("--reps", type=int, default=1)
    _add_param_flags(q, require_n=False)
    q = lsub.add_parser("eval", help="plug measured statistics into the series, CSV")
    q.add_argument("--instance", required=True)
    q.add_argument("--K", type=int, default=lr_expansion.DEFAULT_K)
    _add_param_flags(q, require_n=False)

    p = sub.add_parser("run", help="run an experiment config (TOML, schema = 1)")
    p.add_argument("--config", required=True)

    p = sub.add_parser("sweep", help="phase-diagram sweep over a lambda-mu grid")
    p.add_argument("--lambda-grid", dest="lambda_grid", type=float, nargs="+",
                   required=True)
    p.add_argument("--mu-grid", dest="mu_grid", type=float, nargs="+", required=True)
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--task", choices=["detect", "recover"], default="recover")

    p = sub.add_parser("summarize", help="summarize a results CSV")
    p.add_argument("--results", required=True)
    p.add_argument("--task", required=True)
    return top


def _alt_params_like(args, instance):
    return _params_from_args(args, n=instance.n, p=instance.p)


def _dispatch(args) -> None:
    if args.command == "sample":
        params = _params_from_args(args)
        inst = sample_instance(params, args.seed)
        if args.out is None:
            raise UsageError("sample requires --out <file>")
        save_instance(inst, args.out)
        return
    if args.command == "cycles":
        inst = load_instance(args.instance)
        index = cycles.CycleIndex(args.k, args.l)
        rep = cycles.cycle_statistic(inst, index, budget=args.budget)
        m = cycles.theoretical_moments(inst.params, index)
        _emit(
            args,
            "k,l,raw,centered,normalized,null_mean,null_var,alt_mean\n"
            f"{args.k},{args.l},{rep.raw:.17g},{rep.centered:.17g},"
            f"{rep.normalized:.17g},{m.null_mean:.17g},{m.null_variance:.17g},"
            f"{m.alt_mean:.17g}",
        )
        return
    if args.command == "detect":
        inst = load_instance(args.instance)
        res = cycles.detection_test(
            inst, _alt_params_like(args, inst), k=args.k, level=args.level
        )
        _emit(args, json.dumps(res.__dict__))
        return
    if args.command == "saw":
        inst = load_instance(args.instance)
        config = saw.WalkConfig(args.k, args.l, args.method, args.budget)
        P = saw.pair_estimator(inst, config).P
        lines = ["i,j,P_ij"]
        for i in range(inst.n):
            for j in range(i + 1, inst.n):
                lines.append(f"{i},{j},{P[i, j]:.17g}")
        _emit(args, "\n".join(lines))
        return
    if args.command == "recover":
        inst = load_instance(args.instance)
        config = saw.WalkConfig(args.k, args.l, args.method)
        rec = recovery.weak_recovery_pipeline(inst, config, seed=args.seed)
        payload = dict(rec.__dict__)
        payload["sigma_hat"] = [int(s) for s in rec.sigma_hat]
        _emit(args, json.dumps(payload))
        return
    if args.command == "oracle":
        inst = load_instance(args.instance)
        if args.oracle_command == "lr":
            log_l = oracle.exact_log_likelihood_ratio(
                inst, _alt_params_like(args, inst)
            )
            _emit(args, json.dumps({"log_L": log_l}))
        elif args.oracle_command == "posterior":
            M = oracle.bayes_pairwise_posterior(inst, _alt_params_like(args, inst))
            _emit(args, "\n".join(",".join(f"{v:.17g}" for v in row) for row in M))
        else:
            val = oracle.naive_cycle_statistic(inst, cycles.CycleIndex(args.k, args.l))
            _emit(args, json.dumps({"k": args.k, "l": args.l, "value": val}))
        return
    if args.command == "lr":
        trunc = lr_expansion.TruncationConfig(args.K)
        if args.lr_command == "sample":
            params = ModelParams.from_gamma(
                lam=args.lam, mu=args.mu, d=args.d, gamma=args.gamma, n=1000
            )
            samples = lr_expansion.limiting_logLR_samples_H0(
                params, trunc, args.seed, reps=args.reps
            )
            lines = ["rep,logLR"] + [
                f"{i},{v:.17g}" for i, v in enumerate(samples)
            ]
            _emit(args, "\n".join(lines))
        else:
            inst = load_instance(args.instance)
            params = _alt_params_like(args, inst)
            v = lr_expansion.empirical_logLR_from_instance(inst, params, trunc)
            _emit(args, f"instance,logLR\n{args.instance},{v:.17g}")
        return
    if args.command == "run":
        config = harness.load_config(args.config, threads=args.threads)
        rows = harness.run_experiment(config)
        _emit(args, harness.rows_to_csv(rows))
        return
    if args.command == "sweep":
        rows = harness.sweep_phase_diagram(
            args.lambda_grid,
            args.mu_grid,
            {"d": args.d, "gamma": args.gamma, "n": args.n},
            reps=args.reps,
            task=args.task,
            base_seed=args.seed,
            threads=args.threads,
        )
        fields = list(rows[0].keys())
        lines = [",".join(fields)] + [
            ",".join(harness._format_value(r.get(k)) for k in fields) for r in rows
        ]
        _emit(args, "\n".join(lines))
        return
    if args.command == "summarize":
        rows = harness.read_csv(args.results)
        summaries = harness.summarize(rows, args.task)
        _emit(args, json.dumps(summaries, default=float))
        return
    raise UsageError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _dispatch(args)
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 2
    except SystemExit:
        raise
    except Exception as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
