"""``rmadapt`` command line.

Subcommands map onto experiments::

    rmadapt tune      one tuned chain, JSON report (optionally a full trace)
    rmadapt table1    univariate catalog, replicated tuned chains
    rmadapt table2    random-covariance normals, three samplers
    rmadapt curves    oracle ratio curves with reference lines
    rmadapt oracle    oracle sigma* / ratio for one target
    rmadapt mwg-demo  hierarchical Metropolis-within-Gibbs per-block summary

A ``--config`` JSON file supplies any ``ExperimentConfig`` field; flags given
on the command line override it.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import sys

from .experiments import ConfigError, config_from_dict, emit, load_config, run_experiment
from .numerics import DecompositionError
from .oracle import BracketError

SUBCOMMANDS = {"tune": "tune-single", "table1": "table1", "table2": "table2",
               "curves": "curves", "oracle": "oracle", "mwg-demo": "mwg-demo"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON experiment config")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--paper-scale", action="store_true", default=None,
                        help="table2 at m=50, 100000 iterations, 10 replicates")
    common.add_argument("--deterministic", action="store_true", default=None,
                        help="omit the timestamp so reruns are byte-identical")
    common.add_argument("--workers", type=int)
    common.add_argument("--replicates", type=int)
    common.add_argument("--iters", type=int)
    common.add_argument("--p-star", type=float, dest="p_star")
    common.add_argument("--m-star", type=float, dest="m_star")
    common.add_argument("--n0", type=int, dest="n0_override")
    common.add_argument("--target", help="catalog name, e.g. normal, cauchy, beta-3-7")
    common.add_argument("--dim", type=int)
    common.add_argument("--kind", choices=("univariate-catalog", "product-form",
                                           "mvn-random-cov", "multivariate-t"))
    common.add_argument("--conditioning", choices=("ill", "better"))
    common.add_argument("--dof", type=int)
    common.add_argument("--trace-out", metavar="PATH",
                        help="tune: write the chain (.rmt binary, else CSV)")

    p = _Parser(prog="rmadapt", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def _resolve(args) -> dict:
    d = load_config(args.config) if args.config else {}
    d["experiment"] = SUBCOMMANDS[args.command]
    for key in ("seed", "out", "format", "paper_scale", "deterministic", "workers",
                "replicates", "iters", "p_star", "m_star", "n0_override", "trace_out"):
        v = getattr(args, key)
        if v is not None:
            d[key] = v
    t = d.get("target", {})
    t = {"component": t} if isinstance(t, str) else dict(t)
    for key in ("kind", "conditioning", "dof"):
        if getattr(args, key) is not None:
            t[key] = getattr(args, key)
    if args.target is not None:
        if args.command == "table1":
            d["targets"] = [args.target]
        else:
            t["component"] = args.target
    if args.dim is not None:
        if args.command == "table2":
            d["dim"] = args.dim
        else:
            t["dim"] = args.dim
            if args.dim > 1 and t.get("kind", "univariate-catalog") == "univariate-catalog":
                t["kind"] = "product-form"
    if t:
        d["target"] = t
    return d


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = config_from_dict(_resolve(args)).resolved()
        text = run_experiment(cfg)
        emit(text, cfg.out)
    except ConfigError as exc:
        print(f"rmadapt: config error: {exc}", file=sys.stderr)
        return 2
    except (DecompositionError, BracketError, FloatingPointError) as exc:
        print(f"rmadapt: numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
