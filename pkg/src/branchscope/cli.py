"""Command-line entry point: ``branchscope {solve,simulate,ensemble,check}``.

Exit status: 0 on success, 1 when a check or an ensemble fails, 2 on usage
or configuration errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import acceptance, engine, formats, stats
from . import config as cfgmod
from .errors import BranchscopeError, ConfigError, ModelRejected
from .malthus import solve_malthus
from .model import catalogue

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _threads(value):
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("--threads must be at least 1")
    return n


def _seed(value):
    n = int(value, 0)
    if not 0 <= n < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="branchscope", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, run_flags=True):
        p.add_argument("--config", help="TOML configuration file")
        p.add_argument("--model", help=f"catalogue model ({', '.join(catalogue())}) or a TOML file")
        p.add_argument("--threads", type=_threads, default=1, help="maximum worker threads")
        p.add_argument("--backend", choices=("cython", "python"), help="force a kernel backend")
        if run_flags:
            p.add_argument("--t", type=float, help="horizon")
            p.add_argument("--seed", type=_seed)
            p.add_argument("--window", type=float, help="observation window A")
            p.add_argument("--cap", type=int, help="maximum number of individuals per run")
            p.add_argument("--order", choices=("event", "depth"), help="kernel traversal order")

    p = sub.add_parser("solve", help="solve the Malthusian equation and print the constants")
    common(p, run_flags=False)
    p.add_argument("--t", type=float, help="also print the characteristic length at t")

    p = sub.add_parser("simulate", help="simulate one tree and print it as JSON")
    common(p)
    p.add_argument("--replicate", type=int, default=0)

    p = sub.add_parser("ensemble", help="run an ensemble and write JSON and CSV outputs")
    common(p)
    p.add_argument("--replicates", type=int)
    p.add_argument("--out", help="output directory (overrides output.dir)")

    p = sub.add_parser("check", help="run the acceptance suite")
    p.add_argument("--config", help="TOML file; its run.seed seeds the suite")
    p.add_argument("--threads", type=_threads, default=1)
    p.add_argument("--backend", choices=("cython", "python"))
    p.add_argument("--only", type=int, action="append", metavar="N",
                   help="run only criterion N (repeatable)")
    # fault-injection hook for testing the exit-status contract
    p.add_argument("--perturb-alpha", type=float, default=0.0, help=argparse.SUPPRESS)
    return parser


# --------------------------------------------------------------------------
# configuration assembly


def _model_from_arg(name):
    models = catalogue()
    if name in models:
        return models[name]
    path = Path(name)
    if path.suffix == ".toml" and path.exists():
        try:
            data = cfgmod.tomllib.loads(path.read_text(encoding="utf-8"))
        except cfgmod.tomllib.TOMLDecodeError as exc:
            raise UsageError(f"{path}: {exc}") from exc
        return cfgmod.build_model(data.get("model", data))
    raise UsageError(f"unknown model {name!r}; choose one of {', '.join(models)} or a TOML file")


def _env_seed():
    env = os.environ.get(cfgmod.SEED_ENV)
    if env in (None, ""):
        return None
    try:
        return _seed(env)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise UsageError(f"{cfgmod.SEED_ENV} is not a valid seed: {env!r}") from exc


def load(args) -> cfgmod.Config:
    """Config from --config (or defaults), with --model and run flags applied on top."""
    if args.config:
        conf = cfgmod.parse_config(args.config)
    else:
        env = _env_seed()
        conf = cfgmod.Config(
            model=catalogue()["exp"],
            run=engine.SimulationConfig(horizon=10.0, seed=0 if env is None else env),
        )
    if args.model:
        conf.model = _model_from_arg(args.model)
    overrides = {k: getattr(args, k, None) for k in ("t", "seed", "window", "cap", "order", "replicates")}
    return conf.with_overrides(**overrides)


# --------------------------------------------------------------------------
# subcommands


def cmd_solve(args, out):
    if args.config:
        model = cfgmod.parse_config(args.config).model
    else:
        model = catalogue()["exp"]
    if args.model:
        model = _model_from_arg(args.model)
    profile = solve_malthus(model)
    values = profile.to_dict()
    if args.t is not None:
        values["ell_t"] = profile.characteristic_length(args.t)
    out.write(f"model={model.label}\n")
    for key, value in values.items():
        out.write(f"{key}={formats.fmt_float(value)}\n")
    out.write(formats.dumps(values))
    return EXIT_OK


def cmd_simulate(args, out):
    conf = load(args)
    profile = solve_malthus(conf.model)
    result = engine.run(conf.model, profile, conf.run, args.replicate, args.backend)
    out.write(formats.dumps(result.to_dict()))
    return EXIT_OK


def cmd_ensemble(args, out):
    conf = load(args)
    if args.out:
        conf.output.dir = args.out
    profile = solve_malthus(conf.model)
    report = stats.run_ensemble(
        conf.model, profile, conf.run, conf.replicates, conf.analysis, args.threads, args.backend
    )
    paths = {name: conf.output.path(name) for name in ("json", "atoms_csv", "maxima_csv")}
    formats.write_text(paths["json"], formats.dumps(report.to_dict()))
    formats.write_text(paths["atoms_csv"], formats.atoms_csv(report.runs))
    formats.write_text(paths["maxima_csv"], formats.maxima_csv(report.runs))
    out.write(
        f"{report.survived} survived, {report.extinct} extinct, {report.capped} capped "
        f"of {report.requested}\n"
    )
    for p in paths.values():
        out.write(f"wrote {p}\n")
    return EXIT_OK


def cmd_check(args, out):
    seed = acceptance.SUITE_SEED
    if args.config:
        seed = cfgmod.parse_config(args.config).run.seed
    elif (env := _env_seed()) is not None:
        seed = env
    suite = acceptance.Suite(
        seed=seed, threads=args.threads, backend=args.backend, alpha_shift=args.perturb_alpha
    )
    only = args.only
    if only and any(n not in acceptance.CRITERIA for n in only):
        raise UsageError(f"criteria are numbered 1 to {len(acceptance.CRITERIA)}")
    outcomes = acceptance.run_all(suite, only, stream=out)
    failed = [o.number for o in outcomes if not o.passed]
    out.write(f"{len(outcomes) - len(failed)} of {len(outcomes)} criteria passed\n")
    return EXIT_FAIL if failed else EXIT_OK


COMMANDS = {"solve": cmd_solve, "simulate": cmd_simulate, "ensemble": cmd_ensemble, "check": cmd_check}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the message
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return COMMANDS[args.command](args, out)
    except (UsageError, ConfigError, ModelRejected) as exc:
        print(f"branchscope: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BranchscopeError as exc:
        print(f"branchscope: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
