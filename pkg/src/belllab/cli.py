"""Command-line driver.

Exit codes: 0 ok, 2 usage or validation error, 3 I/O error, 4 solver failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from typing import Optional

from belllab.config import ConfigError, RunConfig, config_from_dict, load_config, parse_mode
from belllab.core import DomainError, UnsupportedOperationError
from belllab.estimators import accumulate
from belllab.feasibility import SolverFailure, solve_feasibility, solve_feasibility_relaxed
from belllab.models import run_trials
from belllab.report import (
    LogFormatError,
    build_report,
    contexts_from_json,
    read_trial_log,
    report_json,
    trial_log_text,
)

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_SOLVER = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _config(args) -> RunConfig:
    if args.config is None:
        cfg = config_from_dict({})
    else:
        try:
            cfg = load_config(args.config)
        except OSError as e:
            raise CliError(f"cannot read config: {e}", EXIT_IO)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        if args.trials < 1:
            raise CliError("--trials must be at least 1", EXIT_USAGE)
        changes["n_trials"] = args.trials
    if getattr(args, "mode", None) is not None:
        changes["mode"] = parse_mode(args.mode)
    return dataclasses.replace(cfg, **changes) if changes else cfg


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as e:
        raise CliError(f"cannot write {path}: {e}", EXIT_IO)


def _simulate(cfg: RunConfig):
    return run_trials(cfg.model, cfg.n_trials, cfg.seed)


def cmd_simulate(args) -> int:
    cfg = _config(args)
    batch = _simulate(cfg)
    out = args.out or cfg.trials_path
    if out is None:
        raise CliError("no trial log path: pass --out or set [output] trials", EXIT_USAGE)
    _write(out, trial_log_text(batch))
    counts = accumulate(batch)
    print(f"simulated {len(batch)} trials ({cfg.model.kind.value}, seed {cfg.seed}) -> {out}",
          file=sys.stderr)
    for name, block in counts.to_dict().items():
        print(f"  {name:5s} " + " ".join(f"{k}={v}" for k, v in block.items()), file=sys.stderr)
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = _config(args)
    if args.log is not None:
        try:
            with open(args.log, newline="") as fh:
                batch = read_trial_log(fh)
        except OSError as e:
            raise CliError(f"cannot read trial log: {e}", EXIT_IO)
        if args.config is None:
            # Analyses follow the log's contents when no config says otherwise.
            analyses = ("space1", "frequentism", "feasibility") + \
                (("space2",) if batch.quadruples is not None else ())
            cfg = dataclasses.replace(cfg, analyses=analyses)
    else:
        batch = _simulate(cfg)
    report = build_report(batch, cfg, trial_log=args.log, model_known=args.config is not None
                          or args.log is None)
    _write(args.out or cfg.report_path, report_json(report))
    return EXIT_OK


def cmd_report(args) -> int:
    cfg = _config(args)
    batch = _simulate(cfg)
    trials_out = args.trials_out or cfg.trials_path
    if trials_out is not None:
        _write(trials_out, trial_log_text(batch))
    _write(args.out or cfg.report_path, report_json(build_report(batch, cfg)))
    return EXIT_OK


def cmd_feasibility(args) -> int:
    try:
        with open(args.contexts) as fh:
            d = json.load(fh)
    except OSError as e:
        raise CliError(f"cannot read contexts file: {e}", EXIT_IO)
    except json.JSONDecodeError as e:
        raise CliError(f"{args.contexts}: {e}", EXIT_USAGE)
    dists, n_pair = contexts_from_json(d)
    cert = solve_feasibility(dists, args.tol)
    out = {"certificate": cert.to_dict()}
    if n_pair is not None:
        out["relaxed"] = solve_feasibility_relaxed(dists, n_pair, args.k_sigma, args.tol).to_dict()
    print(f"verdict: {cert.verdict.value}")
    _write(args.out, report_json(out))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="belllab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, trials=True):
        sp.add_argument("--config", help="TOML run configuration")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--mode", help="interpretation mode")
        if trials:
            sp.add_argument("--trials", type=int)
        sp.add_argument("--out", help="output path ('-' for stdout)")

    sp = sub.add_parser("simulate", help="generate trials and write the CSV log")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("analyze", help="analyze a trial log (or a config's simulation)")
    common(sp)
    sp.add_argument("--log", help="CSV trial log")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("report", help="simulate and analyze in one step")
    common(sp)
    sp.add_argument("--trials-out", help="also write the trial log here")
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("feasibility", help="joint-distribution test for a contexts JSON file")
    sp.add_argument("contexts")
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--k-sigma", type=float, default=3.0)
    sp.add_argument("--out", help="certificate path ('-' for stdout)")
    sp.set_defaults(func=cmd_feasibility)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return args.func(args)
    except CliError as e:
        print(f"belllab: {e}", file=sys.stderr)
        return e.code
    except (ConfigError, LogFormatError, DomainError, UnsupportedOperationError) as e:
        print(f"belllab: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SolverFailure as e:
        print(f"belllab: solver failure: {e}", file=sys.stderr)
        for step in e.trace[-20:]:
            print(f"  {step}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as e:
        print(f"belllab: I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
