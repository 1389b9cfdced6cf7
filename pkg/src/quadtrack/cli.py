"""Command line front end: run scenarios, check gain conditions, verify
telemetry files offline."""

import argparse
import json
import sys

import numpy as np

from .analysis import condition_matrices
from .config import ScenarioConfig, load_config, scenario_config
from .harness import DivergenceError, read_telemetry, run_scenario, \
    write_telemetry
from .plant import ConfigurationError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_CONDITIONS = 4


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="quadtrack",
        description="perception-feedback quadrotor tracking simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a closed-loop scenario")
    run.add_argument("--scenario", type=int, default=1, choices=(1, 2, 3, 4))
    run.add_argument("--config", default=None, help="flat key=value file")
    run.add_argument("--out", required=True, help="telemetry CSV path")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--duration", type=float, default=None)
    run.add_argument("--dt", type=float, default=None)
    run.add_argument("--velocity-free", action="store_true")
    run.add_argument("--apparent-accel", action="store_true")
    run.add_argument("--force", action="store_true",
                     help="run even when gain conditions fail")
    run.add_argument("--strict", action="store_true",
                     help="fail if the post-run condition report has "
                          "violations")
    run.add_argument("--engine", choices=("numba", "python"), default=None)

    chk = sub.add_parser("check-gains", help="evaluate all gain conditions")
    chk.add_argument("--config", default=None)

    ver = sub.add_parser("verify",
                         help="re-check analysis inequalities on a telemetry "
                              "file")
    ver.add_argument("--telemetry", required=True)
    return ap


def _load(args):
    overrides = {"scenario": getattr(args, "scenario", 1)}
    for name in ("seed", "duration", "dt", "engine"):
        val = getattr(args, name, None)
        if val is not None:
            overrides[name] = val
    if getattr(args, "velocity_free", False):
        overrides["velocity_free"] = True
    if getattr(args, "apparent_accel", False):
        overrides["apparent_accel"] = True
    if args.config:
        cfg = load_config(args.config, **{k: v for k, v in overrides.items()
                                          if k != "engine"})
    else:
        seed = overrides.pop("seed", 0)
        overrides.pop("engine", None)
        cfg = scenario_config(overrides.pop("scenario"), seed=seed,
                              **overrides)
    if getattr(args, "engine", None):
        cfg.engine = args.engine
    return cfg


def _static_report(cfg):
    _, _, rep = condition_matrices(
        cfg.pos_gains, cfg.att_gains, cfg.obs_gains, cfg.refs, cfg.params,
        mu_d=cfg.pos_gains.mu_d)
    return rep


def _print_report(rep, out=None):
    out = out if out is not None else sys.stdout
    for cond in rep.conditions:
        mark = "ok  " if cond.satisfied else "FAIL"
        out.write("%s  %-50s margin=%+.6g\n"
                  % (mark, cond.name, cond.margin))


def cmd_run(args):
    cfg = _load(args)
    rep = _static_report(cfg)
    if not rep.all_satisfied and not args.force:
        sys.stderr.write("gain conditions failed (use --force to run "
                         "anyway):\n")
        _print_report(rep, sys.stderr)
        return EXIT_CONDITIONS
    try:
        tel, post = run_scenario(cfg)
    except DivergenceError as exc:
        write_telemetry(exc.telemetry, args.out)
        sys.stderr.write("divergence: %s (partial telemetry written to %s)\n"
                         % (exc, args.out))
        return EXIT_DIVERGENCE
    write_telemetry(tel, args.out)
    report_path = args.out + ".conditions.json"
    with open(report_path, "w") as fh:
        json.dump(post.as_dict(), fh, indent=2)
    n = tel.data.shape[0]
    print("scenario %d: %d rows -> %s" % (cfg.scenario, n, args.out))
    print("condition report -> %s (%s)"
          % (report_path,
             "all satisfied" if post.all_satisfied else "violations"))
    if args.strict and not post.all_satisfied:
        _print_report(post, sys.stderr)
        return EXIT_CONDITIONS
    return EXIT_OK


def cmd_check_gains(args):
    cfg = _load_check(args)
    rep = _static_report(cfg)
    _print_report(rep)
    return EXIT_OK if rep.all_satisfied else EXIT_CONDITIONS


def _load_check(args):
    if args.config:
        return load_config(args.config)
    return ScenarioConfig()


def cmd_verify(args):
    tel = read_telemetry(args.telemetry)
    problems = []
    t = tel.t
    if np.any(np.diff(t) <= 0):
        problems.append("time column is not strictly increasing")
    if not np.all(np.isfinite(tel.data)):
        problems.append("non-finite values present")
    if np.any(tel.column("gap_residual") < -1e-9):
        problems.append("attitude-gap bound violated")
    if np.any(tel.column("f_margin_low") < 0):
        problems.append("thrust below its guaranteed lower bound")
    if np.any(tel.column("f_margin_high") < 0):
        problems.append("thrust above its guaranteed upper bound")
    if np.any(tel.column("att_err") < -1e-12) \
            or np.any(tel.column("att_err") > 2.0 + 1e-12):
        problems.append("attitude error outside [0, 2]")
    if problems:
        for p in problems:
            print("FAIL  " + p)
        return EXIT_CONDITIONS
    print("ok  %d rows, all offline inequalities hold" % tel.data.shape[0])
    return EXIT_OK


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "check-gains":
            return cmd_check_gains(args)
        return cmd_verify(args)
    except (ConfigurationError, FileNotFoundError) as exc:
        sys.stderr.write("config error: %s\n" % exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
