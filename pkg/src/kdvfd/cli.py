"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure,
3 acceptance-threshold failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import identities
from .config import ConfigError, ExperimentConfig, load_config
from .experiment import atomic_write, experiment, fmt, simulate, state_csv
from .grid import PeriodicGrid
from .scheme import BlowUpError, airy_amplification
from .theta import ThetaOperator, verify_norm_bounds

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_ACCEPTANCE = 0, 1, 2, 3
AMP_TOL = 1e-12


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p):
    p.add_argument("--config", help="experiment config (INI)")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--threads", type=int, help="parallel ladder rows")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--format", choices=("csv", "json"), help="report format")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kdvfd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run the scheme once and dump the final state")
    _common(p)
    p.add_argument("--snapshots", action="store_true", help="also dump every accepted step")

    p = sub.add_parser("converge", help="run a refinement ladder and write a rate report")
    _common(p)

    p = sub.add_parser("symbol", help="tabulate the A_theta symbol and the Airy amplification")
    _common(p)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--J", type=int, default=64)
    p.add_argument("--dx", type=float, default=None, help="default 1/J")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--dt", type=float)
    g.add_argument("--r", type=float, help="dt / dx^3")

    p = sub.add_parser("check-identities", help="randomised discrete-calculus checks")
    _common(p)
    p.add_argument("--J", type=int, nargs="+", default=[64])
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--corrupt-operator", action="store_true", help=argparse.SUPPRESS)
    return parser


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.out:
        cfg.output.dir = args.out
    if args.threads is not None:
        cfg.run.threads = args.threads
    if args.seed is not None:
        cfg.run.seed = args.seed
    if args.format:
        cfg.output.format = args.format
    return cfg.validate()


def cmd_simulate(args, out) -> int:
    cfg = _config(args)
    try:
        res = simulate(cfg, snapshots=args.snapshots or cfg.output.snapshots)
    except BlowUpError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    d = cfg.output.dir
    atomic_write(os.path.join(d, "final_state.csv"), state_csv(res.grid, res.final))
    if res.snapshots:
        buf = io.StringIO()
        buf.write("t,x,v\n")
        for _, t, v in res.snapshots:
            buf.write(state_csv(res.grid, v, t).split("\n", 1)[1])
        atomic_write(os.path.join(d, "snapshots.csv"), buf.getvalue())
    summary = res.summary()
    atomic_write(os.path.join(d, "summary.json"),
                 json.dumps(summary, indent=2) + "\n")
    for k, v in summary.items():
        print(f"{k} = {fmt(v)}", file=out)
    return EXIT_OK


def cmd_converge(args, out) -> int:
    cfg = _config(args)
    report = experiment(cfg)
    name = "report." + cfg.output.format
    text = report.to_json() if cfg.output.format == "json" else report.to_csv()
    atomic_write(os.path.join(cfg.output.dir, name), text)
    out.write(report.to_csv())
    print(f"aggregate_rate = {fmt(report.aggregate)}", file=out)
    if report.theory:
        print(f"q_proved = {fmt(report.theory.q_proved)}  q_conjectured = "
              f"{fmt(report.theory.q_conjectured)}", file=out)
    for name, ok, detail in report.checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}", file=out)
    if any(r.flag and r.flag.startswith("failed") for r in report.rows):
        return EXIT_NUMERICAL
    return EXIT_OK if report.passed else EXIT_ACCEPTANCE


def symbol_table(theta: float, dt: float, dx: float, J: int):
    grid = PeriodicGrid(dx * J, J)
    sym = ThetaOperator(theta, dt, grid).symbol().values
    xi = np.arange(J) / J
    amp = airy_amplification(theta, dt, dx, xi)
    return xi, sym, amp


def cmd_symbol(args, out) -> int:
    if args.J < 4:
        raise UsageError("--J must be >= 4")
    dx = args.dx if args.dx is not None else 1.0 / args.J
    dt = args.dt if args.dt is not None else args.r * dx**3
    if not (dx > 0 and dt > 0 and 0 <= args.theta <= 1):
        raise UsageError("need dx > 0, dt > 0 and theta in [0, 1]")
    xi, sym, amp = symbol_table(args.theta, dt, dx, args.J)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "xi", "symbol_re", "symbol_im", "symbol_abs", "amp_re", "amp_im", "amp_abs"])
    for k in range(args.J):
        w.writerow([k, fmt(xi[k]), fmt(sym[k].real), fmt(sym[k].imag), fmt(abs(sym[k])),
                    fmt(amp[k].real), fmt(amp[k].imag), fmt(abs(amp[k]))])
    text = buf.getvalue()
    if args.out:
        atomic_write(os.path.join(args.out, "symbol.csv"), text)
    out.write(text)
    peak = float(np.max(np.abs(amp)))
    unstable = peak > 1 + AMP_TOL
    print(f"max_amp = {fmt(peak)}{'  UNSTABLE: max|amp| > 1' if unstable else ''}", file=out)
    return EXIT_OK


def cmd_check_identities(args, out) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    if any(J < 4 for J in args.J):
        raise UsageError("--J entries must be >= 4")
    seed = args.seed if args.seed is not None else 0
    ops = identities.Operators()
    if args.corrupt_operator:
        ops = identities.Operators(dplus=lambda a, dx: (np.roll(a, -1) - 1.001 * a) / dx)
    failures = []
    for J in args.J:
        rep = identities.check_discrete_identities(args.trials, seed, J, ops=ops)
        for r in rep.results.values():
            print(f"J={J} {'PASS' if r.passed else 'FAIL'} {r.kind} {r.name} worst={r.worst:.3e}",
                  file=out)
            if not r.passed:
                failures.append(f"J={J}:{r.name}")
        for theta in (0.0, 0.5, 1.0):
            for rr in (0.01, 1.0, 100.0):
                grid = PeriodicGrid(1.0, J)
                op = ThetaOperator(theta, rr * grid.dx**3, grid)
                nb = verify_norm_bounds(op, min(args.trials, 200), seed)
                ok = nb.passed()
                print(f"J={J} {'PASS' if ok else 'FAIL'} norm_bounds theta={theta:g} r={rr:g} "
                      f"slack=({nb.lower_slack:.3e},{nb.upper_slack:.3e}) "
                      f"decomposition={nb.decomposition_residual:.3e}", file=out)
                if not ok:
                    failures.append(f"J={J}:norm_bounds(theta={theta:g},r={rr:g})")
    if failures:
        print("failing: " + ", ".join(failures), file=out)
        return EXIT_ACCEPTANCE
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "converge": cmd_converge, "symbol": cmd_symbol,
            "check-identities": cmd_check_identities}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BlowUpError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
