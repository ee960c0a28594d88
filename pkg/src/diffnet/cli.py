"""Command-line entry point: ``diffnet simulate|sweep|theory``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .harness import SWEEP_PARAMS, ConfigError, ScenarioConfig, run_scenario, sweep, theory_for
from .metrics import to_db


def _load(args):
    cfg = ScenarioConfig.load(args.config)
    if getattr(args, "realizations", None) is not None:
        cfg.realizations = args.realizations
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "iterations", None) is not None:
        cfg.iterations = args.iterations
    cfg.validate()
    return cfg


def _values(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def cmd_simulate(args):
    cfg = _load(args)
    out = Path(args.out) if args.out else Path("runs") / cfg.name
    t0 = time.perf_counter()
    summaries = run_scenario(cfg, out)
    for label, s in summaries.items():
        ss = s.steady_state
        line = f"{label:28s} R={s.realizations}"
        if ss:
            line += (f"  nmsd_ss={float(to_db(ss['nmsd'])):8.2f} dB  v_s_ss={ss['v_s']:6.2f}"
                     f"  v_t_ss={ss['v_t']:6.2f}")
        if s.diverged:
            line += f"  diverged={len(s.diverged)}"
        print(line)
    print(f"wrote {out} ({time.perf_counter() - t0:.1f} s)")
    return 0


def cmd_sweep(args):
    cfg = _load(args)
    if not args.values:
        raise ConfigError("sweep.values", "empty value list")
    out = Path(args.out) if args.out else Path("runs") / f"{cfg.name}_sweep_{args.param}"
    rows = sweep(cfg, args.param, args.values, out)
    print(f"{'value':>10s} {'algorithm':28s} {'nmsd_ss':>9s} {'v_s_ss':>7s} {'v_t_ss':>7s} "
          f"{'vs_lower':>8s} {'vs_upper':>8s}")
    for r in rows:
        cells = [r[k] if r[k] is not None else float("nan")
                 for k in ("nmsd_ss", "v_s_ss", "v_t_ss", "vs_lower", "vs_upper")]
        print(f"{r['value']:10g} {r['algorithm']:28s} {cells[0]:9.2f} {cells[1]:7.2f} "
              f"{cells[2]:7.2f} {cells[3]:8.2f} {cells[4]:8.2f}")
    print(f"wrote {out}")
    return 0


def cmd_theory(args):
    cfg = _load(args)
    print(json.dumps(theory_for(cfg), indent=2, sort_keys=True))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="diffnet", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="scenario JSON file or preset name")
        p.add_argument("--realizations", "-R", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--iterations", "-N", type=int)

    p = sub.add_parser("simulate", help="run every algorithm of a scenario")
    common(p)
    p.add_argument("--out", help="output directory (default runs/<name>)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="rerun a scenario over a parameter grid")
    common(p)
    p.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    p.add_argument("--values", required=True, type=_values)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("theory", help="print closed-form predictions as JSON")
    p.add_argument("config")
    p.set_defaults(func=cmd_theory)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
