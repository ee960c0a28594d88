"""Steady-state NMSD and sampled nodes against Tr[Q] (random-walk tracking).

Uses ``fig9`` (AS-dNLMS) or ``fig10`` (ASC-dNLMS) and sweeps Tr[Q] over
1e-8 ... 1e-2.
"""

import argparse
from pathlib import Path

from diffnet.harness import ScenarioConfig, sweep

TRQ = (1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("preset", nargs="?", default="fig9", choices=("fig9", "fig10"))
    parser.add_argument("--out", default="runs/tracking")
    parser.add_argument("--realizations", "-R", type=int, default=20)
    parser.add_argument("--iterations", "-N", type=int, default=20000)
    args = parser.parse_args()

    cfg = ScenarioConfig.load(args.preset)
    cfg.realizations, cfg.iterations = args.realizations, args.iterations
    rows = sweep(cfg, "trq", TRQ, Path(args.out) / args.preset)
    for r in rows:
        print(f"Tr[Q]={r['value']:<8g} {r['algorithm']:22s} nmsd={r['nmsd_ss']:7.2f} dB "
              f"v_s={r['v_s_ss']:6.2f} v_t={r['v_t_ss']:6.2f}")


if __name__ == "__main__":
    main()
