"""Steady-state sampled nodes against beta_r for the three combination rules.

Covers both noise scenarios (heterogeneous ``fig4a`` and homogeneous
``fig4b``) and writes one sweep table per (scenario, rule) pair.
"""

import argparse
from pathlib import Path

from diffnet.harness import ScenarioConfig, sweep

BETA_R = (0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 20.0)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/sampled_nodes")
    parser.add_argument("--realizations", "-R", type=int, default=20)
    parser.add_argument("--iterations", "-N", type=int, default=20000)
    args = parser.parse_args()

    for preset in ("fig4a", "fig4b"):
        for rule in ("uniform", "metropolis", "acw"):
            cfg = ScenarioConfig.load(preset)
            cfg.combiner, cfg.realizations, cfg.iterations = rule, args.realizations, args.iterations
            noise = cfg.build_noise(cfg.topology.V)
            values = [b for b in BETA_R if b * noise.sigma_max_sq >= noise.sigma_min_sq]
            rows = sweep(cfg, "beta_r", values, Path(args.out) / preset / rule)
            print(f"{preset} {rule}")
            for r in rows:
                print(f"  beta_r={r['value']:<6g} v_s={r['v_s_ss']:6.2f} "
                      f"bounds=[{r['vs_lower']:.2f}, {r['vs_upper']:.2f}]")


if __name__ == "__main__":
    main()
