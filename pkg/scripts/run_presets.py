"""Run figure presets and write their CSV/JSON artifacts.

    python scripts/run_presets.py fig3 fig11 --out runs --realizations 20
"""

import argparse
from pathlib import Path

from diffnet.harness import PRESET_DIR, ScenarioConfig, run_scenario


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("presets", nargs="*", help="preset names (default: every figure preset)")
    parser.add_argument("--out", default="runs")
    parser.add_argument("--realizations", "-R", type=int)
    parser.add_argument("--iterations", "-N", type=int)
    args = parser.parse_args()

    names = args.presets or sorted(p.stem for p in PRESET_DIR.glob("fig*.json"))
    for name in names:
        cfg = ScenarioConfig.load(name)
        if args.realizations:
            cfg.realizations = args.realizations
        if args.iterations:
            cfg.iterations = args.iterations
        out = Path(args.out) / name
        summaries = run_scenario(cfg, out)
        print(f"{name}: {', '.join(summaries)} -> {out}")


if __name__ == "__main__":
    main()
