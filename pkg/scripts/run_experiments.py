"""Run every experiment on its scenario matrix and write CSV/JSON/SVG reports.

Usage: python3 scripts/run_experiments.py [--out-dir reports] [--ladder 64,256,1024,4096]
"""
import argparse
import sys
import time
from pathlib import Path

from edgelab.lab import PRESETS, emit_report, preset, run_experiment

MATRIX = [
    ("llt-order-r", "random-elliptic", {"r": 1}),
    ("llt-order-r", "random-elliptic", {"r": 2}),
    ("llt-order-r", "random-elliptic-k1", {"r": 1}),
    ("llt-order-r", "even-lattice", {"r": 1, "expansion": "full"}),
    ("necessity", "sparse-odd-0.05", {"r": 2}),
    ("necessity", "sparse-odd-0.5", {"r": 2}),
    ("resonant-decomposition", "random-elliptic", {}),
    ("rpf", "random-elliptic", {"ladder": [200]}),
]
MATRIX += [("prokhorov", name, {"R": 10.0}) for name in sorted(PRESETS)]
MATRIX += [("conditional-equivalence", name, {"r": 1}) for name in sorted(PRESETS)]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out-dir", default="reports")
    p.add_argument("--ladder", default=None, help="override the ladder, e.g. 64,256")
    args = p.parse_args(argv)
    failed = 0
    for experiment, name, params in MATRIX:
        sc = preset(name)
        if args.ladder and "ladder" not in params:
            sc = sc.with_(ladder=tuple(int(x) for x in args.ladder.split(",")))
        start = time.perf_counter()
        rep = run_experiment(experiment, sc, params)
        # one sub-directory per parameter set so llt runs at r=1 and r=2 do not collide
        tag = "_".join(f"{k}-{v}" for k, v in sorted(params.items()) if k != "ladder")
        emit_report(rep, out_dir=Path(args.out_dir) / (tag or "default"))
        failed += not rep.passed
        print(f"{'PASS' if rep.passed else 'FAIL'} {experiment} {name} {params} "
              f"({time.perf_counter() - start:.1f} s)")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
