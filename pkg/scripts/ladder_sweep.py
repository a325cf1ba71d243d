"""Print sigma_N^r-scaled sup errors of the classical and full expansions.

Usage: python3 scripts/ladder_sweep.py --scenario even-lattice --order 2
"""
import argparse

from edgelab import classical_expansion, full_expansion, sum_pmf, sup_error
from edgelab.lab import PRESETS, generate_scenario, preset


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--scenario", choices=sorted(PRESETS), default="random-elliptic")
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--ladder", default="64,256,1024,4096")
    args = p.parse_args(argv)
    r = args.order
    print(f"{'N':>6} {'sigma':>9} {'classical':>11} {'full':>11} slots")
    for N in (int(x) for x in args.ladder.split(",")):
        spec = generate_scenario(preset(args.scenario), N)
        pmf = sum_pmf(spec)
        full = full_expansion(spec, r)
        cl = pmf.sigma ** r * sup_error(pmf, classical_expansion(spec, r))
        fu = pmf.sigma ** r * sup_error(pmf, full)
        slots = sorted(int(a) for a, _ in full.table)
        print(f"{N:>6} {pmf.sigma:>9.3f} {cl:>11.3e} {fu:>11.3e} {slots}")


if __name__ == "__main__":
    main()
