#!/usr/bin/env python3
"""Pendulum case study: writes x.csv, y_clean.csv, y_poisoned.csv and pendulum.json."""

import argparse
import json
import sys

from sparse_resilience.harness import run_pendulum


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="out/pendulum", help="output directory")
    p.add_argument("--horizon", type=int, default=100)
    args = p.parse_args()
    bundle = run_pendulum(args.out, T=args.horizon)
    keys = ("delta_max", "rho_free", "rho_poisoned", "assumed_l", "l_admissible")
    print(json.dumps({k: bundle[k] for k in keys}, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
