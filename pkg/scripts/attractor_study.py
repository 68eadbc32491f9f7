"""Attractor scenarios: non-equilibrium N = 2 against chemical-equilibrium N = 4.

Usage: python3 scripts/attractor_study.py [OUT_DIR]
"""

import sys

from boltzspec.harness import io
from boltzspec.harness.cli import main

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "results/attractor"
    codes = []
    for u in ("1.5", "0.9", "0.75", "0.5"):
        scenario = f"attractor-Y{u}"
        codes.append(main(["solve", "--scenario", scenario, "--method", "noneq", "--modes", "2", "--out", out]))
        codes.append(main(["solve", "--scenario", scenario, "--method", "chemeq", "--modes", "4", "--out", out]))
    rows = {r["run_id"]: r for r in io.read_csv(f"{out}/runs.csv")}
    print("\nscenario           noneq N=2 L1   chemeq N=4 L1   max/final (noneq)")
    for u in ("1.5", "0.9", "0.75", "0.5"):
        ne, ce = rows[f"attractor-Y{u}_noneq_N2"], rows[f"attractor-Y{u}_chemeq_N4"]
        ratio = float(ne["max_L1_err"]) / float(ne["final_L1_err"])
        print(f"attractor-Y{u:<6} {float(ne['max_L1_err']):13.3e} {float(ce['max_L1_err']):15.3e} {ratio:17.0f}")
    sys.exit(max(codes))
