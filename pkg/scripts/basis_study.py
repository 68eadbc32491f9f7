"""Truncation errors of static Fermi-Dirac targets in the chemical-equilibrium and Laguerre bases.

Usage: python3 scripts/basis_study.py [OUT_DIR]
"""

import sys

from boltzspec.harness.cli import main

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "results/basis"
    sys.exit(main(["basis-study", "--upsilon", "0.5,0.9,1,1.5", "--R", "1,1.1,1.4,2", "--n-max", "10",
                   "--out", out]))
