"""Reheating scenarios: both methods, N = 2..10, for R in {1.1, 1.4, 2}.

Usage: python3 scripts/reheating_study.py [OUT_DIR]
"""

import sys

from boltzspec.harness.cli import main

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "results/reheating"
    codes = [main(["sweep", "--scenario", f"reheating-R{R}", "--modes", "2..10", "--out", out])
             for R in ("1.1", "1.4", "2")]
    sys.exit(max(codes))
