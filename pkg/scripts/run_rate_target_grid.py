#!/usr/bin/env python3
"""Run the full rate-target grid (3 target pairs x 3 connectivity levels x 3 seeds).

27 GA runs of 1275 simulations each; expect a long wall-clock on a laptop.
Pass --jobs N to parallelise fitness evaluations, --config to swap in a
different experiment file (e.g. experiments/sparsity_tradeoff.toml).

Usage: python scripts/run_rate_target_grid.py [--jobs 4] [--seed 42] [--out runs]
"""

import pathlib
import sys

from snnfit.cli import main

DEFAULT_CONFIG = pathlib.Path(__file__).resolve().parent.parent / "experiments" / "rate_target_grid.toml"

if __name__ == "__main__":
    argv = sys.argv[1:]
    if "--config" not in argv:
        argv = ["--config", str(DEFAULT_CONFIG)] + argv
    sys.exit(main(["optimize"] + argv))
