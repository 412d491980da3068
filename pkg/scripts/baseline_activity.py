#!/usr/bin/env python3
"""Reproduce the reference network activity figure.

Simulates the baseline genome (g_e=0.5, g_i=1.0, fully connected, zero
thalamic offset) for one second and writes the raster, the rate series,
and the two-panel activity figure into a run directory.

Usage: python scripts/baseline_activity.py [--seed 42] [--out runs]
"""

import sys

from snnfit.cli import main

if __name__ == "__main__":
    argv = ["simulate", "--ge", "0.5", "--gi", "1.0", "--f", "1.0", "--mu", "0.0"]
    sys.exit(main(argv + sys.argv[1:]))
