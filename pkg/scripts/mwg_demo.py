#!/usr/bin/env python3
"""Hierarchical Metropolis-within-Gibbs demo; per-block OAP and sigma^2 to ``results/mwg.csv``."""
import sys
from pathlib import Path

from rmadapt.cli import main

Path("results").mkdir(exist_ok=True)
sys.exit(main(["mwg-demo", "--out", "results/mwg.csv", "--deterministic", *sys.argv[1:]]))
