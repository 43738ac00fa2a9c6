#!/usr/bin/env python3
"""Oracle ratio curves for the univariate catalog and a few multivariate shapes.

Writes ``results/curves.csv`` (plot-ready; no plotting here).
"""
import json
import sys
import tempfile
from pathlib import Path

from rmadapt.cli import main
from rmadapt.dists import UNIVARIATE_NAMES

targets = [{"kind": "univariate-catalog", "component": n} for n in UNIVARIATE_NAMES]
targets += [{"kind": "product-form", "component": "normal", "dim": m} for m in (2, 5, 20)]
targets += [{"kind": "multivariate-t", "dim": 10, "dof": 3}]
cfg = {"targets": targets, "p_grid": [round(0.05 * k, 2) for k in range(1, 20)],
       "oracle_n": 200_000}

Path("results").mkdir(exist_ok=True)
with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
    json.dump(cfg, fh)
sys.exit(main(["curves", "--config", fh.name, "--out", "results/curves.csv", "--deterministic",
               *sys.argv[1:]]))
