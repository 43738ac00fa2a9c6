#!/usr/bin/env python3
"""Regenerate the univariate and multivariate tables into ``results/``.

    python scripts/reproduce_tables.py              # desk scale
    python scripts/reproduce_tables.py --paper-scale --workers 8
"""
import argparse
from pathlib import Path

from rmadapt.cli import main

ap = argparse.ArgumentParser()
ap.add_argument("--out-dir", default="results")
ap.add_argument("--workers", default="1")
ap.add_argument("--paper-scale", action="store_true")
a = ap.parse_args()
out = Path(a.out_dir)
out.mkdir(exist_ok=True)

common = ["--deterministic", "--workers", a.workers]
main(["table1", "--out", str(out / "table1.csv"), *common])
main(["table2", "--out", str(out / ("table2_paper.csv" if a.paper_scale else "table2.csv")),
      *common, *(["--paper-scale"] if a.paper_scale else [])])
