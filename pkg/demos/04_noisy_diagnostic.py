"""Noisy-regime diagnostic: run both grids under depolarizing + readout noise and print the report.

By default a reduced grid is run (a few minutes). ``--full`` runs every n and s;
that takes about 20 minutes on one core, dominated by n=11.
"""
import argparse
import shutil
import tempfile
from pathlib import Path

from fusionreadout.harness import BenchmarkConfig, cmd_analyze, cmd_report, cmd_run

LOCKED = Path(__file__).resolve().parents[1] / "data" / "locked"

parser = argparse.ArgumentParser()
parser.add_argument("--full", action="store_true")
parser.add_argument("--out", default=None)
args = parser.parse_args()

out = Path(args.out or tempfile.mkdtemp(prefix="fusionreadout-noisy-"))
if not (out / "locked").exists():
    shutil.copytree(LOCKED, out / "locked")

digital = {"workload": "digital", "regime": "noisy", "output": str(out)}
vqe = {"workload": "vqe", "regime": "noisy", "output": str(out)}
if not args.full:
    digital |= {"n": [5, 7], "s": [1, 3, 6]}
    vqe |= {"n": [5, 7]}

paths = [cmd_run(BenchmarkConfig.from_dict(cfg)) for cfg in (digital, vqe)]
summary = cmd_analyze(paths, out / "report")
print(cmd_report(summary))
print("tables written to", out / "report")
