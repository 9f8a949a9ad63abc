"""Noiseless digital grid: win counts, alpha + beta/N fits, crossovers and count correlations."""
import tempfile

from fusionreadout.analysis import crossover, fit_scaling
from fusionreadout.harness import BenchmarkConfig, cmd_analyze, cmd_report, cmd_run

# %% Crossover arithmetic on a synthetic pair
budgets = (2000, 4000, 8000, 16000)
fr = fit_scaling([(N, 0.02 + 10 / N) for N in budgets], "FR")
ps = fit_scaling([(N, 0.01 + 40 / N) for N in budgets], "PS_QWC")
print("synthetic crossover:", crossover(fr, ps))

# %% Full noiseless digital grid (96 cells per method, a few seconds)
out = tempfile.mkdtemp(prefix="fusionreadout-noiseless-")
cfg = BenchmarkConfig.from_dict({"workload": "digital", "output": out})
summary = cmd_analyze([cmd_run(cfg)], f"{out}/report")
print(cmd_report(summary))

rows = sorted(summary["scaling_grid"], key=lambda r: (r["n"], r["s"]))
for r in rows[:6]:
    print(f"{r['workload']}: alpha FR {r['alpha_fr']:+.2e} PS {r['alpha_ps']:+.2e}, "
          f"beta FR {r['beta_fr']:.1f} PS {r['beta_ps']:.1f} -> {r['validity']} {r['location'] or ''}")
