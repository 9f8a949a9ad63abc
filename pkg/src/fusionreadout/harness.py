"""Benchmark configuration, orchestration, persistence and report emission."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .analysis import (
    REFERENCE_ANNOTATIONS,
    crossover_summary,
    long_format,
    paired_count_correlation,
    scaling_grid,
    significance,
    win_table,
)
from .estimator import METHODS, CellContext, CellResult, MissingLockedState, Workload, run_cell
from .fib import build_hamiltonian
from .simulator import NoiseModel
from .workloads import DEFAULT_DT, LockedState, default_depth, vqe_optimize

log = logging.getLogger(__name__)

OUTPUT_ENV = "FUSIONREADOUT_OUT"
DEFAULT_BUDGETS = (2000, 4000, 8000, 16000)
DEFAULT_N = (5, 7, 9, 11)
DEFAULT_STEPS = (1, 2, 3, 4, 5, 6)
DEFAULT_NOISE = NoiseModel(p1=0.001, p2=0.01, q_readout=0.01)


class ConfigError(ValueError):
    """Invalid benchmark configuration; ``errors`` lists field-level problems."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class BenchmarkConfig:
    workload: str = "digital"
    n: list[int] = field(default_factory=lambda: list(DEFAULT_N))
    s: list[int] = field(default_factory=lambda: list(DEFAULT_STEPS))
    d: dict[int, int] = field(default_factory=dict)
    budgets: list[int] = field(default_factory=lambda: list(DEFAULT_BUDGETS))
    replicates: int | None = None
    regime: str = "noiseless"
    noise: NoiseModel = DEFAULT_NOISE
    trajectory_mode: str = "batched"
    dt: float = DEFAULT_DT
    j_f3: float = 1.0
    j_bf4: float = 0.5
    master_seed: int = 0
    output: str = ""
    lock_seed: int = 0
    lock_max_iters: int = 500
    lock_restarts: int = 3

    def __post_init__(self):
        if self.replicates is None:
            self.replicates = 3 if self.regime == "noisy" else 5
        self.d = {int(k): int(v) for k, v in self.d.items()}
        for n in self.n:
            self.d.setdefault(n, default_depth(n))

    @property
    def noise_model(self) -> NoiseModel:
        return self.noise if self.regime == "noisy" else NoiseModel(enabled=False)

    def validate(self) -> "BenchmarkConfig":
        errs = []
        if self.workload not in ("digital", "vqe"):
            errs.append(f"workload: expected 'digital' or 'vqe', got {self.workload!r}")
        if not self.n or any(not isinstance(n, int) or n < 4 for n in self.n):
            errs.append(f"n: need a non-empty list of integers >= 4, got {self.n!r}")
        if self.workload == "digital" and (not self.s or any(not isinstance(s, int) or s < 0 for s in self.s)):
            errs.append(f"s: need a non-empty list of non-negative integers, got {self.s!r}")
        if any(v < 1 for v in self.d.values()):
            errs.append(f"d: depths must be >= 1, got {self.d!r}")
        if not self.budgets or any(not isinstance(b, int) or b < 1 for b in self.budgets):
            errs.append(f"budgets: need positive integers, got {self.budgets!r}")
        elif list(self.budgets) != sorted(set(self.budgets)):
            errs.append(f"budgets: must be strictly ascending, got {self.budgets!r}")
        if not isinstance(self.replicates, int) or self.replicates < 1:
            errs.append(f"replicates: must be an integer >= 1, got {self.replicates!r}")
        if self.regime not in ("noiseless", "noisy"):
            errs.append(f"regime: expected 'noiseless' or 'noisy', got {self.regime!r}")
        if self.trajectory_mode not in ("batched", "per_shot"):
            errs.append(f"trajectory_mode: expected 'batched' or 'per_shot', got {self.trajectory_mode!r}")
        if not self.dt > 0:
            errs.append(f"dt: must be positive, got {self.dt!r}")
        if errs:
            raise ConfigError(errs)
        return self

    def to_dict(self) -> dict:
        out = asdict(self)
        out["noise"] = self.noise.to_dict()
        out["d"] = {str(k): v for k, v in sorted(self.d.items())}
        out.pop("output")
        return out

    @property
    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]

    @property
    def out_dir(self) -> Path:
        return Path(self.output or os.environ.get(OUTPUT_ENV, "fusionreadout-out"))

    @classmethod
    def from_dict(cls, data: dict) -> "BenchmarkConfig":
        data = dict(data)
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(data) - known - {"couplings"})
        if unknown:
            raise ConfigError([f"{k}: unknown field" for k in unknown])
        if "couplings" in data:
            c = data.pop("couplings")
            data.setdefault("j_f3", c.get("j_f3", 1.0))
            data.setdefault("j_bf4", c.get("j_bf4", 0.5))
        if "noise" in data:
            try:
                data["noise"] = NoiseModel(**data["noise"])
            except (TypeError, ValueError) as err:
                raise ConfigError([f"noise: {err}"]) from err
        try:
            cfg = cls(**data)
        except (TypeError, ValueError) as err:
            raise ConfigError([str(err)]) from err
        return cfg.validate()

    @classmethod
    def load(cls, path) -> "BenchmarkConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise ConfigError([f"config: cannot read {path}: {err}"]) from err
        return cls.from_dict(data)


def locked_path(out_dir: Path, n: int, d: int) -> Path:
    return Path(out_dir) / "locked" / f"vqe-n{n}-d{d}.json"


def load_locked(out_dir: Path, n: int, d: int) -> LockedState:
    path = locked_path(out_dir, n, d)
    if not path.exists():
        raise MissingLockedState(f"missing locked state {path}; run the 'lock' subcommand with this config first")
    return LockedState.from_json(path.read_text())


def cmd_lock(cfg: BenchmarkConfig) -> list[Path]:
    paths = []
    for n in cfg.n:
        d = cfg.d[n]
        h = build_hamiltonian(n, cfg.j_f3, cfg.j_bf4)
        state = vqe_optimize(n, d, h, seed=cfg.lock_seed, max_iters=cfg.lock_max_iters, restarts=cfg.lock_restarts)
        path = locked_path(cfg.out_dir, n, d)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(state.to_json())
        log.info("locked n=%d d=%d E=%.8f (reference %.8f)", n, d, state.achieved_energy, state.reference_energy)
        paths.append(path)
    return paths


def workloads_for(cfg: BenchmarkConfig) -> list[Workload]:
    if cfg.workload == "digital":
        return [Workload.digital(n, s, cfg.dt, cfg.j_f3, cfg.j_bf4) for n in cfg.n for s in cfg.s]
    return [Workload.vqe(load_locked(cfg.out_dir, n, cfg.d[n]), cfg.j_f3, cfg.j_bf4) for n in cfg.n]


def record_key(rec: dict) -> tuple:
    return (rec["workload_key"], rec["regime"], rec["method"], rec["shots"])


def _sort_key(rec: dict) -> tuple:
    w = rec["workload"]
    return (w["kind"], w["n"], w.get("s") or 0, w.get("d") or 0, rec["regime"], rec["method"], rec["shots"])


def _workload_job(args) -> list[dict]:
    workload, cfg_dict, todo = args
    cfg = BenchmarkConfig.from_dict(cfg_dict)
    context = CellContext(workload)
    out = []
    for method, shots in todo:
        cell = run_cell(
            workload,
            method,
            shots,
            cfg.replicates,
            cfg.noise_model,
            cfg.master_seed,
            regime_label=cfg.regime,
            context=context,
            mode=cfg.trajectory_mode,
        )
        out.append(cell.to_dict())
    return out


def results_path(cfg: BenchmarkConfig) -> Path:
    return cfg.out_dir / f"results-{cfg.workload}-{cfg.regime}.jsonl"


def read_records(path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        return []
    out = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            out.append(json.loads(line))
        except json.JSONDecodeError:
            log.warning("ignoring truncated record in %s", path)
    return out


def _write_records(path: Path, records) -> None:
    tmp = path.with_suffix(".jsonl.tmp")
    with tmp.open("w") as fh:
        for rec in sorted(records, key=_sort_key):
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    tmp.replace(path)


def cmd_run(cfg: BenchmarkConfig, workers: int = 1) -> Path:
    """Run every (workload, method, budget) cell; completed cells are skipped on rerun."""
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    digest = cfg.digest
    manifest_path = out / f"manifest-{digest}.json"
    path = results_path(cfg)
    existing = [r for r in read_records(path) if r.get("manifest") == digest]
    done = {record_key(r) for r in existing}
    workloads = workloads_for(cfg)
    jobs = []
    for w in workloads:
        todo = [
            (m, N)
            for m in METHODS
            for N in cfg.budgets
            if (w.key, cfg.regime, m, N) not in done
        ]
        if todo:
            jobs.append((w, cfg.to_dict() | {"output": cfg.output}, todo))
    started = time.time()
    records = list(existing)

    def collect(batch):
        for rec in batch:
            rec["manifest"] = digest
        records.extend(batch)
        # append as we go so an interrupted run can resume
        with path.open("a") as fh:
            for rec in batch:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")

    if existing:
        _write_records(path, existing)
    elif path.exists():
        path.unlink()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for batch in pool.map(_workload_job, jobs):
                collect(batch)
    else:
        for job in jobs:
            collect(_workload_job(job))
    _write_records(path, records)
    manifest = {
        "digest": digest,
        "version": __version__,
        "config": cfg.to_dict(),
        "results": str(path.name),
        "cells": sorted("/".join(map(str, record_key(r))) for r in records),
        "seed_rule": "sha256([master_seed, workload/regime/method/N, replicate]) -> SeedSequence, spawned per unit",
        "estimator_notes": {
            "e_exact": "exact noiseless energy of the cell's own preparation circuit",
            "covariance": "within-replicate sample covariance (ddof=1) of per-shot eigenvalue vectors",
            "trajectories": cfg.trajectory_mode if cfg.regime == "noisy" else "exact",
        },
        "timing_seconds": round(time.time() - started, 3),
    }
    manifest_path.write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return path


def load_cells(paths) -> list[CellResult]:
    cells = []
    for p in paths:
        for rec in read_records(p):
            rec = dict(rec)
            rec.pop("manifest", None)
            cells.append(CellResult.from_dict(rec))
    return cells


def _write_csv(path: Path, rows, fields=None) -> None:
    rows = list(rows)
    if fields is None:
        fields = list(rows[0]) if rows else []
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for r in rows:
            writer.writerow(r)


def cmd_analyze(paths, out_dir) -> dict:
    """Emit win table, scaling grid, significance, correlations and a JSON summary."""
    cells = load_cells(paths)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wins = win_table(cells)
    grid = scaling_grid(cells)
    sig = significance(cells)
    digital = [c for c in cells if c.workload["kind"] == "digital"]
    vqe = [c for c in cells if c.workload["kind"] == "vqe"]
    corr = (paired_count_correlation(digital, "s") if digital else []) + (
        paired_count_correlation(vqe, None) if vqe else []
    )
    _write_csv(
        out / "win_table.csv",
        [{"regime": k, **v} for k, v in sorted(wins.items())],
        ["regime", "cells", "fr_mse_wins", "fr_var_wins", "mse", "sampling_var"],
    )
    _write_csv(
        out / "scaling_grid.csv",
        grid,
        [
            "workload", "kind", "n", "s", "d", "regime", "alpha_fr", "beta_fr", "residual_fr",
            "alpha_ps", "beta_ps", "residual_ps", "delta_alpha", "delta_beta", "n_c", "validity", "location",
        ],
    )
    _write_csv(
        out / "significance.csv",
        [{"regime": k, **v} for k, v in sig.items()],
        ["regime", "median_pooled_se", "median_abs_gap", "resolved"],
    )
    _write_csv(out / "correlations.csv", corr, ["regime", "condition", "value", "points", "r", "note"])
    _write_csv(
        out / "mse_long.csv",
        long_format(cells, grid),
        ["workload", "regime", "N", "method", "mse", "mse_se", "sampling_var", "fit"],
    )
    groups = sorted({(c.workload["n"], c.meta.get("groups")) for c in cells})
    summary = {
        "cells": len(cells),
        "win_table": wins,
        "crossover": crossover_summary(grid),
        "scaling_grid": grid,
        "significance": sig,
        "correlations": corr,
        "qwc_groups": {f"n{n}": g for n, g in groups},
        "gate_count_semantics": "deterministic logical lowering to {1Q, CZ}; no routing",
        "reference": REFERENCE_ANNOTATIONS,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True))
    return summary


def cmd_report(summary: dict) -> str:
    """Human-readable digest of an analysis summary, with reference annotations."""
    ref = summary["reference"]
    lines = ["# Fusion readout vs grouped Pauli sampling", ""]
    lines.append("## FR win counts (strict)")
    lines.append("")
    lines.append("| regime | empirical MSE | sampling var | reference MSE | reference var |")
    lines.append("|---|---|---|---|---|")
    for label, row in sorted(summary["win_table"].items()):
        r = ref["win_table"].get(label) or ref["win_table"].get(label.replace("noisy", "hardware"), {})
        lines.append(f"| {label} | {row['mse']} | {row['sampling_var']} | {r.get('mse', '-')} | {r.get('sampling_var', '-')} |")
    lines += ["", "## Crossover budgets", ""]
    for label, row in sorted(summary["crossover"].items()):
        if row["median"] is None:
            lines.append(f"- {label}: valid {row['valid']}, no valid crossover")
        else:
            lines.append(
                f"- {label}: valid {row['valid']}, median N_c {row['median']:.3g}, range [{row['min']:.3g}, {row['max']:.3g}]"
            )
        locs = ", ".join(f"{k} {v}" for k, v in row["locations"].items())
        lines.append(f"  - location: {locs}")
    lines += ["", "## Gap vs pooled standard error", ""]
    for label, row in sorted(summary["significance"].items()):
        lines.append(
            f"- {label}: median pooled SE {row['median_pooled_se']:.4g}, "
            f"median |gap| {row['median_abs_gap']:.4g}, resolved {row['resolved']}"
        )
    lines += ["", "## Paired measurement-count correlations", ""]
    for row in summary["correlations"]:
        r = "undefined" if row["r"] is None else f"{row['r']:+.3f}"
        cond = "all cells" if row["condition"] in (None, "none") else f"{row['condition']}={row['value']}"
        lines.append(f"- {row['regime']} {cond}: r = {r} over {row['points']} cells")
    lines += ["", f"QWC groups: {summary['qwc_groups']} (reference {ref['groups']})", ""]
    lines.append(f"Gate counts: {summary['gate_count_semantics']}.")
    return "\n".join(lines) + "\n"
