"""Win tables, alpha + beta/N scaling fits, crossover budgets and paired correlations."""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import asdict, dataclass

import numpy as np

from .estimator import FR, PS_QWC, CellResult, pooled_gap_se

log = logging.getLogger(__name__)

# Hardware values quoted for context in reports; never asserted.
REFERENCE_ANNOTATIONS = {
    "win_table": {
        "digital/noiseless": {"mse": "72/96", "sampling_var": "96/96"},
        "digital/hardware": {"mse": "71/96", "sampling_var": "96/96"},
        "vqe/noiseless": {"mse": "15/16", "sampling_var": "16/16"},
        "vqe/hardware": {"mse": "1/16", "sampling_var": "16/16"},
    },
    "crossover": {
        "digital/hardware": {"valid": "4/24", "median": 4.53e3, "min": 2.61e3, "max": 8.57e3},
        "vqe/hardware": {"valid": "3/4", "median": 9.94e2, "min": 7.73e2, "max": 3.52e3},
        "digital/hardware/n11/s6": 1.42e3,
        "vqe/hardware/n7": 7.73e2,
    },
    "significance": {
        "digital/hardware": {"median_pooled_se": 0.161, "median_abs_gap": 0.114, "resolved": "28/96"},
        "vqe/hardware": {"median_pooled_se": 0.917, "median_abs_gap": 1.83, "resolved": "11/16"},
    },
    "correlation": {
        "digital/hardware": {"s1": 0.14, "s3": -0.45, "s6": -0.29},
        "vqe/hardware": {"all": 0.46},
    },
    "groups": {"n5": 15, "n11": 22},
    "source": "published hardware benchmark (reference only, not reproduced)",
}


class UnpairedCells(ValueError):
    """FR and PS_QWC results do not cover the same cells."""


@dataclass
class ScalingFit:
    method: str
    alpha: float
    beta: float
    residual: float
    budgets: list[int]
    alpha_se: float = float("nan")
    beta_se: float = float("nan")


@dataclass
class CrossoverRecord:
    delta_alpha: float
    delta_beta: float
    n_c: float | None
    validity: str
    location: str | None = None


def fit_scaling(points, method: str = "") -> ScalingFit:
    """Least-squares fit of ``mse = alpha + beta / N`` over ``(N, mse)`` points."""
    pts = sorted((float(n), float(m)) for n, m in points)
    budgets = sorted({n for n, _ in pts})
    if len(budgets) < 2:
        raise ValueError("scaling fit needs at least two distinct budgets")
    x = np.array([1.0 / n for n, _ in pts])
    y = np.array([m for _, m in pts])
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    dof = len(y) - 2
    alpha_se = beta_se = float("nan")
    if dof > 0:
        cov = (resid @ resid / dof) * np.linalg.inv(design.T @ design)
        alpha_se, beta_se = float(np.sqrt(cov[0, 0])), float(np.sqrt(cov[1, 1]))
    return ScalingFit(
        method=method,
        alpha=float(coef[0]),
        beta=float(coef[1]),
        residual=float(np.sqrt(np.mean(resid**2))),
        budgets=[int(b) for b in budgets],
        alpha_se=alpha_se,
        beta_se=beta_se,
    )


def crossover(fr: ScalingFit, ps: ScalingFit, budget_range=(2000, 16000)) -> CrossoverRecord:
    """Crossover budget ``|d_beta| / d_alpha`` when ``d_alpha > 0`` and ``d_beta < 0``."""
    da, db = fr.alpha - ps.alpha, fr.beta - ps.beta
    if not (da > 0 and db < 0):
        return CrossoverRecord(da, db, None, "invalid")
    n_c = abs(db) / da
    lo, hi = budget_range
    location = "below_range" if n_c < lo else "above_range" if n_c > hi else "in_range"
    return CrossoverRecord(da, db, n_c, "valid_sign_structure", location)


def pearson_r(xs, ys) -> float:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.size < 3:
        raise ValueError("need two sequences of equal length >= 3")
    dx, dy = x - x.mean(), y - y.mean()
    sx, sy = np.sqrt(dx @ dx), np.sqrt(dy @ dy)
    if sx == 0 or sy == 0:
        raise ValueError("undefined correlation")
    return float(np.clip((dx @ dy) / (sx * sy), -1.0, 1.0))


def pair_cells(cells) -> dict[tuple, dict[str, CellResult]]:
    """Index cells by ``(workload, regime, N)``; every key must have both methods."""
    pairs: dict[tuple, dict[str, CellResult]] = defaultdict(dict)
    for c in cells:
        pairs[(c.workload_key, c.regime, c.shots)][c.method] = c
    missing = [
        f"{'/'.join(map(str, k))}:{m}" for k, v in sorted(pairs.items()) for m in (FR, PS_QWC) if m not in v
    ]
    if missing:
        raise UnpairedCells("unpaired cells: " + ", ".join(missing))
    return dict(pairs)


def regime_label(cell: CellResult) -> str:
    return f"{cell.workload['kind']}/{cell.regime}"


def win_table(cells) -> dict[str, dict]:
    """Per regime: cells where FR has strictly lower MSE / sampling variance."""
    out: dict[str, dict] = {}
    for (wkey, regime, shots), pair in sorted(pair_cells(cells).items()):
        fr, ps = pair[FR], pair[PS_QWC]
        row = out.setdefault(regime_label(fr), {"cells": 0, "fr_mse_wins": 0, "fr_var_wins": 0})
        row["cells"] += 1
        row["fr_mse_wins"] += int(fr.empirical_mse < ps.empirical_mse)
        row["fr_var_wins"] += int(fr.mean_sampling_var < ps.mean_sampling_var)
    for row in out.values():
        row["mse"] = f"{row['fr_mse_wins']}/{row['cells']}"
        row["sampling_var"] = f"{row['fr_var_wins']}/{row['cells']}"
    return out


def significance(cells) -> dict[str, dict]:
    """Per regime: median pooled SE, median |gap| and cells with |gap| > pooled SE."""
    groups: dict[str, list] = defaultdict(list)
    for pair in pair_cells(cells).values():
        fr, ps = pair[FR], pair[PS_QWC]
        if fr.replicates < 2 or ps.replicates < 2:
            continue
        groups[regime_label(fr)].append((abs(fr.empirical_mse - ps.empirical_mse), pooled_gap_se(fr, ps)))
    out = {}
    for label, rows in sorted(groups.items()):
        gaps, ses = np.array(rows).T
        out[label] = {
            "median_pooled_se": float(np.median(ses)),
            "median_abs_gap": float(np.median(gaps)),
            "resolved": f"{int(np.sum(gaps > ses))}/{len(rows)}",
        }
    return out


def scaling_grid(cells) -> list[dict]:
    """One row per ``(workload, regime)`` with both fits and the crossover classification."""
    by_cell: dict[tuple, dict[str, list]] = defaultdict(lambda: {FR: [], PS_QWC: []})
    meta: dict[tuple, CellResult] = {}
    for (wkey, regime, shots), pair in pair_cells(cells).items():
        for m in (FR, PS_QWC):
            by_cell[(wkey, regime)][m].append((shots, pair[m].empirical_mse))
        meta[(wkey, regime)] = pair[FR]
    rows = []
    for key in sorted(by_cell):
        pts = by_cell[key]
        budgets = sorted({n for n, _ in pts[FR]})
        if len(budgets) < 2:
            continue
        f_fr, f_ps = fit_scaling(pts[FR], FR), fit_scaling(pts[PS_QWC], PS_QWC)
        rec = crossover(f_fr, f_ps, (budgets[0], budgets[-1]))
        w = meta[key].workload
        rows.append(
            {
                "workload": key[0],
                "kind": w["kind"],
                "n": w["n"],
                "s": w.get("s"),
                "d": w.get("d"),
                "regime": key[1],
                "alpha_fr": f_fr.alpha,
                "beta_fr": f_fr.beta,
                "residual_fr": f_fr.residual,
                "alpha_ps": f_ps.alpha,
                "beta_ps": f_ps.beta,
                "residual_ps": f_ps.residual,
                "delta_alpha": rec.delta_alpha,
                "delta_beta": rec.delta_beta,
                "n_c": rec.n_c,
                "validity": rec.validity,
                "location": rec.location,
            }
        )
    return rows


def crossover_summary(grid_rows) -> dict[str, dict]:
    out: dict[str, dict] = {}
    groups = defaultdict(list)
    for r in grid_rows:
        groups[f"{r['kind']}/{r['regime']}"].append(r)
    for label, rows in sorted(groups.items()):
        ncs = [r["n_c"] for r in rows if r["n_c"] is not None]
        out[label] = {
            "valid": f"{len(ncs)}/{len(rows)}",
            "median": float(np.median(ncs)) if ncs else None,
            "min": float(min(ncs)) if ncs else None,
            "max": float(max(ncs)) if ncs else None,
            "locations": {
                loc: sum(1 for r in rows if (r["location"] or "none") == loc)
                for loc in ("below_range", "in_range", "above_range", "none")
            },
        }
    return out


def paired_count_correlation(cells, condition_on: str | None = "s") -> list[dict]:
    """Correlate FR-minus-PS measurement gate count with ``log10(mse_FR / mse_PS)``.

    ``condition_on`` is a workload field (``"s"``) giving one slice per value,
    or ``None`` for a single slice per regime. Cells with non-positive MSE are
    skipped with a logged reason.
    """
    slices: dict[tuple, list] = defaultdict(list)
    for (wkey, regime, shots), pair in sorted(pair_cells(cells).items()):
        fr, ps = pair[FR], pair[PS_QWC]
        if fr.empirical_mse <= 0 or ps.empirical_mse <= 0:
            log.info("skipping %s/%s/N%d: non-positive MSE", wkey, regime, shots)
            continue
        value = fr.workload.get(condition_on) if condition_on else None
        x = fr.measurement_count - ps.measurement_count
        y = float(np.log10(fr.empirical_mse / ps.empirical_mse))
        slices[(regime_label(fr), value)].append((x, y))
    rows = []
    for (label, value), pts in sorted(slices.items(), key=lambda kv: (kv[0][0], str(kv[0][1]))):
        xs, ys = zip(*pts)
        try:
            r, note = pearson_r(xs, ys), ""
        except ValueError as err:
            r, note = None, str(err)
        rows.append(
            {
                "regime": label,
                "condition": condition_on or "none",
                "value": value,
                "points": len(pts),
                "r": r,
                "note": note,
            }
        )
    return rows


def long_format(cells, grid_rows) -> list[dict]:
    """Plot-ready rows: ``(workload, regime, N, method, mse, sampling_var, fit)``."""
    fits = {(r["workload"], r["regime"]): r for r in grid_rows}
    rows = []
    for c in sorted(cells, key=lambda c: (c.workload_key, c.regime, c.method, c.shots)):
        fit = fits.get((c.workload_key, c.regime))
        value = None
        if fit is not None:
            tag = "fr" if c.method == FR else "ps"
            value = fit[f"alpha_{tag}"] + fit[f"beta_{tag}"] / c.shots
        rows.append(
            {
                "workload": c.workload_key,
                "regime": c.regime,
                "N": c.shots,
                "method": c.method,
                "mse": c.empirical_mse,
                "mse_se": c.mse_se,
                "sampling_var": c.mean_sampling_var,
                "fit": value,
            }
        )
    return rows


def fit_to_dict(fit: ScalingFit) -> dict:
    return asdict(fit)
