"""Seeded sweeps over experiment configs, aggregation, and CSV output."""
from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from treeirl.irl import IrlConfig, run_maxentirl
from treeirl.metrics import LearningCurve, censored_mean, iterations_to_fraction

log = logging.getLogger(__name__)

CSV_FIELDS = ("run_id", "method", "branching", "levels", "eta_pi", "expert_ratio", "seed",
              "iteration", "det_return", "sto_return")
THRESHOLD_FIELDS = ("config_id", "method", "branching", "levels", "eta_pi", "expert_ratio",
                    "fraction", "mean_iterations", "reached", "runs", "per_seed")
FRACTIONS = (0.5, 0.7, 0.9)


def run_id(curve: LearningCurve) -> str:
    return f"{curve.config_id}-s{curve.seed}"


def expert_return_of(curve: LearningCurve) -> float:
    return float(curve.meta["levels"] - 1)


@dataclass
class SweepResult:
    curves: list = field(default_factory=list)

    def config_ids(self) -> list:
        seen = []
        for c in self.curves:
            if c.config_id not in seen:
                seen.append(c.config_id)
        return seen

    def by_config(self) -> dict:
        groups: dict = {}
        for c in self.curves:
            groups.setdefault(c.config_id, []).append(c)
        return groups

    def aggregate(self) -> dict:
        """Per config: mean/std deterministic and stochastic curves over seeds."""
        out = {}
        for cid, curves in self.by_config().items():
            det = np.array([c.det_return for c in curves])
            sto = np.array([c.sto_return for c in curves])
            out[cid] = {
                "meta": curves[0].meta,
                "seeds": len(curves),
                "det_mean": det.mean(axis=0), "det_std": det.std(axis=0),
                "sto_mean": sto.mean(axis=0), "sto_std": sto.std(axis=0),
            }
        return out

    def thresholds(self, fractions: Sequence[float] = FRACTIONS) -> list:
        return threshold_table(self.curves, fractions)


def threshold_table(curves, fractions: Sequence[float] = FRACTIONS) -> list:
    """Iterations-to-fraction rows; misses count as the run length in the mean."""
    groups: dict = {}
    for c in curves:
        groups.setdefault(c.config_id, []).append(c)
    rows = []
    for cid, group in groups.items():
        meta = group[0].meta
        for frac in fractions:
            hits = [iterations_to_fraction(c, expert_return_of(c), frac) for c in group]
            budget = max(len(c) for c in group)
            rows.append({
                "config_id": cid,
                "method": meta["method"],
                "branching": meta["branching"],
                "levels": meta["levels"],
                "eta_pi": meta["eta_pi"],
                "expert_ratio": meta["expert_ratio"],
                "fraction": frac,
                "mean_iterations": censored_mean(hits, budget),
                "reached": sum(h is not None for h in hits),
                "runs": len(hits),
                "per_seed": ";".join(f">{budget}" if h is None else str(h) for h in hits),
            })
    return rows


def _run_one(cfg: IrlConfig) -> LearningCurve:
    return run_maxentirl(cfg)


def run_sweep(configs: Sequence[IrlConfig], parallelism: int = 1) -> SweepResult:
    """Run every config; output order follows ``configs`` regardless of workers."""
    if not configs:
        raise ValueError("empty sweep grid")
    configs = list(configs)
    if parallelism <= 1:
        curves = []
        for i, cfg in enumerate(configs):
            log.info("run %d/%d %s seed=%d", i + 1, len(configs), cfg.config_id, cfg.seed)
            curves.append(_run_one(cfg))
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            curves = list(pool.map(_run_one, configs))
    return SweepResult(curves)


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def csv_text(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for c in result.curves:
        m = c.meta
        rid = run_id(c)
        for i, (det, sto) in enumerate(zip(c.det_return, c.sto_return)):
            w.writerow([rid, m["method"], m["branching"], m["levels"], _fmt(m["eta_pi"]),
                        _fmt(m["expert_ratio"]), c.seed, i, _fmt(det), _fmt(sto)])
    return buf.getvalue()


def emit_csv(result: SweepResult, path):
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(result))


def emit_thresholds(result: SweepResult, path, fractions: Sequence[float] = FRACTIONS):
    buf = io.StringIO()
    w = csv.DictWriter(buf, THRESHOLD_FIELDS, lineterminator="\n")
    w.writeheader()
    for row in result.thresholds(fractions):
        w.writerow({k: _fmt(v) for k, v in row.items()})
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def load_csv(path) -> SweepResult:
    """Rebuild curves from an emitted CSV (config metadata from the columns)."""
    curves: dict = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rid = row["run_id"]
            c = curves.get(rid)
            if c is None:
                seed = int(row["seed"])
                suffix = f"-s{seed}"
                cid = rid[: -len(suffix)] if rid.endswith(suffix) else rid
                c = curves[rid] = LearningCurve(cid, seed, meta={
                    "method": row["method"],
                    "branching": int(row["branching"]),
                    "levels": int(row["levels"]),
                    "eta_pi": float(row["eta_pi"]),
                    "expert_ratio": float(row["expert_ratio"]),
                })
            if int(row["iteration"]) != len(c):
                raise ValueError(f"{rid}: non-contiguous iteration {row['iteration']}")
            c.record(float(row["det_return"]), float(row["sto_return"]))
    return SweepResult(list(curves.values()))
