"""CSV, manifest and budget files written by the harness.

All files are deterministic functions of config and seeds: no timestamps,
floats written with ``repr`` so re-runs are byte-identical.
"""

from __future__ import annotations

import csv
import dataclasses
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import yaml

from .. import __version__
from .config import ExperimentConfig, to_dict

ROUND_COLUMNS = ("round", "party", "val_accuracy", "best_score", "ce", "sd", "kd",
                 "cumulative_units", "cumulative_epsilon")
METHODS = ("fedpdd", "baseline")
METRICS = ("local_a", "local_b", "joint")


def _cell(x) -> str:
    if x is None:
        return "none"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(x) for x in row])
    return path


def write_manifest(path: Path, doc: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
    return path


def _acc_dict(acc) -> dict | None:
    return None if acc is None else dataclasses.asdict(acc)


def write_run(run_dir: Path, cfg: ExperimentConfig, proto, alpha: float, views, outcome,
              curves) -> None:
    train, val, test = views
    res = outcome.result
    write_csv(run_dir / "metrics.csv", ROUND_COLUMNS,
              ([getattr(c, k) for k in ROUND_COLUMNS] for c in curves))
    (run_dir / "comm.csv").write_text(res.ledger.to_csv(), encoding="utf-8")
    (run_dir / "budget.txt").write_text(res.budget.report(), encoding="utf-8")

    resolved = to_dict(cfg)
    resolved["protocol"] = to_dict(proto)
    resolved["alpha"] = alpha
    manifest = {
        "fedpdd_version": __version__,
        "seed": proto.seed,
        "config": resolved,
        "data": {
            "train_a": len(train.party_a),
            "train_b": len(train.party_b),
            "overlapped": len(train.overlapped),
            "realized_alpha": train.realized_alpha(),
            "val_a": len(val.party_a),
            "val_b": len(val.party_b),
            "test": len(test.party_a),
        },
        "noise_sigma": float(res.sigma),
        "communication_units": {
            "initial_exchange": res.ledger.cumulative_units(True) - res.ledger.cumulative_units(),
            "rounds": res.ledger.cumulative_units(),
        },
        "privacy_totals": {p: list(res.budget.totals(p)) for p in res.budget.parties},
        "results": {
            "fedpdd": _acc_dict(outcome.fedpdd),
            "baseline": _acc_dict(outcome.baseline),
        },
    }
    write_manifest(run_dir / "manifest.yaml", manifest)


def write_report(out_dir: Path, report, name: str = "results") -> list[Path]:
    paths = [write_csv(out_dir / f"{name}.csv",
                       ("axis", "value", "seed", "method") + METRICS,
                       ((r.axis, r.value, r.seed, r.method, r.local_a, r.local_b, r.joint)
                        for r in report.rows))]
    summary = report.summary()
    if summary:
        cols = list(summary[0])
        paths.append(write_csv(out_dir / f"{name}_summary.csv", cols,
                               ([s[c] for c in cols] for s in summary)))
    return paths


def emit_plots_data(report, axis: str | None, out_dir: Path) -> list[Path]:
    """Tidy CSVs behind the usual figures; an empty family writes no file.

    ``accuracy_vs_round.csv`` averages validation accuracy over seeds for each
    loop round (the pretraining row is left out). ``accuracy_vs_<axis>.csv``
    holds one row per sweep value with mean and spread of the test
    accuracies for both methods.
    """
    out_dir = Path(out_dir)
    written = []

    groups = defaultdict(list)
    for c in report.curves:
        if c.round >= 1:
            groups[(c.value, c.round, c.party)].append(c)
    if groups:
        rows = []
        for (value, rnd, party), cs in groups.items():
            rows.append((axis or "", value, rnd, party, len(cs),
                         float(np.mean([c.val_accuracy for c in cs])),
                         float(np.mean([c.best_score for c in cs]))))
        written.append(write_csv(
            out_dir / "accuracy_vs_round.csv",
            ("axis", "value", "round", "party", "seeds", "val_accuracy_mean", "best_score_mean"),
            rows,
        ))

    if axis is not None and report.rows:
        summary = report.summary()
        cols = ["value"]
        for method in METHODS:
            for m in METRICS:
                cols += [f"{method}_{m}_mean", f"{method}_{m}_std"]
        rows = []
        for value in report.values():
            row = [value]
            for method in METHODS:
                s = next((s for s in summary if s["value"] == value and s["method"] == method), None)
                for m in METRICS:
                    row += [None, None] if s is None else [s[f"{m}_mean"], s[f"{m}_std"]]
            rows.append(row)
        written.append(write_csv(out_dir / f"accuracy_vs_{axis}.csv", cols, rows))
    return written
