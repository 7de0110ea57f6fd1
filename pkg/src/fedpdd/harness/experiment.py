"""Run FedPDD and the local-only baseline over seeds and sweep points."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..dataset import (
    RecordSet,
    SplitSpec,
    VerticalDataset,
    default_assignment,
    load_csv,
    load_schema,
    prepare,
    synthesize,
)
from ..errors import ConfigurationError, DomainError
from ..model import ModelSnapshot
from ..protocol import (
    ProtocolConfig,
    RunResult,
    accuracy,
    encode_view,
    joint_proba,
    run,
    train_isolated,
)
from . import outputs
from .config import ExperimentConfig, with_point

log = logging.getLogger(__name__)

FEDPDD = "fedpdd"
BASELINE = "baseline"


@dataclass(frozen=True)
class Accuracies:
    local_a: float
    local_b: float
    joint: float
    n_joint: int


@dataclass(frozen=True)
class RunRow:
    axis: str
    value: object
    seed: int
    method: str
    local_a: float
    local_b: float
    joint: float


@dataclass(frozen=True)
class CurveRow:
    axis: str
    value: object
    seed: int
    round: int
    party: str
    val_accuracy: float
    best_score: float
    ce: float
    sd: float
    kd: float
    cumulative_units: int
    cumulative_epsilon: float


@dataclass
class MetricsReport:
    axis: str | None = None
    rows: list[RunRow] = field(default_factory=list)
    curves: list[CurveRow] = field(default_factory=list)
    run_dirs: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return bool(self.rows)

    def values(self) -> list:
        seen = []
        for r in self.rows:
            if r.value not in seen:
                seen.append(r.value)
        return seen

    def summary(self) -> list[dict]:
        """Mean and spread over seeds for each (sweep value, method)."""
        out = []
        for value in self.values():
            for method in (FEDPDD, BASELINE):
                group = [r for r in self.rows if r.value == value and r.method == method]
                if not group:
                    continue
                row = {"axis": self.axis or "", "value": value, "method": method,
                       "seeds": len(group)}
                for metric in ("local_a", "local_b", "joint"):
                    x = np.array([getattr(r, metric) for r in group])
                    row[f"{metric}_mean"] = float(x.mean())
                    row[f"{metric}_std"] = float(x.std(ddof=1)) if len(x) > 1 else 0.0
                out.append(row)
        return out


def evaluate(best_a, best_b, test: VerticalDataset, w: float = 0.5) -> Accuracies:
    """Local accuracies on each party's own test records; joint accuracy on aligned ones."""
    if not test.party_a and not test.party_b:
        raise DomainError("empty test set")
    acc_a = accuracy(best_a, encode_view(test, "A")) if test.party_a else float("nan")
    acc_b = accuracy(best_b, encode_view(test, "B")) if test.party_b else float("nan")
    aligned = test.ids_a & test.ids_b
    if not aligned:
        return Accuracies(acc_a, acc_b, float("nan"), 0)
    ids = sorted(aligned)
    view = VerticalDataset(
        tuple(test.lookup("A", i) for i in ids),
        tuple(test.lookup("B", i) for i in ids),
        frozenset(ids),
        test.alpha,
        test.schema_a,
        test.schema_b,
    )
    enc_a, enc_b = encode_view(view, "A"), encode_view(view, "B")
    proba = joint_proba(best_a, best_b, enc_a, enc_b, w)
    # argmax already returns the lowest index on ties
    joint = float((proba.argmax(axis=1) == enc_a.labels).mean())
    return Accuracies(acc_a, acc_b, joint, len(ids))


def load_records(cfg: ExperimentConfig, seed: int) -> RecordSet:
    if cfg.synthetic is not None:
        return synthesize(cfg.synthetic, seed)
    descriptors, _ = load_schema(cfg.csv.schema)
    return load_csv(cfg.csv.path, descriptors)


def build_views(cfg: ExperimentConfig, seed: int, alpha: float,
                records: RecordSet | None = None):
    records = load_records(cfg, seed) if records is None else records
    if len(records) == 0:
        raise ConfigurationError("dataset has no records")
    split = SplitSpec(cfg.split.train_fraction, cfg.split.validation_fraction, seed)
    return prepare(records, default_assignment(records.schema), alpha, split)


@dataclass
class SeedOutcome:
    fedpdd: Accuracies
    baseline: Accuracies | None
    result: RunResult
    baseline_models: tuple[ModelSnapshot, ModelSnapshot] | None


def run_seed(proto: ProtocolConfig, views, with_baseline: bool = True) -> SeedOutcome:
    train, val, test = views
    res = run(proto, train, val)
    fed = evaluate(res.best_a, res.best_b, test, proto.ensemble_weight)
    base = models = None
    if with_baseline:
        models = (train_isolated("A", proto, train, val), train_isolated("B", proto, train, val))
        base = evaluate(*models, test, proto.ensemble_weight)
    return SeedOutcome(fed, base, res, models)


def curve_rows(axis: str, value, seed: int, res: RunResult) -> list[CurveRow]:
    rows = []
    for rec in res.ledger.training:
        eps = sum(e.samples * e.epsilon for e in res.budget.entries
                  if e.party == rec.party and e.round <= rec.round)
        rows.append(CurveRow(
            axis, value, seed, rec.round, rec.party, rec.val_accuracy, rec.best_score,
            float(rec.ce), float(rec.sd), float(rec.kd),
            res.ledger.units_through(rec.round), float(eps),
        ))
    return rows


def _label(value) -> str:
    return "none" if value is None else repr(value)


def run_experiment(cfg: ExperimentConfig, axis: str | None = None, write: bool = True,
                   with_baseline: bool = True) -> MetricsReport:
    """Every (sweep point, seed) pair: FedPDD plus the isolated baseline.

    With ``write`` each run gets its own directory under ``cfg.output_dir``
    holding its metrics, communication and budget files and a manifest; the
    aggregate results and summary land at the top level.
    """
    points = list(cfg.require_axis(axis)) if axis is not None else [None]
    report = MetricsReport(axis=axis)
    for value in points:
        proto, alpha = with_point(cfg, axis, value)
        for seed in cfg.seeds:
            seeded = _reseed(proto, seed)
            views = build_views(cfg, seed, alpha)
            out = run_seed(seeded, views, with_baseline)
            axis_name = axis or ""
            for method, acc in ((FEDPDD, out.fedpdd), (BASELINE, out.baseline)):
                if acc is not None:
                    report.rows.append(RunRow(axis_name, value, seed, method,
                                              acc.local_a, acc.local_b, acc.joint))
            curves = curve_rows(axis_name, value, seed, out.result)
            report.curves.extend(curves)
            log.info("%s=%s seed %d: fedpdd %s baseline %s", axis_name or "run",
                     _label(value), seed, out.fedpdd, out.baseline)
            if write:
                run_dir = Path(cfg.output_dir)
                if axis is not None:
                    run_dir = run_dir / f"{axis}={_label(value)}"
                run_dir = run_dir / f"seed={seed}"
                outputs.write_run(run_dir, cfg, seeded, alpha, views, out, curves)
                report.run_dirs.append(str(run_dir))
    if write:
        outputs.write_report(Path(cfg.output_dir), report)
        outputs.emit_plots_data(report, axis, Path(cfg.output_dir))
    return report


def run_baseline(cfg: ExperimentConfig, write: bool = True) -> MetricsReport:
    """Local-only training for every seed; no protocol run at all."""
    report = MetricsReport(axis=None)
    for seed in cfg.seeds:
        proto = _reseed(cfg.protocol, seed)
        train, val, test = build_views(cfg, seed, cfg.alpha)
        models = (train_isolated("A", proto, train, val), train_isolated("B", proto, train, val))
        acc = evaluate(*models, test, proto.ensemble_weight)
        report.rows.append(RunRow("", None, seed, BASELINE, acc.local_a, acc.local_b, acc.joint))
    if write:
        outputs.write_report(Path(cfg.output_dir), report, name="baseline")
    return report


def _reseed(proto: ProtocolConfig, seed: int) -> ProtocolConfig:
    return replace(proto, seed=seed)
