"""Orchestration: pretraining, exchanges, local rounds, and joint inference."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..dataset import Encoded, FeatureRecord, VerticalDataset, encode
from ..distillation import soft_target
from ..errors import LookupFailure, ProtocolError
from ..model import ModelSnapshot, forward, raw_logits, released_logits
from ..privacy import (
    BudgetLedger,
    NoiseCalibration,
    PrivacySpec,
    calibrate,
    perturb,
    record_release,
)
from .config import ProtocolConfig
from .ledger import RoundLedger
from .party import PartyState, local_training_round, make_party, pretrain
from .server import Server

log = logging.getLogger(__name__)


def noise_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([seed, 2, 2])


def release_spec(cfg: ProtocolConfig, n_shared: int) -> PrivacySpec | None:
    """Per-release privacy parameters, or ``None`` when noise is disabled."""
    p = cfg.privacy
    if p.epsilon is None:
        return None
    sensitivity = 2.0 * max(cfg.model_a.logit_clip, cfg.model_b.logit_clip)
    if p.budget_mode == "per_release":
        return PrivacySpec(p.epsilon, p.delta, sensitivity)
    releases = (cfg.rounds + 1) * n_shared
    return PrivacySpec(p.epsilon / releases, p.delta / releases, sensitivity)


def federated_ensemble(
    parties: tuple[PartyState, PartyState],
    server: Server,
    round_idx: int,
    calibration: NoiseCalibration,
    rng: np.random.Generator,
    ledger: RoundLedger,
    budget: BudgetLedger | None = None,
) -> dict[int, np.ndarray]:
    """Exchange perturbed best-model logits on the overlapped ids; refresh both teacher caches."""
    a, b = parties
    shared = a.shared_ids
    if len(shared) == 0:
        raise ProtocolError("no overlapped samples: no knowledge-transfer channel")
    if not np.array_equal(shared, b.shared_ids):
        raise ProtocolError("parties disagree on the overlapped id set")
    m = a.model.config.output_classes

    for party in parties:
        if party.best is None:
            raise ProtocolError(f"party {party.id} has no best snapshot to share")
        rows = [party.train.positions[int(s)] for s in shared]
        logits = released_logits(party.best, party.train.take(np.array(rows)))
        noisy = perturb(logits, calibration, rng)
        for sid, z in zip(shared, noisy):
            server.upload(party.id, int(sid), z)
        if budget is not None and calibration.spec is not None:
            record_release(budget, party.id, round_idx, len(shared), calibration.spec)

    targets = server.aggregate()
    for party in parties:
        party.teacher_cache = dict(targets)
        party.teacher_round = round_idx
    ledger.add_exchange(round_idx, len(shared), m)
    return targets


@dataclass
class RunResult:
    best_a: ModelSnapshot
    best_b: ModelSnapshot
    ledger: RoundLedger
    budget: BudgetLedger
    parties: tuple[PartyState, PartyState]
    sigma: float


def run(cfg: ProtocolConfig, train: VerticalDataset, val: VerticalDataset) -> RunResult:
    a = make_party("A", cfg, train, val)
    b = make_party("B", cfg, train, val)
    parties = (a, b)
    ledger = RoundLedger()
    budget = BudgetLedger()

    for p in parties:
        rec = pretrain(p, cfg)
        ledger.training.append(rec)
        log.info("pretrain %s: best val acc %.4f after %d epochs", p.id, rec.best_score, rec.epochs)

    spec = release_spec(cfg, len(a.shared_ids))
    calibration = NoiseCalibration.noiseless() if spec is None else calibrate(spec)
    rng = noise_rng(cfg.seed)
    server = Server(cfg.ensemble_weight, cfg.distill.t_ed)

    if cfg.federation and cfg.rounds > 0:
        federated_ensemble(parties, server, 0, calibration, rng, ledger, budget)
    for i in range(1, cfg.rounds + 1):
        for p in parties:
            rec = local_training_round(p, i, cfg)
            ledger.training.append(rec)
            log.info("round %d %s: val acc %.4f best %.4f", i, p.id, rec.val_accuracy, rec.best_score)
        if cfg.federation:
            federated_ensemble(parties, server, i, calibration, rng, ledger, budget)

    return RunResult(a.best, b.best, ledger, budget, parties, calibration.sigma)


# ------------------------------------------------------------------ inference


def joint_proba(best_a, best_b, enc_a: Encoded, enc_b: Encoded, w: float) -> np.ndarray:
    """Weighted average of both parties' class probabilities over aligned rows."""
    if not np.array_equal(enc_a.ids, enc_b.ids):
        raise ProtocolError("joint prediction needs row-aligned inputs")
    pa = soft_target(raw_logits(best_a, enc_a), 1.0)
    pb = soft_target(raw_logits(best_b, enc_b), 1.0)
    return w * pa + (1.0 - w) * pb


def predict(best_a, best_b, record_a: FeatureRecord | None, record_b: FeatureRecord | None,
            w: float = 0.5) -> tuple[int, np.ndarray]:
    """Joint prediction when both parties hold the sample, else the owner's own.

    Ties go to the lowest class index.
    """
    if record_a is None and record_b is None:
        raise LookupFailure("neither party holds this sample")
    probs = []
    if record_a is not None:
        probs.append(soft_target(forward(best_a, record_a, release=False), 1.0))
    if record_b is not None:
        probs.append(soft_target(forward(best_b, record_b, release=False), 1.0))
    if len(probs) == 2:
        p = w * probs[0] + (1.0 - w) * probs[1]
    else:
        p = probs[0]
    return int(np.argmax(p)), p


def encode_view(view: VerticalDataset, party: str) -> Encoded:
    return encode(view.party(party), view.schema(party))
