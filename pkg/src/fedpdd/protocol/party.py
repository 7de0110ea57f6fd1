"""One party's local state and its offline training loops."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dataset import Encoded, VerticalDataset, encode
from ..distillation import DistillConfig, combined_terms, soft_target
from ..errors import ConfigurationError, ProtocolError
from ..model import (
    LocalModel,
    ModelConfig,
    ModelSnapshot,
    adam_step,
    forward_backward,
    raw_logits,
    snapshot,
)
from .config import ProtocolConfig
from .ledger import PartyRoundRecord

PARTY_INDEX = {"A": 0, "B": 1}
PRETRAIN_LOSS = DistillConfig(beta=0.0, gamma=1.0, self_distill=False)


def init_seed(seed: int, party: str) -> int:
    return int(np.random.SeedSequence([seed, PARTY_INDEX[party], 0]).generate_state(1)[0])


def shuffle_rng(seed: int, party: str) -> np.random.Generator:
    return np.random.default_rng([seed, PARTY_INDEX[party], 1])


def model_config(cfg: ProtocolConfig, party: str, schema) -> ModelConfig:
    arch = cfg.architecture(party)
    return ModelConfig.for_schema(
        schema,
        embedding_dim=arch.embedding_dim,
        hidden_widths=arch.hidden_widths,
        output_classes=arch.output_classes,
        logit_clip=arch.logit_clip,
    )


def accuracy(model, data: Encoded) -> float:
    if len(data) == 0:
        return 0.0
    pred = raw_logits(model, data).argmax(axis=1)
    return float((pred == data.labels).mean())


@dataclass
class PartyState:
    id: str
    model: LocalModel
    train: Encoded
    val: Encoded
    shared_ids: np.ndarray
    rng: np.random.Generator
    best: ModelSnapshot | None = None
    teacher_cache: dict[int, np.ndarray] = field(default_factory=dict)
    # exchange round that produced teacher_cache (-1: none yet)
    teacher_round: int = -1
    history: list[PartyRoundRecord] = field(default_factory=list)

    @property
    def shared_mask(self) -> np.ndarray:
        return np.isin(self.train.ids, self.shared_ids)


def make_party(party: str, cfg: ProtocolConfig, train: VerticalDataset,
               val: VerticalDataset) -> PartyState:
    schema = train.schema(party)
    records = train.party(party)
    if not records:
        raise ConfigurationError(f"party {party} has an empty training set")
    config = model_config(cfg, party, schema)
    return PartyState(
        id=party,
        model=LocalModel(config, seed=init_seed(cfg.seed, party)),
        train=encode(records, schema),
        val=encode(val.party(party), schema),
        shared_ids=np.array(sorted(train.overlapped), dtype=np.int64),
        rng=shuffle_rng(cfg.seed, party),
    )


def _fit(party: PartyState, cfg: ProtocolConfig, loss_cfg: DistillConfig, round_idx: int,
         epochs: int, patience: int, ensemble=None, ensemble_mask=None,
         self_teacher=None) -> PartyRoundRecord:
    """Epoch loop with best-snapshot tracking and early stopping on validation accuracy."""
    opt = cfg.optimizer
    model, data = party.model, party.train
    n, bs = len(data), cfg.batch_size
    sums = np.zeros(3)
    steps = 0
    stale = 0
    acc = party.best.score if party.best is not None else 0.0
    epoch = 0
    for epoch in range(1, epochs + 1):
        order = party.rng.permutation(n)
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            batch = data.take(idx)

            def loss_grad(z):
                parts = combined_terms(
                    z,
                    batch.labels,
                    None if ensemble is None else ensemble[idx],
                    None if self_teacher is None else self_teacher[idx],
                    loss_cfg,
                    ensemble_mask=None if ensemble_mask is None else ensemble_mask[idx],
                )
                return parts, parts.grad

            parts, grads = forward_backward(model, batch, loss_grad)
            adam_step(model, grads, opt.lr, opt.weight_decay, opt.betas, opt.eps_stab)
            sums += (parts.ce.mean(), parts.sd.mean(), parts.kd.mean())
            steps += 1

        acc = accuracy(model, party.val)
        if party.best is None or acc > party.best.score:
            party.best = snapshot(model, round_idx, acc)
            stale = 0
        else:
            stale += 1
            if stale > patience:
                break
    ce, sd, kd = sums / max(steps, 1)
    rec = PartyRoundRecord(round_idx, party.id, acc, party.best.score, ce, sd, kd, epoch)
    party.history.append(rec)
    return rec


def restore(model: LocalModel, best: ModelSnapshot) -> None:
    """Copy snapshot parameters into the working model; optimizer moments are kept."""
    for name, value in best.params.items():
        model.params[name][...] = value


def pretrain(party: PartyState, cfg: ProtocolConfig) -> PartyRoundRecord:
    """Cross-entropy-only training from scratch; round tag 0."""
    if len(party.train) == 0:
        raise ConfigurationError(f"party {party.id} has an empty training set")
    party.best = snapshot(party.model, 0, accuracy(party.model, party.val))
    return _fit(party, cfg, PRETRAIN_LOSS, 0, cfg.pretrain_epochs, cfg.pretrain_patience)


def teacher_arrays(party: PartyState, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Dense ensemble teacher matrix and mask aligned with the training rows."""
    teachers = np.full((len(party.train), m), 1.0 / m)
    mask = np.zeros(len(party.train), dtype=bool)
    positions = party.train.positions
    for sid, p in party.teacher_cache.items():
        row = positions[sid]
        teachers[row] = p
        mask[row] = True
    return teachers, mask


def local_training_round(party: PartyState, round_idx: int, cfg: ProtocolConfig) -> PartyRoundRecord:
    """Double-distillation training for one round.

    The self teacher is the best snapshot as it stood when the round began;
    the ensemble teacher is whatever the previous exchange delivered, and it
    only covers the overlapped rows.
    """
    dcfg = cfg.distill
    m = party.model.config.output_classes
    use_ensemble = cfg.federation and dcfg.beta > 0
    if use_ensemble and party.teacher_round != round_idx - 1:
        raise ProtocolError(
            f"party {party.id}: round {round_idx} needs teachers from exchange "
            f"{round_idx - 1}, have {party.teacher_round}"
        )
    if cfg.restore_best:
        restore(party.model, party.best)
    self_teacher = None
    if cfg.federation and dcfg.self_distill:
        teacher_model = party.best
        self_teacher = soft_target(raw_logits(teacher_model, party.train), dcfg.t_sd)
    ensemble = mask = None
    if use_ensemble:
        ensemble, mask = teacher_arrays(party, m)
    loss_cfg = dcfg if cfg.federation else DistillConfig(
        dcfg.t_sd, dcfg.t_ed, 0.0, dcfg.gamma, self_distill=False
    )
    return _fit(party, cfg, loss_cfg, round_idx, cfg.round_epochs, cfg.round_patience,
                ensemble=ensemble, ensemble_mask=mask, self_teacher=self_teacher)
