"""Local-only training with no federation machinery at all.

This is the comparison baseline: each party pretrains and then keeps
training on cross-entropy for the same round schedule the protocol would
use. It shares seeding with the protocol so a federation-disabled run must
reproduce it bit for bit.
"""

from __future__ import annotations

import numpy as np

from ..dataset import VerticalDataset, encode
from ..distillation import soft_target
from ..model import LocalModel, adam_step, backward, raw_logits, snapshot
from .config import ProtocolConfig
from .party import accuracy, init_seed, model_config, shuffle_rng


def _ce_grad(z: np.ndarray, labels: np.ndarray, weight: float) -> np.ndarray:
    onehot = np.zeros_like(z)
    onehot[np.arange(len(labels)), labels] = 1.0
    return weight * (soft_target(z, 1.0) - onehot)


def train_isolated(party: str, cfg: ProtocolConfig, train: VerticalDataset,
                   val: VerticalDataset):
    """Return the best snapshot of one party trained on its own data alone."""
    schema = train.schema(party)
    data = encode(train.party(party), schema)
    held_out = encode(val.party(party), schema)
    model = LocalModel(model_config(cfg, party, schema), seed=init_seed(cfg.seed, party))
    rng = shuffle_rng(cfg.seed, party)
    opt = cfg.optimizer
    best = snapshot(model, 0, accuracy(model, held_out))

    schedule = [(0, cfg.pretrain_epochs, cfg.pretrain_patience, 1.0)]
    schedule += [(i, cfg.round_epochs, cfg.round_patience, cfg.distill.gamma)
                 for i in range(1, cfg.rounds + 1)]
    for tag, epochs, patience, weight in schedule:
        if tag > 0 and cfg.restore_best:
            for name, value in best.params.items():
                model.params[name][...] = value
        stale = 0
        for _ in range(epochs):
            order = rng.permutation(len(data))
            for start in range(0, len(data), cfg.batch_size):
                batch = data.take(order[start:start + cfg.batch_size])
                z = raw_logits(model, batch)
                grads = backward(model, batch, _ce_grad(z, batch.labels, weight))
                adam_step(model, grads, opt.lr, opt.weight_decay, opt.betas, opt.eps_stab)
            acc = accuracy(model, held_out)
            if acc > best.score:
                best = snapshot(model, tag, acc)
                stale = 0
            else:
                stale += 1
                if stale > patience:
                    break
    return best
