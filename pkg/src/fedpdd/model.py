"""DeepFM-style local recommender written directly against numpy.

The scorer adds a factorization-machine term (first-order weights plus all
pairwise embedding inner products) to a rectifier MLP over the concatenated
field embeddings. The FM scalar reaches the ``m`` output classes through a
learned per-class projection, so the model always emits ``m`` raw logits.
Gradients are derived by hand in :func:`backward`; there is no autodiff.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .dataset import Encoded, FeatureRecord
from .errors import ContractError, DomainError, NumericError

CHECKPOINT_FORMAT = "fedpdd-checkpoint"
CHECKPOINT_VERSION = 1
CLIP_MARGIN = 1e-12


@dataclass(frozen=True)
class ModelConfig:
    field_count: int
    vocab_sizes: tuple[int, ...]
    embedding_dim: int = 8
    hidden_widths: tuple[int, ...] = (64, 32)
    output_classes: int = 2
    logit_clip: float = 5.0
    numerical: tuple[bool, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "vocab_sizes", tuple(int(v) for v in self.vocab_sizes))
        object.__setattr__(self, "hidden_widths", tuple(int(h) for h in self.hidden_widths))
        if self.numerical is not None:
            object.__setattr__(self, "numerical", tuple(bool(x) for x in self.numerical))
        if self.field_count < 1 or len(self.vocab_sizes) != self.field_count:
            raise ContractError("vocab_sizes must list one size per field")
        if any(v < 1 for v in self.vocab_sizes):
            raise DomainError("vocabulary sizes must be positive")
        if self.embedding_dim < 1:
            raise DomainError("embedding_dim must be at least 1")
        if not self.hidden_widths or any(h < 1 for h in self.hidden_widths):
            raise DomainError("hidden_widths must be a nonempty list of positive widths")
        if self.output_classes < 2:
            raise DomainError("need at least two output classes")
        if not self.logit_clip > 0:
            raise DomainError("logit_clip must be positive")
        if self.numerical is not None and len(self.numerical) != self.field_count:
            raise ContractError("numerical flags must cover every field")

    @classmethod
    def for_schema(cls, schema, **kwargs) -> "ModelConfig":
        return cls(len(schema), schema.vocab_sizes, numerical=schema.numerical, **kwargs)

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.vocab_sizes)[:-1]]).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "field_count": self.field_count,
            "vocab_sizes": list(self.vocab_sizes),
            "embedding_dim": self.embedding_dim,
            "hidden_widths": list(self.hidden_widths),
            "output_classes": self.output_classes,
            "logit_clip": self.logit_clip,
            "numerical": None if self.numerical is None else list(self.numerical),
        }


def init_params(config: ModelConfig, seed: int) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    k = config.embedding_dim
    V = int(sum(config.vocab_sizes))
    m = config.output_classes
    params = {
        "embedding": rng.normal(0.0, 1.0 / math.sqrt(k), size=(V, k)) * 0.1,
        "first_order": np.zeros(V),
        "fm_proj": np.linspace(-0.5, 0.5, m),
    }
    fan_in = config.field_count * k
    for i, width in enumerate(config.hidden_widths):
        params[f"dense{i}.weight"] = rng.normal(0.0, math.sqrt(2.0 / fan_in), size=(fan_in, width))
        params[f"dense{i}.bias"] = np.zeros(width)
        fan_in = width
    params["head.weight"] = rng.normal(0.0, math.sqrt(1.0 / fan_in), size=(fan_in, m))
    params["head.bias"] = np.zeros(m)
    return params


class LocalModel:
    """Parameters plus Adam moment buffers for one party's scorer."""

    def __init__(self, config: ModelConfig, seed: int = 0, params: Mapping | None = None):
        self.config = config
        self.params = (
            init_params(config, seed)
            if params is None
            else {k: np.array(v, dtype=np.float64) for k, v in params.items()}
        )
        self.opt = AdamState.zeros_like(self.params)

    def copy(self) -> "LocalModel":
        other = LocalModel(self.config, params=self.params)
        other.opt = self.opt.copy()
        return other


@dataclass(frozen=True)
class ModelSnapshot:
    """Frozen parameter copy of a model; ``score`` is its validation accuracy."""

    config: ModelConfig
    params: Mapping[str, np.ndarray]
    tag: int
    score: float

    def as_model(self) -> LocalModel:
        return LocalModel(self.config, params=self.params)


def snapshot(model: LocalModel, round: int, score: float) -> ModelSnapshot:
    frozen = {}
    for name, value in model.params.items():
        arr = value.copy()
        arr.setflags(write=False)
        frozen[name] = arr
    return ModelSnapshot(model.config, MappingProxyType(frozen), round, float(score))


# ---------------------------------------------------------------- forward


@dataclass
class _Cache:
    rows: np.ndarray
    values: np.ndarray
    emb: np.ndarray
    emb_sum: np.ndarray
    fm: np.ndarray
    activations: list = field(default_factory=list)


def _global_rows(config: ModelConfig, categories: np.ndarray) -> np.ndarray:
    vocab = np.asarray(config.vocab_sizes)
    if categories.ndim != 2 or categories.shape[1] != config.field_count:
        raise ContractError(
            f"expected (n, {config.field_count}) category array, got {categories.shape}"
        )
    bad = (categories < 0) | (categories >= vocab)
    if bad.any():
        row, f = np.argwhere(bad)[0]
        raise DomainError(
            f"category {categories[row, f]} out of range for field {f} (vocab {vocab[f]})"
        )
    return categories + config.offsets


def _forward(params: Mapping, config: ModelConfig, categories, values) -> tuple[np.ndarray, _Cache]:
    rows = _global_rows(config, np.asarray(categories))
    values = np.asarray(values, dtype=np.float64)
    emb = params["embedding"][rows] * values[..., None]  # (n, F, k)
    emb_sum = emb.sum(axis=1)
    first = (params["first_order"][rows] * values).sum(axis=1)
    pairwise = 0.5 * ((emb_sum**2).sum(axis=1) - (emb**2).sum(axis=(1, 2)))
    fm = first + pairwise

    h = emb.reshape(len(emb), -1)
    acts = [h]
    for i in range(len(config.hidden_widths)):
        h = np.maximum(h @ params[f"dense{i}.weight"] + params[f"dense{i}.bias"], 0.0)
        acts.append(h)
    z = h @ params["head.weight"] + params["head.bias"] + fm[:, None] * params["fm_proj"]
    return z, _Cache(rows, values, emb, emb_sum, fm, acts)


def raw_logits(model, batch: Encoded) -> np.ndarray:
    """Unclipped ``(n, m)`` logits; the training path uses these."""
    z, _ = _forward(model.params, model.config, batch.categories, batch.values)
    return z


def clip_logits(z: np.ndarray, bound: float) -> np.ndarray:
    """Scale rows whose l2 norm exceeds ``bound`` back onto the sphere of that radius.

    The target radius sits a relative 1e-12 inside ``bound`` so that the
    result stays within it whichever way its norm is later rounded.
    """
    z = np.asarray(z, dtype=np.float64)
    norms = np.linalg.norm(z, axis=-1, keepdims=True)
    target = bound * (1.0 - CLIP_MARGIN)
    scale = np.where(norms > target, target / np.maximum(norms, 1e-300), 1.0)
    return z * scale


def released_logits(model, batch: Encoded) -> np.ndarray:
    return clip_logits(raw_logits(model, batch), model.config.logit_clip)


def encode_record(config: ModelConfig, record: FeatureRecord) -> tuple[np.ndarray, np.ndarray]:
    cats = np.zeros((1, config.field_count), dtype=np.int64)
    vals = np.ones((1, config.field_count))
    if config.numerical is not None:
        vals[0] = np.where(config.numerical, 0.0, 1.0)
    for f, c in record.categorical:
        if not 0 <= f < config.field_count:
            raise DomainError(f"field {f} out of range")
        cats[0, f] = c
    for f, v in record.numerical:
        if not 0 <= f < config.field_count:
            raise DomainError(f"field {f} out of range")
        vals[0, f] = v
    return cats, vals


def forward(model, record: FeatureRecord, release: bool = True) -> np.ndarray:
    """Logits for one record; clipped to norm ``logit_clip`` unless ``release`` is off."""
    cats, vals = encode_record(model.config, record)
    z, _ = _forward(model.params, model.config, cats, vals)
    z = z[0]
    return clip_logits(z, model.config.logit_clip) if release else z


# --------------------------------------------------------------- backward


def _backward_cache(params, config: ModelConfig, cache: _Cache, grad: np.ndarray) -> dict:
    n = grad.shape[0]
    g = grad / n
    grads: dict[str, np.ndarray] = {}
    acts = cache.activations

    grads["head.bias"] = g.sum(axis=0)
    grads["head.weight"] = acts[-1].T @ g
    grads["fm_proj"] = cache.fm @ g
    d_fm = g @ params["fm_proj"]

    dh = g @ params["head.weight"].T
    for i in reversed(range(len(config.hidden_widths))):
        da = dh * (acts[i + 1] > 0)
        grads[f"dense{i}.weight"] = acts[i].T @ da
        grads[f"dense{i}.bias"] = da.sum(axis=0)
        dh = da @ params[f"dense{i}.weight"].T

    d_emb = dh.reshape(cache.emb.shape)
    d_emb += d_fm[:, None, None] * (cache.emb_sum[:, None, :] - cache.emb)
    d_rows = d_emb * cache.values[..., None]

    V, k = params["embedding"].shape
    rows = cache.rows.ravel()
    g_emb = np.zeros((V, k))
    np.add.at(g_emb, rows, d_rows.reshape(-1, k))
    grads["embedding"] = g_emb
    grads["first_order"] = np.bincount(
        rows, weights=(d_fm[:, None] * cache.values).ravel(), minlength=V
    )
    return grads


def backward(model, batch: Encoded, grad_wrt_logits: np.ndarray) -> dict[str, np.ndarray]:
    """Batch-mean gradients of ``sum_i <grad_i, z_i>`` w.r.t. every parameter.

    ``grad_wrt_logits`` is taken at the unclipped logits.
    """
    grad = np.asarray(grad_wrt_logits, dtype=np.float64)
    if grad.shape != (len(batch), model.config.output_classes):
        raise ContractError(
            f"grad_wrt_logits has shape {grad.shape}, "
            f"expected {(len(batch), model.config.output_classes)}"
        )
    _, cache = _forward(model.params, model.config, batch.categories, batch.values)
    return _backward_cache(model.params, model.config, cache, grad)


def forward_backward(model, batch: Encoded, loss_grad_fn):
    """One forward pass, then ``backward`` with ``loss_grad_fn(z) -> (aux, grad)``."""
    z, cache = _forward(model.params, model.config, batch.categories, batch.values)
    aux, grad = loss_grad_fn(z)
    return aux, _backward_cache(model.params, model.config, cache, grad)


# -------------------------------------------------------------- optimizer


@dataclass
class AdamState:
    first: dict[str, np.ndarray]
    second: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, params: Mapping[str, np.ndarray]) -> "AdamState":
        return cls(
            {k: np.zeros_like(v) for k, v in params.items()},
            {k: np.zeros_like(v) for k, v in params.items()},
        )

    def copy(self) -> "AdamState":
        return AdamState(
            {k: v.copy() for k, v in self.first.items()},
            {k: v.copy() for k, v in self.second.items()},
            self.step,
        )


def adam_update(
    params: dict[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    lr: float = 1e-3,
    weight_decay: float = 1e-4,
    betas: tuple[float, float] = (0.9, 0.999),
    eps_stab: float = 1e-8,
) -> None:
    """In-place Adam step with bias correction and decoupled weight decay."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient in parameter group {name!r}")
    b1, b2 = betas
    state.step += 1
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    for name, p in params.items():
        g = grads[name]
        m = state.first[name]
        v = state.second[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        if weight_decay:
            p *= 1.0 - lr * weight_decay
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps_stab)


def adam_step(model: LocalModel, gradients, lr=1e-3, weight_decay=1e-4,
              betas=(0.9, 0.999), eps_stab=1e-8) -> None:
    adam_update(model.params, gradients, model.opt, lr, weight_decay, betas, eps_stab)


# ------------------------------------------------------------- checkpoint


def save_checkpoint(model, path: str | Path, tag: int | None = None,
                    score: float | None = None) -> None:
    """Write parameters to an ``.npz`` archive with a versioned JSON header."""
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": model.config.to_dict(),
        "shapes": {k: list(v.shape) for k, v in model.params.items()},
        "tag": tag if tag is not None else getattr(model, "tag", None),
        "score": score if score is not None else getattr(model, "score", None),
    }
    arrays = {f"param/{k}": np.asarray(v, dtype=np.float64) for k, v in model.params.items()}
    with open(path, "wb") as fh:
        np.savez(fh, header=np.array(json.dumps(header, sort_keys=True)), **arrays)


def load_checkpoint(path: str | Path) -> LocalModel:
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        if header.get("format") != CHECKPOINT_FORMAT:
            raise ContractError(f"{path}: not a checkpoint file")
        if header.get("version") != CHECKPOINT_VERSION:
            raise ContractError(f"{path}: unsupported checkpoint version {header.get('version')}")
        cfg = header["config"]
        config = ModelConfig(
            field_count=cfg["field_count"],
            vocab_sizes=tuple(cfg["vocab_sizes"]),
            embedding_dim=cfg["embedding_dim"],
            hidden_widths=tuple(cfg["hidden_widths"]),
            output_classes=cfg["output_classes"],
            logit_clip=cfg["logit_clip"],
            numerical=None if cfg["numerical"] is None else tuple(cfg["numerical"]),
        )
        params = {}
        for name, shape in header["shapes"].items():
            arr = data[f"param/{name}"]
            if list(arr.shape) != shape:
                raise ContractError(f"{path}: shape mismatch for {name}")
            params[name] = arr
    return LocalModel(config, params=params)
