"""Temperature softmax, distillation losses and the combined training objective.

Every function accepts a single ``(m,)`` vector or a stacked ``(n, m)``
batch along the last axis. Teachers are constants: no gradient flows into
them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class DistillConfig:
    t_sd: float = 30.0
    t_ed: float = 30.0
    beta: float = 10.0
    gamma: float = 10.0
    self_distill: bool = True
    # default direction is KL(student || teacher); True flips to KL(teacher || student)
    reverse_kl: bool = False

    def __post_init__(self):
        if not (self.t_sd > 0 and self.t_ed > 0):
            raise DomainError("temperatures must be strictly positive")
        if self.beta < 0 or self.gamma < 0:
            raise DomainError("loss weights must be non-negative")


def _check_temperature(T: float) -> None:
    if not T > 0:
        raise DomainError(f"temperature must be positive, got {T}")


def log_soft_target(z, T: float = 1.0) -> np.ndarray:
    _check_temperature(T)
    s = np.asarray(z, dtype=np.float64) / T
    s = s - s.max(axis=-1, keepdims=True)
    return s - np.log(np.exp(s).sum(axis=-1, keepdims=True))


def soft_target(z, T: float = 1.0) -> np.ndarray:
    """``exp(z/T) / sum(exp(z/T))``, shifted by the max component for stability."""
    _check_temperature(T)
    s = np.asarray(z, dtype=np.float64) / T
    e = np.exp(s - s.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _xlogy_ratio(p, log_p, log_q):
    # 0 * log 0 contributes nothing
    return np.where(p > 0, p * (log_p - log_q), 0.0)


def _kl(p, log_p, log_q, keepdims=False):
    # rounding can leave a near-zero sum slightly negative
    return np.maximum(_xlogy_ratio(p, log_p, log_q).sum(axis=-1, keepdims=keepdims), 0.0)


def kd_loss(p_student, q_teacher, T: float) -> float | np.ndarray:
    """``T**2 * KL(p_student || q_teacher)`` with the teacher floored at 1e-12."""
    p = np.asarray(p_student, dtype=np.float64)
    q = np.maximum(np.asarray(q_teacher, dtype=np.float64), PROB_FLOOR)
    log_p = np.log(np.maximum(p, np.finfo(float).tiny))
    out = T * T * _kl(p, log_p, np.log(q))
    return float(out) if out.ndim == 0 else out


def ce_loss(z, label) -> float | np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    label = np.asarray(label)
    m = z.shape[-1]
    if np.any(label < 0) or np.any(label >= m):
        raise DomainError(f"label out of range for {m} classes")
    lp = log_soft_target(z, 1.0)
    out = -np.take_along_axis(lp, label[..., None].astype(np.int64), axis=-1)[..., 0]
    return float(out) if out.ndim == 0 else out


def _kd_term(z, teacher, T, reverse):
    """Per-row loss and gradient w.r.t. ``z`` of one distillation term."""
    log_p = log_soft_target(z, T)
    p = np.exp(log_p)
    q = np.asarray(teacher, dtype=np.float64)
    log_q = np.log(np.maximum(q, PROB_FLOOR))
    if not reverse:
        ratio = log_p - log_q
        kl = _kl(p, log_p, log_q, keepdims=True)
        grad = T * p * (ratio - kl)
        return T * T * kl[..., 0], grad
    kl = _kl(q, log_q, log_p)
    grad = T * (p * q.sum(axis=-1, keepdims=True) - q)
    return T * T * kl, grad


@dataclass(frozen=True)
class LossParts:
    total: np.ndarray
    ce: np.ndarray
    sd: np.ndarray
    kd: np.ndarray
    grad: np.ndarray


def combined_terms(z, labels, teacher_ensemble, teacher_self, cfg: DistillConfig,
                   ensemble_mask=None) -> LossParts:
    """Per-row terms of ``L_SD + beta * L_KD + gamma * L_CE`` and their gradient.

    ``teacher_ensemble`` / ``teacher_self`` may be ``None`` (term absent).
    ``ensemble_mask`` marks rows that have an ensemble teacher; the rows
    without one get no distillation term from it.
    """
    z = np.asarray(z, dtype=np.float64)
    zero = np.zeros(z.shape[:-1])

    ce = np.asarray(ce_loss(z, labels))
    p = soft_target(z, 1.0)
    onehot = np.zeros_like(z)
    np.put_along_axis(onehot, np.asarray(labels)[..., None].astype(np.int64), 1.0, axis=-1)
    grad = cfg.gamma * (p - onehot)
    total = cfg.gamma * ce

    sd = zero
    if teacher_self is not None and cfg.self_distill:
        sd, g = _kd_term(z, teacher_self, cfg.t_sd, cfg.reverse_kl)
        total = total + sd
        grad = grad + g

    kd = zero
    if teacher_ensemble is not None and cfg.beta:
        kd, g = _kd_term(z, teacher_ensemble, cfg.t_ed, cfg.reverse_kl)
        if ensemble_mask is not None:
            mask = np.asarray(ensemble_mask, dtype=bool)
            kd = np.where(mask, kd, 0.0)
            g = np.where(mask[..., None], g, 0.0)
        total = total + cfg.beta * kd
        grad = grad + cfg.beta * g

    return LossParts(np.asarray(total), ce, np.asarray(sd), np.asarray(kd), grad)


def combined_loss(z, label, teacher_ensemble, teacher_self, cfg: DistillConfig):
    """Loss and its gradient w.r.t. the logits ``z`` for a single sample."""
    parts = combined_terms(z, label, teacher_ensemble, teacher_self, cfg)
    return float(parts.total), parts.grad
