from __future__ import annotations

from dataclasses import dataclass, field

from ..distillation import DistillConfig
from ..errors import ConfigurationError


@dataclass(frozen=True)
class Architecture:
    """Shape of one party's scorer; vocabularies come from that party's schema."""

    embedding_dim: int = 8
    hidden_widths: tuple[int, ...] = (64, 32)
    logit_clip: float = 5.0
    output_classes: int = 2


@dataclass(frozen=True)
class OptimizerConfig:
    lr: float = 1e-3
    weight_decay: float = 1e-4
    betas: tuple[float, float] = (0.9, 0.999)
    eps_stab: float = 1e-8


@dataclass(frozen=True)
class PrivacyConfig:
    """Noise settings for the logit exchange.

    ``epsilon=None`` disables noise. With ``budget_mode="total"`` the given
    epsilon and delta are split evenly over every planned (sample, exchange)
    release of a party before calibration.
    """

    epsilon: float | None = None
    delta: float = 1e-5
    budget_mode: str = "per_release"

    def __post_init__(self):
        if self.budget_mode not in ("per_release", "total"):
            raise ConfigurationError(f"unknown budget_mode {self.budget_mode!r}")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ConfigurationError("epsilon must be positive (or null for no noise)")
        if not 0.0 < self.delta < 1.0:
            raise ConfigurationError("delta must lie in (0, 1)")


@dataclass(frozen=True)
class ProtocolConfig:
    rounds: int = 5
    pretrain_epochs: int = 30
    pretrain_patience: int = 3
    round_epochs: int = 5
    round_patience: int = 2
    batch_size: int = 256
    distill: DistillConfig = field(default_factory=DistillConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    model_a: Architecture = field(default_factory=Architecture)
    model_b: Architecture = field(default_factory=Architecture)
    privacy: PrivacyConfig = field(default_factory=PrivacyConfig)
    ensemble_weight: float = 0.5
    federation: bool = True
    # each local round resumes from the best snapshot rather than the last iterate
    restore_best: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.rounds < 0:
            raise ConfigurationError("rounds must be >= 0")
        for name in ("pretrain_epochs", "round_epochs", "batch_size"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive")
        for name in ("pretrain_patience", "round_patience"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0")
        if not 0.0 <= self.ensemble_weight <= 1.0:
            raise ConfigurationError("ensemble_weight must lie in [0, 1]")
        if self.model_a.output_classes != self.model_b.output_classes:
            raise ConfigurationError("both parties must emit the same number of classes")

    def architecture(self, party: str) -> Architecture:
        return self.model_a if party == "A" else self.model_b
