"""Two-party double-distillation protocol simulated in one process."""

from .config import Architecture, OptimizerConfig, PrivacyConfig, ProtocolConfig
from .isolated import train_isolated
from .ledger import CommRecord, PartyRoundRecord, RoundLedger
from .party import PartyState, accuracy, local_training_round, make_party, pretrain
from .runner import (
    RunResult,
    encode_view,
    federated_ensemble,
    joint_proba,
    predict,
    release_spec,
    run,
)
from .server import Server

__all__ = [
    "Architecture",
    "CommRecord",
    "OptimizerConfig",
    "PartyRoundRecord",
    "PartyState",
    "PrivacyConfig",
    "ProtocolConfig",
    "RoundLedger",
    "RunResult",
    "Server",
    "accuracy",
    "encode_view",
    "federated_ensemble",
    "joint_proba",
    "local_training_round",
    "make_party",
    "predict",
    "pretrain",
    "release_spec",
    "run",
    "train_isolated",
]
