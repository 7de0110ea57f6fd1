"""The aggregation server.

It only ever sees ``(sample id, perturbed logit)`` pairs, buffers them until
both parties have reported a sample, and answers with the temperature-softened
weighted ensemble. Nothing here can name a feature record or a label.
"""

from __future__ import annotations

import numpy as np

from ..distillation import soft_target
from ..errors import ContractError, DomainError, ProtocolError

PARTIES = ("A", "B")


class Server:
    def __init__(self, weight: float = 0.5, temperature: float = 30.0):
        if not 0.0 <= weight <= 1.0:
            raise DomainError(f"ensemble weight must lie in [0, 1], got {weight}")
        self.weight = weight
        self.temperature = temperature
        self.round = 0
        self._buffer: dict[str, dict[int, np.ndarray]] = {p: {} for p in PARTIES}

    def upload(self, party: str, sample_id: int, logit: np.ndarray) -> None:
        if party not in self._buffer:
            raise ProtocolError(f"unknown party {party!r}")
        if isinstance(sample_id, bool) or not isinstance(sample_id, (int, np.integer)):
            raise ContractError(f"sample id must be an integer, got {type(sample_id).__name__}")
        if not isinstance(logit, np.ndarray) or logit.ndim != 1:
            raise ContractError("uploads must be one-dimensional logit arrays")
        z = logit.astype(np.float64)
        if not np.all(np.isfinite(z)):
            raise ContractError("uploaded logits must be finite")
        self._buffer[party][int(sample_id)] = z

    def ensemble_logit(self, logit_a: np.ndarray, logit_b: np.ndarray) -> np.ndarray:
        return self.weight * logit_a + (1.0 - self.weight) * logit_b

    def aggregate(self) -> dict[int, np.ndarray]:
        """Soft targets for every sample reported by both parties; clears the buffer."""
        a, b = self._buffer["A"], self._buffer["B"]
        if set(a) != set(b):
            raise ProtocolError("parties reported different overlapped ids")
        out = {}
        for sid in sorted(a):
            out[sid] = soft_target(self.ensemble_logit(a[sid], b[sid]), self.temperature)
        self._buffer = {p: {} for p in PARTIES}
        self.round += 1
        return out
