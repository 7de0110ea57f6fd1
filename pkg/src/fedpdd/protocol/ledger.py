"""Per-round communication and training record."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field


@dataclass
class CommRecord:
    round: int
    messages_up: int
    messages_down: int
    # logit components one party sends plus receives
    units: int
    total_units: int


@dataclass
class PartyRoundRecord:
    round: int
    party: str
    val_accuracy: float
    best_score: float
    ce: float
    sd: float
    kd: float
    epochs: int


@dataclass
class RoundLedger:
    comm: list[CommRecord] = field(default_factory=list)
    training: list[PartyRoundRecord] = field(default_factory=list)

    def add_exchange(self, round: int, n_shared: int, m: int) -> CommRecord:
        rec = CommRecord(
            round=round,
            messages_up=2 * n_shared,
            messages_down=2 * n_shared,
            units=2 * m * n_shared,
            total_units=4 * m * n_shared,
        )
        self.comm.append(rec)
        return rec

    def cumulative_units(self, include_initial: bool = False) -> int:
        """Units over the loop rounds; round 0 is the post-pretraining exchange."""
        return sum(r.units for r in self.comm if include_initial or r.round > 0)

    def units_through(self, round: int) -> int:
        return sum(r.units for r in self.comm if 0 < r.round <= round)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(CommRecord.__dataclass_fields__))
        writer.writeheader()
        for r in self.comm:
            writer.writerow(asdict(r))
        return buf.getvalue()
