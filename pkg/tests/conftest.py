import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fedpdd.dataset import SplitSpec, SyntheticSpec, default_assignment, prepare, synthesize
from fedpdd.distillation import DistillConfig
from fedpdd.protocol import Architecture, ProtocolConfig

TINY_ARCH = Architecture(embedding_dim=4, hidden_widths=(16,))


def tiny_config(**kw) -> ProtocolConfig:
    base = dict(
        rounds=2,
        pretrain_epochs=3,
        pretrain_patience=1,
        round_epochs=2,
        round_patience=1,
        batch_size=128,
        model_a=TINY_ARCH,
        model_b=TINY_ARCH,
        distill=DistillConfig(beta=10.0, gamma=1.0),
    )
    base.update(kw)
    return ProtocolConfig(**base)


def tiny_views(seed=0, n=1500, alpha=0.1, **spec):
    spec = {"vocab": 40, **spec}
    records = synthesize(SyntheticSpec(n_samples=n, **spec), seed)
    return prepare(records, default_assignment(records.schema), alpha, SplitSpec(seed=seed))


@pytest.fixture(scope="session")
def views():
    return tiny_views()


# verdict lines from the acceptance checks, echoed after the run even when output is captured
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip("]"))):
            terminalreporter.write_line(line)
