"""Analytic Gaussian mechanism calibration, logit perturbation and budget accounting."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .errors import DomainError

BISECTION_RTOL = 1e-12


@dataclass(frozen=True)
class PrivacySpec:
    epsilon: float
    delta: float
    sensitivity: float

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise DomainError(f"epsilon must be >= 0, got {self.epsilon}")
        if not 0.0 <= self.delta <= 1.0:
            raise DomainError(f"delta must lie in [0, 1], got {self.delta}")
        if not self.sensitivity > 0:
            raise DomainError(f"sensitivity must be > 0, got {self.sensitivity}")


@dataclass(frozen=True)
class NoiseCalibration:
    sigma: float
    spec: PrivacySpec | None

    @classmethod
    def noiseless(cls) -> "NoiseCalibration":
        """Zero-noise calibration; carries no privacy guarantee."""
        return cls(0.0, None)


def privacy_curve(sigma: float, epsilon: float, sensitivity: float) -> float:
    """Left side of the analytic Gaussian condition; decreasing in ``sigma``.

    ``Phi(D/2s - e*s/D) - exp(e) * Phi(-D/2s - e*s/D)``
    """
    a = sensitivity / (2.0 * sigma)
    b = epsilon * sigma / sensitivity
    return float(ndtr(a - b) - math.exp(epsilon) * ndtr(-a - b))


def classical_sigma(spec: PrivacySpec) -> float:
    return spec.sensitivity * math.sqrt(2.0 * math.log(1.25 / spec.delta)) / spec.epsilon


def calibrate(spec: PrivacySpec) -> NoiseCalibration:
    """Smallest sigma for which the Gaussian mechanism is (epsilon, delta)-DP.

    Bisects on the analytic condition, starting from the bracket
    ``[sigma0 / 100, 100 * sigma0]`` around the classical bound and widening
    it by halving/doubling if needed. The returned sigma always satisfies
    the condition.
    """
    if spec.epsilon <= 0:
        raise DomainError("calibration needs epsilon > 0")
    if not 0.0 < spec.delta < 1.0:
        raise DomainError("calibration needs 0 < delta < 1")
    eps, delta = spec.epsilon, spec.delta

    # the condition depends on sigma only through sigma / sensitivity
    def excess(s):
        return privacy_curve(s, eps, 1.0) - delta

    s0 = classical_sigma(PrivacySpec(eps, delta, 1.0))
    lo, hi = s0 / 100.0, s0 * 100.0
    while excess(lo) <= 0:
        lo /= 2.0
    while excess(hi) > 0:
        hi *= 2.0
    while hi - lo > BISECTION_RTOL * hi:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return NoiseCalibration(hi * spec.sensitivity, spec)


def perturb(z, calibration: NoiseCalibration, rng: np.random.Generator) -> np.ndarray:
    """Add i.i.d. ``N(0, sigma^2)`` noise to every logit component."""
    z = np.asarray(z, dtype=np.float64)
    if calibration.sigma == 0.0:
        return z.copy()
    return z + rng.normal(0.0, calibration.sigma, size=z.shape)


@dataclass(frozen=True)
class BudgetEntry:
    party: str
    round: int
    samples: int
    epsilon: float
    delta: float


@dataclass
class BudgetLedger:
    """Sequential-composition accountant: every release adds its (epsilon, delta)."""

    entries: list[BudgetEntry] = field(default_factory=list)
    _eps: dict = field(default_factory=lambda: defaultdict(float))
    _delta: dict = field(default_factory=lambda: defaultdict(float))

    def totals(self, party: str) -> tuple[float, float]:
        return self._eps.get(party, 0.0), self._delta.get(party, 0.0)

    @property
    def parties(self) -> list[str]:
        return sorted(self._eps)

    def report(self) -> str:
        lines = ["# privacy budget (basic composition)", "[totals]"]
        for p in self.parties:
            e, d = self.totals(p)
            lines.append(f"party={p} epsilon={e!r} delta={d!r}")
        lines.append("[entries]")
        for e in self.entries:
            lines.append(
                f"party={e.party} round={e.round} samples={e.samples} "
                f"epsilon={e.epsilon!r} delta={e.delta!r}"
            )
        return "\n".join(lines) + "\n"


def record_release(ledger: BudgetLedger, party: str, round: int, samples: int,
                   spec: PrivacySpec) -> None:
    if samples < 1:
        raise DomainError("a release covers at least one sample")
    ledger.entries.append(BudgetEntry(party, round, samples, spec.epsilon, spec.delta))
    ledger._eps[party] += samples * spec.epsilon
    ledger._delta[party] += samples * spec.delta
