import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fedpdd.errors import DomainError
from fedpdd.privacy import (
    BudgetLedger,
    NoiseCalibration,
    PrivacySpec,
    calibrate,
    classical_sigma,
    perturb,
    privacy_curve,
    record_release,
)
from oracles import mp_calibrate, mp_condition

GRID = list(itertools.product([0.05, 0.1, 1.0, 5.0, 10.0], [1e-6, 1e-5], [1.0, 2.0, 10.0]))


@pytest.mark.parametrize("eps,delta,sens", GRID)
def test_calibration_against_oracle(eps, delta, sens):
    sigma = calibrate(PrivacySpec(eps, delta, sens)).sigma
    residual = float(mp_condition(sigma, eps, delta, sens))
    # the returned sigma satisfies the condition, and sits on the boundary
    assert residual <= 0.0
    assert abs(residual) <= 1e-9
    assert mp_condition(sigma * 0.999, eps, delta, sens) > 0
    assert sigma == pytest.approx(mp_calibrate(eps, delta, sens), rel=1e-9)


@pytest.mark.parametrize("eps,delta,sens", GRID)
def test_scale_invariance(eps, delta, sens):
    base = calibrate(PrivacySpec(eps, delta, sens)).sigma
    for k in (2.0, 3.5, 10.0):
        assert calibrate(PrivacySpec(eps, delta, k * sens)).sigma == pytest.approx(k * base, rel=1e-9)


@pytest.mark.parametrize("eps,delta,sens", [g for g in GRID if g[0] <= 1.0])
def test_classical_bound_dominates(eps, delta, sens):
    spec = PrivacySpec(eps, delta, sens)
    bound = sens * math.sqrt(2 * math.log(1.25 / delta)) / eps
    assert classical_sigma(spec) == pytest.approx(bound, rel=1e-15)
    assert calibrate(spec).sigma <= bound


def test_unit_example():
    sigma = calibrate(PrivacySpec(1.0, 1e-5, 1.0)).sigma
    assert abs(float(mp_condition(sigma, 1.0, 1e-5, 1.0))) < 1e-9
    assert sigma <= math.sqrt(2 * math.log(1.25e5)) < 4.85


def test_more_epsilon_less_noise():
    sigmas = [calibrate(PrivacySpec(e, 1e-5, 1.0)).sigma for e in (0.05, 0.1, 0.5, 1, 5, 10)]
    assert all(a > b for a, b in zip(sigmas, sigmas[1:]))


@pytest.mark.parametrize("eps,delta", [(0.0, 1e-5), (-1.0, 1e-5), (1.0, 0.0), (1.0, 1.0)])
def test_calibration_domain(eps, delta):
    with pytest.raises(DomainError):
        calibrate(PrivacySpec(eps, delta, 1.0))


def test_spec_domain():
    with pytest.raises(DomainError):
        PrivacySpec(1.0, 1e-5, 0.0)
    with pytest.raises(DomainError):
        PrivacySpec(1.0, 1.5, 1.0)


def test_curve_decreasing_in_sigma():
    vals = [privacy_curve(s, 1.0, 1.0) for s in np.linspace(0.2, 10, 50)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


# ------------------------------------------------------------------ perturb


def test_noiseless_identity():
    z = np.array([1.0, -2.0])
    out = perturb(z, NoiseCalibration.noiseless(), np.random.default_rng(0))
    assert np.array_equal(out, z) and out is not z


def test_perturb_variance():
    cal = NoiseCalibration(1.0, None)
    out = perturb(np.zeros(1_000_000), cal, np.random.default_rng(123))
    assert abs(out.var() - 1.0) < 0.01
    assert abs(out.mean()) < 0.005


def test_perturb_deterministic():
    cal = NoiseCalibration(2.0, None)
    z = np.ones((4, 2))
    a = perturb(z, cal, np.random.default_rng(7))
    b = perturb(z, cal, np.random.default_rng(7))
    assert np.array_equal(a, b)


# ------------------------------------------------------------------- ledger


def test_two_entries():
    led = BudgetLedger()
    spec = PrivacySpec(1.0, 1e-5, 1.0)
    record_release(led, "A", 0, 1, spec)
    record_release(led, "A", 1, 1, spec)
    assert led.totals("A") == (2.0, 2e-5)


def test_empty_ledger():
    assert BudgetLedger().totals("A") == (0.0, 0.0)


def test_rounds_times_samples():
    led = BudgetLedger()
    spec = PrivacySpec(0.01, 1e-7, 1.0)
    for r in range(5):
        record_release(led, "B", r, 100, spec)
    assert led.totals("B")[0] == pytest.approx(5.0, rel=1e-12)


def test_release_needs_samples():
    with pytest.raises(DomainError):
        record_release(BudgetLedger(), "A", 0, 0, PrivacySpec(1.0, 1e-5, 1.0))


entry = st.tuples(st.sampled_from("AB"), st.integers(0, 20), st.integers(1, 5000),
                  st.floats(1e-6, 10.0), st.floats(1e-12, 1e-3))


@settings(max_examples=1000, deadline=None)
@given(entries=st.lists(entry, max_size=30))
def test_totals_equal_brute_force(entries):
    led = BudgetLedger()
    for party, rnd, n, e, d in entries:
        record_release(led, party, rnd, n, PrivacySpec(e, d, 1.0))
    for party in "AB":
        mine = [(n, e, d) for p, _, n, e, d in entries if p == party]
        eps = math.fsum(n * e for n, e, _ in mine)
        delta = math.fsum(n * d for n, _, d in mine)
        got = led.totals(party)
        assert got[0] == pytest.approx(eps, rel=1e-12, abs=0)
        assert got[1] == pytest.approx(delta, rel=1e-12, abs=0)
    assert len(led.entries) == len(entries)


def test_report_lists_totals_and_entries():
    led = BudgetLedger()
    record_release(led, "A", 0, 3, PrivacySpec(0.5, 1e-6, 1.0))
    text = led.report()
    assert "party=A epsilon=1.5" in text
    assert "round=0 samples=3" in text
