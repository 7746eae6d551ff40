import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pdpsearch.mechanisms import (
    NO_NOISE,
    NoiseSource,
    PrivacyLedger,
    compose_advanced,
    compose_basic,
    laplace_from_uniform,
    laplace_scale,
    report_noisy_max,
    risk_multiplier,
    sample_laplace,
    sample_laplace_many,
)


def test_median_uniform_gives_zero():
    assert laplace_from_uniform(0.5, 3.0) == 0.0


def test_inverse_cdf_matches_closed_form():
    for u in (0.01, 0.2, 0.7, 0.99):
        x = laplace_from_uniform(u, 2.0)
        cdf = 0.5 * math.exp(x / 2.0) if x < 0 else 1 - 0.5 * math.exp(-x / 2.0)
        assert cdf == pytest.approx(u, rel=1e-12)


def test_no_noise_sentinel():
    src = NoiseSource(1)
    assert sample_laplace(NO_NOISE, src) == 0.0
    assert not sample_laplace_many(NO_NOISE, 5, src).any()
    assert laplace_scale(1.0, math.inf) == NO_NOISE
    assert laplace_scale(0.0, 1.0) == NO_NOISE


@pytest.mark.parametrize("scale", [0.0, -1.0, float("nan")])
def test_bad_scale(scale):
    with pytest.raises(ValueError):
        sample_laplace(scale, NoiseSource(0))


def test_bad_epsilon():
    with pytest.raises(ValueError):
        laplace_scale(1.0, 0.0)


def test_moments_at_scale_20():
    x = sample_laplace_many(20.0, 10**6, NoiseSource(7))
    assert abs(x.mean()) <= 0.1
    assert abs(x.var() - 800.0) <= 0.05 * 800.0


def test_replay_and_stream_independence():
    a = NoiseSource(3, "trial").uniforms(10)
    b = NoiseSource(3, "trial").uniforms(10)
    c = NoiseSource(3, "other").uniforms(10)
    d = NoiseSource(4, "trial").uniforms(10)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c) and not np.array_equal(a, d)
    assert NoiseSource(3, (1, "x")).uniform() == NoiseSource(3, 1).child("x").uniform()


def test_rnm_zero_noise_and_single_candidate():
    assert report_noisy_max({0: 10, 1: 0, 2: 0}, 1.0, math.inf, NoiseSource(0)) == (0, 10.0)
    for i in range(20):
        assert report_noisy_max({5: -3.0}, 1.0, 0.5, NoiseSource(0, i))[0] == 5
    with pytest.raises(ValueError):
        report_noisy_max({}, 1.0, 1.0, NoiseSource(0))


@given(st.dictionaries(st.integers(0, 20), st.integers(-5, 5), min_size=1))
def test_rnm_infinite_epsilon_is_argmax_with_id_ties(values):
    best = max(values.values())
    expected = min(k for k, v in values.items() if v == best)
    assert report_noisy_max(values, 1.0, math.inf, NoiseSource(0)) == (expected, float(best))


def test_rnm_symmetric_pair():
    trials = 10**5
    wins = sum(report_noisy_max({0: 1, 1: 1}, 1.0, 1.0, NoiseSource(11, i))[0] == 0 for i in range(trials))
    assert abs(wins / trials - 0.5) <= 0.01


def test_rnm_empirical_dp():
    from pdpsearch.audit import rnm_audit

    rows = rnm_audit(epsilon=1.0, trials=20_000, seed=5)
    assert rows and all(r.ok for r in rows)


def test_compose_examples():
    assert compose_basic(PrivacyLedger(0.05)) == 0
    assert compose_basic(PrivacyLedger(0.05, 3)) == pytest.approx(0.15, abs=1e-15)
    for k in range(1, 11):
        assert compose_basic(PrivacyLedger(1 / 20, k - 1)) == pytest.approx((k - 1) / 20, abs=1e-15)
    assert compose_advanced(PrivacyLedger(0.05, 0), 1e-3) == 0
    expected = 2 * mpmath.sqrt(8 * mpmath.log(1000)) * mpmath.mpf("0.05")
    assert compose_advanced(PrivacyLedger(0.05, 4), 1e-3) == pytest.approx(float(expected), rel=1e-13)
    assert round(float(expected), 4) == 0.7434


@pytest.mark.parametrize("delta", [0.0, 1.0, -0.1, 2.0, None])
def test_compose_advanced_rejects_bad_delta(delta):
    with pytest.raises(ValueError):
        compose_advanced(PrivacyLedger(0.1, 2), delta)


def test_ledger_delta_used_by_default():
    assert compose_advanced(PrivacyLedger(0.1, 2, delta=0.01)) == compose_advanced(PrivacyLedger(0.1, 2), 0.01)


@given(
    st.floats(0.001, 2.0),
    st.floats(0.001, 2.0),
    st.integers(1, 50),
    st.integers(1, 50),
    st.floats(1e-9, 0.5),
    st.floats(1e-9, 0.5),
)
def test_compose_advanced_monotone(e1, e2, r1, r2, d1, d2):
    lo = PrivacyLedger(min(e1, e2), min(r1, r2))
    hi = PrivacyLedger(max(e1, e2), max(r1, r2))
    assert compose_advanced(lo, max(d1, d2)) <= compose_advanced(hi, min(d1, d2))


def test_ledger_charges_monotonically():
    ledger = PrivacyLedger(0.2)
    seen = []
    for _ in range(4):
        ledger.charge()
        seen.append(ledger.rounds_used)
    assert seen == [1, 2, 3, 4]
    assert ledger.snapshot()["epsilon"] == pytest.approx(0.8)


def test_risk_multiplier():
    assert risk_multiplier(0) == 1
    assert risk_multiplier(0.15) == pytest.approx(1.1618, abs=1e-4)
    curve = [risk_multiplier((k - 1) / 20) for k in range(1, 11)]
    assert all(a < b for a, b in itertools.pairwise(curve))
    with pytest.raises(ValueError):
        risk_multiplier(-0.1)
