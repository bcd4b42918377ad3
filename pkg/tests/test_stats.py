"""Confidence-bound arithmetic: worked values, edge conventions, and the
distributional soundness of the certified intervals."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mppac import (
    chernoff_minimizers,
    combined_alpha_hat,
    ctmdp_budget,
    ctmdp_value_bounds,
    ec_required_samples,
    estimate_rate,
    greybox_miss_probability,
    lower_tp_estimate,
    mdp_budget,
    rate_inconfidence,
    rate_inconfidence_parts,
    rate_interval,
    rate_samples,
    split_mp_inconfidence,
    tp_inconfidence,
    tp_width,
)

# ---------------------------------------------------------------------------
# transition-probability bounds


def test_tp_inconfidence_worked_value():
    assert tp_inconfidence(0.1, 0.05, 1000) == pytest.approx(5e-6)


def test_tp_inconfidence_scales_linearly():
    base = tp_inconfidence(0.1, 0.2, 10)
    assert tp_inconfidence(0.2, 0.2, 10) == pytest.approx(2 * base)
    assert tp_inconfidence(0.1, 0.2, 20) == pytest.approx(base / 2)


def test_tp_width_no_samples_is_vacuous():
    assert tp_width(0, 0.01) == 1.0
    assert tp_width(-3, 0.01) == 1.0


def test_tp_width_certain_inconfidence_is_free():
    assert tp_width(30, 1.0) == 0.0
    assert tp_width(1, 2.0) == 0.0


def test_tp_width_worked_values():
    assert tp_width(30, 0.1) == pytest.approx(0.196, abs=1e-3)
    assert tp_width(30, 0.058) == pytest.approx(0.22, abs=5e-3)


def test_tp_width_is_capped_at_one():
    assert tp_width(1, 1e-12) == 1.0


@given(
    n=st.integers(min_value=1, max_value=10**9),
    m=st.integers(min_value=1, max_value=10**9),
    delta=st.floats(min_value=1e-12, max_value=0.999),
)
def test_tp_width_monotone_in_count(n, m, delta):
    lo, hi = sorted((n, m))
    assert tp_width(hi, delta) <= tp_width(lo, delta)


@given(
    n=st.integers(min_value=1, max_value=10**9),
    d1=st.floats(min_value=1e-12, max_value=0.999),
    d2=st.floats(min_value=1e-12, max_value=0.999),
)
def test_tp_width_monotone_in_inconfidence(n, d1, d2):
    lo, hi = sorted((d1, d2))
    assert tp_width(n, hi) <= tp_width(n, lo)


def test_lower_tp_estimate_worked_value():
    assert lower_tp_estimate(10, 30, 0.196) == pytest.approx(0.13733, abs=1e-4)


def test_lower_tp_estimate_clamps_at_zero():
    assert lower_tp_estimate(1, 30, 0.5) == 0.0


@given(
    counts=st.lists(st.integers(min_value=0, max_value=1000), min_size=1, max_size=6),
    delta=st.floats(min_value=1e-9, max_value=0.999),
)
def test_lower_estimates_never_exceed_unit_mass(counts, delta):
    # the pessimistic estimates of one pair's successors form a sub-distribution
    n = sum(counts)
    if n == 0:
        return
    w = tp_width(n, delta)
    total = sum(lower_tp_estimate(c, n, w) for c in counts)
    assert total <= 1.0 + 1e-12


# ---------------------------------------------------------------------------
# end-component certification


def test_ec_required_samples_worked_values():
    assert ec_required_samples(0.9, 0.1) == 1
    assert ec_required_samples(0.1, 0.1) == 22
    assert ec_required_samples(0.01, 0.5) == 7


def test_ec_required_samples_certain_successor():
    assert ec_required_samples(0.5, 1.0) == 1


@given(
    delta=st.floats(min_value=1e-9, max_value=0.9),
    p_min=st.floats(min_value=1e-6, max_value=0.999),
)
def test_ec_required_samples_suffice(delta, p_min):
    # n samples all staying leave at most (1-p_min)^n <= delta_tp chance of
    # a missed leaving transition
    n = ec_required_samples(delta, p_min)
    assert n >= 1
    assert (1.0 - p_min) ** n <= delta + 1e-12


def test_greybox_miss_probability_worked_values():
    assert greybox_miss_probability(0.05, 200) == pytest.approx(3.5e-5, rel=0.05)
    assert greybox_miss_probability(0.1, 30) == pytest.approx(0.042, abs=1e-3)


def test_greybox_miss_probability_unsampled_pair():
    assert greybox_miss_probability(0.3, 0) == 1.0


# ---------------------------------------------------------------------------
# rate estimation (CTMDP)


def test_estimate_rate_worked_values():
    assert estimate_rate([0.5, 0.5]) == pytest.approx(2.0)
    assert estimate_rate([1.0, 2.0, 3.0]) == pytest.approx(0.5)


def test_estimate_rate_rejects_empty():
    with pytest.raises(ValueError):
        estimate_rate([])


def test_estimate_rate_rejects_zero_mean():
    with pytest.raises(ValueError):
        estimate_rate([0.0, 0.0])


def test_rate_interval_is_symmetric_relative():
    low, high = rate_interval(2.0, 0.1)
    assert low == pytest.approx(1.8)
    assert high == pytest.approx(2.2)


def test_rate_inconfidence_reference_point():
    # 2500 samples at 5% relative error: certified, but not at 5% inconfidence
    v = rate_inconfidence(2500, 0.05)
    assert 0.05 < v <= 0.1


def test_rate_inconfidence_parts_reference_point():
    below, above = rate_inconfidence_parts(2500, 0.05)
    assert below <= 0.05
    assert below + above == pytest.approx(rate_inconfidence(2500, 0.05))


def test_rate_inconfidence_decreases_with_samples():
    values = [rate_inconfidence(n, 0.05) for n in (100, 500, 2500, 10000)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_chernoff_minimizers_match_closed_form():
    below, above = chernoff_minimizers(2500, 0.05)
    assert below == pytest.approx(1.0 / 1.05 - 1.0, abs=1e-3)
    assert above == pytest.approx(1.0 / 0.95 - 1.0, abs=1e-3)


@given(
    alpha=st.floats(min_value=0.02, max_value=0.5),
    delta=st.floats(min_value=1e-7, max_value=0.5),
)
@settings(max_examples=30, deadline=None)
def test_rate_samples_is_the_boundary(alpha, delta):
    n = rate_samples(alpha, delta)
    assert rate_inconfidence(n, alpha) <= delta
    if n > 1:
        assert rate_inconfidence(n - 1, alpha) > delta


@pytest.mark.parametrize("lam", [0.5, 1.0, 10.0])
def test_rate_interval_statistical_soundness(lam):
    # the certified interval misses the true rate no more often than delta_r
    # (Chernoff is conservative, so the observed miss rate sits well below)
    alpha, delta = 0.05, 0.1
    n = rate_samples(alpha, delta)
    rng = np.random.default_rng(1234)
    trials = 200
    dwell = rng.exponential(1.0 / lam, size=(trials, n))
    lam_hat = 1.0 / dwell.mean(axis=1)
    misses = 0
    for lh in lam_hat:
        low, high = rate_interval(lh, alpha)
        if not (low <= lam <= high):
            misses += 1
    assert misses / trials <= 0.15


# ---------------------------------------------------------------------------
# inconfidence budgets


def test_split_mp_inconfidence_worked_values():
    d1, d2 = split_mp_inconfidence(0.1, 0.05)
    assert d1 == pytest.approx(0.0952381, abs=1e-6)
    assert d2 == pytest.approx(0.0047619, abs=1e-6)
    assert split_mp_inconfidence(0.1, 1.0) == pytest.approx((0.05, 0.05))


@given(
    delta=st.floats(min_value=1e-9, max_value=1.0),
    p_min=st.floats(min_value=1e-6, max_value=1.0),
)
def test_split_preserves_total_inconfidence(delta, p_min):
    d1, d2 = split_mp_inconfidence(delta, p_min)
    assert d1 + d2 == pytest.approx(delta)
    assert d1 > 0 and d2 > 0


@given(
    delta=st.floats(min_value=1e-9, max_value=1.0),
    p_min=st.floats(min_value=1e-6, max_value=1.0),
    pairs=st.integers(min_value=1, max_value=10**6),
)
def test_ctmdp_budget_balances_tp_and_rate_shares(delta, p_min, pairs):
    budget = ctmdp_budget(delta, p_min, pairs)
    assert budget.delta_tp == pytest.approx(budget.delta_r, rel=1e-9)
    assert budget.delta_mp1 + budget.delta_mp2 == pytest.approx(delta)


def test_mdp_budget_spends_everything_on_transitions():
    budget = mdp_budget(0.1, 0.05, 1000)
    assert budget.delta_mp == 0.1
    assert budget.delta_tp == pytest.approx(5e-6)
    assert budget.delta_r is None


def test_combined_alpha_hat_worked_value():
    assert combined_alpha_hat(0.03, 0.00084, 0.05) == pytest.approx(0.0476, abs=5e-4)


def test_combined_alpha_hat_rejects_width_at_pmin():
    with pytest.raises(ValueError):
        combined_alpha_hat(0.1, 0.05, 0.05)


def test_ctmdp_value_bounds_worked_values():
    low, high, err = ctmdp_value_bounds(1.0, 0.05, 1.0)
    assert low == pytest.approx(0.9048, abs=1e-4)
    assert high == pytest.approx(1.1053, abs=1e-4)
    assert err == pytest.approx(0.10526, abs=1e-4)


@given(
    v=st.floats(min_value=0.0, max_value=10.0),
    alpha=st.floats(min_value=0.0, max_value=0.9),
)
def test_ctmdp_value_bounds_bracket_the_value(v, alpha):
    low, high, err = ctmdp_value_bounds(v, alpha, 10.0)
    assert low <= v <= high
    assert err >= 0.0
    assert math.isfinite(err)
