import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dualthresh.policy import (
    Action,
    ThresholdPair,
    decide,
    expected_contribution,
    simulate_decision,
    simulate_decisions,
)

T = ThresholdPair(0.4, 0.6)
unit = st.floats(min_value=0.0, max_value=1.0)


@st.composite
def pairs(draw):
    a, b = sorted((draw(unit), draw(unit)))
    return ThresholdPair(a, b)


@pytest.mark.parametrize(
    "p,action",
    [(0.30, Action.AUTO_NEGATIVE), (0.40, Action.REVIEW), (0.59, Action.REVIEW), (0.60, Action.AUTO_POSITIVE)],
)
def test_decide_boundaries(p, action):
    assert decide(p, T) is action


def test_threshold_pair_validation():
    with pytest.raises(ValueError):
        ThresholdPair(0.7, 0.3)
    with pytest.raises(ValueError):
        ThresholdPair(-0.1, 0.3)
    assert ThresholdPair(0.5, 0.5).degenerate


def test_degenerate_pair_has_no_review_region():
    t = ThresholdPair(0.5, 0.5)
    assert decide(0.5, t) is Action.AUTO_POSITIVE
    assert decide(0.4999, t) is Action.AUTO_NEGATIVE


def test_expected_contribution_examples():
    t = ThresholdPair(0.2, 0.8)
    c = expected_contribution(0.95, t)
    assert (c.tp, c.fp, c.tn, c.fn) == pytest.approx((0.95, 0.05, 0.0, 0.0))
    c = expected_contribution(0.5, t)
    assert (c.tp, c.fp, c.tn, c.fn) == (0.5, 0.0, 0.5, 0.0)
    c = expected_contribution(0.0, t)
    assert (c.tp, c.fp, c.tn, c.fn) == (0.0, 0.0, 1.0, 0.0)


@pytest.mark.parametrize(
    "p,label,expected",
    [(0.9, 0, (1, False)), (0.5, 1, (1, True)), (0.1, 1, (0, False)), (0.5, 0, (0, True))],
)
def test_simulate_decision(p, label, expected):
    assert simulate_decision(p, ThresholdPair(0.2, 0.8), label) == expected


def test_simulate_decision_rejects_bad_label():
    with pytest.raises(ValueError):
        simulate_decision(0.5, T, 2)


@given(unit, pairs())
def test_contribution_sums_to_one(p, t):
    c = expected_contribution(p, t)
    assert c.tp + c.fp + c.tn + c.fn == pytest.approx(1.0, abs=1e-15)
    assert all(0.0 <= v <= 1.0 for v in (c.tp, c.fp, c.tn, c.fn))


@given(unit, pairs())
def test_error_terms_only_in_auto_regions(p, t):
    c = expected_contribution(p, t)
    action = decide(p, t)
    if c.fp > 0:
        assert action is Action.AUTO_POSITIVE
    if c.fn > 0:
        assert action is Action.AUTO_NEGATIVE


@given(st.lists(unit, min_size=2, max_size=50), pairs())
def test_decide_monotone(ps, t):
    order = {Action.AUTO_NEGATIVE: 0, Action.REVIEW: 1, Action.AUTO_POSITIVE: 2}
    ranks = [order[decide(p, t)] for p in sorted(ps)]
    assert ranks == sorted(ranks)


@given(unit, pairs(), st.sampled_from([0, 1]))
def test_reviewed_decisions_are_correct(p, t, label):
    pred, reviewed = simulate_decision(p, t, label)
    if reviewed:
        assert pred == label


@given(st.lists(unit, min_size=1, max_size=30), st.lists(st.booleans(), min_size=30, max_size=30), pairs())
def test_vectorised_matches_scalar(ps, labels, t):
    labels = labels[: len(ps)]
    pred, rev = simulate_decisions(np.array(ps), t, np.array(labels))
    for k, p in enumerate(ps):
        assert (int(pred[k]), bool(rev[k])) == simulate_decision(p, t, int(labels[k]))
