"""Double-threshold decision rule.

Scores below ``tau_l`` are auto-rejected, scores in ``[tau_l, tau_u)`` go to a
(perfect) human reviewer and scores at or above ``tau_u`` are auto-accepted.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class Action(enum.Enum):
    AUTO_NEGATIVE = "auto_negative"
    REVIEW = "review"
    AUTO_POSITIVE = "auto_positive"


@dataclass(frozen=True, order=True)
class ThresholdPair:
    """Lower and upper cutoffs.  ``tau_l == tau_u`` is a single-threshold policy."""

    tau_l: float
    tau_u: float

    def __post_init__(self):
        if not (0.0 <= self.tau_l <= 1.0 and 0.0 <= self.tau_u <= 1.0):
            raise ValueError(f"thresholds must lie in [0, 1], got ({self.tau_l}, {self.tau_u})")
        if self.tau_l > self.tau_u:
            raise ValueError(f"tau_l={self.tau_l} exceeds tau_u={self.tau_u}")

    @property
    def degenerate(self) -> bool:
        return self.tau_l == self.tau_u


@dataclass(frozen=True)
class ExpectedContribution:
    tp: float
    fp: float
    tn: float
    fn: float


def decide(p: float, t: ThresholdPair) -> Action:
    if p < t.tau_l:
        return Action.AUTO_NEGATIVE
    if p < t.tau_u:
        return Action.REVIEW
    return Action.AUTO_POSITIVE


def expected_contribution(p: float, t: ThresholdPair) -> ExpectedContribution:
    """Expected confusion-matrix contribution of one calibrated score."""
    action = decide(p, t)
    q = 1.0 - p
    if action is Action.AUTO_POSITIVE:
        return ExpectedContribution(tp=p, fp=q, tn=0.0, fn=0.0)
    if action is Action.REVIEW:
        return ExpectedContribution(tp=p, fp=0.0, tn=q, fn=0.0)
    return ExpectedContribution(tp=0.0, fp=0.0, tn=q, fn=p)


def simulate_decision(p: float, t: ThresholdPair, label: int) -> tuple[int, bool]:
    """Final prediction and review flag for one instance with a known label."""
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label!r}")
    action = decide(p, t)
    if action is Action.REVIEW:
        return label, True
    return (1 if action is Action.AUTO_POSITIVE else 0), False


def simulate_decisions(
    scores: np.ndarray, t: ThresholdPair, labels: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`simulate_decision` over arrays of scores and boolean labels."""
    scores = np.asarray(scores)
    labels = np.asarray(labels, dtype=bool)
    reviewed = (scores >= t.tau_l) & (scores < t.tau_u)
    predictions = np.where(reviewed, labels, scores >= t.tau_u)
    return predictions, reviewed
