"""Calibrated score distributions on [0, 1].

Three models are supported: a single Beta component, a finite Beta mixture and
an empirical sample of scores.  Each exposes ``pdf``, ``cdf``,
``partial_expectation`` (the integral of ``p * f(p)`` over an interval) and
seeded sampling.  The regularized incomplete beta function that backs the
parametric CDFs lives here as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .rng import make_rng


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


_CF_EPS = 1e-12
_CF_MAXIT = 300
_TINY = 1e-300


def _betacf(x: np.ndarray, a: float, b: float) -> np.ndarray:
    # Continued fraction for I_x(a, b), evaluated with the modified Lentz method.
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _TINY, _TINY, d)
    d = 1.0 / d
    h = d.copy()
    done = np.zeros(x.shape, dtype=bool)
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        step = d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(done, h, h * step * delta)
        done |= np.abs(delta - 1.0) < _CF_EPS
        if done.all():
            return h
    raise ArithmeticError(
        f"incomplete beta continued fraction did not converge for a={a}, b={b}"
    )


def reg_inc_beta(x, a: float, b: float):
    """Regularized incomplete beta function ``I_x(a, b)``.

    ``x`` may be a scalar or an array; ``a`` and ``b`` are positive scalars.
    Uses the continued fraction on whichever side of
    ``(a + 1) / (a + b + 2)`` converges fastest.
    """
    a = float(a)
    b = float(b)
    if not (a > 0 and b > 0) or math.isinf(a) or math.isinf(b):
        raise DomainError(f"shape parameters must be positive and finite, got a={a}, b={b}")
    xs = np.asarray(x, dtype=float)
    if np.any(np.isnan(xs)) or np.any((xs < 0.0) | (xs > 1.0)):
        raise DomainError("x must lie in [0, 1]")
    scalar = xs.ndim == 0
    xs = np.atleast_1d(xs)
    out = np.empty_like(xs)
    out[xs == 0.0] = 0.0
    out[xs == 1.0] = 1.0
    inner = (xs > 0.0) & (xs < 1.0)
    if inner.any():
        xi = xs[inner]
        lbeta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
        front = np.exp(a * np.log(xi) + b * np.log1p(-xi) - lbeta)
        flip = xi > (a + 1.0) / (a + b + 2.0)
        res = np.empty_like(xi)
        if (~flip).any():
            res[~flip] = front[~flip] * _betacf(xi[~flip], a, b) / a
        if flip.any():
            res[flip] = 1.0 - front[flip] * _betacf(1.0 - xi[flip], b, a) / b
        out[inner] = np.clip(res, 0.0, 1.0)
    return float(out[0]) if scalar else out


def _check_unit(p, name: str = "p") -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if np.any(np.isnan(arr)) or np.any((arr < 0.0) | (arr > 1.0)):
        raise DomainError(f"{name} must lie in [0, 1]")
    return arr


def _check_interval(lo, hi) -> tuple[np.ndarray, np.ndarray]:
    lo_arr = _check_unit(lo, "lower bound")
    hi_arr = _check_unit(hi, "upper bound")
    if np.any(lo_arr > hi_arr):
        raise DomainError("interval lower bound exceeds upper bound")
    return lo_arr, hi_arr


def _out(arr: np.ndarray):
    return float(arr) if np.ndim(arr) == 0 else arr


@dataclass(frozen=True)
class Beta:
    """A single Beta(alpha, beta) score model."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise DomainError(f"Beta shapes must be positive, got ({self.alpha}, {self.beta})")
        if math.isinf(self.alpha) or math.isinf(self.beta):
            raise DomainError("Beta shapes must be finite")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    @property
    def label(self) -> str:
        return f"Beta({self.alpha:g},{self.beta:g})"

    def pdf(self, p):
        p = _check_unit(p)
        a, b = self.alpha, self.beta
        lbeta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_p = np.where(a == 1.0, 0.0, (a - 1.0) * np.log(p))
            log_q = np.where(b == 1.0, 0.0, (b - 1.0) * np.log1p(-p))
            dens = np.exp(log_p + log_q - lbeta)
        return _out(dens)

    def cdf(self, p):
        return reg_inc_beta(_check_unit(p), self.alpha, self.beta)

    def partial_expectation(self, lo, hi):
        # int_0^x p f(p) dp = mean * I_x(alpha + 1, beta)
        lo, hi = _check_interval(lo, hi)
        a1 = self.alpha + 1.0
        upper = reg_inc_beta(hi, a1, self.beta)
        lower = reg_inc_beta(lo, a1, self.beta)
        return _out(np.maximum(self.mean * (np.asarray(upper) - np.asarray(lower)), 0.0))

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` scores as G_a / (G_a + G_b) from two Gamma variates."""
        x = rng.standard_gamma(self.alpha, size=n)
        y = rng.standard_gamma(self.beta, size=n)
        total = x + y
        # Both gammas can underflow to 0 for very small shapes.
        return np.divide(x, total, out=np.full(n, self.mean), where=total > 0)


@dataclass(frozen=True)
class BetaMixture:
    """Finite mixture ``sum_k w_k Beta(alpha_k, beta_k)``."""

    components: tuple[Beta, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not self.components:
            raise DomainError("a mixture needs at least one component")
        if len(self.components) != len(self.weights):
            raise DomainError("components and weights differ in length")
        if any(not (0.0 <= w <= 1.0) for w in self.weights):
            raise DomainError("mixture weights must lie in [0, 1]")
        if abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise DomainError(f"mixture weights sum to {math.fsum(self.weights)!r}, not 1")

    @classmethod
    def of(cls, *triples: tuple[float, float, float]) -> "BetaMixture":
        """Build from ``(alpha, beta, weight)`` triples."""
        return cls(tuple(Beta(a, b) for a, b, _ in triples), tuple(w for _, _, w in triples))

    @property
    def mean(self) -> float:
        return math.fsum(w * c.mean for c, w in zip(self.components, self.weights))

    @property
    def label(self) -> str:
        return " + ".join(f"{w:g}*{c.label}" for c, w in zip(self.components, self.weights))

    def _combine(self, values) -> object:
        total = sum(w * np.asarray(v) for w, v in zip(self.weights, values))
        return _out(np.asarray(total, dtype=float))

    def pdf(self, p):
        p = _check_unit(p)
        return self._combine(c.pdf(p) for c in self.components)

    def cdf(self, p):
        p = _check_unit(p)
        return _out(np.clip(np.asarray(self._combine(c.cdf(p) for c in self.components)), 0.0, 1.0))

    def partial_expectation(self, lo, hi):
        lo, hi = _check_interval(lo, hi)
        return self._combine(c.partial_expectation(lo, hi) for c in self.components)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` scores grouped by component; the component counts are multinomial."""
        counts = rng.multinomial(n, self.weights)
        parts = [c.draw(rng, int(k)) for c, k in zip(self.components, counts)]
        return np.concatenate(parts) if parts else np.empty(0)


@dataclass(frozen=True, eq=False)
class EmpiricalScores:
    """An observed sample of calibrated scores.

    The CDF is the fraction of scores ``<= p``.  Partial expectations are exact
    sums over the half-open interval ``[lo, hi)``, closed at ``hi == 1`` so that
    adjacent intervals partition the sample.
    """

    scores: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.scores, dtype=float).ravel()
        if arr.size == 0:
            raise DomainError("an empirical score sample cannot be empty")
        if np.any(np.isnan(arr)) or np.any((arr < 0.0) | (arr > 1.0)):
            raise DomainError("empirical scores must lie in [0, 1]")
        arr.sort()
        arr.setflags(write=False)
        object.__setattr__(self, "scores", arr)

    def __len__(self) -> int:
        return self.scores.size

    @property
    def mean(self) -> float:
        return math.fsum(self.scores) / self.scores.size

    @property
    def label(self) -> str:
        return f"Empirical(n={self.scores.size})"

    def histogram(self) -> tuple[np.ndarray, np.ndarray]:
        """Density histogram on [0, 1] with Freedman-Diaconis bins, at least 20."""
        q75, q25 = np.percentile(self.scores, [75, 25])
        width = 2.0 * (q75 - q25) * self.scores.size ** (-1.0 / 3.0)
        bins = 20 if width <= 0 else max(20, int(math.ceil(1.0 / width)))
        dens, edges = np.histogram(self.scores, bins=bins, range=(0.0, 1.0), density=True)
        return dens, edges

    def pdf(self, p):
        p = _check_unit(p)
        dens, edges = self.histogram()
        idx = np.clip(np.searchsorted(edges, p, side="right") - 1, 0, dens.size - 1)
        return _out(dens[idx])

    def cdf(self, p):
        p = _check_unit(p)
        return _out(np.searchsorted(self.scores, p, side="right") / self.scores.size)

    def _prefix(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self.scores)))

    def below(self, t) -> tuple[np.ndarray, np.ndarray]:
        """Count and sum of the scores strictly below each threshold in ``t``."""
        t = _check_unit(t)
        idx = np.searchsorted(self.scores, t, side="left")
        return _out(idx), _out(self._prefix()[idx])

    def _below(self, x: np.ndarray) -> np.ndarray:
        # number of scores strictly below x, or all of them at x == 1
        idx = np.searchsorted(self.scores, x, side="left")
        return np.where(x >= 1.0, self.scores.size, idx)

    def partial_expectation(self, lo, hi):
        lo, hi = _check_interval(lo, hi)
        if lo.ndim == 0 and hi.ndim == 0:
            i, j = int(self._below(lo)), int(self._below(hi))
            return math.fsum(self.scores[i:j]) / self.scores.size
        prefix = self._prefix()
        return _out((prefix[self._below(hi)] - prefix[self._below(lo)]) / self.scores.size)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Resample ``n`` scores with replacement."""
        return self.scores[rng.integers(0, self.scores.size, size=n)]


ScoreDistribution = Union[Beta, BetaMixture, EmpiricalScores]

# The three simulated score regimes.
REFERENCE_REGIMES: dict[str, BetaMixture] = {
    "beta_mixture": BetaMixture.of((15, 2, 0.5), (2, 15, 0.5)),
    "right_skewed": BetaMixture.of((15, 2, 0.7), (2, 15, 0.3)),
    "left_skewed": BetaMixture.of((15, 2, 0.3), (2, 15, 0.7)),
}

REGIME_LABELS = {
    "beta_mixture": "Beta Mixture",
    "right_skewed": "Beta Right Skewed",
    "left_skewed": "Beta Left Skewed",
}


def pdf(d: ScoreDistribution, p):
    return d.pdf(p)


def cdf(d: ScoreDistribution, p):
    return d.cdf(p)


def partial_expectation(d: ScoreDistribution, a, b):
    """Integral of ``p * f(p)`` over ``[a, b]``."""
    return d.partial_expectation(a, b)


def sample(d: ScoreDistribution, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` scores from ``d`` with a generator seeded by ``seed``.

    Mixture draws are shuffled after the per-component fill so the returned
    order is exchangeable.
    """
    if n < 0:
        raise ValueError("sample size must be non-negative")
    rng = make_rng(seed)
    out = d.draw(rng, n)
    if isinstance(d, BetaMixture):
        rng.shuffle(out)
    return out


def load_scores(path: str | Path) -> EmpiricalScores:
    """Read newline-delimited decimal scores; blank lines and ``#`` comments are skipped."""
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                value = float(line)
            except ValueError:
                raise DomainError(f"{path}:{lineno}: cannot parse score {line!r}") from None
            if not (0.0 <= value <= 1.0):
                raise DomainError(f"{path}:{lineno}: score {line} outside [0, 1]")
            values.append(value)
    if not values:
        raise DomainError(f"{path}: no scores found")
    return EmpiricalScores(np.asarray(values))
