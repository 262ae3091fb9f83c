"""Kolmogorov-Smirnov tests, empirical transforms and moment probes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import kstwobign

from .distributions import EmpiricalSample

__all__ = [
    "StatsError",
    "KsReport",
    "critical_constant",
    "ks_one_sample",
    "ks_two_sample",
    "empirical_lst",
    "empirical_mgf",
    "MIN_N",
]

MIN_N = 100
# asymptotic Kolmogorov quantiles used throughout the acceptance suite
_C = {0.01: 1.628, 0.05: 1.358}
OVERFLOW = 1e300


class StatsError(ValueError):
    pass


def critical_constant(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise StatsError(f"significance must lie in (0, 1), got {alpha}")
    return _C.get(alpha, float(kstwobign.isf(alpha)))


@dataclass(frozen=True)
class KsReport:
    test: str
    statistic: float
    critical: float
    n: int
    alpha: float
    n2: Optional[int] = None
    seed: Optional[int] = None

    @property
    def passed(self):
        return bool(self.statistic < self.critical)

    def as_dict(self):
        d = {"test": self.test, "statistic": self.statistic, "critical": self.critical,
             "n": self.n, "alpha": self.alpha, "pass": self.passed, "seed": self.seed}
        if self.n2 is not None:
            d["n2"] = self.n2
        return d


def _values(sample):
    if isinstance(sample, EmpiricalSample):
        return sample.values, sample.seed
    return np.sort(np.asarray(sample, dtype=np.float64)), None


def ks_one_sample(sample, cdf, alpha: float = 0.01) -> KsReport:
    """``sup |F_n - F|`` against a non-decreasing reference CDF."""
    x, seed = _values(sample)
    n = x.size
    if n < MIN_N:
        raise StatsError(f"KS needs n >= {MIN_N}, got {n}")
    f = np.asarray(cdf(x), dtype=np.float64)
    if np.any(np.diff(f) < -1e-12) or np.any(f < -1e-12) or np.any(f > 1 + 1e-12):
        raise StatsError("reference CDF is not a non-decreasing map into [0, 1]")
    i = np.arange(1, n + 1)
    d = max(float(np.max(i / n - f)), float(np.max(f - (i - 1) / n)))
    return KsReport("ks-one-sample", d, critical_constant(alpha) / math.sqrt(n), n, alpha, seed=seed)


def ks_two_sample(a, b, alpha: float = 0.01) -> KsReport:
    xa, seed = _values(a)
    xb, _ = _values(b)
    n1, n2 = xa.size, xb.size
    if min(n1, n2) < MIN_N:
        raise StatsError(f"KS needs n >= {MIN_N} in both samples")
    pooled = np.concatenate([xa, xb])
    fa = np.searchsorted(xa, pooled, side="right") / n1
    fb = np.searchsorted(xb, pooled, side="right") / n2
    d = float(np.max(np.abs(fa - fb)))
    crit = critical_constant(alpha) * math.sqrt((n1 + n2) / (n1 * n2))
    return KsReport("ks-two-sample", d, crit, n1, alpha, n2=n2, seed=seed)


def empirical_lst(sample, s: float):
    """``(mean(exp(-s x)), stderr)``."""
    if s < 0:
        raise StatsError("s must be non-negative")
    x, _ = _values(sample)
    if s == 0:
        return 1.0, 0.0
    if x[-1] == x[0]:
        return math.exp(-s * x[0]), 0.0
    v = np.exp(-s * x)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(x.size))


def empirical_mgf(sample, theta: float):
    """``(mean(exp(theta x)), stderr, overflow)``; the mean is ``inf`` on overflow."""
    if not theta > 0:
        raise StatsError("theta must be positive")
    x, _ = _values(sample)
    if x[-1] == x[0]:
        return math.exp(theta * x[0]), 0.0, False
    if theta * x[-1] > math.log(OVERFLOW):
        return math.inf, math.inf, True
    v = np.exp(theta * x)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(x.size)), False
