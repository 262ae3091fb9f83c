"""Catalogue of the non-negative laws that arise as shot-noise fixed points.

Gamma uses (shape, scale). Positive Linnik laws have LST ``1/(1 + beta s**lam)``
and tail ``E_lam(-x**lam / beta)``. S2 laws have LST
``(sqrt(delta s) / sinh sqrt(delta s))**2`` and a theta-series CDF.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import _kernels
from ._quad import quad

__all__ = [
    "DistError",
    "SeriesBreakdownError",
    "SamplerOnlyError",
    "EmpiricalSample",
    "Gamma",
    "PositiveLinnik",
    "GeneralizedLinnik",
    "S2",
    "S2Rho",
    "StableSubordinated",
    "PointMass",
    "parse_dist",
    "lst",
    "tail",
    "cdf",
    "mean",
    "sample",
    "stable_draw",
    "stable_sample",
    "s2_levy_density",
    "s2_levy_k",
    "mittag_leffler_tail",
    "threads",
]


class DistError(ValueError):
    pass


class SeriesBreakdownError(DistError):
    """Alternating Mittag-Leffler series would return cancellation noise."""


class SamplerOnlyError(DistError):
    """The family has no tail/CDF evaluator; only sampling is available."""


def threads():
    """Worker cap from ``SNT_THREADS`` (default 1)."""
    import os

    try:
        return max(1, int(os.environ.get("SNT_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True, eq=False)
class EmpiricalSample:
    """Sorted non-negative draws with their seed and provenance."""

    values: np.ndarray
    seed: int | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=np.float64))
        if v.size and (v[0] < 0 or not np.all(np.isfinite(v))):
            raise DistError("sample values must be finite and non-negative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self):
        return int(self.values.size)

    def __len__(self):
        return self.n

    def mean(self):
        return float(np.mean(self.values))

    def draw(self, rng, n):
        """Resample with replacement."""
        return self.values[rng.integers(0, self.n, size=n)]


def _pos(s):
    s = np.asarray(s, dtype=np.float64)
    if np.any(s < 0):
        raise DistError("transform argument must be non-negative")
    return s


def _check(cond, msg):
    if not cond:
        raise DistError(msg)


# ---------------------------------------------------------------------------
# positive strictly stable laws
# ---------------------------------------------------------------------------

def stable_draw(rng, alpha, n):
    """Draws with LST ``exp(-s**alpha)`` (Kanter's uniform/exponential ratio)."""
    if not 0.0 < alpha < 1.0:
        raise DistError(f"stable index must lie in (0, 1), got {alpha}")
    u = rng.uniform(0.0, math.pi, n)
    e = rng.standard_exponential(n)
    a = alpha
    return (np.sin(a * u) / np.sin(u) ** (1.0 / a)) * (np.sin((1.0 - a) * u) / e) ** ((1.0 - a) / a)


def stable_sample(alpha, n, seed):
    if n < 1:
        raise DistError("n must be at least 1")
    rng = np.random.default_rng(seed)
    return EmpiricalSample(stable_draw(rng, alpha, n), seed, {"family": "stable", "alpha": alpha})


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Gamma:
    shape: float
    scale: float = 1.0

    def __post_init__(self):
        _check(self.shape > 0 and self.scale > 0, f"Gamma needs shape, scale > 0: {self}")

    @property
    def key(self):
        return f"gamma:{self.shape:g},{self.scale:g}"

    def lst(self, s):
        return (1.0 + self.scale * _pos(s)) ** -self.shape

    def lst_complement(self, s):
        return -np.expm1(-self.shape * np.log1p(self.scale * _pos(s)))

    def tail(self, x):
        return special.gammaincc(self.shape, np.maximum(x, 0.0) / self.scale)

    def cdf(self, x):
        return special.gammainc(self.shape, np.maximum(x, 0.0) / self.scale)

    def partial_mean(self, x):
        """``int_0^x y mu(dy)``."""
        return self.shape * self.scale * special.gammainc(self.shape + 1.0, np.maximum(x, 0.0) / self.scale)

    def mean(self):
        return self.shape * self.scale

    def draw(self, rng, n):
        return rng.gamma(self.shape, self.scale, n)


def mittag_leffler_tail(x, lam, beta):
    """``E_lam(-x**lam / beta)`` by the compensated power series.

    Raises :class:`SeriesBreakdownError` once ``x / beta**(1/lam)`` exceeds
    the series cap, where the largest series term passes ``exp(30)``.
    """
    x = np.asarray(x, dtype=np.float64)
    t = np.maximum(x, 0.0) / beta ** (1.0 / lam)
    if np.any(t > _kernels.ML_SERIES_CAP):
        raise SeriesBreakdownError(
            f"Mittag-Leffler series unreliable for x / beta**(1/lam) > {_kernels.ML_SERIES_CAP:g}")
    return _kernels.mittag_leffler_neg(t ** lam, lam)


# Below this value of x / beta**(1/lam) the series is accurate to ~1e-12;
# beyond it the spectral integral takes over.
_ML_SERIES_SWITCH = 8.0


def _ml_integral(t, lam):
    # E_lam(-t**lam) = sin(lam pi)/pi int_0^inf r**(lam-1) e**(-r t) / (r**(2 lam) + 2 r**lam cos(lam pi) + 1) dr
    c, cl = math.sin(lam * math.pi) / math.pi, math.cos(lam * math.pi)

    def f(v):
        r = v / t
        ra = r ** lam
        return ra / r * math.exp(-v) / (ra * ra + 2.0 * ra * cl + 1.0) / t

    return c * (quad(f, 0.0, 1.0) + quad(f, 1.0, math.inf))


@dataclass(frozen=True)
class PositiveLinnik:
    index: float
    scale: float = 1.0

    def __post_init__(self):
        _check(0 < self.index <= 1 and self.scale > 0, f"Linnik needs index in (0, 1], scale > 0: {self}")

    @property
    def key(self):
        return f"linnik:{self.index:g},{self.scale:g}"

    def lst(self, s):
        return 1.0 / (1.0 + self.scale * _pos(s) ** self.index)

    def lst_complement(self, s):
        v = self.scale * _pos(s) ** self.index
        return v / (1.0 + v)

    def tail(self, x):
        x = np.asarray(x, dtype=np.float64)
        lam, beta = self.index, self.scale
        t = np.maximum(x, 0.0) / beta ** (1.0 / lam)
        out = np.empty(t.shape)
        near = t <= _ML_SERIES_SWITCH
        out[near] = mittag_leffler_tail(x[near], lam, beta)
        far = t[~near]
        if lam == 1.0:
            out[~near] = np.exp(-far)
        else:
            out[~near] = [_ml_integral(v, lam) for v in far]
        return out

    def cdf(self, x):
        return 1.0 - self.tail(x)

    def partial_mean(self, x):
        if self.index != 1.0:
            raise DistError("infinite mean")
        return Gamma(1.0, self.scale).partial_mean(x)

    def mean(self):
        return self.scale if self.index == 1.0 else math.inf

    def draw(self, rng, n):
        e = rng.standard_exponential(n)
        if self.index == 1.0:
            return self.scale * e
        return (self.scale * e) ** (1.0 / self.index) * stable_draw(rng, self.index, n)


@dataclass(frozen=True)
class GeneralizedLinnik:
    shape: float
    scale: float
    index: float

    def __post_init__(self):
        _check(self.shape > 0 and self.scale > 0 and 0 < self.index <= 1,
               f"generalized Linnik needs shape, scale > 0 and index in (0, 1]: {self}")

    @property
    def key(self):
        return f"glinnik:{self.shape:g},{self.scale:g},{self.index:g}"

    def lst(self, s):
        return (1.0 + self.scale * _pos(s) ** self.index) ** -self.shape

    def lst_complement(self, s):
        return -np.expm1(-self.shape * np.log1p(self.scale * _pos(s) ** self.index))

    def _as_gamma(self):
        if self.index != 1.0:
            raise SamplerOnlyError(f"{self.key}: no tail evaluator; sampler only")
        return Gamma(self.shape, self.scale)

    def tail(self, x):
        return self._as_gamma().tail(x)

    def cdf(self, x):
        return self._as_gamma().cdf(x)

    def partial_mean(self, x):
        return self._as_gamma().partial_mean(x)

    def mean(self):
        return self.shape * self.scale if self.index == 1.0 else math.inf

    def draw(self, rng, n):
        g = rng.gamma(self.shape, 1.0, n)
        if self.index == 1.0:
            return self.scale * g
        return (self.scale * g) ** (1.0 / self.index) * stable_draw(rng, self.index, n)


def _sinh_ratio_sq(y):
    # (y / sinh y)**2 without overflow; y >= 0
    y = np.asarray(y, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(y > 0, 2.0 * y * np.exp(-y) / -np.expm1(-2.0 * y), 1.0)
    return r * r


def _sinh_ratio_sq_complement(y):
    # 1 - (y / sinh y)**2, series for log(sinh y / y) at small y
    y = np.asarray(y, dtype=np.float64)
    y2 = y * y
    small = y < 0.1
    log_series = y2 / 6.0 - y2 ** 2 / 180.0 + y2 ** 3 / 2835.0 - y2 ** 4 / 37800.0
    with np.errstate(divide="ignore", invalid="ignore"):
        log_direct = np.log(-np.expm1(-2.0 * y) / (2.0 * y)) + y
    log_ratio = np.where(small, log_series, log_direct)
    return -np.expm1(-2.0 * log_ratio)


@dataclass(frozen=True)
class S2:
    delta: float

    def __post_init__(self):
        _check(self.delta > 0, f"S2 needs delta > 0: {self}")

    @property
    def key(self):
        return f"s2:{self.delta:g}"

    def lst(self, s):
        return _sinh_ratio_sq(np.sqrt(self.delta * _pos(s)))

    def lst_complement(self, s):
        return _sinh_ratio_sq_complement(np.sqrt(self.delta * _pos(s)))

    def cdf(self, x):
        return _kernels.s2_cdf(np.maximum(x, 0.0), self.delta)

    def tail(self, x):
        x = np.maximum(np.asarray(x, dtype=np.float64), 0.0)
        a = _kernels.PI2 * x / self.delta
        n2 = np.arange(1, 9, dtype=np.float64).reshape((-1,) + (1,) * x.ndim) ** 2
        direct = -2.0 * np.sum((1.0 - 2.0 * a * n2) * np.exp(-a * n2), axis=0)
        return np.where(a >= math.pi, np.clip(direct, 0.0, 1.0), 1.0 - self.cdf(x))

    def partial_mean(self, x):
        x = np.asarray(x, dtype=np.float64)
        f = lambda t: float(self.cdf(t))
        flat = [xi * f(xi) - quad(f, 0.0, xi) if xi > 0 else 0.0 for xi in np.ravel(x)]
        return np.reshape(flat, x.shape)

    def mean(self):
        return self.delta / 3.0

    def draw(self, rng, n):
        return _kernels.s2_inverse_cdf(rng.random(n), self.delta, 1e-10)


@dataclass(frozen=True)
class S2Rho:
    delta: float
    rho: float

    def __post_init__(self):
        _check(self.delta > 0 and 0 < self.rho < 1, f"S2Rho needs delta > 0, rho in (0, 1): {self}")

    @property
    def key(self):
        return f"s2rho:{self.delta:g},{self.rho:g}"

    def lst(self, s):
        return S2(self.delta).lst(_pos(s) ** self.rho)

    def lst_complement(self, s):
        return S2(self.delta).lst_complement(_pos(s) ** self.rho)

    def tail(self, x):
        raise SamplerOnlyError(f"{self.key}: no tail evaluator; sampler only")

    cdf = tail

    def mean(self):
        return math.inf

    def draw(self, rng, n):
        v = S2(self.delta).draw(rng, n)
        return v ** (1.0 / self.rho) * stable_draw(rng, self.rho, n)


@dataclass(frozen=True)
class StableSubordinated:
    base: object
    alpha: float

    def __post_init__(self):
        _check(0 < self.alpha < 1, f"subordination index must lie in (0, 1): {self}")

    @property
    def key(self):
        return f"stable-sub:{self.base.key},{self.alpha:g}"

    def lst(self, s):
        return self.base.lst(_pos(s) ** self.alpha)

    def lst_complement(self, s):
        return self.base.lst_complement(_pos(s) ** self.alpha)

    def tail(self, x):
        raise SamplerOnlyError(f"{self.key}: no tail evaluator; sampler only")

    cdf = tail

    def mean(self):
        return math.inf

    def draw(self, rng, n):
        theta = self.base.draw(rng, n)
        return theta ** (1.0 / self.alpha) * stable_draw(rng, self.alpha, n)


@dataclass(frozen=True)
class PointMass:
    m: float

    def __post_init__(self):
        _check(self.m >= 0, f"point mass location must be >= 0: {self}")

    @property
    def key(self):
        return f"point:{self.m:g}"

    def lst(self, s):
        return np.exp(-self.m * _pos(s))

    def lst_complement(self, s):
        return -np.expm1(-self.m * _pos(s))

    def tail(self, x):
        return np.where(np.asarray(x) < self.m, 1.0, 0.0)

    def cdf(self, x):
        return 1.0 - self.tail(x)

    def partial_mean(self, x):
        return np.where(np.asarray(x) >= self.m, self.m, 0.0)

    def mean(self):
        return self.m

    def draw(self, rng, n):
        return np.full(n, float(self.m))


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------

def _floats(text, count, key):
    parts = [p for p in text.split(",") if p]
    if len(parts) != count:
        raise DistError(f"{key!r}: expected {count} parameter(s)")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise DistError(f"{key!r}: {exc}") from exc


def parse_dist(key: str):
    """``gamma:A,B``, ``linnik:L,B``, ``glinnik:A,B,G``, ``s2:D``, ``s2rho:D,R``,
    ``stable-sub:SPEC,A`` or ``point:M``."""
    head, _, rest = key.strip().partition(":")
    if head == "gamma":
        return Gamma(*_floats(rest, 2, key))
    if head == "linnik":
        return PositiveLinnik(*_floats(rest, 2, key))
    if head == "glinnik":
        return GeneralizedLinnik(*_floats(rest, 3, key))
    if head == "s2":
        return S2(*_floats(rest, 1, key))
    if head == "s2rho":
        return S2Rho(*_floats(rest, 2, key))
    if head == "point":
        return PointMass(*_floats(rest, 1, key))
    if head == "stable-sub":
        base, _, alpha = rest.rpartition(",")
        return StableSubordinated(parse_dist(base), _floats(alpha, 1, key)[0])
    raise DistError(f"unknown distribution key {key!r}")


def lst(spec, s):
    return spec.lst(s)


def tail(spec, x):
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise DistError("tail argument must be non-negative")
    return spec.tail(x)


def cdf(spec, x):
    return spec.cdf(x)


def mean(spec):
    return spec.mean()


def sample(spec, n, seed, chunks=1):
    """``n`` draws of ``spec``; chunk ``i`` uses generator seed ``seed ^ i``."""
    if n < 1:
        raise DistError("n must be at least 1")
    sizes = [n // chunks + (1 if i < n % chunks else 0) for i in range(chunks)]

    def work(i):
        return spec.draw(np.random.default_rng(seed ^ i), sizes[i])

    if chunks == 1:
        parts = [work(0)]
    else:
        with ThreadPoolExecutor(max_workers=min(threads(), chunks)) as pool:
            parts = list(pool.map(work, range(chunks)))
    return EmpiricalSample(np.concatenate(parts), seed,
                           {"family": spec.key, "chunks": chunks})


def s2_levy_k(delta, x):
    """``k(x) = sum_{n != 0} exp(-pi**2 n**2 x / delta)``."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0):
        raise DistError("Levy density argument must be positive")
    return _kernels.s2_levy_k(x, delta)


def s2_levy_density(delta, x):
    """Levy density ``k(x) / x`` of S2(delta)."""
    return s2_levy_k(delta, x) / np.asarray(x, dtype=np.float64)
