"""Hot numeric loops with a numba path and a pure-numpy path.

Kernels
-------
s2_cdf            CDF of the S2 law (theta series, Jacobi-dual form for small x)
s2_levy_k         k(x) of the S2 Levy density k(x)/x
s2_inverse_cdf    inverse CDF by bisection, one sample per entry
mittag_leffler_neg  E_lam(-y) by compensated power series
segment_sum       per-realization sums of shot contributions

Both paths share signatures and agree to rounding. The numba path is used
when numba imports and ``SNT_NUMBA`` is not set to ``0``.
"""

import math
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda f: f


def _flag(name, default="1"):
    return os.environ.get(name, default).strip().lower() not in {"0", "false", "no", "off"}


USE_NUMBA = HAVE_NUMBA and _flag("SNT_NUMBA")

PI = math.pi
PI2 = math.pi * math.pi
SQRT_PI = math.sqrt(math.pi)

# The largest Mittag-Leffler series term is about exp(y**(1/lam)); beyond
# exp(30) the alternating sum is cancellation noise in double precision.
ML_SERIES_CAP = 30.0


# ---------------------------------------------------------------------------
# scalar bodies (compiled by numba, never called directly from numpy path)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _s2_cdf_one(x, delta):
    if x <= 0.0:
        return 0.0
    a = PI2 * x / delta
    if a >= PI:
        total = 1.0
        n = 1
        while n < 1000:
            e = math.exp(-a * n * n)
            term = 2.0 * (1.0 - 2.0 * a * n * n) * e
            total += term
            if abs(term) < 1e-17:
                break
            n += 1
    else:
        r = delta / x
        acc = 0.0
        k = 1
        while k < 1000:
            term = k * k * math.exp(-k * k * r)
            acc += term
            if term <= 1e-17 * acc:
                break
            k += 1
        total = 4.0 / SQRT_PI * r ** 1.5 * acc
    if total < 0.0:
        return 0.0
    if total > 1.0:
        return 1.0
    return total


@njit(cache=True)
def _s2_k_one(x, delta):
    a = PI2 * x / delta
    if a >= PI:
        acc = 0.0
        n = 1
        while n < 1000:
            term = math.exp(-a * n * n)
            acc += term
            if term <= 1e-17 * acc:
                break
            n += 1
        return 2.0 * acc
    r = delta / x
    acc = 1.0
    k = 1
    while k < 1000:
        term = 2.0 * math.exp(-k * k * r)
        acc += term
        if term <= 1e-17 * acc:
            break
        k += 1
    return math.sqrt(r / PI) * acc - 1.0


@njit(cache=True)
def _ml_neg_one(y, lam):
    if y == 0.0:
        return 1.0
    ly = math.log(y)
    s = 1.0
    c = 0.0
    prev = 1.0
    k = 1
    while k < 100000:
        mag = math.exp(k * ly - math.lgamma(1.0 + lam * k))
        term = -mag if k % 2 == 1 else mag
        t = s + term
        if abs(s) >= abs(term):
            c += (s - t) + term
        else:
            c += (term - t) + s
        s = t
        if mag < prev and mag < 1e-16 * abs(s + c):
            break
        prev = mag
        k += 1
    return s + c


# ---------------------------------------------------------------------------
# numba array drivers
# ---------------------------------------------------------------------------

@njit(cache=True)
def _s2_cdf_numba(x, delta):
    out = np.empty(x.size)
    for i in range(x.size):
        out[i] = _s2_cdf_one(x[i], delta)
    return out


@njit(cache=True)
def _s2_k_numba(x, delta):
    out = np.empty(x.size)
    for i in range(x.size):
        out[i] = _s2_k_one(x[i], delta)
    return out


@njit(cache=True)
def _s2_inverse_cdf_numba(u, delta, tol):
    out = np.empty(u.size)
    top = 50.0 * delta
    for i in range(u.size):
        lo = 0.0
        hi = top
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if _s2_cdf_one(mid, delta) < u[i]:
                lo = mid
            else:
                hi = mid
        out[i] = 0.5 * (lo + hi)
    return out


@njit(cache=True)
def _ml_neg_numba(y, lam):
    out = np.empty(y.size)
    for i in range(y.size):
        out[i] = _ml_neg_one(y[i], lam)
    return out


@njit(cache=True)
def _segment_sum_numba(weights, counts):
    out = np.zeros(counts.size)
    pos = 0
    for j in range(counts.size):
        acc = 0.0
        for _ in range(counts[j]):
            acc += weights[pos]
            pos += 1
        out[j] = acc
    return out


# ---------------------------------------------------------------------------
# numpy fallbacks
# ---------------------------------------------------------------------------

# Eight terms reach below 1e-30 relative in both branches since the branch
# switch keeps the series ratio under exp(-pi).
_NTERMS = np.arange(1, 9, dtype=np.float64)[:, None]


def _s2_cdf_numpy(x, delta):
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros(x.shape)
    pos = x > 0.0
    a = PI2 * x[pos] / delta
    n2 = _NTERMS ** 2
    direct = a >= PI
    ad = a[direct]
    val = np.empty(a.shape)
    val[direct] = 1.0 + np.sum(2.0 * (1.0 - 2.0 * ad * n2) * np.exp(-ad * n2), axis=0)
    r = delta / x[pos][~direct]
    val[~direct] = 4.0 / SQRT_PI * r ** 1.5 * np.sum(n2 * np.exp(-n2 * r), axis=0)
    out[pos] = np.clip(val, 0.0, 1.0)
    return out


def _s2_k_numpy(x, delta):
    x = np.asarray(x, dtype=np.float64)
    a = PI2 * x / delta
    n2 = _NTERMS ** 2
    out = np.empty(x.shape)
    direct = a >= PI
    out[direct] = 2.0 * np.sum(np.exp(-a[direct] * n2), axis=0)
    r = delta / x[~direct]
    out[~direct] = np.sqrt(r / PI) * (1.0 + 2.0 * np.sum(np.exp(-n2 * r), axis=0)) - 1.0
    return out


def _s2_inverse_cdf_numpy(u, delta, tol):
    u = np.asarray(u, dtype=np.float64)
    lo = np.zeros(u.shape)
    hi = np.full(u.shape, 50.0 * delta)
    while np.any(hi - lo > tol):
        mid = 0.5 * (lo + hi)
        below = _s2_cdf_numpy(mid, delta) < u
        active = hi - lo > tol
        lo = np.where(active & below, mid, lo)
        hi = np.where(active & ~below, mid, hi)
    return 0.5 * (lo + hi)


def _ml_neg_numpy(y, lam):
    from scipy.special import gammaln

    y = np.asarray(y, dtype=np.float64)
    out = np.ones(y.shape)
    live = y > 0.0
    if not np.any(live):
        return out
    yy = y[live]
    ly = np.log(yy)
    s = np.ones(yy.shape)
    c = np.zeros(yy.shape)
    prev = np.ones(yy.shape)
    running = np.ones(yy.shape, dtype=bool)
    k = 1
    while np.any(running) and k < 100000:
        mag = np.where(running, np.exp(np.where(running, k * ly - gammaln(1.0 + lam * k), 0.0)), 0.0)
        term = -mag if k % 2 == 1 else mag
        t = s + term
        c += np.where(np.abs(s) >= np.abs(term), (s - t) + term, (term - t) + s)
        s = t
        running &= ~((mag < prev) & (mag < 1e-16 * np.abs(s + c)))
        prev = mag
        k += 1
    out[live] = s + c
    return out


def _segment_sum_numpy(weights, counts):
    counts = np.asarray(counts, dtype=np.int64)
    owner = np.repeat(np.arange(counts.size), counts)
    return np.bincount(owner, weights=weights, minlength=counts.size).astype(np.float64)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

IMPLEMENTATIONS = {
    "s2_cdf": (_s2_cdf_numba, _s2_cdf_numpy),
    "s2_levy_k": (_s2_k_numba, _s2_k_numpy),
    "s2_inverse_cdf": (_s2_inverse_cdf_numba, _s2_inverse_cdf_numpy),
    "mittag_leffler_neg": (_ml_neg_numba, _ml_neg_numpy),
    "segment_sum": (_segment_sum_numba, _segment_sum_numpy),
}


def _pick(name):
    fast, slow = IMPLEMENTATIONS[name]
    return fast if USE_NUMBA else slow


def _as_1d(x):
    return np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=np.float64)).ravel())


def s2_cdf(x, delta):
    x = np.asarray(x, dtype=np.float64)
    return _pick("s2_cdf")(_as_1d(x), float(delta)).reshape(x.shape)


def s2_levy_k(x, delta):
    x = np.asarray(x, dtype=np.float64)
    return _pick("s2_levy_k")(_as_1d(x), float(delta)).reshape(x.shape)


def s2_inverse_cdf(u, delta, tol=1e-10):
    u = np.asarray(u, dtype=np.float64)
    return _pick("s2_inverse_cdf")(_as_1d(u), float(delta), float(tol)).reshape(u.shape)


def mittag_leffler_neg(y, lam):
    """E_lam(-y), valid while ``y ** (1 / lam) <= ML_SERIES_CAP``."""
    y = np.asarray(y, dtype=np.float64)
    return _pick("mittag_leffler_neg")(_as_1d(y), float(lam)).reshape(y.shape)


def segment_sum(weights, counts):
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    counts = np.ascontiguousarray(counts, dtype=np.int64)
    return _pick("segment_sum")(weights, counts)
