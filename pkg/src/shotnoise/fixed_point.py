"""Constructive fixed points: LST iteration, perpetuities and the atom equation.

The iteration starts from ``phi_0(s) = exp(-m s)`` and applies

    phi_n(s) = exp(-lam * int_0^inf (1 - phi_{n-1}(s h(u))) du)

on a log-spaced grid. Off-grid values come from monotone cubic
interpolation of ``ln(-ln phi)`` against ``ln s``; below the grid the
cumulant expansion ``-ln phi(s) = m s - c s**2 / 2`` is fitted to the two
smallest grid points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from ._quad import gauss_legendre_panels
from .distributions import DistError, EmpiricalSample
from .engine import CHUNK, EngineError, SntConfig
from .response import MixingMeasure, validate

__all__ = [
    "IterationError",
    "LstGrid",
    "TraceRecord",
    "ConvergenceTrace",
    "AtomResult",
    "default_grid",
    "exact_grid",
    "iterate",
    "m_metric",
    "mean_estimate",
    "perpetuity_sample",
    "atom_solver",
]

MONOTONE_TOL = 1e-12


class IterationError(EngineError):
    pass


def default_grid(n=64, lo=1e-4, hi=50.0):
    return np.geomspace(lo, hi, n)


@dataclass(frozen=True, eq=False)
class LstGrid:
    """LST values on a log-spaced grid; ``mean`` is the target mean."""

    s_values: np.ndarray
    phi_values: np.ndarray
    mean: float
    iteration: int = 0

    def __post_init__(self):
        s = np.asarray(self.s_values, dtype=np.float64)
        p = np.asarray(self.phi_values, dtype=np.float64)
        if s.shape != p.shape or s.ndim != 1 or s.size < 3:
            raise IterationError("grid needs matching 1-d arrays of at least 3 points")
        if np.any(np.diff(s) <= 0) or s[0] <= 0:
            raise IterationError("s values must be positive and increasing")
        for a in (s, p):
            a.setflags(write=False)
        object.__setattr__(self, "s_values", s)
        object.__setattr__(self, "phi_values", p)

    def check(self, tol=1e-9):
        """Names of violated invariants (empty when the grid is valid)."""
        s, p = self.s_values, self.phi_values
        bad = []
        if np.any(p <= 0) or np.any(p > 1):
            bad.append("phi outside (0, 1]")
        if np.any(np.diff(p) > 0):
            bad.append("phi not non-increasing")
        lp = np.log(p)
        d0, d1 = np.diff(s)[:-1], np.diff(s)[1:]
        sd = 2.0 * ((lp[2:] - lp[1:-1]) / d1 - (lp[1:-1] - lp[:-2]) / d0) / (d0 + d1)
        if np.any(sd < -tol):
            bad.append("ln phi not convex")
        if -math.expm1(lp[0]) / s[0] > self.mean * (1.0 + 1e-6):
            bad.append("slope at the smallest s exceeds the mean")
        return bad

    def interpolator(self):
        """Callable ``x -> phi(x)`` for ``x >= 0``."""
        s, p = self.s_values, self.phi_values
        y = -np.log(p)
        if np.any(y <= 0) or np.any(np.diff(y) < 0):
            raise IterationError("interpolation breakdown: -ln phi not positive and increasing")
        pchip = PchipInterpolator(np.log(s), np.log(y), extrapolate=True)
        # -ln phi = a x + b x**2 through the two smallest points
        s0, s1 = s[0], s[1]
        b = (y[1] / s1 - y[0] / s0) / (s1 - s0)
        a = y[0] / s0 - b * s0
        lo, hi = s0, s[-1]

        def phi(x):
            x = np.asarray(x, dtype=np.float64)
            out = np.empty(x.shape)
            below = x < lo
            xb = x[below]
            out[below] = np.exp(-(a * xb + b * xb * xb))
            xa = np.clip(x[~below], lo, hi)
            out[~below] = np.exp(-np.exp(pchip(np.log(xa))))
            return np.minimum(out, 1.0)

        return phi

    def rows(self):
        return [(float(a), float(b)) for a, b in zip(self.s_values, self.phi_values)]


def exact_grid(lst: Callable, mean: float, s_values=None):
    s = default_grid() if s_values is None else np.asarray(s_values, dtype=np.float64)
    return LstGrid(s, np.asarray(lst(s), dtype=np.float64), mean)


def m_metric(a: LstGrid, b: LstGrid) -> float:
    """``sup_s |phi_a(s) - phi_b(s)| / s`` over the common grid."""
    if a.s_values.shape != b.s_values.shape or not np.array_equal(a.s_values, b.s_values):
        raise IterationError("grids differ")
    return float(np.max(np.abs(a.phi_values - b.phi_values) / a.s_values))


def mean_estimate(grid: LstGrid) -> float:
    """``-phi'(0+)`` from the two smallest grid points.

    The chord slopes ``D_i = (1 - phi(s_i)) / s_i = m - m2 s_i / 2 + ...``
    are combined by Richardson extrapolation to ``s = 0``.
    """
    s0, s1 = grid.s_values[:2]
    p0, p1 = grid.phi_values[:2]
    d0, d1 = (1.0 - p0) / s0, (1.0 - p1) / s1
    return float((s1 * d0 - s0 * d1) / (s1 - s0))


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    m_metric: float
    mean_estimate: float
    monotone_ok: bool
    min_increment: float


@dataclass
class ConvergenceTrace:
    records: list = field(default_factory=list)
    converged: bool = False

    def append(self, rec):
        self.records.append(rec)

    @property
    def monotone(self):
        return all(r.monotone_ok for r in self.records)

    @property
    def min_increment(self):
        return min((r.min_increment for r in self.records), default=0.0)

    def rows(self):
        return [(r.iteration, r.m_metric, r.mean_estimate, int(r.monotone_ok)) for r in self.records]


class _Quadrature:
    # composite Gauss-Legendre in u with h tabulated once at the nodes
    def __init__(self, h, s_max, order=16, panels=80):
        top = _cutoff(h, s_max)
        edges = np.concatenate([[0.0], np.geomspace(1e-4 * min(top, 1.0), top, panels)])
        self.nodes, self.weights = gauss_legendre_panels(edges, order)
        self.hvals = h.eval(self.nodes)
        self.tail = h.tail_integral(top)

    def exponent(self, phi, s, mean):
        # int_0^U (1 - phi(s h(u))) du + s * mean * int_U^inf h(u) du
        x = s[:, None] * self.hvals[None, :]
        body = (-np.expm1(np.log(phi(x.ravel())))).reshape(x.shape) @ self.weights
        return body + s * mean * self.tail


def _cutoff(h, s_max, level=1e-9):
    # first u where s_max * h(u) drops below level, so the linear tail is accurate
    u = 1.0
    while float(h.eval(np.array([u]))[0]) * s_max > level:
        u *= 2.0
        if u > 1e8:
            break
    return u


def iterate(cfg: SntConfig, m: float, steps: int, *, s_values=None, start=None,
            tol=1e-10, order=16):
    """Apply the transform ``steps`` times to the grid of ``start``.

    ``start`` is a callable LST with mean ``m`` (default ``exp(-m s)``).
    Stops early once the M-metric between consecutive grids drops below
    ``tol``. Returns ``(LstGrid, ConvergenceTrace)``.
    """
    if not m > 0:
        raise IterationError("target mean must be positive")
    if steps < 0:
        raise IterationError("steps must be non-negative")
    report = validate(cfg.response, cfg.lam)
    if report.regime != "=1" or not report.ok:
        raise IterationError(f"iteration needs lambda * int h = 1 (got regime {report.regime})")
    s = default_grid() if s_values is None else np.asarray(s_values, dtype=np.float64)
    phi0 = np.exp(-m * s) if start is None else np.asarray(start(s), dtype=np.float64)
    grid = LstGrid(s, phi0, m, 0)
    trace = ConvergenceTrace()
    if steps == 0:
        return grid, trace
    quad = _Quadrature(cfg.response, float(s[-1]), order)
    for n in range(1, steps + 1):
        phi = grid.interpolator()
        y = cfg.lam * quad.exponent(phi, s, mean_estimate(grid))
        new = LstGrid(s, np.exp(-y), m, n)
        inc = new.phi_values - grid.phi_values
        metric = m_metric(new, grid)
        trace.append(TraceRecord(n, metric, mean_estimate(new),
                                 bool(np.all(inc >= -MONOTONE_TOL)), float(np.min(inc))))
        grid = new
        if metric < tol:
            trace.converged = True
            break
    return grid, trace


# ---------------------------------------------------------------------------
# perpetuity
# ---------------------------------------------------------------------------

def perpetuity_sample(nu: MixingMeasure, base, steps: int = 200, n: int = 100_000,
                      seed: int = 42) -> EmpiricalSample:
    """Terminal states of ``bar_eta <- eta + A * bar_eta`` started at the base mean.

    Each step draws ``eta ~ base`` before ``A ~ nu``. Chunk ``i`` of the
    chains uses seed ``seed ^ i``.
    """
    if nu.atom == 1.0:
        raise IterationError("nu = delta_1 admits no perpetuity")
    if steps < 1 or n < 1:
        raise IterationError("steps and n must be at least 1")
    m = base.mean()
    if not math.isfinite(m):
        raise DistError("perpetuity needs a finite-mean base law")
    parts = []
    for i, start in enumerate(range(0, n, CHUNK)):
        k = min(CHUNK, n - start)
        rng = np.random.default_rng(seed ^ i)
        bar = np.full(k, float(m))
        for _ in range(steps):
            eta = base.draw(rng, k)
            bar = eta + nu.draw(rng, k) * bar
        parts.append(bar)
    prov = {"nu": nu.name, "base": base.key, "steps": steps}
    return EmpiricalSample(np.concatenate(parts), seed, prov)


# ---------------------------------------------------------------------------
# atom equation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AtomResult:
    b: float
    root: Optional[float]
    message: str

    @property
    def interior(self):
        return self.root is not None

    def as_dict(self):
        return {"b": self.b, "root": self.root, "interior_root": self.interior,
                "message": self.message}


def atom_solver(b: float, tol: float = 1e-15) -> AtomResult:
    """Root of ``exp(-b (1 - z)) = z`` in (0, 1).

    ``z = 1`` always solves the equation; an interior root exists iff
    ``b > 1``. It is bracketed by ``[0, 1 - ln(b) / b]``, where the
    difference ``exp(-b (1 - z)) - z`` changes sign.
    """
    if not b > 0:
        raise IterationError("b must be positive")
    if b <= 1.0:
        return AtomResult(float(b), None, "no interior root for b <= 1 (only z = 1)")
    f = lambda z: math.exp(-b * (1.0 - z)) - z
    lo, hi = 0.0, 1.0 - math.log(b) / b
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi) or hi - lo <= tol:
            break
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return AtomResult(float(b), 0.5 * (lo + hi), "interior root")
