"""Poisson shot-noise transform: Monte Carlo, LST residuals and Levy identities.

For intensity ``lam`` and response ``h`` the transform of a law with LST
``phi`` has LST ``exp(-lam * int_0^inf (1 - phi(s h(u))) du)``. Inner
integrals are taken against ``kappa(dz) = -d h_inv(z)``, which equals
``lam**-1 z**-1 nu(dz)`` in the ``lam * int h = 1`` regime.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from ._quad import QuadratureError, quad
from .distributions import DistError, EmpiricalSample, threads
from .response import MixingMeasure, ResponseFunction, to_mixing_measure, validate

__all__ = [
    "EngineError",
    "ValidationRejection",
    "SntConfig",
    "ResidualRecord",
    "LevyTail",
    "CheckResult",
    "sample_snt",
    "lst_residual",
    "levy_tail",
    "steutel_check",
    "feature_check",
    "uniform_grid",
    "STANDARD_S_GRID",
]

# realizations per seeded chunk; fixed so output does not depend on threads
CHUNK = 50_000
# shots held in memory at once inside a chunk
MAX_SHOTS = 4_000_000

STANDARD_S_GRID = np.geomspace(1e-3, 10.0, 50)


class EngineError(ValueError):
    pass


class ValidationRejection(EngineError):
    """The response or input violates a structural condition (Condition A)."""


@dataclass(frozen=True, eq=False)
class SntConfig:
    lam: float
    response: ResponseFunction
    trunc_eps: float = 1e-8
    horizon_override: Optional[float] = None

    def __post_init__(self):
        if not self.lam > 0:
            raise EngineError(f"lambda must be positive, got {self.lam}")
        if not 0.0 < self.trunc_eps <= 1e-3:
            raise EngineError(f"trunc_eps must lie in (0, 1e-3], got {self.trunc_eps}")
        if self.horizon_override is not None and not self.horizon_override > 0:
            raise EngineError("horizon must be positive")

    def check(self):
        """Raise :class:`ValidationRejection` on Condition A failures."""
        report = validate(self.response, self.lam)
        if not report.ok:
            raise ValidationRejection("; ".join(report.messages))
        return report

    def horizon(self):
        if self.horizon_override is not None:
            return float(self.horizon_override)
        return self.response.horizon(self.trunc_eps)


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

def _chunk(source, lam, hfun, horizon, n, seed):
    rng = np.random.default_rng(seed)
    counts = rng.poisson(lam * horizon, n)
    out = np.empty(n)
    start = 0
    while start < n:
        # split so each block holds at most MAX_SHOTS shots
        cum = np.cumsum(counts[start:])
        stop = start + max(1, int(np.searchsorted(cum, MAX_SHOTS, side="right")))
        c = counts[start:stop]
        total = int(c.sum())
        tau = rng.uniform(0.0, horizon, total)
        marks = source.draw(rng, total)
        out[start:stop] = _kernels.segment_sum(marks * hfun(tau), c)
        start = stop
    return out


def sample_snt(source, cfg: SntConfig, n: int, seed: int):
    """``n`` realizations of ``sum_i xi_i h(tau_i)`` over Poisson arrivals on [0, T].

    ``T`` is ``cfg.horizon_override`` or the smallest time with
    ``int_T^inf h <= trunc_eps * int_0^inf h``. An :class:`EmpiricalSample`
    source is resampled with replacement. Chunk ``i`` of ``CHUNK``
    realizations uses seed ``seed ^ i``.
    """
    if n < 1:
        raise EngineError("n must be at least 1")
    report = cfg.check()
    m = source.mean()
    if not math.isfinite(m) and cfg.horizon_override is None:
        raise EngineError("infinite-mean input needs an explicit horizon")
    horizon = cfg.horizon()
    hfun = cfg.response.fast(horizon)
    sizes = [min(CHUNK, n - i) for i in range(0, n, CHUNK)]

    def work(i):
        return _chunk(source, cfg.lam, hfun, horizon, sizes[i], seed ^ i)

    if len(sizes) == 1 or threads() == 1:
        parts = [work(i) for i in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=min(threads(), len(sizes))) as pool:
            parts = list(pool.map(work, range(len(sizes))))
    prov = {"source": getattr(source, "key", "empirical"), "response": cfg.response.name,
            "lambda": cfg.lam, "horizon": horizon, "trunc_eps": cfg.trunc_eps,
            "regime": report.regime}
    return EmpiricalSample(np.concatenate(parts), seed, prov)


# ---------------------------------------------------------------------------
# LST residuals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResidualRecord:
    s: float
    lhs: float
    rhs: float
    residual: float
    error: Optional[str] = None

    def as_dict(self):
        d = {"s": self.s, "lhs": self.lhs, "rhs": self.rhs, "residual": self.residual}
        if self.error:
            d["error"] = self.error
        return d


def shot_noise_exponent(spec, h: ResponseFunction, s: float) -> float:
    """``int_0^inf (1 - phi(s h(u))) du``."""
    if s == 0.0:
        return 0.0
    return h.integrate(lambda z: float(spec.lst_complement(s * z)))


def lst_residual(spec, cfg: SntConfig, s_grid):
    """Per-point ``|phi(s) - exp(-lam int (1 - phi(s h(u))) du)|``."""
    out = []
    for s in np.asarray(s_grid, dtype=np.float64):
        s = float(s)
        lhs = float(spec.lst(s))
        try:
            rhs = math.exp(-cfg.lam * shot_noise_exponent(spec, cfg.response, s))
        except QuadratureError as exc:
            out.append(ResidualRecord(s, lhs, math.nan, math.inf, str(exc)))
            continue
        out.append(ResidualRecord(s, lhs, rhs, abs(lhs - rhs)))
    return out


def max_residual(records):
    return max(r.residual for r in records)


# ---------------------------------------------------------------------------
# Levy measure identities
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LevyTail:
    """``x -> M(x, inf) = lam * int_0^inf tail(x / h(u)) du``."""

    spec: object
    cfg: SntConfig
    _memo: dict = field(default_factory=dict, repr=False, compare=False)

    def value(self, x: float) -> float:
        if x <= 0.0:
            raise DistError("Levy tail argument must be positive")
        tail = self.spec.tail
        g = lambda z: float(tail(np.float64(x / z))) if z > 0.0 else 0.0
        return self.cfg.lam * self.cfg.response.integrate(g)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.reshape([self.value(float(v)) for v in x.ravel()], x.shape)

    def truncated_first_moment(self, grid):
        """``W(y) = int_0^y t M(dt) = int_0^y M(t, inf) dt - y M(y, inf)`` on a uniform grid.

        The first cells (log singularity of the tail at 0) are integrated
        adaptively; later cells use Simpson's rule.
        """
        x = np.asarray(grid, dtype=np.float64)
        step = _grid_step(x)
        key = (x.size, step)
        if key in self._memo:
            return self._memo[key]
        tail_nodes = self(x[1:])
        mids = self(0.5 * (x[:-1] + x[1:]))
        cells = step / 6.0 * (np.concatenate([[0.0], tail_nodes[:-1]]) + 4.0 * mids + tail_nodes)
        # Simpson's error near the log singularity decays like k**-4 over cell k
        for k in range(min(8, cells.size)):
            cells[k] = quad(self.value, k * step, (k + 1) * step, epsrel=1e-10, epsabs=1e-13)
        cum = np.concatenate([[0.0], np.cumsum(cells)])
        w = cum - np.concatenate([[0.0], x[1:] * tail_nodes])
        w.setflags(write=False)
        self._memo[key] = w
        return w


def levy_tail(spec, cfg: SntConfig, x):
    return LevyTail(spec, cfg)(x)


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_residual: float
    bound: float
    grid: np.ndarray = field(repr=False)
    lhs: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)

    @property
    def passed(self):
        return bool(self.max_residual <= self.bound)

    def as_dict(self):
        return {"check": self.name, "max_residual": self.max_residual, "bound": self.bound,
                "pass": self.passed, "n_grid": int(self.grid.size)}


def uniform_grid(upper=4.0, step=1e-3):
    return np.arange(int(round(upper / step)) + 1) * step


def _grid_step(x):
    if x.size < 2 or x[0] != 0.0:
        raise EngineError("grid must be uniform and start at 0")
    d = np.diff(x)
    if not np.allclose(d, d[0], rtol=1e-9, atol=0.0):
        raise EngineError("grid must be uniform")
    return float(d[0])


def _finite_mean(spec):
    if not math.isfinite(spec.mean()):
        raise EngineError(f"{spec.key}: identity needs a finite mean")


def steutel_check(spec, levy: LevyTail, x_grid, factor=5.0):
    """``int_0^x y mu(dy) = int_0^x mu[0, x - y] y M(dy)`` on a uniform grid.

    The Stieltjes convolution is discretized by the trapezoidal rule; the
    expected error is ``O(step)`` and the bound is ``factor * step``.
    """
    _finite_mean(spec)
    x = np.asarray(x_grid, dtype=np.float64)
    step = _grid_step(x)
    lhs = np.asarray(spec.partial_mean(x), dtype=np.float64)
    w = levy.truncated_first_moment(x)
    f = np.asarray(spec.cdf(x), dtype=np.float64)
    c = 0.5 * (f[:-1] + f[1:])
    rhs = np.concatenate([[0.0], np.convolve(c, np.diff(w))[: x.size - 1]])
    res = float(np.max(np.abs(lhs - rhs)))
    return CheckResult("steutel", res, factor * step, x, lhs, rhs)


def feature_check(spec, levy: LevyTail, nu: Optional[MixingMeasure], x_grid, factor=5.0):
    """``int_0^x y M(dy) = int_(0, b] omega[0, x / z] nu(dz)`` on a uniform grid.

    The left side comes from the Levy tail, the right side from the partial
    mean of ``spec`` against ``nu``. ``nu`` defaults to the dual of the
    configured response.
    """
    _finite_mean(spec)
    x = np.asarray(x_grid, dtype=np.float64)
    step = _grid_step(x)
    if nu is None:
        nu = to_mixing_measure(levy.cfg.response, levy.cfg.lam)
    lhs = levy.truncated_first_moment(x)
    pm = spec.partial_mean
    rhs = np.array([nu.integrate(lambda z: float(pm(np.float64(v / z)))) if v > 0 else 0.0
                    for v in x])
    res = float(np.max(np.abs(lhs - rhs)))
    return CheckResult("feature", res, factor * step, x, lhs, rhs)
