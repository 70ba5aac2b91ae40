"""T-periodic scalar coefficient functions.

Two interchangeable representations are supported:

* ``trig`` -- a mean value plus a short list of ``(j, cos_coeff, sin_coeff)``
  harmonics of the fundamental frequency ``2*pi/T``.  This is the canonical
  interchange form: it is exactly periodic and its mean is the stored
  constant term.
* ``sampled`` -- uniformly spaced samples over one period joined by a
  periodic cubic spline.  Internally the spline is stored in Hermite form
  (knot values plus knot derivatives) so that evaluation needs no SciPy
  object and the compiled stepper can evaluate the same piecewise cubic.

All instances are immutable and safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["PeriodicFn", "simpson_mean"]

_TWO_PI = 2.0 * math.pi

#: grid density used to validate declared positivity / nonnegativity
POSITIVITY_GRID = 4096


def _periodic_spline_derivatives(samples: np.ndarray, period: float) -> np.ndarray:
    """Knot derivatives of the periodic cubic spline through `samples`."""
    from scipy.interpolate import CubicSpline

    n = len(samples)
    ts = np.linspace(0.0, period, n + 1)
    ys = np.concatenate([samples, samples[:1]])
    spline = CubicSpline(ts, ys, bc_type="periodic")
    return spline.derivative()(ts[:-1])


def _hermite(v0: float, v1: float, d0: float, d1: float, h: float, theta: float) -> float:
    """Cubic Hermite basis evaluation on one knot interval of width h."""
    om = 1.0 - theta
    h00 = (1.0 + 2.0 * theta) * om * om
    h10 = theta * om * om
    h01 = theta * theta * (3.0 - 2.0 * theta)
    h11 = theta * theta * (theta - 1.0)
    return h00 * v0 + h10 * h * d0 + h01 * v1 + h11 * h * d1


@dataclass(frozen=True)
class PeriodicFn:
    """A T-periodic scalar function in trig or sampled form.

    Use the :meth:`trig` / :meth:`sampled` constructors rather than
    ``__init__`` directly.
    """

    period: float
    a0: float = 0.0
    harmonics: tuple[tuple[int, float, float], ...] = ()
    samples: tuple[float, ...] | None = None
    #: knot derivatives of the periodic spline (sampled form only)
    knot_slopes: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if not (self.period > 0.0 and math.isfinite(self.period)):
            raise ValueError(f"period must be positive and finite, got {self.period}")
        for j, _, _ in self.harmonics:
            if j < 1 or j != int(j):
                raise ValueError(f"harmonic multiple must be an integer >= 1, got {j}")
        if self.samples is not None and len(self.samples) < 4:
            raise ValueError("sampled form needs at least 4 samples per period")

    # -- constructors ------------------------------------------------------

    @classmethod
    def trig(cls, period: float, mean: float,
             harmonics: "tuple | list" = ()) -> "PeriodicFn":
        harm = tuple((int(j), float(c), float(s)) for j, c, s in harmonics)
        return cls(period=float(period), a0=float(mean), harmonics=harm)

    @classmethod
    def constant(cls, period: float, value: float) -> "PeriodicFn":
        return cls.trig(period, value)

    @classmethod
    def sampled(cls, period: float, samples) -> "PeriodicFn":
        arr = np.asarray(samples, dtype=float)
        slopes = _periodic_spline_derivatives(arr, float(period))
        return cls(period=float(period), a0=0.0, harmonics=(),
                   samples=tuple(arr.tolist()), knot_slopes=tuple(slopes.tolist()))

    @classmethod
    def from_samples_of(cls, fn, period: float, n: int) -> "PeriodicFn":
        ts = np.linspace(0.0, period, n, endpoint=False)
        return cls.sampled(period, [fn(t) for t in ts])

    # -- queries -----------------------------------------------------------

    @property
    def is_trig(self) -> bool:
        return self.samples is None

    def evaluate(self, t: float) -> float:
        """Value at time t, with the argument reduced mod T first."""
        tm = t % self.period
        if self.samples is None:
            w = _TWO_PI / self.period
            val = self.a0
            for j, c, s in self.harmonics:
                val += c * math.cos(w * j * tm) + s * math.sin(w * j * tm)
            return val
        n = len(self.samples)
        u = tm / self.period * n
        i = int(u)
        if i >= n:  # tm == period up to rounding
            i, u = 0, 0.0
        theta = u - i
        i1 = (i + 1) % n
        h = self.period / n
        return _hermite(self.samples[i], self.samples[i1],
                        self.knot_slopes[i], self.knot_slopes[i1], h, theta)

    __call__ = evaluate

    def evaluate_many(self, times: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`evaluate` over an array of times."""
        tm = np.asarray(times, dtype=float) % self.period
        if self.samples is None:
            w = _TWO_PI / self.period
            out = np.full_like(tm, self.a0)
            for j, c, s in self.harmonics:
                out += c * np.cos(w * j * tm) + s * np.sin(w * j * tm)
            return out
        n = len(self.samples)
        vals = np.asarray(self.samples)
        slopes = np.asarray(self.knot_slopes)
        u = tm / self.period * n
        i = np.floor(u).astype(int)
        i[i >= n] = 0
        theta = u - i
        i1 = (i + 1) % n
        h = self.period / n
        om = 1.0 - theta
        return ((1.0 + 2.0 * theta) * om * om * vals[i]
                + theta * om * om * h * slopes[i]
                + theta * theta * (3.0 - 2.0 * theta) * vals[i1]
                + theta * theta * (theta - 1.0) * h * slopes[i1])

    def mean(self, panels: int = 1024) -> float:
        """Average over one period.

        Exact (the stored constant term) for the trig form; composite
        Simpson quadrature with `panels` panels for the sampled form.
        """
        if self.samples is None:
            return self.a0
        return simpson_mean(self, panels=panels)

    def minimum(self, grid: int = POSITIVITY_GRID) -> float:
        return float(np.min(self.evaluate_many(_grid(self.period, grid))))

    def maximum(self, grid: int = POSITIVITY_GRID) -> float:
        return float(np.max(self.evaluate_many(_grid(self.period, grid))))

    def is_positive(self, grid: int = POSITIVITY_GRID) -> bool:
        return self.minimum(grid) > 0.0

    def is_nonnegative(self, grid: int = POSITIVITY_GRID) -> bool:
        return self.minimum(grid) >= 0.0


def _grid(period: float, n: int) -> np.ndarray:
    return np.linspace(0.0, period, n, endpoint=False)


def simpson_mean(fn, panels: int = 1024, period: float | None = None) -> float:
    """Mean of a periodic function by composite Simpson quadrature.

    `fn` may be a :class:`PeriodicFn` or any callable; `period` defaults to
    ``fn.period``.  One panel spans two grid intervals, so `panels` panels
    evaluate the integrand at ``2*panels + 1`` nodes.
    """
    T = fn.period if period is None else period
    n = 2 * panels
    ts = np.linspace(0.0, T, n + 1)
    if isinstance(fn, PeriodicFn):
        ys = fn.evaluate_many(ts)
    else:
        ys = np.array([fn(t) for t in ts])
    h = T / n
    total = ys[0] + ys[-1] + 4.0 * np.sum(ys[1:-1:2]) + 2.0 * np.sum(ys[2:-1:2])
    return float(total * h / 3.0 / T)
