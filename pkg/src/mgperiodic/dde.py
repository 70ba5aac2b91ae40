"""Forward time integration of the delay equation by the method of steps.

Fixed-step classical RK4 with cubic-Hermite dense output.  Delayed
arguments are read from the dense output of completed steps (or from the
initial history for times at or before the start); a step whose delayed
reads would touch not-yet-computed data is subdivided until every read
lands at or before the current substep start, which keeps the scheme
explicit and deterministic.

Integration runs either on x itself or on y = log(x) (the default: it is
overflow-safe and keeps positivity structural).  The initial history is
given in the coordinates of the chosen mode.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _backend
from ._stepper_py import _exp_safe, _softplus
from .model import Model

__all__ = ["History", "Trajectory", "rhs", "rhs_log", "integrate"]

MODE_LOG = "log"
MODE_X = "x"

_MODE_CODES = {MODE_LOG: 0, "log-space": 0, MODE_X: 1, "x-space": 1}


def rhs(model: Model, t: float, x_now: float, delayed_values) -> float:
    """Right-hand side in x space.

    `delayed_values` supplies one pair ``(x(t - tau_k), x(t - mu_k))`` per
    term.  Powers are computed as ``exp(m * log(x))``; nonpositive state or
    delayed values are a domain error.
    """
    if x_now <= 0.0:
        raise ValueError(f"x must be positive, got {x_now}")
    acc = -model.b.evaluate(t) * x_now
    for term, (x_tau, x_mu) in zip(model.terms, delayed_values, strict=True):
        if x_tau <= 0.0 or x_mu <= 0.0:
            raise ValueError(f"delayed values must be positive, got {x_tau}, {x_mu}")
        p = term.m * math.log(x_tau)
        q = term.n * math.log(x_mu)
        if p < 700.0 and q < 700.0:
            acc += term.lam * term.r.evaluate(t) * math.exp(p) / (1.0 + math.exp(q))
        else:
            acc += term.lam * term.r.evaluate(t) * _exp_safe(p - _softplus(q))
    return acc


def rhs_log(model: Model, t: float, y_now: float, delayed_values) -> float:
    """Right-hand side in log space; `delayed_values` are pairs of y values."""
    acc = -model.b.evaluate(t)
    for term, (y_tau, y_mu) in zip(model.terms, delayed_values, strict=True):
        acc += term.lam * term.r.evaluate(t) * _exp_safe(
            term.m * y_tau - y_now - _softplus(term.n * y_mu))
    return acc


@dataclass(frozen=True)
class History:
    """Computed knots plus the initial history, with dense evaluation.

    All knots are retained for the whole run, so the retention horizon
    always covers the largest delay plus any lookback the caller needs.
    """

    start: float
    times: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    hist_const: float
    hist_fn: object  # callable or None

    def evaluate(self, t: float) -> float:
        if t < self.start:
            return self.hist_const if self.hist_fn is None else float(self.hist_fn(t))
        kt = self.times
        if t >= kt[-1]:
            if t - kt[-1] <= 1e-12 * max(1.0, abs(t)):
                return float(self.values[-1])
            raise ValueError(f"t={t} is beyond the computed range (t={kt[-1]})")
        i = bisect_right(kt, t) - 1
        t_lo = kt[i]
        h = kt[i + 1] - t_lo
        theta = (t - t_lo) / h
        om = 1.0 - theta
        return float((1.0 + 2.0 * theta) * om * om * self.values[i]
                     + theta * om * om * h * self.slopes[i]
                     + theta * theta * (3.0 - 2.0 * theta) * self.values[i + 1]
                     + theta * theta * (theta - 1.0) * h * self.slopes[i + 1])

    def evaluate_many(self, ts) -> np.ndarray:
        return np.array([self.evaluate(float(t)) for t in np.asarray(ts).ravel()])


@dataclass(frozen=True)
class Trajectory:
    """Integration result: accepted knots plus metadata and dense output."""

    mode: str
    steps_per_period: int
    step: float
    times: np.ndarray
    values: np.ndarray          # y in log mode, x in x mode
    history: History
    model: Model

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t1(self) -> float:
        return float(self.times[-1])

    def sample(self, ts) -> np.ndarray:
        return self.history.evaluate_many(ts)

    def x_values(self) -> np.ndarray:
        return np.exp(self.values) if self.mode == MODE_LOG else self.values

    def log_values(self) -> np.ndarray:
        return self.values if self.mode == MODE_LOG else np.log(self.values)

    def write_csv(self, path: str | Path) -> None:
        column = "y" if self.mode == MODE_LOG else "x"
        lines = [f"# mode: {self.mode}-space", f"t,{column}"]
        for t, v in zip(self.times, self.values):
            lines.append(f"{t:.17g},{v:.17g}")
        Path(path).write_text("\n".join(lines) + "\n")


def integrate(model: Model, initial_history, t_span: tuple[float, float],
              steps_per_period: int = 512, mode: str = MODE_LOG,
              max_splits: int = 65536, backend: str | None = None) -> Trajectory:
    """Integrate the model over `t_span` by the method of steps.

    `initial_history` is a constant or a callable of time, expressed in the
    coordinates of `mode` (x values in x mode, y = log x in log mode), and
    is consulted for every delayed read at or before the start time.
    """
    if steps_per_period < 64:
        raise ValueError(f"steps_per_period must be >= 64, got {steps_per_period}")
    code = _MODE_CODES.get(mode)
    if code is None:
        raise ValueError(f"mode must be one of {sorted(_MODE_CODES)}, got {mode!r}")
    mode = MODE_LOG if code == 0 else MODE_X
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError(f"t_span must be increasing, got {t_span}")

    if callable(initial_history):
        hist_fn, hist_const = initial_history, 0.0
        v0 = float(initial_history(t0))
    else:
        hist_fn, hist_const = None, float(initial_history)
        v0 = hist_const
    if mode == MODE_X:
        probe = np.linspace(t0 - model.max_delay(), t0, 257)
        vals = ([hist_const] if hist_fn is None
                else [float(hist_fn(t)) for t in probe])
        if min(vals) <= 0.0:
            raise ValueError("x-space initial history must be positive")

    h = model.T / steps_per_period
    packed = _backend.pack_model(model)
    check = _backend.needs_step_checks(packed, h)
    kt, kv, kd = _backend.integrate_steps(
        packed, code, t0, t1, h, v0, hist_const, hist_fn, check,
        max_splits=max_splits, backend=backend)
    history = History(start=t0, times=kt, values=kv, slopes=kd,
                      hist_const=hist_const, hist_fn=hist_fn)
    return Trajectory(mode=mode, steps_per_period=steps_per_period, step=h,
                      times=kt, values=kv, history=history, model=model)
