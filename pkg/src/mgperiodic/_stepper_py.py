"""Pure-Python method-of-steps kernel (fallback backend).

Semantics are identical to the compiled kernel in ``_native.pyx``: classic
fixed-step RK4 where delayed arguments are read from the cubic-Hermite
dense output of already-completed steps, the initial history function is
consulted for times at or before the start, and a step whose delayed reads
would touch not-yet-computed data is subdivided until every read lands at
or before the current (sub)step start.

The model is lowered to flat "packed" form first so both backends evaluate
exactly the same arithmetic: coefficient functions become either harmonic
triples or Hermite knot tables, and each production term becomes the
triple (lam, m, n) plus the indices of its r/tau/mu functions.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

BACKEND_NAME = "pure-python"

_TWO_PI = 2.0 * math.pi
_EXP_MAX = 709.0

# function table layout: index 0 is b; term k (0-based) owns
# r at 1+3k, tau at 2+3k, mu at 3+3k
_KIND_TRIG = 0
_KIND_SAMPLED = 1


@dataclass
class PackedModel:
    """Flattened model: plain-float tables consumable by either backend."""

    T: float
    M: int
    lam: list[float]
    m: list[float]
    n: list[float]
    # per function: (kind, a0, hj, hc, hs, sval, sslope)
    funcs: list[tuple]
    #: indices of delay functions that are not identically zero
    delay_ids: list[int]
    #: dense-grid minimum of each function in delay_ids
    delay_min: list[float]


def pack_model(model) -> PackedModel:
    funcs = []
    delay_ids: list[int] = []
    delay_min: list[float] = []

    def lower(fn):
        if fn.samples is None:
            hj = [float(j) for j, _, _ in fn.harmonics]
            hc = [c for _, c, _ in fn.harmonics]
            hs = [s for _, _, s in fn.harmonics]
            return (_KIND_TRIG, fn.a0, hj, hc, hs, [], [])
        return (_KIND_SAMPLED, 0.0, [], [], [], list(fn.samples),
                list(fn.knot_slopes))

    def is_zero(fn) -> bool:
        if fn.samples is None:
            return fn.a0 == 0.0 and not fn.harmonics
        return max(abs(v) for v in fn.samples) == 0.0

    funcs.append(lower(model.b))
    for term in model.terms:
        funcs.append(lower(term.r))
        for fn in (term.tau, term.mu):
            if not is_zero(fn):
                delay_ids.append(len(funcs))
                delay_min.append(fn.minimum(8192))
            funcs.append(lower(fn))
    return PackedModel(
        T=model.T, M=len(model.terms),
        lam=[t.lam for t in model.terms],
        m=[t.m for t in model.terms],
        n=[t.n for t in model.terms],
        funcs=funcs, delay_ids=delay_ids, delay_min=delay_min,
    )


def needs_step_checks(pk: PackedModel, h: float) -> bool:
    """True when some delay could dip below double the step size."""
    return any(dmin < 2.0 * h for dmin in pk.delay_min)


def eval_packed(pk: PackedModel, f: int, t: float) -> float:
    """Evaluate packed coefficient function `f` at time t (reduced mod T)."""
    T = pk.T
    kind, a0, hj, hc, hs, sval, sslope = pk.funcs[f]
    tm = t % T
    if kind == _KIND_TRIG:
        val = a0
        w = _TWO_PI / T
        for i in range(len(hj)):
            val += hc[i] * math.cos(w * hj[i] * tm) + hs[i] * math.sin(w * hj[i] * tm)
        return val
    n = len(sval)
    u = tm / T * n
    i = int(u)
    if i >= n:
        i, u = 0, 0.0
    theta = u - i
    i1 = i + 1
    if i1 >= n:
        i1 = 0
    h = T / n
    om = 1.0 - theta
    return ((1.0 + 2.0 * theta) * om * om * sval[i]
            + theta * om * om * h * sslope[i]
            + theta * theta * (3.0 - 2.0 * theta) * sval[i1]
            + theta * theta * (theta - 1.0) * h * sslope[i1])


def _softplus(x: float) -> float:
    if x > 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def _exp_safe(x: float) -> float:
    return math.exp(x) if x < _EXP_MAX else math.inf


class _Dense:
    """Knot store with cubic-Hermite dense evaluation and history lookup."""

    __slots__ = ("kt", "kv", "kd", "t0", "hist_const", "hist_fn")

    def __init__(self, t0, hist_const, hist_fn):
        self.kt: list[float] = [t0]
        self.kv: list[float] = []
        self.kd: list[float] = []
        self.t0 = t0
        self.hist_const = hist_const
        self.hist_fn = hist_fn

    def history(self, u: float) -> float:
        if self.hist_fn is None:
            return self.hist_const
        return float(self.hist_fn(u))

    def eval(self, u: float) -> float:
        if u < self.t0:
            return self.history(u)
        kt = self.kt
        last = kt[-1]
        if u >= last:
            if u - last <= 1e-12 * max(1.0, abs(u)):
                return self.kv[-1]
            raise RuntimeError(
                f"delayed read at t={u} is ahead of computed history (t={last})")
        i = bisect_right(kt, u) - 1
        t_lo = kt[i]
        h = kt[i + 1] - t_lo
        theta = (u - t_lo) / h
        om = 1.0 - theta
        return ((1.0 + 2.0 * theta) * om * om * self.kv[i]
                + theta * om * om * h * self.kd[i]
                + theta * theta * (3.0 - 2.0 * theta) * self.kv[i + 1]
                + theta * theta * (theta - 1.0) * h * self.kd[i + 1])


def _rhs(pk: PackedModel, dense: _Dense, mode: int, s: float, v: float) -> float:
    """Stage derivative at time s with stage state v (log mode: y, else x)."""
    b = eval_packed(pk, 0, s)
    if mode == 0:
        acc = -b
    else:
        if v <= 0.0:
            raise ValueError(f"x-space state became nonpositive at t={s}")
        acc = -b * v
    for k in range(pk.M):
        fr = 1 + 3 * k
        tau = eval_packed(pk, fr + 1, s)
        mu = eval_packed(pk, fr + 2, s)
        vt = v if tau == 0.0 else dense.eval(s - tau)
        vm = v if mu == 0.0 else dense.eval(s - mu)
        r = eval_packed(pk, fr, s)
        if mode == 0:
            acc += pk.lam[k] * r * _exp_safe(
                pk.m[k] * vt - v - _softplus(pk.n[k] * vm))
        else:
            if vt <= 0.0 or vm <= 0.0:
                raise ValueError(
                    f"delayed x value is nonpositive at t={s} (term {k + 1})")
            p = pk.m[k] * math.log(vt)
            q = pk.n[k] * math.log(vm)
            if p < 700.0 and q < 700.0:
                acc += pk.lam[k] * r * math.exp(p) / (1.0 + math.exp(q))
            else:
                acc += pk.lam[k] * r * _exp_safe(p - _softplus(q))
    return acc


def _subdivisions(pk: PackedModel, t: float, h: float, max_splits: int) -> int:
    """Smallest substep count making every delayed read land at or before
    its substep start; 1 when the step needs no subdivision."""
    nsub = 1
    for _ in range(64):
        hsub = h / nsub
        dmin = math.inf
        violated = False
        for i in range(nsub):
            tb = t + i * hsub
            for off in (0.5 * hsub, hsub):
                s = tb + off
                for f in pk.delay_ids:
                    dv = eval_packed(pk, f, s)
                    if dv > 0.0:
                        if dv < off:
                            violated = True
                        if dv < dmin:
                            dmin = dv
        if not violated:
            return nsub
        needed = int(math.ceil(h / dmin * (1.0 + 1e-12)))
        nsub = max(nsub + 1, needed)
        if nsub > max_splits:
            raise ValueError(
                f"a delay is positive but smaller than {h / max_splits:g} near "
                f"t={t:g}; increase steps_per_period")
    raise ValueError(f"could not resolve delayed reads by subdivision near t={t:g}")


def integrate_steps(pk: PackedModel, mode: int, t0: float, t1: float,
                    h: float, v0: float, hist_const: float, hist_fn,
                    check_steps: bool, max_splits: int = 65536):
    """Run the method of steps from t0 to t1; returns knot arrays (t, v, v')."""
    dense = _Dense(t0, hist_const, hist_fn)
    dense.kv.append(v0)
    dense.kd.append(_rhs(pk, dense, mode, t0, v0))

    span = t1 - t0
    n_whole = int(math.floor(span / h + 1e-9))
    t = t0
    v = v0
    step = 0
    while t < t1 - 1e-12 * max(1.0, abs(span)):
        t_next = t0 + (step + 1) * h if step < n_whole else t1
        if t_next > t1:
            t_next = t1
        hstep = t_next - t
        if hstep <= 0.0:
            break
        nsub = _subdivisions(pk, t, hstep, max_splits) if check_steps else 1
        hsub = hstep / nsub
        for i in range(nsub):
            tb = t + i * hsub
            te = t + (i + 1) * hsub if i + 1 < nsub else t_next
            hs_ = te - tb
            k1 = dense.kd[-1]
            k2 = _rhs(pk, dense, mode, tb + 0.5 * hs_, v + 0.5 * hs_ * k1)
            k3 = _rhs(pk, dense, mode, tb + 0.5 * hs_, v + 0.5 * hs_ * k2)
            k4 = _rhs(pk, dense, mode, te, v + hs_ * k3)
            v = v + hs_ / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            dense.kt.append(te)
            dense.kv.append(v)
            dense.kd.append(_rhs(pk, dense, mode, te, v))
        t = t_next
        step += 1
    return (np.array(dense.kt), np.array(dense.kv), np.array(dense.kd))
