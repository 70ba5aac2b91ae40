# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled method-of-steps kernel (the integrator's hot path).

Mirrors ``_stepper_py.integrate_steps`` operation for operation --- the two
backends must produce identical trajectories, so every formula here is kept
structurally identical to the pure-Python twin.  The packed model arrives
pre-flattened into plain double/int arrays (see ``_backend.flatten_packed``).
"""

from libc.math cimport INFINITY, ceil, cos, exp, floor, fmod, log, log1p, sin

import numpy as np

BACKEND_NAME = "compiled-cython"

cdef double TWO_PI = 6.283185307179586
cdef double EXP_MAX = 709.0
cdef int KIND_TRIG = 0


cdef inline double _softplus(double x) noexcept nogil:
    if x > 0.0:
        return x + log1p(exp(-x))
    return log1p(exp(x))


cdef inline double _exp_safe(double x) noexcept nogil:
    if x < EXP_MAX:
        return exp(x)
    return INFINITY


cdef inline double _pymod(double t, double T) noexcept nogil:
    # same result as CPython's float modulo for T > 0
    cdef double tm = fmod(t, T)
    if tm < 0.0:
        tm += T
    return tm


cdef class Kernel:
    cdef double T
    cdef int M
    cdef double[:] lam, m, n
    cdef int[:] fkind
    cdef double[:] fa0
    cdef int[:] hoff, hlen
    cdef double[:] hj, hc, hs
    cdef int[:] soff, slen
    cdef double[:] sval, sslope
    cdef int[:] delay_ids
    cdef int n_delay
    cdef int mode
    cdef double t0
    cdef double hist_const
    cdef object hist_fn
    # growable knot storage
    cdef object kt_arr, kv_arr, kd_arr
    cdef double[:] kt, kv, kd
    cdef Py_ssize_t nk

    def __init__(self, double T, int M,
                 double[:] lam, double[:] m, double[:] n,
                 int[:] fkind, double[:] fa0,
                 int[:] hoff, int[:] hlen,
                 double[:] hj, double[:] hc, double[:] hs,
                 int[:] soff, int[:] slen,
                 double[:] sval, double[:] sslope,
                 int[:] delay_ids):
        self.T = T
        self.M = M
        self.lam, self.m, self.n = lam, m, n
        self.fkind, self.fa0 = fkind, fa0
        self.hoff, self.hlen = hoff, hlen
        self.hj, self.hc, self.hs = hj, hc, hs
        self.soff, self.slen = soff, slen
        self.sval, self.sslope = sval, sslope
        self.delay_ids = delay_ids
        self.n_delay = delay_ids.shape[0]

    cdef double eval_fn(self, int f, double t) noexcept:
        cdef double tm = _pymod(t, self.T)
        cdef double val, w, theta, om, h
        cdef int i, i1, nn, o
        if self.fkind[f] == KIND_TRIG:
            val = self.fa0[f]
            w = TWO_PI / self.T
            o = self.hoff[f]
            for i in range(self.hlen[f]):
                val += (self.hc[o + i] * cos(w * self.hj[o + i] * tm)
                        + self.hs[o + i] * sin(w * self.hj[o + i] * tm))
            return val
        nn = self.slen[f]
        o = self.soff[f]
        cdef double u = tm / self.T * nn
        i = <int>u
        if i >= nn:
            i = 0
            u = 0.0
        theta = u - i
        i1 = i + 1
        if i1 >= nn:
            i1 = 0
        h = self.T / nn
        om = 1.0 - theta
        return ((1.0 + 2.0 * theta) * om * om * self.sval[o + i]
                + theta * om * om * h * self.sslope[o + i]
                + theta * theta * (3.0 - 2.0 * theta) * self.sval[o + i1]
                + theta * theta * (theta - 1.0) * h * self.sslope[o + i1])

    cdef double history(self, double u):
        if self.hist_fn is None:
            return self.hist_const
        return float(self.hist_fn(u))

    cdef double dense_eval(self, double u):
        cdef double last, t_lo, h, theta, om
        cdef Py_ssize_t lo, hi, mid, i
        if u < self.t0:
            return self.history(u)
        last = self.kt[self.nk - 1]
        if u >= last:
            if u - last <= 1e-12 * max(1.0, abs(u)):
                return self.kv[self.nk - 1]
            raise RuntimeError(
                f"delayed read at t={u} is ahead of computed history (t={last})")
        lo = 0
        hi = self.nk
        while lo < hi:            # bisect_right on kt[0:nk]
            mid = (lo + hi) // 2
            if u < self.kt[mid]:
                hi = mid
            else:
                lo = mid + 1
        i = lo - 1
        t_lo = self.kt[i]
        h = self.kt[i + 1] - t_lo
        theta = (u - t_lo) / h
        om = 1.0 - theta
        return ((1.0 + 2.0 * theta) * om * om * self.kv[i]
                + theta * om * om * h * self.kd[i]
                + theta * theta * (3.0 - 2.0 * theta) * self.kv[i + 1]
                + theta * theta * (theta - 1.0) * h * self.kd[i + 1])

    cdef double rhs(self, double s, double v):
        cdef double b = self.eval_fn(0, s)
        cdef double acc, tau, mu, vt, vm, r, p, q
        cdef int k, fr
        if self.mode == 0:
            acc = -b
        else:
            if v <= 0.0:
                raise ValueError(f"x-space state became nonpositive at t={s}")
            acc = -b * v
        for k in range(self.M):
            fr = 1 + 3 * k
            tau = self.eval_fn(fr + 1, s)
            mu = self.eval_fn(fr + 2, s)
            vt = v if tau == 0.0 else self.dense_eval(s - tau)
            vm = v if mu == 0.0 else self.dense_eval(s - mu)
            r = self.eval_fn(fr, s)
            if self.mode == 0:
                acc += self.lam[k] * r * _exp_safe(
                    self.m[k] * vt - v - _softplus(self.n[k] * vm))
            else:
                if vt <= 0.0 or vm <= 0.0:
                    raise ValueError(
                        f"delayed x value is nonpositive at t={s} (term {k + 1})")
                p = self.m[k] * log(vt)
                q = self.n[k] * log(vm)
                if p < 700.0 and q < 700.0:
                    acc += self.lam[k] * r * exp(p) / (1.0 + exp(q))
                else:
                    acc += self.lam[k] * r * _exp_safe(p - _softplus(q))
        return acc

    cdef int subdivisions(self, double t, double h, int max_splits) except -1:
        cdef int nsub = 1, attempt, i, j, needed
        cdef double hsub, dmin, tb, s, dv, off
        cdef bint violated
        for attempt in range(64):
            hsub = h / nsub
            dmin = INFINITY
            violated = False
            for i in range(nsub):
                tb = t + i * hsub
                for j in range(2):
                    off = 0.5 * hsub if j == 0 else hsub
                    s = tb + off
                    for f in range(self.n_delay):
                        dv = self.eval_fn(self.delay_ids[f], s)
                        if dv > 0.0:
                            if dv < off:
                                violated = True
                            if dv < dmin:
                                dmin = dv
            if not violated:
                return nsub
            needed = <int>ceil(h / dmin * (1.0 + 1e-12))
            nsub = max(nsub + 1, needed)
            if nsub > max_splits:
                raise ValueError(
                    f"a delay is positive but smaller than {h / max_splits:g} "
                    f"near t={t:g}; increase steps_per_period")
        raise ValueError(
            f"could not resolve delayed reads by subdivision near t={t:g}")

    cdef void _grow(self):
        cdef Py_ssize_t cap = self.kt_arr.shape[0]
        self.kt_arr = np.resize(self.kt_arr, 2 * cap)
        self.kv_arr = np.resize(self.kv_arr, 2 * cap)
        self.kd_arr = np.resize(self.kd_arr, 2 * cap)
        self.kt, self.kv, self.kd = self.kt_arr, self.kv_arr, self.kd_arr

    cdef void _append(self, double t, double v, double d):
        if self.nk >= self.kt.shape[0]:
            self._grow()
        self.kt[self.nk] = t
        self.kv[self.nk] = v
        self.kd[self.nk] = d
        self.nk += 1

    def run(self, int mode, double t0, double t1, double h, double v0,
            double hist_const, object hist_fn, bint check_steps,
            int max_splits=65536):
        cdef double span = t1 - t0
        cdef long n_whole = <long>floor(span / h + 1e-9)
        cdef Py_ssize_t cap = n_whole + 16
        self.mode = mode
        self.t0 = t0
        self.hist_const = hist_const
        self.hist_fn = hist_fn
        self.kt_arr = np.empty(cap)
        self.kv_arr = np.empty(cap)
        self.kd_arr = np.empty(cap)
        self.kt, self.kv, self.kd = self.kt_arr, self.kv_arr, self.kd_arr
        self.nk = 0
        self._append(t0, v0, 0.0)
        self.kd[0] = self.rhs(t0, v0)

        cdef double t = t0, v = v0, t_next, hstep, hsub, tb, te, hs_
        cdef double k1, k2, k3, k4
        cdef long step = 0
        cdef int nsub, i
        while t < t1 - 1e-12 * max(1.0, abs(span)):
            t_next = t0 + (step + 1) * h if step < n_whole else t1
            if t_next > t1:
                t_next = t1
            hstep = t_next - t
            if hstep <= 0.0:
                break
            nsub = self.subdivisions(t, hstep, max_splits) if check_steps else 1
            hsub = hstep / nsub
            for i in range(nsub):
                tb = t + i * hsub
                te = t + (i + 1) * hsub if i + 1 < nsub else t_next
                hs_ = te - tb
                k1 = self.kd[self.nk - 1]
                k2 = self.rhs(tb + 0.5 * hs_, v + 0.5 * hs_ * k1)
                k3 = self.rhs(tb + 0.5 * hs_, v + 0.5 * hs_ * k2)
                k4 = self.rhs(te, v + hs_ * k3)
                v = v + hs_ / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                self._append(te, v, 0.0)
                self.kd[self.nk - 1] = self.rhs(te, v)
            t = t_next
            step += 1
        return (np.asarray(self.kt_arr[:self.nk]).copy(),
                np.asarray(self.kv_arr[:self.nk]).copy(),
                np.asarray(self.kd_arr[:self.nk]).copy())


def integrate_steps(pk_flat, int mode, double t0, double t1, double h,
                    double v0, double hist_const, hist_fn,
                    bint check_steps, int max_splits=65536):
    """Driver with the same signature shape as the pure backend."""
    kern = Kernel(pk_flat["T"], pk_flat["M"],
                  pk_flat["lam"], pk_flat["m"], pk_flat["n"],
                  pk_flat["fkind"], pk_flat["fa0"],
                  pk_flat["hoff"], pk_flat["hlen"],
                  pk_flat["hj"], pk_flat["hc"], pk_flat["hs"],
                  pk_flat["soff"], pk_flat["slen"],
                  pk_flat["sval"], pk_flat["sslope"],
                  pk_flat["delay_ids"])
    return kern.run(mode, t0, t1, h, v0, hist_const, hist_fn,
                    check_steps, max_splits)
