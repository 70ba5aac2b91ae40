"""Periodic-orbit location by Fourier collocation (harmonic balance).

A T-periodic candidate y(t) = log x(t) is represented by a truncated
Fourier series.  Because the ansatz is T-periodic, delayed arguments
reduce modulo the period, so no history object is involved: residuals of
the log-space equation are evaluated exactly at oversampled collocation
times (4K+2 points for K harmonics) and driven to zero by a damped Newton
iteration with a forward-difference Jacobian, solved in the least-squares
sense.  Unlike forward integration, this reaches unstable orbits, which is
essential because multiplicity interleaves stable and unstable solutions.

Found orbits must satisfy the a priori bound: the log-amplitude of any
true periodic solution is at most C, the integral of the decay rate over
one period.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import dde
from .analysis import EnvelopeGrid, alternation_chain, phi, phi_on_grid
from .model import Model

__all__ = [
    "FourierSeries",
    "PeriodicOrbit",
    "CollocationSystem",
    "collocation_residual",
    "solve_orbit",
    "find_all_orbits",
    "validate_orbit",
    "ValidationReport",
    "write_orbit_csv",
    "write_manifest_csv",
]

DEFAULT_K = 16
DEFAULT_RESIDUAL_TOL = 1e-10
DEFAULT_AMPLITUDE_TOL = 1e-6
DEFAULT_DEDUP_TOL = 1e-4
FINE_GRID = 2048


@dataclass(frozen=True)
class FourierSeries:
    """Truncated real Fourier series: mean plus K (cos, sin) harmonic pairs."""

    period: float
    mean: float
    coeffs: tuple[tuple[float, float], ...]

    @property
    def K(self) -> int:
        return len(self.coeffs)

    def as_vector(self) -> np.ndarray:
        vec = [self.mean]
        for c, s in self.coeffs:
            vec.extend((c, s))
        return np.array(vec)

    @classmethod
    def from_vector(cls, period: float, vec: np.ndarray) -> "FourierSeries":
        pairs = tuple((float(vec[1 + 2 * j]), float(vec[2 + 2 * j]))
                      for j in range((len(vec) - 1) // 2))
        return cls(period=period, mean=float(vec[0]), coeffs=pairs)

    def evaluate_many(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        w = 2.0 * math.pi / self.period
        out = np.full_like(ts, self.mean)
        for j, (c, s) in enumerate(self.coeffs, start=1):
            out += c * np.cos(w * j * ts) + s * np.sin(w * j * ts)
        return out

    def evaluate(self, t: float) -> float:
        w = 2.0 * math.pi / self.period
        val = self.mean
        for j, (c, s) in enumerate(self.coeffs, start=1):
            val += c * math.cos(w * j * t) + s * math.sin(w * j * t)
        return val

    __call__ = evaluate


def _basis(times: np.ndarray, K: int, period: float) -> np.ndarray:
    """Rows [1, cos(w t), sin(w t), ..., cos(K w t), sin(K w t)]."""
    w = 2.0 * math.pi / period
    cols = [np.ones_like(times)]
    for j in range(1, K + 1):
        cols.append(np.cos(w * j * times))
        cols.append(np.sin(w * j * times))
    return np.column_stack(cols)


def _basis_derivative(times: np.ndarray, K: int, period: float) -> np.ndarray:
    w = 2.0 * math.pi / period
    cols = [np.zeros_like(times)]
    for j in range(1, K + 1):
        cols.append(-j * w * np.sin(w * j * times))
        cols.append(j * w * np.cos(w * j * times))
    return np.column_stack(cols)


class CollocationSystem:
    """Precomputed collocation operator for one (model, K) pair.

    Residual at the collocation times t_q:

        R_q = y'(t_q) - sum_k lam_k r_k(t_q)
                  exp(m_k y(t_q - tau_k(t_q)) - y(t_q)
                      - softplus(n_k y(t_q - mu_k(t_q))))
              + b(t_q)

    with y and y' evaluated exactly from the Fourier coefficients and the
    delayed arguments taken modulo the period.
    """

    def __init__(self, model: Model, K: int, offset: float = 0.0):
        if K < 1:
            raise ValueError(f"K must be >= 1, got {K}")
        self.model = model
        self.K = K
        n_pts = 4 * K + 2
        T = model.T
        self.times = np.arange(n_pts) * (T / n_pts) + offset
        self.deriv_basis = _basis_derivative(self.times, K, T)
        self.state_basis = _basis(self.times, K, T)
        self.b_vals = model.b.evaluate_many(self.times)
        self.tau_basis = []
        self.mu_basis = []
        self.r_vals = []
        for term in model.terms:
            t_tau = self.times - term.tau.evaluate_many(self.times)
            t_mu = self.times - term.mu.evaluate_many(self.times)
            self.tau_basis.append(_basis(t_tau, K, T))
            self.mu_basis.append(_basis(t_mu, K, T))
            self.r_vals.append(term.r.evaluate_many(self.times))

    def residual(self, coeffs: np.ndarray) -> np.ndarray:
        y = self.state_basis @ coeffs
        acc = self.deriv_basis @ coeffs + self.b_vals
        with np.errstate(over="ignore"):
            for term, tb, mb, r in zip(self.model.terms, self.tau_basis,
                                       self.mu_basis, self.r_vals):
                y_tau = tb @ coeffs
                y_mu = mb @ coeffs
                acc -= term.lam * r * np.exp(
                    term.m * y_tau - y - np.logaddexp(0.0, term.n * y_mu))
        return acc

    def jacobian(self, coeffs: np.ndarray, r0: np.ndarray) -> np.ndarray:
        n = len(coeffs)
        J = np.empty((len(r0), n))
        for i in range(n):
            delta = 1.4901161193847656e-08 * max(1.0, abs(coeffs[i]))
            bumped = coeffs.copy()
            bumped[i] += delta
            J[:, i] = (self.residual(bumped) - r0) / delta
        return J


def collocation_residual(model: Model, fourier: FourierSeries,
                         K: int | None = None, offset: float = 0.0) -> np.ndarray:
    """Residuals of a Fourier candidate at the 4K+2 collocation times."""
    K = fourier.K if K is None else K
    coeffs = fourier.as_vector()
    want = 2 * K + 1
    if len(coeffs) < want:
        coeffs = np.concatenate([coeffs, np.zeros(want - len(coeffs))])
    elif len(coeffs) > want:
        raise ValueError(f"candidate has {fourier.K} harmonics but K={K}")
    return CollocationSystem(model, K, offset=offset).residual(coeffs)


@dataclass(frozen=True)
class PeriodicOrbit:
    """A converged T-periodic solution in log space, with diagnostics."""

    fourier: FourierSeries
    residual_norm: float
    y_min: float
    y_max: float
    bracket: tuple[float, float] | None = None

    @property
    def mean(self) -> float:
        return self.fourier.mean

    @property
    def amplitude(self) -> float:
        return self.y_max - self.y_min

    def evaluate(self, t: float) -> float:
        return self.fourier.evaluate(t)

    def evaluate_many(self, ts) -> np.ndarray:
        return self.fourier.evaluate_many(ts)


def solve_orbit(model: Model, seed_mean: float, K: int = DEFAULT_K,
                max_iter: int = 100, damping: float = 1.0,
                residual_tolerance: float = DEFAULT_RESIDUAL_TOL,
                amplitude_tolerance: float = DEFAULT_AMPLITUDE_TOL,
                system: CollocationSystem | None = None) -> PeriodicOrbit | None:
    """Damped Newton solve seeded at the constant y = seed_mean.

    Returns None when the iteration does not reach `residual_tolerance`
    within `max_iter` steps or when the converged candidate violates the
    a priori amplitude bound (such a candidate is not a solution).
    """
    if system is None and K < 4 and any(
            fn.harmonics or fn.samples is not None
            for term in model.terms
            for fn in (term.r, term.tau, term.mu, model.b)):
        raise ValueError(
            f"K must be >= 4 for nonconstant coefficients, got {K}")
    sys_ = system if system is not None else CollocationSystem(model, K)
    coeffs = np.zeros(2 * sys_.K + 1)
    coeffs[0] = seed_mean
    res = sys_.residual(coeffs)
    norm = float(np.max(np.abs(res)))
    for _ in range(max_iter):
        if not math.isfinite(norm):
            return None
        if norm <= residual_tolerance:
            break
        J = sys_.jacobian(coeffs, res)
        step, *_ = np.linalg.lstsq(J, res, rcond=None)
        accepted = False
        d = damping
        for _ in range(12):
            cand = coeffs - d * step
            cand_res = sys_.residual(cand)
            cand_norm = float(np.max(np.abs(cand_res)))
            if math.isfinite(cand_norm) and cand_norm < norm:
                coeffs, res, norm = cand, cand_res, cand_norm
                accepted = True
                break
            d *= 0.5
        if not accepted:
            return None
    if norm > residual_tolerance:
        return None

    fourier = FourierSeries.from_vector(model.T, coeffs)
    fine = fourier.evaluate_many(np.linspace(0.0, model.T, FINE_GRID,
                                             endpoint=False))
    y_min, y_max = float(np.min(fine)), float(np.max(fine))
    if y_max - y_min > model.C + amplitude_tolerance:
        return None
    return PeriodicOrbit(fourier=fourier, residual_norm=norm,
                         y_min=y_min, y_max=y_max)


# -- chain-guided search -------------------------------------------------------

def _phi_roots_between(model: Model, lo: float, hi: float,
                       points: int = 256) -> list[float]:
    """Refined roots of phi inside (lo, hi), found by sign scan + bisection."""
    grid = np.linspace(lo, hi, points)
    vals = phi_on_grid(model, grid)
    roots = []
    for i in range(points - 1):
        if vals[i] * vals[i + 1] < 0.0:
            a, b = float(grid[i]), float(grid[i + 1])
            fa = float(vals[i])
            for _ in range(60):
                mid = 0.5 * (a + b)
                fm = phi(model, mid)
                if fm == 0.0:
                    a = b = mid
                    break
                if fa * fm < 0.0:
                    b = mid
                else:
                    a, fa = mid, fm
            roots.append(0.5 * (a + b))
    return roots


def _finite_bound(model: Model, anchor: float, direction: int,
                  expected_sign: int) -> float:
    """Finite surrogate for an unbounded chain interval end.

    Walks outward from `anchor` in `direction` (+1/-1), doubling the
    distance until phi's sign matches its structural sign at that infinity
    (so the interval between anchor and the bound brackets a sign change).
    """
    L = max(1.0, 3.0 * model.C)
    for _ in range(40):
        g = anchor + direction * L
        v = phi(model, g)
        if expected_sign != 0 and v * expected_sign > 0.0:
            return g
        L *= 2.0
    return anchor + direction * L


def find_all_orbits(model: Model, envelope: EnvelopeGrid,
                    seeds_per_bracket: int = 5, K: int = DEFAULT_K,
                    max_iter: int = 100, damping: float = 1.0,
                    residual_tolerance: float = DEFAULT_RESIDUAL_TOL,
                    amplitude_tolerance: float = DEFAULT_AMPLITUDE_TOL,
                    dedup_tol: float = DEFAULT_DEDUP_TOL,
                    margin_floor: float = 1e-9) -> list[PeriodicOrbit]:
    """Locate orbits in every alternation interval of the envelope chain.

    Each open interval between consecutive uniform-sign levels is seeded
    with `seeds_per_bracket` evenly spread constant candidates plus one
    candidate per refined root of phi inside it (orbits of a slowly
    modulated model hug those roots, which for outer intervals can sit far
    from the chain levels).  Unbounded outer intervals are first given a
    finite bound by walking out until phi's sign matches its limit sign.
    Results are deduplicated by the L-infinity distance of the log profiles
    and sorted by mean level.
    """
    chain = alternation_chain(model, envelope, margin_floor)
    predicted = max(0, len(chain) - 1)
    if predicted == 0:
        return []

    sys_ = CollocationSystem(model, K)
    tgrid = np.linspace(0.0, model.T, 512, endpoint=False)
    orbits: list[PeriodicOrbit] = []
    profiles: list[np.ndarray] = []

    intervals: list[tuple[float, float]] = []
    for left, right in zip(chain[:-1], chain[1:]):
        lo, hi = left.gamma, right.gamma
        if math.isinf(lo):
            lo = _finite_bound(model, hi, -1, left.sign)
        if math.isinf(hi):
            hi = _finite_bound(model, lo, +1, right.sign)
        intervals.append((lo, hi))

    for (lo, hi), left, right in zip(intervals, chain[:-1], chain[1:]):
        seeds = _phi_roots_between(model, lo, hi)
        seeds += [lo + (hi - lo) * (i + 1) / (seeds_per_bracket + 1)
                  for i in range(seeds_per_bracket)]
        for seed in seeds:
            orbit = solve_orbit(model, seed, K=K, max_iter=max_iter,
                                damping=damping,
                                residual_tolerance=residual_tolerance,
                                amplitude_tolerance=amplitude_tolerance,
                                system=sys_)
            if orbit is None:
                continue
            prof = orbit.evaluate_many(tgrid)
            if any(float(np.max(np.abs(prof - p))) <= dedup_tol
                   for p in profiles):
                continue
            orbits.append(orbit)
            profiles.append(prof)

    # attach the chain interval containing each orbit's log range
    bounds = [(left.gamma, right.gamma)
              for left, right in zip(chain[:-1], chain[1:])]
    tagged = []
    for orbit in orbits:
        bracket = next(((lo, hi) for lo, hi in bounds
                        if lo < orbit.y_min and orbit.y_max < hi), None)
        tagged.append(replace(orbit, bracket=bracket))
    tagged.sort(key=lambda o: o.mean)
    if len(tagged) < predicted:
        warnings.warn(
            f"found {len(tagged)} orbit(s) but the alternation chain "
            f"predicts at least {predicted}", stacklevel=2)
    return tagged


# -- validation ---------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[CheckResult, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.checks if not c.passed)


def validate_orbit(model: Model, orbit: PeriodicOrbit,
                   steps_per_period: int = 512,
                   amplitude_tolerance: float = DEFAULT_AMPLITUDE_TOL,
                   time_domain_tol: float = 1e-5) -> ValidationReport:
    """Independent checks of a found orbit.

    (i) the a priori log-amplitude bound; (ii) a time-domain cross-check:
    integrating one period (method of steps, log space) from the orbit as
    initial history must stay on the orbit; (iii) positivity of x = e^y;
    (iv) containment in the attached bracket, when present.
    """
    checks = []
    fine = orbit.evaluate_many(np.linspace(0.0, model.T, FINE_GRID,
                                           endpoint=False))
    amp = float(np.max(fine) - np.min(fine))
    checks.append(CheckResult("amplitude_bound", amp <= model.C + amplitude_tolerance,
                              amp, model.C + amplitude_tolerance))

    traj = dde.integrate(model, orbit.evaluate, (0.0, model.T),
                         steps_per_period=steps_per_period, mode="log")
    probe = np.linspace(0.0, model.T, 257)
    drift = float(np.max(np.abs(traj.sample(probe) - orbit.evaluate_many(probe))))
    checks.append(CheckResult("time_domain_agreement", drift <= time_domain_tol,
                              drift, time_domain_tol))

    finite = bool(np.all(np.isfinite(fine)))
    checks.append(CheckResult("positivity", finite, float(np.min(np.exp(fine))),
                              0.0))

    if orbit.bracket is not None:
        lo, hi = orbit.bracket
        inside = lo < orbit.y_min and orbit.y_max < hi
        checks.append(CheckResult("bracket_containment", inside, orbit.mean, 0.0))
    return ValidationReport(tuple(checks))


# -- exports --------------------------------------------------------------------

def write_orbit_csv(orbit: PeriodicOrbit, path: str | Path,
                    points: int = 256) -> None:
    ts = np.linspace(0.0, orbit.fourier.period, points, endpoint=False)
    ys = orbit.evaluate_many(ts)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "y", "x"])
        for t, y in zip(ts, ys):
            w.writerow([format(t, ".17g"), format(y, ".17g"),
                        format(math.exp(y) if y < 709.0 else math.inf, ".17g")])


def write_manifest_csv(orbits, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["orbit_id", "mean", "y_min", "y_max", "residual",
                    "amplitude", "bracket_lo", "bracket_hi"])
        for i, orbit in enumerate(orbits):
            lo, hi = orbit.bracket if orbit.bracket else (math.nan, math.nan)
            w.writerow([i, format(orbit.mean, ".17g"),
                        format(orbit.y_min, ".17g"),
                        format(orbit.y_max, ".17g"),
                        format(orbit.residual_norm, ".17g"),
                        format(orbit.amplitude, ".17g"),
                        format(lo, ".17g"), format(hi, ".17g")])
