"""Balance-function analysis: phi, the alpha/beta envelopes, and scans.

The averaged balance function

    phi(g) = sum_k lam_k * rbar_k * e^((m_k-1) g) / (1 + e^(n_k g)) - bbar

changes sign wherever periodic solutions are bracketed.  The pointwise
envelopes alpha(g, t) and beta(g, t) sharpen this: a uniform sign of one
of them at a level g prevents solutions from touching that level, which
is what turns sign changes of phi into solution counts.

Every exponential ratio is evaluated as exp(p - softplus(q)), so values
stay finite far beyond the range where the naive formula overflows.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .model import Model

__all__ = [
    "phi",
    "phi_on_grid",
    "phi_component",
    "phi_limit_sign",
    "alpha",
    "beta",
    "EnvelopeGrid",
    "scan_envelopes",
    "find_phi_brackets",
    "alternation_chain",
    "count_predicted_solutions",
]

_EXP_MAX = 709.0  # math.exp overflows just above this


def softplus(x: float) -> float:
    """log(1 + e^x) with the standard large-|x| branches."""
    if x > 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def softplus_vec(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def exp_safe(x: float) -> float:
    return math.exp(x) if x < _EXP_MAX else math.inf


# -- phi ---------------------------------------------------------------------

def phi(model: Model, gamma: float) -> float:
    """Averaged balance function at level gamma."""
    total = 0.0
    for term, rbar in zip(model.terms, model.r_means):
        total += term.lam * rbar * exp_safe(
            (term.m - 1.0) * gamma - softplus(term.n * gamma))
    return total - model.b_mean


def phi_on_grid(model: Model, gammas: np.ndarray) -> np.ndarray:
    """Vectorized phi over an array of gamma values."""
    g = np.asarray(gammas, dtype=float)
    total = np.zeros_like(g)
    with np.errstate(over="ignore"):
        for term, rbar in zip(model.terms, model.r_means):
            total += term.lam * rbar * np.exp(
                (term.m - 1.0) * g - softplus_vec(term.n * g))
    return total - model.b_mean


def phi_component(model: Model, class_index: int, gamma: float) -> float:
    """Partial sum of phi over the terms in the set M_{class_index}.

    The decay mean is NOT subtracted here, so
    ``phi(g) == sum_i phi_component(model, i, g) - mean(b)``.
    """
    if class_index not in (1, 2, 3, 4, 5):
        raise ValueError(f"class index must be 1..5, got {class_index}")
    members = model.classification.set_for(class_index)
    total = 0.0
    for k in members:
        term = model.terms[k - 1]
        total += term.lam * model.r_means[k - 1] * exp_safe(
            (term.m - 1.0) * gamma - softplus(term.n * gamma))
    return total


def phi_limit_sign(model: Model, direction: int) -> int:
    """Sign of phi at -inf (direction=-1) or +inf (direction=+1).

    Determined structurally from the classification so no saturated
    exponentials are sampled: as g -> -inf the M1 part diverges to +inf and
    the M2 part tends to its mean sum; as g -> +inf the M5 part diverges and
    the M4 part tends to its mean sum.  Returns -1, 0 or +1 (0 when the
    finite limit is exactly the decay mean).
    """
    cls = model.classification
    diverging = cls.M1 if direction < 0 else cls.M5
    finite = cls.M2 if direction < 0 else cls.M4
    if any(model.terms[k - 1].lam > 0.0 for k in diverging):
        return 1
    limit = sum(model.terms[k - 1].lam * model.r_means[k - 1] for k in finite)
    value = limit - model.b_mean
    return (value > 0) - (value < 0)


# -- alpha / beta envelopes ----------------------------------------------------
#
# Both envelopes factor as  sum_k gain_k(g) * r_k(t) - b(t), with the whole
# gamma dependence inside the scalar gains.  Scans therefore evaluate a
# (gammas x terms) gain matrix once and finish with a matrix product.

def _alpha_gain(model: Model, term, gamma) -> float | np.ndarray:
    C = model.C
    arg = (term.m - 1.0) * gamma - C * term.m
    if np.isscalar(gamma):
        return term.lam * exp_safe(arg - softplus(term.n * (gamma + C)))
    with np.errstate(over="ignore"):
        return term.lam * np.exp(arg - softplus_vec(term.n * (np.asarray(gamma) + C)))


def _beta_gain(model: Model, term, gamma) -> float | np.ndarray:
    C = model.C
    arg = (term.m - 1.0) * gamma + C * term.m
    if np.isscalar(gamma):
        return term.lam * exp_safe(arg - softplus(term.n * (gamma - C)))
    with np.errstate(over="ignore"):
        return term.lam * np.exp(arg - softplus_vec(term.n * (np.asarray(gamma) - C)))


def alpha(model: Model, gamma: float, t) -> float | np.ndarray:
    """Lower envelope alpha(gamma, t); `t` may be a scalar or an array."""
    scalar = np.isscalar(t)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    acc = -model.b.evaluate_many(ts)
    for term in model.terms:
        acc += _alpha_gain(model, term, gamma) * term.r.evaluate_many(ts)
    return float(acc[0]) if scalar else acc


def beta(model: Model, gamma: float, t) -> float | np.ndarray:
    """Upper envelope beta(gamma, t); `t` may be a scalar or an array."""
    scalar = np.isscalar(t)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    acc = -model.b.evaluate_many(ts)
    for term in model.terms:
        acc += _beta_gain(model, term, gamma) * term.r.evaluate_many(ts)
    return float(acc[0]) if scalar else acc


def time_grid(model: Model, t_points: int) -> np.ndarray:
    return np.linspace(0.0, model.T, t_points, endpoint=False)


@dataclass(frozen=True)
class EnvelopeGrid:
    """alpha/beta/phi sampled over a rectangular (gamma, t) grid."""

    gammas: np.ndarray
    times: np.ndarray
    alpha_values: np.ndarray  # shape (len(gammas), len(times))
    beta_values: np.ndarray
    phi_values: np.ndarray

    @cached_property
    def min_alpha(self) -> np.ndarray:
        return self.alpha_values.min(axis=1)

    @cached_property
    def max_beta(self) -> np.ndarray:
        return self.beta_values.max(axis=1)

    def write_csv(self, grid_path: str | Path, summary_path: str | Path) -> None:
        with open(grid_path, "w", newline="") as fh:
            fh.write("gamma,t,alpha,beta\n")
            t_strs = [_fmt(t) for t in self.times]
            for i, g in enumerate(self.gammas):
                gs = _fmt(g)
                alphas = self.alpha_values[i]
                betas = self.beta_values[i]
                fh.writelines(
                    f"{gs},{t_strs[j]},{alphas[j]:.17g},{betas[j]:.17g}\n"
                    for j in range(len(t_strs)))
        with open(summary_path, "w", newline="") as fh:
            fh.write("gamma,phi,min_alpha,max_beta\n")
            for i, g in enumerate(self.gammas):
                fh.write(f"{_fmt(g)},{_fmt(self.phi_values[i])},"
                         f"{_fmt(self.min_alpha[i])},{_fmt(self.max_beta[i])}\n")


def _fmt(x: float) -> str:
    return format(x, ".17g")


def gamma_grid(gamma_range: tuple[float, float], gamma_step: float) -> np.ndarray:
    lo, hi = gamma_range
    if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
        raise ValueError(f"empty or non-finite gamma range: {gamma_range}")
    if not gamma_step > 0.0:
        raise ValueError(f"gamma step must be positive, got {gamma_step}")
    n = int(math.floor((hi - lo) / gamma_step + 1e-9)) + 1
    grid = lo + gamma_step * np.arange(n)
    if grid[-1] < hi - 1e-12 * max(1.0, abs(hi)):
        grid = np.append(grid, hi)
    return grid


def scan_envelopes(model: Model, gamma_range: tuple[float, float],
                   gamma_step: float, t_points: int = 1000) -> EnvelopeGrid:
    """Fill an :class:`EnvelopeGrid` over the requested rectangle."""
    if t_points < 2:
        raise ValueError(f"t_points must be >= 2, got {t_points}")
    gammas = gamma_grid(gamma_range, gamma_step)
    times = time_grid(model, t_points)
    r_rows = np.stack([term.r.evaluate_many(times) for term in model.terms])
    b_row = model.b.evaluate_many(times)
    gain_a = np.stack([_alpha_gain(model, term, gammas) for term in model.terms], axis=1)
    gain_b = np.stack([_beta_gain(model, term, gammas) for term in model.terms], axis=1)
    return EnvelopeGrid(
        gammas=gammas,
        times=times,
        alpha_values=gain_a @ r_rows - b_row,
        beta_values=gain_b @ r_rows - b_row,
        phi_values=phi_on_grid(model, gammas),
    )


# -- sign-change brackets ------------------------------------------------------

def find_phi_brackets(model: Model, gamma_range: tuple[float, float],
                      gamma_step: float, width: float = 1e-6,
                      fine_factor: int = 10) -> list[tuple[float, float]]:
    """Disjoint sign-change brackets of phi, each bisected to `width`.

    Every coarse grid cell is re-scanned on a `fine_factor` times finer
    grid; cells hiding more than one crossing trigger a warning (a single
    grid step cannot certify an odd/even crossing count).
    """
    gammas = gamma_grid(gamma_range, gamma_step)
    values = phi_on_grid(model, gammas)
    brackets: list[tuple[float, float]] = []
    for i in range(len(gammas) - 1):
        lo, hi = gammas[i], gammas[i + 1]
        sub = np.linspace(lo, hi, fine_factor + 1)
        vals = phi_on_grid(model, sub)
        vals[0], vals[-1] = values[i], values[i + 1]
        cell = [(sub[j], sub[j + 1]) for j in range(fine_factor)
                if vals[j] * vals[j + 1] < 0.0]
        coarse_change = values[i] * values[i + 1] < 0.0
        if len(cell) > 1 or (cell and not coarse_change) or (not cell and coarse_change):
            warnings.warn(
                f"phi changes sign {len(cell)} time(s) inside one gamma step "
                f"[{lo:g}, {hi:g}]; decrease gamma_step to isolate roots",
                stacklevel=2)
        for a, b_ in cell:
            brackets.append(_bisect_bracket(model, a, b_, width))
    return brackets


def _bisect_bracket(model: Model, lo: float, hi: float,
                    width: float) -> tuple[float, float]:
    flo = phi(model, lo)
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        fmid = phi(model, mid)
        if fmid == 0.0:
            half = 0.25 * width
            return (mid - half, mid + half)
        if flo * fmid < 0.0:
            hi = mid
        else:
            lo, flo = mid, fmid
    return (lo, hi)


# -- alternation chain and predicted counts -----------------------------------

@dataclass(frozen=True)
class ChainPoint:
    gamma: float            # -inf/+inf endpoints use math.inf
    sign: int               # +1: min_t alpha > 0 (phi > 0); -1: max_t beta < 0
    margin: float


def alternation_chain(model: Model, envelope: EnvelopeGrid,
                      margin_floor: float = 1e-9) -> list[ChainPoint]:
    """Maximal alternating chain of uniform-sign levels, with endpoints.

    Consecutive runs of grid levels sharing a label (+ for min alpha > 0,
    - for max beta < 0) are collapsed to their best-margin representative;
    the structural signs of phi at -inf/+inf are attached when they extend
    the alternation.
    """
    labels = np.zeros(len(envelope.gammas), dtype=int)
    labels[envelope.min_alpha > margin_floor] = 1
    labels[envelope.max_beta < -margin_floor] = -1

    runs: list[ChainPoint] = []
    i = 0
    while i < len(labels):
        if labels[i] == 0:
            i += 1
            continue
        j = i
        while j + 1 < len(labels) and labels[j + 1] == labels[i]:
            j += 1
        block = slice(i, j + 1)
        if labels[i] > 0:
            rel = int(np.argmax(envelope.min_alpha[block]))
            margin = float(envelope.min_alpha[block][rel])
        else:
            rel = int(np.argmin(envelope.max_beta[block]))
            margin = -float(envelope.max_beta[block][rel])
        runs.append(ChainPoint(float(envelope.gammas[i + rel]), int(labels[i]), margin))
        i = j + 1

    chain = [p for idx, p in enumerate(runs)
             if idx == 0 or p.sign != runs[idx - 1].sign]
    left = phi_limit_sign(model, -1)
    right = phi_limit_sign(model, +1)
    if left != 0 and (not chain or chain[0].sign != left):
        chain.insert(0, ChainPoint(-math.inf, left, math.inf))
    if right != 0 and (not chain or chain[-1].sign != right):
        chain.append(ChainPoint(math.inf, right, math.inf))
    return chain


def count_predicted_solutions(model: Model, envelope: EnvelopeGrid,
                              margin_floor: float = 1e-9) -> int:
    """Lower bound on the number of positive T-periodic solutions."""
    chain = alternation_chain(model, envelope, margin_floor)
    return max(0, len(chain) - 1)
