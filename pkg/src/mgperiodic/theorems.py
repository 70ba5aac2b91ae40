"""Mechanical hypothesis checkers for the existence and multiplicity results.

Each checker selects the applicable result from the model's classification
(superlinear / sublinear / asymptotically linear), matches sub-cases by the
structure of the index sets M1..M5, and then verifies every pointwise-in-t
inequality as a worst-case margin over a uniform time grid.  Sub-cases that
ask for "some constant gamma_1" are resolved by a grid search; an exhausted
search is reported as "no witness found", never as a disproof.

Also implements the constructive choice of the lam_k weights (and the upper
level gamma_2) that forces alpha(gamma_1, t) > 0 > beta(gamma_2, t) when the
exponent pattern allows it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from .analysis import (
    alpha,
    beta,
    exp_safe,
    gamma_grid,
    softplus,
    softplus_vec,
    time_grid,
)
from .model import (
    CASE_ASYMPTOTICALLY_LINEAR,
    CASE_SUBLINEAR,
    CASE_SUPERLINEAR,
    Model,
    PeriodicFn,
    Term,
)

__all__ = [
    "Hypothesis",
    "CaseReport",
    "TheoremReport",
    "check_existence",
    "check_multiplicity",
    "synthesize_lambdas",
    "SynthesisResult",
    "write_report",
]

DEFAULT_GAMMA_RANGE = (-50.0, 50.0)
DEFAULT_GAMMA_STEP = 0.01
DEFAULT_T_POINTS = 1000
DEFAULT_MARGIN_FLOOR = 1e-9


@dataclass(frozen=True)
class Hypothesis:
    description: str
    required: str
    margin: float
    satisfied: bool
    witness_gamma: float | None = None
    note: str = ""


@dataclass(frozen=True)
class CaseReport:
    number: str
    pattern: str
    pattern_ok: bool
    hypotheses: tuple[Hypothesis, ...]
    predicted: int

    @property
    def satisfied(self) -> bool:
        return self.pattern_ok and all(h.satisfied for h in self.hypotheses)


@dataclass(frozen=True)
class TheoremReport:
    theorem: str
    gammas: tuple[float, ...]
    cases: tuple[CaseReport, ...]
    margin_floor: float
    selected: CaseReport | None = field(default=None)

    @property
    def verdict(self) -> bool:
        return self.selected is not None

    @property
    def case(self) -> str | None:
        return self.selected.number if self.selected else None

    @property
    def hypotheses(self) -> tuple[Hypothesis, ...]:
        return self.selected.hypotheses if self.selected else ()

    @property
    def predicted_solution_count(self) -> int:
        return self.selected.predicted if self.selected else 0

    def to_text(self) -> str:
        lines = [
            f"theorem: {self.theorem}",
            f"verdict: {'satisfied' if self.verdict else 'violated'}",
            f"case: {self.case if self.case is not None else '-'}",
            f"predicted_solutions: {self.predicted_solution_count}",
            f"gammas: {', '.join(format(g, 'g') for g in self.gammas) or '-'}",
            f"margin_floor: {self.margin_floor:g}",
        ]
        for case in self.cases:
            header = "satisfied" if case.satisfied else (
                "pattern mismatch" if not case.pattern_ok else "not satisfied")
            lines.append(f"case {case.number} [{header}] "
                         f"pattern: {case.pattern} | predicted: {case.predicted}")
            for h in case.hypotheses:
                parts = [f"  hypothesis: {h.description}",
                         f"required: {h.required}",
                         f"margin: {h.margin:.6g}",
                         "satisfied" if h.satisfied else "not satisfied"]
                if h.witness_gamma is not None:
                    parts.append(f"gamma1: {h.witness_gamma:g}")
                if h.note:
                    parts.append(h.note)
                lines.append(" | ".join(parts))
        return "\n".join(lines) + "\n"


def write_report(report: TheoremReport, path: str | Path) -> None:
    Path(path).write_text(report.to_text())


# -- shared machinery ---------------------------------------------------------

def _term_rows(model: Model, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r_rows = np.stack([t.r.evaluate_many(times) for t in model.terms])
    b_row = model.b.evaluate_many(times)
    return r_rows, b_row


def _set_sum(model: Model, ks, gains: dict[int, float],
             r_rows: np.ndarray) -> np.ndarray:
    """sum over k in ks of gains[k] * r_k(t), as a row over the time grid."""
    acc = np.zeros(r_rows.shape[1])
    for k in ks:
        acc += gains[k] * r_rows[k - 1]
    return acc


def _grid_hypothesis(description: str, lhs: np.ndarray, b_row: np.ndarray,
                     sense: str, floor: float) -> Hypothesis:
    """Pointwise comparison of a term sum against b(t), as worst-case margin."""
    if sense == "<":
        margin = float(np.min(b_row - lhs))
    else:
        margin = float(np.min(lhs - b_row))
    return Hypothesis(description, f"{sense} b(t) for all t", margin,
                      margin >= floor)


def _envelope_hypothesis(model: Model, kind: str, gamma: float,
                         times: np.ndarray, floor: float) -> Hypothesis:
    if kind == "alpha":
        margin = float(np.min(alpha(model, gamma, times)))
        return Hypothesis(f"alpha({gamma:g}, t) > 0 for all t", "> 0",
                          margin, margin >= floor)
    margin = -float(np.max(beta(model, gamma, times)))
    return Hypothesis(f"beta({gamma:g}, t) < 0 for all t", "< 0",
                      margin, margin >= floor)


def _witness_search(model: Model, times: np.ndarray,
                    gain_of: Callable[[Term, np.ndarray], np.ndarray],
                    sense: str, gamma_range: tuple[float, float],
                    gamma_step: float) -> tuple[float, float]:
    """Best (gamma, margin) of a 'for some gamma_1' hypothesis over a grid."""
    r_rows, b_row = _term_rows(model, times)
    gammas = gamma_grid(gamma_range, gamma_step)
    best_gamma, best_margin = math.nan, -math.inf
    chunk = 2048
    for start in range(0, len(gammas), chunk):
        g = gammas[start:start + chunk]
        gains = np.stack([gain_of(term, g) for term in model.terms], axis=1)
        S = gains @ r_rows
        if sense == "<":
            margins = np.min(b_row - S, axis=1)
        else:
            margins = np.min(S - b_row, axis=1)
        i = int(np.argmax(margins))
        if margins[i] > best_margin:
            best_gamma, best_margin = float(g[i]), float(margins[i])
    return best_gamma, best_margin


def _witness_hypothesis(model: Model, description: str, times, gain_of, sense,
                        gamma_range, gamma_step, floor) -> Hypothesis:
    g, margin = _witness_search(model, times, gain_of, sense,
                                gamma_range, gamma_step)
    ok = margin >= floor
    note = "" if ok else (
        f"no witness found in range [{gamma_range[0]:g}, {gamma_range[1]:g}]"
        " (hypothesis not disproved)")
    return Hypothesis(description, f"{sense} b(t) for all t, some gamma1",
                      margin, ok, witness_gamma=g if ok else None, note=note)


# -- existence ----------------------------------------------------------------

def check_existence(model: Model,
                    gamma_range: tuple[float, float] = DEFAULT_GAMMA_RANGE,
                    gamma_step: float = DEFAULT_GAMMA_STEP,
                    t_points: int = DEFAULT_T_POINTS,
                    margin_floor: float = DEFAULT_MARGIN_FLOOR) -> TheoremReport:
    """Check the one-solution existence result matching the model's case."""
    cls = model.classification
    times = time_grid(model, t_points)
    r_rows, b_row = _term_rows(model, times)
    C = model.C
    m_all = [t.m for t in model.terms]
    floor = margin_floor

    all_gt1 = not (cls.M1 or cls.M2)
    all_ge1 = not cls.M1

    cases: list[CaseReport] = []

    if cls.case == CASE_SUPERLINEAR:
        theorem = "2.2"
        cases.append(CaseReport(
            "1", "m_k > 1 for all k", all_gt1, (), 1))
        gains_e_c = {k: model.terms[k - 1].lam * math.exp(C) for k in cls.M2}
        cases.append(CaseReport(
            "2", "m_k >= 1 for all k, m_i = 1 for some i",
            all_ge1 and bool(cls.M2),
            (_grid_hypothesis("sum_{k in M2} lam_k r_k(t) e^C",
                              _set_sum(model, cls.M2, gains_e_c, r_rows),
                              b_row, "<", floor),),
            1))

        def gain22(term: Term, g: np.ndarray) -> np.ndarray:
            with np.errstate(over="ignore"):
                return term.lam * np.exp((term.m - 1.0) * g + C * term.m
                                         - softplus_vec(term.n * g))

        cases.append(CaseReport(
            "3", "m_i < 1 for some i", bool(cls.M1),
            (_witness_hypothesis(
                model,
                "sum_k lam_k r_k(t) e^((m_k-1)g1) e^(m_k C) / (1+e^(n_k g1))",
                times, gain22, "<", gamma_range, gamma_step, floor),),
            1))

    elif cls.case == CASE_SUBLINEAR:
        theorem = "2.3"
        cases.append(CaseReport("1", "m_i < 1 for some i", bool(cls.M1), (), 1))
        gains_plain = {k: model.terms[k - 1].lam for k in cls.M2}
        cases.append(CaseReport(
            "2", "m_k >= 1 for all k, m_i = 1 for some i",
            all_ge1 and bool(cls.M2),
            (_grid_hypothesis("sum_{k in M2} lam_k r_k(t)",
                              _set_sum(model, cls.M2, gains_plain, r_rows),
                              b_row, ">", floor),),
            1))

        def gain23(term: Term, g: np.ndarray) -> np.ndarray:
            with np.errstate(over="ignore"):
                return term.lam * np.exp((term.m - 1.0) * g
                                         - softplus_vec(term.n * (g + C)))

        cases.append(CaseReport(
            "3", "m_k > 1 for all k", all_gt1,
            (_witness_hypothesis(
                model,
                "sum_k lam_k r_k(t) e^((m_k-1)g1) / (1+e^(n_k(g1+C)))",
                times, gain23, ">", gamma_range, gamma_step, floor),),
            1))

    else:
        theorem = "2.4"
        gains_decay = {k: model.terms[k - 1].lam
                       * math.exp(-C * model.terms[k - 1].m) for k in cls.M4}
        gains_grow = {k: model.terms[k - 1].lam
                      * math.exp(C * model.terms[k - 1].n) for k in cls.M4}
        gains_e_c = {k: model.terms[k - 1].lam * math.exp(C) for k in cls.M2}
        gains_plain = {k: model.terms[k - 1].lam for k in cls.M2}
        h_m4_decay = _grid_hypothesis(
            "sum_{k in M4} lam_k r_k(t) e^(-C m_k)",
            _set_sum(model, cls.M4, gains_decay, r_rows), b_row, ">", floor)
        h_m4_grow = _grid_hypothesis(
            "sum_{k in M4} lam_k r_k(t) e^(C n_k)",
            _set_sum(model, cls.M4, gains_grow, r_rows), b_row, "<", floor)
        cases.append(CaseReport("1", "m_k > 1 for all k", all_gt1,
                                (h_m4_decay,), 1))
        cases.append(CaseReport(
            "2", "m_k >= 1 for all k, m_i = 1 for some i",
            all_ge1 and bool(cls.M2),
            (h_m4_decay,
             _grid_hypothesis("sum_{k in M2} lam_k r_k(t) e^C",
                              _set_sum(model, cls.M2, gains_e_c, r_rows),
                              b_row, "<", floor)),
            1))
        cases.append(CaseReport("3", "0 < m_i < 1 for some i", bool(cls.M1),
                                (h_m4_grow,), 1))
        cases.append(CaseReport(
            "2'", "m_k >= 1 for all k, m_i = 1 for some i",
            all_ge1 and bool(cls.M2),
            (h_m4_grow,
             _grid_hypothesis("sum_{k in M2} lam_k r_k(t)",
                              _set_sum(model, cls.M2, gains_plain, r_rows),
                              b_row, ">", floor)),
            1))

    matched = [c for c in cases if c.pattern_ok]
    selected = next((c for c in matched if c.satisfied), None)
    return TheoremReport(theorem=theorem, gammas=(), cases=tuple(matched),
                         margin_floor=floor, selected=selected)


# -- multiplicity --------------------------------------------------------------

@dataclass(frozen=True)
class _CaseRule:
    number: str
    pattern: str
    pattern_ok: bool
    extra: tuple[tuple[str, str], ...]     # (description, sense) grid sums
    envelopes: tuple[str, ...]             # alpha/beta kinds at supplied gammas
    predicted: int


def check_multiplicity(model: Model, gammas,
                       t_points: int = DEFAULT_T_POINTS,
                       margin_floor: float = DEFAULT_MARGIN_FLOOR) -> TheoremReport:
    """Check the multiplicity result matching the model's case.

    `gammas` supplies the constants for the matched sub-case's envelope
    hypotheses, lowest first; it must be strictly increasing and exactly as
    long as the sub-case's arity.
    """
    gammas = tuple(float(g) for g in gammas)
    if not gammas:
        raise ValueError("at least one gamma constant is required")
    if any(b <= a for a, b in zip(gammas, gammas[1:])):
        raise ValueError(f"gammas must be strictly increasing, got {gammas}")

    cls = model.classification
    times = time_grid(model, t_points)
    r_rows, b_row = _term_rows(model, times)
    C = model.C
    floor = margin_floor

    no_m1, no_m2, no_m3 = not cls.M1, not cls.M2, not cls.M3
    sums = {
        "M2_plain": ("sum_{k in M2} lam_k r_k(t)",
                     {k: model.terms[k - 1].lam for k in cls.M2}, cls.M2),
        "M2_eC": ("sum_{k in M2} lam_k r_k(t) e^C",
                  {k: model.terms[k - 1].lam * math.exp(C) for k in cls.M2},
                  cls.M2),
        "M4_decay": ("sum_{k in M4} lam_k r_k(t) e^(-C m_k)",
                     {k: model.terms[k - 1].lam
                      * math.exp(-C * model.terms[k - 1].m) for k in cls.M4},
                     cls.M4),
        "M4_grow": ("sum_{k in M4} lam_k r_k(t) e^(C n_k)",
                    {k: model.terms[k - 1].lam
                     * math.exp(C * model.terms[k - 1].n) for k in cls.M4},
                    cls.M4),
    }

    if cls.case == CASE_SUPERLINEAR:
        theorem = "3.1"
        rules = [
            _CaseRule("1", "m_k > 1 for all k, 1 < m_i < n_i+1 for some i",
                      no_m1 and no_m2 and bool(cls.M3),
                      (), ("alpha", "beta"), 3),
            _CaseRule("2", "m_k >= 1 for all k, m_i = 1 for some i, "
                           "m_k not in (1, n_k+1) for all k",
                      no_m1 and bool(cls.M2) and no_m3,
                      (("M2_plain", ">"),), ("beta",), 2),
            _CaseRule("3", "m_k >= 1 for all k, m_i = 1 for some i, "
                           "1 < m_s < n_s+1 for some s",
                      no_m1 and bool(cls.M2) and bool(cls.M3),
                      (("M2_eC", "<"),), ("alpha", "beta"), 3),
            _CaseRule("4", "m_i < 1 for some i, m_k not in (1, n_k+1) for all k",
                      bool(cls.M1) and no_m3,
                      (), ("beta",), 2),
            _CaseRule("5", "m_i < 1 for some i, 1 < m_s < n_s+1 for some s",
                      bool(cls.M1) and bool(cls.M3),
                      (), ("beta", "alpha", "beta"), 4),
        ]
    elif cls.case == CASE_SUBLINEAR:
        theorem = "3.2"
        rules = [
            _CaseRule("1", "m_k > 1 for all k", no_m1 and no_m2,
                      (), ("alpha",), 2),
            _CaseRule("2", "m_k >= 1 for all k, m_i = 1 and m_j > 1 for some i, j",
                      no_m1 and bool(cls.M2) and bool(cls.M3),
                      (("M2_eC", "<"),), ("alpha",), 2),
            _CaseRule("3", "0 < m_i < 1 and m_j > 1 for some i, j",
                      bool(cls.M1) and bool(cls.M3),
                      (), ("beta", "alpha"), 3),
        ]
    else:
        theorem = "3.3"
        rules = [
            _CaseRule("1", "m_k > 1 for all k, 1 < m_i < n_i+1 for some i",
                      no_m1 and no_m2 and bool(cls.M3),
                      (("M4_grow", "<"),), ("alpha",), 2),
            _CaseRule("2", "0 < m_i < 1 for some i, m_k not in (1, n_k+1) for all k",
                      bool(cls.M1) and no_m3,
                      (("M4_decay", ">"),), ("beta",), 2),
            _CaseRule("3", "0 < m_i < 1 and 1 < m_s < n_s+1 for some i, s",
                      bool(cls.M1) and bool(cls.M3),
                      (("M4_grow", "<"),), ("beta", "alpha"), 3),
        ]

    cases = []
    for rule in rules:
        if not rule.pattern_ok:
            continue
        hyps: list[Hypothesis] = []
        for key, sense in rule.extra:
            desc, gains, ks = sums[key]
            hyps.append(_grid_hypothesis(desc, _set_sum(model, ks, gains, r_rows),
                                         b_row, sense, floor))
        if len(gammas) != len(rule.envelopes):
            hyps.append(Hypothesis(
                f"case needs {len(rule.envelopes)} gamma constant(s)",
                f"got {len(gammas)}", -math.inf, False,
                note="supply one gamma per envelope hypothesis, increasing"))
        else:
            for g, kind in zip(gammas, rule.envelopes):
                hyps.append(_envelope_hypothesis(model, kind, g, times, floor))
        cases.append(CaseReport(rule.number, rule.pattern, True,
                                tuple(hyps), rule.predicted))

    satisfied = [c for c in cases if c.satisfied]
    selected = max(satisfied, key=lambda c: c.predicted) if satisfied else None
    return TheoremReport(theorem=theorem, gammas=gammas, cases=tuple(cases),
                         margin_floor=floor, selected=selected)


# -- constructive weights -------------------------------------------------------

class SynthesisResult(NamedTuple):
    lambdas: tuple[float, ...]
    gamma2: float


def synthesize_lambdas(r_fns, b: PeriodicFn, m_values, n_values,
                       gamma1: float, epsilon: float,
                       t_points: int = DEFAULT_T_POINTS,
                       headroom: float = 0.1) -> SynthesisResult:
    """Choose weights making alpha(gamma1, t) > 0 > beta(gamma2, t).

    Requires the constructive pattern: every m_k > 1, some m_k in
    (1, n_k+1), and some m_k > n_k+1.  Follows the three-step construction:
    scale the moderate-exponent weights up until the alpha partial sum
    clears b(t); push gamma2 past the point where that block's beta partial
    sum falls below epsilon; scale the steep-exponent weights down until
    their beta contribution stays below min(b) - 2*epsilon.
    """
    r_fns = list(r_fns)
    m_values = [float(m) for m in m_values]
    n_values = [float(n) for n in n_values]
    if not (len(r_fns) == len(m_values) == len(n_values)) or not r_fns:
        raise ValueError("r, m, n must be equal-length nonempty lists")

    M3 = [i for i, (m, n) in enumerate(zip(m_values, n_values)) if 1.0 < m < n + 1.0]
    M45 = [i for i, (m, n) in enumerate(zip(m_values, n_values)) if m >= n + 1.0]
    M5 = [i for i, (m, n) in enumerate(zip(m_values, n_values)) if m > n + 1.0]
    if any(m <= 1.0 for m in m_values) or not M3 or not M5:
        raise ValueError(
            "pattern mismatch: need m_k > 1 for all k, some m_k in (1, n_k+1) "
            "and some m_k > n_k+1")

    b_min = b.minimum()
    if not 0.0 < epsilon < b_min:
        raise ValueError(f"epsilon must lie in (0, b_min={b_min:g}), got {epsilon}")
    if b_min - 2.0 * epsilon <= 0.0:
        # the construction needs a positive budget below b after two epsilons
        raise ValueError(
            f"epsilon too large: need b_min - 2*epsilon > 0 (b_min={b_min:g})")

    T = b.period
    C = T * b.mean()
    times = np.linspace(0.0, T, t_points, endpoint=False)
    b_row = b.evaluate_many(times)

    # step 1: lam on the moderate block, large enough at gamma1
    unit = np.zeros_like(times)
    for i in M3:
        gain = exp_safe((m_values[i] - 1.0) * gamma1 - C * m_values[i]
                        - softplus(n_values[i] * (gamma1 + C)))
        unit += gain * r_fns[i].evaluate_many(times)
    scale_up = float(np.max(b_row / unit)) * (1.0 + headroom)

    lambdas = [0.0] * len(r_fns)
    for i in M3:
        lambdas[i] = scale_up

    # step 2: gamma2 beyond the level where the moderate block's beta bound
    # (with r at its maximum) has dropped below epsilon for good
    r_max = [fn.maximum() for fn in r_fns]

    def beta3_bound(g: float) -> float:
        total = 0.0
        for i in M3:
            total += lambdas[i] * r_max[i] * exp_safe(
                (m_values[i] - 1.0) * g + C * m_values[i]
                - softplus(n_values[i] * (g - C)))
        return total

    peak = max(C + math.log((m_values[i] - 1.0) / (n_values[i] + 1.0 - m_values[i]))
               / n_values[i] for i in M3)
    g = max(gamma1, peak) + 0.5
    for _ in range(200000):
        if beta3_bound(g) < epsilon:
            break
        g += 0.5
    else:
        raise RuntimeError("could not push the moderate block below epsilon")
    gamma2 = g + 0.5

    # step 3: lam on the steep block, small enough at gamma2
    steep = 0.0
    for i in M45:
        steep += r_max[i] * exp_safe(
            (m_values[i] - 1.0) * gamma2 + C * m_values[i]
            - softplus(n_values[i] * (gamma2 - C)))
    scale_down = (b_min - 2.0 * epsilon) / steep * (1.0 - headroom)
    for i in M45:
        lambdas[i] = scale_down

    # post-verify the lemma's conclusion by direct evaluation
    zero = PeriodicFn.constant(T, 0.0)
    probe = Model(terms=tuple(
        Term(lam=lambdas[i], m=m_values[i], n=n_values[i],
             r=r_fns[i], tau=zero, mu=zero)
        for i in range(len(r_fns))), b=b)
    alpha_margin = float(np.min(alpha(probe, gamma1, times)))
    beta_margin = -float(np.max(beta(probe, gamma2, times)))
    if alpha_margin <= 0.0 or beta_margin <= 0.0:
        raise RuntimeError(
            f"synthesis post-verification failed: min alpha(gamma1)={alpha_margin:g}, "
            f"max beta(gamma2)={-beta_margin:g}")
    return SynthesisResult(tuple(lambdas), gamma2)
