"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
report lines.
"""

import math
import time
import warnings

import numpy as np
import pytest

from mgperiodic import dde
from mgperiodic.analysis import (
    alpha,
    beta,
    count_predicted_solutions,
    phi,
    scan_envelopes,
    time_grid,
)
from mgperiodic.model import Model, Term
from mgperiodic.orbits import find_all_orbits, solve_orbit, validate_orbit
from mgperiodic.periodic import PeriodicFn, simpson_mean
from mgperiodic.theorems import check_multiplicity, synthesize_lambdas

SECTION4_LEVELS = (-math.inf, -5.0, -0.3, 0.2, 5.0, 34.0, math.inf)


def report(criterion: int, text: str) -> None:
    print(f"ACCEPTANCE {criterion}: PASS - {text}")


def test_criterion_1_envelope_inequalities(section4):
    start = time.perf_counter()
    times = time_grid(section4, 1000)
    slack = 1e-4
    checks = [
        (float(np.min(alpha(section4, -0.3, times))), ">", 0.09),
        (float(np.min(alpha(section4, 5.0, times))), ">", 0.10),
        (float(np.max(beta(section4, -5.0, times))), "<", -0.08),
        (float(np.max(beta(section4, 0.2, times))), "<", -0.01),
        (float(np.max(beta(section4, 34.0, times))), "<", -0.01),
    ]
    elapsed = time.perf_counter() - start
    for achieved, sense, bound in checks:
        if sense == ">":
            assert achieved > bound + slack, (achieved, bound)
        else:
            assert achieved < bound - slack, (achieved, bound)
    assert elapsed < 1.0
    report(1, f"five envelope inequalities hold with slack >= {slack:g} "
              f"({elapsed * 1e3:.0f} ms)")


def test_criterion_2_six_orbits(section4):
    start = time.perf_counter()
    env = scan_envelopes(section4, (-50.0, 50.0), 0.05, 1000)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        orbits = find_all_orbits(section4, env)
    elapsed = time.perf_counter() - start
    assert len(orbits) >= 6
    for orbit in orbits:
        assert orbit.residual_norm <= 1e-10
        assert orbit.amplitude <= 0.0055 + 1e-6
    tgrid = np.linspace(0.0, section4.T, 512, endpoint=False)
    profiles = [o.evaluate_many(tgrid) for o in orbits]
    for i in range(len(profiles)):
        for j in range(i + 1, len(profiles)):
            assert float(np.max(np.abs(profiles[i] - profiles[j]))) >= 0.05
    for lo, hi in zip(SECTION4_LEVELS[:-1], SECTION4_LEVELS[1:]):
        inside = [o for o in orbits if lo < o.y_min and o.y_max < hi]
        assert len(inside) == 1, f"interval ({lo}, {hi})"
    assert elapsed < 60.0
    report(2, f"{len(orbits)} distinct orbits, one per alternation interval "
              f"({elapsed:.1f} s)")


def _random_periodic(rng, T, mean_lo, mean_hi, ripple):
    mean = float(rng.uniform(mean_lo, mean_hi))
    budget = ripple * mean
    harmonics = [(j, float(rng.uniform(-0.5, 0.5) * budget),
                  float(rng.uniform(-0.5, 0.5) * budget)) for j in (1, 2)]
    return PeriodicFn.trig(T, mean, harmonics)


def _random_model(rng) -> Model:
    T = float(rng.uniform(0.02, 0.25))
    b = _random_periodic(rng, T, 0.5, 1.3, 0.2)
    terms = []
    for _ in range(int(rng.integers(1, 4))):
        n = float(rng.uniform(0.5, 3.0))
        cls = rng.integers(0, 5)
        if cls == 0:
            m = float(rng.uniform(0.3, 0.95))
        elif cls == 1:
            m = 1.0
        elif cls == 2:
            m = 1.0 + float(rng.uniform(0.1, 0.9)) * n
        elif cls == 3:
            m = n + 1.0
        else:
            m = n + 1.0 + float(rng.uniform(0.1, 1.0))
        lam = float(rng.uniform(0.3, 2.0))
        r = _random_periodic(rng, T, 0.4, 2.0, 0.2)
        tau_mean = float(rng.uniform(0.0, 0.8)) * T
        mu_mean = float(rng.uniform(0.0, 0.8)) * T
        terms.append(Term(
            lam=lam, m=m, n=n, r=r,
            tau=PeriodicFn.trig(T, tau_mean, [(1, 0.3 * tau_mean,
                                               0.2 * tau_mean)]),
            mu=PeriodicFn.trig(T, mu_mean, [(1, 0.0, -0.4 * mu_mean)])))
    return Model(terms=tuple(terms), b=b)


def test_criterion_3_amplitude_bound_random_models():
    rng = np.random.default_rng(20260811)
    total = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for _ in range(50):
            model = _random_model(rng)
            env = scan_envelopes(model, (-20.0, 20.0), 0.1, 200)
            orbits = find_all_orbits(model, env, seeds_per_bracket=3, K=24)
            total += len(orbits)
            grid = np.linspace(0.0, model.T, 4096, endpoint=False)
            for orbit in orbits:
                vals = orbit.evaluate_many(grid)
                amplitude = float(np.max(vals) - np.min(vals))
                assert amplitude <= model.C + 1e-6
    assert total >= 15  # the property must not hold vacuously
    report(3, f"log-amplitude bound held for all {total} orbits found "
              "across 50 random models")


def test_criterion_4_averaging_comparison(section4):
    gammas = np.linspace(-50.0, 50.0, 500)
    times = time_grid(section4, 1000)
    violations = 0
    for g in gammas:
        min_alpha = float(np.min(alpha(section4, float(g), times)))
        max_beta = float(np.max(beta(section4, float(g), times)))
        value = phi(section4, float(g))
        if min_alpha > 0.0 and not value > 0.0:
            violations += 1
        if max_beta < 0.0 and not value < 0.0:
            violations += 1
    assert violations == 0
    report(4, f"zero averaging-comparison violations on a "
              f"{len(gammas)}-point level grid")


def test_criterion_5_oracle_equivalence():
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(200):
        T = float(rng.uniform(0.1, 2.0))
        b = _random_periodic(rng, T, 0.5, 1.5, 0.3)
        terms = []
        for _ in range(int(rng.integers(1, 4))):
            terms.append(Term(
                lam=float(rng.uniform(0.2, 2.0)),
                m=float(rng.uniform(0.2, 4.0)),
                n=float(rng.uniform(0.3, 5.0)),
                r=_random_periodic(rng, T, 0.3, 2.0, 0.3),
                tau=PeriodicFn.constant(T, 0.0),
                mu=PeriodicFn.constant(T, 0.0)))
        model = Model(terms=tuple(terms), b=b)
        gamma = float(rng.uniform(-30.0, 30.0))
        # brute-force oracle: quadrature means + literal fraction sum
        total = 0.0
        for term in model.terms:
            rbar = simpson_mean(term.r, panels=10_000)
            total += term.lam * rbar * math.exp((term.m - 1.0) * gamma) \
                / (1.0 + math.exp(term.n * gamma))
        oracle = total - simpson_mean(model.b, panels=10_000)
        value = phi(model, gamma)
        assert abs(value - oracle) <= 1e-10 * max(1.0, abs(oracle))
        checked += 1
    report(5, f"closed-form phi matched the quadrature oracle on {checked} "
              "random (model, gamma) pairs")


def test_criterion_6_equilibrium_recovery():
    start = time.perf_counter()
    T = 1.0
    model = Model(terms=(Term(lam=1.0, m=1.0, n=2.0,
                              r=PeriodicFn.constant(T, 2.0),
                              tau=PeriodicFn.constant(T, 0.0),
                              mu=PeriodicFn.constant(T, 0.0)),),
                  b=PeriodicFn.constant(T, 1.0))
    means = []
    for seed in np.linspace(-3.0, 3.0, 20):
        orbit = solve_orbit(model, float(seed), residual_tolerance=1e-12)
        assert orbit is not None
        assert orbit.residual_norm <= 1e-12
        means.append(orbit.mean)
    # all twenty seeds land on the same constant solution x = 1
    assert float(np.max(np.abs(means))) <= 1e-10
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0
    report(6, f"20 seeds all recovered x == 1 with residual <= 1e-12 "
              f"({elapsed:.1f} s)")


def test_criterion_7_integrator_order():
    T = 1.0
    model = Model(terms=(Term(lam=0.0, m=1.0, n=1.0,
                              r=PeriodicFn.constant(T, 1.0),
                              tau=PeriodicFn.constant(T, 0.0),
                              mu=PeriodicFn.constant(T, 0.0)),),
                  b=PeriodicFn.constant(T, 1.0))
    errors = []
    for spp in (64, 128, 256, 512):
        traj = dde.integrate(model, 1.0, (0.0, 1.0), steps_per_period=spp,
                             mode="x")
        errors.append(abs(traj.values[-1] - math.exp(-1.0)))
    orders = [math.log2(a / b) for a, b in zip(errors, errors[1:])]
    assert min(orders) >= 3.8
    report(7, "observed RK4 order "
              + ", ".join(f"{o:.2f}" for o in orders) + " on x' = -x")


def test_criterion_8_theorem_checker(section4):
    assert section4.classification.case == "superlinear"
    mult = check_multiplicity(section4, (-5.0, -0.3, 0.2))
    assert mult.verdict
    assert mult.theorem == "3.1" and mult.case == "5"
    assert mult.predicted_solution_count == 4
    env = scan_envelopes(section4, (-50.0, 50.0), 0.05, 1000)
    assert count_predicted_solutions(section4, env) == 6
    report(8, "superlinear classification, case-5 pattern (predicted 4), "
              "full alternation chain predicts 6")


def test_criterion_9_lemma_synthesis():
    T = 1.0
    r_fns = [PeriodicFn.constant(T, 1.0), PeriodicFn.constant(T, 1.0)]
    b = PeriodicFn.constant(T, 1.0)
    lambdas, gamma2 = synthesize_lambdas(r_fns, b, [2.0, 5.0], [3.0, 2.0],
                                         gamma1=0.0, epsilon=0.25)
    zero = PeriodicFn.constant(T, 0.0)
    probe = Model(terms=(
        Term(lam=lambdas[0], m=2.0, n=3.0, r=r_fns[0], tau=zero, mu=zero),
        Term(lam=lambdas[1], m=5.0, n=2.0, r=r_fns[1], tau=zero, mu=zero)),
        b=b)
    times = time_grid(probe, 1000)
    alpha_min = float(np.min(alpha(probe, 0.0, times)))
    beta_max = float(np.max(beta(probe, gamma2, times)))
    assert alpha_min > 0.0 > beta_max
    report(9, f"synthesized weights verified: min alpha = {alpha_min:.3f}, "
              f"max beta = {beta_max:.3f} at gamma2 = {gamma2:g}")
