"""Shared fixtures and model builders for the test suite."""

from __future__ import annotations

import pytest

from mgperiodic.model import Model, Term, load_model, section4_model_path
from mgperiodic.periodic import PeriodicFn


@pytest.fixture(scope="session")
def section4() -> Model:
    return load_model(section4_model_path())


def simple_model(lam=1.0, m=1.0, n=2.0, r_mean=4.0, b_mean=1.0, T=1.0,
                 tau=0.0, mu=0.0, r_harmonics=(), b_harmonics=()) -> Model:
    """Single-term model with constant (or trig) coefficients."""
    r = PeriodicFn.trig(T, r_mean, r_harmonics)
    b = PeriodicFn.trig(T, b_mean, b_harmonics)
    return Model(terms=(Term(lam=lam, m=m, n=n, r=r,
                             tau=PeriodicFn.constant(T, tau),
                             mu=PeriodicFn.constant(T, mu)),), b=b)


def multi_term_model(specs, b_mean=1.0, T=1.0, b_harmonics=()) -> Model:
    """Model from (lam, m, n, r_mean) tuples with zero delays."""
    zero = PeriodicFn.constant(T, 0.0)
    terms = tuple(
        Term(lam=lam, m=m, n=n, r=PeriodicFn.constant(T, r_mean),
             tau=zero, mu=zero)
        for lam, m, n, r_mean in specs)
    return Model(terms=terms, b=PeriodicFn.trig(T, b_mean, b_harmonics))


def zero_flux_model(m=2.0, n=1.0, b_mean=1.0, T=1.0,
                    b_harmonics=()) -> Model:
    """All production switched off (lam = 0): pure decay."""
    return multi_term_model([(0.0, m, n, 1.0)], b_mean=b_mean, T=T,
                            b_harmonics=b_harmonics)
