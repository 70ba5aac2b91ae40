"""Method-of-steps integrator: accuracy, invariants, and backend parity."""

import math

import numpy as np
import pytest

from conftest import simple_model, zero_flux_model
from mgperiodic import dde
from mgperiodic._backend import available_backends
from mgperiodic.model import Model, Term
from mgperiodic.periodic import PeriodicFn


class TestRhs:
    def test_zero_flux(self):
        model = zero_flux_model()
        assert dde.rhs(model, 0.3, 2.0, [(1.0, 1.0)]) == -2.0

    def test_equilibrium_balance(self):
        model = simple_model(m=1.0, n=2.0, r_mean=2.0, b_mean=1.0)
        assert dde.rhs(model, 0.0, 1.0, [(1.0, 1.0)]) == pytest.approx(0.0, abs=1e-15)

    def test_section4_hand_expansion(self, section4):
        # independent arithmetic: all states 1, t = 0, r_k(0) = mean + cos coeff
        got = dde.rhs(section4, 0.0, 1.0, [(1.0, 1.0)] * 4)
        want = (0.042 / 2.0 + 1.302 / 2.0 + 0.902 / 2.0 + 0.062 / 2.0) - 1.12
        assert got == pytest.approx(want, abs=1e-12)

    def test_domain_error(self, section4):
        with pytest.raises(ValueError):
            dde.rhs(section4, 0.0, -1.0, [(1.0, 1.0)] * 4)
        with pytest.raises(ValueError):
            dde.rhs(section4, 0.0, 1.0, [(0.0, 1.0)] * 4)

    def test_log_space_matches_x_space(self, section4):
        x_pairs = [(0.8, 1.2)] * 4
        y_pairs = [(math.log(a), math.log(b)) for a, b in x_pairs]
        fx = dde.rhs(section4, 0.001, 0.9, x_pairs)
        fy = dde.rhs_log(section4, 0.001, math.log(0.9), y_pairs)
        # x' = x * y' along x = e^y
        assert fx == pytest.approx(0.9 * fy, rel=1e-12)


class TestIntegrate:
    def test_linear_decay(self):
        model = zero_flux_model()
        traj = dde.integrate(model, 1.0, (0.0, 1.0), steps_per_period=512,
                             mode="x")
        assert traj.values[-1] == pytest.approx(math.exp(-1.0), abs=1e-8)

    def test_convergence_order(self):
        model = zero_flux_model()
        errors = []
        for spp in (64, 128, 256, 512):
            traj = dde.integrate(model, 1.0, (0.0, 1.0), steps_per_period=spp,
                                 mode="x")
            errors.append(abs(traj.values[-1] - math.exp(-1.0)))
        orders = [math.log2(a / b) for a, b in zip(errors, errors[1:])]
        assert min(orders) >= 3.8

    def test_equilibrium_stays_put(self):
        model = simple_model(m=1.0, n=2.0, r_mean=2.0, b_mean=1.0,
                             tau=0.37, mu=0.11)
        traj = dde.integrate(model, 1.0, (0.0, 5.0), steps_per_period=128,
                             mode="x")
        assert float(np.max(np.abs(traj.values - 1.0))) <= 1e-10

    def test_positivity_from_positive_history(self, section4):
        traj = dde.integrate(section4, 0.5, (0.0, 20 * section4.T),
                             steps_per_period=128, mode="x")
        assert np.all(traj.values > 0.0)

    def test_log_equivalence(self, section4):
        span = (0.0, 10 * section4.T)
        tr_log = dde.integrate(section4, math.log(0.52), span, 512, mode="log")
        tr_x = dde.integrate(section4, 0.52, span, 512, mode="x")
        assert float(np.max(np.abs(np.log(tr_x.values) - tr_log.values))) <= 1e-7

    def test_dense_output_consistency(self, section4):
        span = (0.0, 10 * section4.T)
        tr1 = dde.integrate(section4, -0.65, span, 512)
        tr2 = dde.integrate(section4, -0.65, span, 1024)
        rng = np.random.default_rng(42)
        ts = rng.uniform(0.0, span[1], 100)
        assert float(np.max(np.abs(tr1.sample(ts) - tr2.sample(ts)))) <= 1e-7

    def test_section4_long_run(self, section4):
        # 200 periods from x = e^-0.65: the log band (-5, -0.3) holds an
        # unstable orbit, so the trajectory slides slowly downward; the
        # terminal one-period segment stays within the decay-bound amplitude
        traj = dde.integrate(section4, -0.65, (0.0, 200 * section4.T),
                             steps_per_period=512, mode="log")
        seg = np.linspace(199 * section4.T, 200 * section4.T, 257)
        vals = traj.sample(seg)
        assert vals.max() - vals.min() <= section4.C + 1e-4
        assert traj.values[-1] < -0.65  # drifting down, not settling
        half = dde.integrate(section4, -0.65, (0.0, 200 * section4.T),
                             steps_per_period=1024, mode="log")
        assert abs(traj.values[-1] - half.values[-1]) <= 1e-7

    def test_converges_to_attracting_orbit(self):
        # sublinear single-term model whose positive orbit attracts
        T = 1.0
        model = Model(terms=(Term(
            lam=1.0, m=1.0, n=2.0,
            r=PeriodicFn.trig(T, 4.0, [(1, 0.3, 0.1)]),
            tau=PeriodicFn.constant(T, 0.3),
            mu=PeriodicFn.trig(T, 0.2, [(1, 0.1, 0.0)])),),
            b=PeriodicFn.trig(T, 1.0, [(1, 0.05, 0.0)]))
        traj = dde.integrate(model, 0.2, (0.0, 30 * T), steps_per_period=512,
                             mode="log")
        disp = abs(traj.sample([30 * T])[0] - traj.sample([29 * T])[0])
        assert disp <= 1e-6

    def test_rejects_coarse_stepping(self, section4):
        with pytest.raises(ValueError):
            dde.integrate(section4, 1.0, (0.0, section4.T), steps_per_period=32)

    def test_rejects_nonpositive_x_history(self, section4):
        with pytest.raises(ValueError):
            dde.integrate(section4, -1.0, (0.0, section4.T), mode="x")

    def test_bad_mode(self, section4):
        with pytest.raises(ValueError):
            dde.integrate(section4, 1.0, (0.0, section4.T), mode="nope")


class TestSubdivision:
    def test_delay_smaller_than_step(self):
        # tau = h/2 forces subdivision; the result must stay accurate
        T = 1.0
        h = T / 128
        model = simple_model(m=1.0, n=2.0, r_mean=2.0, b_mean=1.0,
                             tau=0.5 * h, mu=0.5 * h)
        traj = dde.integrate(model, 1.0, (0.0, 1.0), steps_per_period=128,
                             mode="x")
        assert float(np.max(np.abs(traj.values - 1.0))) <= 1e-10
        assert len(traj.times) > 129  # extra knots from subdividing

    def test_subdivided_decay_accuracy(self):
        T = 1.0
        h = T / 128
        rate = PeriodicFn.constant(T, 1.0)
        model = Model(terms=(Term(lam=1.0, m=1.0, n=1.0, r=rate,
                                  tau=PeriodicFn.constant(T, 0.4 * h),
                                  mu=PeriodicFn.constant(T, 0.4 * h)),),
                      b=PeriodicFn.constant(T, 3.0))
        tr_coarse = dde.integrate(model, 1.0, (0.0, 1.0),
                                  steps_per_period=128, mode="log")
        tr_fine = dde.integrate(model, 1.0, (0.0, 1.0),
                                steps_per_period=1024, mode="log")
        assert tr_coarse.values[-1] == pytest.approx(tr_fine.values[-1],
                                                     abs=1e-7)

    def test_unresolvable_tiny_delay(self):
        T = 1.0
        h = T / 64
        model = simple_model(m=1.0, n=2.0, r_mean=2.0, b_mean=1.0,
                             tau=h * 1e-9, mu=0.0)
        with pytest.raises(ValueError, match="steps_per_period"):
            dde.integrate(model, 1.0, (0.0, 0.5), steps_per_period=64,
                          mode="x")


class TestHistory:
    def test_matches_knots_exactly(self, section4):
        traj = dde.integrate(section4, -0.65, (0.0, 3 * section4.T), 128)
        hist = traj.history
        for i in range(0, len(traj.times), 37):
            assert hist.evaluate(float(traj.times[i])) == traj.values[i]

    def test_continuity_at_knots(self, section4):
        traj = dde.integrate(section4, -0.65, (0.0, 3 * section4.T), 128)
        hist = traj.history
        for i in range(1, len(traj.times) - 1, 53):
            t = float(traj.times[i])
            eps = 1e-10 * section4.T
            assert hist.evaluate(t - eps) == pytest.approx(
                hist.evaluate(t + eps), abs=1e-6)

    def test_uses_initial_history_function(self):
        model = simple_model(m=1.0, n=2.0, r_mean=2.0, b_mean=1.0, tau=0.25)
        seen = []

        def hist(t):
            seen.append(t)
            return 1.0

        dde.integrate(model, hist, (0.0, 0.5), steps_per_period=64, mode="x")
        assert seen and all(t <= 0.0 for t in seen)
        assert min(seen) >= -0.25 - 1e-9

    def test_csv_export(self, tmp_path, section4):
        traj = dde.integrate(section4, -0.65, (0.0, section4.T), 64)
        out = tmp_path / "traj.csv"
        traj.write_csv(out)
        lines = out.read_text().splitlines()
        assert lines[0] == "# mode: log-space"
        assert lines[1] == "t,y"
        assert len(lines) == 2 + 65


@pytest.mark.skipif(len(available_backends()) < 2,
                    reason="compiled backend not built")
class TestBackendParity:
    def test_identical_trajectories(self, section4):
        span = (0.0, 5 * section4.T)
        kw = dict(steps_per_period=256, mode="log")
        tr_c = dde.integrate(section4, -0.65, span, backend="compiled-cython",
                             **kw)
        tr_p = dde.integrate(section4, -0.65, span, backend="pure-python",
                             **kw)
        assert np.array_equal(tr_c.times, tr_p.times)
        assert np.array_equal(tr_c.values, tr_p.values)
        assert np.array_equal(tr_c.slopes if hasattr(tr_c, "slopes")
                              else tr_c.history.slopes,
                              tr_p.history.slopes)

    def test_identical_with_subdivision(self):
        T = 1.0
        h = T / 128
        model = simple_model(m=1.0, n=2.0, r_mean=2.5, b_mean=1.0,
                             tau=0.4 * h, mu=2.0 * h)
        kw = dict(steps_per_period=128, mode="log")
        tr_c = dde.integrate(model, 0.1, (0.0, 1.0),
                             backend="compiled-cython", **kw)
        tr_p = dde.integrate(model, 0.1, (0.0, 1.0), backend="pure-python",
                             **kw)
        assert np.array_equal(tr_c.times, tr_p.times)
        assert np.array_equal(tr_c.values, tr_p.values)

    def test_identical_sampled_coefficients(self):
        T = 1.0
        base = PeriodicFn.trig(T, 2.0, [(1, 0.4, 0.2)])
        model = Model(terms=(Term(
            lam=1.0, m=1.2, n=2.0,
            r=PeriodicFn.from_samples_of(base.evaluate, T, 32),
            tau=PeriodicFn.constant(T, 0.3),
            mu=PeriodicFn.constant(T, 0.15)),),
            b=PeriodicFn.constant(T, 1.0))
        kw = dict(steps_per_period=128, mode="log")
        tr_c = dde.integrate(model, 0.0, (0.0, 3.0),
                             backend="compiled-cython", **kw)
        tr_p = dde.integrate(model, 0.0, (0.0, 3.0), backend="pure-python",
                             **kw)
        assert np.array_equal(tr_c.values, tr_p.values)
