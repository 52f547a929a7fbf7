import dataclasses
import math

import numpy as np
import pytest

from aap_altitude import model, mfp, oracle
from aap_altitude.errors import DegenerateSegment
from aap_altitude.mfp import MfpSettings, Vertex
from aap_altitude.results import Termination


def _pb(coeffs, params, l):
    return mfp._Parametric(coeffs, params, l)


@pytest.fixture(scope="module")
def mfp_result(params):
    return mfp.mfp_optimize(params)


@pytest.fixture(scope="module")
def rate_only(params, coeffs):
    return mfp.polyblock_solve(coeffs, params, 0.0)


class TestParametricEvaluator:
    def test_matches_model(self, params, coeffs):
        h = np.linspace(coeffs.h_lo, coeffs.h_hi, 101)
        for l in (0.0, 0.2, 0.5):
            pb = _pb(coeffs, params, l)
            r1 = [pb.r1(x) for x in h]
            r2 = [pb.r2(x) for x in h]
            np.testing.assert_allclose(r1, model.r1(coeffs, h), rtol=1e-12)
            np.testing.assert_allclose(r2, model.r2(coeffs, params, h, l), rtol=1e-12)

    def test_t_max(self, params, coeffs):
        l = 0.3
        expected = model.r2(coeffs, params, coeffs.h_hi, l) - model.r2(coeffs, params, coeffs.h_lo, l)
        assert mfp.t_max(coeffs, params, l) == pytest.approx(float(expected), rel=1e-12)


class TestParametricObjective:
    def test_zero_t_is_r1(self, params, coeffs):
        for h in (10.0, 55.0, 100.0):
            assert mfp.parametric_objective(coeffs, params, Vertex(h, 0.0)) == pytest.approx(
                float(model.r1(coeffs, h)), rel=1e-15
            )

    def test_increasing_in_each_coordinate(self, params, coeffs):
        rng = np.random.default_rng(11)
        tm = mfp.t_max(coeffs, params, 0.3)
        for h, t in zip(rng.uniform(coeffs.h_lo, coeffs.h_hi - 1, 200), rng.uniform(0, tm, 200)):
            f = mfp.parametric_objective(coeffs, params, Vertex(h, t))
            assert mfp.parametric_objective(coeffs, params, Vertex(h + 0.5, t)) > f
            assert mfp.parametric_objective(coeffs, params, Vertex(h, t + 1.0)) > f

    def test_upper_corner_dominates(self, params, coeffs):
        tm = mfp.t_max(coeffs, params, 0.3)
        top = mfp.parametric_objective(coeffs, params, Vertex(coeffs.h_hi, tm))
        for h in np.linspace(coeffs.h_lo, coeffs.h_hi, 60):
            for t in np.linspace(0, tm, 60):
                assert mfp.parametric_objective(coeffs, params, Vertex(h, t)) <= top


class TestNormalSet:
    L = 0.3774

    def test_lower_corner(self, params, coeffs):
        assert mfp.in_normal_set(coeffs, params, Vertex(coeffs.h_lo, 0.0), self.L)

    def test_upper_corner_outside(self, params, coeffs):
        tm = mfp.t_max(coeffs, params, self.L)
        assert tm > 0
        assert not mfp.in_normal_set(coeffs, params, Vertex(coeffs.h_hi, tm), self.L)

    def test_beyond_cap_outside(self, params, coeffs):
        assert not mfp.in_normal_set(coeffs, params, Vertex(coeffs.h_hi + 1e-6, 0.0), self.L)

    def test_midpoint_slack(self, params, coeffs):
        rng = np.random.default_rng(3)
        top = float(model.r2(coeffs, params, coeffs.h_hi, self.L))
        for h in rng.uniform(coeffs.h_lo, coeffs.h_hi, 200):
            t = 0.5 * (top - float(model.r2(coeffs, params, h, self.L)))
            assert mfp.in_normal_set(coeffs, params, Vertex(h, t), self.L)

    def test_downward_closed(self, params, coeffs):
        rng = np.random.default_rng(4)
        tm = mfp.t_max(coeffs, params, self.L)
        checked = 0
        while checked < 1000:
            v = Vertex(rng.uniform(1.0, coeffs.h_hi), rng.uniform(-tm, tm))
            if not mfp.in_normal_set(coeffs, params, v, self.L):
                continue
            u = Vertex(rng.uniform(1.0, v.h), v.t - rng.uniform(0, tm))
            assert mfp.in_normal_set(coeffs, params, u, self.L)
            checked += 1


class TestProjection:
    TOL = 1e-6

    def test_feasible_input_returned(self, params, coeffs):
        v = Vertex(50.0, 0.0)
        assert mfp.project_to_boundary(coeffs, params, v, 0.2, self.TOL) == v

    @pytest.mark.parametrize("l", [0.0, 0.3774, 1.0])
    def test_upper_corner_residual(self, params, coeffs, l):
        pb = _pb(coeffs, params, l)
        top = Vertex(coeffs.h_hi, pb.t_max)
        z_in, z_out, halvings = mfp._bisect_boundary(pb, top, self.TOL)
        assert z_in == mfp.project_to_boundary(coeffs, params, top, l, self.TOL)
        assert pb.contains(z_in) and not pb.contains(z_out)
        # The bracket is tol long in segment units, so the boundary equation
        # residual picks up the t extent plus the boundary slope times the h extent.
        h = np.linspace(coeffs.h_lo, coeffs.h_hi, 10_001)
        slope = np.max(np.abs(np.gradient(pb.r2_top - model.r2(coeffs, params, h, l), h)))
        bound = self.TOL * (pb.t_max + slope * (coeffs.h_hi - coeffs.h_lo))
        residual = pb.boundary_t(z_in.h) - z_in.t
        assert 0 <= residual <= bound
        assert halvings <= math.ceil(math.log2(1 / self.TOL))

    def test_random_vertices(self, params, coeffs):
        rng = np.random.default_rng(8)
        pb = _pb(coeffs, params, 0.3)
        for _ in range(200):
            v = Vertex(rng.uniform(coeffs.h_lo + 1, coeffs.h_hi), rng.uniform(0, pb.t_max))
            z_in, z_out, halvings = mfp._bisect_boundary(pb, v, self.TOL)
            assert pb.contains(z_in)
            if halvings:
                assert not pb.contains(z_out)
                assert halvings <= 20

    def test_degenerate_segment(self, params, coeffs):
        with pytest.raises(DegenerateSegment):
            mfp.project_to_boundary(coeffs, params, Vertex(coeffs.h_lo, 0.0), 0.2, self.TOL)
        with pytest.raises(DegenerateSegment):
            mfp.project_to_boundary(coeffs, params, Vertex(coeffs.h_lo - 1, -1.0), 0.2, self.TOL)


class TestPolyblock:
    def test_rate_only_matches_grid(self, coeffs, rate_only):
        h = np.linspace(coeffs.h_lo, coeffs.h_hi, 2_000_001)
        h_grid = h[np.argmax(model.sum_rate(coeffs, h))]
        assert rate_only.converged
        assert abs(rate_only.h_star - h_grid) <= 5e-3

    def test_value_is_true_objective(self, params, coeffs):
        r = mfp.polyblock_solve(coeffs, params, 0.3)
        expected = model.sum_rate(coeffs, r.h_star) - 0.3 * model.total_energy(params, r.h_star)
        assert r.value == pytest.approx(float(expected), rel=1e-12)

    @pytest.mark.parametrize("l", [0.0, 0.2, 0.3774])
    def test_trace_and_sandwich(self, params, coeffs, l):
        r = mfp.polyblock_solve(coeffs, params, l)
        f_max = [a for a, _ in r.trace]
        f_min = [b for _, b in r.trace]
        assert all(b <= a for a, b in zip(f_max, f_max[1:]))
        assert all(b >= a for a, b in zip(f_min, f_min[1:]))
        assert r.converged
        assert (f_max[-1] - f_min[-1]) / f_max[-1] <= 1e-4
        # f at the best grid point on the G boundary, offset by the constant R2(h_hi).
        pb = _pb(coeffs, params, l)
        h = np.linspace(coeffs.h_lo, coeffs.h_hi, 200_001)
        f_star = np.max(model.sum_rate(coeffs, h) - l * model.total_energy(params, h)) + pb.r2_top
        for hi, lo in r.trace:
            assert lo <= f_star * (1 + 1e-12)
            assert f_star <= hi + 1e-9

    def test_incumbent_feasible(self, params, coeffs):
        r = mfp.polyblock_solve(coeffs, params, 0.3)
        v = r.state.incumbent
        assert mfp.in_normal_set(coeffs, params, v, 0.3)
        assert v.h >= coeffs.h_lo and v.t >= 0

    def test_loose_tolerance_stops_after_one_projection(self, params, coeffs):
        r = mfp.polyblock_solve(coeffs, params, 0.0, MfpSettings(e=0.5))
        assert len(r.trace) == 2
        assert r.converged

    def test_iteration_cap(self, params, coeffs):
        r = mfp.polyblock_solve(coeffs, params, 0.3, MfpSettings(max_inner=5))
        assert not r.converged
        assert r.state.iteration == 5
        assert len(r.trace) == 6
        assert coeffs.h_lo <= r.h_star <= coeffs.h_hi


class TestOptimize:
    def test_matches_oracle(self, params, mfp_result):
        o = oracle.grid_argmax(params, 100_000)
        assert mfp_result.termination is Termination.CONVERGED
        assert abs(mfp_result.h_opt - o.h_star) <= 0.5

    def test_outer_sequence(self, mfp_result):
        l = [rec.l_k for rec in mfp_result.trace]
        assert all(b >= a for a, b in zip(l, l[1:]))
        assert mfp_result.iterations == len(mfp_result.trace)

    def test_global_optimality(self, params, coeffs, mfp_result):
        h = np.linspace(coeffs.h_lo, coeffs.h_hi, 100_000)
        g = model.gee(params, coeffs, h)
        assert np.all(mfp_result.gee_opt >= g - 10 * 1e-4 * mfp_result.gee_opt)

    def test_bound_trace_attached(self, mfp_result):
        assert mfp_result.bound_trace and len(mfp_result.bound_trace[0]) == 2

    def test_rate_capped_optimum(self, params):
        p = dataclasses.replace(params, r0_bps=90e6)
        c = model.derive_coefficients(p)
        r = mfp.mfp_optimize(p)
        assert r.h_opt == pytest.approx(c.h_hi, abs=0.05)

    def test_no_rotor_energy_flies_higher(self, params, mfp_result):
        assert mfp.mfp_optimize(params.without_rotor_energy()).h_opt > mfp_result.h_opt + 10

    def test_outer_cap(self, params):
        r = mfp.mfp_optimize(params, MfpSettings(max_outer=1, h_init=20.0))
        assert r.termination is Termination.MAX_ITERS
        assert r.iterations == 1

    def test_bad_settings(self, params):
        with pytest.raises(ValueError):
            MfpSettings(e=0.0)
        with pytest.raises(ValueError):
            MfpSettings(max_inner=0)
        with pytest.raises(ValueError):
            mfp.mfp_optimize(params, MfpSettings(h_init=1.0))

    def test_random_scenarios(self, random_scenarios):
        for p in random_scenarios[:8]:
            r = mfp.mfp_optimize(p)
            o = oracle.grid_argmax(p, 20_000)
            assert abs(r.h_opt - o.h_star) <= 0.5
            l = [rec.l_k for rec in r.trace]
            assert all(b >= a for a, b in zip(l, l[1:]))
