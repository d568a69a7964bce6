"""Bound arithmetic: iterates, closed forms, parameter choices."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cusplab.bounds import (
    XI_FEASIBLE,
    BoundParams,
    F0,
    GridFunction,
    choose_parameters,
    closed_form,
    decay_F,
    default_grid,
    dominance_margin,
    final_G_bound,
    iterate_F,
    kappa_descendants,
    kappa_power,
    kappa_table,
    kappa_zero,
    make_grid,
    series_F,
    verify_est_m,
)
from cusplab.exceptions import InvariantViolationError


@pytest.fixture(scope="module")
def params():
    p = BoundParams()
    p.validate()
    return p


class TestF0:
    def test_zero_time(self, params):
        assert F0(params, 0.0, 1e-5) == 0.0

    def test_frozen_value(self, params):
        # t=0.1, r=e^-10: 0.1 + 0.5*0.01*10 + 0.1*10.
        assert F0(params, 0.1, math.exp(-10)) == pytest.approx(1.15, abs=1e-14)

    def test_scales_with_C(self):
        p2 = BoundParams(C=2.0)
        assert F0(p2, 0.1, 1e-4) == pytest.approx(
            2.0 * F0(BoundParams(), 0.1, 1e-4), rel=1e-14)

    @given(st.floats(min_value=0.01, max_value=2.0),
           st.floats(min_value=-200.0, max_value=-1.0))
    @settings(max_examples=60, deadline=None)
    def test_monotone_decreasing_in_r(self, t, lnr):
        p = BoundParams()
        r = math.exp(lnr)
        assert F0(p, t, r) >= F0(p, t, min(r * 1.5, 0.999)) - 1e-12

    def test_domain(self, params):
        with pytest.raises(ValueError):
            F0(params, -0.1, 0.5)
        with pytest.raises(ValueError):
            F0(params, 0.1, 1.5)


class TestIterates:
    def test_m1_is_one_step(self, params):
        g = default_grid(params)
        it = iterate_F(params, 1, g)
        want = F0(params, g.t[:, None], g.r[None, :])
        assert np.allclose(it.values, want, rtol=0.0, atol=1e-15)

    def test_series_identity_m1(self, params):
        # The partial-sum identity collapses to the one-step formula.
        t, r = 0.002, math.exp(-30)
        assert series_F(params, 1, t, r) == pytest.approx(
            F0(params, t, r), rel=1e-14)

    @pytest.mark.parametrize("m", [2, 3, 5, 8, 13])
    def test_quadrature_matches_series(self, params, m):
        g = default_grid(params)
        it = iterate_F(params, m, g)
        want = series_F(params, m, g.t[:, None], g.r[None, :])
        assert np.max(np.abs(it.values - want)) < 1e-10

    def test_iterates_decrease_in_m(self, params):
        # Each pass replaces C t L by an integral of something smaller.
        g = default_grid(params)
        prev = iterate_F(params, 1, g).values
        for m in (2, 3, 4):
            cur = iterate_F(params, m, g).values
            assert np.all(cur <= prev + 1e-12)
            prev = cur


class TestClosedForm:
    def test_zero_time(self, params):
        assert closed_form(params, 4, 0.0, math.exp(-25)) == pytest.approx(
            2.0 / 25.0, rel=1e-14)

    @pytest.mark.parametrize("m", list(range(1, 33)))
    def test_dominates_iterates_on_default_grid(self, params, m):
        assert dominance_margin(params, m, default_grid(params)) >= 0.0

    def test_dominance_window_is_real(self, params):
        # Outside the small-X window the Stirling constant alone cannot
        # absorb e^m, and the printed form genuinely fails: this guards
        # against anyone silently widening the default grid.
        g = make_grid(params, [math.exp(-500.0)], t_max=4e-3)
        assert dominance_margin(params, 3, g) < 0.0


class TestEstM:
    @pytest.mark.parametrize("xi", np.linspace(1.0, 50.0, 25).tolist())
    def test_lower_choice(self, xi):
        assert verify_est_m(xi, math.ceil(math.e * xi))

    @pytest.mark.parametrize("xi", np.linspace(1.0, 50.0, 25).tolist())
    def test_upper_choice(self, xi):
        assert verify_est_m(xi, math.floor(4.0 * xi))

    def test_rejects_small_m(self):
        # m below e*xi breaks the inequality once xi is large enough.
        assert not verify_est_m(30.0, 30)


class TestChooseParameters:
    def test_frozen_choice(self, params):
        ch = choose_parameters(params, math.exp(-100))
        assert ch.xi == pytest.approx(0.5 * math.log(100.0), abs=1e-14)
        assert ch.m == 7
        assert ch.eta == pytest.approx(ch.xi / 100.0, abs=1e-16)
        assert math.e * ch.xi <= ch.m <= 4.0 * ch.xi

    def test_log_radius_equivalence(self, params):
        a = choose_parameters(params, math.exp(-30))
        b = choose_parameters(params, L=30.0)
        assert a == b

    def test_kappa_branch(self):
        p = BoundParams(kappa=kappa_power(1.0))
        ch = choose_parameters(p, L=100.0)
        # kappa(L^{-1/2}) = 0.1 cuts xi to ln(10)/2 < ln(100)/2.
        assert ch.xi == pytest.approx(0.5 * math.log(10.0), abs=1e-14)

    def test_eta_scaling(self, params):
        xis, etas = [], []
        for k in range(1, 7):
            ch = choose_parameters(params, L=10.0 ** k)
            xis.append(ch.xi)
            etas.append(ch.eta)
        assert all(b > a for a, b in zip(xis, xis[1:]))   # eta * L grows
        assert all(b < a for a, b in zip(etas, etas[1:]))  # eta falls

    def test_infeasible_radius(self, params):
        with pytest.raises(ValueError):
            choose_parameters(params, 0.5)
        assert XI_FEASIBLE == pytest.approx(1.0 / (4.0 - math.e), abs=1e-15)


class TestDecay:
    def test_frozen_value(self, params):
        assert decay_F(params, L=100.0) == pytest.approx(
            2.0 * math.log(100.0) / 10.0, abs=1e-14)

    def test_goes_to_zero(self, params):
        vals = [decay_F(params, L=10.0 ** k) for k in range(1, 7)]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 0.03

    def test_kappa_term(self):
        p = BoundParams(kappa=kappa_power(2.0))
        # adds sqrt(kappa(L^{-1/2})) = L^{-1/2}.
        assert decay_F(p, L=100.0) == pytest.approx(
            decay_F(BoundParams(), L=100.0) + 0.1, abs=1e-14)


class TestFinalGBound:
    def test_frozen_value(self, params):
        gb = final_G_bound(params, L=100.0, delta=0.5)
        assert gb.g_term == pytest.approx(math.log(100.0) ** -1.5, rel=1e-12)
        assert gb.total == pytest.approx(gb.g_term + gb.f_term, abs=1e-15)

    def test_monotone_along_deep_radii(self, params):
        vals = [final_G_bound(params, L=10.0 ** k, delta=0.5).total
                for k in range(1, 7)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_domain(self, params):
        with pytest.raises(ValueError):
            final_G_bound(params, L=50.0, delta=0.0)
        with pytest.raises(ValueError):
            final_G_bound(params, 0.9, delta=0.5)


class TestKappaDescendants:
    def test_zero_seed_vanishes(self, params):
        kd = kappa_descendants(params, 7, 0.02, L=100.0)
        assert kd.value == 0.0

    def test_linear_seed_under_cap(self):
        p = BoundParams(kappa=kappa_power(1.0))
        ch = choose_parameters(p, L=100.0)
        kd = kappa_descendants(p, ch.m, ch.eta, L=100.0)
        assert 0.0 < kd.value <= kd.bound
        assert math.isfinite(kd.value)

    def test_monotone_in_m(self):
        p = BoundParams(kappa=kappa_power(1.0))
        vals = [kappa_descendants(p, m, 0.0115, L=100.0).value
                for m in (1, 2, 4, 8, 16)]
        assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))

    def test_deep_sweep_under_cap(self):
        # k=1 is infeasible for this envelope (xi below threshold).
        p = BoundParams(kappa=kappa_power(1.0))
        for k in range(2, 7):
            L = 10.0 ** k
            ch = choose_parameters(p, L=L)
            kd = kappa_descendants(p, ch.m, ch.eta, L=L)
            assert kd.value <= kd.bound

    def test_nonvanishing_seed_breaks_cap(self):
        # The cap needs kappa(0+) = 0; a flat envelope violates it and
        # the guard must fire.
        one = BoundParams(kappa=lambda r: 1.0)
        with pytest.raises(InvariantViolationError) as ei:
            kappa_descendants(one, 40, 0.01, L=1000.0)
        assert ei.value.invariant == "kappa_descendants"

    def test_domain(self, params):
        with pytest.raises(ValueError):
            kappa_descendants(params, 0, 0.1, 1e-4)
        with pytest.raises(ValueError):
            kappa_descendants(params, 3, 0.1, 1e-4, delta_choice=2.0)
        with pytest.raises(ValueError):
            kappa_descendants(params, 3, 0.1, r=1e-4, L=10.0)


class TestPlumbing:
    def test_grid_validation(self):
        with pytest.raises(ValueError):
            GridFunction(t=np.array([0.0, 1.0, 3.0]), r=np.array([0.5]),
                         values=np.zeros((3, 1))).validate()
        with pytest.raises(ValueError):
            GridFunction(t=np.linspace(0, 1, 5), r=np.array([0.5]),
                         values=-np.ones((5, 1))).validate()
        with pytest.raises(ValueError):
            make_grid(BoundParams(), [1e-5], t_max=0.1, n_t=100)

    def test_kappa_table(self):
        kap = kappa_table([1e-8, 1e-4, 1e-2], [0.0, 0.1, 0.3])
        assert kap(1e-10) == 0.0
        assert kap(1e-1) == 0.3
        assert kap(1e-6) == pytest.approx(0.05, abs=1e-12)
        with pytest.raises(ValueError):
            kappa_table([1e-4, 1e-8], [0.0, 0.1])
        with pytest.raises(ValueError):
            kappa_table([1e-8, 1e-4], [0.3, 0.1])

    def test_params_validation(self):
        with pytest.raises(ValueError):
            BoundParams(C=0.0).validate()
        with pytest.raises(ValueError):
            BoundParams(kappa=lambda r: -1.0).validate()
        with pytest.raises(ValueError):
            kappa_power(0.0)

    def test_kappa_zero_is_zero(self):
        kap = kappa_zero()
        assert kap(1e-300) == 0.0 and kap(0.9) == 0.0