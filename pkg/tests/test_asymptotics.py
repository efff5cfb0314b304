import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ccpb import asymptotics as asy
from ccpb.errors import EqualConcentrations, MalformedQuery, NonPositiveGamma, OutOfDomain
from ccpb.model import DielectricProfile, p0, validate_params

LN8 = math.log(8)
LN32 = math.log(32)


def params_strategy():
    return st.builds(
        lambda A, B, p, q, N, g0, R: validate_params(
            dict(A=A, B=B, p=p, q=q, eps=0.01, N=N, R=R, dielectric=DielectricProfile.constant(g0))
        ),
        A=st.floats(0.1, 5),
        B=st.floats(0.1, 5),
        p=st.floats(0.25, 4),
        q=st.floats(0.25, 4),
        N=st.integers(2, 4),
        g0=st.floats(0.2, 5),
        R=st.floats(0.5, 3),
    ).filter(lambda prm: abs(prm.A - prm.B) > 1e-3)


class TestCoefficientLimits:
    def test_p0(self):
        assert tuple(asy.coefficient_limits(p0())[:2]) == (0.5, 1.0)

    def test_mirror(self):
        assert tuple(asy.coefficient_limits(p0(A=2.0, B=1.0))[:2]) == (1.0, 0.5)

    def test_mean_shift(self):
        lim = asy.coefficient_limits(p0(), mean=0.3)
        assert lim.I_p == pytest.approx(0.5 * math.exp(0.3))
        assert lim.I_q == pytest.approx(math.exp(-0.3))

    def test_equal_flagged(self):
        lim = asy.coefficient_limits(p0(B=1.0))
        assert lim.degenerate and lim.I_p == lim.I_q == 0.5


class TestBoundaryExpansion:
    def test_p0(self):
        lead, second = asy.boundary_expansion(p0())
        assert lead == -2.0
        assert second == pytest.approx(LN8, abs=1e-14)

    def test_p0_value(self):
        assert asy.boundary_expansion(p0()).at(1e-3) == pytest.approx(-11.7361, abs=1e-4)

    def test_doubling_dielectric(self):
        a = asy.boundary_expansion(p0())
        b = asy.boundary_expansion(p0(dielectric={"kind": "constant", "g0": 2.0}))
        assert b.second - a.second == pytest.approx(math.log(2), abs=1e-14)

    def test_mirror(self):
        lead, second = asy.boundary_expansion(p0(A=2.0, B=1.0))
        assert lead == 2.0 and second == pytest.approx(-LN8)

    def test_equal_raises(self):
        with pytest.raises(EqualConcentrations):
            asy.boundary_expansion(p0(B=1.0))


class TestInteriorExpansion:
    def test_power_below_two(self):
        eps = 1e-3
        res = asy.interior_expansion(p0(), asy.Power(1.5, 1.0), eps)
        assert res.U_total == pytest.approx(-math.log(1 / eps) - math.log(2), rel=1e-13)
        assert res.dU == pytest.approx(-2 * eps**-1.5, rel=1e-13)
        assert res.rho == pytest.approx(2 / eps, rel=1e-13)
        assert (res.chi1, res.chi2) == (1, 0)

    def test_power_two(self):
        eps = 1e-3
        res = asy.interior_expansion(p0(), asy.Power(2.0, 4.0), eps)
        assert res.U_second == pytest.approx(LN32, abs=1e-13)
        assert res.U_total == pytest.approx(-2 * math.log(1e3) + 3.4657, abs=1e-4)
        assert res.dU == pytest.approx(-0.25 / eps**2)
        assert res.rho == pytest.approx(0.03125 / eps**2)
        assert (res.chi1, res.chi2) == (1, 1)
        assert res.r == pytest.approx(1 - 4 * eps**2)

    @pytest.mark.parametrize("gamma", [0.0, 1.0, 7.0])
    def test_power_above_two_ignores_gamma(self, gamma):
        eps = 1e-2
        res = asy.interior_expansion(p0(), asy.Power(3.0, gamma), eps)
        assert res.U_second == pytest.approx(LN8, abs=1e-13)
        assert res.dU == pytest.approx(-0.5 / eps**2)
        assert res.rho == pytest.approx(0.125 / eps**2)
        assert (res.chi1, res.chi2) == (0, 1)

    def test_theta_case(self):
        eps = 1e-4
        res = asy.interior_expansion(p0(), asy.ThetaCase(0.5, 1.0), eps)
        assert res.U_total == pytest.approx(-2 * math.log(1 / eps) ** 0.5 + math.log(0.5), rel=1e-13)

    def test_iterated_log(self):
        eps = 1e-6
        res = asy.interior_expansion(p0(), asy.IteratedLog(2, 3.0, 0.5), eps)
        ll = math.log(math.log(1 / eps))
        assert res.U_total == pytest.approx(-6 * ll + (-1.0 + math.log(0.5)), rel=1e-13)
        beta2 = 1 + (3 * ll + 0.5) / math.log(1 / eps)
        assert res.dU == pytest.approx(-2 * eps**-beta2)
        no_rates = asy.interior_expansion(p0(), asy.IteratedLog(3, 1.0), eps)
        assert no_rates.dU is None and no_rates.rho is None

    def test_pi_spec_infinite_class_matches_power(self):
        # pi(eps) = 4 eps^2 log(1/eps) grows relative to eps^2
        eps = 1e-3
        q = asy.PiSpec(2.0, "infinite", lambda e: 4 * e**2 * math.log(1 / e))
        res = asy.interior_expansion(p0(), q, eps)
        pi = 4 * eps**2 * math.log(1 / eps)
        # the total reduces to (2/q) log(pi/eps * sqrt(qA/(2g)))
        assert res.U_total == pytest.approx(2 * math.log(pi / eps * math.sqrt(0.5)), rel=1e-13)
        assert res.dU == pytest.approx(-2 / pi)
        assert res.rho == pytest.approx(2 * (eps / pi) ** 2)

    def test_pi_spec_zero_class_is_boundary_like(self):
        q = asy.PiSpec(2.0, "zero", lambda e: e**2 / math.log(1 / e))
        res = asy.interior_expansion(p0(), q, 1e-3)
        assert res.U_second == pytest.approx(LN8)

    def test_interior_returns_bound(self):
        res = asy.interior_expansion(p0(), asy.Interior(0.5), 1e-4)
        assert res.U_total is None
        assert res.bound["U_shape"] == pytest.approx(1e-2 * math.log(1e4))

    @pytest.mark.parametrize(
        "query",
        [asy.Power(1.0, 1.0), asy.Power(1.5, 0.0), asy.Interior(1.0), asy.ThetaCase(1.5, 1.0), asy.IteratedLog(1, 1.0)],
    )
    def test_malformed(self, query):
        with pytest.raises(MalformedQuery):
            asy.interior_expansion(p0(), query, 1e-3)

    def test_mirror_negates(self):
        a = asy.interior_expansion(p0(), asy.Power(2.0, 4.0), 1e-3)
        b = asy.interior_expansion(p0(A=2.0, B=1.0), asy.Power(2.0, 4.0), 1e-3)
        assert b.U_total == pytest.approx(-a.U_total)
        assert b.dU == pytest.approx(-a.dU)

    @settings(max_examples=40, deadline=None)
    @given(params_strategy())
    def test_power_above_two_equals_boundary(self, params):
        res = asy.interior_expansion(params, asy.Power(2.5, 1.0), 1e-3)
        be = asy.boundary_expansion(params)
        assert res.leading_coefficient == pytest.approx(be.leading, rel=1e-13)
        assert res.U_second == pytest.approx(be.second, rel=1e-12, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(params_strategy(), st.floats(0.1, 10))
    def test_layer_profile_matches_power_two(self, params, gamma):
        eps = params.eps
        res = asy.interior_expansion(params, asy.Power(2.0, gamma), eps)
        U = asy.layer_profile(params, params.R - gamma * eps**2)
        assert abs(U - res.U_total) < 1e-12 * max(1.0, abs(U))

    def test_repeatable(self):
        a = asy.interior_expansion(p0(), asy.Power(1.7, 2.0), 1e-3)
        b = asy.interior_expansion(p0(), asy.Power(1.7, 2.0), 1e-3)
        assert a == b


class TestDeltaWeights:
    def test_p0(self):
        w = asy.delta_weights(p0())
        assert (w.w_energy, w.w_rho, w.w_exp) == (1.0, 0.5, 0.5)

    def test_equal_all_zero(self):
        assert asy.delta_weights(p0(B=1.0)) == asy.DeltaWeights(0.0, 0.0, 0.0)

    def test_mirror_uses_p(self):
        w = asy.delta_weights(p0(A=2.0, B=1.0, p=2.0))
        assert w.w_energy == pytest.approx(2 * 1 / (2 * 2 * 1))
        assert w.w_exp == pytest.approx(1 / (1 * 2))


class TestLayerProfile:
    def test_four_eps_squared(self):
        eps = 1e-2
        U = asy.layer_profile(p0(eps), 1 - 4 * eps**2)
        psi = 2 * math.sqrt(2) + 4 / math.sqrt(2)
        assert psi == pytest.approx(5.65685, abs=1e-5)
        assert U == pytest.approx(-2 * math.log(1 / eps) + 2 * math.log(psi), rel=1e-13)

    def test_boundary_value(self):
        eps = 1e-3
        assert asy.layer_profile(p0(eps), 1.0) == pytest.approx(asy.boundary_expansion(p0()).at(eps), rel=1e-13)

    def test_power_one_and_a_half_limit(self):
        second = []
        for eps in (1e-4, 1e-6, 1e-8):
            U = asy.layer_profile(p0(eps), 1 - eps**1.5)
            second.append(U + math.log(1 / eps))
        assert abs(second[-1] + math.log(2)) < 1e-3
        assert abs(second[-1] + math.log(2)) < abs(second[0] + math.log(2))

    def test_variable_dielectric_quadrature(self):
        params = p0(0.05, dielectric={"kind": "polynomial", "coefficients": [1.0, 1.0]})
        r = np.array([0.9, 0.99])
        # integral of (1 + t)^(-1/2) is 2 sqrt(1 + t)
        exact_int = 2 * (math.sqrt(2) - np.sqrt(1 + r))
        gR = 2.0
        psi = 2 * math.sqrt(2 * gR) / 1 + math.sqrt(0.5) * exact_int / 0.05**2
        expected = 2 * (math.log(0.05) + np.log(psi))
        assert asy.layer_profile(params, r) == pytest.approx(expected, rel=1e-12)

    def test_out_of_domain(self):
        with pytest.raises(OutOfDomain):
            asy.layer_profile(p0(), 1.1)


class TestGradientClosure:
    def test_boundary_consistency(self):
        eps = 1e-3
        UR = asy.boundary_expansion(p0()).at(eps)
        assert asy.gradient_closure(p0(eps), UR, 1.0) == pytest.approx(-0.5, rel=1e-12)

    def test_zero_potential(self):
        assert asy.gradient_closure(p0(0.01), 0.0, 0.5) == pytest.approx(-math.sqrt(2) * 0.01)

    def test_doubling_A(self):
        a = asy.gradient_closure(p0(0.01), -3.0, 0.7)
        b = asy.gradient_closure(p0(0.01, A=2.0, B=3.0), -3.0, 0.7)
        assert b / a == pytest.approx(math.sqrt(2))


class TestCapacitanceLimit:
    def test_gamma_four(self):
        rep = asy.capacitance_limit(p0(), 4.0)
        assert rep.exact == pytest.approx(1 / (8 * math.log(2)), rel=1e-13)
        assert rep.exact == pytest.approx(0.180337, abs=1e-6)

    def test_gamma_tenth(self):
        rep = asy.capacitance_limit(p0(), 0.1)
        assert rep.exact == pytest.approx(0.24694, abs=1e-5)
        assert rep.combination == pytest.approx(0.24390, abs=1e-5)
        assert rep.supremum == 0.25

    def test_decreasing_in_gamma(self):
        vals = [asy.capacitance_limit(p0(), g).exact for g in (0.01, 0.1, 1, 10, 100)]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert all(v < 0.25 for v in vals)

    def test_small_gamma_limit(self):
        rep = asy.capacitance_limit(p0(), 1e-8)
        assert rep.exact == pytest.approx(0.25, rel=1e-6)

    def test_increasing_in_radius(self):
        assert asy.capacitance_limit(p0(R=2.0), 1.0).exact > asy.capacitance_limit(p0(), 1.0).exact

    @pytest.mark.parametrize("gamma", [0.0, -1.0])
    def test_non_positive_gamma(self, gamma):
        with pytest.raises(NonPositiveGamma):
            asy.capacitance_limit(p0(), gamma)
