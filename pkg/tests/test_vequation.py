import math

import numpy as np
import pytest

from renvol.geometry import (
    SpaceForm,
    boundary_second_fundamental_form,
    poincare_einstein_model,
)
from renvol.vequation import (
    VSolveError,
    center_series,
    check_lemma_3_1,
    check_q_vanishing,
    check_scalar_expansion,
    check_thm_1_1,
    compactify,
    kn_constant,
    recursion_multipliers,
    solve_v,
    t_curvature_check,
    v_prime_closed_form,
    v_residual,
    w_recursion,
)
from renvol.volume import volume_expansion_series


def model(n, kappa=1.0):
    return poincare_einstein_model(SpaceForm(n, kappa))


@pytest.fixture(scope="module")
def sol3():
    return solve_v(model(3))


@pytest.fixture(scope="module")
def sol5():
    return solve_v(model(5))


class TestConstants:
    def test_kn_values(self):
        assert kn_constant(1) == pytest.approx(-1.0, rel=1e-14)
        assert kn_constant(3) == pytest.approx(3.0, rel=1e-14)
        assert kn_constant(5) == pytest.approx(-45.0, rel=1e-14)

    def test_kn_even_rejected(self):
        with pytest.raises(VSolveError):
            kn_constant(4)

    def test_recursion_multiplier_singular_exactly_at_n(self):
        for n in (3, 5):
            mults = recursion_multipliers(n, 20)
            zeros = [k + 1 for k, m in enumerate(mults) if m == 0.0]
            assert zeros == [n]


class TestBoundaryRecursion:
    def test_h4_first_coefficient(self):
        # v = log x - (3/4) x^2 + B0 x^3 + ... for the hyperbolic model
        w = w_recursion(model(3), 0.0)
        assert w.coeff(2) == pytest.approx(-0.75, rel=1e-14)
        assert w.coeff(1) == 0.0

    def test_free_coefficient_enters_linearly(self):
        m = model(3)
        w0 = w_recursion(m, 0.0)
        w1 = w_recursion(m, 1.0)
        w2 = w_recursion(m, 2.0)
        beta = w1 - w0
        assert beta.coeff(3) == pytest.approx(1.0)
        for k in range(20):
            assert w2.coeff(k) == pytest.approx(w0.coeff(k)
                                                + 2.0 * beta.coeff(k),
                                                abs=1e-12)

    def test_homogeneous_branch_parity(self):
        # the free branch carries only odd degrees >= n
        m = model(5)
        beta = w_recursion(m, 1.0) - w_recursion(m, 0.0)
        for k in range(beta.order + 1):
            if k < 5 or k % 2 == 0:
                assert abs(beta.coeff(k)) < 1e-12

    def test_even_n_obstructed(self):
        with pytest.raises(VSolveError):
            w_recursion(model(4), 0.0)

    def test_flat_boundary_trivial(self):
        # kappa = 0: psi = 0, the equation forces w = b0 x^n exactly
        w = w_recursion(model(3, 0.0), 0.7)
        assert w.coeff(3) == pytest.approx(0.7)
        assert max(abs(w.coeff(k)) for k in range(w.order + 1)
                   if k != 3) < 1e-14


class TestCenterSeries:
    def test_regular_and_normalized(self):
        vc = center_series(model(3))
        assert vc.coeff(0) == 0.0
        assert vc.coeff(1) == 0.0  # smooth center: dv/dt|_0 = 0
        assert vc.coeff(2) != 0.0

    def test_satisfies_equation_pointwise(self):
        m = model(3)
        vc = center_series(m, order=40)
        xc = m.x_center
        phi, dphi = m.warp, m.warp.derivative()
        for t in (0.05, 0.2, 0.5):
            x = xc - t
            vp = -vc.derivative().eval(t)
            vpp = vc.derivative().derivative().eval(t)
            xpsi = x * dphi.eval(x) / phi.eval(x)
            res = x * x * vpp + ((1 - 3) * x + 3 * x * xpsi) * vp + 3
            assert abs(res) < 1e-10

    def test_nonclosing_rejected(self):
        with pytest.raises(VSolveError):
            center_series(model(3, 0.0))


class TestSolveV:
    @pytest.mark.parametrize("fix,b0,qn", [("sol3", 2.0 / 3.0, 2.0),
                                           ("sol5", -8.0 / 15.0, 24.0)])
    def test_b0_and_qn(self, fix, b0, qn, request):
        sol = request.getfixturevalue(fix)
        assert sol.B0 == pytest.approx(b0, rel=1e-7)
        assert sol.Qn == pytest.approx(qn, rel=1e-7)

    def test_residual_and_stability(self, sol3, sol5):
        for sol in (sol3, sol5):
            assert sol.diagnostics["max_residual"] < 1e-8
            assert sol.diagnostics["B0_stability"] < 1e-6
            assert sol.diagnostics["max_odd_A_coeff"] < 1e-6

    def test_prime_matches_closed_form(self, sol3):
        vp = v_prime_closed_form(sol3.model)
        for x in np.geomspace(1e-2, 1.8, 12):
            assert sol3.v_prime(x) == pytest.approx(vp(x), rel=1e-8,
                                                    abs=1e-9)

    def test_profile_continuity_across_representations(self, sol3):
        # boundary-series / spline / center-series pieces must agree where
        # they hand over
        for x in (0.0999, 0.1001, 1.799, 1.801):
            left = sol3.v_profile(x - 1e-6)
            right = sol3.v_profile(x + 1e-6)
            assert right - left == pytest.approx(
                2e-6 * sol3.v_prime(x), abs=1e-9)

    def test_log_behavior_at_boundary(self, sol3):
        for x in (1e-3, 1e-2):
            assert sol3.v_profile(x) - math.log(x) == pytest.approx(
                -0.75 * x ** 2 + sol3.B0 * x ** 3, abs=1e-7)

    def test_residual_function(self, sol3):
        assert v_residual(sol3.model, sol3) < 1e-8

    def test_nonclosing_rejected(self):
        with pytest.raises(VSolveError):
            solve_v(model(3, 0.0))


class TestVolumeIdentity:
    def test_n3(self, sol3):
        chk = check_thm_1_1(sol3, volume_expansion_series(sol3.model))
        assert chk["rel_err"] < 1e-6

    def test_n5(self, sol5):
        chk = check_thm_1_1(sol5, volume_expansion_series(sol5.model))
        assert chk["rel_err"] < 1e-5

    def test_scales_with_boundary_volume(self, sol3):
        # halving the boundary volume halves both sides
        bnd = SpaceForm(3, 1.0, total_volume=math.pi ** 2)
        m = poincare_einstein_model(bnd)
        sol = solve_v(m)
        chk = check_thm_1_1(sol, volume_expansion_series(m))
        assert chk["rel_err"] < 1e-6
        assert chk["rhs"] == pytest.approx(2 * math.pi ** 2 / 3, rel=1e-9)

    def test_even_n_rejected(self, sol3):
        import dataclasses
        bad = dataclasses.replace(sol3, n=4)
        with pytest.raises(VSolveError):
            check_thm_1_1(bad, volume_expansion_series(sol3.model))


class TestCompactified:
    def test_boundary_expansion_structure(self, sol3):
        c = compactify(sol3)
        lapse = c.series_form()[0]
        assert lapse.coeff(0) == pytest.approx(1.0)
        assert lapse.coeff(1) == 0.0
        assert lapse.coeff(2) == pytest.approx(-0.75, rel=1e-12)
        assert lapse.coeff(3) == pytest.approx(sol3.B0, rel=1e-9)

    def test_totally_geodesic_boundary(self, sol3):
        c = compactify(sol3)
        lam, err = boundary_second_fundamental_form(c, 0.0)
        assert abs(lam) < 1e-5

    def test_numeric_form_matches_series_inside(self, sol3):
        cs = compactify(sol3)
        cn = compactify(sol3, form="numeric")
        for x in (0.1, 0.4, 0.8):
            assert cn.h(x) == pytest.approx(cs.h(x), rel=1e-9)
            assert cn.f(x) == pytest.approx(cs.f(x), rel=1e-9)

    def test_unknown_form_rejected(self, sol3):
        with pytest.raises(VSolveError):
            compactify(sol3, form="spectral")


class TestQVanishing:
    def test_q4_vanishes(self, sol3):
        assert check_q_vanishing(compactify(sol3)) < 1e-6

    def test_numeric_form_outer_region(self, sol3):
        from renvol.conformal import q4_curvature
        q4 = q4_curvature(compactify(sol3, form="numeric"))
        assert max(abs(q4(x)) for x in np.linspace(0.9, 1.6, 8)) < 1e-3

    def test_wrong_compactification_fails(self, sol3):
        # x^2 g (plain compactification, w = 0) does not kill Q_4
        from renvol.geometry import RadialMetric, SeriesProfile
        m = sol3.model
        plain = RadialMetric(SeriesProfile(m.warp.pad_to(10).pow(0)),
                             SeriesProfile(m.warp.pad_to(10)),
                             m.boundary, (0.0, m.x_center), (False, True))
        assert check_q_vanishing(plain) > 1e-2

    def test_perturbed_b0_still_vanishes(self, sol3):
        # vanishing of Q_4 is a local consequence of the equation and holds
        # for any value of the free coefficient; the regular one is singled
        # out by the boundary-curvature checks, not by this one
        bad = compactify(sol3, b0=sol3.B0 * 1.01)
        assert check_q_vanishing(bad) < 1e-6

    def test_hyperbolic_metric_does_not_vanish(self, sol3):
        from renvol.conformal import q4_curvature
        q4 = q4_curvature(sol3.model.as_radial_metric())
        assert q4(0.5) == pytest.approx(6.0, rel=1e-9)


class TestCompactCurvature:
    def test_scalar_expansion_n3(self, sol3):
        chk = check_scalar_expansion(compactify(sol3), sol3.B0)
        assert chk["rhs"] == pytest.approx(-36.0 * sol3.B0)
        assert chk["rel_err"] < 1e-7
        assert chk["lower_odd_max"] < 1e-6

    def test_scalar_expansion_n5(self, sol5):
        chk = check_scalar_expansion(compactify(sol5), sol5.B0)
        assert chk["rhs"] == pytest.approx(-200.0 * sol5.B0)
        assert chk["rel_err"] < 1e-6
        assert chk["lower_odd_max"] < 1e-6

    @pytest.mark.parametrize("fix,n", [("sol3", 3), ("sol5", 5)])
    def test_laplacian_power_slope(self, fix, n, request):
        sol = request.getfixturevalue(fix)
        chk = check_lemma_3_1(compactify(sol), sol.B0, n)
        assert chk["rel_err"] < 1e-6

    def test_t_curvature(self, sol3):
        chk = t_curvature_check(compactify(sol3), sol3.B0, Qn=sol3.Qn)
        assert chk["rel_err"] < 1e-8
        assert chk["Qn_diff"] < 1e-8

    def test_t_curvature_perturbed_b0_fails(self, sol3):
        chk = t_curvature_check(compactify(sol3, b0=sol3.B0 * 1.01),
                                sol3.B0)
        assert chk["rel_err"] > 1e-3

    def test_scalar_expansion_perturbed_b0_fails(self, sol5):
        chk = check_scalar_expansion(compactify(sol5, b0=sol5.B0 * 1.01),
                                     sol5.B0)
        assert chk["rel_err"] > 1e-3


class TestConformalInvariance:
    def test_q_times_volume_invariant(self):
        # Qn * boundary volume is unchanged under rescaling the boundary
        # representative
        base = solve_v(model(3))
        resc = solve_v(poincare_einstein_model(SpaceForm(3, 1.0)
                                               .rescaled(0.3)))
        lhs = base.Qn * base.model.boundary.total_volume
        rhs = resc.Qn * resc.model.boundary.total_volume
        assert lhs == pytest.approx(rhs, rel=1e-7)
