"""End-to-end acceptance battery.

Each test prints a single pass/fail line for its criterion and asserts it.
"""

import math
import time

from renvol.checks import CheckResult, default_tolerance
from renvol.conformal import (
    bm_constant,
    check_conformal_covariance,
    check_pv_plus_q,
    gauss_bonnet_4d,
    gjms_apply,
    paneitz4_series,
    q4_series,
)
from renvol.geometry import (
    FuncProfile,
    PoincareModel,
    RadialMetric,
    SpaceForm,
    curvature_profile,
    poincare_einstein_model,
)
from renvol.scattering import (
    a_primes,
    anomaly_variation_check,
    conformal_scaling_check,
    poisson_solve,
    volume_via_scattering_even,
    volume_via_scattering_odd,
)
from renvol.series import LogSeries
from renvol.vequation import (
    check_lemma_3_1,
    check_q_vanishing,
    check_scalar_expansion,
    check_thm_1_1,
    compactify,
    solve_v,
    t_curvature_check,
)
from renvol.volume import (
    volume_expansion_fit,
    volume_expansion_series,
)


def model(n, kappa=1.0):
    return poincare_einstein_model(SpaceForm(n, kappa))


def report(num: int, desc: str, ok: bool) -> None:
    print(f"criterion {num:2d} [{'PASS' if ok else 'FAIL'}] {desc}")
    assert ok, f"criterion {num}: {desc}"


def test_criterion_1_hyperbolic_volumes():
    targets = {
        3: 4 * math.pi ** 2 / 3,
        5: -8 * math.pi ** 3 / 15,
        2: -2 * math.pi * math.log(2),
        4: math.pi ** 2 * math.log(2),
    }
    log_targets = {2: -2 * math.pi, 4: math.pi ** 2}
    t0 = time.perf_counter()
    ok = True
    for n, want in targets.items():
        m = model(n)
        for ve in (volume_expansion_series(m), volume_expansion_fit(m)):
            ok = ok and abs(ve.V - want) / abs(want) <= 1e-6
            if n in log_targets:
                ok = ok and abs(ve.L - log_targets[n]) / abs(
                    log_targets[n]) <= 1e-6
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 5.0
    report(1, f"renormalized volumes, series and fit ({elapsed:.1f}s)", ok)


def test_criterion_2_volume_q_curvature_closure():
    t0 = time.perf_counter()
    ok = True
    for n in (3, 5):
        m = model(n)
        sol = solve_v(m)
        chk = check_thm_1_1(sol, volume_expansion_series(m))
        ok = ok and chk["rel_err"] <= 1e-5
        if n == 3:
            ok = ok and abs(sol.Qn - 2.0) <= 1e-5
            ok = ok and abs(sol.kn - 3.0) <= 1e-12
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 30.0
    report(2, f"volume/Q-curvature closure, n=3,5 ({elapsed:.1f}s)", ok)


def test_criterion_3_compactified_chain():
    sol = solve_v(model(3))
    compact = compactify(sol)
    q4_max = check_q_vanishing(compact)
    ok = q4_max <= 1e-6
    t_chk = t_curvature_check(compact, sol.B0)
    ok = ok and t_chk["rel_err"] <= 1e-6
    chi = gauss_bonnet_4d(compactify(sol, form="numeric"),
                          slice_metric=compact)
    ok = ok and abs(chi - 1.0) <= 1e-4
    report(3, "compactified 4-dim chain: Q4 vanishes, T = 3*B0, "
              f"boundary integral gives chi = {chi:.6f}", ok)


def test_criterion_4_gauss_bonnet_assembly():
    flat_ball = RadialMetric(
        FuncProfile(lambda x: 1.0, lambda x: 0.0, lambda x: 0.0),
        FuncProfile(lambda x: x, lambda x: 1.0, lambda x: 0.0),
        SpaceForm(3, 1.0), (0.0, 1.0), (True, False))
    sphere = RadialMetric(
        FuncProfile(lambda x: 1.0, lambda x: 0.0, lambda x: 0.0),
        FuncProfile(math.sin, math.cos, lambda x: -math.sin(x)),
        SpaceForm(3, 1.0), (0.0, math.pi), (True, True))
    chi_ball = gauss_bonnet_4d(flat_ball)
    chi_sphere = gauss_bonnet_4d(sphere)
    ok = abs(chi_ball - 1.0) <= 1e-6 and abs(chi_sphere - 2.0) <= 1e-6
    report(4, f"Gauss-Bonnet: flat ball chi = {chi_ball:.8f}, "
              f"round sphere chi = {chi_sphere:.8f}", ok)


def test_criterion_5_six_dim_identity():
    V = volume_expansion_series(model(5)).V
    val = -15.0 / (8 * math.pi ** 3) * V
    ok = abs(val - 1.0) <= 1e-4
    report(5, f"-(15/8 pi^3) V = {val:.8f} for the 6-dim model", ok)


def test_criterion_6_parity_and_coefficient_lemmas():
    ok = True
    for n in (3, 5):
        sol = solve_v(model(n))
        compact = compactify(sol)
        chk = check_scalar_expansion(compact, sol.B0)
        ok = ok and chk["rel_err"] <= 1e-4
        ok = ok and chk["lower_odd_max"] <= 1e-6
        lem = check_lemma_3_1(compact, sol.B0, n)
        ok = ok and lem["rel_err"] <= 1e-4
    # the Laplacian-of-scalar coefficient of the fourth-order curvature is
    # exactly -1/6: reassemble Q4 from the constant and compare
    ok = ok and bm_constant(4) == -1.0 / 6.0
    m = poincare_einstein_model(SpaceForm(3, 1.0),
                                order=40).as_radial_metric()
    from renvol.geometry import curvature_profile as _cp
    cp = _cp(m)
    R = cp.series("R")
    rebuilt = (bm_constant(4) * m.laplacian_series(R)
               + (R * R - 3.0 * cp.series("ric_norm2")) / 6.0)
    q4 = q4_series(m)
    diff = max(abs(q4.coeff(k) - rebuilt.coeff(k))
               for k in range(0, min(q4.order, rebuilt.order) + 1, 2))
    ok = ok and diff == 0.0
    report(6, "scalar-curvature parity lemmas (n=3,5) and exact "
              "fourth-order coefficient -1/6", ok)


def test_criterion_7_conformal_covariance():
    m = poincare_einstein_model(SpaceForm(3, 1.0),
                                order=40).as_radial_metric()
    basket = [
        LogSeries.from_coeffs(c, exact=True).pad_to(40) for c in (
            [0.0, 0.2], [0.0, 0.0, 0.1], [0.0, -0.15, 0.0, 0.05],
            [0.0, 0.1, -0.05, 0.02], [0.0, 0.0, 0.0, 0.08],
        )]
    ok = True
    worst = 0.0
    for w in basket:
        res = check_conformal_covariance(m, w)
        worst = max(worst, res["q_identity"], res["operator_identity"])
    ok = worst <= 1e-5
    zero = check_conformal_covariance(m, LogSeries.zero(40))
    ok = ok and zero["q_identity"] == 0.0 and zero["operator_identity"] == 0.0
    report(7, f"conformal covariance over {len(basket)} factors, worst "
              f"residual {worst:.2e}, zero factor exact", ok)


def test_criterion_8_factorization_and_pv_plus_q():
    m = poincare_einstein_model(SpaceForm(3, 1.0),
                                order=40).as_radial_metric()
    basket = [
        LogSeries.from_coeffs(c, exact=True).pad_to(40) for c in (
            [1.0], [0.0, 1.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.3, -0.1],
            [0.0, 0.5, -0.2, 0.1, 0.05],
        )]
    worst = 0.0
    for u in basket:
        a = paneitz4_series(m, u)
        b = gjms_apply(m, u)
        worst = max(worst, max(
            abs(a.coeff(k) - b.coeff(k))
            for k in range(a.min_degree, min(a.order, b.order) + 1)))
    ok = worst <= 1e-6
    res3 = check_pv_plus_q(model(3), solve_v(model(3)))["max_residual"]
    res5 = check_pv_plus_q(model(5), solve_v(model(5)))["max_residual"]
    ok = ok and res3 <= 1e-5 and res5 <= 1e-4
    report(8, f"fourth-order operator vs product form ({worst:.2e}); "
              f"P v + Q residuals {res3:.2e} (n=3), {res5:.2e} (n=5)", ok)


def test_criterion_9_scattering_pipelines():
    t0 = time.perf_counter()
    ok = True
    # odd n: volume from the scattering derivative
    for n in (3, 5):
        m = model(n)
        Vq = volume_expansion_series(m).V
        Vs = volume_via_scattering_odd(m)
        ok = ok and abs(Vs - Vq) / abs(Vq) <= 1e-5
    # even n: anomaly pipelines against quadrature
    for n in (2, 4):
        m = model(n)
        rep = volume_via_scattering_even(m)
        ok = ok and abs(rep.V_scatter - rep.V_quadrature) / abs(
            rep.V_quadrature) <= 1e-5
        if n == 4:
            ok = ok and abs(rep.terms["curvature_term"]
                            + math.pi ** 2 / 3) <= 1e-8
    # closed-form expansion slopes vs finite differences
    m4 = model(4)
    a2p, a4p = a_primes(SpaceForm(4, 1.0), 4)
    h = 1e-3
    up, dn = poisson_solve(m4, 4 + h), poisson_solve(m4, 4 - h)
    ok = ok and abs((up.a_coeffs[0] - dn.a_coeffs[0]) / (2 * h)
                    - a2p) <= 1e-5
    ok = ok and abs((up.a_coeffs[1] - dn.a_coeffs[1]) / (2 * h)
                    - a4p) <= 1e-5
    ok = ok and abs(a2p - 0.5) <= 1e-12 and abs(a4p - 3.0 / 8.0) <= 1e-12
    # constant-factor conformal laws of the scattering data
    for n in (2, 4):
        m = model(n)
        ok = ok and conformal_scaling_check(m, 0.3)["rel_err"] <= 1e-4
        ok = ok and anomaly_variation_check(m, 1.0)["rel_err"] <= 1e-4
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 120.0
    report(9, f"scattering pipelines, odd and even n ({elapsed:.1f}s)", ok)


def _control_result(check_id: str, lhs: float, rhs: float) -> CheckResult:
    tol = default_tolerance(check_id)
    abs_err = abs(lhs - rhs)
    rel = abs_err if abs(rhs) < 1e-9 else abs_err / abs(rhs)
    return CheckResult(check_id, lhs, rhs, abs_err, rel, tol,
                       rel <= tol, 0)


def test_criterion_10_negative_controls():
    failing = []

    # 1% perturbation of the renormalized coefficient: the boundary
    # curvature no longer matches
    sol = solve_v(model(3))
    bad_b0 = 1.01 * sol.B0
    chk = t_curvature_check(compactify(sol, b0=bad_b0), sol.B0)
    failing.append(_control_result("lemma_2_2", chk["lhs"], chk["rhs"]))

    # omitted log basis term in the even-n fit: constant term absorbs the
    # divergence
    m2 = model(2)
    good = volume_expansion_series(m2).V
    bad = volume_expansion_fit(m2, include_log=False).V
    failing.append(_control_result("volume_fit_vs_series", bad, good))

    # non-Einstein warp: the curvature no longer satisfies the constant
    # scalar-curvature identity R = -n(n+1)
    n = 3
    warp = LogSeries.from_coeffs([1.0, 0.0, -0.25, 0.0, 0.02],
                                 exact=True).pad_to(16)
    bad_model = PoincareModel(SpaceForm(n, 1.0), warp, 1.0, False)
    cp = curvature_profile(bad_model.as_radial_metric())
    R = cp.series("R")
    resid = max(abs(R.coeff(k) + n * (n + 1) * (1.0 if k == 0 else 0.0))
                for k in range(0, 9))
    failing.append(_control_result("einstein_scalar", resid, 0.0))

    ok = all(not r.passed for r in failing)
    detail = ", ".join(f"{r.check_id} rel={r.rel_err:.2e}" for r in failing)
    report(10, f"negative controls each fail: {detail}", ok)
