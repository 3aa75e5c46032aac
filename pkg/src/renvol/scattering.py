"""Radial scattering solver on the Poincare-type models.

For real s > n/2 the equation (-Delta - s(n-s)) u = 0 with regularity at
the center has boundary behaviour u = x^{n-s} F(x,s) + x^s G(x,s); with
boundary data 1 (F|_{x=0} = 1) the scattering value is S(s)1 = G|_{x=0}.
Its s-derivative at s = n reproduces the renormalized volume (odd n) or
the volume up to local curvature terms (even n).

The solver mirrors the v-equation pipeline: Frobenius branch series at the
boundary, a regular expansion at the center, RK4 in xi = log x at two
resolutions combined by Richardson extrapolation, and a linear fit of the
global solution against the two branch series on a boundary window.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from renvol.geometry import PoincareModel, SpaceForm, fg_g2, vcoeffs
from renvol.series import LogSeries
from renvol.vequation import SERIES_ORDER, _flip, _rk4, _xpsi
from renvol.volume import volume_expansion_series

__all__ = [
    "ScatteringError",
    "ScatteringSolution",
    "AnomalyReport",
    "ck_constant",
    "indicial_roots",
    "branch_series",
    "poisson_solve",
    "scattering_value",
    "scattering_derivative",
    "volume_via_scattering_odd",
    "a_primes",
    "volume_via_scattering_even",
    "conformal_scaling_check",
    "anomaly_variation_check",
]

RESONANCE_BAND = 1e-2


class ScatteringError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScatteringSolution:
    model: PoincareModel
    s: float
    u_profile: Callable[[float], float]
    F_coeffs: dict[int, float]
    G_coeffs: dict[int, float]
    S_value: float
    a_coeffs: tuple[float, float]
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class AnomalyReport:
    n: int
    S_deriv: float
    V_scatter: float
    V_quadrature: float
    terms: dict
    tolerances: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"n": self.n, "S_deriv": self.S_deriv,
                "V_scatter": self.V_scatter,
                "V_quadrature": self.V_quadrature, "terms": self.terms,
                "tolerances": self.tolerances}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def ck_constant(k: int) -> float:
    """c_k = (-1)^k / (2^{2k} k! (k-1)!)."""
    if k < 1:
        raise ScatteringError("c_k defined for k >= 1")
    return (-1.0) ** k / (2.0 ** (2 * k) * math.factorial(k)
                          * math.factorial(k - 1))


def indicial_roots(n: int, s: float) -> tuple[float, float]:
    """Characteristic exponents of the radial reduction at x = 0: the
    quadratic rho^2 - n rho + s(n-s) factors as (rho - s)(rho - (n-s))."""
    return (s, n - s)


def _check_resonance(n: int, s: float) -> None:
    """Guard band around the interior indicial collisions s = n/2 + j,
    1 <= j < n/2.  The collision at s = n (j = n/2) is exempt: with
    constant boundary data the resonant numerator vanishes there, so the
    branch recursion stays finite (the trivial solution is u = 1)."""
    for j in range(1, (n + 1) // 2):
        if abs(s - (n / 2 + j)) < RESONANCE_BAND:
            raise ScatteringError(
                f"s = {s} is within the guard band of the indicial "
                f"collision at n/2 + {j}")


def branch_series(model: PoincareModel, s: float, rho: float,
                  order: int = SERIES_ORDER) -> LogSeries:
    """The Frobenius branch x^rho sum_k a_k x^k (a_0 = 1) of
    x^2 u'' + ((1-n)x + n x^2 psi) u' + s(n-s) u = 0; recursion multiplier
    k (k + 2 rho - n).  Near-zero multipliers are only crossed when the
    numerator vanishes with them (odd k by parity; k = 2s-n ~ n for
    constant data); a genuinely obstructed step raises."""
    n = model.n
    p = _xpsi(model, order)
    a = np.zeros(order + 1)
    a[0] = 1.0
    for k in range(1, order + 1):
        conv = sum(p.coeff(k - j) * (rho + j) * a[j] for j in range(k - 1))
        num = -n * conv
        mult = k * (k + 2 * rho - n)
        if abs(mult) < 1e-8:
            if abs(num) > 1e-8:
                raise ScatteringError(
                    f"obstructed branch recursion at degree {k}")
            a[k] = 0.0
        else:
            a[k] = num / mult
        if abs(a[k]) > 1e8:
            raise ScatteringError(
                f"branch recursion blow-up at degree {k}: s too close to "
                "an indicial collision")
    out = LogSeries.from_coeffs(a, exact=False)
    if rho == 0.0:
        return out
    return out  # exponent x^rho handled at evaluation sites


def _center_u_series(model: PoincareModel, s: float, order: int = 30
                     ) -> LogSeries:
    """Regular expansion of u in t = x_center - x with u(center) = 1:
    alpha u_tt - beta u_t = -s(n-s) phi u, same alpha/beta as the
    v-equation center expansion."""
    n = model.n
    xc = model.x_center
    phi_t = _flip(model.warp.taylor_at(xc))
    dphi_t = _flip(model.warp.derivative().taylor_at(xc))
    x_t = LogSeries.from_coeffs([xc, -1.0], exact=True)
    alpha = x_t * x_t * phi_t
    beta = (1 - n) * (x_t * phi_t) + n * (x_t * x_t * dphi_t)
    lam = s * (n - s)

    u = np.zeros(order + 1)
    u[0] = 1.0
    for m in range(order):
        acc = 0.0
        for k in range(1, m + 1):
            acc += u[k] * (k * (k - 1) * alpha.coeff(m - k + 2)
                           - k * beta.coeff(m - k + 1))
        rhs = -lam * sum(phi_t.coeff(j) * u[m - j] for j in range(m + 1))
        mult = (m + 1) * (m * alpha.coeff(1) - beta.coeff(0))
        u[m + 1] = (rhs - acc) / mult
    return LogSeries.from_coeffs(u, exact=False)


def poisson_solve(model: PoincareModel, s: float, nsteps: int = 1600,
                  window: tuple[float, float] | None = None,
                  order: int = SERIES_ORDER) -> ScatteringSolution:
    """Solve (-Delta - s(n-s)) u = 0 with regularity at the center,
    normalized so the x^{n-s} branch has unit leading coefficient;
    S(s)1 is the leading coefficient of the x^s branch."""
    if not model.closes:
        raise ScatteringError("global scattering solve needs a closing "
                              "model")
    n = model.n
    if not s > n / 2:
        raise ScatteringError("solver parametrized on the branch s > n/2")
    _check_resonance(n, s)
    xc = model.x_center
    if window is None:
        # the x^s branch signal on the window floor scales like x0^{2s-n};
        # for n >= 4 the default boundary window leaves it at the RK4 noise
        # floor, so a wider window is used
        window = (1e-3, 1e-1) if n <= 3 else (0.02, 0.4)

    if s == float(n):
        # the constant solution: F = 1, G read off by continuity elsewhere
        return ScatteringSolution(
            model, s, lambda x: 1.0, {0: 1.0}, {}, math.nan, (0.0, 0.0),
            {"trivial": True})

    Fb = branch_series(model, s, n - s, order)
    Gb = branch_series(model, s, s, order)

    delta = 0.1 * xc
    uc = _center_u_series(model, s)
    x_start = xc - delta
    u_start = uc.eval(delta)
    p_start = -x_start * uc.derivative().eval(delta)

    lam = s * (n - s)

    def rk4(nst):
        # reuse the v-equation stepper shape with the scattering RHS
        phi = model.warp
        dphi = model.warp.derivative()

        def rhs(xi, y):
            x = math.exp(xi)
            xpsi = x * dphi.eval(x) / phi.eval(x)
            return np.array([y[1], n * y[1] * (1.0 - xpsi) - lam * y[0]])

        xi0, xi1 = math.log(x_start), math.log(window[0])
        h = (xi1 - xi0) / nst
        xs = xi0 + h * np.arange(nst + 1)
        out = np.empty((nst + 1, 2))
        y = np.array([u_start, p_start])
        out[0] = y
        for i in range(nst):
            xi = xs[i]
            k1 = rhs(xi, y)
            k2 = rhs(xi + h / 2, y + h / 2 * k1)
            k3 = rhs(xi + h / 2, y + h / 2 * k2)
            k4 = rhs(xi + h, y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            out[i + 1] = y
        return xs, out[:, 0], out[:, 1]

    xs1, u1, p1 = rk4(nsteps)
    xs2, u2, p2 = rk4(2 * nsteps)
    uR = (16.0 * u2[::2] - u1) / 15.0
    pR = (16.0 * p2[::2] - p1) / 15.0
    xg = np.exp(xs1)

    def fit(mask) -> tuple[float, float]:
        if mask.sum() < 4:
            raise ScatteringError("fit window too narrow")
        xm = xg[mask]
        colF = xm ** (n - s) * np.array([Fb.eval(x) for x in xm])
        colG = xm ** s * np.array([Gb.eval(x) for x in xm])
        A = np.column_stack([colF, colG])
        scale = np.linalg.norm(A, axis=0)
        coef, *_ = np.linalg.lstsq(A / scale, uR[mask], rcond=None)
        coef = coef / scale
        return float(coef[0]), float(coef[1])

    mask = (xg >= window[0]) & (xg <= window[1])
    cF, cG = fit(mask)
    half_hi = math.exp(0.5 * (math.log(window[0]) + math.log(window[1])))
    _, cG_half = fit((xg >= window[0]) & (xg <= half_hi))
    if abs(cF) < 1e-12:
        raise ScatteringError("degenerate extraction: vanishing x^{n-s} "
                              "branch coefficient")
    S_value = cG / cF

    spline_pts = xs1[::-1]
    uvals = (uR / cF)[::-1]
    from scipy.interpolate import CubicSpline
    spline_u = CubicSpline(spline_pts, uvals)

    def u_profile(x: float) -> float:
        if x <= window[1]:
            return (x ** (n - s) * Fb.eval(x)
                    + S_value * x ** s * Gb.eval(x))
        if x >= x_start:
            return uc.eval(xc - x) / cF
        return float(spline_u(math.log(x)))

    F_coeffs = {k: Fb.coeff(k) for k in range(min(order, 8) + 1)}
    G_coeffs = {k: S_value * Gb.coeff(k) for k in range(min(order, 8) + 1)}
    sol = ScatteringSolution(
        model, s, u_profile, F_coeffs, G_coeffs, S_value,
        (Fb.coeff(2), Fb.coeff(4)),
        {"cF": cF, "S_window_halved": cG_half / cF,
         "S_stability": abs(cG - cG_half) / max(abs(cF), 1e-300),
         "window": list(window), "nsteps": nsteps})
    res = scattering_residual(model, sol)
    object.__setattr__(sol, "diagnostics",
                       {**sol.diagnostics, "max_residual": res})
    return sol


def scattering_residual(model: PoincareModel, sol: ScatteringSolution,
                        grid: np.ndarray | None = None) -> float:
    """max |x^2 u'' + ((1-n)x + n x^2 psi) u' + s(n-s) u| over a check
    grid, from the analytic endpoint expansions."""
    n = model.n
    s = sol.s
    xc = model.x_center
    lam = s * (n - s)
    if sol.diagnostics.get("trivial"):
        return 0.0
    if grid is None:
        grid = np.concatenate([np.geomspace(2e-3, 0.5 * xc, 25),
                               xc - np.geomspace(1e-3, 0.5 * xc, 25)])
    Fb = branch_series(model, s, n - s)
    Gb = branch_series(model, s, s)
    uc = _center_u_series(model, s, order=50)
    cF = sol.diagnostics["cF"]
    phi, dphi = model.warp, model.warp.derivative()

    def boundary_uvals(x):
        # u and derivatives from the two-branch form
        out = []
        for rho, ser, c in ((n - s, Fb, 1.0), (s, Gb, sol.S_value)):
            f0 = ser.eval(x)
            f1 = ser.derivative().eval(x)
            f2 = ser.derivative().derivative().eval(x)
            u = c * x ** rho * f0
            up = c * (rho * x ** (rho - 1) * f0 + x ** rho * f1)
            upp = c * (rho * (rho - 1) * x ** (rho - 2) * f0
                       + 2 * rho * x ** (rho - 1) * f1 + x ** rho * f2)
            out.append((u, up, upp))
        return tuple(map(sum, zip(*out)))

    worst = 0.0
    for x in grid:
        if x <= 0.5 * xc:
            u, up, upp = boundary_uvals(x)
        else:
            t = xc - x
            u = uc.eval(t) / cF
            up = -uc.derivative().eval(t) / cF
            upp = uc.derivative().derivative().eval(t) / cF
        xpsi = x * dphi.eval(x) / phi.eval(x)
        res = x * x * upp + ((1 - n) * x + n * x * xpsi) * up + lam * u
        worst = max(worst, abs(res) / max(1.0, abs(u)))
    return worst


def scattering_value(model: PoincareModel, s: float, **kw) -> float:
    """S(s)1; at s = n (where the solver branch is trivial) the value is
    obtained by quadratic extrapolation from s = n - h, n - 2h, n - 3h."""
    n = model.n
    if abs(s - n) > 1e-9:
        return poisson_solve(model, s, **kw).S_value
    h = 1e-3
    svals = [n - h, n - 2 * h, n - 3 * h]
    yvals = [poisson_solve(model, t, **kw).S_value for t in svals]
    # quadratic through the three points, evaluated at s = n
    coeffs = np.polyfit(np.array(svals) - n, yvals, 2)
    return float(coeffs[-1])


def scattering_derivative(model: PoincareModel, step: float = 1e-3,
                          **kw) -> float:
    """S-dot = d/ds|_{s=n} S(s)1 by central differences at steps
    (step, step/10) combined by Richardson extrapolation."""
    n = model.n

    def central(h):
        up = poisson_solve(model, n + h, **kw).S_value
        dn = poisson_solve(model, n - h, **kw).S_value
        return (up - dn) / (2 * h)

    h1, h2 = step, step / 10
    d1, d2 = central(h1), central(h2)
    return (h1 ** 2 * d2 - h2 ** 2 * d1) / (h1 ** 2 - h2 ** 2)


def volume_via_scattering_odd(model: PoincareModel, **kw) -> float:
    """V = -S-dot * vol(boundary) for odd n."""
    if model.n % 2 == 0:
        raise ScatteringError("this volume formula is the odd-n case")
    return -scattering_derivative(model, **kw) * model.boundary.total_volume


def a_primes(boundary: SpaceForm, n: int) -> tuple[float, float]:
    """s-derivatives at s = n of the x^2 and x^4 coefficients of F for
    n = 4: a2' = -(1/4) Tr g2, a4' = (1/32)(3 (Tr g2)^2) with the
    tangential-Laplacian term zero on space forms."""
    if n != 4:
        raise ScatteringError("closed forms implemented for n = 4")
    tr_g2 = boundary.dim * fg_g2(boundary)
    return (-tr_g2 / 4.0, 3.0 * tr_g2 ** 2 / 32.0)


def volume_via_scattering_even(model: PoincareModel, **kw) -> AnomalyReport:
    """Renormalized volume from the scattering derivative for even n:
    n = 2: V = -S-dot * vol; n = 4: V = -(1/(32*36)) R^2 vol - S-dot * vol,
    with the generic-form term breakdown (-S-dot, -(1/n) 2 a2' v2, -a4')
    also reported."""
    n = model.n
    if n not in (2, 4):
        raise ScatteringError("even-n volume formula implemented for "
                              "n in {2, 4}")
    bvol = model.boundary.total_volume
    sd = scattering_derivative(model, **kw)
    Vq = volume_expansion_series(model).V
    terms: dict = {"S_deriv_term": -sd * bvol}
    if n == 2:
        V = -sd * bvol
    else:
        R = model.boundary.ricci_scalar
        curvature_term = -(R ** 2) / (32.0 * 36.0) * bvol
        terms["curvature_term"] = curvature_term
        a2p, a4p = a_primes(model.boundary, 4)
        v2 = vcoeffs(model.boundary, 4)[0]
        terms["a2_term"] = -(1.0 / n) * 2.0 * a2p * v2 * bvol
        terms["a4_term"] = -a4p * bvol
        V = curvature_term - sd * bvol
        terms["breakdown_total"] = (terms["S_deriv_term"] + terms["a2_term"]
                                    + terms["a4_term"])
    return AnomalyReport(n, sd, V, Vq, terms,
                         {"pipeline_rel_err":
                          abs(V - Vq) / max(abs(Vq), 1e-300)})


def conformal_scaling_check(model: PoincareModel, w_const: float,
                            s: float | None = None, **kw) -> dict:
    """Constant conformal rescaling of the boundary representative:
    S_{gw}(s)1 = e^{(n-2s)w} S(s)1, and at s = n the limit values obey
    e^{nw} S_{gw}(n)1 = S(n)1."""
    n = model.n
    if s is None:
        s = n - 0.3
    from renvol.geometry import poincare_einstein_model
    mw = poincare_einstein_model(model.boundary.rescaled(w_const))
    lhs = scattering_value(mw, s, **kw)
    rhs = math.exp((n - 2 * s) * w_const) * scattering_value(model, s, **kw)
    out = {"s": s, "lhs": lhs, "rhs": rhs,
           "rel_err": abs(lhs - rhs) / max(abs(rhs), 1e-300)}
    lim_w = scattering_value(mw, float(n), **kw)
    lim = scattering_value(model, float(n), **kw)
    out["limit_lhs"] = math.exp(n * w_const) * lim_w
    out["limit_rhs"] = lim
    out["limit_rel_err"] = abs(out["limit_lhs"] - lim) / max(abs(lim),
                                                             1e-300)
    return out


def anomaly_variation_check(model: PoincareModel, w_const: float,
                            alpha_step: float = 1e-3, **kw) -> dict:
    """d/dalpha|_0 of the integrated scattering derivative under the
    conformal family e^{2 alpha w} ghat equals -2 c_{n/2} * integral of
    w Q_n (even n); Q_n is read from the S(n)1 limit, S(n)1 = c_{n/2} Q_n.
    Constant w only: the radial solver cannot represent non-constant
    boundary data."""
    n = model.n
    if n % 2:
        raise ScatteringError("anomaly variation stated for even n")
    from renvol.geometry import poincare_einstein_model

    def integrated(alpha):
        bnd = model.boundary.rescaled(alpha * w_const)
        m = poincare_einstein_model(bnd)
        return scattering_derivative(m, **kw) * bnd.total_volume

    def central(h):
        return (integrated(h) - integrated(-h)) / (2 * h)

    d1, d2 = central(2 * alpha_step), central(alpha_step)
    lhs = (4.0 * d2 - d1) / 3.0
    c = ck_constant(n // 2)
    Sn = scattering_value(model, float(n), **kw)
    Qn = Sn / c
    rhs = -2.0 * c * w_const * Qn * model.boundary.total_volume
    scale = max(abs(rhs), abs(lhs), 1e-12)
    return {"lhs": lhs, "rhs": rhs, "Qn": Qn, "S_n_limit": Sn,
            "rel_err": abs(lhs - rhs) / scale}
