"""Model geometries: space-form boundaries, the Poincare-type metrics
``x^{-2}(dx^2 + phi(x)^2 ghat)`` over them, general radial metrics
``h(x)^2 dx^2 + f(x)^2 ghat`` and their curvature.

Every metric here is cohomogeneity one over a space form, so the full
curvature tensor is determined by two sectional curvatures: the radial one
``K_rad`` (planes containing the radial direction) and the tangential one
``K_tan``.  All metrics in this class are conformally flat, which the Weyl
norm computed below confirms rather than assumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from renvol.series import LogSeries

__all__ = [
    "GeometryError",
    "SpaceForm",
    "PoincareModel",
    "RadialMetric",
    "CurvatureProfile",
    "SeriesProfile",
    "FuncProfile",
    "unit_sphere_volume",
    "poincare_einstein_model",
    "curvature_profile",
    "ricci_residual",
    "fg_g2",
    "fg_tr_g4",
    "volume_element_series",
    "vcoeffs",
    "sigma2_q4_relation",
    "boundary_second_fundamental_form",
]

DEFAULT_EXTRA_ORDER = 6


class GeometryError(ValueError):
    pass


def unit_sphere_volume(n: int) -> float:
    """Volume of the unit round sphere S^n."""
    return 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


@dataclass(frozen=True)
class SpaceForm:
    """Boundary slice geometry: constant sectional curvature kappa in
    dimension dim, with a declared total volume."""

    dim: int
    kappa: float
    total_volume: float | None = None
    euler_char: int | None = None

    def __post_init__(self):
        if self.dim < 2:
            raise GeometryError("space form dimension must be >= 2")
        if self.total_volume is None:
            if self.kappa > 0:
                r = 1.0 / math.sqrt(self.kappa)
                vol = r ** self.dim * unit_sphere_volume(self.dim)
            else:
                vol = 1.0  # collar normalization; no global claims
            object.__setattr__(self, "total_volume", vol)
        if self.total_volume <= 0:
            raise GeometryError("total_volume must be positive")

    @property
    def ricci_scalar(self) -> float:
        return self.dim * (self.dim - 1) * self.kappa

    @property
    def ricci_coeff(self) -> float:
        """Ric_ghat = ricci_coeff * ghat."""
        return (self.dim - 1) * self.kappa

    @property
    def ric_norm2(self) -> float:
        return self.dim * self.ricci_coeff ** 2

    def rescaled(self, w: float) -> "SpaceForm":
        """The space form representing e^{2w} ghat (constant w)."""
        return SpaceForm(self.dim, self.kappa * math.exp(-2 * w),
                         self.total_volume * math.exp(self.dim * w),
                         self.euler_char)


# ---------------------------------------------------------------------------
# radial profiles


class SeriesProfile:
    """Profile backed by a LogSeries in x."""

    def __init__(self, series: LogSeries):
        self.series = series
        self._derivs = [series]

    def value(self, x, k: int = 0):
        while len(self._derivs) <= k:
            self._derivs.append(self._derivs[-1].derivative())
        s = self._derivs[k]
        if np.ndim(x) == 0:
            return s.eval(float(x))
        return np.array([s.eval(float(t)) for t in np.ravel(x)]).reshape(
            np.shape(x))


class FuncProfile:
    """Profile backed by callables; missing derivatives fall back to
    Richardson-extrapolated central differences."""

    def __init__(self, *funcs: Callable[[float], float], fd_step: float = 1e-4):
        if not funcs:
            raise GeometryError("need at least the 0th derivative")
        self.funcs = funcs
        self.fd_step = fd_step

    def value(self, x, k: int = 0):
        if k < len(self.funcs):
            return self.funcs[k](x)
        base = len(self.funcs) - 1
        return self._fd(x, k - base, base)

    def _fd(self, x, m: int, base: int):
        f = self.funcs[base]
        h = self.fd_step

        def diff(step):
            if m == 1:
                return (f(x + step) - f(x - step)) / (2 * step)
            if m == 2:
                return (f(x + step) - 2 * f(x) + f(x - step)) / step ** 2
            raise GeometryError("finite differences beyond order 2 unsupported")

        d1, d2 = diff(h), diff(h / 2)
        return (4 * d2 - d1) / 3


Profile = SeriesProfile | FuncProfile


def _as_profile(p) -> Profile:
    if isinstance(p, (SeriesProfile, FuncProfile)):
        return p
    if isinstance(p, LogSeries):
        return SeriesProfile(p)
    if callable(p):
        return FuncProfile(p)
    raise GeometryError(f"cannot interpret {type(p)!r} as a radial profile")


# ---------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class PoincareModel:
    """g = x^{-2}(dx^2 + warp(x)^2 ghat) over a space form boundary."""

    boundary: SpaceForm
    warp: LogSeries
    x_center: float
    closes: bool

    @property
    def n(self) -> int:
        return self.boundary.dim

    def warp_log_derivative(self) -> LogSeries:
        """phi'/phi as a series."""
        return self.warp.derivative() / self.warp

    def as_radial_metric(self) -> "RadialMetric":
        h = LogSeries.from_coeffs([1.0], min_degree=-1, exact=True)
        f = self.warp.shift_degree(-1)
        return RadialMetric(SeriesProfile(h), SeriesProfile(f), self.boundary,
                            domain=(0.0, self.x_center),
                            closed_ends=(False, self.closes))


@dataclass(frozen=True)
class RadialMetric:
    """h(x)^2 dx^2 + f(x)^2 ghat over the boundary space form.

    closed_ends marks domain endpoints that are smooth centers (the metric
    closes up there); the remaining endpoints are boundary slices.
    """

    lapse: Profile
    warp: Profile
    boundary: SpaceForm
    domain: tuple[float, float]
    closed_ends: tuple[bool, bool] = (False, False)

    @property
    def n(self) -> int:
        return self.boundary.dim

    @property
    def dim(self) -> int:
        return self.boundary.dim + 1

    def series_form(self) -> tuple[LogSeries, LogSeries] | None:
        if isinstance(self.lapse, SeriesProfile) and isinstance(
                self.warp, SeriesProfile):
            return self.lapse.series, self.warp.series
        return None

    def h(self, x, k: int = 0):
        return self.lapse.value(x, k)

    def f(self, x, k: int = 0):
        return self.warp.value(x, k)

    def conformal(self, w: LogSeries) -> "RadialMetric":
        """e^{2w} g for a radial conformal factor given as a series."""
        sf = self.series_form()
        if sf is None:
            raise GeometryError("conformal rescale needs series profiles")
        # split off an integer multiple of log x: e^{j log x + u} = x^j e^u
        j = w.coeff(0, 1)
        if j:
            if j != int(j):
                raise GeometryError("log-part of conformal factor must be "
                                    "an integer multiple of log x")
            w = w - LogSeries.from_terms({(0, 1): j}, exact=True)
        ew = w.exp().shift_degree(int(j))
        h, f = sf
        return RadialMetric(SeriesProfile(ew * h), SeriesProfile(ew * f),
                            self.boundary, self.domain, self.closed_ends)

    # radial Laplacian: Delta u = (1/(h f^n)) d/dx ( (f^n/h) u' )

    def laplacian_series(self, u: LogSeries) -> LogSeries:
        h, f = self.series_form()
        fn = f.pow(self.n)
        return (fn / h * u.derivative()).derivative() / (h * fn)

    def laplacian_point(self, x: float, du: float, d2u: float) -> float:
        h, hp = self.h(x), self.h(x, 1)
        f, fp = self.f(x), self.f(x, 1)
        return d2u / h ** 2 + (self.n * fp / (f * h ** 2) - hp / h ** 3) * du

    def volume_density(self, x):
        """h f^n: radial density of dV against dx dv_ghat."""
        return self.h(x) * self.f(x) ** self.n

    def boundary_slices(self) -> list[tuple[float, int]]:
        """Boundary endpoints with outward direction (+1 / -1)."""
        out = []
        if not self.closed_ends[0]:
            out.append((self.domain[0], -1))
        if not self.closed_ends[1]:
            out.append((self.domain[1], +1))
        return out


def poincare_einstein_model(boundary: SpaceForm, x_center: float | None = None,
                            order: int | None = None) -> PoincareModel:
    """The Poincare-Einstein metric over a space form: warp
    phi = 1 - kappa x^2 / 4.  For kappa > 0 this closes up smoothly at
    x = 2/sqrt(kappa); flat and negatively curved boundaries give collars."""
    n = boundary.dim
    if order is None:
        order = n + DEFAULT_EXTRA_ORDER
    kappa = boundary.kappa
    warp = LogSeries.from_terms({(0, 0): 1.0, (2, 0): -kappa / 4.0},
                                exact=True).pad_to(order)
    if kappa > 0:
        return PoincareModel(boundary, warp, 2.0 / math.sqrt(kappa), True)
    if x_center is None:
        x_center = 1.0
    return PoincareModel(boundary, warp, x_center, False)


# ---------------------------------------------------------------------------
# curvature


class CurvatureProfile:
    """Curvature of a radial metric, as series (when profiles are series)
    and pointwise.

    All pointwise quantities are per-eigenvalue in an orthonormal frame:
    ric_rad = Ric(e_0, e_0), ric_tan = Ric(e_i, e_i) for tangential e_i.
    """

    def __init__(self, metric: RadialMetric):
        self.metric = metric
        self.n = metric.n
        sf = metric.series_form()
        self._series: dict[str, LogSeries] = {}
        if sf is not None:
            self._build_series(*sf)

    def _build_series(self, h: LogSeries, f: LogSeries):
        n = self.n
        kappa = self.metric.boundary.kappa
        q = f.derivative() / h
        k_rad = -(q.derivative() / h) / f
        k_tan = (LogSeries.constant(kappa) - q * q) / (f * f)
        self._series["k_rad"] = k_rad
        self._series["k_tan"] = k_tan
        self._series["lam"] = q / f
        self._series["ric_rad"] = n * k_rad
        self._series["ric_tan"] = k_rad + (n - 1) * k_tan
        self._series["R"] = 2 * n * k_rad + n * (n - 1) * k_tan

    def series(self, name: str) -> LogSeries:
        if name == "ric_norm2":
            rr, rt = self._series["ric_rad"], self._series["ric_tan"]
            return rr * rr + self.n * (rt * rt)
        if name == "riem_norm2":
            kr, kt = self._series["k_rad"], self._series["k_tan"]
            return 4 * self.n * (kr * kr) + 2 * self.n * (self.n - 1) * (kt * kt)
        if name == "weyl_norm2":
            m = self.n + 1
            return (self.series("riem_norm2")
                    - (4.0 / (m - 2)) * self.series("ric_norm2")
                    + (2.0 / ((m - 1) * (m - 2))) * self._series["R"]
                    * self._series["R"])
        if not self._series:
            raise GeometryError("metric has no series form")
        return self._series[name]

    # pointwise quantities

    def k_rad(self, x: float) -> float:
        m = self.metric
        h, hp = m.h(x), m.h(x, 1)
        f, fp, fpp = m.f(x), m.f(x, 1), m.f(x, 2)
        return -(fpp * h - fp * hp) / (f * h ** 3)

    def k_tan(self, x: float) -> float:
        m = self.metric
        return (m.boundary.kappa - (m.f(x, 1) / m.h(x)) ** 2) / m.f(x) ** 2

    def lam(self, x: float) -> float:
        m = self.metric
        return m.f(x, 1) / (m.h(x) * m.f(x))

    def ric_rad(self, x: float) -> float:
        return self.n * self.k_rad(x)

    def ric_tan(self, x: float) -> float:
        return self.k_rad(x) + (self.n - 1) * self.k_tan(x)

    def scalar(self, x: float) -> float:
        return 2 * self.n * self.k_rad(x) + self.n * (self.n - 1) * self.k_tan(x)

    def ric_norm2(self, x: float) -> float:
        return self.ric_rad(x) ** 2 + self.n * self.ric_tan(x) ** 2

    def riem_norm2(self, x: float) -> float:
        return (4 * self.n * self.k_rad(x) ** 2
                + 2 * self.n * (self.n - 1) * self.k_tan(x) ** 2)

    def weyl_norm2(self, x: float) -> float:
        m = self.n + 1
        return (self.riem_norm2(x) - 4.0 / (m - 2) * self.ric_norm2(x)
                + 2.0 / ((m - 1) * (m - 2)) * self.scalar(x) ** 2)

    def scalar_derivative(self, x: float, step: float = 1e-3) -> float:
        d1 = (self.scalar(x + step) - self.scalar(x - step)) / (2 * step)
        d2 = (self.scalar(x + step / 2) - self.scalar(x - step / 2)) / step
        return (4 * d2 - d1) / 3

    def laplacian_scalar(self, x: float, step: float = 1e-3) -> float:
        """Delta R by finite differences on the pointwise scalar curvature."""
        def d2(s):
            return (self.scalar(x + s) - 2 * self.scalar(x)
                    + self.scalar(x - s)) / s ** 2
        rpp = (4 * d2(step / 2) - d2(step)) / 3
        return self.metric.laplacian_point(x, self.scalar_derivative(x, step),
                                           rpp)

    def boundary_data(self, x0: float, outward: int) -> dict[str, float]:
        """Second-fundamental-form and normal-curvature data at the slice
        x = x0 with respect to the outward normal direction.  Series-backed
        metrics are evaluated analytically (exact at interior-regular
        endpoints); numeric profiles fall back to a clipped finite
        difference."""
        m = self.metric
        a, b = m.domain
        if self._series:
            x = x0
            degrees = [s.leading_degree() for s in self._series.values()
                       if np.any(s.coeffs)]
            if degrees and min(degrees) < 0:
                # poles at x = 0: stay strictly inside
                x = max(x, 1e-9 * max(1.0, b - a))
            lam = outward * self._series["lam"].eval(x)
            R = self._series["R"]
            return {
                "lam": lam,
                "H": self.n * lam,
                "F_nn": self.n * self._series["k_rad"].eval(x),
                "k_rad": self._series["k_rad"].eval(x),
                "k_tan": self._series["k_tan"].eval(x),
                "R": R.eval(x),
                "dR_dn": outward * R.derivative().eval(x) / m.h(x),
            }
        x = x0
        eps = 1e-7 * max(1.0, abs(b - a))
        if x <= a:
            x = a + eps
        elif x >= b:
            x = b - eps
        lam = outward * self.lam(x)
        return {
            "lam": lam,
            "H": self.n * lam,
            "F_nn": self.n * self.k_rad(x),
            "k_rad": self.k_rad(x),
            "k_tan": self.k_tan(x),
            "R": self.scalar(x),
            "dR_dn": outward * self.scalar_derivative(x) / m.h(x),
        }


def curvature_profile(m: RadialMetric | PoincareModel) -> CurvatureProfile:
    if isinstance(m, PoincareModel):
        m = m.as_radial_metric()
    for x in np.linspace(*m.domain, 7)[1:-1]:
        if m.f(x) <= 0 or m.h(x) <= 0:
            raise GeometryError("warp/lapse must be positive on the domain")
    return CurvatureProfile(m)


def ricci_residual(m: PoincareModel) -> LogSeries:
    """Componentwise magnitude of Ric_g + n g for the model (series in x).
    Vanishes identically for Einstein models."""
    cp = curvature_profile(m)
    n = m.n
    r0 = cp.series("ric_rad") + n
    rt = cp.series("ric_tan") + n
    lo = min(r0.min_degree, rt.min_degree)
    hi = min(r0.order, rt.order)
    coeffs = np.zeros((hi - lo + 1, 1))
    for i, k in enumerate(range(lo, hi + 1)):
        coeffs[i, 0] = max(abs(r0.coeff(k)), abs(rt.coeff(k)))
    return LogSeries(coeffs, lo)


def fg_g2(boundary: SpaceForm) -> float:
    """Scalar c with g^(2) = c ghat: the (negative) Schouten tensor of the
    space form, reducing to -(Ric - R/6 ghat)/2 in boundary dimension 4."""
    n = boundary.dim
    if n < 3:
        raise GeometryError("g^(2) normalization needs boundary dim >= 3")
    ric = boundary.ricci_coeff
    return -(ric - boundary.ricci_scalar / (2 * (n - 1))) / (n - 2)


def fg_tr_g4(boundary: SpaceForm) -> float:
    """Tr g^(4) = |g^(2)|^2 / 4 on a 4-dimensional boundary."""
    if boundary.dim != 4:
        raise GeometryError("Tr g^(4) formula is for boundary dimension 4")
    c2 = fg_g2(boundary)
    return 0.25 * boundary.dim * c2 ** 2


def volume_element_series(m: PoincareModel | RadialMetric) -> LogSeries:
    """mu(x) with dV = mu dx dv_ghat (boundary volume factored out)."""
    if isinstance(m, PoincareModel):
        n = m.n
        return m.warp.pow(n).shift_degree(-(n + 1))
    sf = m.series_form()
    if sf is None:
        raise GeometryError("volume element series needs series profiles")
    h, f = sf
    return h * f.pow(m.n)


def vcoeffs(boundary: SpaceForm, n: int) -> list[float]:
    """Even volume-element coefficients v^(2), ..., v^(n) of
    sqrt(det g_x / det ghat) = phi^n on the model class."""
    if n % 2:
        raise GeometryError("volume-element coefficients are used for even n")
    phi = LogSeries.from_terms({(0, 0): 1.0, (2, 0): -boundary.kappa / 4.0},
                               exact=True).pad_to(n + 2)
    phin = phi.pow(n)
    return [phin.coeff(2 * k) for k in range(1, n // 2 + 1)]


def sigma2_q4_relation(boundary: SpaceForm) -> tuple[float, float]:
    """(sigma_2, Q_4) of a 4-dimensional space form; they agree because the
    scalar curvature is constant."""
    if boundary.dim != 4:
        raise GeometryError("sigma_2/Q_4 relation stated for boundary dim 4")
    r = boundary.ricci_scalar
    sigma2 = (r ** 2 - 3.0 * boundary.ric_norm2) / 6.0
    return sigma2, sigma2


def boundary_second_fundamental_form(m: RadialMetric, x0: float,
                                     outward: int | None = None
                                     ) -> tuple[float, float]:
    """(H, L_diag) of the slice x = x0 w.r.t. the outward normal; outward
    defaults to the direction away from the domain interior."""
    if outward is None:
        a, b = m.domain
        outward = -1 if abs(x0 - a) <= abs(x0 - b) else +1
    data = curvature_profile(m).boundary_data(x0, outward)
    return data["H"], data["lam"]
