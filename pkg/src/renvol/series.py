"""Truncated log-power series arithmetic.

A :class:`LogSeries` represents sums of terms ``c * x**k * log(x)**j`` with
``k`` ranging over ``min_degree .. order`` (``min_degree`` may be negative)
and ``j`` over ``0 .. log_depth``.  All operations are pure; instances are
immutable and safe to share between threads.

Truncation bookkeeping: ``order`` is the highest degree whose coefficient is
certified.  Arithmetic never fabricates coefficients -- the result of a mixed
operation carries the smallest order that is actually valid.  A series with
``exact=True`` promises that every coefficient beyond ``order`` is exactly
zero (a polynomial), which relaxes the truncation rules.
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "LogSeries",
    "SeriesDomainError",
    "SingularDivisionError",
]


class SeriesDomainError(ValueError):
    """Operation applied outside its domain of validity."""


class SingularDivisionError(ZeroDivisionError):
    """Division by a series whose leading coefficient vanishes."""


def _binom(p: float, k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= (p - i) / (i + 1)
    return out


class LogSeries:
    __slots__ = ("coeffs", "min_degree", "order", "exact")

    def __init__(self, coeffs, min_degree: int = 0, exact: bool = False):
        arr = np.atleast_2d(np.asarray(coeffs, dtype=float))
        if arr.ndim != 2:
            raise ValueError("coeffs must be a 1-D or 2-D array")
        if arr.shape[0] == 0:
            arr = np.zeros((1, max(1, arr.shape[1])))
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        self.coeffs = arr
        self.min_degree = int(min_degree)
        self.order = self.min_degree + arr.shape[0] - 1
        self.exact = bool(exact)

    # -- construction -----------------------------------------------------

    @classmethod
    def zero(cls, order: int = 0, min_degree: int = 0) -> "LogSeries":
        n = order - min_degree + 1
        return cls(np.zeros((n, 1)), min_degree, exact=True)

    @classmethod
    def constant(cls, c: float, order: int = 0) -> "LogSeries":
        out = np.zeros((order + 1, 1))
        out[0, 0] = c
        return cls(out, 0, exact=True)

    @classmethod
    def one(cls, order: int = 0) -> "LogSeries":
        return cls.constant(1.0, order)

    @classmethod
    def x(cls, order: int = 1) -> "LogSeries":
        out = np.zeros((order + 1, 1))
        out[1, 0] = 1.0
        return cls(out, 0, exact=True)

    @classmethod
    def log_x(cls, order: int = 0) -> "LogSeries":
        out = np.zeros((order + 1, 2))
        out[0, 1] = 1.0
        return cls(out, 0, exact=True)

    @classmethod
    def from_coeffs(cls, coeffs: Iterable[float], min_degree: int = 0,
                    exact: bool = False) -> "LogSeries":
        col = np.asarray(list(coeffs), dtype=float).reshape(-1, 1)
        return cls(col, min_degree, exact=exact)

    @classmethod
    def from_terms(cls, terms: Mapping[tuple[int, int], float],
                   order: int | None = None, exact: bool = False) -> "LogSeries":
        kmin = min(k for k, _ in terms)
        kmax = max(k for k, _ in terms)
        jmax = max(j for _, j in terms)
        if order is None:
            order = kmax
        out = np.zeros((order - kmin + 1, jmax + 1))
        for (k, j), c in terms.items():
            out[k - kmin, j] = c
        return cls(out, kmin, exact=exact)

    # -- basic queries -----------------------------------------------------

    @property
    def log_depth(self) -> int:
        return self.coeffs.shape[1] - 1

    def coeff(self, k: int, j: int = 0) -> float:
        """Coefficient of x^k (log x)^j; zero if absent."""
        i = k - self.min_degree
        if 0 <= i < self.coeffs.shape[0] and 0 <= j < self.coeffs.shape[1]:
            return float(self.coeffs[i, j])
        return 0.0

    def _lead_index(self) -> int:
        nz = np.nonzero(np.any(self.coeffs != 0.0, axis=1))[0]
        if nz.size == 0:
            raise SingularDivisionError("series is identically zero")
        return int(nz[0])

    def leading_degree(self) -> int:
        return self.min_degree + self._lead_index()

    def trimmed(self) -> "LogSeries":
        """Drop exactly-zero leading rows and zero log columns."""
        rows = np.any(self.coeffs != 0.0, axis=1)
        cols = np.any(self.coeffs != 0.0, axis=0)
        i0 = int(np.argmax(rows)) if rows.any() else 0
        j1 = int(np.nonzero(cols)[0][-1]) + 1 if cols.any() else 1
        return LogSeries(self.coeffs[i0:, :j1], self.min_degree + i0,
                         exact=self.exact)

    def pad_to(self, order: int) -> "LogSeries":
        """Extend an exact series with explicit zero coefficients."""
        if not self.exact:
            raise SeriesDomainError("pad_to requires an exact series")
        if order <= self.order:
            return self
        extra = np.zeros((order - self.order, self.coeffs.shape[1]))
        return LogSeries(np.vstack([self.coeffs, extra]), self.min_degree,
                         exact=True)

    def truncate(self, order: int) -> "LogSeries":
        if order >= self.order:
            return self if not self.exact else self.pad_to(order)
        n = order - self.min_degree + 1
        if n < 1:
            return LogSeries.zero(order, order)
        return LogSeries(self.coeffs[:n], self.min_degree, exact=False)

    def is_plain(self) -> bool:
        """True when no log terms are present (depth 0 after trimming)."""
        return self.coeffs.shape[1] == 1 or not np.any(self.coeffs[:, 1:])

    # -- arithmetic --------------------------------------------------------

    def _aligned(self, other: "LogSeries"):
        lo = min(self.min_degree, other.min_degree)
        if self.exact and other.exact:
            hi = max(self.order, other.order)
        elif self.exact:
            hi = other.order
        elif other.exact:
            hi = self.order
        else:
            hi = min(self.order, other.order)
        jd = max(self.log_depth, other.log_depth)
        out_shape = (hi - lo + 1, jd + 1)

        def place(s: "LogSeries"):
            buf = np.zeros(out_shape)
            i0 = s.min_degree - lo
            n = min(s.coeffs.shape[0], out_shape[0] - i0)
            if n > 0:
                buf[i0:i0 + n, : s.coeffs.shape[1]] = s.coeffs[:n]
            return buf

        return place(self), place(other), lo, self.exact and other.exact

    def __add__(self, other):
        other = _as_series(other)
        a, b, lo, exact = self._aligned(other)
        return LogSeries(a + b, lo, exact=exact)

    def __radd__(self, other):
        return self.__add__(other)

    def __sub__(self, other):
        other = _as_series(other)
        a, b, lo, exact = self._aligned(other)
        return LogSeries(a - b, lo, exact=exact)

    def __rsub__(self, other):
        return _as_series(other).__sub__(self)

    def __neg__(self):
        return LogSeries(-self.coeffs, self.min_degree, exact=self.exact)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return LogSeries(self.coeffs * float(other), self.min_degree,
                             exact=self.exact)
        other = _as_series(other)
        a, b = self, other
        lo = a.min_degree + b.min_degree
        caps = []
        if not a.exact:
            caps.append(a.order + b.min_degree)
        if not b.exact:
            caps.append(b.order + a.min_degree)
        exact = not caps
        hi = a.order + b.order if exact else min(caps)
        nrows = hi - lo + 1
        jd = a.log_depth + b.log_depth
        out = np.zeros((nrows, jd + 1))
        for j1 in range(a.log_depth + 1):
            ca = a.coeffs[:, j1]
            if not ca.any():
                continue
            for j2 in range(b.log_depth + 1):
                cb = b.coeffs[:, j2]
                if not cb.any():
                    continue
                conv = np.convolve(ca, cb)[:nrows]
                out[: conv.size, j1 + j2] += conv
        return LogSeries(out, lo, exact=exact)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            if other == 0:
                raise SingularDivisionError("division by zero scalar")
            return self * (1.0 / float(other))
        other = _as_series(other)
        return _divide(self, other)

    def __rtruediv__(self, other):
        return _as_series(other).__truediv__(self)

    def __pow__(self, p):
        return self.pow(p)

    def pow(self, p: float) -> "LogSeries":
        """Real power via the binomial series; integer powers by repeated
        multiplication (coefficient-exact)."""
        if p == 0:
            return LogSeries.one(max(self.order, 0))
        if float(p).is_integer():
            m = int(round(p))
            base = self if m > 0 else _divide(LogSeries.one(0), self)
            out = base
            for _ in range(abs(m) - 1):
                out = out * base
            return out
        s = self.trimmed()
        if not s.is_plain():
            raise SeriesDomainError("non-integer power of a series with logs")
        lead = s._lead_index()
        m = s.min_degree + lead
        c = s.coeffs[lead, 0]
        if c <= 0.0:
            raise SeriesDomainError(
                "non-integer power needs a positive leading coefficient")
        mp = m * p
        if abs(mp - round(mp)) > 1e-12:
            raise SeriesDomainError(
                "leading degree times exponent must be an integer")
        # (c x^m (1+u))^p = c^p x^{mp} sum binom(p,k) u^k
        u = _divide(s, LogSeries.from_terms({(m, 0): c}, exact=True)) - 1.0
        nmax = u.order  # u.min_degree >= 1
        term = LogSeries.one(nmax)
        acc = LogSeries.one(nmax)
        for k in range(1, nmax + 1):
            term = (term * u).truncate(nmax) * ((p - k + 1) / k)
            acc = acc + term
        out = acc * (c ** p)
        if round(mp) != 0:
            out = out.shift_degree(int(round(mp)))
        return out

    def shift_degree(self, d: int) -> "LogSeries":
        """Multiply by x^d (exact degree shift)."""
        return LogSeries(self.coeffs, self.min_degree + d, exact=self.exact)

    def exp(self) -> "LogSeries":
        """exp of a plain series with min_degree >= 0."""
        s = self.trimmed()
        if not s.is_plain():
            raise SeriesDomainError("exp of a series with log terms")
        if s.min_degree < 0:
            raise SeriesDomainError("exp of a series with a pole")
        a0 = s.coeff(0, 0)
        rest = s - a0
        nmax = self.order
        term = LogSeries.one(nmax)
        acc = LogSeries.one(nmax)
        for k in range(1, nmax + 1):
            term = (term * rest).truncate(nmax) * (1.0 / k)
            acc = acc + term
        return acc * math.exp(a0)

    # -- calculus ----------------------------------------------------------

    def derivative(self) -> "LogSeries":
        """Term-by-term d/dx. d/dx x^k log^j = k x^{k-1} log^j + j x^{k-1} log^{j-1}."""
        jd = self.log_depth
        out = np.zeros_like(self.coeffs)
        ks = np.arange(self.min_degree, self.order + 1, dtype=float)
        for j in range(jd + 1):
            out[:, j] += ks * self.coeffs[:, j]
            if j + 1 <= jd:
                out[:, j] += (j + 1) * self.coeffs[:, j + 1]
        return LogSeries(out, self.min_degree - 1, exact=self.exact)

    def antiderivative(self) -> "LogSeries":
        """Term-by-term antiderivative; x^{-1} log^j integrates to
        log^{j+1}/(j+1), raising the log depth by one."""
        jd = self.log_depth
        has_pole_row = (self.min_degree <= -1 <= self.order and
                        np.any(self.coeffs[-1 - self.min_degree] != 0.0))
        jd_out = jd + 1 if has_pole_row else jd
        out = np.zeros((self.coeffs.shape[0], jd_out + 1))
        for i in range(self.coeffs.shape[0]):
            k = self.min_degree + i
            for j in range(jd + 1):
                c = self.coeffs[i, j]
                if c == 0.0:
                    continue
                if k == -1:
                    out[i, j + 1] += c / (j + 1)
                else:
                    # int x^k log^j = x^{k+1} sum_{i<=j} (-1)^i j!/(j-i)! /
                    #                 (k+1)^{i+1} log^{j-i}
                    fac = 1.0
                    for m in range(j + 1):
                        out[i, j - m] += c * (-1) ** m * fac / (k + 1) ** (m + 1)
                        fac *= (j - m)
        return LogSeries(out, self.min_degree + 1, exact=self.exact)

    # -- evaluation ----------------------------------------------------------

    def eval(self, x: float) -> float:
        """Evaluate the truncated series at x (Horner per log column)."""
        x = float(x)
        s = self
        if x <= 0:
            s = s.trimmed()
            if not s.is_plain():
                raise SeriesDomainError("log terms need x > 0")
            if s.min_degree < 0:
                raise SeriesDomainError("pole terms need x > 0")
        total = 0.0
        L = math.log(x) if x > 0 else 0.0
        for j in range(s.coeffs.shape[1]):
            col = s.coeffs[:, j]
            if not col.any():
                continue
            acc = 0.0
            for c in col[::-1]:
                acc = acc * x + c
            total += acc * L ** j
        return total * x ** s.min_degree if s.min_degree != 0 else total

    def eval_deriv(self, x: float, k: int = 0) -> float:
        s = self
        for _ in range(k):
            s = s.derivative()
        return s.eval(x)

    def __call__(self, x: float) -> float:
        return self.eval(x)

    # -- misc ----------------------------------------------------------------

    def taylor_at(self, a: float) -> "LogSeries":
        """Re-expand an exact plain polynomial about x = a (series in t with
        x = a + t)."""
        s = self.trimmed()
        if not (s.exact and s.is_plain() and s.min_degree >= 0):
            raise SeriesDomainError("taylor_at needs an exact polynomial")
        p = np.zeros(s.order + 1)
        p[s.min_degree:] = s.coeffs[:, 0]
        n = p.size
        out = np.zeros(n)
        for k in range(n):
            ck = p[k]
            if ck == 0.0:
                continue
            b = 1.0
            for j in range(k + 1):
                out[j] += ck * b * (a ** (k - j))
                b *= (k - j) / (j + 1)
        return LogSeries(out.reshape(-1, 1), 0, exact=True)

    def __repr__(self):
        terms = []
        for i in range(self.coeffs.shape[0]):
            for j in range(self.coeffs.shape[1]):
                c = self.coeffs[i, j]
                if c != 0.0:
                    k = self.min_degree + i
                    t = f"{c:.6g}"
                    if k:
                        t += f"*x^{k}"
                    if j:
                        t += f"*log^{j}"
                    terms.append(t)
        body = " + ".join(terms) if terms else "0"
        tag = ", exact" if self.exact else ""
        return f"LogSeries({body}; order={self.order}{tag})"


def _as_series(v) -> LogSeries:
    if isinstance(v, LogSeries):
        return v
    if isinstance(v, (int, float)):
        return LogSeries.constant(float(v))
    raise TypeError(f"cannot coerce {type(v)!r} to LogSeries")


def _divide(a: LogSeries, b: LogSeries) -> LogSeries:
    b = b.trimmed()
    if not b.is_plain():
        raise SeriesDomainError("divisor must be free of log terms")
    try:
        mb = b.leading_degree()
    except SingularDivisionError:
        raise SingularDivisionError("division by the zero series") from None
    blead = b.coeff(mb, 0)
    if blead == 0.0:
        raise SingularDivisionError("divisor has zero leading coefficient")
    a = a.trimmed() if np.any(a.coeffs) else a
    lo = a.min_degree - mb
    caps = []
    if not a.exact:
        caps.append(a.order - mb)
    if not b.exact:
        caps.append(b.order + a.min_degree - 2 * mb)
    if caps:
        hi = min(caps)
    else:
        # exact/exact: quotient is generically an infinite series; deliver
        # through the larger of the two stored orders
        hi = max(a.order - mb, b.order + a.min_degree - 2 * mb)
    if hi < lo:
        raise SeriesDomainError("no valid coefficients at this truncation")
    nrows = hi - lo + 1
    jd = a.log_depth
    out = np.zeros((nrows, jd + 1))
    bcol = np.zeros(nrows)
    for i in range(nrows):
        bcol[i] = b.coeff(mb + i, 0)
    for j in range(jd + 1):
        for i in range(nrows):
            acc = a.coeff(lo + i + mb, j)
            if i:
                acc -= float(np.dot(out[:i, j][::-1], bcol[1:i + 1]))
            out[i, j] = acc / blead
    return LogSeries(out, lo, exact=False)
