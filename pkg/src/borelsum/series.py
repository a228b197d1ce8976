"""Ramified (fractional-exponent) power series in the space variable or its
Borel dual, with exact rational exponents.

A series is a finite sum  sum_e  c_e(t) * v^e  where v is either the large
space variable x (exponents typically negative) or the Borel variable p
(exponents > -1), e is an exact Fraction and c_e is a scalar or an ExpPoly
in t.  The ramification order is the lcm of the exponent denominators.
"""

from __future__ import annotations

import math
import cmath
from fractions import Fraction
from numbers import Number

import numpy as np

from ._tpoly import ExpPoly

__all__ = [
    "RamifiedSeries",
    "borel_of_monomial",
    "convolve_series",
    "decompose_ramified",
    "SheetSamples",
]


def _as_fraction(e):
    if isinstance(e, Fraction):
        return e
    if isinstance(e, int):
        return Fraction(e)
    if isinstance(e, float):
        f = Fraction(e).limit_denominator(10**6)
        if abs(float(f) - e) > 1e-12 * max(1.0, abs(e)):
            raise ValueError(f"exponent {e} is not recognizably rational")
        return f
    raise TypeError(f"bad exponent type {type(e)!r}")


def _c_add(a, b):
    if isinstance(a, ExpPoly) or isinstance(b, ExpPoly):
        return ExpPoly.coerce(a) + ExpPoly.coerce(b)
    return a + b


def _c_mul(a, b):
    if isinstance(a, ExpPoly) or isinstance(b, ExpPoly):
        return ExpPoly.coerce(a) * ExpPoly.coerce(b)
    return a * b


def _c_is_zero(c):
    if isinstance(c, ExpPoly):
        return c.is_zero()
    return c == 0


def _c_eval(c, t):
    if isinstance(c, ExpPoly):
        return c.eval(t)
    return complex(c) * np.ones(np.shape(t), dtype=complex) if np.ndim(t) else complex(c)


def _c_tdiff(c):
    if isinstance(c, ExpPoly):
        return c.tdiff()
    return 0


class RamifiedSeries:
    """Finite ramified series  sum_e c_e(t) * var^e  with Fraction exponents."""

    __slots__ = ("terms", "var")

    def __init__(self, terms=None, var="x"):
        if var not in ("x", "p"):
            raise ValueError("var must be 'x' or 'p'")
        self.var = var
        self.terms = {}
        if terms:
            for e, c in terms.items():
                e = _as_fraction(e)
                if var == "p" and e <= -1:
                    raise ValueError(
                        f"p-series exponent {e} <= -1 (not integrable at 0)")
                if not _c_is_zero(c):
                    self.terms[e] = c

    # -- constructors ---------------------------------------------------
    @classmethod
    def zero(cls, var="x"):
        return cls({}, var=var)

    @classmethod
    def monomial(cls, coeff, exponent, var="x"):
        return cls({_as_fraction(exponent): coeff}, var=var)

    # -- inspection -------------------------------------------------------
    def is_zero(self):
        return not self.terms

    def exponents(self):
        return sorted(self.terms)

    def leading_exponent(self):
        """Smallest exponent present (dominant at infinity for x-series with
        negative exponents this is the slowest-decaying term)."""
        if not self.terms:
            raise ValueError("zero series has no leading exponent")
        return min(self.terms)

    def ramification(self):
        """lcm of exponent denominators (1 for an unramified series)."""
        N = 1
        for e in self.terms:
            N = N * e.denominator // math.gcd(N, e.denominator)
        return N

    def coeff(self, e):
        return self.terms.get(_as_fraction(e), 0)

    def __len__(self):
        return len(self.terms)

    def __eq__(self, other):
        if not isinstance(other, RamifiedSeries):
            return NotImplemented
        return (self - other).is_zero() and self.var == other.var

    # -- algebra ----------------------------------------------------------
    def _check_var(self, other):
        if self.var != other.var:
            raise ValueError("cannot combine series in different variables")

    def __add__(self, other):
        if isinstance(other, Number) and other == 0:
            return self
        self._check_var(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = _c_add(out[e], c) if e in out else c
        return RamifiedSeries(out, var=self.var)

    __radd__ = __add__

    def __neg__(self):
        return RamifiedSeries({e: _c_mul(-1, c) for e, c in self.terms.items()},
                              var=self.var)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s):
        """Multiply every coefficient by a scalar or ExpPoly factor."""
        return RamifiedSeries({e: _c_mul(s, c) for e, c in self.terms.items()},
                              var=self.var)

    def __mul__(self, other):
        """Pointwise product of functions (exponents add)."""
        if isinstance(other, (Number, ExpPoly)):
            return self.scale(other)
        self._check_var(other)
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = e1 + e2
                c = _c_mul(c1, c2)
                out[e] = _c_add(out[e], c) if e in out else c
        return RamifiedSeries(out, var=self.var)

    __rmul__ = __mul__

    def shift(self, de):
        """Multiply by var^de."""
        de = _as_fraction(de)
        return RamifiedSeries({e + de: c for e, c in self.terms.items()},
                              var=self.var)

    def power(self, k):
        if k < 0 or k != int(k):
            raise ValueError("power requires a nonnegative integer")
        out = RamifiedSeries.monomial(1, 0, var=self.var)
        base = self
        k = int(k)
        while k:
            if k & 1:
                out = out * base
            base_needed = k >> 1
            if base_needed:
                base = base * base
            k >>= 1
        return out

    def diff(self, order=1):
        """d/dvar applied termwise:  c v^e -> e c v^(e-1)."""
        out = self
        for _ in range(order):
            out = RamifiedSeries(
                {e - 1: _c_mul(e, c) for e, c in out.terms.items() if e != 0},
                var=out.var)
        return out

    def tdiff(self):
        """d/dt of every coefficient."""
        return RamifiedSeries({e: _c_tdiff(c) for e, c in self.terms.items()},
                              var=self.var)

    def truncate(self, max_exponent=None, max_terms=None):
        """Keep only exponents <= max_exponent... for x-series with negative
        exponents one truncates at a *decay* threshold: exponents >= -cut are
        kept.  Here the convention is: keep exponents e with e >= max_exponent
        dropped -- explicitly: keep e <= max_exponent when var == 'p' and
        keep e >= max_exponent when var == 'x'.
        """
        items = sorted(self.terms.items())
        if max_exponent is not None:
            cut = _as_fraction(max_exponent)
            if self.var == "x":
                items = [(e, c) for e, c in items if e >= cut]
            else:
                items = [(e, c) for e, c in items if e <= cut]
        if max_terms is not None:
            if self.var == "x":
                items = sorted(items, reverse=True)[:max_terms]
            else:
                items = items[:max_terms]
        return RamifiedSeries(dict(items), var=self.var)

    # -- transforms ---------------------------------------------------------
    def borel(self):
        """Termwise Borel transform of an x-series with negative exponents:
        x^(-a) -> p^(a-1) / Gamma(a).  Constant (e == 0) terms are dropped;
        positive exponents are rejected.
        """
        if self.var != "x":
            raise ValueError("borel() applies to x-series")
        out = {}
        for e, c in self.terms.items():
            if e == 0:
                continue
            if e > 0:
                raise ValueError(f"cannot Borel-transform growing term x^{e}")
            a = -e  # a > 0
            out[a - 1] = _c_mul(math.exp(-math.lgamma(float(a))), c)
        return RamifiedSeries(out, var="p")

    def evaluate(self, v, t=0.0):
        """Numerically evaluate at points v (possibly complex, principal
        branch for fractional powers).  Coefficients are evaluated at time t.
        If both v and t are arrays the result has shape v.shape + t.shape.
        """
        v_scalar = np.ndim(v) == 0
        t_scalar = np.ndim(t) == 0
        v = np.atleast_1d(np.asarray(v, dtype=complex))
        t_arr = np.atleast_1d(np.asarray(t, dtype=complex))
        total = np.zeros(v.shape + t_arr.shape, dtype=complex)
        logv = np.log(np.where(v == 0, 1.0, v))
        for e, c in self.terms.items():
            ve = np.exp(float(e) * logv)
            ve = np.where(v == 0, 1.0 if e == 0 else 0.0, ve)
            cv = np.atleast_1d(np.asarray(_c_eval(c, t_arr), dtype=complex)) \
                if isinstance(c, ExpPoly) else complex(c) * np.ones(t_arr.shape, complex)
            total += ve.reshape(v.shape + (1,) * t_arr.ndim) * cv
        if t_scalar:
            total = total[..., 0]
        if v_scalar:
            total = total[0]
        return total

    def __repr__(self):
        if not self.terms:
            return f"RamifiedSeries(0, var={self.var!r})"
        parts = []
        for e in sorted(self.terms):
            parts.append(f"({self.terms[e]!r})*{self.var}^({e})")
        return "RamifiedSeries(" + " + ".join(parts) + ")"


def borel_of_monomial(alpha):
    """Borel image of x^(-alpha):  coefficient and p-exponent (alpha-1)."""
    alpha = _as_fraction(alpha)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return math.exp(-math.lgamma(float(alpha))), alpha - 1


def convolve_series(F, G):
    """Convolution of two p-series:
    p^a * p^b -> Gamma(a+1)Gamma(b+1)/Gamma(a+b+2) p^(a+b+1).
    Requires all exponents > -1 (integrable at the origin).
    """
    if F.var != "p" or G.var != "p":
        raise ValueError("convolution is defined for p-series")
    out = {}
    for a, ca in F.terms.items():
        if a <= -1:
            raise ValueError(f"exponent {a} not integrable at origin")
        for b, cb in G.terms.items():
            if b <= -1:
                raise ValueError(f"exponent {b} not integrable at origin")
            e = a + b + 1
            # log-Gamma keeps the weight finite when exponents are large
            w = math.exp(math.lgamma(float(a) + 1.0)
                         + math.lgamma(float(b) + 1.0)
                         - math.lgamma(float(a + b) + 2.0))
            c = _c_mul(w, _c_mul(ca, cb))
            out[e] = _c_add(out[e], c) if e in out else c
    return RamifiedSeries(out, var="p")


class SheetSamples:
    """Samples of a ramified function on the N sheets above a set of base
    points:  values[k, i] = G(p_i * exp(2*pi*1j*k))  for k = 0..N-1."""

    def __init__(self, base_points, values, order):
        self.base_points = np.asarray(base_points, dtype=complex)
        self.values = np.asarray(values, dtype=complex)
        self.order = int(order)
        if self.values.shape[0] != self.order:
            raise ValueError("values must have one row per sheet")
        if self.values.shape[1] != self.base_points.shape[0]:
            raise ValueError("values/base_points shape mismatch")


def decompose_ramified(samples: SheetSamples):
    """Split a function ramified of order N into single-valued components:

        G(p e^{2 pi i k}) = sum_{j=0}^{N-1} e^{2 pi i k j / N} p^{j/N} G_j(p)

    Given samples on all N sheets, the components G_j are recovered by an
    inverse DFT in the sheet index followed by removal of the p^{j/N} factor.
    Returns an (N, npts) array of G_j values at the base points.
    """
    N = samples.order
    p = samples.base_points
    vals = samples.values  # (N, npts)
    k = np.arange(N)
    j = np.arange(N)
    # forward matrix M[k, j] = exp(2 pi i k j / N); inverse = conj(M)/N
    M = np.exp(2j * np.pi * np.outer(k, j) / N)
    Minv = np.conj(M) / N
    comp = Minv @ vals  # rows: p^{j/N} G_j(p)
    logp = np.log(p)
    for jj in range(N):
        comp[jj] *= np.exp(-(jj / N) * logp)
    return comp


def sheet_samples_of_series(series: RamifiedSeries, base_points, order=None):
    """Evaluate a ramified p-series on all sheets above the base points,
    using the principal branch continued by p -> p*exp(2*pi*i*k)."""
    if order is None:
        order = series.ramification()
    p = np.asarray(base_points, dtype=complex)
    logp = np.log(p)
    vals = np.zeros((order, len(p)), dtype=complex)
    for k in range(order):
        lp = logp + 2j * np.pi * k
        tot = np.zeros(len(p), dtype=complex)
        for e, c in series.terms.items():
            cc = c.eval(0) if isinstance(c, ExpPoly) else complex(c)
            tot += cc * np.exp(float(e) * lp)
        vals[k] = tot
    return SheetSamples(p, vals, order)
