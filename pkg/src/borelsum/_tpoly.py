"""Exact algebra for time coefficients of the form sum_mu exp(-mu*t) * poly(t).

This class is closed under addition, multiplication, d/dt, and under solving
the scalar linear ODE  y' + p0*y = rhs,  including the resonant case mu == p0.
Coefficients may be ints, Fractions, floats or complex; exact types are
preserved whenever the inputs are exact.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Number

import numpy as np


def _is_zero_scalar(c):
    return c == 0


def _trim(poly):
    """Drop trailing zero coefficients; poly is a tuple, ascending degree."""
    n = len(poly)
    while n > 0 and _is_zero_scalar(poly[n - 1]):
        n -= 1
    return tuple(poly[:n])


class ExpPoly:
    """A finite sum  c(t) = sum_mu exp(-mu t) * P_mu(t)  with polynomial P_mu."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        # terms: dict  mu -> tuple of poly coefficients (ascending degree)
        self.terms = {}
        if terms:
            for mu, poly in terms.items():
                poly = _trim(tuple(poly))
                if poly:
                    self.terms[mu] = poly

    # -- constructors -------------------------------------------------
    @classmethod
    def constant(cls, c):
        return cls({0: (c,)})

    @classmethod
    def monomial(cls, c, degree=0, mu=0):
        poly = (0,) * degree + (c,)
        return cls({mu: poly})

    @classmethod
    def coerce(cls, obj):
        if isinstance(obj, ExpPoly):
            return obj
        if isinstance(obj, Number):
            return cls.constant(obj)
        raise TypeError(f"cannot coerce {type(obj)!r} to ExpPoly")

    # -- predicates ----------------------------------------------------
    def is_zero(self):
        return not self.terms

    def is_constant(self):
        if not self.terms:
            return True
        if len(self.terms) == 1 and 0 in self.terms:
            return len(self.terms[0]) == 1
        return False

    def constant_value(self):
        if self.is_zero():
            return 0
        if not self.is_constant():
            raise ValueError("ExpPoly is not constant")
        return self.terms[0][0]

    # -- algebra --------------------------------------------------------
    def __add__(self, other):
        other = ExpPoly.coerce(other)
        out = {mu: list(p) for mu, p in self.terms.items()}
        for mu, poly in other.terms.items():
            if mu in out:
                cur = out[mu]
                if len(cur) < len(poly):
                    cur.extend([0] * (len(poly) - len(cur)))
                for i, c in enumerate(poly):
                    cur[i] = cur[i] + c
            else:
                out[mu] = list(poly)
        return ExpPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return ExpPoly({mu: tuple(-c for c in p) for mu, p in self.terms.items()})

    def __sub__(self, other):
        return self + (-ExpPoly.coerce(other))

    def __rsub__(self, other):
        return ExpPoly.coerce(other) + (-self)

    def __mul__(self, other):
        other = ExpPoly.coerce(other)
        out = {}
        for mu1, p1 in self.terms.items():
            for mu2, p2 in other.terms.items():
                mu = mu1 + mu2
                prod = [0] * (len(p1) + len(p2) - 1)
                for i, a in enumerate(p1):
                    if _is_zero_scalar(a):
                        continue
                    for j, b in enumerate(p2):
                        prod[i + j] = prod[i + j] + a * b
                if mu in out:
                    cur = out[mu]
                    if len(cur) < len(prod):
                        cur.extend([0] * (len(prod) - len(cur)))
                    for i, c in enumerate(prod):
                        cur[i] = cur[i] + c
                else:
                    out[mu] = prod
        return ExpPoly(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        try:
            other = ExpPoly.coerce(other)
        except TypeError:
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):
        raise TypeError("ExpPoly is mutable-ish; not hashable")

    def tdiff(self):
        """d/dt."""
        out = {}
        for mu, poly in self.terms.items():
            d = [0] * max(len(poly), 1)
            for i, c in enumerate(poly):
                if i >= 1:
                    d[i - 1] = d[i - 1] + i * c
                d[i] = d[i] - mu * c
            out_poly = out.setdefault(mu, [0] * len(d))
            if len(out_poly) < len(d):
                out_poly.extend([0] * (len(d) - len(out_poly)))
            for i, c in enumerate(d):
                out_poly[i] = out_poly[i] + c
        return ExpPoly(out)

    def eval(self, t):
        """Evaluate at scalar or ndarray t (returns complex ndarray/scalar)."""
        t = np.asarray(t, dtype=complex)
        total = np.zeros(t.shape, dtype=complex)
        for mu, poly in self.terms.items():
            val = np.zeros(t.shape, dtype=complex)
            for c in reversed(poly):
                val = val * t + complex(c)
            total = total + np.exp(-complex(mu) * t) * val
        if total.shape == ():
            return complex(total)
        return total

    def max_degree(self):
        return max((len(p) - 1 for p in self.terms.values()), default=0)

    def __repr__(self):
        if self.is_zero():
            return "ExpPoly(0)"
        parts = []
        for mu, poly in sorted(self.terms.items(), key=lambda kv: str(kv[0])):
            ppart = " + ".join(
                f"{c}*t^{i}" if i else f"{c}" for i, c in enumerate(poly) if c != 0
            )
            if mu == 0:
                parts.append(ppart)
            else:
                parts.append(f"exp(-{mu}*t)*({ppart})")
        return "ExpPoly(" + " + ".join(parts) + ")"


def _poly_antideriv(poly):
    return (0,) + tuple(c / Fraction(i + 1) if isinstance(c, (int, Fraction))
                        else c / (i + 1)
                        for i, c in enumerate(poly))


def _solve_poly_ode(a, poly):
    """Particular polynomial solution Q of  Q' + a*Q = poly,  a != 0.

    Undetermined coefficients, descending degree:  q_k = (p_k - (k+1) q_{k+1}) / a.
    """
    n = len(poly)
    q = [0] * n
    for k in range(n - 1, -1, -1):
        upper = (k + 1) * q[k + 1] if k + 1 < n else 0
        num = poly[k] - upper
        if isinstance(num, (int, Fraction)) and isinstance(a, (int, Fraction)):
            q[k] = Fraction(num) / Fraction(a)
        else:
            q[k] = num / a
    return tuple(q)


def solve_linear_ode(p0, rhs, y0=0):
    """Exactly solve  y'(t) + p0*y(t) = rhs(t),  y(0) = y0,  rhs an ExpPoly.

    Returns an ExpPoly.  Resonant forcing (mu == p0) integrates to a higher
    degree polynomial against the same exponential.
    """
    rhs = ExpPoly.coerce(rhs)
    particular = ExpPoly()
    for mu, poly in rhs.terms.items():
        a = p0 - mu
        if _is_zero_scalar(a):
            particular = particular + ExpPoly({mu: _poly_antideriv(poly)})
        else:
            particular = particular + ExpPoly({mu: _solve_poly_ode(a, poly)})
    c0 = y0 - particular.eval(0)
    if isinstance(y0, (int, Fraction)):
        # try to keep exactness when the particular part is exact at t=0
        exact0 = 0
        exact_ok = True
        for mu, poly in particular.terms.items():
            if poly and isinstance(poly[0], (int, Fraction)):
                exact0 += poly[0]
            elif poly:
                exact_ok = False
        if exact_ok:
            c0 = y0 - exact0
    if not _is_zero_scalar(c0):
        particular = particular + ExpPoly({p0: (c0,)})
    return particular
