"""Benchmark problems with closed-form solutions.

Two one-dimensional third-order problems on a sector around the positive
real axis, used throughout the test suite and by the command-line
`oracle-compare` workflow:

* `linear_problem`: f_t - f_xxx = x^{-2} with zero initial data.  The
  solution is an explicit Laplace integral (`linear_exact`).

* `weakly_nonlinear_problem`: the same operator plus a small quadratic
  advection term lam * f * f_x, with the forcing manufactured so that the
  solution is exactly (1 - e^{-t}) x^{-2} (`weakly_nonlinear_exact`); its
  Borel transform is exactly (1 - e^{-t}) p (`weakly_nonlinear_borel`).
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy.integrate import quad

from ._tpoly import ExpPoly
from .problem import NonlinearTerm, PDEProblem, SectorSpec, SymbolPolynomial
from .series import RamifiedSeries

__all__ = [
    "linear_problem",
    "linear_exact",
    "weakly_nonlinear_problem",
    "weakly_nonlinear_exact",
    "weakly_nonlinear_borel",
    "WEAK_LAMBDA",
]

_SYMBOL = SymbolPolynomial(((0, 0, 0, Fraction(-1)),), 3)
_SECTOR = SectorSpec(phi=0.5, rho=1.0)

#: coupling constant of the manufactured quadratic term
WEAK_LAMBDA = Fraction(1, 100)


def linear_problem(horizon=1.0):
    """f_t - f_xxx = x^{-2}, f(x, 0) = 0, for x in a sector beyond rho = 1."""
    return PDEProblem(
        d=1, n=3, m=1, symbol=_SYMBOL, terms=(),
        forcing=(RamifiedSeries.monomial(Fraction(1), -2, var="x"),),
        initial=(RamifiedSeries.zero("x"),),
        sector=_SECTOR, horizon=horizon, name="linear-desk",
    )


def linear_exact(x, t, rtol=1e-12):
    """Closed-form solution of `linear_problem` as a Laplace integral:

        f(x, t) = int_0^inf (1 - exp(-p^3 t)) p^{-2} exp(-p x) dp,

    evaluated by adaptive quadrature (the 1 - exp factor is computed with
    expm1 to avoid cancellation for small p^3 t).
    """
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape, dtype=float)
    for idx in np.ndindex(x.shape):
        xx = float(x[idx])

        def integrand(p, xx=xx):
            return -np.expm1(-p ** 3 * t) * p ** -2 * np.exp(-p * xx)

        val, _ = quad(integrand, 0.0, np.inf, epsabs=0.0, epsrel=rtol,
                      limit=200)
        out[idx] = val
    return out


def weakly_nonlinear_problem(horizon=1.0, lam=WEAK_LAMBDA):
    """f_t - f_xxx = r + lam f f_x with forcing r manufactured so the
    solution is exactly (1 - e^{-t}) x^{-2}."""
    lam = Fraction(lam)
    r = RamifiedSeries({
        Fraction(-2): ExpPoly({1: (1,)}),
        Fraction(-5): ExpPoly({0: (24 + 2 * lam,),
                               1: (-24 - 4 * lam,),
                               2: (2 * lam,)}),
    }, var="x")
    term = NonlinearTerm(0, ((0, 1, 1),), (1,),
                         RamifiedSeries.monomial(lam, 0, var="x"))
    return PDEProblem(
        d=1, n=3, m=1, symbol=_SYMBOL, terms=(term,),
        forcing=(r,), initial=(RamifiedSeries.zero("x"),),
        sector=_SECTOR, horizon=horizon, name="weakly-nonlinear-desk",
    )


def weakly_nonlinear_exact(x, t):
    """Exact solution (1 - e^{-t}) x^{-2} of `weakly_nonlinear_problem`."""
    x = np.asarray(x, dtype=float)
    return -np.expm1(-t) * x ** -2.0


def weakly_nonlinear_borel():
    """Exact Borel transform (1 - e^{-t}) p of the solution, as a p-series."""
    return RamifiedSeries({Fraction(1): ExpPoly({0: (1,), 1: (-1,)})},
                          var="p")
