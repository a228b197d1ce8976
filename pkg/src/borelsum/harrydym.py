"""Case study: the cubic degenerate-dispersion flow

    H_t = -H^3/2 + H^3 H_zzz,    H(z, 0) = z^{-1/2},

treated by small-time expansion H ~ sum t^n H_n(z), reduction of the
correction equation to the normalized sectorial form in the outer variable
x = (2/3) z^{3/2}, and the rescaled small-time solve.  All expansion
arithmetic is exact (Fraction coefficients); floats enter only when the
z-series are mapped to the x variable for the numeric solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from ._tpoly import ExpPoly
from .series import RamifiedSeries
from .problem import (PDEProblem, SymbolPolynomial, NonlinearTerm,
                      SectorSpec, SmallTimeScales)
from .solver import SolveConfig, scaled_solve
from .grid import RayGridFunction
from .transforms import laplace_ray

__all__ = [
    "HarryDymCoeffs",
    "ResidualReport",
    "HarryDymScaled",
    "harry_dym_series",
    "harry_dym_residual",
    "harry_dym_problem",
    "harry_dym_scaled",
    "lattice_indices",
    "FAST_SCALED_CONFIG",
]

_HALF = Fraction(1, 2)

#: solver settings tuned for the rescaled case study: coarse enough to run
#: in about a minute, fine enough that every structural check still passes
FAST_SCALED_CONFIG = SolveConfig(grid_nodes=256, s_max=6.0, quad_order=16,
                                 time_quad_order=10, tol=1e-10,
                                 theta_cap=Fraction(4))


# ---------------------------------------------------------------------------
# small-time coefficients H_n

@dataclass(frozen=True)
class HarryDymCoeffs:
    """Expansion data: H[n] is the exact z-series coefficient of t^n, gN is
    the truncated sum mapped to the x variable (float coefficients), and
    residual_order is the lowest total lattice degree of the truncation
    defect N(g_N)."""
    H: tuple
    gN: RamifiedSeries
    residual_order: int

    def structure_ok(self, n):
        """Exponent bookkeeping: z^{1/2} H_n is a polynomial in z^{-9/2} and
        z^{-1} of total degree <= n."""
        for e in self.H[n].terms:
            if not _lattice_split(e, n):
                return False
        return True


def _lattice_split(e, degree):
    """Write e = -1/2 - 9a/2 - b with integers a, b >= 0, a + b <= degree;
    returns (a, b) or None."""
    w = -2 * e - 1          # = 9a + 2b, a Fraction
    if w.denominator != 1 or w < 0:
        return None
    w = int(w)
    for a in range(w // 9 + 1):
        rem = w - 9 * a
        if rem % 2 == 0 and a + rem // 2 <= degree:
            return (a, rem // 2)
    return None


def _cube_sum(H, m):
    """sum over i+j+k = m of H_i H_j H_k."""
    out = RamifiedSeries.zero("x")
    for i in range(m + 1):
        for j in range(m - i + 1):
            out = out + H[i] * H[j] * H[m - i - j]
    return out


def harry_dym_series(N):
    """Compute H_0..H_N by Taylor matching: substituting sum t^n H_n into
    the equation and collecting powers of t yields

        (n+1) H_{n+1} = -C_n/2 + sum_{m<=n} C_m H'''_{n-m},
        C_m = sum_{i+j+k=m} H_i H_j H_k.
    """
    if not (0 <= N <= 12):
        raise ValueError("N must lie in 0..12 (coefficient blow-up guard)")
    H = [RamifiedSeries.monomial(Fraction(1), Fraction(-1, 2), var="x")]
    d3 = [H[0].diff(3)]
    for n in range(N):
        rhs = _cube_sum(H, n).scale(-_HALF)
        for m in range(n + 1):
            rhs = rhs + _cube_sum(H, m) * d3[n - m]
        H.append(rhs.scale(Fraction(1, n + 1)))
        d3.append(H[-1].diff(3))
    g = _assemble_g(H)
    gN = _z_to_x(g)
    order = _residual_degrees(_residual_series(g))[0]
    return HarryDymCoeffs(H=tuple(H), gN=gN, residual_order=order)


def _assemble_g(H):
    """g(z, t) = sum_n t^n H_n as one z-series with polynomial t-coefficients."""
    g = RamifiedSeries.zero("x")
    for n, Hn in enumerate(H):
        g = g + Hn.scale(ExpPoly.monomial(Fraction(1), degree=n))
    return g


def _z_to_x(series):
    """Map a z-series to the x variable via x = (2/3) z^{3/2}:
    z^e -> (3/2)^{2e/3} x^{2e/3}.  Coefficients become floats."""
    out = {}
    for e, c in series.terms.items():
        ex = Fraction(2, 3) * e
        fac = 1.5 ** float(ex)
        cx = ExpPoly.coerce(c) * fac
        out[ex] = out[ex] + cx if ex in out else cx
    return RamifiedSeries(out, var="x")


# ---------------------------------------------------------------------------
# truncation residual

@dataclass(frozen=True)
class ResidualReport:
    """Lattice structure of the truncation defect N(g_N): it equals
    t^{-1} x^{-1/3} times a polynomial in (t x^{-3}, t x^{-2/3});
    lowest/highest are total degrees of that polynomial."""
    lowest_degree: int
    highest_degree: int
    n_monomials: int


def _residual_series(g):
    """N(g) = g_t + g^3/2 - g^3 g_zzz, exactly in z."""
    g3 = g * g * g
    return g.tdiff() + g3.scale(_HALF) - g3 * g.diff(3)


def _residual_degrees(R):
    """Check every residual monomial t^m z^e sits on the lattice
    e = -1/2 - 9a/2 - b with a + b = m + 1 and return (min, max, count) of
    the total degrees m + 1."""
    lo, hi, count = None, None, 0
    for e, c in R.terms.items():
        for mu, poly in ExpPoly.coerce(c).terms.items():
            if mu != 0:
                raise ValueError("polynomial time dependence expected")
            for m, cm in enumerate(poly):
                if cm == 0:
                    continue
                b = (Fraction(9) * (m + 1) + 2 * e + 1) / 7
                if b.denominator != 1 or not (0 <= b <= m + 1):
                    raise ValueError(
                        f"residual monomial t^{m} z^{e} off the "
                        f"(t x^-3, t x^-2/3) lattice")
                count += 1
                deg = m + 1
                lo = deg if lo is None else min(lo, deg)
                hi = deg if hi is None else max(hi, deg)
    return lo, hi, count


def harry_dym_residual(N):
    """Form N(g_N) symbolically and verify its lattice structure; the lowest
    total degree equals N + 1 (the first unmatched Taylor order)."""
    if N < 1:
        raise ValueError("need N >= 1")
    coeffs = harry_dym_series(N)
    R = _residual_series(_assemble_g(coeffs.H))
    lo, hi, count = _residual_degrees(R)
    return ResidualReport(lowest_degree=lo, highest_degree=hi,
                          n_monomials=count)


# ---------------------------------------------------------------------------
# normalized problem for the correction  f = x^2 (H - g_N)

def _fx_mul(A, B):
    """Product of polynomials in the symbols F_i = d^i f / dx^i; keys are
    sorted tuples of (i, power), values are z-series coefficients."""
    out = {}
    for m1, c1 in A.items():
        for m2, c2 in B.items():
            acc = {}
            for i, p in list(m1) + list(m2):
                acc[i] = acc.get(i, 0) + p
            mono = tuple(sorted(acc.items()))
            c = c1 * c2
            out[mono] = out[mono] + c if mono in out else c
    return out


def _fx_add(A, B):
    out = dict(A)
    for m, c in B.items():
        out[m] = out[m] + c if m in out else c
    return out


def _fx_scale(A, s):
    return {m: c.scale(s) for m, c in A.items()}


def _fx_dz(A):
    """d/dz with the chain rule d/dz F_i = z^{1/2} F_{i+1} (since
    dx/dz = z^{1/2})."""
    out = {}

    def put(mono, c):
        if mono in out:
            out[mono] = out[mono] + c
        else:
            out[mono] = c

    for mono, c in A.items():
        dc = c.diff()
        if not dc.is_zero():
            put(mono, dc)
        for i, p in mono:
            rest = {ii: pp for ii, pp in mono}
            rest[i] -= 1
            rest[i + 1] = rest.get(i + 1, 0) + 1
            newmono = tuple(sorted((ii, pp) for ii, pp in rest.items() if pp))
            put(newmono, c.scale(p).shift(_HALF))
    return out


def harry_dym_problem(N, horizon=0.1, epsilon=1.0):
    """Substitute H = g_N + x^{-2} f (exactly x^{-2} = (9/4) z^{-3}) into
    the flow and collect the normalized first-order system for f:

        f_t - f_xxx = r + sum b_{q,k} f^k prod (d^j f)^{q_j},

    with the forcing r the rescaled truncation defect.  The derivative
    symbols stay atomic during the z-expansion, so all collection is exact;
    coefficients are mapped to the x variable (floats) at the end.
    """
    coeffs = harry_dym_series(N)
    g = _assemble_g(coeffs.H)
    u0 = RamifiedSeries.monomial(Fraction(9, 4), -3, var="x")
    Hx = {(): g, ((0, 1),): u0}

    H3 = _fx_mul(_fx_mul(Hx, Hx), Hx)
    Hzzz = _fx_dz(_fx_dz(_fx_dz(Hx)))

    # g_t + u0*f_t + H^3/2 - H^3 H_zzz = 0  =>  f_t = (4/9) z^3 * (-rest)
    rest = _fx_add({(): g.tdiff()},
                   _fx_add(_fx_scale(H3, _HALF),
                           _fx_scale(_fx_mul(H3, Hzzz), -1)))
    E = {m: c.scale(Fraction(-4, 9)).shift(3) for m, c in rest.items()}

    # the linearized top-derivative term carries a unit constant part that
    # becomes the operator f_xxx; what remains must decay
    c3 = E.pop(((3, 1),))
    if ExpPoly.coerce(c3.coeff(0)).constant_value() != 1:
        raise AssertionError("unit third-derivative coefficient expected")
    c3 = c3 - RamifiedSeries.monomial(Fraction(1), 0, var="x")
    if not c3.is_zero():
        E[((3, 1),)] = c3

    forcing = _z_to_x(E.pop((), RamifiedSeries.zero("x")))
    terms = []
    for mono, cz in E.items():
        if max(cz.terms) > 0:
            raise AssertionError(f"non-decaying coefficient for {mono}")
        k0 = dict(mono).get(0, 0)
        q = tuple((0, i, p) for i, p in mono if i >= 1)
        terms.append(NonlinearTerm(0, q, (k0,), _z_to_x(cz)))

    symbol = SymbolPolynomial(((0, 0, 0, Fraction(-1)),), 3)
    sector = SectorSpec(phi=0.5, rho=1.0, directions=(0.0,))
    st = SmallTimeScales(
        omegas=(Fraction(5, 3),),
        betas=(Fraction(3), Fraction(2, 3)),
        gammas=(Fraction(1), Fraction(1)),
        beta=Fraction(5, 3),
        alpha_leading={},
    )
    problem = PDEProblem(
        d=1, n=3, m=1, symbol=symbol, terms=tuple(terms),
        forcing=(forcing,), initial=(RamifiedSeries.zero("x"),),
        sector=sector, horizon=float(horizon), epsilon=float(epsilon),
        ramification=(3,), small_time=st, name=f"harry-dym-N{N}",
    )
    sets = problem.scaled_alpha_sets()
    problem.small_time = replace(st, alpha_leading={q: a[0]
                                                    for q, a in sets.items()})
    return problem


# ---------------------------------------------------------------------------
# rescaled solve and self-similar profile samples

_STEP = Fraction(7, 9)


def lattice_indices(exponents, offset):
    """Indices k with e = offset + 7k/9, k a nonnegative integer, for every
    exponent; raises when an exponent is off that lattice."""
    out = []
    for e in exponents:
        k = (Fraction(e) - Fraction(offset)) / _STEP
        if k.denominator != 1 or k < 0:
            raise ValueError(f"exponent {e} not of the form "
                             f"{offset} + 7k/9 with k >= 0")
        out.append(int(k))
    return out


@dataclass
class HarryDymScaled:
    """Self-similar representation H = sum_k t^{e_k} G_k(zeta),
    zeta = z t^{-2/9}, assembled from the truncated expansion (exact
    blocks) plus the Laplace-resummed correction from the rescaled solve.

    Valid in the sector |arg z| < sector_halfangle and |zeta| > rho (the
    empirically sufficient inner radius; no sharpness claimed)."""
    state: object
    report: object
    problem: PDEProblem
    coeffs: HarryDymCoeffs
    h_exponents: tuple        # observed t-exponents of H (Fractions)
    theta_exponents: tuple    # t-exponents of the rescaled Borel solution
    zeta: np.ndarray
    G: dict                   # k -> samples of G_k on the zeta grid
    rho: float
    sector_halfangle: float

    def G_eval(self, k, zeta):
        zeta = np.asarray(zeta, dtype=float)
        out = np.zeros(zeta.shape, dtype=float)
        for e, c in self._blocks.get(k, ()):
            out = out + float(c) * zeta ** float(e)
        fun = self._laplace.get(k)
        if fun is not None:
            xi = (2.0 / 3.0) * zeta ** 1.5
            corr = np.array([complex(laplace_ray(fun, x, ramification=3)).real
                             for x in np.atleast_1d(xi)])
            out = out + 2.25 * zeta ** (-3.0) * corr.reshape(zeta.shape)
        return out


def _origin_exponent_estimate(grid, col):
    """Leading small-p power of a grid column, rounded to the 1/3 lattice."""
    r = grid.radii
    mask = (r > 0) & (r < 0.05 * r[-1]) & (np.abs(col) > 0)
    if mask.sum() < 4:
        return 0.0
    slope = np.polyfit(np.log(r[mask]), np.log(np.abs(col[mask])), 1)[0]
    a = round(3.0 * slope) / 3.0
    return max(a, -0.99)


def harry_dym_scaled(N, T, config=None):
    """Run the rescaled small-time solve at t = T and emit G_k samples on a
    zeta-grid for the representation H = sum_k t^{e_k} G_k(z t^{-2/9}).

    The exponents e_k are verified to lie on a lattice of step 7/9; the
    blocks of the truncated expansion carry e_k = (7k - 1)/9 and the
    Borel-resummed correction x^{-2} f contributes on the same lattice.
    """
    if T <= 0:
        raise ValueError("need T > 0")
    coeffs = harry_dym_series(N)
    problem = harry_dym_problem(N, horizon=T)
    state, report = scaled_solve(problem, config=config, t=T)

    # exact blocks of g_N:  c t^n z^e = c t^{(7b-1)/9} zeta^e
    blocks = {}
    h_exps = set()
    for n, Hn in enumerate(coeffs.H):
        for e, c in Hn.terms.items():
            a, b = _lattice_split(e, n)
            if a + b != n:
                raise AssertionError("inhomogeneous expansion coefficient")
            blocks.setdefault(b, []).append((e, c))
            h_exps.add(Fraction(7 * b - 1, 9))

    # correction blocks: theta-exponent e contributes at e - 1 after the
    # Laplace (factor t^{-1/3}) and the x^{-2} prefactor (factor t^{-2/3})
    lap = {}
    theta = state.theta_exponents or ()
    ks = lattice_indices(theta, Fraction(8, 9))
    nu_eff = 0.0
    for e, k in zip(theta, ks):
        vals = state.theta_values[e][0]
        col = np.asarray(vals)[:, -1]
        a = _origin_exponent_estimate(state.s_grid, col)
        lap[k] = RayGridFunction(state.s_grid, col, a)
        h_exps.add(Fraction(e) - 1)
        s = state.s_grid.radii
        tail = (s > 0.5 * s[-1]) & (np.abs(col) > 1e-300)
        if tail.sum() >= 4:
            slope = np.polyfit(s[tail], np.log(np.abs(col[tail])), 1)[0]
            nu_eff = max(nu_eff, slope)
    rho = (1.5 * (nu_eff + 1.0)) ** (2.0 / 3.0)

    zeta = np.geomspace(rho, 4.0 * rho, 33)
    out = HarryDymScaled(
        state=state, report=report, problem=problem, coeffs=coeffs,
        h_exponents=tuple(sorted(h_exps)), theta_exponents=tuple(theta),
        zeta=zeta, G={}, rho=float(rho),
        sector_halfangle=4.0 * math.pi / 9.0,
    )
    out._blocks = blocks
    out._laplace = lap
    for k in sorted(set(blocks) | set(lap)):
        out.G[k] = out.G_eval(k, zeta)
    return out
