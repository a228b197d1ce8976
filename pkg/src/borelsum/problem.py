"""Problem model for sectorial quasilinear evolution systems.

A problem is the normalized system

    f_t + P(d/dx) f = sum'_{q,k} b_{q,k}(x,t) f^k prod (d^j f_l)^{q_{l,j}} + r

posed for large x in a sector, with ramified-series data.  This module
validates the structural constraints, checks the spectral cone condition on
the symbol, and reduces a raw quasilinear scalar equation to the normalized
first-order-in-time extended system.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Number

import numpy as np

from ._tpoly import ExpPoly
from .series import RamifiedSeries

__all__ = [
    "SectorSpec",
    "SymbolPolynomial",
    "NonlinearTerm",
    "SmallTimeScales",
    "PDEProblem",
    "ConeReport",
    "validate_constraint",
    "check_cone_condition",
    "DerivExpr",
    "RawEquation",
    "normalize",
    "formal_series_solve",
]


def _t_degrees(c):
    """Nonzero time-polynomial degrees of a scalar or polynomial ExpPoly
    coefficient."""
    if not isinstance(c, ExpPoly):
        return [0] if c != 0 else []
    out = set()
    for mu, poly in c.terms.items():
        if mu != 0:
            raise NotImplementedError(
                "scaled decay factoring needs polynomial time dependence")
        out.update(j for j, cj in enumerate(poly) if cj != 0)
    return sorted(out)


def q_order(q):
    """|q| = total number of derivative factors."""
    return sum(mult for (_, _, mult) in q)


def q_weight(q):
    """Sum of j * q_{l,j}: total count of derivatives in the factor."""
    return sum(j * mult for (_, j, mult) in q)


def canonical_q(q):
    """Sort and merge a q multiindex given as ((l, j, mult), ...)."""
    acc = {}
    for (l, j, mult) in q:
        if j < 1 or mult < 1 or l < 0:
            raise ValueError("q entries need j >= 1, mult >= 1, l >= 0")
        acc[(l, j)] = acc.get((l, j), 0) + mult
    return tuple((l, j, m) for (l, j), m in sorted(acc.items()))


@dataclass(frozen=True)
class SectorSpec:
    """Sector data: aperture phi, inner radius rho, rays of interest."""
    phi: float
    rho: float = 0.0
    directions: tuple = (0.0,)
    d: int = 1

    def __post_init__(self):
        if not (0 < self.phi < np.pi / 2):
            raise ValueError("phi must lie in (0, pi/2)")
        if self.rho < 0:
            raise ValueError("rho must be >= 0")
        for th in self.directions:
            if not (-self.phi < th < self.phi):
                raise ValueError(f"ray angle {th} outside (-phi, phi)")


@dataclass(frozen=True)
class SymbolPolynomial:
    """Diagonal constant-coefficient symbol: one polynomial per component.

    coeffs[l] is the ascending coefficient tuple of P_l(xi); on the Borel
    side the operator acts by multiplication with P_l(-p).
    """

    coeffs: tuple  # tuple of tuples
    order: int

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("operator order n must be >= 2")
        for c in self.coeffs:
            if len(c) > self.order + 1:
                raise ValueError("coefficient degree exceeds declared order")

    @property
    def m(self):
        return len(self.coeffs)

    def principal(self, component):
        c = self.coeffs[component]
        return c[self.order] if len(c) == self.order + 1 else 0

    def at_minus_p(self, p, component=0):
        """P_l(-p), vectorized in p."""
        p = np.asarray(p, dtype=complex)
        total = np.zeros(p.shape, dtype=complex)
        mp = -p
        for c in reversed(self.coeffs[component]):
            total = total * mp + complex(c)
        return total

    def principal_at_minus_p(self, p, component=0):
        p = np.asarray(p, dtype=complex)
        return complex(self.principal(component)) * (-p) ** self.order


@dataclass(frozen=True)
class NonlinearTerm:
    """One b_{q,k} coefficient: component index, derivative multiindex q as
    ((l, j, mult), ...), power multiindex k (tuple over components), and the
    coefficient series b(x, t)."""
    component: int
    q: tuple
    k: tuple
    coeff: RamifiedSeries

    def __post_init__(self):
        object.__setattr__(self, "q", canonical_q(self.q))
        if any(kk < 0 for kk in self.k):
            raise ValueError("k entries must be >= 0")
        if not self.q and sum(self.k) == 0:
            raise ValueError("b_{0,0} (f-independent term) belongs in r")
        if self.coeff.var != "x":
            raise ValueError("coefficient must be an x-series")


@dataclass(frozen=True)
class SmallTimeScales:
    """Scale data for the small-time (rescaled) solver: r is bounded by
    t^{-1} sum_j x^{omega_j} h(t^{gamma_1} x^{-beta_1}, ...), and b_{q,k} by
    x^{-beta |k|} sum_j x^{-alpha_{q,j}} p(...)."""
    omegas: tuple          # (omega_1 < ... < omega_Jr), Fractions
    betas: tuple           # (beta_1, ..., beta_K)
    gammas: tuple          # (gamma_1, ..., gamma_K)
    beta: Fraction         # decay unit per power of f
    alpha_leading: dict    # q -> alpha_{q,1} (largest decay exponent)

    @property
    def n_hat(self):
        return Fraction(self.betas[0]) / Fraction(self.gammas[0])

    def __post_init__(self):
        ratios = [Fraction(b) / Fraction(g)
                  for b, g in zip(self.betas, self.gammas)]
        if any(ratios[i] < ratios[i + 1] for i in range(len(ratios) - 1)):
            raise ValueError("scale ratios beta_i/gamma_i must be nonincreasing")
        if any(self.omegas[i] >= self.omegas[i + 1]
               for i in range(len(self.omegas) - 1)):
            raise ValueError("omegas must be strictly increasing")


@dataclass
class PDEProblem:
    d: int
    n: int
    m: int
    symbol: SymbolPolynomial
    terms: tuple                 # of NonlinearTerm
    forcing: tuple               # RamifiedSeries (x-side) per component
    initial: tuple               # RamifiedSeries (x-side) per component
    sector: SectorSpec
    horizon: float = 1.0
    epsilon: float = 1.0
    ramification: tuple = (1,)
    small_time: SmallTimeScales | None = None
    name: str = ""

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("order n must be >= 2 (first-order transport "
                             "problems are outside scope)")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if len(self.forcing) != self.m or len(self.initial) != self.m:
            raise ValueError("forcing/initial must have one series per component")
        if self.symbol.m != self.m:
            raise ValueError("symbol must have one polynomial per component")

    @property
    def alpha_r(self):
        """Decay exponent of the forcing: min over components of the slowest
        decay (-max exponent).  Zero forcing contributes nothing."""
        best = None
        for r in self.forcing:
            if r.is_zero():
                continue
            a = -max(r.terms)
            best = a if best is None else min(best, a)
        return best

    def alpha_table(self):
        """Leading decay exponent per (q, k):  -max exponent of b_{q,k},
        minus beta*|k| when small-time scale data is present."""
        out = {}
        for term in self.terms:
            if term.coeff.is_zero():
                continue
            a = -max(term.coeff.terms)
            if self.small_time is not None:
                a -= self.small_time.beta * sum(term.k)
            key = (term.q, term.k)
            out[key] = max(out.get(key, a), a) if key in out else a
        return out

    def alpha_q_sets(self):
        """Distinct leading decay exponents per q (over all k)."""
        table = self.alpha_table()
        out = {}
        for (q, k), a in table.items():
            out.setdefault(q, set()).add(a)
        return {q: tuple(sorted(s, reverse=True)) for q, s in out.items()}

    def scaled_alpha_sets(self):
        """Per-q decay exponents alpha_{q,1} > alpha_{q,2} > ... for the
        small-time representation

            b_{q,k} = x^{-beta |k|} sum_j x^{-alpha_{q,j}}
                      p_j(t^{gamma_1} x^{-beta_1}, ..., t^{gamma_K} x^{-beta_K})

        with polynomial p_j.  A coefficient monomial c t^j x^e admits
        alpha = -e - beta|k| - sum_i (scale exponents) over the ways of
        writing t^j as a product of the scale variables; the minimal set of
        alphas covering every monomial is found per residue class by
        greedy interval hitting (the candidate alphas of one monomial form
        an arithmetic progression).  Requires K = 2 scale variables with
        gamma_1 = gamma_2 = 1 (the common small-time case).
        """
        st = self.small_time
        if st is None:
            raise ValueError("problem carries no small-time scale data")
        if len(st.betas) != 2 or any(Fraction(g) != 1 for g in st.gammas):
            raise NotImplementedError(
                "scaled decay factoring implemented for two scale variables "
                "with unit time exponents")
        b1, b2 = Fraction(st.betas[0]), Fraction(st.betas[1])
        step = b1 - b2
        beta = Fraction(st.beta)
        intervals = {}     # q -> list of (alpha_min, alpha_max)
        for term in self.terms:
            if term.coeff.is_zero():
                continue
            kk = sum(term.k)
            for e, c in term.coeff.terms.items():
                for j in _t_degrees(c):
                    amax = -e - beta * kk - b2 * j
                    amin = -e - beta * kk - b1 * j
                    intervals.setdefault(term.q, []).append((amin, amax, j))
        out = {}
        for q, iv in intervals.items():
            groups = {}
            for amin, amax, j in iv:
                groups.setdefault(amax % step if step else 0, []).append(
                    (amin, amax))
            chosen = []
            for grp in groups.values():
                grp.sort(key=lambda ab: ab[1])
                point = None
                for amin, amax in grp:
                    if point is None or point < amin:
                        point = amax
                        chosen.append(point)
            out[q] = tuple(sorted(set(chosen), reverse=True))
        return out


@dataclass(frozen=True)
class ConeReport:
    ok: bool
    C: float
    R: float
    worst_ray: float
    message: str = ""


def validate_constraint(problem: PDEProblem):
    """Check the derivative-count constraint sum_{l,j} j*q_{l,j} <= n for
    every nonzero term; returns a list of violation descriptions."""
    violations = []
    for term in problem.terms:
        if term.coeff.is_zero():
            continue
        w = q_weight(term.q)
        if w > problem.n:
            violations.append(
                f"term q={term.q} k={term.k}: derivative count {w} exceeds "
                f"operator order {problem.n}")
        for (l, j, mult) in term.q:
            if j > problem.n:
                violations.append(
                    f"term q={term.q}: single factor of order {j} > n")
    ar = problem.alpha_r
    if ar is not None and ar < 1:
        violations.append(f"forcing decay exponent {ar} < 1")
    return violations


def check_cone_condition(symbol: SymbolPolynomial, phi: float,
                         sample_count: int = 512) -> ConeReport:
    """Sample Re P_{n;l}(-p) over the arc B = {|p| = 1, |arg p| <= phi}.

    If the principal symbol has positive real part on B, returns C = inf of
    Re of the principal part on B, and the radius R beyond which the full
    symbol satisfies Re P_l(-p) > C|p|^n (located by scanning radius shells
    outward with a small relative margin).
    """
    if not (0 < phi < np.pi / (2 * symbol.order)):
        raise ValueError("phi must lie in (0, pi/(2n))")
    if sample_count < 64:
        raise ValueError("need at least 64 samples")
    if all(symbol.principal(l) == 0 for l in range(symbol.m)):
        raise ValueError("degenerate symbol: zero principal part")

    angles = np.linspace(-phi, phi, sample_count)
    arc = np.exp(1j * angles)
    C = np.inf
    worst = 0.0
    for l in range(symbol.m):
        vals = np.real(symbol.principal_at_minus_p(arc, l))
        i = int(np.argmin(vals))
        if vals[i] < C:
            C = float(vals[i])
            worst = float(angles[i])
    if C <= 0:
        return ConeReport(False, C, np.inf, worst,
                          "principal symbol loses positivity on the arc")

    margin = 1e-9
    R = 0.0
    n = symbol.order
    for shell in np.geomspace(1e-6, 1e6, 241):
        pts = shell * arc
        ok = True
        for l in range(symbol.m):
            lhs = np.real(symbol.at_minus_p(pts, l))
            if np.any(lhs < C * shell ** n * (1.0 - margin) - margin):
                ok = False
                break
        if ok:
            R = float(shell)
            # verify it keeps holding further out on a coarse scan
            outer = np.geomspace(shell, 1e6, 40)
            hold = all(
                np.all(np.real(symbol.at_minus_p(s * arc, l))
                       >= C * s ** n * (1.0 - margin) - margin)
                for s in outer for l in range(symbol.m))
            if hold:
                return ConeReport(True, C, R, worst)
    return ConeReport(False, C, np.inf, worst,
                      "no radius found where the full symbol dominates")


# ---------------------------------------------------------------------------
# symbolic reduction of a raw quasilinear equation to the extended system

def _exact_only(series: RamifiedSeries):
    for c in series.terms.values():
        vals = ([x for p in c.terms.values() for x in p]
                if isinstance(c, ExpPoly) else [c])
        for v in vals:
            if isinstance(v, float) or isinstance(v, complex):
                raise TypeError(
                    "normalization requires exact (integer/Fraction) "
                    "coefficients; floats enter only at grid evaluation")
    return series


class DerivExpr:
    """Polynomial in the variables f_l (components, i.e. d^l u for l < n) and
    d^i f_{n-1} (i >= 1: derivatives beyond the component range), with
    x-ramified-series coefficients.

    Monomial key: sorted tuple of ((kind, l, i), power) with kind 'f' (i = 0)
    or 'D' (i >= 1, l = n-1 after canonicalization).
    """

    def __init__(self, terms=None, n_components=1):
        self.n = n_components
        self.terms = {}
        if terms:
            for mono, c in terms.items():
                if not c.is_zero():
                    self.terms[mono] = c

    @classmethod
    def coefficient(cls, series: RamifiedSeries, n_components):
        return cls({(): _exact_only(series)}, n_components)

    @classmethod
    def variable(cls, l, n_components, i=0):
        """f_l (i = 0) or d^i f_l, canonicalized so derivative factors attach
        to the top component."""
        if i > 0:
            tot = l + i
            if tot <= n_components - 1:
                l, i = tot, 0
            else:
                l, i = n_components - 1, tot - (n_components - 1)
        one = RamifiedSeries.monomial(Fraction(1), 0, var="x")
        key = ((("f" if i == 0 else "D", l, i), 1),)
        return cls({key: one}, n_components)

    def __add__(self, other):
        out = dict(self.terms)
        for mono, c in other.terms.items():
            out[mono] = out[mono] + c if mono in out else c
        return DerivExpr(out, self.n)

    def __neg__(self):
        return DerivExpr({m: c.scale(-1) for m, c in self.terms.items()}, self.n)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, RamifiedSeries):
            other = DerivExpr.coefficient(other, self.n)
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                acc = {}
                for v, p in list(m1) + list(m2):
                    acc[v] = acc.get(v, 0) + p
                mono = tuple(sorted(acc.items()))
                c = c1 * c2
                out[mono] = out[mono] + c if mono in out else c
        return DerivExpr(out, self.n)

    def x_derivative(self):
        """d/dx by the product rule; factors are canonicalized so that
        d(f_l) = f_{l+1} while within range, else a derivative of the top
        component."""
        out = DerivExpr({}, self.n)
        for mono, c in self.terms.items():
            dc = c.diff()
            if not dc.is_zero():
                out = out + DerivExpr({mono: dc}, self.n)
            for idx, (v, p) in enumerate(mono):
                kind, l, i = v
                dv = DerivExpr.variable(l, self.n, i + 1)
                rest = {}
                for v2, p2 in mono:
                    rest[v2] = rest.get(v2, 0) + (p2 - 1 if v2 == v else p2)
                rest = tuple(sorted((vv, pp) for vv, pp in rest.items() if pp))
                piece = DerivExpr({rest: c.scale(p)}, self.n) * dv
                out = out + piece
        return out

    def split(self):
        """Separate into (forcing series, list of (q, k, coeff series))."""
        forcing = RamifiedSeries.zero("x")
        terms = []
        for mono, c in self.terms.items():
            if not mono:
                forcing = forcing + c
                continue
            k = [0] * self.n
            q = []
            for (kind, l, i), p in mono:
                if kind == "f":
                    k[l] += p
                else:
                    q.append((l, i, p))
            terms.append((canonical_q(q), tuple(k), c))
        return forcing, terms


@dataclass(frozen=True)
class RawEquation:
    """A scalar quasilinear equation
        u_t + P(d/dx) u + g2(x,t,{d^j u}_{j<n}) d^n u = g1(x,t,{d^j u}_{j<n})
    with g1, g2 polynomial in u and its derivatives of order < n (DerivExpr
    over n variables) and exact ramified coefficients."""
    n: int
    symbol_coeffs: tuple          # ascending coefficients of P, degree n
    g1: DerivExpr
    g2: DerivExpr
    initial: RamifiedSeries
    sector: SectorSpec
    horizon: float = 1.0

    def __post_init__(self):
        for expr in (self.g1, self.g2):
            for mono in expr.terms:
                for (kind, l, i), _ in mono:
                    if kind == "D" or l >= self.n:
                        raise ValueError(
                            "raw nonlinearity must be quasilinear: g1, g2 "
                            "may involve derivatives of order < n only")


def normalize(raw: RawEquation) -> PDEProblem:
    """Reduce a raw quasilinear scalar equation to the extended normalized
    system for f = (u, u_x, ..., d^{n-1} u).

    Applies d^j for j = 0..n-1 to the right-hand side g1 - g2 * d(f_{n-1}),
    canonicalizes derivative factors, and collects the result into b_{q,k}
    coefficient tables plus constant-in-f forcing.  The derivative-count
    constraint holds on the output by construction.
    """
    n = raw.n
    m = n  # one component per derivative order 0..n-1
    top_deriv = DerivExpr.variable(n - 1, m, i=1)
    rhs = raw.g1 - raw.g2 * top_deriv

    symbol = SymbolPolynomial(tuple([tuple(raw.symbol_coeffs)] * m), n)

    terms = []
    forcing = []
    expr = rhs
    for comp in range(m):
        f, tlist = expr.split()
        forcing.append(f)
        for q, k, c in tlist:
            terms.append(NonlinearTerm(comp, q, k, c))
        if comp < m - 1:
            expr = expr.x_derivative()

    initial = [raw.initial]
    for _ in range(m - 1):
        initial.append(initial[-1].diff())

    problem = PDEProblem(
        d=1, n=n, m=m, symbol=symbol, terms=tuple(terms),
        forcing=tuple(forcing), initial=tuple(initial), sector=raw.sector,
        horizon=raw.horizon,
    )
    return problem


def _exact_div(c, d):
    """c / d, kept exact when both sides are rational."""
    if isinstance(c, (int, Fraction)) and isinstance(d, (int, Fraction)):
        return Fraction(c) / Fraction(d)
    return c / d


def _duhamel(c0, coeff):
    """Exact  h(t) = int_0^t exp(-c0 (t - s)) c(s) ds  for an ExpPoly c.

    Each summand exp(-mu s) p(s) integrates in closed form: with a = c0 - mu
    the polynomial Q solving Q' + a Q = p gives
    h = exp(-mu t) Q(t) - Q(0) exp(-c0 t); the resonant case a = 0 integrates
    the polynomial directly under the common exp(-c0 t) factor.
    """
    out = ExpPoly()
    for mu, poly in ExpPoly.coerce(coeff).terms.items():
        a = c0 - mu
        if a == 0:
            anti = (0,) + tuple(_exact_div(c, j + 1) for j, c in enumerate(poly))
            out = out + ExpPoly({c0: anti})
        else:
            deg = len(poly) - 1
            q = [0] * (deg + 1)
            for j in range(deg, -1, -1):
                num = poly[j] if j == deg else poly[j] - (j + 1) * q[j + 1]
                q[j] = _exact_div(num, a)
            out = out + ExpPoly({mu: tuple(q)}) - ExpPoly({c0: (q[0],)})
    return out


def _stable_prefix(old, new):
    """Number of slowest-decaying exponent slices of `new` that are already
    present, with identical coefficients, in `old`."""
    count = 0
    for e in sorted(new.terms, reverse=True):
        if ExpPoly.coerce(old.coeff(e)) == ExpPoly.coerce(new.coeff(e)):
            count += 1
        else:
            break
    return count


def formal_series_solve(problem, order):
    """Large-x asymptotic expansion of the solution, computed exactly.

    Picard iteration in the monomial algebra: each round replaces every
    component by

        f_l  <-  exp(-c_l t) f_I,l + int_0^t exp(-c_l (t - s))
                 [ r_l + N_l(f) - P_l,+(d/dx) f_l ](s) ds,

    where c_l is the constant part of the symbol and P_l,+ the rest.  The
    time integrals are evaluated in closed form on the exp-polynomial
    coefficients, and only the `order` + 2 slowest-decaying x-exponents per
    component are retained between rounds.

    Returns a list of per-depth slices: entry [j][l] is the single-exponent
    series carrying the (j+1)-th slowest-decaying term of component l (a
    zero series once component l is exhausted).  Only slices that an extra
    round leaves unchanged are reported, so the list is shorter than
    `order` when the expansion terminates or the iteration stops making
    progress within the round budget.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    m = problem.m
    var = problem.forcing[0].var
    keep = order + 2

    c0 = []
    pplus = []
    for l in range(m):
        cs = problem.symbol.coeffs[l]
        c0.append(cs[0] if cs else 0)
        pplus.append([(i, c) for i, c in enumerate(cs) if i >= 1 and c != 0])

    base = []
    for l in range(m):
        damp = ExpPoly({c0[l]: (1,)})
        base.append(problem.initial[l].scale(damp))

    state = [b.truncate(max_terms=keep) for b in base]
    depth = [0] * m
    best = -1
    stalled = 0
    rounds = 4 * order + 8
    for _ in range(rounds):
        new = []
        for l in range(m):
            rhs = problem.forcing[l]
            for i, c in pplus[l]:
                rhs = rhs - state[l].diff(i).scale(c)
            for term in problem.terms:
                if term.component != l:
                    continue
                prod = term.coeff
                for lc, kk in enumerate(term.k):
                    if kk:
                        prod = prod * state[lc].power(kk)
                for lc, j, mult in term.q:
                    prod = prod * state[lc].diff(j).power(mult)
                rhs = rhs + prod
            rhs = rhs.truncate(max_terms=keep + problem.n)
            duh = RamifiedSeries(
                {e: _duhamel(c0[l], c) for e, c in rhs.terms.items()}, var=var)
            new.append((base[l] + duh).truncate(max_terms=keep))
        settled = [new[l] == state[l] for l in range(m)]
        depth = [len(new[l].terms) if settled[l]
                 else _stable_prefix(state[l], new[l]) for l in range(m)]
        state = new
        if all(settled) or all(d >= order for d in depth):
            break
        cur = min(depth)
        stalled = stalled + 1 if cur <= best else 0
        best = max(best, cur)
        if stalled >= 3:
            break

    n_slices = min(max(depth), order) if depth else 0
    out = []
    for j in range(n_slices):
        row = []
        for l in range(m):
            es = sorted(state[l].terms, reverse=True)
            if j < depth[l]:
                e = es[j]
                row.append(RamifiedSeries({e: state[l].coeff(e)}, var=var))
            else:
                row.append(RamifiedSeries.zero(var))
        out.append(tuple(row))
    return out
