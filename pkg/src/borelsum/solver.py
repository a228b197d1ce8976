"""Picard iteration of the Borel-plane convolution integral equation.

The normalized problem  f_t + P(d/dx) f + sum b_{q,k} M_{q,k}(f) = r  turns,
after a Borel transform in 1/x, into a fixed-point equation

    F = F0 + Duhamel[ sum_{q,k} B_{q,k} * F^{*k} * prod ((-p)^j F_l)^{*q_lj} ]

where * is convolution along the ray, the Duhamel factor is
exp(-P(-p)(t-tau)), and F0 collects the initial data and forcing.  Under a
cone condition on the symbol the right-hand side contracts in a weighted
sup norm, so plain Picard iteration converges geometrically; this module
implements the iteration, the contraction diagnostics that certify it, and
the small-time rescaled variant in the variable s = p t^(1/n_hat).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._phi import TimeGrid, exp_duhamel
from ._tpoly import ExpPoly
from .grid import (RayGrid, RayGridFunction, NuNormParams, convolve_grid,
                   function_from_series, m0_constant, nu_norm)
from .problem import (PDEProblem, check_cone_condition, q_order, q_weight,
                      validate_constraint)
from .series import RamifiedSeries
from .transforms import laplace_ray

__all__ = [
    "SolveConfig",
    "SolveReport",
    "ScaledState",
    "build_F0",
    "picard_step",
    "solve",
    "estimate_contraction",
    "small_p_exponent",
    "PowerLawFit",
    "scaled_solve",
]


# ---------------------------------------------------------------------------
# configuration and reporting

@dataclass
class SolveConfig:
    nu: float | None = None          # norm weight; None = choose automatically
    max_iters: int = 60
    tol: float = 1e-12
    ball_factor: float = 2.0
    time_quad_order: int = 12        # Chebyshev time nodes on [0, horizon]
    epsilon_guard: bool = True
    p_max: float = 8.0
    grid_nodes: int = 1024
    grid_grading: float = 2.0
    quad_order: int = 24             # convolution quadrature order
    ray: float | None = None         # ray angle; None = first sector direction
    s_max: float = 8.0               # rescaled-solver grid extent
    theta_cap: Fraction | None = None  # highest t-exponent kept (rescaled)

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.ball_factor > 1:
            raise ValueError("ball_factor must exceed 1")


@dataclass
class SolveReport:
    iters: int
    norms: list
    diffs: list
    contraction_ratios: list
    ball_ok: bool
    contract_ok: bool
    residual: float
    nu: float
    tol: float
    epsilon_ok: bool | None = None
    margins: dict = field(default_factory=dict)

    @property
    def converged(self):
        return bool(self.diffs) and self.diffs[-1] < self.tol

    def summary(self):
        lines = [f"iterations: {self.iters}  (converged: {self.converged})",
                 f"nu = {self.nu:g}, residual = {self.residual:.3e}",
                 f"ball_ok = {self.ball_ok}, contract_ok = {self.contract_ok}"]
        for k, (a, b) in enumerate(zip(self.diffs, self.contraction_ratios
                                       + [None])):
            r = "" if b is None else f"   ratio {b:.3f}"
            lines.append(f"  step {k}: |dF| = {a:.3e}{r}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# building blocks

def _ray_powers(points, exponent):
    """p^e on the ray (principal branch), vectorized over the grid."""
    return np.exp(float(exponent) * np.log(points))


def build_F0(problem: PDEProblem, grid: RayGrid, time_grid: TimeGrid | None = None,
             check_cone=True):
    """Inhomogeneous part of the fixed-point equation, per component:

        F0(p, t) = exp(-P(-p) t) F_I(p) + int_0^t exp(-P(-p)(t-tau)) R(p,tau) dtau

    with F_I, R the termwise Borel transforms of the initial data and
    forcing.  The tau-integral is exact per series term: a coefficient
    exp(-mu tau) P(tau) integrates to stable phi-function combinations,
    uniformly in the stiffness P(-p).
    Returns a tuple of RayGridFunction with values indexed (node, time).
    """
    if check_cone:
        rep = check_cone_condition(problem.symbol, problem.sector.phi)
        if not rep.ok:
            raise ValueError(f"cone condition fails: {rep.message}")
    if time_grid is None:
        time_grid = TimeGrid(problem.horizon)
    p = grid.points
    t = time_grid.nodes
    out = []
    for l in range(problem.m):
        c = problem.symbol.at_minus_p(p, component=l)
        vals = np.zeros((len(p), len(t)), dtype=complex)
        a = None
        FI = problem.initial[l].borel()
        if not FI.is_zero():
            vals += np.exp(-np.outer(c, t)) * FI.evaluate(p)[:, None]
            a = FI.leading_exponent()
        R = problem.forcing[l].borel()
        for e, coeff in R.terms.items():
            pe = _ray_powers(p, e)
            for mu, poly in ExpPoly.coerce(coeff).terms.items():
                coeffs = [complex(ck) for ck in poly]
                dh = exp_duhamel(c[:, None] - complex(mu), t[None, :], coeffs)
                vals += pe[:, None] * np.exp(-complex(mu) * t)[None, :] * dh
        if not R.is_zero():
            aR = R.leading_exponent()
            a = aR if a is None else min(a, aR)
        out.append(RayGridFunction(grid, vals, float(a) if a is not None else 0.0))
    return tuple(out)


class _Workspace:
    """Per-solve cache: grid, time nodes, symbol values, and the Borel data
    of every nonlinear coefficient sampled once up front."""

    def __init__(self, problem, grid, time_grid, quad_order):
        self.problem = problem
        self.grid = grid
        self.time_grid = time_grid
        self.quad_order = quad_order
        p = grid.points
        self.c = [problem.symbol.at_minus_p(p, component=l)
                  for l in range(problem.m)]
        self.term_data = []
        t = time_grid.nodes
        for term in problem.terms:
            const = term.coeff.coeff(0)
            cvals = None
            if not _is_zero_coeff(const):
                cvals = np.asarray(_eval_coeff(const, t), dtype=complex)
            rest = {e: c for e, c in term.coeff.terms.items() if e != 0}
            bfun = None
            if rest:
                bser = RamifiedSeries(rest, var="x").borel()
                bvals = bser.evaluate(p, t)
                bfun = RayGridFunction(grid, bvals,
                                       float(bser.leading_exponent()))
            self.term_data.append((term, cvals, bfun))


def _is_zero_coeff(c):
    return (c.is_zero() if isinstance(c, ExpPoly) else c == 0)


def _eval_coeff(c, t):
    if isinstance(c, ExpPoly):
        return c.eval(t)
    return complex(c) * np.ones(np.shape(t), dtype=complex)


def _term_product(term, F, quad_order):
    """Convolution product F^{*k} * prod(((-p)^j F_l)^{*q_lj}) on the grid."""
    G = None
    for l, kl in enumerate(term.k):
        for _ in range(kl):
            G = F[l] if G is None else convolve_grid(G, F[l], quad_order)
    for (l, j, mult) in term.q:
        D = F[l].shift_power(j)
        for _ in range(mult):
            G = D if G is None else convolve_grid(G, D, quad_order)
    return G


def picard_step(F, problem: PDEProblem, config: SolveConfig | None = None,
                workspace: _Workspace | None = None, F0=None):
    """One application of the fixed-point map N:

        N(F)_l = F0_l + int_0^t exp(-P_l(-p)(t-tau)) [sum of term products] dtau

    F is the tuple of per-component grid functions of the previous iterate.
    Raises a diverged error naming the component if non-finite values appear.
    """
    if workspace is None:
        if config is None:
            config = SolveConfig()
        grid = F[0].grid
        nt = F[0].values.shape[1]
        time_grid = TimeGrid(problem.horizon, nt)
        workspace = _Workspace(problem, grid, time_grid, config.quad_order)
    ws = workspace
    if F0 is None:
        F0 = build_F0(problem, ws.grid, ws.time_grid, check_cone=False)
    shape = F0[0].values.shape
    acc = [np.zeros(shape, dtype=complex) for _ in range(problem.m)]
    acc_exp = [math.inf] * problem.m
    for term, cvals, bfun in ws.term_data:
        G = _term_product(term, F, ws.quad_order)
        l = term.component
        if cvals is not None:
            acc[l] += G.values * cvals[None, :]
            acc_exp[l] = min(acc_exp[l], G.origin_exponent)
        if bfun is not None:
            BG = convolve_grid(bfun, G, ws.quad_order)
            acc[l] += BG.values
            acc_exp[l] = min(acc_exp[l], BG.origin_exponent)
    out = []
    for l in range(problem.m):
        vals = F0[l].values + ws.time_grid.duhamel(ws.c[l], acc[l])
        if not np.all(np.isfinite(vals)):
            raise FloatingPointError(
                f"Picard step diverged: non-finite values in component {l}")
        a = min(F0[l].origin_exponent, acc_exp[l])
        out.append(RayGridFunction(ws.grid, vals, a))
    return tuple(out)


# ---------------------------------------------------------------------------
# contraction diagnostics

def estimate_contraction(problem: PDEProblem, nu, grid=None, time_grid=None,
                         ball_factor=2.0, quad_order=24, f0=None):
    """Certify that the fixed-point map contracts on the ball of radius
    b*|F0| in the nu-norm, using measured per-term constants.

    For each nonzero coefficient the term operator is applied through the
    actual numeric pipeline to the norm-one envelope
    W(p) = e^(nu |p|) / (M0 (1+|p|^2)), a pointwise majorant of the unit
    ball; the nu-norm of the result is the multilinear bound c_{q,k}(nu).
    With rho = b*|F0| and kappa = |q|+|k| factors per term, the two checks
    are

        ball:         |F0| + sum c_{q,k} rho^kappa  <=  rho
        contraction:  sum c_{q,k} kappa rho^(kappa-1)  <  1

    Returns a dict with both booleans, the margins, and the constants.
    """
    if grid is None:
        grid = RayGrid(8.0, 1024, phi=problem.sector.directions[0],
                       grading=2.0)
    if time_grid is None:
        time_grid = TimeGrid(problem.horizon)
    if nu * grid.p_max > 690.0:
        raise ValueError("nu * p_max too large for the envelope computation")
    params = NuNormParams(nu, problem.d)
    ws = _Workspace(problem, grid, time_grid, quad_order)
    if f0 is None:
        f0 = build_F0(problem, grid, time_grid, check_cone=False)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        f0_norm = max(nu_norm(g, params) for g in f0)

        r = grid.radii
        env = np.exp(nu * r) / (m0_constant() * (1.0 + r * r))
        env2d = np.repeat(env[:, None], len(time_grid.nodes), axis=1)
        W = RayGridFunction(grid, env2d.astype(complex), 0.0)

        constants = {}
        for term, cvals, bfun in ws.term_data:
            kappa = q_order(term.q) + sum(term.k)
            # |(-p)^j F_l| <= r^j W pointwise for any unit-ball F_l
            G = None
            for _ in range(sum(term.k)):
                G = W if G is None else convolve_grid(G, W, quad_order)
            for (l, j, mult) in term.q:
                D = RayGridFunction(
                    grid, (r ** j)[:, None] * env2d, float(j))
                for _ in range(mult):
                    G = D if G is None else convolve_grid(G, D, quad_order)
            tot = np.zeros_like(G.values)
            a = math.inf
            if cvals is not None:
                tot += np.abs(cvals)[None, :] * np.abs(G.values)
                a = G.origin_exponent
            if bfun is not None:
                Babs = RayGridFunction(grid, np.abs(bfun.values),
                                       bfun.origin_exponent)
                Gabs = RayGridFunction(grid, np.abs(G.values),
                                       G.origin_exponent)
                BG = convolve_grid(Babs, Gabs, quad_order)
                tot += np.abs(BG.values)
                a = min(a, BG.origin_exponent)
            # |exp(-P(-p)(t-tau))| = exp(-Re P(-p) (t-tau))
            dh = ws.time_grid.duhamel(np.real(ws.c[term.component]), tot)
            T = RayGridFunction(grid, np.abs(dh), a)
            key = (term.component, term.q, term.k)
            constants[key] = constants.get(key, 0.0) + nu_norm(T, params)

    b = float(ball_factor)
    rho = b * f0_norm
    ball_lhs = f0_norm
    lip = 0.0
    for (comp, q, k), cqk in constants.items():
        kappa = q_order(q) + sum(k)
        ball_lhs += cqk * rho ** kappa
        lip += cqk * kappa * rho ** (kappa - 1)
    ball_ok = ball_lhs <= rho
    contract_ok = lip < 1.0
    return {
        "ball_ok": ball_ok,
        "contract_ok": contract_ok,
        "margins": {"ball": rho - ball_lhs, "contraction": 1.0 - lip},
        "lipschitz": lip,
        "constants": constants,
        "f0_norm": f0_norm,
        "nu": nu,
    }


def _auto_nu(problem, grid, time_grid, ball_factor, quad_order, f0):
    """Double nu from the analytic threshold upward until both contraction
    checks pass (or the envelope computation would overflow)."""
    ar = problem.alpha_r
    nu = 4.0 * problem.sector.rho + float(ar if ar is not None else 1) + 4.0
    est = None
    while nu * grid.p_max <= 690.0:
        est = estimate_contraction(problem, nu, grid, time_grid,
                                   ball_factor, quad_order, f0=f0)
        if est["ball_ok"] and est["contract_ok"]:
            return nu, est
        nu *= 2.0
    return nu / 2.0, est


# ---------------------------------------------------------------------------
# the solver

def solve(problem: PDEProblem, config: SolveConfig | None = None):
    """Solve the Borel-plane fixed-point equation by Picard iteration.

    Returns (F, report) with F a tuple of per-component grid functions
    indexed (node, time).  Refuses multidimensional problems, constraint
    violations, and symbols failing the cone condition.
    """
    if config is None:
        config = SolveConfig()
    if problem.d >= 2:
        raise NotImplementedError(
            "numeric solving is restricted to d = 1 (multidimensional "
            "convolution cost); the problem model itself accepts general d")
    violations = validate_constraint(problem)
    if violations:
        raise ValueError("constraint violations: " + "; ".join(violations))
    rep = check_cone_condition(problem.symbol, problem.sector.phi)
    if not rep.ok:
        raise ValueError(f"cone condition fails: {rep.message}")

    ray = config.ray if config.ray is not None else problem.sector.directions[0]
    grid = RayGrid(config.p_max, config.grid_nodes, phi=ray,
                   grading=config.grid_grading)
    time_grid = TimeGrid(problem.horizon, config.time_quad_order)
    ws = _Workspace(problem, grid, time_grid, config.quad_order)
    F0 = build_F0(problem, grid, time_grid, check_cone=False)

    if config.nu is None:
        nu, est = _auto_nu(problem, grid, time_grid, config.ball_factor,
                           config.quad_order, F0)
    else:
        nu = float(config.nu)
        est = estimate_contraction(problem, nu, grid, time_grid,
                                   config.ball_factor, config.quad_order,
                                   f0=F0)
    params = NuNormParams(nu, problem.d)

    def vec_norm(G):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return max(nu_norm(g, params) for g in G)

    def vec_diff(G, H):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return max(nu_norm(g - h, params) for g, h in zip(G, H))

    F = F0
    norms = [vec_norm(F)]
    diffs = []
    iters = 0
    for _ in range(config.max_iters):
        Fn = picard_step(F, problem, config, workspace=ws, F0=F0)
        d = vec_diff(Fn, F)
        diffs.append(d)
        norms.append(vec_norm(Fn))
        F = Fn
        iters += 1
        if d < config.tol:
            break
    Fr = picard_step(F, problem, config, workspace=ws, F0=F0)
    residual = vec_diff(Fr, F)
    ratios = [diffs[i + 1] / diffs[i] for i in range(len(diffs) - 1)
              if diffs[i] > 0]

    epsilon_ok = None
    if config.epsilon_guard:
        epsilon_ok = _check_epsilon(problem, F, nu)

    report = SolveReport(
        iters=iters, norms=norms, diffs=diffs, contraction_ratios=ratios,
        ball_ok=bool(est and est["ball_ok"]),
        contract_ok=bool(est and est["contract_ok"]),
        residual=residual, nu=nu, tol=config.tol, epsilon_ok=epsilon_ok,
        margins=est["margins"] if est else {},
    )
    return F, report


def _check_epsilon(problem, F, nu):
    """Resum at the final time on a real-x check grid and verify that |f|
    stays inside the smallness ball the existence theory assumes."""
    grid = F[0].grid
    x0 = max(2.0 * problem.sector.rho, nu / max(math.cos(grid.phi), 0.2) + 1.0)
    xs = x0 * (1.0 + 0.5 * np.arange(6))
    ok = True
    for l in range(problem.m):
        fin = RayGridFunction(grid, F[l].values[:, -1], F[l].origin_exponent)
        for x in xs:
            fx = laplace_ray(fin, x, nu_bound=nu)
            if abs(fx) > problem.epsilon:
                ok = False
    if not ok:
        warnings.warn("resummed |f| exceeds the smallness bound epsilon on "
                      "the check grid; the contraction theory does not "
                      "certify this solution", RuntimeWarning)
    return ok


# ---------------------------------------------------------------------------
# small-p power law

@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    fit_residual: float
    conclusive: bool


def small_p_exponent(F: RayGridFunction, r_cut=0.1, max_residual=0.1):
    """Least-squares power-law exponent of |F| on the nodes below r_cut.

    Fits log|F| = log K + a log p; the solved function obeys
    |F| <= K p^(alpha_r - 1) near the origin, so the fitted a estimates
    alpha_r - 1.  A fit residual above max_residual marks the estimate
    inconclusive (non-power-law behavior).
    """
    r = F.grid.radii
    mask = r < r_cut
    if int(mask.sum()) < 8:
        raise ValueError(f"need at least 8 nodes below {r_cut}")
    vals = F.values
    if vals.ndim > 1:
        vals = vals[:, -1]
    y = np.abs(vals[mask])
    pos = y > 0
    if int(pos.sum()) < 8:
        raise ValueError("too many zero samples below r_cut")
    lx = np.log(r[mask][pos])
    ly = np.log(y[pos])
    slope, intercept = np.polyfit(lx, ly, 1)
    res = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
    return PowerLawFit(float(slope), float(math.exp(intercept)), res,
                       res <= max_residual)


# ---------------------------------------------------------------------------
# small-time rescaled solver

@dataclass
class ScaledState:
    """Solution of the rescaled fixed-point equation in s = p t^(1/n_hat),
    with the time direction parameterized by lambda in [0, 1] (physical
    time t*lambda).  values[l] has shape (s-node, lambda-node).

    When the problem has exact scale structure (n_hat = n and a pure
    power symbol) the iterates are finite sums  sum_e t^e G_e(s, lambda)
    with exact rational exponents; theta_exponents/theta_values hold that
    decomposition.
    """
    s_grid: RayGrid
    lambda_nodes: np.ndarray
    n_hat: Fraction
    omegas: tuple
    betas: tuple
    gammas: tuple
    t: float
    values: list
    origin_exponents: list
    theta_exponents: tuple | None = None
    theta_values: dict | None = None


def scaled_mu(term, n, n_hat):
    """Exponent of the t-prefactor of one rescaled term:
    mu_{q,k} = 1 - (|q| + |k| + sum j q_lj) / n_hat."""
    return 1 - Fraction(q_order(term.q) + sum(term.k) + q_weight(term.q),
                        1) / Fraction(n_hat)


def scale_compatibility(problem: PDEProblem):
    """The exponents m_{q,k} that must all be nonnegative for the rescaled
    operator to stay bounded as t -> 0:

    m_{q,k} = n_hat + omega_1 (|q|-1) - alpha_{q,1} + (omega_1-beta)|k|
              - (n_hat/n) sum j q_lj.
    Returns {(q, k): m_{q,k}} over the nonzero terms.
    """
    st = problem.small_time
    if st is None:
        raise ValueError("problem carries no small-time scale data")
    nh = st.n_hat
    w1 = Fraction(st.omegas[0])
    out = {}
    for term in problem.terms:
        if term.coeff.is_zero():
            continue
        aq1 = Fraction(st.alpha_leading[term.q])
        m = (nh + w1 * (q_order(term.q) - 1) - aq1
             + (w1 - Fraction(st.beta)) * sum(term.k)
             - Fraction(nh, problem.n) * q_weight(term.q))
        key = (term.q, term.k)
        out[key] = min(out.get(key, m), m)
    return out


def _has_exact_scaling(problem):
    """True when n_hat = n and the symbol is the pure power p^n for every
    component, so the Duhamel exponent is t-independent and iterates are
    finite t-power sums."""
    st = problem.small_time
    if st is None or st.n_hat != problem.n:
        return False
    for row in problem.symbol.coeffs:
        lead = row[-1]
        if len(row) != problem.n + 1 or any(c != 0 for c in row[:-1]):
            return False
        if complex(lead) != complex((-1) ** problem.n):
            return False
    return True


def _series_scaled_parts(series, s_points, lam, t, n_hat):
    """Decompose a p-series evaluated at p = s t^(-1/n_hat), time = t*lambda
    into {t-exponent: array (M, L)}.  Requires polynomial (mu = 0) time
    dependence in the coefficients."""
    parts = {}
    llam = np.asarray(lam, dtype=float)
    for e, coeff in series.terms.items():
        se = np.exp(float(e) * np.log(s_points))
        ep = ExpPoly.coerce(coeff)
        for mu, poly in ep.terms.items():
            if mu != 0:
                raise ValueError("exact-scale decomposition needs polynomial "
                                 "time dependence in the coefficients")
            for k, ck in enumerate(poly):
                if ck == 0:
                    continue
                ex = Fraction(k) - Fraction(e) / Fraction(n_hat)
                block = complex(ck) * se[:, None] * (llam ** k)[None, :]
                parts[ex] = parts.get(ex, 0) + block
    return parts


def _trim_parts(parts, cap, floor=1e-300):
    out = {}
    for e, v in parts.items():
        if cap is not None and e > cap:
            continue
        if np.max(np.abs(v)) < floor:
            continue
        out[e] = v
    return out


def scaled_solve(problem: PDEProblem, config: SolveConfig | None = None,
                 t=None):
    """Solve the small-time rescaled fixed-point equation

        Fh(s, lam; t) = Fh0 + sum_{q,k} t^(mu_{q,k})
            int_0^lam exp(-c(s)(lam - tau)) {Bh * products}(s, tau) dtau,

    c(s) = t P(-s t^(-1/n_hat)), on an s-grid times Chebyshev lambda nodes.
    Requires Setting-1 scale data with every m_{q,k} >= 0 and zero initial
    data (the unknown is f - f_I).  With exact scale structure the iterates
    are also decomposed into exact powers of t (the theta-series data).
    """
    if config is None:
        config = SolveConfig()
    st = problem.small_time
    if st is None:
        raise ValueError("problem carries no small-time scale data")
    if any(not fi.is_zero() for fi in problem.initial):
        raise ValueError("rescaled solver requires zero initial data "
                         "(absorb f_I into the unknown first)")
    nh = st.n_hat
    if nh < problem.n:
        raise ValueError(f"n_hat = {nh} < n = {problem.n}")
    mvals = scale_compatibility(problem)
    bad = {k: v for k, v in mvals.items() if v < 0}
    if bad:
        detail = ", ".join(f"m[q={q}, k={k}] = {v}" for (q, k), v in bad.items())
        raise ValueError(f"rescaled operator unbounded as t -> 0: {detail}")
    if problem.d >= 2:
        raise NotImplementedError("numeric solving is restricted to d = 1")

    if t is None:
        t = problem.horizon
    t = float(t)
    ray = config.ray if config.ray is not None else problem.sector.directions[0]
    grid = RayGrid(config.s_max, config.grid_nodes, phi=ray,
                   grading=config.grid_grading)
    lam_grid = TimeGrid(1.0, config.time_quad_order)
    lam = lam_grid.nodes
    s = grid.points
    p_pts = s * t ** (-1.0 / float(nh))
    c = [t * problem.symbol.at_minus_p(p_pts, component=l)
         for l in range(problem.m)]

    # F0: t * int_0^lam exp(-c (lam-tau)) Rh(s, tau) dtau
    F0 = []
    exps0 = []
    for l in range(problem.m):
        R = problem.forcing[l].borel()
        vals = np.zeros((len(s), len(lam)), dtype=complex)
        if not R.is_zero():
            for e, coeff in R.terms.items():
                pe = _ray_powers(p_pts, e)
                for mu, poly in ExpPoly.coerce(coeff).terms.items():
                    pc = [complex(ck) for ck in poly]
                    # coefficient evaluated at physical time t*tau
                    scaled = [ck * t ** k for k, ck in enumerate(pc)]
                    dh = exp_duhamel(c[l][:, None] - complex(mu) * t,
                                     lam[None, :], scaled)
                    vals += pe[:, None] * np.exp(-complex(mu) * t * lam)[None, :] * dh
            vals *= t
            exps0.append(float(R.leading_exponent()))
        else:
            exps0.append(0.0)
        F0.append(RayGridFunction(grid, vals, exps0[-1]))

    term_data = []
    for term in problem.terms:
        const = term.coeff.coeff(0)
        cvals = None
        if not _is_zero_coeff(const):
            cvals = np.asarray(_eval_coeff(const, t * lam), dtype=complex)
        rest = {e: ce for e, ce in term.coeff.terms.items() if e != 0}
        bfun = None
        if rest:
            bser = RamifiedSeries(rest, var="x").borel()
            bvals = bser.evaluate(p_pts, t * lam)
            bfun = RayGridFunction(grid, bvals, float(bser.leading_exponent()))
        pref = t ** float(scaled_mu(term, problem.n, nh))
        term_data.append((term, cvals, bfun, pref))

    params = NuNormParams(config.nu if config.nu is not None else 8.0, 1)

    def vec_norm(G):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return max(nu_norm(g, params) for g in G)

    F = tuple(F0)
    norms = [vec_norm(F)]
    diffs = []
    iters = 0
    for _ in range(config.max_iters):
        acc = [np.zeros_like(F0[l].values) for l in range(problem.m)]
        acc_exp = [math.inf] * problem.m
        for term, cvals, bfun, pref in term_data:
            G = _term_product(term, F, config.quad_order)
            l = term.component
            if cvals is not None:
                acc[l] += pref * G.values * cvals[None, :]
                acc_exp[l] = min(acc_exp[l], G.origin_exponent)
            if bfun is not None:
                BG = convolve_grid(bfun, G, config.quad_order)
                acc[l] += pref * BG.values
                acc_exp[l] = min(acc_exp[l], BG.origin_exponent)
        Fn = []
        for l in range(problem.m):
            vals = F0[l].values + lam_grid.duhamel(c[l], acc[l])
            if not np.all(np.isfinite(vals)):
                raise FloatingPointError(
                    f"rescaled iteration diverged in component {l}")
            Fn.append(RayGridFunction(grid, vals,
                                      min(F0[l].origin_exponent, acc_exp[l])))
        Fn = tuple(Fn)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            d = max(nu_norm(g - h, params) for g, h in zip(Fn, F))
        diffs.append(d)
        norms.append(vec_norm(Fn))
        F = Fn
        iters += 1
        if d < config.tol:
            break

    ratios = [diffs[i + 1] / diffs[i] for i in range(len(diffs) - 1)
              if diffs[i] > 0]
    ball_ok = all(nrm <= config.ball_factor * norms[0] + 1e-12
                  for nrm in norms)
    contract_ok = all(rr < 1.0 for rr in ratios)
    report = SolveReport(
        iters=iters, norms=norms, diffs=diffs, contraction_ratios=ratios,
        ball_ok=ball_ok, contract_ok=contract_ok,
        residual=diffs[-1] if diffs else 0.0,
        nu=params.nu, tol=config.tol,
    )

    theta_exponents = None
    theta_values = None
    if _has_exact_scaling(problem):
        theta_exponents, theta_values = _theta_series(
            problem, grid, lam_grid, term_data, mvals, config)

    state = ScaledState(
        s_grid=grid, lambda_nodes=lam, n_hat=nh, omegas=st.omegas,
        betas=st.betas, gammas=st.gammas, t=t, values=[f.values for f in F],
        origin_exponents=[f.origin_exponent for f in F],
        theta_exponents=theta_exponents, theta_values=theta_values,
    )
    return state, report


def _theta_series(problem, grid, lam_grid, term_data, mvals, config):
    """Exact t-power decomposition of the rescaled iterates.

    With n_hat = n and a pure power symbol the Duhamel exponent c(s) =
    P(-s) is t-independent, so every iterate is a finite sum
    sum_e t^e G_e(s, lambda) over exact rational exponents e; the Picard
    map acts exponent-by-exponent.  Iterates until the retained exponent
    window stabilizes.
    """
    st = problem.small_time
    nh = st.n_hat
    lam = lam_grid.nodes
    s = grid.points
    c = [problem.symbol.at_minus_p(s, component=l) for l in range(problem.m)]

    # F0 decomposition: t * duhamel of the scaled forcing parts
    F0_parts = []
    base_exp = None
    for l in range(problem.m):
        R = problem.forcing[l].borel()
        parts = {}
        if not R.is_zero():
            for e, block in _series_scaled_parts(R, s, lam, 1.0, nh).items():
                parts[e + 1] = lam_grid.duhamel(c[l], block)
        F0_parts.append(parts)
        for e in parts:
            base_exp = e if base_exp is None else min(base_exp, e)
    if base_exp is None:
        return (), {}

    cap = config.theta_cap
    if cap is None:
        cap = base_exp + 4
    cap = Fraction(cap)

    # scaled coefficient decompositions per term
    term_parts = []
    for term, _cv, _bf, _pref in term_data:
        mu = scaled_mu(term, problem.n, nh)
        const = term.coeff.coeff(0)
        cparts = {}
        if not _is_zero_coeff(const):
            for muexp, poly in ExpPoly.coerce(const).terms.items():
                if muexp != 0:
                    raise ValueError("exact-scale decomposition needs "
                                     "polynomial time dependence")
                for k, ck in enumerate(poly):
                    if ck != 0:
                        cparts[Fraction(k)] = cparts.get(Fraction(k), 0) \
                            + complex(ck) * (lam ** k)
        rest = {e: ce for e, ce in term.coeff.terms.items() if e != 0}
        bparts = {}
        if rest:
            bser = RamifiedSeries(rest, var="x").borel()
            for e, block in _series_scaled_parts(bser, s, lam, 1.0, nh).items():
                bparts[e] = RayGridFunction(grid, block,
                                            float(bser.leading_exponent()))
        term_parts.append((term, mu, cparts, bparts))

    def to_funs(parts, a):
        return {e: RayGridFunction(grid, v, a) for e, v in parts.items()}

    state = [dict(F0_parts[l]) for l in range(problem.m)]
    a0 = [problem.forcing[l].borel().leading_exponent()
          if not problem.forcing[l].is_zero() else 0
          for l in range(problem.m)]

    for _ in range(config.max_iters):
        acc = [{} for _ in range(problem.m)]
        for term, mu, cparts, bparts in term_parts:
            l = term.component
            # convolution product across exponent combinations
            prod = None  # dict exponent -> RayGridFunction
            factors = []
            for li, kl in enumerate(term.k):
                factors.extend([("plain", li)] * kl)
            for (li, j, mult) in term.q:
                factors.extend([("shift", li, j)] * mult)
            for f in factors:
                if f[0] == "plain":
                    cur = to_funs(state[f[1]], float(a0[f[1]]))
                else:
                    cur = {e: RayGridFunction(grid, v, float(a0[f[1]]))
                           .shift_power(f[2])
                           for e, v in state[f[1]].items()}
                if prod is None:
                    prod = cur
                else:
                    nxt = {}
                    for e1, g1 in prod.items():
                        for e2, g2 in cur.items():
                            if e1 + e2 + mu > cap:
                                continue
                            gg = convolve_grid(g1, g2, config.quad_order)
                            if e1 + e2 in nxt:
                                nxt[e1 + e2] = nxt[e1 + e2] + gg
                            else:
                                nxt[e1 + e2] = gg
                    prod = nxt
            if prod is None:
                continue
            for e, g in prod.items():
                for ec, cv in cparts.items():
                    et = e + ec + mu
                    if et > cap:
                        continue
                    acc[l][et] = acc[l].get(et, 0) + g.values * cv[None, :]
                for eb, bf in bparts.items():
                    et = e + eb + mu
                    if et > cap:
                        continue
                    BG = convolve_grid(bf, g, config.quad_order)
                    acc[l][et] = acc[l].get(et, 0) + BG.values
        new_state = []
        for l in range(problem.m):
            parts = dict(F0_parts[l])
            for e, v in acc[l].items():
                dh = lam_grid.duhamel(c[l], v)
                parts[e] = parts.get(e, 0) + dh
            new_state.append(_trim_parts(parts, cap))
        # converged when no retained exponent block still moves
        moved = False
        for l in range(problem.m):
            keys = set(new_state[l]) | set(state[l])
            for e in keys:
                old = state[l].get(e)
                new = new_state[l].get(e)
                if old is None or new is None:
                    moved = True
                    break
                if np.max(np.abs(new - old)) > config.tol * (
                        1.0 + np.max(np.abs(new))):
                    moved = True
                    break
            if moved:
                break
        state = new_state
        if not moved:
            break

    exponents = sorted({e for parts in state for e in parts})
    values = {e: [parts.get(e) for parts in state] for e in exponents}
    return tuple(exponents), values
