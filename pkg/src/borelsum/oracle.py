"""Independent reference integrator.

Method of lines on a real-x segment: high-order centered finite differences
(one-sided at the ends) discretize the normalized system

    f_t + P(d/dx) f = r + sum b_{q,k} f^k prod (d^j f_l)^{q_lj}

and an implicit stiff stepper advances in time.  A high-order undivided-
difference dissipation term (consistent at O(h^{2q-1})) keeps the one-sided
closures stable without touching the interior accuracy.  The integration
domain extends past the comparison window on both sides so that boundary
effects stay below the comparison tolerances inside the window.

This path shares no code with the Borel-plane solver: it works entirely in
physical variables on the real ray.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp

from .problem import PDEProblem

__all__ = ["OracleConfig", "OracleResult", "oracle_integrate",
           "diff_matrix", "fornberg_weights"]


@dataclass(frozen=True)
class OracleConfig:
    """Reference-integrator settings.  The window [x_min, x_max] is where
    values are reported; the actual domain is padded on both sides."""
    x_min: float = 5.0
    x_max: float = 20.0
    n_nodes: int = 350          # nodes across the padded domain
    theta_x: float = 0.0        # real ray only
    pad_left: float = 2.0
    pad_right: float = 4.0
    accuracy: int = 6           # interior stencil order
    dissipation: float = 0.01   # undivided-difference damping strength
    diss_order: int = 4         # damps like h^{2q-1} u^{(2q)}, q = diss_order
    method: str = "BDF"
    rtol: float = 1e-6
    atol: float = 1e-10
    dt_max: float = np.inf
    nudge_width: int = 8        # nodes per boundary strip relaxed to data
    nudge_rate: float = 200.0

    def __post_init__(self):
        if self.theta_x != 0.0:
            raise NotImplementedError(
                "the reference integrator runs on the real ray only")
        if not (0 < self.x_min < self.x_max):
            raise ValueError("need 0 < x_min < x_max")
        if self.n_nodes < 64:
            raise ValueError("need at least 64 nodes")
        if self.pad_left >= self.x_min:
            raise ValueError("left padding reaches x = 0")


@dataclass
class OracleResult:
    x: np.ndarray          # window nodes
    t: np.ndarray
    values: np.ndarray     # shape (m, len(t), len(x))


def fornberg_weights(z, x, m):
    """Finite-difference weights (Fornberg's recursion): row k of the
    returned (m+1, len(x)) array holds the weights of d^k/dx^k at z on the
    nodes x."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    w = np.zeros((m + 1, n))
    c1, c4 = 1.0, x[0] - z
    w[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    w[k, i] = c1 * (k * w[k - 1, i - 1]
                                    - c5 * w[k, i - 1]) / c2
                w[0, i] = -c1 * c5 * w[0, i - 1] / c2
            for k in range(mn, 0, -1):
                w[k, j] = ((c4 * w[k, j] - k * w[k - 1, j]) / c3)
            w[0, j] = c4 * w[0, j] / c3
        c1 = c2
    return w


def diff_matrix(x, order, accuracy):
    """Sparse d^order/dx^order on the (uniform) nodes x: centered stencils
    of the requested accuracy inside, one-sided of the same width at the
    ends."""
    n = len(x)
    width = order + accuracy
    if width % 2 == 0:
        width += 1
    half = width // 2
    if n < width:
        raise ValueError("grid too small for the stencil width")
    D = sparse.lil_matrix((n, n))
    for i in range(n):
        lo = min(max(i - half, 0), n - width)
        cols = np.arange(lo, lo + width)
        D[i, cols] = fornberg_weights(x[i], x[cols], order)[order]
    return D.tocsr()


def _dissipation_matrix(x, q, eps):
    """-eps/h * (-1)^q * (centered undivided difference)^{2q}: negative
    semidefinite on Fourier modes, O(h^{2q-1}) on smooth functions.  Rows
    too close to the ends are left empty."""
    n = len(x)
    h = x[1] - x[0]
    stencil = np.array([(-1) ** k * math.comb(2 * q, k)
                        for k in range(2 * q + 1)], dtype=float)
    stencil *= -eps / h * (-1) ** q
    D = sparse.lil_matrix((n, n))
    for i in range(q, n - q):
        D[i, i - q:i + q + 1] = stencil
    return D.tocsr()


def _series_real(series, x, t):
    return np.real(series.evaluate(x, float(t)))


def oracle_integrate(problem: PDEProblem, config: OracleConfig | None = None,
                     t_end=None, t_eval=None, boundary_data=None):
    """Integrate the normalized system on the padded real segment and return
    samples on the comparison window.

    The operator radiates rightward (group velocity of the third-order
    dispersion is positive), so the window is influenced by the solution
    left of the domain; `boundary_data(l, x, t) -> values` supplies the
    reference trace of component l there.  With data present the edge
    strips are held at those values and only interior nodes evolve, so
    every active stencil is centered (the restricted odd-order operator is
    skew-symmetric — unconditionally stable).  Without data the whole
    domain evolves with one-sided closures and the window inherits
    O(1)-propagated edge effects — fine for qualitative runs, not for
    tight comparisons.
    """
    if config is None:
        config = OracleConfig()
    if problem.d != 1:
        raise NotImplementedError("reference integration is d = 1 only")
    if config.x_min <= problem.sector.rho:
        raise ValueError("x_min must exceed the sector inner radius")
    if t_end is None:
        t_end = problem.horizon
    if t_eval is None:
        t_eval = np.linspace(0.0, t_end, 9)
    t_eval = np.asarray(t_eval, dtype=float)

    a = config.x_min - config.pad_left
    b = config.x_max + config.pad_right
    x = np.linspace(a, b, config.n_nodes)
    m = problem.m

    orders = sorted({j for term in problem.terms for (_, j, _) in term.q})
    D = {j: diff_matrix(x, j, config.accuracy) for j in orders}

    # P(d/dx) per component, plus stabilizing dissipation
    L = []
    diss = _dissipation_matrix(x, config.diss_order, config.dissipation)
    for l in range(m):
        A = sparse.csr_matrix((len(x), len(x)))
        for i, ci in enumerate(problem.symbol.coeffs[l]):
            if ci == 0:
                continue
            Di = sparse.identity(len(x), format="csr") if i == 0 \
                else diff_matrix(x, i, config.accuracy)
            A = A + float(ci) * Di
        L.append((-A + diss).tocsr())

    terms = [t for t in problem.terms if not t.coeff.is_zero()]

    n = len(x)
    nw = config.nudge_width
    if boundary_data is not None and nw > 0:
        inner = np.arange(nw, n - nw)
        strip = np.concatenate([np.arange(nw), np.arange(n - nw, n)])
    else:
        inner = np.arange(n)
        strip = None

    def assemble(t, y):
        f = np.empty((m, n))
        f[:, inner] = y.reshape(m, -1)
        if strip is not None:
            for l in range(m):
                f[l, strip] = np.asarray(
                    boundary_data(l, x[strip], t), dtype=float)
        return f

    def rhs(t, y):
        f = assemble(t, y)
        out = np.empty_like(f)
        for l in range(m):
            out[l] = L[l] @ f[l]
            if not problem.forcing[l].is_zero():
                out[l] += _series_real(problem.forcing[l], x, t)
        for term in terms:
            val = _series_real(term.coeff, x, t)
            for li, kl in enumerate(term.k):
                if kl:
                    val = val * f[li] ** kl
            for (li, j, mult) in term.q:
                val = val * (D[j] @ f[li]) ** mult
            out[term.component] += val
        return out[:, inner].ravel()

    y0 = np.concatenate([_series_real(fi, x, 0.0)[inner]
                         for fi in problem.initial])

    # Jacobian: exact for the linear part (the dominant stiffness); weak
    # nonlinear terms only perturb the Newton iteration.
    jac = sparse.block_diag([A[inner][:, inner] for A in L], format="csc")

    sol = solve_ivp(rhs, (0.0, float(t_end)), y0, method=config.method,
                    t_eval=t_eval, rtol=config.rtol, atol=config.atol,
                    max_step=config.dt_max, jac=jac)
    if not sol.success:
        raise RuntimeError(f"reference integration failed: {sol.message}")

    window = (x >= config.x_min) & (x <= config.x_max) \
        & np.isin(np.arange(n), inner)
    vals = np.empty((m, len(sol.t), int(window.sum())))
    keep = window[inner]
    for it in range(len(sol.t)):
        f = sol.y[:, it].reshape(m, -1)
        vals[:, it, :] = f[:, keep]
    return OracleResult(x=x[window], t=sol.t, values=vals)
