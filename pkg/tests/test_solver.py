"""Fixed-point solver tests: the inhomogeneous part, single Picard steps,
full solves against closed forms, contraction diagnostics, origin power-law
fits, resummation decay, a physical-space residual check, and the rescaled
small-time solver."""

import dataclasses
import math
from fractions import Fraction

import numpy as np
import pytest

from borelsum import desk
from borelsum._phi import TimeGrid
from borelsum.grid import RayGrid, RayGridFunction, function_from_series
from borelsum.problem import (
    PDEProblem,
    SectorSpec,
    SmallTimeScales,
    SymbolPolynomial,
)
from borelsum.series import ExpPoly, RamifiedSeries
from borelsum.solver import (
    SolveConfig,
    build_F0,
    estimate_contraction,
    picard_step,
    scaled_solve,
    small_p_exponent,
    solve,
)
from borelsum.transforms import laplace_ray

from conftest import borel_closed_form

F = Fraction


def _grid(p_max=8.0, nodes=512):
    return RayGrid(p_max, nodes, phi=0.0, grading=2.0)


# --- inhomogeneous part -----------------------------------------------------

def test_build_F0_linear_closed_form():
    problem = desk.linear_problem()
    grid = _grid()
    tg = TimeGrid(problem.horizon, 10)
    (f0,) = build_F0(problem, grid, tg)
    expected = borel_closed_form(grid.points[:, None], tg.nodes[None, :])
    assert np.max(np.abs(f0.values - expected)) < 1e-10


def test_build_F0_pure_initial_data():
    # no forcing: F0 = e^{-P(-p) t} F_I(p); initial x^{-1} has Borel image 1
    problem = PDEProblem(
        d=1, n=3, m=1,
        symbol=SymbolPolynomial(((0, 0, 0, F(-1)),), 3), terms=(),
        forcing=(RamifiedSeries({}, var="x"),),
        initial=(RamifiedSeries({F(-1): ExpPoly.constant(1)}, var="x"),),
        sector=SectorSpec(phi=0.4, rho=1.0))
    grid = _grid()
    tg = TimeGrid(1.0, 8)
    (f0,) = build_F0(problem, grid, tg)
    expected = np.exp(-np.outer(grid.points ** 3, tg.nodes))
    assert np.max(np.abs(f0.values - expected)) < 1e-12
    # the first time node is t = 0, where F0 is the initial Borel data
    assert np.max(np.abs(f0.values[:, 0] - 1.0)) < 1e-12


def test_picard_step_without_terms_returns_F0():
    problem = desk.linear_problem()
    grid = _grid(nodes=256)
    tg = TimeGrid(problem.horizon, 8)
    F0 = build_F0(problem, grid, tg)
    junk = (RayGridFunction(grid, np.ones_like(F0[0].values), 0.0),)
    out = picard_step(junk, problem, SolveConfig(), F0=F0)
    assert np.array_equal(out[0].values, F0[0].values)


# --- full solves ------------------------------------------------------------

def test_solve_linear_matches_closed_form(linear_solution):
    problem, config, Fsol, report = linear_solution
    assert report.converged
    grid = Fsol[0].grid
    tg = TimeGrid(problem.horizon, config.time_quad_order)
    expected = borel_closed_form(grid.points[:, None], tg.nodes[None, :])
    assert np.max(np.abs(Fsol[0].values - expected)) < 1e-8


def test_solve_weakly_nonlinear_matches_exact_borel(weak_solution):
    problem, config, Fsol, report = weak_solution
    assert report.converged
    grid = Fsol[0].grid
    tg = TimeGrid(problem.horizon, config.time_quad_order)
    exact = desk.weakly_nonlinear_borel()
    expected = exact.evaluate(grid.points, tg.nodes)
    assert np.max(np.abs(Fsol[0].values - expected)) < 1e-7


def test_solve_reports_geometric_convergence(weak_solution):
    problem, config, Fsol, report = weak_solution
    assert report.converged
    assert report.residual < 2 * config.tol
    assert report.ball_ok and report.contract_ok
    assert all(r < 1.0 for r in report.contraction_ratios)


def test_solve_zero_data_gives_zero():
    problem = dataclasses.replace(
        desk.linear_problem(), forcing=(RamifiedSeries({}, var="x"),))
    Fsol, report = solve(problem, SolveConfig(grid_nodes=128, p_max=4.0,
                                              time_quad_order=6))
    assert report.converged
    assert np.max(np.abs(Fsol[0].values)) == 0.0


def test_solve_rejects_multidimensional():
    problem = dataclasses.replace(desk.linear_problem(), d=2)
    with pytest.raises(NotImplementedError):
        solve(problem, SolveConfig(grid_nodes=128))


# --- contraction diagnostics -------------------------------------------------

def test_estimate_contraction_linear_is_trivial():
    est = estimate_contraction(desk.linear_problem(), nu=3.0,
                               grid=_grid(nodes=256))
    assert est["ball_ok"] and est["contract_ok"]
    assert all(c == 0 for c in est["constants"].values())


def test_estimate_contraction_constants_shrink_with_nu():
    problem = desk.weakly_nonlinear_problem()
    grid = _grid(nodes=256)
    est_lo = estimate_contraction(problem, nu=4.0, grid=grid)
    est_hi = estimate_contraction(problem, nu=8.0, grid=grid)
    for key, c_lo in est_lo["constants"].items():
        assert est_hi["constants"][key] <= c_lo + 1e-12


# --- origin power-law fit ----------------------------------------------------

def test_small_p_exponent_of_series():
    grid = _grid()
    S = RamifiedSeries({F(1): ExpPoly.constant(1)}, var="p")  # p/Gamma(2)
    fit = small_p_exponent(function_from_series(S, grid))
    assert fit.conclusive and abs(fit.exponent - 1.0) < 1e-6


def test_small_p_exponent_of_constant():
    grid = _grid()
    f = RayGridFunction(grid, np.ones(len(grid.radii), dtype=complex), 0.0)
    fit = small_p_exponent(f)
    assert fit.conclusive and abs(fit.exponent) < 1e-9


@pytest.mark.parametrize("fixture", ["linear_solution", "weak_solution"])
def test_small_p_exponent_estimates_forcing_decay(fixture, request):
    problem, config, Fsol, report = request.getfixturevalue(fixture)
    fit = small_p_exponent(Fsol[0])
    assert fit.conclusive
    assert abs(fit.exponent - (float(problem.alpha_r) - 1.0)) < 0.05


# --- resummation ---------------------------------------------------------------

def test_resummed_solution_decays_like_forcing(linear_solution):
    problem, config, Fsol, report = linear_solution
    xs = np.linspace(5.0, 40.0, 12)
    final = RayGridFunction(Fsol[0].grid, Fsol[0].values[:, -1],
                            Fsol[0].origin_exponent)
    vals = np.array([laplace_ray(final, x).real for x in xs])
    weighted = np.abs(vals) * xs ** float(problem.alpha_r)
    assert np.all(weighted < 2.0)
    # the weighted profile approaches the Borel prefactor limit, so it
    # should not blow up or collapse across the window
    assert weighted.max() / weighted.min() < 5.0


def test_resummed_weak_solution_solves_the_equation(weak_solution):
    # residual of f_t - f_xxx - lam f f_x - r at interior points, with the
    # x-derivatives taken inside the ray integral and f_t from the
    # interpolating polynomial through the Chebyshev time nodes
    problem, config, Fsol, report = weak_solution
    grid = Fsol[0].grid
    tg = TimeGrid(problem.horizon, config.time_quad_order)
    lam = float(desk.WEAK_LAMBDA)
    xs = [6.0, 10.0, 16.0]

    def resum(weight_power, x):
        vals = Fsol[0].values * (-grid.points[:, None]) ** weight_power
        g = RayGridFunction(grid, vals,
                            Fsol[0].origin_exponent + weight_power)
        return np.array([laplace_ray(
            RayGridFunction(grid, g.values[:, j], g.origin_exponent), x).real
            for j in range(len(tg.nodes))])

    for x in xs:
        f = resum(0, x)
        fx = resum(1, x)
        fxxx = resum(3, x)
        poly = np.polynomial.polynomial.Polynomial.fit(
            tg.nodes, f, deg=len(tg.nodes) - 1)
        ft = poly.deriv()(tg.nodes)
        r = np.array([problem.forcing[0].evaluate(x, t)
                      for t in tg.nodes], dtype=complex).real
        resid = ft - fxxx - lam * f * fx - r
        scale = np.max(np.abs(ft)) + np.max(np.abs(r))
        assert np.max(np.abs(resid[1:-1])) < 1e-5 * scale


# --- rescaled small-time solver -----------------------------------------------

def test_scaled_solve_consistent_with_unscaled_linear():
    st = SmallTimeScales(omegas=(1,), betas=(3, F(2, 3)), gammas=(1, 1),
                         beta=F(5, 3), alpha_leading={})
    problem = dataclasses.replace(desk.linear_problem(), small_time=st)
    config = SolveConfig(grid_nodes=256, s_max=6.0, quad_order=16,
                         time_quad_order=10, tol=1e-10)
    t = 0.25
    state, report = scaled_solve(problem, config, t=t)
    assert report.converged
    p_pts = state.s_grid.points * t ** (-1.0 / float(state.n_hat))
    for j, lam in enumerate(state.lambda_nodes):
        expected = borel_closed_form(p_pts, t * lam)
        assert np.max(np.abs(state.values[0][:, j] - expected)) < 1e-6


def test_scaled_solve_requires_scale_data():
    with pytest.raises(ValueError):
        scaled_solve(desk.linear_problem(), SolveConfig(grid_nodes=128))


def test_scaled_solve_requires_zero_initial():
    st = SmallTimeScales(omegas=(1,), betas=(3, F(2, 3)), gammas=(1, 1),
                         beta=F(5, 3), alpha_leading={})
    problem = dataclasses.replace(
        desk.linear_problem(), small_time=st,
        initial=(RamifiedSeries({F(-1): ExpPoly.constant(1)}, var="x"),))
    with pytest.raises(ValueError):
        scaled_solve(problem, SolveConfig(grid_nodes=128))
