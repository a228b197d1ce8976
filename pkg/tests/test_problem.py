"""Problem-model tests: structural validation, the sector positivity
estimate, reduction of raw quasilinear equations, scale bookkeeping, and the
exact exponential-polynomial series solver."""

from fractions import Fraction

import numpy as np
import pytest

from borelsum.desk import linear_problem, weakly_nonlinear_problem
from borelsum.harrydym import harry_dym_problem
from borelsum.problem import (
    DerivExpr,
    NonlinearTerm,
    PDEProblem,
    RawEquation,
    SectorSpec,
    SmallTimeScales,
    SymbolPolynomial,
    check_cone_condition,
    formal_series_solve,
    normalize,
    validate_constraint,
)
from borelsum.series import ExpPoly, RamifiedSeries
from borelsum.solver import scale_compatibility

F = Fraction


def _x_series(exponent, coeff=1):
    return RamifiedSeries({F(exponent): ExpPoly.constant(coeff)}, var="x")


def _simple_symbol(n=3):
    coeffs = (0,) * n + (F(-1),)
    return SymbolPolynomial((coeffs,), n)


def _problem(terms=(), forcing=None, n=3, **kw):
    if forcing is None:
        forcing = (_x_series(-2),)
    return PDEProblem(
        d=1, n=n, m=1, symbol=_simple_symbol(n), terms=tuple(terms),
        forcing=forcing, initial=(RamifiedSeries({}, var="x"),),
        sector=SectorSpec(phi=0.4, rho=1.0), **kw)


# --- structural validation ------------------------------------------------

def test_first_order_problems_rejected():
    with pytest.raises(ValueError):
        _problem(n=1)
    with pytest.raises(ValueError):
        SymbolPolynomial(((0, 1),), 1)


def test_component_count_must_match():
    with pytest.raises(ValueError):
        PDEProblem(
            d=1, n=3, m=2, symbol=_simple_symbol(), terms=(),
            forcing=(_x_series(-2),), initial=(RamifiedSeries({}, var="x"),),
            sector=SectorSpec(phi=0.4))


def test_sector_validation():
    with pytest.raises(ValueError):
        SectorSpec(phi=2.0)
    with pytest.raises(ValueError):
        SectorSpec(phi=0.4, rho=-1.0)
    with pytest.raises(ValueError):
        SectorSpec(phi=0.4, directions=(0.5,))


def test_nonlinear_term_validation():
    # an f-independent coefficient is forcing, not a nonlinear term
    with pytest.raises(ValueError):
        NonlinearTerm(0, (), (0,), _x_series(-2))
    # coefficients live on the physical side
    with pytest.raises(ValueError):
        NonlinearTerm(0, ((0, 1, 1),), (0,),
                      RamifiedSeries({F(1): ExpPoly.constant(1)}, var="p"))
    with pytest.raises(ValueError):
        NonlinearTerm(0, (), (-1,), _x_series(-2))


def test_derivative_count_constraint():
    ok = _problem(terms=(NonlinearTerm(0, ((0, 1, 1),), (1,), _x_series(-2)),))
    assert validate_constraint(ok) == []

    # two factors of second derivatives: count 4 > n = 3
    bad = _problem(terms=(NonlinearTerm(0, ((0, 2, 2),), (0,), _x_series(-2)),))
    msgs = validate_constraint(bad)
    assert len(msgs) == 1 and "exceeds operator order" in msgs[0]


def test_slowly_decaying_forcing_flagged():
    bad = _problem(forcing=(_x_series(F(-1, 2)),))
    msgs = validate_constraint(bad)
    assert any("decay exponent" in m for m in msgs)


def test_alpha_r_over_components():
    pb = PDEProblem(
        d=1, n=3, m=2,
        symbol=SymbolPolynomial(((0, 0, 0, F(-1)),) * 2, 3),
        terms=(),
        forcing=(_x_series(-2), _x_series(-3)),
        initial=(RamifiedSeries({}, var="x"),) * 2,
        sector=SectorSpec(phi=0.4))
    assert pb.alpha_r == 2


# --- sector positivity estimate -------------------------------------------

def test_cone_condition_pure_power():
    rep = check_cone_condition(_simple_symbol(3), 0.5)
    assert rep.ok
    # Re(p^3) on the unit arc has infimum cos(3 phi) at the edge rays
    assert abs(rep.C - np.cos(3 * 0.5)) < 1e-6
    assert abs(abs(rep.worst_ray) - 0.5) < 1e-2


def test_cone_condition_scales_with_leading_coefficient():
    lam = 2.5
    sym = SymbolPolynomial(((0, 0, 0, F(-5, 2)),), 3)
    rep = check_cone_condition(sym, 0.3)
    base = check_cone_condition(_simple_symbol(3), 0.3)
    assert rep.ok and abs(rep.C - lam * base.C) < 1e-9


def test_cone_condition_fails_for_wrong_sign():
    sym = SymbolPolynomial(((0, 0, 0, F(1)),), 3)  # u_t - u_xxx backwards
    rep = check_cone_condition(sym, 0.3)
    assert not rep.ok and rep.C < 0


def test_cone_condition_rejects_wide_aperture():
    with pytest.raises(ValueError):
        check_cone_condition(_simple_symbol(3), np.pi / 4)  # >= pi/(2n)


# --- raw-equation reduction -----------------------------------------------

def _raw_linear():
    # u_t - u_xxx = x^{-2}
    return RawEquation(
        n=3, symbol_coeffs=(0, 0, 0, F(-1)),
        g1=DerivExpr.coefficient(_x_series(-2), 3),
        g2=DerivExpr(n_components=3),
        initial=_x_series(-1),
        sector=SectorSpec(phi=0.4, rho=1.0))


def test_normalize_linear_structure():
    pb = normalize(_raw_linear())
    assert pb.m == pb.n == 3
    assert pb.terms == ()
    # component j carries d^j of the forcing and initial data
    assert max(pb.forcing[0].terms) == -2
    assert max(pb.forcing[2].terms) == -4
    assert max(pb.initial[1].terms) == -2
    assert validate_constraint(pb) == []


def test_normalize_quasilinear_top_term():
    # u_t - u_xxx = u * u_x  becomes terms in components f_0..f_2
    raw = RawEquation(
        n=3, symbol_coeffs=(0, 0, 0, F(-1)),
        g1=DerivExpr.variable(0, 3) * DerivExpr.variable(1, 3),
        g2=DerivExpr(n_components=3),
        initial=_x_series(-1),
        sector=SectorSpec(phi=0.4, rho=1.0))
    pb = normalize(raw)
    assert validate_constraint(pb) == []
    # component 0 hosts exactly the product f_0 f_1, i.e. k = (1,1,0)
    row0 = [t for t in pb.terms if t.component == 0]
    assert len(row0) == 1 and row0[0].k == (1, 1, 0) and row0[0].q == ()


def test_normalize_rejects_high_order_nonlinearity():
    with pytest.raises(ValueError):
        RawEquation(
            n=3, symbol_coeffs=(0, 0, 0, F(-1)),
            g1=DerivExpr.variable(0, 3, i=3),
            g2=DerivExpr(n_components=3),
            initial=_x_series(-1),
            sector=SectorSpec(phi=0.4, rho=1.0))


# --- small-time scale bookkeeping -----------------------------------------

def test_small_time_scales_validation():
    with pytest.raises(ValueError):
        SmallTimeScales(omegas=(1, 1), betas=(3,), gammas=(1,),
                        beta=F(1), alpha_leading={})
    with pytest.raises(ValueError):
        SmallTimeScales(omegas=(1,), betas=(1, 3), gammas=(1, 1),
                        beta=F(1), alpha_leading={})
    st = SmallTimeScales(omegas=(1,), betas=(3, F(2, 3)), gammas=(1, 1),
                         beta=F(5, 3), alpha_leading={})
    assert st.n_hat == 3


def test_harry_dym_scaled_alpha_sets():
    pb = harry_dym_problem(3)
    assert pb.scaled_alpha_sets() == {
        (): (F(4, 3), F(-1)),
        ((0, 1, 1),): (F(2),),
        ((0, 2, 1),): (F(1),),
        ((0, 3, 1),): (F(0),),
    }


def test_harry_dym_scale_compatibility_is_tight():
    mvals = scale_compatibility(harry_dym_problem(3))
    assert mvals and all(m == 0 for m in mvals.values())


def test_scale_compatibility_requires_scale_data():
    with pytest.raises(ValueError):
        scale_compatibility(linear_problem())


# --- exact series solver ---------------------------------------------------

def test_series_solve_pure_relaxation():
    # f_t + f = x^{-1}: exact solution (1 - e^{-t}) x^{-1}
    pb = PDEProblem(
        d=1, n=2, m=1,
        symbol=SymbolPolynomial(((1,),), 2), terms=(),
        forcing=(_x_series(-1),), initial=(RamifiedSeries({}, var="x"),),
        sector=SectorSpec(phi=0.4, rho=1.0))
    rows = formal_series_solve(pb, 3)
    assert len(rows) == 1
    s = rows[0][0]
    assert set(s.terms) == {F(-1)}
    assert s.terms[F(-1)] == ExpPoly({0: (1,), 1: (-1,)})


def test_series_solve_linear_dispersive():
    # f_t - f_xxx = x^{-2}: slice j is t^{j+1}/(j+1)! d^{3j} x^{-2}
    rows = formal_series_solve(linear_problem(), 4)
    coeffs = [1, -12, 840, -151200]
    for j, c in enumerate(coeffs):
        s = rows[j][0]
        e = F(-2 - 3 * j)
        assert set(s.terms) == {e}
        assert s.terms[e] == ExpPoly({0: tuple([0] * (j + 1) + [F(c, 1)])})


def test_series_solve_weakly_nonlinear_terminates():
    rows = formal_series_solve(weakly_nonlinear_problem(), 4)
    assert len(rows) == 1
    s = rows[0][0]
    assert s.terms[F(-2)] == ExpPoly({0: (1,), 1: (-1,)})


def test_series_solve_harry_dym_exponent_lattice():
    rows = formal_series_solve(harry_dym_problem(3), 4)
    exps = [max(row[0].terms) for row in rows]
    assert exps == [F(-1), F(-5, 3), F(-7, 3), F(-3)]
