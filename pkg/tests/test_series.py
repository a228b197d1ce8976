"""Exact ramified-series algebra: termwise Borel transform, convolution by
the Gamma identity, and the sheet decomposition of ramified functions."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from borelsum._tpoly import ExpPoly
from borelsum.series import (RamifiedSeries, SheetSamples, borel_of_monomial,
                             convolve_series, decompose_ramified,
                             sheet_samples_of_series)


# ---------------------------------------------------------------------------
# series algebra basics

def test_monomial_roundtrip_and_merge():
    s = RamifiedSeries.monomial(2, Fraction(-1, 2)) \
        + RamifiedSeries.monomial(3, Fraction(-1, 2))
    assert s.coeff(Fraction(-1, 2)) == 5
    assert len(s) == 1


def test_p_series_rejects_nonintegrable_exponent():
    with pytest.raises(ValueError):
        RamifiedSeries.monomial(1, Fraction(-3, 2), var="p")


def test_mixed_variable_operations_rejected():
    a = RamifiedSeries.monomial(1, -1, var="x")
    b = RamifiedSeries.monomial(1, 1, var="p")
    with pytest.raises(ValueError):
        a + b


def test_diff_and_shift():
    s = RamifiedSeries.monomial(Fraction(1), Fraction(-1, 2))
    assert s.diff().coeff(Fraction(-3, 2)) == Fraction(-1, 2)
    assert s.shift(2).coeff(Fraction(3, 2)) == 1


def test_ramification_lcm():
    s = RamifiedSeries({Fraction(-1, 2): 1, Fraction(-1, 3): 1})
    assert s.ramification() == 6


def test_evaluate_matches_hand_value():
    s = RamifiedSeries({Fraction(-2): ExpPoly({0: (1,), 1: (-1,)})})
    got = s.evaluate(4.0, 0.5)
    want = (1 - math.exp(-0.5)) / 16.0
    assert abs(got - want) < 1e-14


# ---------------------------------------------------------------------------
# Borel transform of monomials

def test_borel_of_monomial_alpha_one():
    c, e = borel_of_monomial(1)
    assert c == 1.0 and e == 0


def test_borel_of_monomial_alpha_half():
    c, e = borel_of_monomial(Fraction(1, 2))
    assert e == Fraction(-1, 2)
    assert abs(c - 1.0 / math.sqrt(math.pi)) < 1e-15


def test_borel_of_monomial_alpha_two():
    c, e = borel_of_monomial(2)
    assert c == 1.0 and e == 1


def test_borel_of_monomial_rejects_nonpositive():
    with pytest.raises(ValueError):
        borel_of_monomial(0)
    with pytest.raises(ValueError):
        borel_of_monomial(-1)


def test_series_borel_drops_constant_and_rejects_growth():
    s = RamifiedSeries({0: 3, Fraction(-1): 1})
    assert s.borel().exponents() == [Fraction(0)]
    with pytest.raises(ValueError):
        RamifiedSeries.monomial(1, 1).borel()


# ---------------------------------------------------------------------------
# series convolution (Gamma identity)

def test_convolve_one_one_is_p():
    one = RamifiedSeries.monomial(1, 0, var="p")
    out = convolve_series(one, one)
    assert out.exponents() == [Fraction(1)]
    assert abs(out.coeff(1) - 1.0) < 1e-15


def test_convolve_sqrt_pair():
    h = RamifiedSeries.monomial(1, Fraction(1, 2), var="p")
    out = convolve_series(h, h)
    assert out.exponents() == [Fraction(2)]
    assert abs(out.coeff(2) - math.pi / 8.0) < 1e-12


def test_convolve_inverse_sqrt_pair():
    c = 1.0 / math.sqrt(math.pi)
    h = RamifiedSeries.monomial(c, Fraction(-1, 2), var="p")
    out = convolve_series(h, h)
    assert out.exponents() == [Fraction(0)]
    assert abs(out.coeff(0) - 1.0) < 1e-12


def _quad_convolution(a, b, p=1.0, nodes=20000):
    s = np.linspace(0.0, p, nodes + 1)[1:-1]
    return np.trapezoid(s ** a * (p - s) ** b, s)


@pytest.mark.parametrize("a,b", [(0.5, 0.5), (1.0, 2.0), (0.25, 1.75),
                                 (2.0, 2.0)])
def test_convolve_matches_quadrature_oracle(a, b):
    fa = RamifiedSeries.monomial(1, Fraction(a).limit_denominator(8), var="p")
    fb = RamifiedSeries.monomial(1, Fraction(b).limit_denominator(8), var="p")
    out = convolve_series(fa, fb)
    got = float(out.coeff(Fraction(a).limit_denominator(8)
                          + Fraction(b).limit_denominator(8) + 1))
    want = _quad_convolution(a, b)
    assert abs(got - want) < 5e-6


_exp_strategy = st.integers(min_value=0, max_value=6).map(
    lambda k: Fraction(k, 2))
_series_strategy = st.dictionaries(
    _exp_strategy,
    st.integers(min_value=-5, max_value=5).filter(lambda v: v != 0),
    min_size=1, max_size=5,
).map(lambda d: RamifiedSeries(d, var="p"))


@settings(max_examples=60, deadline=None)
@given(_series_strategy, _series_strategy)
def test_convolution_commutative(f, g):
    lhs = convolve_series(f, g)
    rhs = convolve_series(g, f)
    assert lhs.exponents() == rhs.exponents()
    worst = max(abs(complex(ExpPoly.coerce(lhs.coeff(e)).constant_value())
                    - complex(ExpPoly.coerce(rhs.coeff(e)).constant_value()))
                for e in lhs.exponents())
    assert worst < 1e-12


@settings(max_examples=40, deadline=None)
@given(_series_strategy, _series_strategy, _series_strategy)
def test_convolution_bilinear(f, g, h):
    lhs = convolve_series(f, g + h)
    rhs = convolve_series(f, g) + convolve_series(f, h)
    diff = lhs - rhs
    worst = max((abs(complex(ExpPoly.coerce(c).constant_value()))
                 for c in diff.terms.values()), default=0.0)
    assert worst < 1e-12


@settings(max_examples=25, deadline=None)
@given(_series_strategy, _series_strategy, _series_strategy)
def test_convolution_associative_numerically(f, g, h):
    lhs = convolve_series(convolve_series(f, g), h)
    rhs = convolve_series(f, convolve_series(g, h))
    diff = lhs - rhs
    worst = max((abs(complex(ExpPoly.coerce(c).constant_value()))
                 for c in diff.terms.values()), default=0.0)
    scale = max((abs(complex(ExpPoly.coerce(c).constant_value()))
                 for c in lhs.terms.values()), default=1.0)
    assert worst <= 1e-12 * max(scale, 1.0)


def test_laplace_of_convolution_is_product_of_laplaces():
    # termwise: L[p^a] = Gamma(a+1) x^{-a-1}, so the Gamma weight in
    # convolve_series is exactly what makes L[f*g] = L[f] L[g]
    for a, b in [(Fraction(0), Fraction(1)), (Fraction(1, 2), Fraction(1, 2)),
                 (Fraction(3, 2), Fraction(2))]:
        w = float(convolve_series(
            RamifiedSeries.monomial(1, a, var="p"),
            RamifiedSeries.monomial(1, b, var="p")).coeff(a + b + 1))
        lhs = w * math.gamma(float(a + b + 1) + 1.0)
        rhs = math.gamma(float(a) + 1.0) * math.gamma(float(b) + 1.0)
        assert abs(lhs - rhs) < 1e-12 * rhs


# ---------------------------------------------------------------------------
# sheet decomposition

def test_decompose_two_sheets_closed_form():
    p = np.linspace(0.3, 2.0, 7).astype(complex)
    A0, A1 = 1.7, -0.4
    # second sheet keeps the continued branch of the square root explicitly
    vals = np.stack([A0 + A1 * np.exp(0.5 * np.log(p)),
                     A0 + A1 * np.exp(0.5 * (np.log(p) + 2j * np.pi))])
    comp = decompose_ramified(SheetSamples(p, vals, 2))
    assert np.max(np.abs(comp[0] - A0)) < 1e-12
    assert np.max(np.abs(comp[1] - A1)) < 1e-12


def test_decompose_pure_half_power():
    s = RamifiedSeries.monomial(1, Fraction(1, 2), var="p")
    p = np.linspace(0.5, 1.5, 5)
    comp = decompose_ramified(sheet_samples_of_series(s, p))
    assert np.max(np.abs(comp[0])) < 1e-12
    assert np.max(np.abs(comp[1] - 1.0)) < 1e-12


def test_decompose_third_order_example():
    s = RamifiedSeries({Fraction(0): 1, Fraction(1, 3): 1, Fraction(2, 3): 2},
                       var="p")
    p = np.linspace(0.2, 3.0, 9)
    comp = decompose_ramified(sheet_samples_of_series(s, p))
    for j, want in enumerate((1.0, 1.0, 2.0)):
        assert np.max(np.abs(comp[j] - want)) < 1e-10


@pytest.mark.parametrize("N", [2, 3, 4])
def test_decompose_roundtrip_analytic_inputs(N):
    # components analytic in p; reconstruction must reproduce all sheets
    rng = np.random.default_rng(7 + N)
    coeffs = rng.standard_normal((N, 3))
    p = np.linspace(0.25, 2.5, 11).astype(complex)

    def sheet(k):
        logq = np.log(p) + 2j * np.pi * k
        tot = np.zeros_like(p)
        for j in range(N):
            Aj = coeffs[j, 0] + coeffs[j, 1] * p + coeffs[j, 2] * p * p
            tot = tot + Aj * np.exp((j / N) * logq)
        return tot

    vals = np.stack([sheet(k) for k in range(N)])
    comp = decompose_ramified(SheetSamples(p, vals, N))
    # roundtrip: rebuild every sheet from recovered components
    worst = 0.0
    for k in range(N):
        logp = np.log(p) + 2j * np.pi * k
        rebuilt = sum(comp[j] * np.exp((j / N) * logp) for j in range(N))
        worst = max(worst, float(np.max(np.abs(rebuilt - vals[k]))))
    assert worst < 1e-10
