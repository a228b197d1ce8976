"""Pointwise checks of the sharp integral inequalities used by the
contraction estimates, each sampled over the full stated parameter range."""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gamma

from borelsum.bounds import (
    BoundCheck,
    exp_weight_convolution_bound,
    gamma_tail_bound,
    weighted_time_integral_bound,
)

ALPHAS = [1.001, 1.25, 1.5, 2.0, 3.0, 5.0, 7.5, 10.0]
MUS = [0.1, 1.0, 10.0, 100.0]


@pytest.mark.parametrize("alpha", ALPHAS)
@pytest.mark.parametrize("mu", MUS)
def test_gamma_tail_bound_holds(alpha, mu):
    check = gamma_tail_bound(alpha, mu)
    assert check.ok, f"alpha={alpha}, mu={mu}: {check.lhs} > {check.rhs}"


def test_gamma_tail_lhs_matches_direct_quadrature():
    alpha, mu = 2.5, 3.0
    integral, _ = quad(lambda s: s ** (alpha - 1) * math.exp(-mu * s), 0.0, 1.0)
    check = gamma_tail_bound(alpha, mu)
    assert abs(check.lhs - (1.0 + mu ** alpha) * integral) < 1e-10


def test_gamma_tail_rejects_bad_parameters():
    with pytest.raises(ValueError):
        gamma_tail_bound(1.0, 1.0)
    with pytest.raises(ValueError):
        gamma_tail_bound(2.0, 0.0)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 5.0])
@pytest.mark.parametrize("mu", [0.1, 1.0, 10.0])
@pytest.mark.parametrize("nu", [3.0, 5.0, 10.0])
@pytest.mark.parametrize("m", [1, 2, 3])
@pytest.mark.parametrize("sigma", [0, 1])
def test_weighted_time_integral_bound_holds(alpha, mu, nu, m, sigma):
    check = weighted_time_integral_bound(alpha, mu, nu, m=m, sigma=sigma)
    assert check.ok, (
        f"alpha={alpha}, mu={mu}, nu={nu}, m={m}, sigma={sigma}: "
        f"{check.lhs} > {check.rhs}"
    )


def test_weighted_time_integral_lhs_matches_direct_quadrature():
    alpha, mu, nu, m, sigma = 1.5, 2.0, 4.0, 2, 1

    def integrand(s):
        return (
            math.exp(-nu * mu * (1.0 - (1.0 - s) ** m))
            * s ** (alpha - 1)
            / (1.0 + mu ** 2 * (1.0 - s) ** 2)
        )

    integral, _ = quad(integrand, 0.0, 1.0, points=[0.0])
    check = weighted_time_integral_bound(alpha, mu, nu, m=m, sigma=sigma)
    assert abs(check.lhs - (mu * nu) ** alpha * integral) < 1e-8 * check.lhs


def test_weighted_time_integral_rejects_bad_parameters():
    with pytest.raises(ValueError):
        weighted_time_integral_bound(1.0, 1.0, 2.0)  # needs nu > 2
    with pytest.raises(ValueError):
        weighted_time_integral_bound(1.0, 1.0, 3.0, sigma=2)


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("nu", [2.0, 5.0])
def test_exp_weight_convolution_bound_holds(n, nu):
    # geometric sample of |p| covering small, unit, and large arguments
    for p in np.geomspace(0.01, 10.0, 25):
        if nu * p ** n > 700.0:
            continue
        check = exp_weight_convolution_bound(n, nu, p)
        assert check.ok, f"n={n}, nu={nu}, p={p}: {check.lhs} > {check.rhs}"


def test_exp_weight_convolution_lhs_matches_direct_quadrature():
    n, nu, p = 3, 2.0, 1.3

    def integrand(s):
        return math.exp(nu * s ** n + nu * (p - s) ** n)

    integral, _ = quad(integrand, 0.0, p, limit=200)
    check = exp_weight_convolution_bound(n, nu, p)
    scale = p * math.exp(nu * p ** n)
    assert abs(check.lhs - integral / scale) < 1e-8 * check.lhs


def test_exp_weight_convolution_rejects_bad_parameters():
    with pytest.raises(ValueError):
        exp_weight_convolution_bound(1, 2.0, 1.0)
    with pytest.raises(ValueError):
        exp_weight_convolution_bound(2, 2.0, 0.0)


def test_bound_check_margin():
    assert BoundCheck(1.0, 2.0).margin == 2.0
    assert BoundCheck(0.0, 1.0).margin == math.inf
    assert not BoundCheck(2.0, 1.0).ok
    assert BoundCheck(1.0, 1.0).ok
