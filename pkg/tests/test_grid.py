"""Ray grids, the two norm families, and numerical convolution with
endpoint-singularity handling."""

import math

import numpy as np
import pytest

from borelsum.grid import (NuNormParams, RayGrid, RayGridFunction,
                           convolve_grid, exp_norm, m0_constant, nu_norm)


def _const(grid, value=1.0, exponent=0.0):
    return RayGridFunction(grid, np.full(grid.n_nodes, value, dtype=complex),
                           exponent)


# ---------------------------------------------------------------------------
# the weight constant

def test_m0_constant_value():
    m0 = m0_constant()
    assert 3.75 <= m0 <= 3.77


def test_m0_objective_limits():
    def obj(s):
        return 2 * (1 + s * s) * (math.log1p(s * s) + s * math.atan(s)) \
            / (s * (s * s + 4))
    assert obj(1e-8) < 1e-6                      # vanishes at the origin
    assert abs(obj(1e6) - math.pi) < 1e-4        # tends to pi at infinity
    # so the supremum is attained at an interior point
    assert m0_constant() > math.pi


# ---------------------------------------------------------------------------
# nu-norm

def test_nu_norm_of_one_is_m0():
    grid = RayGrid(8.0, 1024)
    val = nu_norm(_const(grid), NuNormParams(2.0, 1))
    # weight (1+p^2) e^{-nu p} is maximal at p = 0 for nu >= 1; the first
    # grid node sits near zero, so the sup matches M0 closely
    assert abs(val - m0_constant()) < 1e-3 * m0_constant()


def test_nu_norm_of_zero():
    grid = RayGrid(8.0, 256)
    assert nu_norm(_const(grid, 0.0), NuNormParams(5.0, 1)) == 0.0


def test_nu_norm_nonincreasing_in_nu():
    grid = RayGrid(8.0, 512)
    rng = np.random.default_rng(3)
    f = RayGridFunction(grid, rng.random(512) + 0.1, 0.0)
    vals = [nu_norm(f, NuNormParams(nu, 1)) for nu in (1.0, 2.0, 5.0, 12.0)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_nu_norm_diverges_when_weight_cancelled():
    nu = 2.0
    small = RayGrid(4.0, 256)
    big = RayGrid(16.0, 1024)
    vals = []
    for grid in (small, big):
        f = RayGridFunction(grid, np.exp(nu * grid.radii), 0.0)
        vals.append(nu_norm(f, NuNormParams(nu, 1)))
    assert vals[1] > 10.0 * vals[0]


# ---------------------------------------------------------------------------
# exponential-order norm

def test_exp_norm_of_one():
    grid = RayGrid(6.0, 512)
    f = _const(grid)
    # the sup sits at the innermost node, a hair below p = 0
    assert abs(exp_norm(f, 0.5, 3, times=np.array([0.0, 1.0])) - 1.0) < 1e-4


def test_exp_norm_absorbs_order_n_growth():
    nu, n = 0.7, 3
    grid = RayGrid(6.0, 512)
    f = RayGridFunction(grid, np.exp(nu * grid.radii ** n).astype(complex),
                        0.0)
    val = exp_norm(f, nu, n, times=np.array([0.0]))
    assert val <= 1.0 + 1e-12


# ---------------------------------------------------------------------------
# grid convolution

def test_convolve_one_one_linear():
    grid = RayGrid(4.0, 512)
    out = convolve_grid(_const(grid), _const(grid))
    assert np.max(np.abs(out.values - grid.points)) < 1e-10


def test_convolve_sqrt_pair_beta_value():
    grid = RayGrid(4.0, 2048)
    f = RayGridFunction(grid, np.sqrt(grid.radii).astype(complex), 0.5)
    out = convolve_grid(f, f)
    i = int(np.argmin(np.abs(grid.radii - 1.0)))
    # interpolate the convolution to p = 1 exactly via its p^2 scaling
    val = float(out.values[i].real) * (1.0 / grid.radii[i]) ** 2
    assert abs(val - math.pi / 8.0) < 1e-6 * (math.pi / 8.0)


def test_convolve_inverse_sqrt_pair_is_pi():
    grid = RayGrid(4.0, 2048)
    f = RayGridFunction(grid, 1.0 / np.sqrt(grid.radii).astype(complex),
                        -0.5)
    out = convolve_grid(f, f)
    i = int(np.argmin(np.abs(grid.radii - 1.0)))
    assert abs(out.values[i].real - math.pi) < 1e-5 * math.pi


def test_nonintegrable_origin_exponent_rejected():
    # a factor with origin power <= -1 cannot enter a convolution; the
    # grid-function constructor is the guard
    grid = RayGrid(4.0, 256)
    with pytest.raises(ValueError):
        RayGridFunction(grid, 1.0 / grid.radii, -1.0)


def test_convolve_rejects_mismatched_grids():
    f = _const(RayGrid(4.0, 256))
    g = _const(RayGrid(5.0, 256))
    with pytest.raises(ValueError):
        convolve_grid(f, g)


# ---------------------------------------------------------------------------
# norm submultiplicativity under convolution

@pytest.mark.parametrize("nu", [5.0, 8.0, 12.0])
def test_norm_submultiplicative_random_pairs(nu):
    grid = RayGrid(8.0, 512)
    rng = np.random.default_rng(int(nu))
    params = NuNormParams(nu, 1)
    for _ in range(100):
        a = rng.random(grid.n_nodes) + 0.05
        b = rng.random(grid.n_nodes) + 0.05
        f = RayGridFunction(grid, a.astype(complex), 0.0)
        g = RayGridFunction(grid, b.astype(complex), 0.0)
        lhs = nu_norm(convolve_grid(f, g), params)
        rhs = nu_norm(f, params) * nu_norm(g, params)
        assert lhs <= (1.0 + 1e-4) * rhs


# ---------------------------------------------------------------------------
# inverse-Laplace growth bound for monomials

@pytest.mark.parametrize("alpha", [1.0, 2.0, 5.0])
def test_borel_image_growth_bound(alpha):
    # G = p^{alpha-1}/Gamma(alpha) obeys |G| <= C |p|^{alpha-1} e^{2 rho |p|}
    # with rho = 0 and C = 1/Gamma(alpha)
    grid = RayGrid(8.0, 512)
    G = grid.radii ** (alpha - 1.0) / math.gamma(alpha)
    bound = grid.radii ** (alpha - 1.0) / math.gamma(alpha)
    assert np.all(G <= bound * (1.0 + 1e-12))
