"""Exponential-integrator phi functions and Chebyshev-in-time collocation.

phi_j(z) = sum_{m>=0} z^m / (m+j)!  so that
    int_0^t exp(-c (t - tau)) tau^k dtau = t^(k+1) k! phi_{k+1}(-c t).

These evaluate the integral operator exp(-c (t - tau)) applied to polynomial
time data exactly, uniformly in the stiffness c.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial import chebyshev as _cheb


def phi_stack(K, z):
    """phi_j(z) for j = 1..K, vectorized: returns shape (K,) + z.shape.

    Small |z| uses a Taylor start at the top order followed by the downward
    recurrence phi_j = z phi_{j+1} + 1/j! (stable for |z| < 1).  Larger |z|
    starts from phi_1 = (e^z - 1)/z and recurses upward,
    phi_{j+1} = (phi_j - 1/j!)/z, which contracts errors by 1/|z|.
    """
    z = np.asarray(z, dtype=complex)
    az = np.abs(z)
    small = az <= 0.9
    large = az > 30.0
    mid = ~small & ~large

    # --- small |z|: Taylor at order K, then downward recurrence -----------
    zs = np.where(small, z, 0.0)
    top = np.zeros(z.shape, dtype=complex)
    term = np.ones(z.shape, dtype=complex) / math.factorial(K)
    for m in range(1, 40):
        top += term
        term = term * zs / (K + m)
        if np.max(np.abs(term)) < 1e-22:
            break
    down = np.empty((K,) + z.shape, dtype=complex)
    down[K - 1] = top
    for j in range(K - 1, 0, -1):
        down[j - 1] = zs * down[j] + 1.0 / math.factorial(j)

    # --- moderate |z|: cancellation-free integral representation,
    #     phi_j(z) = int_0^1 e^{z(1-th)} th^{j-1}/(j-1)! dth, Gauss-Legendre.
    theta, wq = np.polynomial.legendre.leggauss(60)
    theta = 0.5 * (theta + 1.0)
    wq = 0.5 * wq
    zm = np.where(mid, z, 0.0)
    ez = np.exp(zm[..., None] * (1.0 - theta))           # (..., Q)
    midv = np.empty((K,) + z.shape, dtype=complex)
    thpow = np.ones_like(theta)
    for j in range(1, K + 1):
        midv[j - 1] = (ez * (wq * thpow / math.factorial(j - 1))).sum(axis=-1)
        thpow = thpow * theta

    # --- large |z|: upward recurrence from phi_1, contracts errors by 1/|z|
    zl = np.where(large, z, 40.0)
    up = np.empty((K,) + z.shape, dtype=complex)
    up[0] = (np.exp(zl) - 1.0) / zl
    for j in range(1, K):
        up[j] = (up[j - 1] - 1.0 / math.factorial(j)) / zl

    out = np.where(small[None, ...], down, np.where(mid[None, ...], midv, up))
    return out


def exp_duhamel(c, t, poly_coeffs):
    """int_0^t exp(-c (t - tau)) q(tau) dtau for q(tau) = sum_k a_k tau^k.

    c, t broadcast together; poly_coeffs is a sequence whose entries a_k may
    themselves be arrays broadcastable against c*t.  Exact in the polynomial
    data, robust for any complex stiffness c.
    """
    c = np.asarray(c, dtype=complex)
    t = np.asarray(t, dtype=float)
    K = len(poly_coeffs)
    z = -c * t
    phis = phi_stack(K, z)
    total = np.zeros(np.broadcast(c, t).shape, dtype=complex)
    tk = t ** 0
    for k, a in enumerate(poly_coeffs):
        total = total + a * (tk * t) * math.factorial(k) * phis[k]
        tk = tk * t
    return total


class TimeGrid:
    """Chebyshev collocation nodes on [0, T] (including both endpoints).

    Time-dependent grid functions carry their values at these nodes; the
    conversion to power-basis coefficients in sigma = t/T supports the exact
    Duhamel integration above.
    """

    def __init__(self, T, n_nodes=12):
        if T <= 0 or n_nodes < 2:
            raise ValueError("need T > 0 and at least 2 time nodes")
        self.T = float(T)
        self.n = int(n_nodes)
        theta = np.pi * np.arange(self.n) / (self.n - 1)
        self.sigma = 0.5 * (1.0 - np.cos(theta))      # ascending in [0, 1]
        self.nodes = self.T * self.sigma
        x = 2.0 * self.sigma - 1.0
        V = _cheb.chebvander(x, self.n - 1)
        self._vinv = np.linalg.inv(V)

    def power_coeffs(self, values):
        """Power-basis coefficients in sigma = t/T along the LAST axis.

        values[..., i] are samples at self.nodes[i]; returns array of the
        same shape whose last axis holds a_k with
        f(t) = sum_k a_k (t/T)^k.
        """
        values = np.asarray(values, dtype=complex)
        chebc = values @ self._vinv.T
        # Chebyshev in x = 2 sigma - 1  ->  power basis in sigma
        out = np.zeros_like(chebc)
        flat = chebc.reshape(-1, chebc.shape[-1])
        oflat = out.reshape(-1, out.shape[-1])
        for i in range(flat.shape[0]):
            px = _cheb.cheb2poly(flat[i])                    # powers of x
            # substitute x = 2 sigma - 1
            ps = np.polynomial.polynomial.Polynomial([-1.0, 2.0])
            acc = np.polynomial.polynomial.Polynomial([0.0])
            for c in reversed(px):
                acc = acc * ps + c
            co = acc.coef
            oflat[i, :len(co)] = co
        return out

    def duhamel(self, c, values):
        """H(p, t_i) = int_0^{t_i} exp(-c(p)(t_i - tau)) G(p, tau) dtau.

        c has shape (M,), values has shape (M, n) sampled at self.nodes.
        Returns shape (M, n).
        """
        coeffs = self.power_coeffs(values)                   # (M, n), in sigma
        M = coeffs.shape[0]
        out = np.zeros((M, self.n), dtype=complex)
        # integral in sigma: T * int_0^{sigma_i} exp(-cT(sigma_i - s)) q(s) ds
        cT = np.asarray(c, dtype=complex) * self.T
        for i, si in enumerate(self.sigma):
            if si == 0.0:
                continue
            z = -cT * si
            phis = phi_stack(self.n, z)
            acc = np.zeros(M, dtype=complex)
            sk = 1.0
            for k in range(self.n):
                acc += coeffs[:, k] * (sk * si) * math.factorial(k) * phis[k]
                sk *= si
            out[:, i] = self.T * acc
        return out
