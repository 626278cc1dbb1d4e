"""Hermite functions and their Gaussian inner products.

The orthonormal basis used throughout is

    psi_j(x) = (-1)^j (2^j j! sqrt(pi))^(-1/2) h_j(x) e^(-x^2/2),

where h_j are the physicists' Hermite polynomials.  Note the (-1)^j:
with it, the three-term recurrence picks up a minus sign on the x term,

    psi_{j+1}(x) = -sqrt(2/(j+1)) x psi_j(x) - sqrt(j/(j+1)) psi_{j-1}(x),

and the Gaussian moments come out with the signs the closed forms below
expect (e.g. <g_1, psi_1> < 0).  A unit Gaussian centered at mu is, up
to scale, the zeroth basis function shifted by mu:

    g_mu = (1/sqrt(2 sqrt(pi))) psi_0(. - mu).

All shifted inner products reduce to finite sums over factorial ratios;
those are evaluated in exact integer arithmetic and only rounded once,
so the float results are fully accurate even where j! overflows a
double on its own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from mpmath import mp

from .errors import OrderTooLarge
from .numerics import BigReal
from .quadrature import integrate_vec, sign_change_points

MAX_ORDER = 512
MAX_L1_ORDER = 200


def _check_order(j, limit=MAX_ORDER):
    j = int(j)
    if j < 0:
        raise ValueError(f"order must be nonnegative, got {j}")
    if j > limit:
        raise OrderTooLarge(f"order {j} exceeds supported maximum {limit}")
    return j


def hermite_values(j_max, x):
    """All psi_0..psi_{j_max} at the points ``x`` (vectorized).

    Returns an array of shape (j_max + 1, len(x)).  The normalized
    recurrence is numerically stable: every row is bounded by ~0.8 in
    magnitude, so there is no overflow even at j_max = 512.
    """
    j_max = _check_order(j_max)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((j_max + 1, x.size))
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    if j_max >= 1:
        out[1] = -math.sqrt(2.0) * x * out[0]
    for j in range(1, j_max):
        out[j + 1] = (-math.sqrt(2.0 / (j + 1)) * x * out[j]
                      - math.sqrt(j / (j + 1.0)) * out[j - 1])
    return out


def hermite_fn(j, x, precision_bits=None):
    """psi_j(x) by the stable three-term recurrence.

    With ``precision_bits`` set, the recurrence runs in extended
    precision and a :class:`BigReal` is returned; otherwise a float.
    """
    j = _check_order(j)
    if precision_bits is None:
        return float(hermite_values(j, np.array([float(x)]))[j, 0])
    bits = int(precision_bits)
    with mp.workprec(bits):
        xv = mp.mpf(x) if not isinstance(x, BigReal) else mp.mpf(x._v)
        prev = mp.pi ** mp.mpf("-0.25") * mp.exp(-xv * xv / 2)
        if j == 0:
            return BigReal(prev, bits)
        cur = -mp.sqrt(2) * xv * prev
        for k in range(1, j):
            nxt = (-mp.sqrt(mp.mpf(2) / (k + 1)) * xv * cur
                   - mp.sqrt(mp.mpf(k) / (k + 1)) * prev)
            prev, cur = cur, nxt
        return BigReal(cur, bits)


def gaussian_overlap(mu1, mu2, precision_bits=None):
    """<g_mu1, g_mu2> = (1/sqrt(4 pi)) exp(-(mu1-mu2)^2/4)."""
    if precision_bits is None:
        d = float(mu1) - float(mu2)
        return math.exp(-0.25 * d * d) / math.sqrt(4.0 * math.pi)
    bits = int(precision_bits)
    with mp.workprec(bits):
        d = mp.mpf(mu1) - mp.mpf(mu2)
        v = mp.exp(-d * d / 4) / mp.sqrt(4 * mp.pi)
    return BigReal(v, bits)


def _inner_shifted_mp(j1, j2, mu, bits):
    """<psi_{j1,0}, psi_{j2,mu}> as an mpf at ``bits`` precision.

    Closed form: with q = mu/sqrt(2),

        e^(-mu^2/4) sum_{k<=min(j1,j2)} (-1)^(j1-k)
            * k! C(j1,k) C(j2,k) / sqrt(j1! j2!) * q^(j1+j2-2k).
    """
    with mp.workprec(bits):
        muv = mp.mpf(mu)
        q = muv / mp.sqrt(2)
        root = mp.sqrt(mp.mpf(math.factorial(j1) * math.factorial(j2)))
        acc = mp.mpf(0)
        for k in range(min(j1, j2) + 1):
            c = (math.factorial(k) * math.comb(j1, k) * math.comb(j2, k))
            term = mp.mpf(c) * q ** (j1 + j2 - 2 * k) / root
            if (j1 - k) % 2:
                term = -term
            acc += term
        return acc * mp.exp(-muv * muv / 4)


def inner_shifted(j1, j2, mu, precision_bits=None):
    """Inner product of psi_{j1} with psi_{j2} shifted by mu.

    Exact finite sum; |result| <= 1 by Cauchy-Schwarz.  At mu = 0 this
    is the Kronecker delta.  Float calls still evaluate in extended
    precision internally because the factorial ratios overflow doubles
    long before j = 512.
    """
    j1 = _check_order(j1)
    j2 = _check_order(j2)
    if precision_bits is None:
        work = 96 + j1 + j2
        return float(_inner_shifted_mp(j1, j2, float(mu), work))
    bits = int(precision_bits)
    return BigReal(_inner_shifted_mp(j1, j2, mu, bits + 16), bits)


def inner_with_gaussian(j, mu, precision_bits=None):
    """<g_mu, psi_j> = (-1)^j (2^(j+1) j! sqrt(pi))^(-1/2) e^(-mu^2/4) mu^j."""
    j = _check_order(j)
    if precision_bits is None:
        if mu == 0.0:
            return 1.0 / math.sqrt(2.0 * math.sqrt(math.pi)) if j == 0 else 0.0
        # log-space magnitude, sign tracked separately
        lg = (-0.5 * ((j + 1) * math.log(2.0) + math.lgamma(j + 1)
                      + 0.5 * math.log(math.pi))
              - 0.25 * mu * mu + j * math.log(abs(mu)))
        sign = 1.0 if (j % 2 == 0) else -1.0
        if mu < 0 and j % 2:
            sign = -sign
        return sign * math.exp(lg)
    bits = int(precision_bits)
    with mp.workprec(bits + 16):
        muv = mp.mpf(mu)
        denom = mp.sqrt(mp.mpf(2 ** (j + 1) * math.factorial(j)) * mp.sqrt(mp.pi))
        v = mp.exp(-muv * muv / 4) * muv ** j / denom
        if j % 2:
            v = -v
    return BigReal(v, bits)


def hermite_l1_norm(j):
    """||psi_j||_1 by quadrature, absolute tolerance 1e-10.

    Integrates |psi_j| over [-(sqrt(2j+1)+12), sqrt(2j+1)+12]; outside,
    the integrand is far below the 1e-18 truncation floor.  The j sign
    changes are isolated first so each segment is smooth.
    """
    j = _check_order(j, MAX_L1_ORDER)
    w = math.sqrt(2.0 * j + 1.0) + 12.0

    def f(x):
        return hermite_values(j, x)[j]

    if j == 0:
        return integrate_vec(f, -w, w, tol=1e-10)
    # oscillation wavelength is ~pi/sqrt(2j+1); scan several times finer
    step = math.pi / math.sqrt(2.0 * j + 1.0) / 6.0
    cuts = [-w] + sign_change_points(f, -w, w, scan_step=step) + [w]
    tol = 1e-10 / (len(cuts) - 1)
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        total += abs(integrate_vec(f, lo, hi, tol=tol))
    return total


@dataclass(frozen=True)
class HermiteBasis:
    """The shifted family psi_{j,center} = psi_j(. - center), j < order."""

    center: float
    order: int

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        _check_order(self.order - 1)

    def values(self, x):
        """Matrix of basis values, shape (order, len(x))."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return hermite_values(self.order - 1, x - self.center)

    def function(self, j, x):
        return self.values(x)[int(j)]
