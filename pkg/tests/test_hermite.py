import math
from fractions import Fraction

import numpy as np
import pytest

from hermix.errors import OrderTooLarge
from hermix.hermite import (HermiteBasis, gaussian_overlap, hermite_fn,
                            hermite_l1_norm, hermite_values, inner_shifted,
                            inner_with_gaussian)
from hermix.quadrature import integrate_vec

PI4 = math.pi ** 0.25


def _psi_exact(j, x):
    """Evaluate psi_j from exact integer Hermite-polynomial coefficients.

    h_{j+1} = 2x h_j - 2j h_{j-1} carried in exact arithmetic, then
    psi_j(x) = (-1)^j (2^j j! sqrt(pi))^{-1/2} h_j(x) e^{-x^2/2}.
    Only usable for small j; the factorials overflow floats past ~85.
    """
    coeffs = {0: [Fraction(1)], 1: [Fraction(0), Fraction(2)]}
    for k in range(1, j):
        prev, cur = coeffs[k - 1], coeffs[k]
        nxt = [Fraction(0)] * (k + 2)
        for p, c in enumerate(cur):
            nxt[p + 1] += 2 * c
        for p, c in enumerate(prev):
            nxt[p] -= 2 * k * c
        coeffs[k + 1] = nxt
    poly = coeffs[j]
    val = sum(float(c) * x**p for p, c in enumerate(poly))
    norm = math.sqrt(2.0**j * math.factorial(j) * math.sqrt(math.pi))
    return (-1) ** j * val * math.exp(-0.5 * x * x) / norm


def test_order_zero_peak():
    assert abs(hermite_fn(0, 0.0) - 1.0 / PI4) < 1e-15
    assert hermite_fn(1, 0.0) == 0.0


def test_recurrence_matches_exact_polynomials():
    for j in (1, 2, 3, 5, 7, 12, 20):
        for x in (-2.7, -1.0, 0.4, 1.3, 3.1):
            want = _psi_exact(j, x)
            got = hermite_fn(j, x)
            assert abs(got - want) <= 1e-12 * max(1.0, abs(want) * 1e3)


def test_hermite_values_consistent_with_scalar():
    x = np.array([-1.5, 0.0, 0.25, 2.0])
    table = hermite_values(6, x)
    assert table.shape == (7, 4)
    for j in range(7):
        for k, xv in enumerate(x):
            assert abs(table[j, k] - hermite_fn(j, float(xv))) < 1e-14


def test_order_cap():
    with pytest.raises(OrderTooLarge):
        hermite_fn(513, 0.0)
    with pytest.raises(OrderTooLarge):
        inner_shifted(513, 0, 1.0)


def test_orthonormality_by_quadrature():
    """<psi_j1, psi_j2> = delta within 1e-8 for all j1, j2 <= 20."""
    lim = math.sqrt(2 * 20 + 1) + 12
    table = {}
    for j1 in range(21):
        for j2 in range(j1, 21):
            val = integrate_vec(
                lambda x: hermite_values(max(j1, j2), x)[j1]
                * hermite_values(max(j1, j2), x)[j2],
                -lim, lim, tol=1e-10)
            table[j1, j2] = val
    for (j1, j2), val in table.items():
        want = 1.0 if j1 == j2 else 0.0
        assert abs(val - want) < 1e-8


# ---------------------------------------------------------------------------
# gaussian_overlap


def test_overlap_at_zero_and_one():
    assert abs(gaussian_overlap(0.0, 0.0) - 1.0 / math.sqrt(4 * math.pi)) < 1e-15
    want = math.exp(-0.25) / math.sqrt(4 * math.pi)
    assert abs(gaussian_overlap(0.0, 1.0) - want) < 1e-15
    # quadrature cross-check of the (0,1) value
    f = lambda x: (np.exp(-0.5 * x * x) * np.exp(-0.5 * (x - 1) ** 2)
                   / (2 * math.pi))
    assert abs(integrate_vec(f, -10.0, 11.0) - want) < 1e-12


def test_overlap_symmetry():
    rng = np.random.default_rng(3)
    for _ in range(25):
        a, b = rng.uniform(-4, 4, 2)
        assert gaussian_overlap(a, b) == gaussian_overlap(b, a)


# ---------------------------------------------------------------------------
# inner_shifted


def test_inner_shifted_orthonormal_at_zero_shift():
    for j1 in range(8):
        for j2 in range(8):
            want = 1.0 if j1 == j2 else 0.0
            assert abs(inner_shifted(j1, j2, 0.0) - want) < 1e-15


def test_inner_shifted_frozen_values():
    assert abs(inner_shifted(0, 0, 2.0) - math.exp(-1.0)) < 1e-15
    # sqrt(e^{-2} * 2^2 / 2!), positive — from the squared-value identity
    want = math.sqrt(math.exp(-2.0) * 2.0)
    assert abs(inner_shifted(2, 0, 2.0) - want) < 1e-14


def test_inner_shifted_magnitude_bound():
    rng = np.random.default_rng(9)
    for _ in range(60):
        j1 = int(rng.integers(0, 30))
        j2 = int(rng.integers(0, 30))
        mu = float(rng.uniform(-8, 8))
        assert abs(inner_shifted(j1, j2, mu)) <= 1.0 + 1e-12


def test_inner_shifted_quadrature_oracle():
    """Closed form vs direct quadrature, 1e-10, j <= 12, |mu| <= 8."""
    cases = [(0, 0, 2.0), (1, 0, 2.0), (2, 0, 2.0), (3, 2, -1.5),
             (5, 5, 0.7), (12, 4, 4.0), (7, 11, -8.0), (2, 2, 0.05)]
    rng = np.random.default_rng(17)
    for _ in range(10):
        cases.append((int(rng.integers(0, 13)), int(rng.integers(0, 13)),
                      float(rng.uniform(-8, 8))))
    for j1, j2, mu in cases:
        jm = max(j1, j2)
        lim = math.sqrt(2 * jm + 1) + 12 + abs(mu)

        def f(x):
            return hermite_values(jm, x)[j1] * hermite_values(jm, x - mu)[j2]

        want = integrate_vec(f, -lim, lim, tol=1e-11)
        assert abs(inner_shifted(j1, j2, mu) - want) < 1e-10


def test_squared_tail_identity():
    """1 - sum_{j<l} <psi_j, psi_{0,r}>^2 = Poisson tail, to 1e-12."""
    for r in (3.0, 4.0, 5.0):
        lam = r * r / 2
        term = math.exp(-lam)
        terms = []
        for j in range(400):
            terms.append(term)
            term *= lam / (j + 1)
        for ell in range(1, 21):
            head = sum(inner_shifted(j, 0, r) ** 2 for j in range(ell))
            tail = math.fsum(terms[ell:])
            assert abs((1.0 - head) - tail) < 1e-12


# ---------------------------------------------------------------------------
# inner_with_gaussian


def test_gaussian_inner_frozen_values():
    assert abs(inner_with_gaussian(0, 0.0) - 0.5311259660135984) < 1e-14
    for j in (1, 2, 5, 17):
        assert inner_with_gaussian(j, 0.0) == 0.0
    want = -math.exp(-0.25) / (2 * PI4)
    assert abs(inner_with_gaussian(1, 1.0) - want) < 1e-15


def test_gaussian_inner_quadrature_oracle():
    g = lambda x, mu: np.exp(-0.5 * (x - mu) ** 2) / math.sqrt(2 * math.pi)
    for j, mu in ((1, 1.0), (2, 0.8), (3, -1.7), (6, 2.5), (9, -0.3)):
        want = integrate_vec(lambda x: g(x, mu) * hermite_values(j, x)[j],
                             -16.0 - abs(mu), 16.0 + abs(mu), tol=1e-11)
        assert abs(inner_with_gaussian(j, mu) - want) < 1e-10


def test_gaussian_inner_decay_bound():
    """|<g_mu, psi_j>| <= (1/sqrt(j!)) (1/(2 sqrt 2))^j for |mu| <= 1/2."""
    from math import factorial, sqrt
    for mu in np.linspace(-0.5, 0.5, 11):
        for j in range(61):
            bound = (1 / sqrt(factorial(j))) * (1 / (2 * sqrt(2))) ** j
            assert abs(inner_with_gaussian(j, float(mu))) <= bound * (1 + 1e-12)


# ---------------------------------------------------------------------------
# hermite_l1_norm


def test_l1_norm_order_zero_closed_form():
    want = math.sqrt(2 * math.pi) / PI4
    assert abs(hermite_l1_norm(0) - want) < 1e-9


def test_l1_norm_symmetry_order_one():
    half = integrate_vec(lambda x: hermite_values(1, x)[1], 0.0, 14.0,
                         tol=1e-11)
    # psi_1 < 0 on x > 0 under this sign convention, hence the abs
    assert abs(hermite_l1_norm(1) - 2 * abs(half)) < 1e-9


def test_l1_norm_growth_band():
    # ||psi_j||_1 / j^{1/4} stays inside the measured band over j <= 40
    ratios = [hermite_l1_norm(j) / j**0.25 for j in range(1, 41)]
    assert min(ratios) > 1.50
    assert max(ratios) < 2.17
    r16 = hermite_l1_norm(16) / 16**0.25
    r1 = hermite_l1_norm(1)
    assert abs(r16 / r1 - 0.7567) < 0.02


# ---------------------------------------------------------------------------
# HermiteBasis


def test_basis_shift_and_validation():
    b = HermiteBasis(center=1.5, order=4)
    x = np.array([0.0, 1.5, 2.0])
    vals = b.values(x)
    assert vals.shape == (4, 3)
    for j in range(4):
        assert abs(vals[j, 1] - hermite_fn(j, 0.0)) < 1e-15
        assert abs(b.function(j, 2.0) - hermite_fn(j, 0.5)) < 1e-15
    with pytest.raises(ValueError):
        HermiteBasis(center=0.0, order=0)
