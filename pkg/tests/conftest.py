"""Shared test helpers: random matrix factories and independent oracles.

The oracles here deliberately avoid the code paths they check: the
determinant oracle is cofactor expansion, the cubic eigenvalue oracle is
Cardano's closed form, never LAPACK.
"""

import math

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.RandomState(20240711)


def random_symmetric(rng, n, scale=1.0):
    a = rng.randn(n, n) * scale
    return 0.5 * (a + a.T)


def random_spd(rng, n, shift=None):
    b = rng.randn(n, n)
    m = b @ b.T + (shift if shift is not None else n) * np.eye(n)
    return 0.5 * (m + m.T)


def det_cofactor(a):
    """Determinant by first-row cofactor expansion; O(n!) but exact logic."""
    a = np.asarray(a)
    n = a.shape[0]
    if n == 1:
        return a[0, 0]
    total = 0.0
    for j in range(n):
        minor = np.delete(np.delete(a, 0, axis=0), j, axis=1)
        total += (-1.0) ** j * a[0, j] * det_cofactor(minor)
    return total


def cubic_roots(c2, c1, c0):
    """Real roots of x^3 + c2 x^2 + c1 x + c0, via Cardano/trigonometric
    form (symmetric matrices always fall in the three-real-roots case)."""
    p = c1 - c2**2 / 3.0
    q = 2.0 * c2**3 / 27.0 - c2 * c1 / 3.0 + c0
    shift = -c2 / 3.0
    if abs(p) < 1e-14:
        r = -q
        root = math.copysign(abs(r) ** (1.0 / 3.0), r)
        return sorted([shift + root] * 3)
    disc = -4.0 * p**3 - 27.0 * q**2
    assert disc > -1e-10, "expected three real roots for a symmetric matrix"
    m = 2.0 * math.sqrt(-p / 3.0)
    theta = math.acos(min(1.0, max(-1.0, 3.0 * q / (p * m)))) / 3.0
    roots = [shift + m * math.cos(theta - 2.0 * math.pi * k / 3.0) for k in range(3)]
    return sorted(roots)


def char_poly_3x3(a):
    """Coefficients (c2, c1, c0) of det(xI - A) = x^3 + c2 x^2 + c1 x + c0."""
    tr = a[0, 0] + a[1, 1] + a[2, 2]
    minors = (
        a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1]
        + a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0]
        + a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    )
    return -tr, minors, -det_cofactor(a)
