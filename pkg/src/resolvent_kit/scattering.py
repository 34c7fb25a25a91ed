"""Scattering matrix from the tridiagonal reference-Hamiltonian recursion.

In the Laguerre basis the reference pencil J(E) = H0 - E*Overlap is
tridiagonal, so its sine-like and cosine-like coefficient sequences
c_n(E), s_n(E) satisfy a three-term recursion in the basis index. Only
two derived quantities are ever needed:

    T_n = (c_n - i s_n) / (c_n + i s_n)            (unimodular for E > 0)
    R_n(+/-) = (c_n +/- i s_n) / (c_(n-1) +/- i s_(n-1))

seeded at n = 0, 1 by Gauss-hypergeometric expressions of the scattering
kinematics and propagated by the recursion. With G the (last, last)
element of the full resolvent (H0 + V - E*Overlap)^(-1) and J the
boundary element of the reference pencil, the scattering matrix is

    S(E) = T_(N-1) * (1 + G J R_N(-)) / (1 + G J R_N(+))

which is exactly unimodular for real E and reduces to S = 1 when V = 0.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .basis import LAGUERRE, MatrixSet, SystemSpec, build_matrices
from .errors import (
    ConvergenceError,
    InputError,
    NumericalError,
    RecursionBreakdownError,
    SpectrumEvaluationError,
)
from .matrix_core import SpectralPair, gen_sym_eig


@dataclass(frozen=True)
class KinematicParams:
    """Scattering kinematics at one energy.

    theta is the Laguerre-basis angle with cos(theta) =
    (8E - lam^2)/(8E + lam^2), in (0, pi) for E > 0; t = Z / sqrt(2E) is
    the Coulomb strength parameter.
    """

    energy: float
    theta: float
    t: float

    @classmethod
    def for_system(cls, energy: float, lam: float, z_charge: float) -> "KinematicParams":
        if not energy > 0.0:
            raise InputError(f"scattering energy must be positive, got {energy}")
        cos_theta = (8.0 * energy - lam**2) / (8.0 * energy + lam**2)
        theta = math.acos(min(1.0, max(-1.0, cos_theta)))
        return cls(energy=energy, theta=theta, t=z_charge / math.sqrt(2.0 * energy))


@dataclass(frozen=True)
class CSCoefficients:
    """T_n and R_n(+/-) through some maximum index.

    ``r_plus[0]``/``r_minus[0]`` are NaN placeholders: the ratios start
    at index 1.
    """

    t: np.ndarray
    r_plus: np.ndarray
    r_minus: np.ndarray


@dataclass(frozen=True)
class ScatteringPoint:
    energy: float
    s: complex

    @property
    def delta(self) -> float:
        """Phase shift in (-pi/2, pi/2]: half the argument of S."""
        return 0.5 * cmath.phase(self.s)

    @property
    def abs_one_minus_s(self) -> float:
        return abs(1.0 - self.s)


# ---------------------------------------------------------------------------
# Gauss hypergeometric series
# ---------------------------------------------------------------------------

_BLOCK = 4096


def _hyp2f1_series(a: complex, b: complex, c: complex, x: complex, tol: float, max_terms: int) -> complex:
    """Direct power series sum_k (a)_k (b)_k / ((c)_k k!) x^k.

    Used on and inside the unit circle. On |x| = 1 the terms decay like a
    power of k while oscillating, so the stopping rule bounds the tail by
    summation by parts: |tail| <~ 2 |term| / |1 - x|. Near x = 1 that
    bound degrades and the term cap surfaces as an error instead of an
    extrapolated value.
    """
    if abs(x) > 1.0 + 1e-14:
        raise InputError(f"series argument must satisfy |x| <= 1, got |x| = {abs(x)}")
    one_minus_x = abs(1.0 - x)
    total = 1.0 + 0.0j
    term = 1.0 + 0.0j
    k0 = 0
    while k0 < max_terms:
        ks = np.arange(k0, min(k0 + _BLOCK, max_terms), dtype=float)
        ratios = (a + ks) * (b + ks) / ((c + ks) * (ks + 1.0)) * x
        terms = term * np.cumprod(ratios)
        total += terms.sum()
        term = terms[-1]
        k0 += ks.size
        if term == 0.0:  # terminating series
            return complex(total)
        bound = 2.0 * abs(term) / max(one_minus_x, 1e-300)
        if bound < tol * max(1.0, abs(total)):
            return complex(total)
    raise ConvergenceError(
        f"hypergeometric series did not converge within {max_terms} terms",
        partial_sum=complex(total),
        last_term=complex(term),
        tail_bound=2.0 * abs(term) / max(one_minus_x, 1e-300),
    )


def hyp2f1_b1(a: complex, c: complex, x: complex, tol: float = 1e-10, max_terms: int = 10**6) -> complex:
    """2F1(a, 1; c; x) = sum_k (a)_k / (c)_k x^k.

    Convergent here because either a is a nonpositive integer (the series
    terminates) or Re(c - a - 1) > 0 on the unit circle.
    """
    return _hyp2f1_series(a, 1.0, c, x, tol, max_terms)


# ---------------------------------------------------------------------------
# Seeds and recursion
# ---------------------------------------------------------------------------


def seed_coefficients(kin: KinematicParams, ell: int, tol: float = 1e-10, max_terms: int = 10**6):
    """T_0 and R_1(+) at the given kinematics.

    Both are ratios of Gauss hypergeometric values at e^(+/- 2 i theta);
    for real energy the numerator of T_0 is the conjugate of its
    denominator, which forces |T_0| = 1. A drift beyond 1e-8 therefore
    signals series corruption and raises.
    """
    it = 1j * kin.t
    x_minus = cmath.exp(-2j * kin.theta)
    x_plus = cmath.exp(2j * kin.theta)
    f_minus = _hyp2f1_series(-ell + it, 1.0, ell + 2.0 + it, x_minus, tol, max_terms)
    f_plus = _hyp2f1_series(-ell - it, 1.0, ell + 2.0 - it, x_plus, tol, max_terms)
    t0 = cmath.exp(2j * kin.theta) * (ell + 1.0 + it) * f_plus / ((ell + 1.0 - it) * f_minus)
    if abs(abs(t0) - 1.0) > 1e-8:
        raise NumericalError(
            f"seed T_0 lost unimodularity (|T_0| = {abs(t0)}) at E = {kin.energy}; "
            "hypergeometric series is unreliable here"
        )
    f2 = _hyp2f1_series(-ell + it, 2.0, ell + 3.0 + it, x_minus, tol, max_terms)
    r1_plus = (
        cmath.exp(-1j * kin.theta)
        * math.sqrt(2.0 * ell + 2.0)
        * f2
        / ((ell + 2.0 + it) * f_minus)
    )
    return t0, r1_plus


def cs_recursion(mats: MatrixSet, kin: KinematicParams, up_to: int, tol: float = 1e-10) -> CSCoefficients:
    """Propagate T_n and R_n(+/-) from the seeds through index ``up_to``
    using rows 1 .. up_to-1 of the tridiagonal reference pencil:

        R_(n+1) = -(J_nn + J_(n,n-1) / R_n) / J_(n,n+1)
        T_n     = T_(n-1) * R_n(-) / R_n(+)
    """
    size = mats.size
    if up_to > size:
        raise InputError(f"recursion index {up_to} exceeds basis size {size}")
    if mats.spec.basis.family != LAGUERRE:
        raise InputError("coefficient recursion is seeded for the Laguerre basis only")
    ell = mats.spec.basis.ell
    diag, off = mats.j_tridiagonal(kin.energy)

    t0, r1p = seed_coefficients(kin, ell, tol=tol)
    t = np.empty(up_to + 1, dtype=complex)
    r_plus = np.full(up_to + 1, complex("nan"), dtype=complex)
    r_minus = np.full(up_to + 1, complex("nan"), dtype=complex)
    t[0] = t0
    if up_to >= 1:
        r_plus[1] = r1p
        # c_n, s_n are real at real energy, so the minus-branch seed is the
        # complex conjugate of the plus branch.
        r_minus[1] = r1p.conjugate()
        t[1] = t[0] * r_minus[1] / r_plus[1]
    for n in range(1, up_to):
        if off[n] == 0.0:
            raise RecursionBreakdownError(f"recursion breakdown at n={n}: vanishing coupling", index=n)
        for r in (r_plus, r_minus):
            if r[n] == 0.0 or not np.isfinite(r[n]):
                raise RecursionBreakdownError(f"recursion breakdown at n={n}: vanishing ratio", index=n)
            r[n + 1] = -(diag[n] + off[n - 1] / r[n]) / off[n]
        t[n + 1] = t[n] * r_minus[n + 1] / r_plus[n + 1]
    return CSCoefficients(t=t, r_plus=r_plus, r_minus=r_minus)


# ---------------------------------------------------------------------------
# S-matrix
# ---------------------------------------------------------------------------


class ScatteringCalculator:
    """Precomputes the spectral data of one system and evaluates S(E)
    cheaply at many energies.

    The eigendecomposition of the full pencil (H0 + V, Overlap) is done
    once; each energy then costs one seed evaluation, one O(N) recursion
    sweep, and one O(N) spectral sum for the resolvent element.
    """

    def __init__(self, system: SystemSpec, mats: Optional[MatrixSet] = None, **build_kwargs):
        if system.basis.family != LAGUERRE:
            raise InputError("S-matrix evaluation requires the Laguerre basis")
        self.system = system
        self.mats = mats if mats is not None else build_matrices(system, **build_kwargs)
        self.pair: SpectralPair = gen_sym_eig(self.mats.h.data, self.mats.omega.data)
        last = self.mats.size - 1
        self._weights = self.pair.gamma[last] ** 2 / self.pair.sigma

    @property
    def eigenvalues(self) -> np.ndarray:
        """Generalized eigenvalues of (H, Overlap): poles of the finite
        resolvent, and the stabilization candidates for narrow resonances."""
        return self.pair.eps

    def green_last(self, energy: float) -> float:
        """G_(N-1,N-1)(E) of the full Hamiltonian via the spectral sum.

        Refuses only essentially exact pole hits (within a few ulp of an
        eigenvalue); narrow-resonance structure lives at gaps of 1e-12
        and below, which evaluate fine in floating point.
        """
        gaps = self.pair.eps - energy
        i = int(np.argmin(np.abs(gaps)))
        if abs(gaps[i]) < 1e-15 * max(1.0, abs(energy)):
            raise SpectrumEvaluationError(
                f"evaluation at spectrum: E={energy} sits on eigenvalue {self.pair.eps[i]}",
                pole=float(self.pair.eps[i]),
            )
        return float(np.sum(self._weights / gaps))

    def point(self, energy: float) -> ScatteringPoint:
        size = self.mats.size
        kin = KinematicParams.for_system(energy, self.system.basis.lam, self.system.z_charge)
        cs = cs_recursion(self.mats, kin, up_to=size)
        g = self.green_last(energy)
        j = self.mats.j_boundary(energy)
        gj = g * j
        denom = 1.0 + gj * cs.r_plus[size]
        if denom == 0.0:
            raise NumericalError(f"S-matrix denominator vanished at E={energy}")
        s = cs.t[size - 1] * (1.0 + gj * cs.r_minus[size]) / denom
        return ScatteringPoint(energy=energy, s=complex(s))


def s_matrix(system: SystemSpec, energy: float) -> ScatteringPoint:
    """One-shot S(E); use ScatteringCalculator for scans."""
    return ScatteringCalculator(system).point(energy)
