"""Finite-basis resolvent (Green's function) matrix elements.

Four interchangeable routes to G_{n,m}(z), the (n, m) element of
(H - z Omega)^{-1}:

* ``green_spectral``          -- spectral sum over the (generalized)
                                 eigenpairs; the reference route.
* ``green_cofactor``          -- signed ratio of determinants of the
                                 row/column-deleted and full matrices.
* ``green_eigprod_general``   -- ratio of eigenvalue products of the
                                 deleted and full pencils (non-orthogonal
                                 basis; undefined for some n != m).
* ``green_diag_orthonormal``  -- the same product form specialized to
                                 diagonal elements in an orthonormal basis.

The eigenvalue-only routes pay one eigendecomposition up front and are
then cheap per evaluation point, which is what the scattering and
density-of-states scans exploit.

Also here: partial-fraction coefficients of G, and the closed-form
identities that recover eigenvector component products from eigenvalue
spectra alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateSpectrumError,
    InputError,
    SingularMatrixError,
    SingularSubmatrixError,
    SpectrumEvaluationError,
)
from .matrix_core import (
    SpectralPair,
    _as_sym_array,
    delete_row_col,
    gen_sym_eig,
    is_spd,
    sym_eig,
)

# Two eigenvalues closer than this (relative to the spectral range) make
# the eigenvalue-only formulas ill-conditioned; they refuse and point the
# caller at the spectral sum.
DEGENERACY_RTOL = 1e-8

# z closer than this (relative to the spectral scale) to an eigenvalue
# counts as "on the spectrum".
POLE_RTOL = 1e-12


@dataclass(frozen=True)
class ResolventInput:
    """Evaluation request: pencil (H, Omega) and a complex point z.

    ``omega=None`` means an orthonormal basis (overlap = identity).
    """

    h: np.ndarray
    omega: Optional[np.ndarray]
    z: complex

    def __post_init__(self):
        h = _as_sym_array(self.h)
        object.__setattr__(self, "h", h)
        if self.omega is not None:
            om = _as_sym_array(self.omega)
            if om.shape != h.shape:
                raise InputError(f"H and Omega dimensions differ: {h.shape} vs {om.shape}")
            if not is_spd(om):
                raise InputError("overlap not SPD")
            object.__setattr__(self, "omega", om)
        object.__setattr__(self, "z", complex(self.z))

    @property
    def n(self) -> int:
        return self.h.shape[0]

    def pencil(self) -> np.ndarray:
        """H - z*Omega as a complex array."""
        if self.omega is None:
            out = self.h.astype(complex).copy()
            out[np.diag_indices_from(out)] -= self.z
            return out
        return self.h - self.z * self.omega

    def spectral_pair(self) -> SpectralPair:
        return sym_eig(self.h) if self.omega is None else gen_sym_eig(self.h, self.omega)


@dataclass(frozen=True)
class PartialFractions:
    """Pole/residue form of one resolvent element: sum_j coeffs[j] / (poles[j] - z)."""

    poles: np.ndarray
    coeffs: np.ndarray
    n: int
    m: int

    def evaluate(self, z: complex) -> complex:
        return complex(np.sum(self.coeffs / (self.poles - z)))


def _spectral_scale(eps: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(eps)))) if eps.size else 1.0


def _check_off_spectrum(eps: np.ndarray, z: complex, rtol: float = POLE_RTOL):
    gaps = np.abs(eps - z)
    tol = rtol * _spectral_scale(eps)
    i = int(np.argmin(gaps))
    if gaps[i] < tol:
        raise SpectrumEvaluationError(
            f"evaluation at spectrum: z={z} within {tol:g} of eigenvalue {eps[i]}",
            pole=float(eps[i]),
        )


def _check_nondegenerate(eps: np.ndarray):
    if eps.size < 2:
        return
    spread = max(float(eps[-1] - eps[0]), np.finfo(float).tiny)
    if np.min(np.diff(eps)) < DEGENERACY_RTOL * spread:
        raise DegenerateSpectrumError("degenerate spectrum; use green_spectral")


def paired_product_ratio(num, den):
    """prod(num) / prod(den) evaluated as paired ratios.

    Factors are matched largest-magnitude-first so each ratio stays O(1)
    for interlacing spectra; unmatched denominator factors divide at the
    end. Avoids overflow of the raw products at dimension ~100.
    """
    num = np.asarray(num)
    den = np.asarray(den)
    if num.size > den.size:
        raise InputError("more numerator than denominator factors")
    ns = num[np.argsort(-np.abs(num))]
    ds = den[np.argsort(-np.abs(den))]
    out = np.prod(ns / ds[: ns.size]) if ns.size else (1.0 + 0j if np.iscomplexobj(den) else 1.0)
    for extra in ds[ns.size :]:
        out = out / extra
    return out


def _slogdet(a) -> tuple:
    sign, logabs = np.linalg.slogdet(np.asarray(a))
    return sign, logabs


def _is_singular_submatrix(a: np.ndarray, rtol: float = 1e-12) -> bool:
    s = np.linalg.svd(a, compute_uv=False)
    return s[-1] <= rtol * max(s[0], np.finfo(float).tiny)


# ---------------------------------------------------------------------------
# Resolvent element routes
# ---------------------------------------------------------------------------


def green_spectral(inp: ResolventInput, n: int, m: int, pair: Optional[SpectralPair] = None) -> complex:
    """Spectral sum  sum_i gamma[n,i] gamma[m,i] / (sigma_i (eps_i - z)).

    ``pair`` may carry a precomputed decomposition of (H, Omega) for reuse
    across many z.
    """
    if pair is None:
        pair = inp.spectral_pair()
    _check_off_spectrum(pair.eps, inp.z)
    terms = pair.gamma[n] * pair.gamma[m] / (pair.sigma * (pair.eps - inp.z))
    return complex(np.sum(terms))


def green_cofactor(inp: ResolventInput, n: int, m: int) -> complex:
    """(-1)^(n+m) det(pencil with row n, column m deleted) / det(pencil).

    Valid for every (n, m) and any basis; the universal fallback when the
    eigenvalue-product form is undefined. Determinant ratio is assembled
    in log space so dimension ~100 does not overflow.
    """
    c = inp.pencil()
    sign_full, log_full = _slogdet(c)
    if sign_full == 0 or not np.isfinite(log_full):
        raise SpectrumEvaluationError(
            f"evaluation at spectrum: det(H - z*Omega) vanished at z={inp.z}", pole=inp.z
        )
    sub = delete_row_col(c, n, m)
    sign_sub, log_sub = _slogdet(sub)
    if sign_sub == 0:
        return 0j
    return complex((-1.0) ** (n + m) * sign_sub / sign_full * np.exp(log_sub - log_full))


def _gen_eigvals(h: np.ndarray, om: np.ndarray) -> np.ndarray:
    """Real generalized eigenvalues of a symmetric-definite pencil, ascending."""
    return scipy.linalg.eigh(h, om, eigvals_only=True)


def _deleted_pencil_eigs(h: np.ndarray, om: np.ndarray, n: int, m: int) -> np.ndarray:
    """Generalized eigenvalues of the (n, m)-deleted pencil.

    Symmetric-definite for n == m (real output); otherwise a QZ problem
    with complex eigenvalues, preceded by a singularity check on the
    deleted overlap.
    """
    hs = delete_row_col(h, n, m)
    os_ = delete_row_col(om, n, m)
    if n == m:
        return _gen_eigvals(hs, os_)
    if _is_singular_submatrix(os_):
        raise SingularSubmatrixError(
            "eigenvalue-product form undefined: deleted overlap submatrix is "
            f"singular for (n, m)=({n}, {m}); use green_cofactor"
        )
    alpha, beta = scipy.linalg.eig(hs, os_, right=False, homogeneous_eigvals=True)
    if np.any(np.abs(beta) < 1e-300):
        raise SingularSubmatrixError(
            f"deleted pencil for (n, m)=({n}, {m}) has an infinite eigenvalue; use green_cofactor"
        )
    return alpha / beta


def green_eigprod_general(
    inp: ResolventInput,
    n: int,
    m: int,
    pair: Optional[SpectralPair] = None,
    sub_eigs: Optional[np.ndarray] = None,
) -> complex:
    """Eigenvalue-product form for a non-orthogonal basis.

    (-1)^(n+m) * (det Omega^(n,m) / det Omega)
               * prod_i (eps_sub_i - z) / prod_j (eps_j - z)

    The deleted-pencil eigenvalues ``sub_eigs`` depend only on (n, m), not
    on z, so callers scanning many z should compute them once (helper:
    ``_deleted_pencil_eigs``).
    """
    if inp.omega is None:
        raise InputError("green_eigprod_general requires an explicit overlap matrix")
    eps = pair.eps if pair is not None else _gen_eigvals(inp.h, inp.omega)
    _check_off_spectrum(np.asarray(eps), inp.z)
    if sub_eigs is None:
        sub_eigs = _deleted_pencil_eigs(inp.h, inp.omega, n, m)
    sign_full, log_full = _slogdet(inp.omega)
    sub_om = delete_row_col(inp.omega, n, m)
    sign_sub, log_sub = _slogdet(sub_om)
    if sign_sub == 0:
        raise SingularSubmatrixError(
            "eigenvalue-product form undefined: deleted overlap submatrix is "
            f"singular for (n, m)=({n}, {m}); use green_cofactor"
        )
    pref = (-1.0) ** (n + m) * sign_sub * sign_full * np.exp(log_sub - log_full)
    ratio = paired_product_ratio(np.asarray(sub_eigs) - inp.z, np.asarray(eps) - inp.z)
    return complex(pref * ratio)


def green_diag_orthonormal(
    h,
    z: complex,
    n: int,
    eps: Optional[np.ndarray] = None,
    sub_eps: Optional[np.ndarray] = None,
) -> complex:
    """Diagonal element in an orthonormal basis as a pure eigenvalue ratio:

        prod_i (eps^(n,n)_i - z) / prod_j (eps_j - z)

    Both spectra are z-independent; pass them in when scanning many z.
    """
    hm = _as_sym_array(h)
    if eps is None:
        eps = np.linalg.eigvalsh(hm)
    _check_off_spectrum(np.asarray(eps), complex(z))
    if sub_eps is None:
        sub_eps = np.linalg.eigvalsh(delete_row_col(hm, n, n))
    return complex(paired_product_ratio(np.asarray(sub_eps) - z, np.asarray(eps) - z))


def inverse_oracle(inp: ResolventInput) -> np.ndarray:
    """Brute-force (H - z*Omega)^{-1} by pivoted solve; test oracle."""
    c = inp.pencil()
    try:
        return np.linalg.solve(c, np.eye(c.shape[0], dtype=complex))
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"pencil is singular at z={inp.z}: {exc}") from exc


# ---------------------------------------------------------------------------
# Partial fractions and eigenvector-from-eigenvalues identities
# ---------------------------------------------------------------------------


def _coeff_from_dets(h: np.ndarray, eps: np.ndarray, n: int, m: int, j: int) -> float:
    """Residue of G_{n,m} at eps_j in an orthonormal basis:

        (-1)^(n+m) det((H - eps_j I)^(n,m)) / prod_{k != j} (eps_k - eps_j)

    The identity is shifted in before the row/column deletion: the
    deleted identity is not an identity when n != m. The determinant
    comes from a pivoted factorization rather than eigenvalues of the
    (generally nonsymmetric) deleted matrix; assembled in log space.
    """
    shifted = delete_row_col(h - eps[j] * np.eye(h.shape[0]), n, m)
    sign_num, log_num = _slogdet(shifted)
    if sign_num == 0:
        return 0.0
    gaps = np.delete(eps, j) - eps[j]
    sign_den = np.prod(np.sign(gaps))
    log_den = float(np.sum(np.log(np.abs(gaps))))
    return float((-1.0) ** (n + m) * sign_num * sign_den * np.exp(log_num - log_den))


def green_partial_fractions(h, n: int, m: int, pair: Optional[SpectralPair] = None) -> PartialFractions:
    """Pole/residue decomposition of G_{n,m}(z) in an orthonormal basis.

    Residues come from determinants of the shifted deleted matrix, so no
    eigenvectors are needed. Requires a non-degenerate spectrum.
    """
    hm = _as_sym_array(h)
    eps = pair.eps if pair is not None else np.linalg.eigvalsh(hm)
    eps = np.asarray(eps)
    _check_nondegenerate(eps)
    if hm.shape[0] == 1:
        coeffs = np.array([1.0 if n == m else 0.0])
        return PartialFractions(poles=eps.copy(), coeffs=coeffs, n=n, m=m)
    coeffs = np.array([_coeff_from_dets(hm, eps, n, m, j) for j in range(eps.size)])
    return PartialFractions(poles=eps.copy(), coeffs=coeffs, n=n, m=m)


def eigvec_prod_from_eigs(h, n: int, m: int, k: int) -> float:
    """gamma[n,k] * gamma[m,k] of a symmetric matrix from eigenvalues only.

    This is exactly the k-th partial-fraction residue of G_{n,m}.
    """
    hm = _as_sym_array(h)
    if hm.shape[0] == 1:
        return 1.0
    eps = np.linalg.eigvalsh(hm)
    _check_nondegenerate(eps)
    return _coeff_from_dets(hm, eps, n, m, k)


def eigvec_sq_from_eigs(h, n: int, k: int) -> float:
    """gamma[n,k]^2 from the spectra of H and its (n, n)-deleted principal
    submatrix:

        prod_i (eps^(n,n)_i - eps_k) / prod_{j != k} (eps_j - eps_k)

    Interlacing makes every paired ratio nonnegative and bounded.
    """
    hm = _as_sym_array(h)
    if hm.shape[0] == 1:
        return 1.0
    eps = np.linalg.eigvalsh(hm)
    _check_nondegenerate(eps)
    sub_eps = np.linalg.eigvalsh(delete_row_col(hm, n, n))
    num = sub_eps - eps[k]
    den = np.delete(eps, k) - eps[k]
    return float(np.real(paired_product_ratio(num, den)))


def eigvec_from_eigs_general(h, omega, n: int, m: int, k: int) -> float:
    """gamma[n,k] * gamma[m,k] for a symmetric-definite pencil from
    eigenvalues and overlap determinants only, under the sigma = 1
    normalization:

        (-1)^(n+m) * (det Omega^(n,m) / det Omega)
                   * prod_i (eps_sub_i - eps_k) / prod_{j != k} (eps_j - eps_k)
    """
    hm = _as_sym_array(h)
    om = _as_sym_array(omega)
    if hm.shape != om.shape:
        raise InputError("H and Omega dimensions differ")
    if not is_spd(om):
        raise InputError("overlap not SPD")
    if hm.shape[0] == 1:
        return 1.0 / float(om[0, 0]) if n == m == 0 else 0.0
    eps = _gen_eigvals(hm, om)
    _check_nondegenerate(eps)
    sub_eigs = _deleted_pencil_eigs(hm, om, n, m)
    sign_full, log_full = _slogdet(om)
    sign_sub, log_sub = _slogdet(delete_row_col(om, n, m))
    if sign_sub == 0:
        raise SingularSubmatrixError(
            "eigenvalue-product form undefined: deleted overlap submatrix is "
            f"singular for (n, m)=({n}, {m}); use the spectral route"
        )
    pref = (-1.0) ** (n + m) * sign_sub * sign_full * np.exp(log_sub - log_full)
    num = np.asarray(sub_eigs) - eps[k]
    den = np.delete(eps, k) - eps[k]
    return float(np.real(pref * paired_product_ratio(num, den)))
