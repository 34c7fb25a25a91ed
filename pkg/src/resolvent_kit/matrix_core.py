"""Dense symmetric and generalized symmetric-definite eigenproblems.

This is the linear-algebra substrate for the resolvent formulas: plain and
generalized eigendecompositions with a fixed normalization and sign
convention, determinants, and row/column-deleted submatrices. Everything
here is a pure function; returned arrays are frozen (non-writeable) so
results can be shared across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, InputError, OverlapNotSPDError

# Relative tolerance used by invariant checks (diagonality, eigenvalue
# consistency) unless the caller overrides it.
DEFAULT_RTOL = 1e-10


def _freeze(a):
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SymMatrix:
    """Real symmetric matrix, validated at construction.

    Symmetry must hold exactly (bitwise), not merely within round-off;
    callers that start from a nonsymmetric array should symmetrize with
    ``0.5 * (a + a.T)`` themselves, which is exactly symmetric in IEEE
    arithmetic.
    """

    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InputError(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] < 1:
            raise InputError("matrix dimension must be >= 1")
        if not np.array_equal(a, a.T):
            raise InputError("matrix is not exactly symmetric")
        object.__setattr__(self, "data", _freeze(a))

    @property
    def n(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class GeneralMatrix:
    """Real matrix of any shape; no symmetry requirement."""

    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data, dtype=float)
        if a.ndim != 2:
            raise InputError(f"expected a 2-d array, got shape {a.shape}")
        object.__setattr__(self, "data", _freeze(a))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class SpectralPair:
    """Solution of H Gamma = Omega Gamma diag(eps).

    ``eps`` ascending; ``gamma`` holds the eigenvectors as columns;
    ``sigma[i] = gamma[:,i]^T Omega gamma[:,i]`` and
    ``eta[i] = gamma[:,i]^T H gamma[:,i]``, so ``eps = eta / sigma``.
    The solvers below scale columns so that sigma == 1, but the formulas
    consuming a SpectralPair divide by sigma explicitly and therefore
    stay correct under any column rescaling.
    """

    eps: np.ndarray
    gamma: np.ndarray
    sigma: np.ndarray
    eta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eps", _freeze(np.asarray(self.eps, dtype=float)))
        object.__setattr__(self, "gamma", _freeze(np.asarray(self.gamma, dtype=float)))
        object.__setattr__(self, "sigma", _freeze(np.asarray(self.sigma, dtype=float)))
        object.__setattr__(self, "eta", _freeze(np.asarray(self.eta, dtype=float)))

    @property
    def n(self) -> int:
        return self.eps.shape[0]

    def rescaled(self, factors) -> "SpectralPair":
        """Multiply column i of gamma by factors[i] (sigma, eta pick up
        the square). Used by scale-invariance tests."""
        f = np.asarray(factors, dtype=float)
        return SpectralPair(self.eps, self.gamma * f, self.sigma * f**2, self.eta * f**2)


def _as_square_array(a) -> np.ndarray:
    if isinstance(a, SymMatrix) or isinstance(a, GeneralMatrix):
        a = a.data
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"expected a square matrix, got shape {a.shape}")
    return a


def _as_sym_array(a) -> np.ndarray:
    if isinstance(a, SymMatrix):
        return a.data
    a = _as_square_array(a)
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-13 * max(1.0, np.abs(a).max())):
        raise InputError("matrix is not symmetric")
    return a


def _fix_column_signs(gamma: np.ndarray) -> np.ndarray:
    """First component of each column that is nonzero (above 1e-12 of the
    column max) is made positive. Gives a reproducible eigenvector matrix
    across LAPACK builds."""
    g = gamma.copy()
    for j in range(g.shape[1]):
        col = g[:, j]
        thresh = 1e-12 * np.abs(col).max()
        nz = np.nonzero(np.abs(col) > thresh)[0]
        if nz.size and col[nz[0]] < 0.0:
            g[:, j] = -col
    return g


def sym_eig(a) -> SpectralPair:
    """Eigendecomposition of a real symmetric matrix.

    Columns of gamma are orthonormal, eigenvalues ascend, and the
    identity-overlap conventions hold: sigma = 1, eta = eps.
    """
    m = _as_sym_array(a)
    try:
        eps, gamma = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails
        raise ConvergenceError(f"symmetric eigensolver did not converge: {exc}") from exc
    gamma = _fix_column_signs(gamma)
    ones = np.ones_like(eps)
    return SpectralPair(eps=eps, gamma=gamma, sigma=ones, eta=eps.copy())


def is_spd(b) -> bool:
    """Positive definiteness via attempted Cholesky factorization."""
    m = _as_sym_array(b)
    try:
        np.linalg.cholesky(m)
        return True
    except np.linalg.LinAlgError:
        return False


def gen_sym_eig(a, b) -> SpectralPair:
    """Generalized eigendecomposition H gamma = eps Omega gamma.

    ``b`` must be symmetric positive definite. Columns are scaled so that
    gamma^T b gamma = I (sigma = 1), hence eta = eps.
    """
    ma = _as_sym_array(a)
    mb = _as_sym_array(b)
    if ma.shape != mb.shape:
        raise InputError(f"dimension mismatch: {ma.shape} vs {mb.shape}")
    if not is_spd(mb):
        raise OverlapNotSPDError("overlap not SPD")
    try:
        eps, gamma = scipy.linalg.eigh(ma, mb)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover
        raise ConvergenceError(f"generalized eigensolver did not converge: {exc}") from exc
    gamma = _fix_column_signs(gamma)
    ones = np.ones_like(eps)
    return SpectralPair(eps=eps, gamma=gamma, sigma=ones, eta=eps.copy())


def delete_row_col(a, n: int, m: int):
    """Submatrix with row n and column m removed.

    Entry (i, j) of the result is entry (i + [i >= n], j + [j >= m]) of
    the input. Accepts real or complex arrays (the resolvent pencil
    H - z*Omega is complex); dtype is preserved.
    """
    arr = a.data if isinstance(a, (SymMatrix, GeneralMatrix)) else np.asarray(a)
    rows, cols = arr.shape
    if rows < 2 or cols < 2:
        raise InputError("empty submatrix")
    if not (0 <= n < rows and 0 <= m < cols):
        raise InputError(f"indices ({n}, {m}) out of range for shape {arr.shape}")
    out = np.delete(np.delete(arr, n, axis=0), m, axis=1)
    if isinstance(a, (SymMatrix, GeneralMatrix)):
        return GeneralMatrix(out)
    return out


def det(a) -> float:
    """Signed determinant via pivoted LU factorization."""
    return float(np.linalg.det(_as_square_array(a)))


def slogdet(a):
    """(sign, log|det|) of a real square matrix; sign is 0 for singular."""
    sign, logabs = np.linalg.slogdet(_as_square_array(a))
    return float(sign), float(logabs)


def eig_general(a) -> np.ndarray:
    """Complex eigenvalues of a real square matrix, sorted ascending by
    real part with ties broken by imaginary part.

    Only used as a cross-check: products of these eigenvalues equal
    determinants, which is what the production formulas use instead.
    """
    m = _as_square_array(a)
    try:
        vals = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"QR eigensolver did not converge: {exc}") from exc
    order = np.lexsort((vals.imag, vals.real))
    return vals[order]
