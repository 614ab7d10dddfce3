"""Dense linear-algebra kernels: factorizations, norms, and PSD-ordering checks.

Everything here is a pure function of its inputs and safe to call from any
number of threads.
"""

from __future__ import annotations

import pathlib
from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse

__all__ = [
    'FactorizationError',
    'NotPositiveSemidefiniteError',
    'PINV_TOL',
    'PsdOrderingReport',
    'RANK_TOL',
    'RankDeficiencyError',
    'SvdFactors',
    'canonical_angle_sines',
    'frobenius_norm',
    'norm',
    'orthonormal_basis',
    'pseudo_inverse',
    'psd_order',
    'psd_sqrt',
    'read_matrix_market',
    'spectral_norm',
    'svd',
    'write_matrix_market',
]

# Default numerical tolerances; the references never state any, so these are
# pinned here and overridable per call.
RANK_TOL = 1e-10
PINV_TOL = 1e-12
SYM_TOL = 1e-12


class FactorizationError(RuntimeError):
    """An iterative factorization backend failed to converge."""


class RankDeficiencyError(ValueError):
    """A matrix required to have full numerical rank does not."""

    def __init__(self, message, smallest_singular_value=None, deficient_columns=None):
        super().__init__(message)
        self.smallest_singular_value = smallest_singular_value
        self.deficient_columns = deficient_columns


class NotPositiveSemidefiniteError(ValueError):
    """A matrix required to be PSD has an eigenvalue below tolerance."""

    def __init__(self, message, offending_eigenvalue=None):
        super().__init__(message)
        self.offending_eigenvalue = offending_eigenvalue


def _as_matrix(a, name='matrix'):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f'{name} must be 2-D with at least one row and column, got shape {a.shape}')
    if not np.all(np.isfinite(a)):
        raise ValueError(f'{name} contains non-finite entries')
    return a


def _symmetrize(a, name='matrix', tol=SYM_TOL):
    scale = max(1.0, float(np.max(np.abs(a))))
    asym = float(np.max(np.abs(a - a.T)))
    if asym > tol * scale:
        raise ValueError(f'{name} is not symmetric: max asymmetry {asym:.3e}')
    return 0.5 * (a + a.T)


class SvdFactors:
    """Thin SVD ``A = U diag(sigma) V^T`` with head/tail partition accessors.

    ``u`` and ``v`` are stored thin; the orthonormal complement needed by the
    tail accessors is appended lazily and cached.
    """

    def __init__(self, u, sigma, v):
        self._u = np.asarray(u, dtype=float)
        self._v = np.asarray(v, dtype=float)
        self.sigma = np.asarray(sigma, dtype=float)
        self._u_full = self._u if self._u.shape[0] == self._u.shape[1] else None
        self._v_full = self._v if self._v.shape[0] == self._v.shape[1] else None
        if np.any(np.diff(self.sigma) > 0) or np.any(self.sigma < 0):
            raise ValueError('singular values must be non-negative and sorted descending')

    @property
    def rows(self):
        return self._u.shape[0]

    @property
    def cols(self):
        return self._v.shape[0]

    def rank(self, tol=PINV_TOL):
        """Numerical rank: count of singular values above ``tol * sigma[0]``."""
        if self.sigma[0] == 0.0:
            return 0
        return int(np.sum(self.sigma > tol * self.sigma[0]))

    @staticmethod
    def _complete(q):
        comp = scipy.linalg.null_space(q.T)
        return np.hstack([q, comp])

    def left(self):
        """Full orthogonal left factor."""
        if self._u_full is None:
            self._u_full = self._complete(self._u)
        return self._u_full

    def right(self):
        """Full orthogonal right factor."""
        if self._v_full is None:
            self._v_full = self._complete(self._v)
        return self._v_full

    def _check_k(self, k):
        if not 1 <= k <= self.sigma.size:
            raise ValueError(f'target rank k={k} outside [1, {self.sigma.size}]')

    def left_head(self, k):
        self._check_k(k)
        return self._u[:, :k]

    def left_tail(self, k):
        self._check_k(k)
        return self.left()[:, k:]

    def right_head(self, k):
        self._check_k(k)
        return self._v[:, :k]

    def right_tail(self, k):
        self._check_k(k)
        return self.right()[:, k:]

    def sigma_head(self, k):
        self._check_k(k)
        return self.sigma[:k]

    def sigma_tail(self, k):
        self._check_k(k)
        return self.sigma[k:]

    def next_sigma(self, k):
        """``sigma[k]`` in 0-based terms, i.e. the (k+1)-th singular value; 0 past the end."""
        self._check_k(k)
        return float(self.sigma[k]) if k < self.sigma.size else 0.0

    def head_matrix(self, k):
        """Best rank-k approximation assembled from the factors."""
        return (self.left_head(k) * self.sigma_head(k)) @ self.right_head(k).T

    def tail_matrix(self, k):
        """Residual factor: the reconstruction minus its rank-k head."""
        r = min(self.rows, self.cols)
        return (self._u[:, k:r] * self.sigma[k:r]) @ self._v[:, k:r].T

    def reconstruct(self):
        r = min(self.rows, self.cols)
        return (self._u[:, :r] * self.sigma[:r]) @ self._v[:, :r].T


def svd(a) -> SvdFactors:
    """Thin singular value decomposition of a dense matrix.

    Raises
    ------
    FactorizationError
        If the LAPACK backend fails to converge.
    """
    a = _as_matrix(a)
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(f'SVD did not converge on a {a.shape} input: {exc}') from exc
    return SvdFactors(u, s, vh.T)


def orthonormal_basis(z, rank_tol=RANK_TOL):
    """Orthonormal basis Q of range(Z) for a full-column-rank Z.

    Raises
    ------
    RankDeficiencyError
        If the smallest singular value falls below ``rank_tol`` times the
        largest; the error reports how many columns are dependent.
    """
    z = _as_matrix(z, 'Z')
    u, s, _ = np.linalg.svd(z, full_matrices=False)
    p = z.shape[1]
    cutoff = rank_tol * s[0]
    if s.size < p or s[-1] <= cutoff:
        deficient = p - int(np.sum(s > cutoff))
        raise RankDeficiencyError(
            f'{deficient} of {p} columns are numerically dependent '
            f'(smallest singular value {s[-1] if s.size else 0.0:.3e})',
            smallest_singular_value=float(s[-1]) if s.size else 0.0,
            deficient_columns=deficient,
        )
    return u


def pseudo_inverse(m, tol=PINV_TOL):
    """Moore-Penrose inverse; singular values below ``tol * sigma_max`` are dropped."""
    m = _as_matrix(m, 'M')
    return np.linalg.pinv(m, rcond=tol)


def psd_sqrt(c, tol=None):
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues in ``[-tol, 0)`` are clipped to zero; anything below ``-tol``
    raises.  ``tol`` defaults to ``1e-10 * ||C||_2``.
    """
    c = _as_matrix(c, 'C')
    if c.shape[0] != c.shape[1]:
        raise ValueError(f'C must be square, got {c.shape}')
    c = _symmetrize(c, 'C')
    w, vec = np.linalg.eigh(c)
    if tol is None:
        tol = 1e-10 * max(abs(w[0]), abs(w[-1]))
    if w[0] < -tol:
        raise NotPositiveSemidefiniteError(
            f'matrix has eigenvalue {w[0]:.6e} below -{tol:.3e}',
            offending_eigenvalue=float(w[0]),
        )
    root = (vec * np.sqrt(np.clip(w, 0.0, None))) @ vec.T
    return 0.5 * (root + root.T)


def spectral_norm(m) -> float:
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def frobenius_norm(m) -> float:
    return float(np.linalg.norm(np.asarray(m, dtype=float)))


def norm(m, which) -> float:
    """Either the spectral or the Frobenius norm, selected by name."""
    if which == 'spectral':
        return spectral_norm(m)
    if which == 'frobenius':
        return frobenius_norm(m)
    raise ValueError(f"norm must be 'spectral' or 'frobenius', got {which!r}")


@dataclass(frozen=True)
class PsdOrderingReport:
    """Result of testing M <= N in the PSD (Loewner) order."""

    min_eigenvalue_of_difference: float
    satisfied: bool
    tolerance: float


def psd_order(m, n, tol=RANK_TOL) -> PsdOrderingReport:
    """Check the PSD ordering M <= N by the smallest eigenvalue of N - M."""
    m = _as_matrix(m, 'M')
    n = _as_matrix(n, 'N')
    if m.shape != n.shape or m.shape[0] != m.shape[1]:
        raise ValueError(f'M and N must be square with equal shapes, got {m.shape} and {n.shape}')
    diff = _symmetrize(n, 'N') - _symmetrize(m, 'M')
    w_min = float(np.linalg.eigvalsh(diff)[0])
    return PsdOrderingReport(w_min, w_min >= -tol, tol)


def canonical_angle_sines(q1, q2, ortho_tol=1e-10):
    """Sines of the canonical angles between two column spans, descending.

    Both inputs must have orthonormal columns; the sines are recovered from
    the singular values of ``Q1^T Q2``.
    """
    q1 = _as_matrix(q1, 'Q1')
    q2 = _as_matrix(q2, 'Q2')
    if q1.shape[0] != q2.shape[0]:
        raise ValueError('Q1 and Q2 must have the same number of rows')
    for name, q in (('Q1', q1), ('Q2', q2)):
        dev = float(np.max(np.abs(q.T @ q - np.eye(q.shape[1]))))
        if dev > ortho_tol:
            raise ValueError(f'{name} is not orthonormal: max deviation {dev:.3e}')
    cosines = np.clip(scipy.linalg.svdvals(q1.T @ q2), 0.0, 1.0)
    sines = np.sqrt(np.clip(1.0 - cosines**2, 0.0, 1.0))
    return np.sort(sines)[::-1]


def write_matrix_market(path, m):
    """Write a dense matrix in Matrix Market array format."""
    m = _as_matrix(m)
    scipy.io.mmwrite(str(path), m)
    # mmwrite appends .mtx only when the suffix is missing; keep paths literal
    p = pathlib.Path(path)
    if p.suffix != '.mtx' and not p.exists() and p.with_name(p.name + '.mtx').exists():
        p.with_name(p.name + '.mtx').rename(p)


def read_matrix_market(path):
    """Read a Matrix Market file into a dense ndarray."""
    if not pathlib.Path(path).is_file():
        raise FileNotFoundError(f'no such Matrix Market file: {path}')
    m = scipy.io.mmread(str(path))
    if scipy.sparse.issparse(m):
        m = m.toarray()
    return _as_matrix(np.asarray(m, dtype=float), str(path))
