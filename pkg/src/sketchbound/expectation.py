"""Expected-error bounds for general Gaussian sketches.

Given ``Z ~ N(mean, C)`` the rotated sketch blocks ``Omega_head`` and
``Omega_tail`` are jointly Gaussian; conditioning the tail block on the head
block yields closed-form first and second moments of the tangent operator
``T = Omega_tail Omega_head^+``, from which bounds on

    E[ ||(I - pi(Z)) A|| - ||(I - pi(Z)) A_tail|| ]

follow in both the Frobenius and spectral norms.  All constants are exposed
so reports can be serialized and cross-checked against the closed-form
randomized-SVD specializations.

Note: the exact Frobenius second moment of ``M^+ N`` for a centered Gaussian
M is implemented in trace form, ``trace(N^T C^{-1} N) / (p - k - 1)``, the
quantity produced by the underlying inverse-Wishart moment.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from .deterministic import phi
from .linalg import (
    RANK_TOL,
    RankDeficiencyError,
    SvdFactors,
    _as_matrix,
    _symmetrize,
    frobenius_norm,
    psd_sqrt,
    spectral_norm,
)
from .sketching import GaussianSketch

__all__ = [
    'ExpectationBoundReport',
    'ProjectedCovariance',
    'TangentMomentConstants',
    'conditional_mean_map',
    'expect_pinv_norms',
    'expect_product_norms',
    'expected_frobenius_gap_bound',
    'expected_frobenius_gap_sq_bound',
    'expected_sine_norms',
    'expected_spectral_gap_bound',
    'expected_spectral_tail_bound',
    'mean_shift_term',
    'project_covariance',
    'tangent_norm_constants',
]


@dataclass
class ProjectedCovariance:
    """Head/cross/tail blocks of ``U^T C U`` plus the conditional covariance.

    ``conditional`` is the Schur complement
    ``tail - cross head^{-1} cross^T``, i.e. the covariance of the tail block
    given the head block.  The explicit PSD square root is materialized
    lazily; the bound formulas only need its trace and top eigenvalue.
    """

    head: np.ndarray
    cross: np.ndarray
    tail: np.ndarray
    conditional: np.ndarray
    _head_cho: tuple = field(repr=False)

    def solve_head(self, rhs):
        """Apply ``head^{-1}`` through the cached Cholesky factor."""
        return scipy.linalg.cho_solve(self._head_cho, rhs)

    @cached_property
    def conditional_sqrt(self):
        return psd_sqrt(self.conditional)

    @cached_property
    def conditional_trace(self):
        return max(float(np.trace(self.conditional)), 0.0)

    @cached_property
    def conditional_top_eigenvalue(self):
        k = self.conditional.shape[0]
        w = scipy.linalg.eigh(self.conditional, eigvals_only=True, subset_by_index=[k - 1, k - 1])
        return max(float(w[0]), 0.0)


def project_covariance(c, factors: SvdFactors, k, rank_tol=RANK_TOL) -> ProjectedCovariance:
    """Project a sketch covariance onto the head/tail left singular blocks.

    Raises
    ------
    RankDeficiencyError
        If the head block is numerically singular, in which case the
        expectation bounds do not apply.
    """
    c = _symmetrize(_as_matrix(c, 'C'), 'C')
    u_head = factors.left_head(k)
    u_tail = factors.left_tail(k)
    c_head_cols = c @ u_head
    head = _symmetrize(u_head.T @ c_head_cols, 'projected head block', tol=1e-10)
    cross = u_tail.T @ c_head_cols
    tail = _symmetrize(u_tail.T @ (c @ u_tail), 'projected tail block', tol=1e-10)
    w = np.linalg.eigvalsh(head)
    if w[-1] <= 0.0 or w[0] <= rank_tol * w[-1]:
        raise RankDeficiencyError(
            f'projected covariance head block is numerically singular '
            f'(smallest eigenvalue {w[0]:.3e}, largest {w[-1]:.3e})',
            smallest_singular_value=float(w[0]),
        )
    head_cho = scipy.linalg.cho_factor(head)
    conditional = tail - cross @ scipy.linalg.cho_solve(head_cho, cross.T)
    conditional = 0.5 * (conditional + conditional.T)
    return ProjectedCovariance(head, cross, tail, conditional, head_cho)


def conditional_mean_map(pc: ProjectedCovariance, omega_head):
    """Mean of the tail block given the head block: ``cross head^{-1} omega_head``."""
    return pc.cross @ pc.solve_head(_as_matrix(omega_head, 'omega_head'))


def expect_product_norms(mean, covariance, n_mat):
    """Moments of ``||M N||`` for Gaussian M with the given column covariance.

    Returns
    -------
    (spectral_upper, frobenius_sq_exact)
        An upper bound on ``E ||M N||_2`` and the exact value of
        ``E ||M N||_F^2``.
    """
    mean = _as_matrix(mean, 'mean')
    covariance = _symmetrize(_as_matrix(covariance, 'covariance'), 'covariance')
    n_mat = _as_matrix(n_mat, 'N')
    if covariance.shape[0] != mean.shape[0]:
        raise ValueError('covariance must match the row dimension of the mean')
    if n_mat.shape[0] != mean.shape[1]:
        raise ValueError('N must be conformable with the columns of M')
    mn = mean @ n_mat
    trace_c = max(float(np.trace(covariance)), 0.0)
    top_c = max(float(np.linalg.eigvalsh(covariance)[-1]), 0.0)
    spectral_upper = (
        spectral_norm(mn)
        + math.sqrt(top_c) * frobenius_norm(n_mat)
        + math.sqrt(trace_c) * spectral_norm(n_mat)
    )
    frobenius_sq_exact = frobenius_norm(mn) ** 2 + trace_c * frobenius_norm(n_mat) ** 2
    return spectral_upper, frobenius_sq_exact


def expect_pinv_norms(covariance, n_mat, p):
    """Moments of ``||M^+ N||`` for centered Gaussian M of k rows, p columns.

    Returns
    -------
    (frobenius_sq_exact, spectral_upper)
        The exact value ``trace(N^T C^{-1} N) / (p - k - 1)`` of
        ``E ||M^+ N||_F^2``, and an upper bound on ``E ||M^+ N||_2``.
    """
    covariance = _symmetrize(_as_matrix(covariance, 'covariance'), 'covariance')
    n_mat = _as_matrix(n_mat, 'N')
    k = covariance.shape[0]
    if p <= k + 1:
        raise ValueError(f'the inverse second moment requires p > k + 1, got p={p}, k={k}')
    try:
        cho = scipy.linalg.cho_factor(covariance)
    except np.linalg.LinAlgError as exc:
        raise ValueError('covariance must be positive definite') from exc
    m = n_mat.T @ scipy.linalg.cho_solve(cho, n_mat)
    m = 0.5 * (m + m.T)
    frobenius_sq_exact = max(float(np.trace(m)), 0.0) / (p - k - 1)
    top = max(float(np.linalg.eigvalsh(m)[-1]), 0.0)
    spectral_upper = math.e * math.sqrt(p) / (p - k) * math.sqrt(top)
    return frobenius_sq_exact, spectral_upper


@dataclass(frozen=True)
class TangentMomentConstants:
    """Constants for E||T N||: a dependence part plus a sampling part.

    The dependence parts vanish when the cross block of the projected
    covariance is zero; the sampling parts decay as the number of sketch
    columns grows.  ``total_frobenius_sq`` equals ``E ||T N||_F^2`` exactly,
    ``total_spectral`` upper-bounds ``E ||T N||_2``.
    """

    dep_spectral: float
    dep_frobenius: float
    sampling_spectral: float
    sampling_frobenius: float
    total_spectral: float
    total_frobenius_sq: float


def tangent_norm_constants(pc: ProjectedCovariance, n_mat, p) -> TangentMomentConstants:
    """Assemble the tangent-operator moment constants for a weight matrix N."""
    n_mat = _as_matrix(n_mat, 'N')
    k = pc.head.shape[0]
    if n_mat.shape[0] != k:
        raise ValueError(f'N must have {k} rows, got {n_mat.shape}')
    if p < k + 2:
        raise ValueError(f'need p >= k + 2, got p={p}, k={k}')
    dep = pc.cross @ pc.solve_head(n_mat)
    dep_spectral = spectral_norm(dep)
    dep_frobenius = frobenius_norm(dep)
    m = n_mat.T @ pc.solve_head(n_mat)
    m = 0.5 * (m + m.T)
    trace_m = max(float(np.trace(m)), 0.0)
    top_m = max(float(np.linalg.eigvalsh(m)[-1]), 0.0)
    cond_top = math.sqrt(pc.conditional_top_eigenvalue)
    cond_fro = math.sqrt(pc.conditional_trace)
    sampling_spectral = (
        cond_top * math.sqrt(trace_m) / math.sqrt(p - k - 1)
        + math.e * math.sqrt(p) / (p - k) * cond_fro * math.sqrt(top_m)
    )
    sampling_frobenius = cond_fro * math.sqrt(trace_m) / math.sqrt(p - k - 1)
    return TangentMomentConstants(
        dep_spectral=dep_spectral,
        dep_frobenius=dep_frobenius,
        sampling_spectral=sampling_spectral,
        sampling_frobenius=sampling_frobenius,
        total_spectral=dep_spectral + sampling_spectral,
        total_frobenius_sq=dep_frobenius**2 + sampling_frobenius**2,
    )


def expected_sine_norms(constants: TangentMomentConstants, k):
    """Bounds on ``E ||S||_2`` and ``E ||S||_F`` from identity-weighted constants."""
    spectral = phi(constants.total_spectral)
    frobenius = math.sqrt(k) * phi(math.sqrt(constants.total_frobenius_sq / k))
    return spectral, frobenius


def mean_shift_term(sketch: GaussianSketch, head_norm, p) -> float:
    """Extra bound term caused by a nonzero sketch mean; 0 for a centered sketch.

    Requires ``p < rank(covariance)`` when the mean is nonzero.
    """
    if not np.any(sketch.mean):
        return 0.0
    r = sketch.rank
    if p >= r:
        raise ValueError(f'nonzero-mean term requires p < rank of the covariance, got p={p}, rank={r}')
    scale = spectral_norm(sketch.mean) / math.sqrt(sketch.min_nonzero_eigenvalue)
    return math.e * math.sqrt(r) / (r - p) * scale * head_norm


@dataclass(frozen=True)
class ExpectationBoundReport:
    """Evaluated expectation bound with its intermediate constants."""

    norm: str
    variant: str
    k: int
    p: int
    mean_term: float
    constants: dict
    bound: float

    def as_dict(self):
        return asdict(self)


def _validate_and_project(factors: SvdFactors, sketch: GaussianSketch, k, p):
    # The derivation assumes p <= min(rank(A), rank(C)) so that the sketch is
    # full column rank with probability one, but the bound values themselves
    # only need the projected head block to be nonsingular (checked below)
    # and remain valid upper bounds for rank-deficient tails, so the rank
    # hypotheses are deliberately not enforced here.
    if not 1 <= k <= p - 2:
        raise ValueError(f'need 1 <= k <= p - 2, got k={k}, p={p}')
    if sketch.shape[1] != p:
        raise ValueError(f'sketch has {sketch.shape[1]} columns, expected p={p}')
    return project_covariance(sketch.covariance, factors, k)


def expected_frobenius_gap_bound(factors, sketch, k, p) -> ExpectationBoundReport:
    """Expectation bound on the Frobenius residual gap (unsquared metric)."""
    pc = _validate_and_project(factors, sketch, k, p)
    return _frobenius_report(pc, factors, sketch, k, p, squared=False)


def expected_frobenius_gap_sq_bound(factors, sketch, k, p) -> ExpectationBoundReport:
    """Tighter bound on the squared Frobenius gap; centered sketches only."""
    if np.any(sketch.mean):
        raise ValueError('the squared-gap bound requires a zero-mean sketch')
    pc = _validate_and_project(factors, sketch, k, p)
    return _frobenius_report(pc, factors, sketch, k, p, squared=True)


def _frobenius_report(pc, factors, sketch, k, p, squared):
    sig_head = factors.sigma_head(k)
    a_k = tangent_norm_constants(pc, np.diag(sig_head), p).total_frobenius_sq
    b_k = tangent_norm_constants(pc, np.eye(k), p).total_frobenius_sq
    top = float(sig_head[0])
    sine_factor = phi(math.sqrt(b_k / k))
    if squared:
        bound = min(a_k, k * sine_factor**2 * top**2)
        return ExpectationBoundReport(
            norm='frobenius', variant='thm3_squared', k=k, p=p, mean_term=0.0,
            constants={'a_k': a_k, 'b_k': b_k}, bound=bound,
        )
    mean_term = mean_shift_term(sketch, frobenius_norm(np.diag(sig_head)), p)
    bound = mean_term + min(math.sqrt(a_k), math.sqrt(k) * sine_factor * top)
    return ExpectationBoundReport(
        norm='frobenius', variant='thm3', k=k, p=p, mean_term=mean_term,
        constants={'a_k': a_k, 'b_k': b_k}, bound=bound,
    )


def expected_spectral_gap_bound(factors, sketch, k, p) -> ExpectationBoundReport:
    """Expectation bound on the spectral residual gap."""
    pc = _validate_and_project(factors, sketch, k, p)
    sig_head = factors.sigma_head(k)
    c_k = tangent_norm_constants(pc, np.diag(sig_head), p).total_spectral
    d_k = tangent_norm_constants(pc, np.eye(k), p).total_spectral
    top = float(sig_head[0])
    mean_term = mean_shift_term(sketch, top, p)
    bound = mean_term + min(c_k, phi(d_k) * top)
    return ExpectationBoundReport(
        norm='spectral', variant='thm4', k=k, p=p, mean_term=mean_term,
        constants={'c_k': c_k, 'd_k': d_k}, bound=bound,
    )


def expected_spectral_tail_bound(factors, sketch, k, p) -> ExpectationBoundReport:
    """Improved spectral bound on ``E||(I - pi(Z)) A||_2 - sigma_{k+1}``.

    Uses the deflated head spectrum; its identity-weighted constant equals
    the one of the plain spectral bound.
    """
    pc = _validate_and_project(factors, sketch, k, p)
    sig_head = factors.sigma_head(k)
    s_next = factors.next_sigma(k)
    deflated = np.sqrt(np.clip(sig_head**2 - s_next**2, 0.0, None))
    c_hat_k = tangent_norm_constants(pc, np.diag(deflated), p).total_spectral
    d_hat_k = tangent_norm_constants(pc, np.eye(k), p).total_spectral
    top_deflated = float(deflated[0])
    mean_term = mean_shift_term(sketch, float(sig_head[0]), p)
    bound = mean_term + min(c_hat_k, phi(d_hat_k) * top_deflated)
    return ExpectationBoundReport(
        norm='spectral', variant='thm5', k=k, p=p, mean_term=mean_term,
        constants={'c_hat_k': c_hat_k, 'd_hat_k': d_hat_k}, bound=bound,
    )
