"""Closed-form expectation bounds for the randomized SVD sketch.

For ``Z = (A A^T)^q A G`` every bound constant reduces to sums of powers of
singular-value ratios, so the bounds become functions of the spectrum alone.
The reference baselines of Halko, Martinsson and Tropp are included for
comparison: they bound the full residual norm ``E||(I - pi(Z)) A||``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .deterministic import phi
from .linalg import PINV_TOL

__all__ = [
    'RsvdBoundReport',
    'SpectrumProfile',
    'frobenius_bound',
    'gamma_ratios',
    'hmt_frobenius',
    'hmt_power',
    'hmt_spectral',
    'improved_spectral_bound',
    'peak_index',
    'spectral_bound',
]


def gamma_ratios(sigma, k):
    """Singular value ratios ``sigma[k] / sigma[i]`` (0-based) over the spectrum."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 1 or sigma.size < 1:
        raise ValueError('sigma must be a non-empty vector')
    if not 1 <= k < sigma.size:
        raise ValueError(f'need 1 <= k <= len(sigma) - 1, got k={k}')
    if np.any(sigma <= 0):
        raise ValueError('sigma must be positive within the declared rank')
    if np.any(np.diff(sigma) > 0):
        raise ValueError('sigma must be sorted descending')
    return sigma[k] / sigma


@dataclass(frozen=True)
class SpectrumProfile:
    """Spectrum plus sketch parameters (target rank k, columns p, powers q).

    ``sigma`` must be descending and strictly positive through index ``p``;
    trailing zeros are allowed and represent an exactly rank-deficient tail.
    """

    sigma: np.ndarray
    k: int
    p: int
    q: int

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float)
        object.__setattr__(self, 'sigma', sigma)
        if sigma.ndim != 1 or sigma.size < 1 or not np.all(np.isfinite(sigma)):
            raise ValueError('sigma must be a finite vector')
        if np.any(sigma < 0) or np.any(np.diff(sigma) > 0):
            raise ValueError('sigma must be non-negative and sorted descending')
        if self.q < 0:
            raise ValueError('q must be non-negative')
        if not 1 <= self.k <= self.p - 2:
            raise ValueError(f'need 1 <= k <= p - 2, got k={self.k}, p={self.p}')
        if self.p > sigma.size:
            raise ValueError(f'p={self.p} exceeds the spectrum length {sigma.size}')
        if sigma[self.k - 1] <= 0:
            raise ValueError('the head spectrum must be strictly positive')

    @classmethod
    def from_spectrum(cls, sigma, k, p, q, tol=PINV_TOL):
        """Build a profile, zeroing singular values below ``tol * sigma[0]``."""
        sigma = np.asarray(sigma, dtype=float).copy()
        if sigma.size and sigma[0] > 0:
            sigma[sigma <= tol * sigma[0]] = 0.0
        return cls(sigma, k, p, q)

    @property
    def oversampling(self):
        return self.p - self.k

    @property
    def gamma(self):
        support = self.sigma[self.sigma > 0]
        return gamma_ratios(support, self.k) if self.k < support.size else np.zeros(support.size)

    def head(self):
        return self.sigma[:self.k]

    def positive_tail(self):
        tail = self.sigma[self.k:]
        return tail[tail > 0]


@dataclass(frozen=True)
class RsvdBoundReport:
    """Closed-form bound value with its constants."""

    norm: str
    variant: str
    k: int
    p: int
    q: int
    constants: dict
    bound: float

    def as_dict(self):
        return asdict(self)


def _head_gamma_sums(profile: SpectrumProfile):
    head = profile.head()
    s_next = float(profile.sigma[profile.k])
    gam = s_next / head
    e1 = 4 * profile.q + 2
    return gam, float(np.sum(gam ** (4 * profile.q))), float(np.sum(gam**e1))


def _tail_ratio_sum(profile: SpectrumProfile, ref):
    """``sum((sigma_i / ref)^(4q+2))`` over the positive tail; 0 for an empty tail."""
    tail = profile.positive_tail()
    if tail.size == 0:
        return 0.0
    return float(np.sum((tail / ref) ** (4 * profile.q + 2)))


def frobenius_bound(profile: SpectrumProfile) -> RsvdBoundReport:
    """Frobenius-norm expectation bound for the randomized SVD."""
    k, p, q = profile.k, profile.p, profile.q
    s = profile.sigma
    s_next = float(s[k])
    _, head_4q, head_4q2 = _head_gamma_sums(profile)
    if s_next > 0:
        tail_sum = _tail_ratio_sum(profile, s_next)
        a_k = s_next**2 / (p - k - 1) * tail_sum * head_4q
        b_k = tail_sum * head_4q2 / (p - k - 1)
    else:
        a_k = b_k = 0.0
    bound = min(math.sqrt(a_k), math.sqrt(k) * phi(math.sqrt(b_k / k)) * float(s[0]))
    return RsvdBoundReport(
        norm='frobenius', variant='frobenius', k=k, p=p, q=q,
        constants={'a_k': a_k, 'b_k': b_k}, bound=bound,
    )


def spectral_bound(profile: SpectrumProfile) -> RsvdBoundReport:
    """Spectral-norm expectation bound for the randomized SVD."""
    k, p, q = profile.k, profile.p, profile.q
    s = profile.sigma
    s_next = float(s[k])
    s_k = float(s[k - 1])
    _, head_4q, head_4q2 = _head_gamma_sums(profile)
    tail_k = math.sqrt(_tail_ratio_sum(profile, s_k))
    wishart = math.e * math.sqrt(p) / (p - k)
    c_k = s_next / math.sqrt(p - k - 1) * math.sqrt(head_4q) + s_k * tail_k * wishart
    d_k = math.sqrt(head_4q2) / math.sqrt(p - k - 1) + tail_k * wishart
    bound = min(c_k, phi(d_k) * float(s[0]))
    return RsvdBoundReport(
        norm='spectral', variant='spectral', k=k, p=p, q=q,
        constants={'c_k': c_k, 'd_k': d_k}, bound=bound,
    )


def peak_index(profile: SpectrumProfile) -> int:
    """1-based head index maximizing ``sqrt(1 - gamma_i^2) / sigma_i^(2q)``.

    Located through the stationary point of ``x -> (x - sigma_{k+1}^2) /
    x^(2q+1)``: the threshold ``sigma_{k+1} sqrt(1 + 1/(2q))`` either clears
    the whole head (index 1), falls below it (index k), or brackets two
    candidate indices.  Ties break toward the smaller index.
    """
    k, q = profile.k, profile.q
    if q == 0:
        return 1
    s = profile.sigma
    head = profile.head()
    thresh = float(s[k]) * math.sqrt(1.0 + 1.0 / (2 * q))
    if thresh >= head[0]:
        return 1
    if thresh <= head[k - 1]:
        return k
    # first 0-based index with head value <= thresh; candidates bracket it
    idx = int(np.searchsorted(-head, -thresh, side='left'))
    gam = float(s[k]) / head
    values = np.sqrt(np.clip(1.0 - gam**2, 0.0, None)) / head ** (2 * q)
    return idx if values[idx - 1] >= values[idx] else idx + 1


def improved_spectral_bound(profile: SpectrumProfile) -> RsvdBoundReport:
    """Improved spectral bound on ``E||(I - pi(Z)) A||_2 - sigma_{k+1}``."""
    k, p, q = profile.k, profile.p, profile.q
    s = profile.sigma
    s_next = float(s[k])
    head = profile.head()
    gam = s_next / head
    one_minus = np.clip(1.0 - gam**2, 0.0, None)
    ell = peak_index(profile)
    s_ell = float(head[ell - 1])
    wishart = math.e * math.sqrt(p) / (p - k)
    c_hat_k = (
        s_next / math.sqrt(p - k - 1) * math.sqrt(float(np.sum(gam ** (4 * q) * one_minus)))
        + math.sqrt(one_minus[ell - 1]) * s_ell * math.sqrt(_tail_ratio_sum(profile, s_ell)) * wishart
    )
    d_hat_k = (
        math.sqrt(float(np.sum(gam ** (4 * q + 2)))) / math.sqrt(p - k - 1)
        + math.sqrt(_tail_ratio_sum(profile, float(head[k - 1]))) * wishart
    )
    deflated_top = math.sqrt(max(float(s[0]) ** 2 - s_next**2, 0.0))
    bound = min(c_hat_k, phi(d_hat_k) * deflated_top)
    return RsvdBoundReport(
        norm='spectral', variant='spectral_improved', k=k, p=p, q=q,
        constants={'c_hat_k': c_hat_k, 'd_hat_k': d_hat_k, 'ell': ell}, bound=bound,
    )


def _tail_norm_sq(sigma, k):
    tail = np.asarray(sigma, dtype=float)[k:]
    return float(np.sum(tail**2))


def _check_hmt_args(sigma, k, p):
    sigma = np.asarray(sigma, dtype=float)
    if not 1 <= k < sigma.size:
        raise ValueError(f'need 1 <= k < len(sigma), got k={k}')
    if p < k + 2:
        raise ValueError(f'need p >= k + 2, got p={p}, k={k}')
    return sigma


def hmt_frobenius(sigma, k, p) -> float:
    """Reference baseline on ``E||(I - pi(Z)) A||_F`` for the plain sketch."""
    sigma = _check_hmt_args(sigma, k, p)
    return math.sqrt(1.0 + k / (p - k - 1)) * math.sqrt(_tail_norm_sq(sigma, k))


def hmt_spectral(sigma, k, p) -> float:
    """Reference baseline on ``E||(I - pi(Z)) A||_2`` for the plain sketch."""
    sigma = _check_hmt_args(sigma, k, p)
    return (1.0 + math.sqrt(k / (p - k - 1))) * float(sigma[k]) + \
        math.e * math.sqrt(p) / (p - k) * math.sqrt(_tail_norm_sq(sigma, k))


def hmt_power(sigma, k, p, q) -> float:
    """Reference spectral baseline under q power iterations.

    Computed in ratio form so that tiny spectra cannot underflow.
    """
    sigma = _check_hmt_args(sigma, k, p)
    if q < 0:
        raise ValueError('q must be non-negative')
    s_next = float(sigma[k])
    if s_next == 0.0:
        return 0.0
    tail = sigma[k:]
    tail = tail[tail > 0]
    ratio_sum = float(np.sum((tail / s_next) ** (2 * (2 * q + 1))))
    c1 = 1.0 + math.sqrt(k / (p - k - 1))
    c2 = math.e * math.sqrt(p) / (p - k)
    return s_next * (c1 + c2 * math.sqrt(ratio_sum)) ** (1.0 / (2 * q + 1))
