"""Monte Carlo experiment harness: synthetic matrices, empirical residual
errors, and reproducible parameter sweeps emitted as CSV/JSON.

Residual norms are evaluated in the left singular basis: for any unitarily
invariant norm, ``||(I - pi(Z)) A|| = ||(I - pi(U^T Z)) Sigma||``, so each
trial reduces to a QR factorization of the rotated sketch plus small Gram
computations; no dense projector is ever formed.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg

from . import expectation, rsvd
from .linalg import RANK_TOL, SvdFactors, _as_matrix
from .sketching import GaussianSketch, RsvdSketch, SeededStream, sample, standard_gaussian

__all__ = [
    'EmpiricalStats',
    'SweepConfig',
    'SweepRow',
    'TrialRecord',
    'empirical_error',
    'emit',
    'load_rows',
    'run_sweep',
    'synthetic_matrix',
]

logger = logging.getLogger(__name__)

NORMS = ('spectral', 'frobenius')
METRICS = ('general', 'old')

_DENSE_GRAM_LIMIT = 600


def synthetic_matrix(n, seed):
    """Square test matrix with ten unit singular values and a ``j^(-1/2)`` tail.

    The singular vector factors are drawn Haar-uniformly (QR of standard
    Gaussian matrices with sign-fixed diagonal); the exact factors are
    returned alongside the assembled matrix.
    """
    if n < 11:
        raise ValueError('need n >= 11 for the synthetic spectrum')
    qs = []
    for index in (0, 1):
        g = standard_gaussian(n, n, SeededStream(seed, index))
        q, r = np.linalg.qr(g)
        signs = np.sign(np.diag(r))
        signs[signs == 0] = 1.0
        qs.append(q * signs)
    u, v = qs
    sigma = np.concatenate([np.ones(10), np.arange(2, n - 8, dtype=float) ** -0.5])
    a = (u * sigma) @ v.T
    return a, SvdFactors(u, sigma, v)


@dataclass(frozen=True)
class TrialRecord:
    """Residuals of one Monte Carlo trial in one norm."""

    trial_index: int
    k: int
    p: int
    q: int | None
    norm: str
    metric_value: float
    residual_full: float
    residual_deflated: float


@dataclass(frozen=True)
class EmpiricalStats:
    """Sample statistics of the per-trial metric values."""

    mean: float
    std: float
    records: tuple
    excluded_trials: int

    @property
    def trials(self):
        return len(self.records)

    def standard_error(self):
        return self.std / math.sqrt(max(len(self.records), 1))


def _gram_top_eigenvalue(diag_sq, b):
    """Largest eigenvalue of ``diag(diag_sq) - b^T b`` (clipped at zero)."""
    m = diag_sq.size
    if m <= _DENSE_GRAM_LIMIT:
        gram = np.diag(diag_sq) - b.T @ b
        return max(float(np.linalg.eigvalsh(gram)[-1]), 0.0)

    def matvec(x):
        return diag_sq * x - b.T @ (b @ x)

    op = scipy.sparse.linalg.LinearOperator((m, m), matvec=matvec, dtype=float)
    v0 = np.full(m, m**-0.5)
    try:
        w = scipy.sparse.linalg.eigsh(
            op, k=1, which='LA', v0=v0, tol=1e-10, maxiter=20 * m, return_eigenvectors=False,
        )
        return max(float(w[0]), 0.0)
    except scipy.sparse.linalg.ArpackError:
        gram = np.diag(diag_sq) - b.T @ b
        return max(float(np.linalg.eigvalsh(gram)[-1]), 0.0)


def _explicit_residual_norm(q, b, diag, which):
    """``||diag_embed(diag) - q b||`` formed explicitly; cancellation-free."""
    resid = -(q @ b)
    m = diag.size
    resid[np.arange(m), np.arange(m)] += diag
    if which == 'frobenius':
        return float(np.linalg.norm(resid))
    return float(np.linalg.norm(resid, 2)) if min(resid.shape) else 0.0


def _trial_residuals(w, sigma, k, norms, rank_tol=RANK_TOL):
    """Full and projected-tail residual norms for one rotated sketch ``w``.

    Returns ``{norm: (residual_full, residual_tail_projected)}``.  Residuals
    are evaluated through small Gram differences; values that land at
    round-off level are recomputed from the explicitly formed residual, since
    the difference form cannot resolve below sqrt(eps) times the data scale.
    """
    u, s, _ = np.linalg.svd(w, full_matrices=False)
    keep = s > rank_tol * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
    q = u[:, keep]
    m = sigma.size
    b = q[:m, :].T * sigma[None, :]
    sig_sq = sigma**2
    noise_floor = 1e-12 * float(np.sum(sig_sq))
    sigma_tail = sigma.copy()
    sigma_tail[:k] = 0.0
    b_tail = b.copy()
    b_tail[:, :k] = 0.0
    out = {}
    for which in norms:
        if which == 'frobenius':
            full_sq = float(np.sum(sig_sq) - np.sum(b**2))
            tail_sq = float(np.sum(sig_sq[k:]) - np.sum(b_tail**2))
        else:
            full_sq = _gram_top_eigenvalue(sig_sq, b)
            tail_sq = _gram_top_eigenvalue(sigma_tail**2, b_tail)
        values = []
        for value_sq, diag, bmat in ((full_sq, sigma, b), (tail_sq, sigma_tail, b_tail)):
            if value_sq <= noise_floor:
                values.append(_explicit_residual_norm(q, bmat, diag, which))
            else:
                values.append(math.sqrt(value_sq))
        out[which] = tuple(values)
    return out


def _deflation_constant(sigma, k, which):
    """``||A_tail||`` in the requested norm, from the spectrum."""
    if which == 'spectral':
        return float(sigma[k]) if k < sigma.size else 0.0
    return math.sqrt(float(np.sum(sigma[k:] ** 2)))


def _collect_records(a, factors, sketch, k, trials, norms, metrics, seed, stream_offset=0):
    """Run trials once and build records for every requested (norm, metric).

    Trials whose rotated head block fails the row-rank check are excluded and
    counted; the hypothesis holds with probability one, so exclusions flag
    numerical degeneracy rather than expected behavior.
    """
    u_full = factors.left()
    sigma = factors.sigma
    if isinstance(sketch, GaussianSketch):
        q_value = None
        rotated_mean = u_full.T @ sketch.mean if np.any(sketch.mean) else None
        p = sketch.shape[1]
    else:
        q_value = sketch.q
        rotated_mean = None
        p = sketch.p
    records = {(which, metric): [] for which in norms for metric in metrics}
    excluded = 0
    for t in range(trials):
        stream = SeededStream(seed, stream_offset + t)
        z = sample(sketch, stream) if isinstance(sketch, GaussianSketch) else sketch.draw(a, stream)
        w = u_full.T @ z
        head = w[:k] - rotated_mean[:k] if rotated_mean is not None else w[:k]
        s_head = np.linalg.svd(head, compute_uv=False)
        degenerate = s_head[0] <= RANK_TOL * float(np.linalg.norm(w))
        if degenerate or s_head[-1] <= RANK_TOL * s_head[0]:
            excluded += 1
            continue
        residuals = _trial_residuals(w, sigma, k, norms)
        for which in norms:
            full, tail_projected = residuals[which]
            for metric in metrics:
                deflated = tail_projected if metric == 'general' else _deflation_constant(sigma, k, which)
                records[(which, metric)].append(TrialRecord(
                    trial_index=t, k=k, p=p, q=q_value, norm=which,
                    metric_value=full - deflated,
                    residual_full=full,
                    residual_deflated=deflated,
                ))
    return records, excluded


def _stats_from_records(recs, excluded):
    values = np.array([r.metric_value for r in recs])
    mean = float(np.mean(values)) if values.size else math.nan
    std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return EmpiricalStats(mean=mean, std=std, records=tuple(recs), excluded_trials=excluded)


def empirical_error(a, factors, sketch, k, trials, norm='frobenius', metric='general', seed=0):
    """Monte Carlo estimate of the residual error metric.

    ``sketch`` is either a :class:`GaussianSketch` (drawn via its moments) or
    an :class:`RsvdSketch` (drawn as ``(A A^T)^q A G``).  Deterministic given
    ``seed``: trial ``t`` consumes the stream ``SeededStream(seed, t)``.
    """
    a = _as_matrix(a, 'A')
    if norm not in NORMS:
        raise ValueError(f'norm must be one of {NORMS}, got {norm!r}')
    if metric not in METRICS:
        raise ValueError(f'metric must be one of {METRICS}, got {metric!r}')
    if trials < 1:
        raise ValueError('trials must be positive')
    records, excluded = _collect_records(a, factors, sketch, k, trials, (norm,), (metric,), seed)
    if excluded:
        logger.warning('%d of %d trials excluded by the head rank check', excluded, trials)
    return _stats_from_records(records[(norm, metric)], excluded)


_DEFAULT_VARIANTS = (
    'cor_frobenius', 'cor_spectral', 'cor_spectral_improved',
    'hmt_frobenius', 'hmt_spectral', 'hmt_power',
)
_THM_VARIANTS = ('thm3', 'thm3_squared', 'thm4', 'thm5')


@dataclass(frozen=True)
class SweepConfig:
    """Grid specification for a reproducible bound-versus-empirical sweep."""

    n: int
    k_list: tuple
    oversampling_list: tuple
    q_list: tuple = (0,)
    trials: int = 100
    seed: int = 0
    norm_list: tuple = NORMS
    metric: str = 'general'
    bound_variants: tuple = _DEFAULT_VARIANTS
    output_path: str | None = None
    output_format: str = 'csv'
    m: int | None = None

    def __post_init__(self):
        object.__setattr__(self, 'k_list', tuple(self.k_list))
        object.__setattr__(self, 'oversampling_list', tuple(self.oversampling_list))
        object.__setattr__(self, 'q_list', tuple(self.q_list))
        object.__setattr__(self, 'norm_list', tuple(self.norm_list))
        object.__setattr__(self, 'bound_variants', tuple(self.bound_variants))
        if self.trials < 1:
            raise ValueError('trials must be positive')
        if self.metric not in METRICS:
            raise ValueError(f'metric must be one of {METRICS}')
        if any(norm not in NORMS for norm in self.norm_list):
            raise ValueError(f'norms must be among {NORMS}')
        unknown = set(self.bound_variants) - set(_DEFAULT_VARIANTS) - set(_THM_VARIANTS)
        if unknown:
            raise ValueError(f'unknown bound variants: {sorted(unknown)}')
        if self.m is not None and self.m != self.n:
            raise ValueError('the synthetic test matrix is square; m must equal n')
        if self.output_format not in ('csv', 'json'):
            raise ValueError("output_format must be 'csv' or 'json'")

    @classmethod
    def from_json(cls, path):
        with open(path) as handle:
            data = json.load(handle)
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f'unknown sweep config keys: {sorted(unknown)}')
        return cls(**data)


@dataclass(frozen=True)
class SweepRow:
    """One sweep cell: empirical statistics plus every requested bound."""

    k: int
    p: int
    oversampling: int
    q: int
    norm: str
    metric: str
    empirical_mean: float
    empirical_std: float
    bounds: dict


def _diagonal_rsvd_sketch(sigma, n, q, p):
    """RSVD sketch distribution expressed in the left singular basis."""
    lam = np.zeros(n)
    lam[:sigma.size] = sigma ** (4 * q + 2)
    rank = int(np.sum(sigma > 0))
    return GaussianSketch(
        mean=np.zeros((n, p)),
        covariance=np.diag(lam),
        cov_sqrt=np.diag(np.sqrt(lam)),
        rank=rank,
        min_nonzero_eigenvalue=float(sigma[rank - 1] ** (4 * q + 2)) if rank else 0.0,
    )


def _evaluate_bounds(variants, factors, diag_factors, k, p, q):
    sigma = factors.sigma
    values = {}
    profile = None
    for variant in variants:
        if variant.startswith('cor_'):
            if profile is None:
                profile = rsvd.SpectrumProfile.from_spectrum(sigma, k, p, q)
            fn = {
                'cor_frobenius': rsvd.frobenius_bound,
                'cor_spectral': rsvd.spectral_bound,
                'cor_spectral_improved': rsvd.improved_spectral_bound,
            }[variant]
            values[variant] = fn(profile).bound
        elif variant == 'hmt_frobenius':
            values[variant] = rsvd.hmt_frobenius(sigma, k, p)
        elif variant == 'hmt_spectral':
            values[variant] = rsvd.hmt_spectral(sigma, k, p)
        elif variant == 'hmt_power':
            values[variant] = rsvd.hmt_power(sigma, k, p, q)
        else:
            sketch = _diagonal_rsvd_sketch(sigma, diag_factors.rows, q, p)
            fn = {
                'thm3': expectation.expected_frobenius_gap_bound,
                'thm3_squared': expectation.expected_frobenius_gap_sq_bound,
                'thm4': expectation.expected_spectral_gap_bound,
                'thm5': expectation.expected_spectral_tail_bound,
            }[variant]
            values[variant] = fn(diag_factors, sketch, k, p).bound
    return values


def run_sweep(config: SweepConfig):
    """Evaluate bounds and empirical statistics over the configured grid.

    Rows are sorted by ``(k, q, p, norm)``; the whole sweep is a pure
    function of the config, so identical configs give identical rows.
    """
    a, factors = synthetic_matrix(config.n, config.seed)
    diag_factors = None
    if any(v in _THM_VARIANTS for v in config.bound_variants):
        eye = np.eye(config.n)
        diag_factors = SvdFactors(eye, factors.sigma, eye.copy())
    rows = []
    cells = [
        (k, q, rho)
        for k in sorted(config.k_list)
        for q in sorted(config.q_list)
        for rho in sorted(config.oversampling_list)
    ]
    for cell_index, (k, q, rho) in enumerate(cells):
        p = k + rho
        if k > p - 2 or p > factors.rank():
            logger.warning('skipping invalid cell k=%d, p=%d, q=%d', k, p, q)
            continue
        bounds = _evaluate_bounds(config.bound_variants, factors, diag_factors, k, p, q)
        records, excluded = _collect_records(
            a, factors, RsvdSketch(q=q, p=p), k, config.trials,
            config.norm_list, (config.metric,), config.seed,
            stream_offset=cell_index * config.trials,
        )
        if excluded:
            logger.warning('cell k=%d p=%d q=%d: %d trials excluded', k, p, q, excluded)
        for which in sorted(config.norm_list):
            stats = _stats_from_records(records[(which, config.metric)], excluded)
            rows.append(SweepRow(
                k=k, p=p, oversampling=rho, q=q, norm=which, metric=config.metric,
                empirical_mean=stats.mean, empirical_std=stats.std, bounds=dict(bounds),
            ))
    return rows


_BASE_COLUMNS = ('k', 'p', 'oversampling', 'q', 'norm', 'metric', 'empirical_mean', 'empirical_std')


def _row_cells(row, variant_names):
    cells = [str(row.k), str(row.p), str(row.oversampling), str(row.q), row.norm, row.metric,
             format(row.empirical_mean, '.17g'), format(row.empirical_std, '.17g')]
    cells.extend(format(row.bounds[name], '.17g') for name in variant_names)
    return cells


def emit(rows, output_format='csv', path='sweep.csv'):
    """Write sweep rows to CSV or JSON, atomically.

    Floats carry 17 significant digits, so parsing the file back reproduces
    the rows bit for bit.
    """
    if not rows:
        raise ValueError('no rows to emit')
    variant_names = list(rows[0].bounds)
    if any(list(r.bounds) != variant_names for r in rows):
        raise ValueError('all rows must carry the same bound variants')
    if output_format == 'csv':
        lines = [','.join(list(_BASE_COLUMNS) + variant_names)]
        lines.extend(','.join(_row_cells(row, variant_names)) for row in rows)
        payload = '\n'.join(lines) + '\n'
    elif output_format == 'json':
        payload = json.dumps([dataclasses.asdict(row) for row in rows], indent=2) + '\n'
    else:
        raise ValueError("output_format must be 'csv' or 'json'")
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix='.emit-')
    try:
        with os.fdopen(fd, 'w') as handle:
            handle.write(payload)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def load_rows(path, output_format='csv'):
    """Parse a file produced by :func:`emit` back into sweep rows."""
    if output_format == 'json':
        with open(path) as handle:
            data = json.load(handle)
        return [SweepRow(**row) for row in data]
    with open(path) as handle:
        lines = handle.read().splitlines()
    header = lines[0].split(',')
    variant_names = header[len(_BASE_COLUMNS):]
    rows = []
    for line in lines[1:]:
        cells = line.split(',')
        base = dict(zip(_BASE_COLUMNS, cells))
        rows.append(SweepRow(
            k=int(base['k']), p=int(base['p']), oversampling=int(base['oversampling']),
            q=int(base['q']), norm=base['norm'], metric=base['metric'],
            empirical_mean=float(base['empirical_mean']), empirical_std=float(base['empirical_std']),
            bounds={name: float(value) for name, value in zip(variant_names, cells[len(_BASE_COLUMNS):])},
        ))
    return rows
