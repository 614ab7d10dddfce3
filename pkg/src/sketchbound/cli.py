"""Command line interface.

Subcommands::

    sketchbound gen-matrix --n 1000 --seed 0 --out A.mtx
    sketchbound bounds --synthetic-n 200 --k 5 --p 20 --q 1 --variant cor_frobenius,hmt_frobenius
    sketchbound sweep --config sweep.json
    sketchbound empirical --matrix A.mtx --k 5 --p 20 --q 0 --trials 50 --seed 7

Exit codes: 0 on success, 2 on precondition violations, 1 on I/O errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import expectation, experiments, rsvd
from .linalg import read_matrix_market, svd, write_matrix_market
from .sketching import GaussianSketch, RsvdSketch, rsvd_distribution

_RSVD_VARIANTS = {
    'cor_frobenius': rsvd.frobenius_bound,
    'cor_spectral': rsvd.spectral_bound,
    'cor_spectral_improved': rsvd.improved_spectral_bound,
}
_THM_VARIANTS = {
    'thm3': expectation.expected_frobenius_gap_bound,
    'thm3_squared': expectation.expected_frobenius_gap_sq_bound,
    'thm4': expectation.expected_spectral_gap_bound,
    'thm5': expectation.expected_spectral_tail_bound,
}
_HMT_VARIANTS = ('hmt_frobenius', 'hmt_spectral', 'hmt_power')
_ALL_VARIANTS = tuple(_RSVD_VARIANTS) + tuple(_THM_VARIANTS) + _HMT_VARIANTS


def _build_parser():
    parser = argparse.ArgumentParser(prog='sketchbound',
                                     description='Low-rank sketching error bounds and Monte Carlo checks.')
    sub = parser.add_subparsers(dest='command', required=True)

    gen = sub.add_parser('gen-matrix', help='write the synthetic test matrix in Matrix Market format')
    gen.add_argument('--n', type=int, required=True)
    gen.add_argument('--seed', type=int, default=0)
    gen.add_argument('--out', required=True)

    bounds = sub.add_parser('bounds', help='evaluate bound variants as a JSON report')
    src = bounds.add_mutually_exclusive_group(required=True)
    src.add_argument('--matrix', help='Matrix Market file holding A')
    src.add_argument('--synthetic-n', type=int, help='use the synthetic test matrix of this order')
    bounds.add_argument('--seed', type=int, default=0, help='seed for the synthetic matrix')
    bounds.add_argument('--k', type=int, required=True)
    bounds.add_argument('--p', type=int, required=True)
    bounds.add_argument('--q', type=int, default=0)
    bounds.add_argument('--variant', default=','.join(_ALL_VARIANTS),
                        help='comma-separated list among: ' + ', '.join(_ALL_VARIANTS))
    bounds.add_argument('--mean', help='Matrix Market file with the sketch mean (thm variants)')
    bounds.add_argument('--cov', help='Matrix Market file with the sketch covariance (thm variants)')
    bounds.add_argument('--out', help='write the JSON report here instead of stdout')

    sweep = sub.add_parser('sweep', help='run a sweep described by a JSON config file')
    sweep.add_argument('--config', required=True)

    emp = sub.add_parser('empirical', help='Monte Carlo residual statistics as JSON')
    src = emp.add_mutually_exclusive_group(required=True)
    src.add_argument('--matrix')
    src.add_argument('--synthetic-n', type=int)
    emp.add_argument('--k', type=int, required=True)
    emp.add_argument('--p', type=int, required=True)
    emp.add_argument('--q', type=int, default=0)
    emp.add_argument('--trials', type=int, default=100)
    emp.add_argument('--seed', type=int, default=0)
    emp.add_argument('--norm', choices=experiments.NORMS, default='frobenius')
    emp.add_argument('--metric', choices=experiments.METRICS, default='general')
    emp.add_argument('--out')
    return parser


def _load_problem(args):
    if args.matrix is not None:
        a = read_matrix_market(args.matrix)
        return a, svd(a)
    return experiments.synthetic_matrix(args.synthetic_n, args.seed)


def _cmd_gen_matrix(args):
    a, _ = experiments.synthetic_matrix(args.n, args.seed)
    write_matrix_market(args.out, a)
    print(args.out)
    return 0


def _cmd_bounds(args):
    a, factors = _load_problem(args)
    variants = [v.strip() for v in args.variant.split(',') if v.strip()]
    unknown = set(variants) - set(_ALL_VARIANTS)
    if unknown:
        raise ValueError(f'unknown variants: {sorted(unknown)}')
    if (args.mean is None) != (args.cov is None):
        raise ValueError('--mean and --cov must be given together')
    sketch = None
    if args.mean is not None:
        mean = read_matrix_market(args.mean)
        cov = read_matrix_market(args.cov)
        sketch = GaussianSketch.from_moments(mean, cov)
        if sketch.shape[1] != args.p:
            raise ValueError(f'sketch mean has {sketch.shape[1]} columns, expected p={args.p}')
    report = {'k': args.k, 'p': args.p, 'q': args.q, 'variants': {}}
    profile = None
    for name in variants:
        if name in _RSVD_VARIANTS:
            if profile is None:
                profile = rsvd.SpectrumProfile.from_spectrum(factors.sigma, args.k, args.p, args.q)
            result = _RSVD_VARIANTS[name](profile)
            report['variants'][name] = {'bound': result.bound, **result.constants}
        elif name in _THM_VARIANTS:
            thm_sketch = sketch
            if thm_sketch is None:
                thm_sketch = rsvd_distribution(factors, args.q, args.p)
            result = _THM_VARIANTS[name](factors, thm_sketch, args.k, args.p)
            report['variants'][name] = {'bound': result.bound, 'mean_term': result.mean_term,
                                        **result.constants}
        elif name == 'hmt_frobenius':
            report['variants'][name] = {'bound': rsvd.hmt_frobenius(factors.sigma, args.k, args.p)}
        elif name == 'hmt_spectral':
            report['variants'][name] = {'bound': rsvd.hmt_spectral(factors.sigma, args.k, args.p)}
        elif name == 'hmt_power':
            report['variants'][name] = {'bound': rsvd.hmt_power(factors.sigma, args.k, args.p, args.q)}
    payload = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, 'w') as handle:
            handle.write(payload + '\n')
    else:
        print(payload)
    return 0


def _cmd_sweep(args):
    config = experiments.SweepConfig.from_json(args.config)
    rows = experiments.run_sweep(config)
    path = config.output_path or 'sweep.' + config.output_format
    experiments.emit(rows, config.output_format, path)
    print(path)
    return 0


def _cmd_empirical(args):
    a, factors = _load_problem(args)
    stats = experiments.empirical_error(
        a, factors, RsvdSketch(q=args.q, p=args.p), args.k, args.trials,
        norm=args.norm, metric=args.metric, seed=args.seed,
    )
    payload = json.dumps({
        'k': args.k, 'p': args.p, 'q': args.q, 'norm': args.norm, 'metric': args.metric,
        'trials': stats.trials, 'excluded_trials': stats.excluded_trials,
        'mean': stats.mean, 'std': stats.std,
    }, indent=2)
    if args.out:
        with open(args.out, 'w') as handle:
            handle.write(payload + '\n')
    else:
        print(payload)
    return 0


_COMMANDS = {
    'gen-matrix': _cmd_gen_matrix,
    'bounds': _cmd_bounds,
    'sweep': _cmd_sweep,
    'empirical': _cmd_empirical,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except OSError as exc:
        print(f'sketchbound: I/O error: {exc}', file=sys.stderr)
        return 1
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f'sketchbound: {exc}', file=sys.stderr)
        return 2


if __name__ == '__main__':
    sys.exit(main())
