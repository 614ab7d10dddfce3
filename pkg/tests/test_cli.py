import json

import numpy as np
import pytest

from sketchbound.cli import main
from sketchbound.experiments import synthetic_matrix
from sketchbound.linalg import read_matrix_market, write_matrix_market
from sketchbound.rsvd import SpectrumProfile, frobenius_bound


def run_cli(*argv):
    return main(list(argv))


class TestGenMatrix:
    def test_writes_matrix_market(self, tmp_path, capsys):
        out = tmp_path / 'a.mtx'
        assert run_cli('gen-matrix', '--n', '20', '--seed', '3', '--out', str(out)) == 0
        a = read_matrix_market(out)
        expected, _ = synthetic_matrix(20, 3)
        assert np.allclose(a, expected, atol=1e-14)
        assert str(out) in capsys.readouterr().out


class TestBounds:
    def test_synthetic_rsvd_report(self, capsys):
        assert run_cli('bounds', '--synthetic-n', '40', '--seed', '1',
                       '--k', '3', '--p', '9', '--q', '1',
                       '--variant', 'cor_frobenius,hmt_power') == 0
        report = json.loads(capsys.readouterr().out)
        assert report['k'] == 3 and report['p'] == 9 and report['q'] == 1
        _, f = synthetic_matrix(40, 1)
        profile = SpectrumProfile.from_spectrum(f.sigma, 3, 9, 1)
        expected = frobenius_bound(profile)
        assert report['variants']['cor_frobenius']['bound'] == pytest.approx(expected.bound)
        assert report['variants']['cor_frobenius']['a_k'] == pytest.approx(expected.constants['a_k'])
        assert 'hmt_power' in report['variants']

    def test_matrix_file_input(self, tmp_path, capsys):
        a, _ = synthetic_matrix(25, 2)
        path = tmp_path / 'a.mtx'
        write_matrix_market(path, a)
        assert run_cli('bounds', '--matrix', str(path), '--k', '2', '--p', '8',
                       '--variant', 'cor_spectral') == 0
        report = json.loads(capsys.readouterr().out)
        assert report['variants']['cor_spectral']['bound'] > 0

    def test_theorem_variants_with_descriptor_moments(self, tmp_path, capsys):
        a, _ = synthetic_matrix(20, 4)
        matrix_path = tmp_path / 'a.mtx'
        write_matrix_market(matrix_path, a)
        mean_path = tmp_path / 'mean.mtx'
        cov_path = tmp_path / 'cov.mtx'
        write_matrix_market(mean_path, np.zeros((20, 7)))
        write_matrix_market(cov_path, a @ a.T)
        assert run_cli('bounds', '--matrix', str(matrix_path), '--k', '3', '--p', '7',
                       '--variant', 'thm3,thm4,thm5',
                       '--mean', str(mean_path), '--cov', str(cov_path)) == 0
        report = json.loads(capsys.readouterr().out)
        assert {'thm3', 'thm4', 'thm5'} == set(report['variants'])
        assert report['variants']['thm5']['c_hat_k'] <= report['variants']['thm4']['c_k'] + 1e-12

    def test_unknown_variant_is_precondition_error(self):
        assert run_cli('bounds', '--synthetic-n', '30', '--k', '2', '--p', '6',
                       '--variant', 'wat') == 2

    def test_k_out_of_range_is_precondition_error(self):
        assert run_cli('bounds', '--synthetic-n', '30', '--k', '5', '--p', '6',
                       '--variant', 'cor_frobenius') == 2

    def test_missing_matrix_file_is_io_error(self, tmp_path):
        assert run_cli('bounds', '--matrix', str(tmp_path / 'none.mtx'),
                       '--k', '2', '--p', '6', '--variant', 'cor_frobenius') == 1


class TestSweep:
    def test_runs_config_and_writes_csv(self, tmp_path, capsys):
        out = tmp_path / 'rows.csv'
        config = {
            'n': 30, 'k_list': [3], 'oversampling_list': [3, 6], 'q_list': [0],
            'trials': 3, 'seed': 5, 'norm_list': ['frobenius'],
            'output_path': str(out),
        }
        config_path = tmp_path / 'config.json'
        config_path.write_text(json.dumps(config))
        assert run_cli('sweep', '--config', str(config_path)) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 3
        assert str(out) in capsys.readouterr().out

    def test_bad_config_key(self, tmp_path):
        config_path = tmp_path / 'config.json'
        config_path.write_text(json.dumps({'n': 30, 'k_list': [3], 'oversampling_list': [3],
                                           'bogus': True}))
        assert run_cli('sweep', '--config', str(config_path)) == 2

    def test_missing_config_file(self, tmp_path):
        assert run_cli('sweep', '--config', str(tmp_path / 'none.json')) == 1


class TestEmpirical:
    def test_json_statistics(self, capsys):
        assert run_cli('empirical', '--synthetic-n', '30', '--k', '3', '--p', '8',
                       '--q', '0', '--trials', '5', '--seed', '2',
                       '--norm', 'frobenius', '--metric', 'general') == 0
        stats = json.loads(capsys.readouterr().out)
        assert stats['trials'] == 5
        assert stats['excluded_trials'] == 0
        assert stats['mean'] > 0
        assert stats['std'] >= 0

    def test_deterministic_across_runs(self, capsys):
        args = ('empirical', '--synthetic-n', '25', '--k', '2', '--p', '6',
                '--trials', '4', '--seed', '9')
        assert run_cli(*args) == 0
        first = capsys.readouterr().out
        assert run_cli(*args) == 0
        assert capsys.readouterr().out == first
