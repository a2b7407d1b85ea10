"""
Tests for the command-line driver and the pipeline behind it.
"""

import json
import os

import pandas as pd
import pytest

from caplaw import DegenerateInfimumWarning, Pipeline, PropertyReport
from caplaw.cli import _flag_overrides, _merge, build_parser, main


def load(output_dir, name):
    with open(os.path.join(output_dir, f'{name}.json'), encoding='utf-8') as f:
        return json.load(f)


def write_config(tmp_path, config, name='config.json'):
    path = tmp_path / name
    path.write_text(json.dumps(config), encoding='utf-8')
    return str(path)


class TestConjugate:

    def test_cubic(self, output_dir):
        assert main(['conjugate', '--p', '3', '--y', '2', '--out', output_dir]) == 0
        row = load(output_dir, 'conjugate')['rows'][0]
        assert row['analytic'] == pytest.approx(1.718951, abs=1e-6)
        assert row['numeric'] == pytest.approx(row['analytic'], abs=1e-8)
        assert not row['truncated']

    def test_zero(self, output_dir):
        assert main(['conjugate', '--p', '2', '--y', '0', '--out', output_dir]) == 0
        row = load(output_dir, 'conjugate')['rows'][0]
        assert row['analytic'] == 0.0
        assert row['numeric'] == 0.0

    def test_default_grid_as_csv(self, output_dir):
        assert main(['conjugate', '--p', '1.5', '--format', 'csv', '--out', output_dir]) == 0
        table = pd.read_csv(os.path.join(output_dir, 'conjugate.csv'))
        assert len(table) == 201
        assert table['abs_diff'].max() <= 1e-6

    def test_scaled(self, output_dir):
        assert main(['conjugate', '--p', '2', '--a', '2', '--b', '1', '--y', '2', '--out', output_dir]) == 0
        row = load(output_dir, 'conjugate')['rows'][0]
        assert row['analytic'] == pytest.approx(1.0)
        assert row['numeric'] == pytest.approx(1.0, abs=1e-9)

    def test_p_one_is_a_domain_error(self, output_dir):
        assert main(['conjugate', '--p', '1', '--y', '1', '--out', output_dir]) == 2


class TestTau:

    def test_default_family(self, output_dir):
        assert main(['tau', '--out', output_dir]) == 0
        certificate = load(output_dir, 'tau')
        assert certificate['a'] == pytest.approx(1.0, abs=1e-4)
        assert certificate['closed_form_a'] == 1.0
        assert certificate['provenance'] == 'exact-gaussian'

    def test_sigma_two(self, tmp_path, output_dir):
        config = write_config(tmp_path, {'family': {'gaussian': {'means': [-0.6, 0.0, 0.6], 'sigma': 2.0}}})
        assert main(['tau', '--config', config, '--out', output_dir]) == 0
        assert load(output_dir, 'tau')['a'] == pytest.approx(2.0, abs=1e-4)

    def test_constant_variable_is_degenerate(self, tmp_path, output_dir):
        config = write_config(tmp_path, {'family': {'discrete': {'outcomes': 1, 'measures': [[1.0]]}},
                                         'values': [0.7]})
        with pytest.warns(DegenerateInfimumWarning):
            assert main(['tau', '--config', config, '--out', output_dir]) == 0
        certificate = load(output_dir, 'tau')
        assert certificate['degenerate']
        assert certificate['a'] == 1e-6

    def test_bracket_failure(self, output_dir):
        assert main(['tau', '--a-hi', '0.5', '--out', output_dir]) == 3

    def test_discrete_without_values(self, tmp_path, output_dir):
        config = write_config(tmp_path, {'family': {'discrete': {'measures': [[0.5, 0.5]]}}})
        assert main(['tau', '--config', config, '--out', output_dir]) == 2


class TestTailbound:

    def test_with_empirical_capacity(self, output_dir):
        assert main(['tailbound', '--a', '1', '--epsilon', '3', '--empirical-samples', '100000',
                     '--out', output_dir]) == 0
        row = load(output_dir, 'tailbound')['rows'][0]
        assert row['bound'] == pytest.approx(0.022218, abs=1e-6)
        assert row['empirical'] <= row['bound']
        assert row['dominated']
        assert row['truncated'] is False

    def test_scaled_phi_reports_truncation_flag(self, tmp_path, output_dir):
        config = write_config(tmp_path, {'phi': {'p': 2, 'a': 2.0, 'b': 1.0}, 'epsilon': [3.0]})
        assert main(['tailbound', '--config', config, '--out', output_dir]) == 0
        row = load(output_dir, 'tailbound')['rows'][0]
        assert row['method'] == 'numeric'
        assert row['exponent'] == pytest.approx(9 / 4, abs=1e-7)
        assert row['truncated'] is False

    def test_tiny_epsilon(self, output_dir):
        assert main(['tailbound', '--epsilon', '1e-12', '--out', output_dir]) == 0
        assert load(output_dir, 'tailbound')['rows'][0]['bound'] == pytest.approx(2.0)

    def test_nonpositive_parameter(self, output_dir):
        assert main(['tailbound', '--a', '0', '--out', output_dir]) == 2

    def test_rerun_from_resolved_config_is_identical(self, tmp_path):
        first, second = str(tmp_path / 'first'), str(tmp_path / 'second')
        assert main(['tailbound', '--epsilon', '1', '2', '--empirical-samples', '5000', '--seed', '9',
                     '--out', first]) == 0
        resolved = os.path.join(first, 'resolved_config.json')
        assert main(['tailbound', '--config', resolved, '--out', second]) == 0
        with open(os.path.join(first, 'tailbound.json'), 'rb') as a, \
                open(os.path.join(second, 'tailbound.json'), 'rb') as b:
            assert a.read() == b.read()


class TestSlln:

    def test_small_run(self, output_dir):
        assert main(['slln', '--n-steps', '200', '--n-paths', '50', '--n-min', '100', '--epsilon', '1',
                     '--format', 'both', '--out', output_dir]) == 0
        report = load(output_dir, 'slln')
        assert report['estimate']['upper_deviation'] == 0.0
        assert report['estimate']['lower_sandwich'] == 1.0
        for stem in ('checkpoints', 'series', 'lemma_curve'):
            assert os.path.exists(os.path.join(output_dir, f'{stem}.csv'))
        checkpoints = pd.read_csv(os.path.join(output_dir, 'checkpoints.csv'))
        assert list(checkpoints.columns) == ['m', 'n', 'deviation_frequency', 'lemma_bound', 'theorem_bound']

    def test_draw_cap(self, monkeypatch, output_dir):
        monkeypatch.setenv('CAPLAW_MAX_DRAWS', '1000')
        assert main(['slln', '--n-steps', '200', '--n-paths', '50', '--n-min', '100', '--out', output_dir]) == 4

    def test_invalid_horizon(self, output_dir):
        assert main(['slln', '--n-steps', '100', '--n-min', '200', '--n-paths', '10', '--out', output_dir]) == 2


class TestVerify:

    def test_default_family(self, output_dir):
        assert main(['verify', '--out', output_dir]) == 0
        payload = load(output_dir, 'verify')
        assert all(check['passed'] for check in payload['axioms']['checks'])
        assert payload['mean_band'] == {'lower': 0.5, 'upper': 0.8, 'uncertain': True}

    def test_malformed_family(self, tmp_path, output_dir):
        config = write_config(tmp_path, {'family': {'discrete': {'measures': [[0.6, 0.3]]}}})
        assert main(['verify', '--config', config, '--out', output_dir]) == 2

    def test_independence(self, tmp_path, output_dir):
        coordinate = {'discrete': {'outcomes': 2, 'measures': [[0.5, 0.5], [0.8, 0.2]]}}
        config = write_config(tmp_path, {'independence': {'coordinates': [coordinate, coordinate],
                                                          'functions': [[1.0, 0.0], [0.0, 1.0]]}})
        assert main(['verify', '--config', config, '--out', output_dir]) == 0
        check = load(output_dir, 'verify')['independence']['checks'][0]
        assert check['lhs'] == pytest.approx(0.25)
        assert check['rhs'] == pytest.approx(0.4)

    def test_failed_property_exit_code(self, monkeypatch, output_dir):
        monkeypatch.setattr('caplaw._pipeline.verify_sublinear_axioms',
                            lambda *args, **kwargs: PropertyReport(subject='axioms').add('monotone', False))
        assert main(['verify', '--out', output_dir]) == 5
        assert os.path.exists(os.path.join(output_dir, 'verify.json'))


class TestConfiguration:

    def test_bad_json(self, tmp_path, output_dir):
        path = tmp_path / 'broken.json'
        path.write_text('{not json', encoding='utf-8')
        assert main(['verify', '--config', str(path), '--out', output_dir]) == 2

    def test_invalid_section_value(self, tmp_path, output_dir):
        config = write_config(tmp_path, {'phi': {'p': 2, 'a': -1.0}})
        assert main(['conjugate', '--config', config, '--y', '1', '--out', output_dir]) == 2

    @pytest.mark.parametrize('measures', [[[0.5, 0.5], [1.0]], [['a', 'b']]])
    def test_malformed_measures(self, tmp_path, output_dir, measures):
        config = write_config(tmp_path, {'family': {'discrete': {'measures': measures}}})
        assert main(['verify', '--config', config, '--out', output_dir]) == 2

    def test_independence_function_length_mismatch(self, tmp_path, output_dir):
        coordinate = {'discrete': {'measures': [[0.5, 0.5], [0.8, 0.2]]}}
        config = write_config(tmp_path, {'independence': {'coordinates': [coordinate],
                                                          'functions': [[1.0, 0.0, 2.0]]}})
        assert main(['verify', '--config', config, '--out', output_dir]) == 2

    @pytest.mark.parametrize('command', ['conjugate', 'tau', 'tailbound'])
    def test_non_object_section(self, tmp_path, output_dir, command):
        config = write_config(tmp_path, {'phi': 3})
        assert main([command, '--config', config, '--out', output_dir]) == 2
        assert main([command, '--config', config, '--p', '2', '--out', output_dir]) == 2

    def test_file_phi_kept_without_phi_flags(self, tmp_path, output_dir):
        config = write_config(tmp_path, {'phi': {'p': 3}})
        assert main(['conjugate', '--config', config, '--y', '2', '--out', output_dir]) == 0
        assert load(output_dir, 'resolved_config')['phi']['p'] == 3.0

    def test_flags_override_file(self):
        args = build_parser().parse_args(['conjugate', '--p', '3', '--y', '2'])
        merged = _merge({'phi': {'p': 2, 'a': 2.0}, 'y': [1.0], 'tol': 1e-8}, _flag_overrides(args))
        run = Pipeline.resolve_config('conjugate', merged)
        assert (run.phi.p, run.phi.a, run.phi.b) == (3.0, 2.0, 1.0)
        assert run.y == [2.0]
        assert run.tol == 1e-8

    def test_config_helper(self):
        defaults = Pipeline.config_helper()
        assert set(defaults) == {'conjugate', 'tau', 'tailbound', 'slln', 'verify'}
        assert defaults['slln']['n_steps'] == 10000

    def test_resolved_config_written(self, output_dir):
        assert main(['verify', '--seed', '3', '--out', output_dir]) == 0
        resolved = load(output_dir, 'resolved_config')
        assert resolved['command'] == 'verify'
        assert resolved['seed'] == 3
        assert resolved['family'] == {'discrete': {'outcomes': 2, 'measures': [[0.5, 0.5], [0.8, 0.2]]}}
