"""Tests the run configuration and the command line entry point."""
import io
import json
import logging
import os

import pandas as pd
import pytest

from oscitrace import CACHE_ENV_VAR
from oscitrace.cli import RunConfig, ConfigError, load_config, cmd_invariants, cmd_spectrum, \
    spectrum_cache_key, main
from oscitrace.potential import ZERO_POTENTIAL, reference_potential

Q_REF_CONFIG = os.path.join(os.path.dirname(os.path.abspath(__file__)), '..', 'q_ref.json')


@pytest.fixture
def settings(tmp_path):
    """Initialise values for testing.

    Returns:
        dictionary with a small unperturbed run written to a config file
    """
    settings_dict = dict()
    null_run = {'potential': ZERO_POTENTIAL.to_dict(), 'basis_size': 40, 'eigen_count': 20,
                'fit_window': {'n_lo': 5, 'n_hi': 20}, 'out_dir': str(tmp_path / 'out')}
    path = tmp_path / 'null.json'
    path.write_text(json.dumps(null_run))
    settings_dict['null_run'] = null_run
    settings_dict['null_config'] = str(path)
    settings_dict['out_dir'] = null_run['out_dir']
    return settings_dict


@pytest.fixture(autouse=True)
def reset_logging(monkeypatch):
    monkeypatch.delenv(CACHE_ENV_VAR, raising=False)
    yield
    for handler in logging.root.handlers[:]:
        logging.root.removeHandler(handler)


def test_invariants_command(capsys):
    assert main(['invariants', '--max-order', '2']) == 0
    output = capsys.readouterr().out
    assert 'a_0 = 1' in output
    assert 'a_1 = -v' in output
    assert "a_2 = 1/2 v^2 - 1/6 v''" in output
    assert main(['invariants', '--max-order', '99']) == 2


def test_invariants_json():
    stream = io.StringIO()
    cmd_invariants(3, 'json', stream=stream)
    rows = json.loads(stream.getvalue())
    assert [row['j'] for row in rows] == [0, 1, 2, 3]
    assert rows[1]['plain'] == '-v'
    with pytest.raises(ConfigError):
        cmd_invariants(9, max_j=8)


def test_config_round_trip(settings):
    config = RunConfig.from_dict(settings['null_run'])
    assert RunConfig.from_dict(config.to_dict()) == config
    assert config.basis_size == 40
    assert config.potential == ZERO_POTENTIAL
    assert config.b_order == 6
    assert config.t_values() == pytest.approx([0.02, 0.04, 0.08, 0.16])


def test_reference_config():
    config = load_config(Q_REF_CONFIG)
    assert config.potential == reference_potential()
    assert config.basis_size == 1200
    assert config.eigen_count == 400
    assert config.resolved_cache_dir == os.path.join('out', 'cache')


def test_config_errors(settings):
    with pytest.raises(ConfigError):
        RunConfig.from_dict({'basis_sise': 10})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({'b_order': 9, 'max_j': 8})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({'eigensolver': 'power'})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({'potential': {'terms': [{'poly': [1.0]}]}})
    with pytest.raises(ConfigError):
        load_config(str(os.path.join(settings['out_dir'], 'missing.json')))
    assert main(['coeffs', '--config', 'no_such_config.yaml']) == 2


def test_cache_dir_precedence(settings, monkeypatch, tmp_path):
    assert load_config(settings['null_config']).cache_dir is None
    monkeypatch.setenv(CACHE_ENV_VAR, str(tmp_path / 'env_cache'))
    assert load_config(settings['null_config']).resolved_cache_dir == str(tmp_path / 'env_cache')
    flagged = load_config(settings['null_config'], cache_dir=str(tmp_path / 'flag_cache'))
    assert flagged.cache_dir == str(tmp_path / 'flag_cache')


def test_coeffs_command(settings):
    assert main(['coeffs', '--config', settings['null_config']]) == 0
    with open(os.path.join(settings['out_dir'], 'coeffs.json')) as result_file:
        result = json.load(result_file)
    assert all(row['b'] == 0.0 for row in result['rows'])
    assert all(value == 0.0 for value in result['c'].values())
    frame = pd.read_csv(os.path.join(settings['out_dir'], 'coeffs.csv'))
    assert list(frame['j']) == [1, 2, 3, 4, 5, 6]


def test_spectrum_cache(settings, caplog):
    caplog.set_level(logging.INFO)
    config = RunConfig.from_dict(settings['null_run'])
    first = cmd_spectrum(config)
    assert 'spectrum cache miss' in caplog.text
    caplog.clear()
    second = cmd_spectrum(config)
    assert 'spectrum cache hit' in caplog.text
    assert list(second.eigenvalues) == list(first.eigenvalues)
    other = config.with_overrides(basis_size=60)
    assert spectrum_cache_key(other) != spectrum_cache_key(config)


def test_verify_null_run(settings):
    assert main(['verify', '--config', settings['null_config']]) == 0
    for name in ('asymptotics.json', 'trace_report.json', 'heat_trace.json', 'asymptotics.csv'):
        assert os.path.isfile(os.path.join(settings['out_dir'], name))
    with open(os.path.join(settings['out_dir'], 'trace_report.json')) as report_file:
        report = json.load(report_file)
    assert report['passed']
    assert [entry['k'] for entry in report['reports']] == [1, 2, 3]
    assert all(entry['within_bound'] for entry in report['reports'])


def test_verify_failure_exit_code(tmp_path):
    strict = {'basis_size': 40, 'eigen_count': 20, 'trace_tol': 1e-15,
              'out_dir': str(tmp_path / 'strict')}
    path = tmp_path / 'strict.json'
    path.write_text(json.dumps(strict))
    assert main(['verify', '--config', str(path), '--which', 'traces']) == 1


if __name__ == "__main__":
    test_invariants_json()
