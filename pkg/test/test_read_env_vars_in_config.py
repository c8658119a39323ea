"""Tests environment variable expansion while loading configurations."""
import pytest

from oscitrace.util.read_env_vars_in_config import parse_config

CONFIG_TEXT = """
cache_dir: !ENV '${OSCITRACE_TEST_ROOT}/cache'
out_dir: ${OSCITRACE_TEST_OUT:-results}
label: !ENV '${OSCITRACE_TEST_UNSET}'
eigensolver: lapack
basis_size: 40
"""


@pytest.fixture
def settings(monkeypatch):
    """Initialise the environment for testing.

    Returns:
        dictionary with the configuration text
    """
    monkeypatch.setenv('OSCITRACE_TEST_ROOT', '/data/run')
    monkeypatch.delenv('OSCITRACE_TEST_OUT', raising=False)
    monkeypatch.delenv('OSCITRACE_TEST_UNSET', raising=False)
    settings_dict = dict()
    settings_dict['text'] = CONFIG_TEXT
    return settings_dict


def test_tagged_and_default(settings):
    config = parse_config(data=settings['text'])
    assert config['cache_dir'] == '/data/run/cache'
    assert config['out_dir'] == 'results'
    assert config['label'] == 'OSCITRACE_TEST_UNSET'
    assert config['eigensolver'] == 'lapack'
    assert config['basis_size'] == 40


def test_default_overridden(settings, monkeypatch):
    monkeypatch.setenv('OSCITRACE_TEST_OUT', '/scratch/out')
    assert parse_config(data=settings['text'])['out_dir'] == '/scratch/out'


def test_parse_from_path(settings, tmp_path):
    path = tmp_path / 'run.yaml'
    path.write_text(settings['text'])
    assert parse_config(path=str(path))['cache_dir'] == '/data/run/cache'


def test_json_input():
    config = parse_config(data='{"basis_size": 40, "trace_ks": [1, 2], "t_grid": {"t_min": 0.02}}')
    assert config == {'basis_size': 40, 'trace_ks': [1, 2], 't_grid': {'t_min': 0.02}}


def test_no_input():
    with pytest.raises(ValueError):
        parse_config()
