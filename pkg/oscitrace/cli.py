# ============================*
 # ** Copyright UCAR (c) 2020
 # ** University Corporation for Atmospheric Research (UCAR)
 # ** National Center for Atmospheric Research (NCAR)
 # ** Research Applications Lab (RAL)
 # ** P.O.Box 3000, Boulder, Colorado, 80307-3000, USA
 # ============================*



"""
Program Name: cli.py

Command line entry point.

    oscitrace invariants --max-order 4 --format latex
    oscitrace coeffs --config q_ref.json --out results
    oscitrace spectrum --config q_ref.json
    oscitrace verify --config q_ref.json --which all

Exit codes: 0 success, 1 verification failure, 2 configuration or IO error.
"""
import argparse
import copy
import json
import logging
import math
import os
import sys

import numpy as np
import pandas as pd
import yaml

from oscitrace import DEFAULT_MAX_J, CACHE_ENV_VAR
from oscitrace.coeffs import b_coeffs, closed_form_c, DEFAULT_J, DEFAULT_QUADRATURE_TOL
from oscitrace.diffpoly import heat_invariant, render
from oscitrace.potential import Potential, reference_potential, max_abs, potential_id
from oscitrace.series import invert_expansion, reversion_errors, wholepower_check
from oscitrace.spectra import (Spectrum, compute_spectrum, EIGENSOLVERS, MIN_PANELS,
                               NODES_PER_WAVELENGTH)
from oscitrace.traces import (asymptotic_residual, fit_next_coefficient, heat_trace_scan,
                              trace_identity, trace_display_k3, emit_csv, dyadic_t_grid,
                              DegenerateFit, HeatTraceTooSmallT, DEFAULT_T_MIN, DEFAULT_T_MAX,
                              DEFAULT_TRACE_TOL)
from oscitrace.util.quadrature import NODES_PER_PANEL
from oscitrace.util.read_env_vars_in_config import parse_config
from oscitrace.util.utils import content_hash, map_tasks, write_atomic, write_json

__author__ = 'Tatiana Burek'
__version__ = '0.1.0'

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG_ERROR = 2

WHICH = ('asymptotics', 'traces', 'heat-trace', 'all')
SLOPE_TOL = 0.3
COEFFICIENT_REL_TOL = 0.01
HEAT_SLOPE_TOL = 0.5


class ConfigError(Exception):
    """Raised for malformed or unreadable run configurations."""


DEFAULTS = {
    'potential': reference_potential().to_dict(),
    'basis_size': 1200,
    'eigen_count': 400,
    'max_j': DEFAULT_MAX_J,
    'b_order': DEFAULT_J,
    'quadrature_tol': DEFAULT_QUADRATURE_TOL,
    'eigen_tol': 1e-8,
    'trace_tol': DEFAULT_TRACE_TOL,
    'trace_ks': [1, 2, 3],
    't_grid': {'t_min': DEFAULT_T_MIN, 't_max': DEFAULT_T_MAX, 't_count': None},
    'heat_j': 4,
    'fit_window': {'n_lo': 50, 'n_hi': 400},
    'out_dir': 'out',
    'cache_dir': None,
    'num_threads': 1,
    'eigensolver': 'householder_ql',
}

_INT_KEYS = ('basis_size', 'eigen_count', 'max_j', 'b_order', 'heat_j', 'num_threads')
_FLOAT_KEYS = ('quadrature_tol', 'eigen_tol', 'trace_tol')


class RunConfig:
    """Validated run settings; to_dict() reproduces the mapping it was built from"""

    def __init__(self, settings):
        self._settings = settings
        self.potential = Potential.from_dict(settings['potential'])
        for key, value in settings.items():
            if key != 'potential':
                setattr(self, key, value)

    @classmethod
    def from_dict(cls, data):
        """Merges data over DEFAULTS and validates every key.

        Raises:
            ConfigError for unknown keys or values of the wrong type
        """
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError('configuration must be a mapping')
        unknown = sorted(set(data) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f'unknown configuration keys {unknown}')
        settings = copy.deepcopy(DEFAULTS)
        for key, value in data.items():
            if isinstance(DEFAULTS[key], dict) and key != 'potential':
                if not isinstance(value, dict):
                    raise ConfigError(f'{key} must be a mapping')
                extra = sorted(set(value) - set(DEFAULTS[key]))
                if extra:
                    raise ConfigError(f'unknown keys {extra} in {key}')
                settings[key].update(copy.deepcopy(value))
            else:
                settings[key] = copy.deepcopy(value)
        try:
            for key in _INT_KEYS:
                if isinstance(settings[key], bool) or int(settings[key]) != settings[key]:
                    raise ConfigError(f'{key} must be an integer')
                settings[key] = int(settings[key])
            for key in _FLOAT_KEYS:
                settings[key] = float(settings[key])
                if not settings[key] > 0:
                    raise ConfigError(f'{key} must be positive')
            settings['trace_ks'] = [int(k) for k in settings['trace_ks']]
            settings['fit_window'] = {name: int(v) for name, v in settings['fit_window'].items()}
            grid = settings['t_grid']
            grid['t_min'] = float(grid['t_min'])
            grid['t_max'] = float(grid['t_max'])
            if grid['t_count'] is not None:
                grid['t_count'] = int(grid['t_count'])
            config = cls(settings)
        except (TypeError, ValueError) as err:
            raise ConfigError(f'invalid configuration: {err}') from err
        if config.eigensolver not in EIGENSOLVERS:
            raise ConfigError(f'eigensolver must be one of {EIGENSOLVERS}')
        if not set(config.trace_ks) <= {1, 2, 3}:
            raise ConfigError('trace_ks must be drawn from 1, 2, 3')
        if config.b_order > config.max_j:
            raise ConfigError(f'b_order {config.b_order} exceeds max_j {config.max_j}')
        return config

    def to_dict(self):
        return copy.deepcopy(self._settings)

    def with_overrides(self, **overrides):
        """A copy with the non-None overrides applied"""
        settings = self.to_dict()
        settings.update({key: value for key, value in overrides.items() if value is not None})
        return RunConfig.from_dict(settings)

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self._settings == other._settings

    def __repr__(self):
        return f'RunConfig({self._settings!r})'

    @property
    def resolved_cache_dir(self):
        return self.cache_dir or os.path.join(self.out_dir, 'cache')

    def t_values(self):
        grid = self.t_grid
        if grid['t_count']:
            return list(np.geomspace(grid['t_min'], grid['t_max'], grid['t_count']))
        return dyadic_t_grid(grid['t_min'], grid['t_max'])


def load_config(path=None, out_dir=None, num_threads=None, cache_dir=None):
    """RunConfig from a YAML/JSON file with flag > environment > file > default precedence"""
    data = {}
    if path:
        if not os.path.isfile(path):
            raise ConfigError(f'configuration file {path} not found')
        try:
            data = parse_config(path=path) or {}
        except yaml.YAMLError as err:
            raise ConfigError(f'cannot parse {path}: {err}') from err
    config = RunConfig.from_dict(data)
    env_cache = os.environ.get(CACHE_ENV_VAR)
    return config.with_overrides(out_dir=out_dir, num_threads=num_threads,
                                 cache_dir=cache_dir or env_cache)


def cmd_invariants(max_order, fmt='plain', max_j=DEFAULT_MAX_J, stream=None):
    """Writes a_0..a_max_order to stream (stdout by default)"""
    stream = stream or sys.stdout
    if max_order < 0 or max_order > max_j:
        raise ConfigError(f'max order {max_order} outside 0..{max_j}')
    table = [(j, heat_invariant(j, max_j)) for j in range(max_order + 1)]
    if fmt == 'json':
        rows = [{'j': j, 'plain': render(p), 'latex': render(p, 'latex')} for j, p in table]
        stream.write(json.dumps(rows, indent=2) + '\n')
    else:
        for j, poly in table:
            stream.write(f'a_{j} = {render(poly, fmt)}\n')
    return table


def _coefficients(config):
    b = b_coeffs(config.potential, config.b_order, config.quadrature_tol, config.max_j)
    c = invert_expansion(b, 2 * config.b_order)
    return b, c


def cmd_coeffs(config):
    """Writes coeffs.json and coeffs.csv with I_j, b_j and c_j"""
    b, c = _coefficients(config)
    closed = closed_form_c(config.potential, config.quadrature_tol)
    c_table = {str(j): c[j] for j in range(1, c.trunc + 1)}
    result = {
        'potential_id': b.potential_id,
        'rows': b.to_rows(),
        'c': c_table,
        'wholepower_residuals': list(wholepower_check(c)) if c.trunc >= 6 else None,
        'closed_form': closed,
        'quadrature': b.quadrature_meta,
    }
    write_json(os.path.join(config.out_dir, 'coeffs.json'), result)
    frame = b.to_dataframe()
    frame['c'] = [c.get(j) for j in frame['j']]
    write_atomic(os.path.join(config.out_dir, 'coeffs.csv'), frame.to_csv(index=False))
    logging.info(f'coefficients written to {config.out_dir}: c_1 = {c.get(1):.8g}')
    return result


def spectrum_cache_key(config):
    """Content hash of everything the Galerkin spectrum depends on"""
    return content_hash({'potential': config.potential.to_dict(), 'N': config.basis_size,
                         'count': config.eigen_count, 'eigen_tol': config.eigen_tol,
                         'eigensolver': config.eigensolver,
                         'quadrature': {'nodes_per_panel': NODES_PER_PANEL,
                                        'min_panels': MIN_PANELS,
                                        'nodes_per_wavelength': NODES_PER_WAVELENGTH}})


def cmd_spectrum(config):
    """Galerkin spectrum from the cache when the key matches, computed and cached otherwise"""
    key = spectrum_cache_key(config)
    path = os.path.join(config.resolved_cache_dir, f'spectrum_{key[:16]}.json')
    if os.path.isfile(path):
        try:
            spec = Spectrum.load(path)
        except (ValueError, KeyError) as err:
            logging.warning(f'ignoring unreadable spectrum cache {path}: {err}')
        else:
            if (spec.potential_id == potential_id(config.potential)
                    and spec.basis_size == config.basis_size):
                logging.info(f'spectrum cache hit: {path}')
                return spec
    logging.info(f'spectrum cache miss: computing N={config.basis_size}')
    spec = compute_spectrum(config.potential, config.basis_size, config.eigen_count,
                            config.eigen_tol, config.eigensolver)
    spec.save(path)
    logging.info(f'spectrum cached at {path}, reliable_count={spec.reliable_count}')
    return spec


def _verify_asymptotics(config, spec, b, c):
    window = (config.fit_window['n_lo'], min(config.fit_window['n_hi'], spec.reliable_count))
    first = asymptotic_residual(spec, c, 1)
    third = asymptotic_residual(spec, c, 3)
    frame = pd.DataFrame({'n': first['n'], 'lambda0': first['lambda0'],
                          'residual_J1': first['residual'], 'residual_J3': third['residual']})
    emit_csv(frame, os.path.join(config.out_dir, 'asymptotics.csv'))

    if not np.any(first['residual'].to_numpy()) and not np.any(third['residual'].to_numpy()):
        report = {'null_case': True, 'passed': True}
    else:
        try:
            fit_1 = fit_next_coefficient(first, 1.5, window)
            fit_3 = fit_next_coefficient(third, 2.0, window)
        except DegenerateFit as err:
            report = {'passed': False, 'error': str(err)}
        else:
            expected = -b.b(2)
            relative = abs(fit_1.coefficient_estimate - expected) / max(abs(expected), 1e-300)
            passed = (abs(fit_1.exponent_estimate + 1.5) <= SLOPE_TOL
                      and abs(fit_3.exponent_estimate + 2.0) <= SLOPE_TOL
                      and relative <= COEFFICIENT_REL_TOL)
            report = {'fit_J1': fit_1._asdict(), 'fit_J3': fit_3._asdict(),
                      'c3_from_b': expected, 'c3_relative_error': relative,
                      'closed_form': closed_form_c(config.potential, config.quadrature_tol),
                      'passed': passed}
    write_json(os.path.join(config.out_dir, 'asymptotics.json'), report)
    return report['passed']


def _verify_traces(config, spec, b, c):
    c_errors = reversion_errors(b, c.trunc)
    reports = map_tasks(trace_identity,
                        [(k, spec, c, config.trace_tol, c_errors) for k in config.trace_ks],
                        config.num_threads)
    result = {'reports': [report.to_dict() for report in reports]}
    if 3 in config.trace_ks:
        display = trace_display_k3(spec, c)
        general = next(report.residual for report in reports if report.k == 3)
        result['k3_display'] = {'residual': display, 'difference': display - general}
    # bounds grow like lambda_N^(k-1); only the lowest k is held to trace_tol
    lowest = min(reports, key=lambda report: report.k)
    result['passed'] = all(report.within_bound for report in reports) and not lowest.flagged
    write_json(os.path.join(config.out_dir, 'trace_report.json'), result)
    return result['passed']


def _verify_heat_trace(config, spec, b, c):
    q_max = max_abs(config.potential)
    J = config.heat_j
    try:
        table, slope = heat_trace_scan(spec, config.potential, config.t_values(), J,
                                       b.integrals[1:J + 1], c, q_max)
    except HeatTraceTooSmallT as err:
        logging.error(str(err))
        result = {'passed': False, 'error': str(err), 't_min': err.t_min}
    else:
        null_case = not np.any(table['mismatch'].to_numpy())
        passed = null_case or (not math.isnan(slope) and slope >= J + 0.5 - HEAT_SLOPE_TOL)
        result = {'J': J, 'slope': None if math.isnan(slope) else slope,
                  'rows': table.to_dict(orient='records'), 'passed': passed}
    write_json(os.path.join(config.out_dir, 'heat_trace.json'), result)
    return result['passed']


def cmd_verify(config, which='all'):
    """Runs the selected checks; True when every one of them passes"""
    if which not in WHICH:
        raise ConfigError(f'--which must be one of {WHICH}')
    if config.heat_j > config.b_order:
        raise ConfigError(f'heat_j {config.heat_j} exceeds b_order {config.b_order}')
    spec = cmd_spectrum(config)
    b, c = _coefficients(config)
    outcomes = {}
    if which in ('asymptotics', 'all'):
        outcomes['asymptotics'] = _verify_asymptotics(config, spec, b, c)
    if which in ('traces', 'all'):
        outcomes['traces'] = _verify_traces(config, spec, b, c)
    if which in ('heat-trace', 'all'):
        outcomes['heat-trace'] = _verify_heat_trace(config, spec, b, c)
    for name, passed in outcomes.items():
        if passed:
            logging.info(f'{name}: passed')
        else:
            logging.warning(f'{name}: FAILED')
    return all(outcomes.values())


def build_parser():
    parser = argparse.ArgumentParser(prog='oscitrace',
                                     description='heat invariants and trace formulas '
                                                 'for the perturbed harmonic oscillator')
    parser.add_argument('command', choices=['invariants', 'coeffs', 'spectrum', 'verify'],
                        help='what to compute')
    parser.add_argument('--config', type=str, default=None,
                        help='YAML or JSON configuration file')
    parser.add_argument('--out', type=str, default=None,
                        help='output directory (default from config, else ./out)')
    parser.add_argument('--max-order', type=int, default=4,
                        help='highest heat invariant for the invariants command')
    parser.add_argument('--which', type=str, default='all', choices=WHICH,
                        help='checks run by verify')
    parser.add_argument('--format', type=str, default='plain', choices=['plain', 'latex', 'json'],
                        help='output format of the invariants command')
    parser.add_argument('--num-threads', type=int, default=None,
                        help='worker processes, -1 for all cores')
    parser.add_argument('--logfile', type=str, default=None,
                        help='log file (default stdout)')
    parser.add_argument('--debug', action='store_true',
                        help='set logging level to debug')
    return parser


def main(argv=None):
    """
    Parse command line arguments, set up logging and dispatch
    """
    args = build_parser().parse_args(argv)

    logging_level = logging.DEBUG if args.debug else logging.INFO
    if args.logfile:
        logging.basicConfig(filename=args.logfile, level=logging_level, force=True)
    else:
        logging.basicConfig(stream=sys.stdout, level=logging_level, force=True)

    try:
        config = load_config(args.config, out_dir=args.out, num_threads=args.num_threads)
        if args.command == 'invariants':
            cmd_invariants(args.max_order, args.format, config.max_j)
            return EXIT_OK
        if args.command == 'coeffs':
            cmd_coeffs(config)
            return EXIT_OK
        if args.command == 'spectrum':
            spec = cmd_spectrum(config)
            logging.info(f'reliable_count={spec.reliable_count} of {len(spec)}')
            return EXIT_OK
        passed = cmd_verify(config, args.which)
        return EXIT_OK if passed else EXIT_VERIFY_FAILED
    except (ConfigError, OSError) as err:
        logging.error(f'ERROR: {err}')
        return EXIT_CONFIG_ERROR


if __name__ == '__main__':
    sys.exit(main())
