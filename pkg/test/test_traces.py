"""Tests the asymptotic fits, the heat trace and the regularised trace identities."""
import math

import numpy as np
import pandas as pd
import pytest

from oscitrace.coeffs import b_coeffs
from oscitrace.potential import ZERO_POTENTIAL, reference_potential, max_abs
from oscitrace.series import HalfPowerSeries, invert_expansion, reversion_errors
from oscitrace.spectra import Spectrum, compute_spectrum, lambda0
from oscitrace.traces import asymptotic_residual, fit_next_coefficient, DegenerateFit, \
    cancel_alternation, heat_trace_delta, unperturbed_heat_trace, heat_expansion_rhs, \
    heat_expansion_from_b, heat_tail_bound, HeatTraceTooSmallT, dyadic_t_grid, heat_trace_scan, \
    trace_identity, trace_display_k3, expansion_remainder, remainder_estimate, \
    coefficient_error, emit_csv

BUMP_INTEGRAL = 0.4439938161680794


@pytest.fixture
def settings():
    """Initialise values for testing.

    Returns:
        dictionary with the unperturbed spectrum, a synthetic residual table
        and a spectrum built from a known expansion
    """
    settings_dict = dict()
    settings_dict['null_spectrum'] = compute_spectrum(ZERO_POTENTIAL, 20, 10)

    n = np.arange(1, 301)
    lam0 = lambda0(n)
    settings_dict['synthetic_residuals'] = pd.DataFrame(
        {'n': n, 'lambda0': lam0, 'residual': 0.7 * lam0 ** -1.5})

    c = invert_expansion([0.05, -0.02, 0.01, 0.004], 8)
    lam = lam0 + sum(c[j] * lam0 ** (-0.5 * j) for j in range(1, 9))
    settings_dict['c'] = c
    settings_dict['expanded_spectrum'] = Spectrum(lam, 0, len(lam), 'synthetic', 'synthetic')
    return settings_dict


@pytest.fixture(scope='module')
def reference_run():
    q_ref = reference_potential()
    spectrum = compute_spectrum(q_ref, 1200, 400, eigensolver='lapack')
    b = b_coeffs(q_ref, 4)
    return spectrum, b, invert_expansion(b, 8)


def test_null_residual(settings):
    residuals = asymptotic_residual(settings['null_spectrum'], HalfPowerSeries.zeros(7), 6)
    assert list(residuals.columns) == ['n', 'lambda0', 'residual']
    assert len(residuals) == 10
    assert np.all(residuals['residual'] == 0.0)
    with pytest.raises(ValueError):
        asymptotic_residual(settings['null_spectrum'], HalfPowerSeries.zeros(3), 4)


def test_degenerate_fit(settings):
    residuals = asymptotic_residual(settings['null_spectrum'], HalfPowerSeries.zeros(7), 6)
    with pytest.raises(DegenerateFit):
        fit_next_coefficient(residuals, 1.5)
    synthetic = settings['synthetic_residuals']
    with pytest.raises(DegenerateFit):
        fit_next_coefficient(synthetic, 1.5, (1, 10))
    flat = synthetic.assign(residual=0.0)
    with pytest.raises(DegenerateFit):
        fit_next_coefficient(flat, 1.5, (50, 200))


def test_synthetic_fit(settings):
    fit = fit_next_coefficient(settings['synthetic_residuals'], 1.5, (50, 200))
    assert fit.coefficient_estimate == pytest.approx(0.7, rel=1e-6)
    assert fit.exponent_estimate == pytest.approx(-1.5, abs=1e-9)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.window == (50, 200)


def test_cancel_alternation():
    n = np.arange(1, 41)
    assert np.allclose(cancel_alternation(np.full(40, 2.5)), 2.5, rtol=1e-15)
    assert np.allclose(cancel_alternation((-1.0) ** n), 0.0, atol=1e-15)
    linear = cancel_alternation(3.0 * n + 1.0)
    assert len(linear) == 34
    assert np.allclose(linear, 3.0 * n[3:-3] + 1.0, rtol=1e-14)


def test_alternating_residual_fit(settings):
    """A parity-alternating remainder larger than the power law does not move the fit"""
    synthetic = settings['synthetic_residuals']
    n = synthetic['n'].to_numpy()
    lam0 = synthetic['lambda0'].to_numpy()
    alternating = (-1.0) ** n * 0.05 * np.cos(2.0 * np.sqrt(lam0)) / lam0
    noisy = synthetic.assign(residual=synthetic['residual'] + alternating)
    fit = fit_next_coefficient(noisy, 1.5, (50, 200))
    assert fit.coefficient_estimate == pytest.approx(0.7, rel=1e-4)
    assert fit.exponent_estimate == pytest.approx(-1.5, abs=1e-3)
    with pytest.raises(DegenerateFit):
        fit_next_coefficient(noisy[noisy['n'] != 100], 1.5, (50, 200))


def test_expansion_remainder(settings):
    remainder = expansion_remainder(settings['expanded_spectrum'], settings['c'])
    assert len(remainder) == 300
    assert np.max(np.abs(remainder)) < 1e-10
    null = settings['null_spectrum']
    assert remainder_estimate(2, null, HalfPowerSeries.zeros(8)) == 0.0

    n = np.arange(1, 101)
    bumped = lambda0(n) + 1e-6 * (-1.0) ** n
    spectrum = Spectrum(bumped, 0, 100, 'synthetic', 'bumped')
    # top ten eigenvalues, |remainder| = 1e-6, scaled by 2 lambda_100
    assert remainder_estimate(2, spectrum, HalfPowerSeries.zeros(8)) == \
        pytest.approx(2.0 * bumped[-1] * 1e-6 * 10, rel=1e-6)


def test_coefficient_error(settings):
    spectrum, c = settings['expanded_spectrum'], settings['c']
    assert coefficient_error(1, spectrum, c, None) == 0.0
    assert coefficient_error(1, spectrum, c, HalfPowerSeries.zeros(8)) == 0.0
    small = coefficient_error(1, spectrum, c, HalfPowerSeries.from_keys([0.0, 0.0, 1e-12]))
    large = coefficient_error(1, spectrum, c, HalfPowerSeries.from_keys([0.0, 0.0, 1e-10]))
    assert small > 0.0
    assert large == pytest.approx(100.0 * small, rel=1e-6)
    report = trace_identity(1, spectrum, c, c_errors=HalfPowerSeries.from_keys([0.0, 0.0, 1e-10]))
    assert report.terms['coefficient_error'] == pytest.approx(large, rel=1e-12)
    assert report.tail_error_bound >= large


def test_null_heat_trace(settings):
    for t in (0.05, 0.5, 2.0):
        assert heat_trace_delta(settings['null_spectrum'], t) == 0.0
    with pytest.raises(ValueError):
        heat_trace_delta(settings['null_spectrum'], 0.0)


def test_single_shift_heat_trace():
    eigenvalues = lambda0(np.arange(1, 11))
    eigenvalues[0] = 1.5
    spectrum = Spectrum(eigenvalues, 20, 10, 'galerkin', 'shifted')
    for t in (0.1, 1.0):
        expected = math.exp(-1.5 * t) - math.exp(-t)
        assert heat_trace_delta(spectrum, t) == pytest.approx(expected, rel=1e-12)


def test_unperturbed_heat_trace():
    for t in (0.1, 1.0):
        assert unperturbed_heat_trace(t, 50) == pytest.approx(0.5 / math.sinh(t), rel=1e-12)
        assert unperturbed_heat_trace(t) == pytest.approx(0.5 / math.sinh(t), rel=1e-15)


def test_heat_expansion_rhs():
    q_ref = reference_potential()
    t = 0.1
    expected = -t * 0.25 * BUMP_INTEGRAL / math.sqrt(4.0 * math.pi * t)
    assert heat_expansion_rhs(q_ref, t, 1) == pytest.approx(expected, rel=1e-9)
    explicit = heat_expansion_rhs(None, t, 2, [1.0, 2.0])
    assert explicit == pytest.approx((t + 2.0 * t * t) / math.sqrt(4.0 * math.pi * t))
    with pytest.raises(ValueError):
        heat_expansion_rhs(None, t, 3, [1.0, 2.0])


def test_heat_expansion_from_b():
    q_ref = reference_potential()
    b = b_coeffs(q_ref, 3)
    for t in (0.05, 0.2):
        assert heat_expansion_from_b(b, t, 3) == pytest.approx(heat_expansion_rhs(q_ref, t, 3),
                                                               rel=1e-9)
        assert heat_expansion_rhs(q_ref, t, 3, b) == pytest.approx(heat_expansion_rhs(q_ref, t, 3),
                                                                   rel=1e-12)


def test_heat_trace_too_small_t():
    spectrum = Spectrum(lambda0(np.arange(1, 6)), 10, 5, 'galerkin', 'short')
    c = HalfPowerSeries.from_keys([0.0, 0.0, 1.0, 0.0, 0.0])
    with pytest.raises(HeatTraceTooSmallT) as exc_info:
        heat_trace_delta(spectrum, 1e-3, c)
    t_min = exc_info.value.t_min
    assert t_min > 1e-3
    assert heat_tail_bound(spectrum, t_min, c) == pytest.approx(1e-10, rel=1e-6)
    heat_trace_delta(spectrum, 1.01 * t_min, c)


def test_dyadic_t_grid():
    assert np.allclose(dyadic_t_grid(0.02, 0.2), [0.02, 0.04, 0.08, 0.16])
    assert dyadic_t_grid(0.5, 0.4) == []


def test_heat_trace_scan_null(settings):
    table, slope = heat_trace_scan(settings['null_spectrum'], ZERO_POTENTIAL, [0.5, 1.0], 2,
                                   integrals=[0.0, 0.0])
    assert list(table.columns) == ['t', 'lhs', 'rhs', 'mismatch']
    assert len(table) == 2
    assert np.all(table['mismatch'] == 0.0)
    assert math.isnan(slope)


def test_trace_identity_null(settings):
    c = HalfPowerSeries.zeros(8)
    for k in (1, 2, 3):
        report = trace_identity(k, settings['null_spectrum'], c)
        assert report.residual == 0.0
        assert report.passed
        assert report.N_used == 10
        assert report.to_dict()['k'] == k


def test_trace_identity_preconditions(settings):
    with pytest.raises(ValueError):
        trace_identity(4, settings['null_spectrum'], HalfPowerSeries.zeros(10))
    with pytest.raises(ValueError):
        trace_identity(3, settings['null_spectrum'], HalfPowerSeries.zeros(5))


def test_trace_display_k3(settings):
    general = trace_identity(3, settings['expanded_spectrum'], settings['c'])
    display = trace_display_k3(settings['expanded_spectrum'], settings['c'])
    assert display == pytest.approx(general.residual, abs=1e-8)


def test_emit_csv(settings, tmp_path):
    path = str(tmp_path / 'residuals.csv')
    emit_csv(settings['synthetic_residuals'], path)
    loaded = pd.read_csv(path)
    assert list(loaded.columns) == ['n', 'lambda0', 'residual']
    assert np.allclose(loaded['residual'], settings['synthetic_residuals']['residual'], rtol=1e-12)


@pytest.mark.slow
def test_reference_asymptotics(reference_run):
    spectrum, b, c = reference_run
    assert spectrum.reliable_count >= 400
    residuals = asymptotic_residual(spectrum, c, 1)
    fit = fit_next_coefficient(residuals, 1.5, (50, 400))
    assert fit.exponent_estimate == pytest.approx(-1.5, abs=0.3)
    assert fit.coefficient_estimate == pytest.approx(-b.b(2), rel=1e-2)


@pytest.mark.slow
def test_reference_asymptotics_third_order(reference_run):
    spectrum, _, c = reference_run
    residuals = asymptotic_residual(spectrum, c, 3)
    fit = fit_next_coefficient(residuals, 2.0, (50, 400))
    assert fit.exponent_estimate == pytest.approx(-2.0, abs=0.3)


@pytest.mark.slow
def test_reference_trace_k1(reference_run):
    spectrum, b, c = reference_run
    report = trace_identity(1, spectrum, c, c_errors=reversion_errors(b, 8))
    assert report.N_used == 400
    assert report.tail_error_bound <= 1e-3
    assert abs(report.residual) <= report.tail_error_bound
    assert report.passed


@pytest.mark.slow
def test_reference_trace_k1_converges(reference_run):
    spectrum, _, c = reference_run
    residuals = [abs(trace_identity(1, spectrum.truncated(N), c).residual) for N in (100, 200, 400)]
    assert residuals[0] > residuals[1] > residuals[2]


@pytest.mark.slow
def test_reference_trace_k2(reference_run):
    spectrum, b, c = reference_run
    report = trace_identity(2, spectrum, c, c_errors=reversion_errors(b, 8))
    assert math.isfinite(report.tail_error_bound)
    assert report.within_bound
    assert report.terms['remainder_estimate'] > 0.0


@pytest.mark.slow
def test_reference_heat_trace(reference_run):
    spectrum, b, c = reference_run
    q_ref = reference_potential()
    table, slope = heat_trace_scan(spectrum, q_ref, dyadic_t_grid(0.02, 0.2), 4,
                                   b.integrals[1:5], c, max_abs(q_ref))
    assert len(table) == 4
    assert slope >= 4.0


if __name__ == "__main__":
    test_unperturbed_heat_trace()
