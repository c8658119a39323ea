# ============================*
 # ** Copyright UCAR (c) 2020
 # ** University Corporation for Atmospheric Research (UCAR)
 # ** National Center for Atmospheric Research (NCAR)
 # ** Research Applications Lab (RAL)
 # ** P.O.Box 3000, Boulder, Colorado, 80307-3000, USA
 # ============================*



"""
Program Name: traces.py

Numerical checks of a computed spectrum against the asymptotic theory:

    - residuals of the eigenvalue expansion lambda_n ~ lambda0_n + sum_j c_j lambda0_n^(-j/2)
      and power-law fits of what remains,
    - the heat trace Tr(exp(-tH) - exp(-tH0)) against its small-t expansion
      in the integrated heat invariants,
    - the regularised trace identities for sum_n lambda_n^k, k = 1, 2, 3.
"""
import logging
import math
from collections import namedtuple

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from oscitrace.series import HalfPowerSeries, d_table
from oscitrace.spectra import lambda0
from oscitrace.util.utils import compensated_sum, loglog_slope, write_atomic
from oscitrace.zeta import Z0, odd_tail, gamma_real

__author__ = 'Tatiana Burek'
__version__ = '0.1.0'

MIN_FIT_POINTS = 20
ALTERNATION_FILTER = np.array([1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0]) / 64.0
ALTERNATION_HALF_WIDTH = 3
HEAT_TAIL_TOL = 1e-10
DEFAULT_T_MIN = 0.02
DEFAULT_T_MAX = 0.2
DEFAULT_TRACE_TOL = 1e-3
TRACE_KS = (1, 2, 3)
REMAINDER_MIN_POINTS = 10
REMAINDER_FRACTION = 0.1

FitResult = namedtuple('FitResult', ['exponent_estimate', 'coefficient_estimate', 'window', 'r_squared'])


class HeatTraceTooSmallT(Exception):
    """Raised when the truncated spectrum cannot resolve the heat trace at t."""

    def __init__(self, message, t_min):
        super().__init__(message)
        self.t_min = t_min


class DegenerateFit(Exception):
    """Raised for fit windows with too few points or no signal."""


class TraceReport:
    """Residual of one regularised trace identity with its error budget.

    within_bound says the residual is consistent with tail_error_bound;
    passed also needs the bound itself to be below the requested tolerance.
    """

    def __init__(self, k, residual, tail_error_bound, N_used, terms, flagged):
        self.k = k
        self.residual = residual
        self.tail_error_bound = tail_error_bound
        self.N_used = N_used
        self.terms = terms
        self.flagged = flagged

    @property
    def within_bound(self):
        return abs(self.residual) <= self.tail_error_bound

    @property
    def passed(self):
        return (not self.flagged) and self.within_bound

    def to_dict(self):
        return {'k': self.k, 'residual': self.residual, 'tail_error_bound': self.tail_error_bound,
                'N_used': self.N_used, 'terms': self.terms, 'flagged': self.flagged,
                'within_bound': self.within_bound, 'passed': self.passed}


def _reliable_arrays(spec):
    n = np.arange(1, spec.reliable_count + 1)
    return n, spec.reliable(), lambda0(n)


def asymptotic_residual(spec, c, J):
    """lambda_n - lambda0_n - sum_{j <= J} c_j lambda0_n^(-j/2) over the reliable spectrum.

    Returns:
        DataFrame with columns n, lambda0, residual
    """
    if J > c.trunc:
        raise ValueError(f'J={J} exceeds the available c_j (trunc={c.trunc})')
    n, lam, lam0 = _reliable_arrays(spec)
    residual = lam - lam0
    for j in range(1, J + 1):
        if c[j] != 0.0:
            residual = residual - c[j] * lam0 ** (-0.5 * j)
    return pd.DataFrame({'n': n, 'lambda0': lam0, 'residual': residual})


def cancel_alternation(values):
    """Binomial smoothing over consecutive n.

    A smooth sequence passes up to its second difference; a component
    (-1)^n a(n) with slowly varying a(n) is reduced to its sixth difference.
    The result is shorter by ALTERNATION_HALF_WIDTH entries at either end.
    """
    return np.convolve(np.asarray(values, dtype=float), ALTERNATION_FILTER, mode='valid')


def fit_next_coefficient(residuals, expected_exponent, window=None):
    """Fits residual ~ C lambda0^(-expected_exponent).

    Eigenvalues of a compactly supported potential carry a remainder that
    alternates with the parity of n and is not a power of lambda0. Residuals
    and model terms are first smoothed with cancel_alternation, so the fit
    sees the power-law part only.

    The first pass is a linear least-squares fit of C with the exponent held
    fixed and two extra terms lambda0^(-expected_exponent - 1/2) and
    lambda0^(-expected_exponent - 1) absorbing the next orders. The second
    pass fits the exponent freely on the log-log data, against the smoothed
    lambda0^(-expected_exponent) mapped back to a lambda0 scale.

    Args:
        residuals: DataFrame from asymptotic_residual, consecutive n
        expected_exponent: positive exponent, 1.5 for the c_3 term
        window: (n_lo, n_hi) inclusive, whole table when None

    Returns:
        FitResult; exponent_estimate is the log-log slope, hence negative
    Raises:
        DegenerateFit for fewer than MIN_FIT_POINTS points, gaps in n or
        all-zero residuals
    """
    half = ALTERNATION_HALF_WIDTH
    data = residuals.sort_values('n')
    if window is not None:
        n_lo, n_hi = window
        data = data[(data['n'] >= n_lo - half) & (data['n'] <= n_hi + half)]
    n = data['n'].to_numpy()
    if np.any(np.diff(n) != 1):
        raise DegenerateFit('the fit needs residuals at consecutive n')
    res = data['residual'].to_numpy(dtype=float)
    lam0 = data['lambda0'].to_numpy(dtype=float)

    centers = n[half:len(n) - half]
    keep = np.ones(len(centers), dtype=bool)
    if window is not None:
        keep = (centers >= n_lo) & (centers <= n_hi)
    if np.count_nonzero(keep) < MIN_FIT_POINTS:
        raise DegenerateFit(f'{np.count_nonzero(keep)} points in the fit window, '
                            f'at least {MIN_FIT_POINTS} needed')
    if not np.any(res[half:len(res) - half][keep]):
        raise DegenerateFit('all residuals are zero')

    smoothed = cancel_alternation(res)[keep]
    design = np.column_stack([cancel_alternation(lam0 ** (-expected_exponent - 0.5 * i))[keep]
                              for i in range(3)])
    solution, _, _, _ = np.linalg.lstsq(design, smoothed, rcond=None)
    coefficient = float(solution[0])

    effective_lam0 = design[:, 0] ** (-1.0 / expected_exponent)
    regression = loglog_slope(effective_lam0, smoothed)
    used = (int(centers[keep][0]), int(centers[keep][-1]))
    logging.info(f'fit over n in {used}: C={coefficient:.6e}, slope={regression.slope:.4f}')
    return FitResult(float(regression.slope), coefficient, used, float(regression.rvalue ** 2))


def unperturbed_tail(t, N):
    """sum_{n > N} exp(-t (2n - 1)) in closed form"""
    return math.exp(-t * (2 * N + 1)) / (-math.expm1(-2.0 * t))


def unperturbed_heat_trace(t, N=None):
    """sum_n exp(-t (2n - 1)) = 1 / (2 sinh t); with N the first N terms are summed explicitly"""
    if N is None:
        return 0.5 / math.sinh(t)
    partial = compensated_sum(math.exp(-t * (2 * n - 1)) for n in range(1, N + 1))
    return partial + unperturbed_tail(t, N)


def _remainder_scale(c, q_max):
    """(R, power): the completion error of eigenvalue n is at most R lambda0^(-power)"""
    if c is None:
        return (q_max or 0.0), 0.0
    leading = sum(abs(c.get(j)) for j in (3, 4, 5))
    return 2.0 * leading, 1.5


def heat_tail_bound(spec, t, c=None, q_max=None):
    """Bound on the error of the completed heat-trace tail beyond the reliable spectrum"""
    scale, power = _remainder_scale(c, q_max)
    if scale == 0.0:
        return 0.0
    N = spec.reliable_count
    shift = q_max or 0.0
    first = float(lambda0(N + 1))
    # sum_{n > N} exp(-t lambda0_n) lambda0_n^(-power) <= first^(-power) * unperturbed_tail
    return t * scale * math.exp(t * shift) * first ** (-power) * unperturbed_tail(t, N)


def minimal_heat_t(spec, c=None, q_max=None, tol=HEAT_TAIL_TOL):
    """Smallest t whose tail bound stays below tol"""

    def excess(log_t):
        return math.log(max(heat_tail_bound(spec, math.exp(log_t), c, q_max), 1e-300)) - math.log(tol)

    lo, hi = math.log(1e-8), math.log(50.0)
    if excess(lo) <= 0:
        return math.exp(lo)
    if excess(hi) > 0:
        return math.inf
    return math.exp(brentq(excess, lo, hi))


def heat_trace_delta(spec, t, c=None, q_max=None):
    """Tr(exp(-tH) - exp(-tH0)) from the reliable eigenvalues plus a completed tail.

    Beyond the reliable spectrum lambda_n ~ lambda0_n + c_1 lambda0_n^(-1/2)
    is used when c is given, lambda_n = lambda0_n otherwise.

    Args:
        spec: Spectrum
        t: positive time
        c: HalfPowerSeries of c_j, optional
        q_max: max|q|, enables the reliability check without c

    Raises:
        HeatTraceTooSmallT when the tail bound exceeds HEAT_TAIL_TOL; the
        exception carries the minimal admissible t
    """
    if t <= 0:
        raise ValueError('heat trace needs t > 0')
    bound = heat_tail_bound(spec, t, c, q_max)
    if bound > HEAT_TAIL_TOL:
        t_min = minimal_heat_t(spec, c, q_max)
        raise HeatTraceTooSmallT(f't={t} too small for {spec.reliable_count} eigenvalues, '
                                 f'tail bound {bound:.3e}; minimal t is {t_min:.6g}', t_min)
    _, lam, lam0 = _reliable_arrays(spec)
    terms = list(np.exp(-t * lam0) * np.expm1(-t * (lam - lam0)))

    c1 = 0.0 if c is None else c.get(1)
    if c1 != 0.0:
        n = spec.reliable_count + 1
        while True:
            base = 2.0 * n - 1.0
            weight = math.exp(-t * base)
            if weight < 1e-20:
                break
            terms.append(weight * math.expm1(-t * c1 / math.sqrt(base)))
            n += 1
    return compensated_sum(terms)


def heat_expansion_rhs(q, t, J, integrals=None):
    """(4 pi t)^(-1/2) sum_{j <= J} t^j I_j.

    Args:
        q: Potential, used when integrals is None
        t: positive time
        J: number of terms
        integrals: optional I_1..I_J (array indexed j - 1, or BCoeffs)
    """
    if integrals is None:
        from oscitrace.coeffs import invariant_integrals
        integrals = invariant_integrals(q, J).value
    elif hasattr(integrals, 'integrals'):
        integrals = integrals.integrals[1:]
    integrals = np.asarray(integrals, dtype=float)
    if len(integrals) < J:
        raise ValueError(f'{len(integrals)} integrals available, J={J} requested')
    total = compensated_sum(t ** j * integrals[j - 1] for j in range(1, J + 1))
    return total / math.sqrt(4.0 * math.pi * t)


def heat_expansion_from_b(b, t, J):
    """The same expansion rebuilt from b_j: sum_j (b_j / 2) Gamma(3/2 - j) t^(j - 1/2)"""
    return compensated_sum(0.5 * b.b(j) * gamma_real(1.5 - j) * t ** (j - 0.5)
                           for j in range(1, J + 1))


def dyadic_t_grid(t_min=DEFAULT_T_MIN, t_max=DEFAULT_T_MAX):
    """t_min * 2^i for every i with the value not above t_max"""
    grid = []
    t = t_min
    while t <= t_max * (1 + 1e-12):
        grid.append(t)
        t *= 2.0
    return grid


def heat_trace_scan(spec, q, t_grid, J, integrals=None, c=None, q_max=None):
    """Heat trace against its expansion over a t grid.

    Returns:
        (DataFrame with columns t, lhs, rhs, mismatch, log-log slope of |mismatch|)
    """
    if integrals is None:
        from oscitrace.coeffs import invariant_integrals
        integrals = invariant_integrals(q, J).value
    rows = []
    for t in t_grid:
        lhs = heat_trace_delta(spec, t, c, q_max)
        rhs = heat_expansion_rhs(q, t, J, integrals)
        rows.append({'t': t, 'lhs': lhs, 'rhs': rhs, 'mismatch': lhs - rhs})
    table = pd.DataFrame(rows, columns=['t', 'lhs', 'rhs', 'mismatch'])
    if np.count_nonzero(table['mismatch'].to_numpy()) < 2:
        return table, math.nan
    slope = loglog_slope(table['t'], table['mismatch']).slope
    logging.info(f'heat trace mismatch slope {slope:.3f} for J={J}')
    return table, float(slope)


def _power_difference(lam, lam0, k):
    """lambda^k - lambda0^k as (lambda - lambda0) * sum_i lambda^i lambda0^(k-1-i)"""
    delta = lam - lam0
    factor = np.zeros_like(lam)
    for i in range(k):
        factor += lam ** i * lam0 ** (k - 1 - i)
    return delta * factor


def expansion_remainder(spec, c):
    """lambda_n - lambda0_n - sum_{j <= trunc} c_j lambda0_n^(-j/2) over the reliable spectrum"""
    _, lam, lam0 = _reliable_arrays(spec)
    remainder = lam - lam0
    for j in range(1, c.trunc + 1):
        if c[j] != 0.0:
            remainder = remainder - c[j] * lam0 ** (-0.5 * j)
    return remainder


def remainder_estimate(k, spec, c):
    """Size of the part of sum_{n > N} lambda_n^k that no power of lambda0 describes.

    The largest |expansion_remainder| over the top tenth of the reliable
    spectrum, scaled by k lambda_N^(k-1) and by the number of eigenvalues
    in that window.
    """
    N = spec.reliable_count
    if N == 0:
        return 0.0
    width = min(N, max(REMAINDER_MIN_POINTS, int(REMAINDER_FRACTION * N)))
    top = np.abs(expansion_remainder(spec, c)[-width:])
    return float(k * spec.reliable()[-1] ** (k - 1) * np.max(top) * width)


def coefficient_error(k, spec, c, c_errors):
    """First-order change of the trace residual under |delta c_j| <= c_errors[j].

    The residual depends on d_i(-k) through Z0(-k + i/2) - sum_{n <= N} lambda0_n^(k - i/2)
    for i <= 2k+1 and through odd_tail for i = 2k+3; d_i depends on c through d_table.
    """
    if c_errors is None:
        return 0.0
    N = spec.reliable_count
    lam0 = lambda0(np.arange(1, N + 1))
    d = d_table(-k, c, c.trunc + 2)
    weights = np.zeros(d.trunc + 1)
    for i in range(1, 2 * k + 2):
        weights[i] = abs(Z0(-k + 0.5 * i).value - compensated_sum(lam0 ** (k - 0.5 * i)))
    weights[2 * k + 3] = odd_tail(1.5, N)

    total = 0.0
    coeffs = c.coeffs
    for j in range(1, c.trunc + 1):
        error = abs(c_errors.get(j))
        if error == 0.0:
            continue
        step = 1e-6 * max(1.0, abs(coeffs[j]))
        shifted = coeffs.copy()
        shifted[j] += step
        moved = d_table(-k, HalfPowerSeries(shifted), c.trunc + 2).values
        total += error * float(np.sum(np.abs(moved - d.values) / step * weights))
    return total


def trace_identity(k, spec, c, tol=DEFAULT_TRACE_TOL, c_errors=None):
    """Residual of the regularised trace identity for sum_n lambda_n^k.

        sum_n {lambda_n^k - sum_{j=0}^{2k+1} d_j(-k) lambda0_n^(k - j/2)}
            + sum_{j=1}^{2k+1} d_j(-k) Z0(-k + j/2) = 0

    The sum runs over the reliable eigenvalues; the rest is completed with
    the j = 2k+3 term of the expansion (the j = 2k+2 coefficient vanishes)
    summed by odd_tail.

    tail_error_bound adds up the omitted expansion terms, the eigenvalue
    errors, remainder_estimate and, with c_errors, coefficient_error.

    Args:
        k: 1, 2 or 3
        spec: Spectrum with positive eigenvalues
        c: HalfPowerSeries through key 2k+1 at least
        tol: bound above which the report is flagged
        c_errors: optional HalfPowerSeries of |delta c_j|, see reversion_errors

    Returns:
        TraceReport
    """
    if k not in TRACE_KS:
        raise ValueError(f'trace identities are implemented for k in {TRACE_KS}')
    if c.trunc < 2 * k + 1:
        raise ValueError(f'k={k} needs c through key {2 * k + 1}')
    n, lam, lam0 = _reliable_arrays(spec)
    if np.any(lam <= 0):
        raise ValueError('trace identities need positive eigenvalues')
    N = spec.reliable_count
    d = d_table(-k, c, c.trunc + 2)

    columns = [_power_difference(lam, lam0, k)]
    for j in range(1, 2 * k + 2):
        if d[j] != 0.0:
            columns.append(-d[j] * lam0 ** (k - 0.5 * j))
    partial = compensated_sum(np.sum(np.array(columns), axis=0)) if N else 0.0

    corrections = {}
    for j in range(1, 2 * k + 2):
        corrections[j] = d[j] * Z0(-k + 0.5 * j).value if d[j] != 0.0 else 0.0
    correction_sum = compensated_sum(corrections.values())

    tail_j = 2 * k + 3
    tail = d[tail_j] * odd_tail(tail_j / 2.0 - k, N) if d[tail_j] else 0.0

    omitted = []
    for j in range(2 * k + 4, d.trunc + 1):
        if d[j]:
            omitted.append(abs(d[j]) * odd_tail(j / 2.0 - k, N))
    eigen_error = compensated_sum(k * np.abs(lam) ** (k - 1) * spec.errors[:N]) if N else 0.0
    remainder = remainder_estimate(k, spec, c)
    c_error = coefficient_error(k, spec, c, c_errors)
    if 2 * k + 4 > d.trunc and np.any(c.coeffs[1:]):
        bound = math.inf
    else:
        bound = 2.0 * compensated_sum(omitted) + eigen_error + remainder + c_error

    residual = partial + correction_sum + tail
    flagged = not (bound <= tol)
    report = TraceReport(k, residual, bound, N,
                         {'partial_sum': partial,
                          'corrections': {str(j): v for j, v in corrections.items()},
                          'tail': tail, 'eigenvalue_error': eigen_error,
                          'remainder_estimate': remainder, 'coefficient_error': c_error},
                         flagged)
    if flagged:
        logging.warning(f'trace identity k={k} flagged: bound {bound:.3e} above {tol:.1e}, '
                        f'residual {residual:.3e}')
    else:
        logging.info(f'trace identity k={k}: residual {residual:.3e}, bound {bound:.3e}')
    return report


def trace_display_k3(spec, c):
    """Residual of the k = 3 identity written out term by term.

        sum_n (lambda^3 - lambda0^3 - 3 c1 lambda0^(3/2) - 3 c3 lambda0^(1/2)
               - 3 (c4 + c1^2) - 3 c5 lambda0^(-1/2))
            + 3 c1 Z0(-3/2) + 3 c3 Z0(-1/2) + 3 c5 Z0(1/2)

    completed with the same tail as trace_identity so the two agree to roundoff.
    """
    _, lam, lam0 = _reliable_arrays(spec)
    c1, c3, c4, c5 = c[1], c[3], c[4], c[5]
    rows = (_power_difference(lam, lam0, 3) - 3.0 * c1 * lam0 ** 1.5 - 3.0 * c3 * lam0 ** 0.5
            - 3.0 * (c4 + c1 * c1) - 3.0 * c5 * lam0 ** -0.5)
    partial = compensated_sum(rows)
    corrections = compensated_sum([3.0 * c1 * Z0(-1.5).value, 3.0 * c3 * Z0(-0.5).value,
                                   3.0 * c5 * Z0(0.5).value])
    d = d_table(-3, c, c.trunc + 2)
    tail = d[9] * odd_tail(1.5, spec.reliable_count) if d.trunc >= 9 else 0.0
    return partial + corrections + tail


def emit_csv(residuals, path):
    """Writes the (n, residual) stream as CSV through a temporary file"""
    write_atomic(path, residuals.to_csv(index=False))
