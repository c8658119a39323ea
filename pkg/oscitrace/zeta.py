# ============================*
 # ** Copyright UCAR (c) 2020
 # ** University Corporation for Atmospheric Research (UCAR)
 # ** National Center for Atmospheric Research (NCAR)
 # ** Research Applications Lab (RAL)
 # ** P.O.Box 3000, Boulder, Colorado, 80307-3000, USA
 # ============================*



"""
Program Name: zeta.py

Real-argument Riemann zeta and gamma functions, the unperturbed spectral
zeta Z0(s) = (1 - 2^(-s)) zeta(s) = sum_n (2n - 1)^(-s), and its partial
sums and tails.
"""
import logging
import math
from collections import namedtuple

from scipy.special import bernoulli

from oscitrace.util.utils import compensated_sum

__author__ = 'Tatiana Burek'
__version__ = '0.1.0'

ETA_TERMS = 50
EM_TERMS = 8
EM_START = 64
POLE_WARNING_DISTANCE = 1e-8

# Lanczos coefficients for g = 7
LANCZOS_G = 7
LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

ZetaValue = namedtuple('ZetaValue', ['s', 'value', 'abs_err'])


class ZetaPoleError(Exception):
    """Raised for the pole of zeta at s = 1."""


class GammaPoleError(Exception):
    """Raised for the poles of gamma at the non-positive integers."""


def _is_nonpositive_integer(s):
    return s <= 0 and s == math.floor(s)


def gamma_real(s):
    """Gamma function of a real argument.

    Args:
        s: real, not a non-positive integer

    Returns:
        float with relative error around 1e-15
    """
    s = float(s)
    if _is_nonpositive_integer(s):
        raise GammaPoleError(f'gamma has a pole at {s}')
    if s < 0.5:
        return math.pi / (math.sin(math.pi * s) * gamma_real(1.0 - s))
    z = s - 1.0
    series = LANCZOS_COEFFS[0]
    for i, coeff in enumerate(LANCZOS_COEFFS[1:], start=1):
        series += coeff / (z + i)
    t = z + LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * math.exp(-t) * series


def _eta(s, terms=ETA_TERMS):
    """Dirichlet eta sum_k (-1)^k (k+1)^(-s) by Chebyshev-weighted acceleration"""
    d = (3.0 + math.sqrt(8.0)) ** terms
    d = 0.5 * (d + 1.0 / d)
    b = -1.0
    c = -d
    total = 0.0
    for k in range(terms):
        c = b - c
        total += c * (k + 1.0) ** (-s)
        b = (k + terms) * (k - terms) * b / ((k + 0.5) * (k + 1.0))
    return total / d, 3.0 / (3.0 + math.sqrt(8.0)) ** terms


def _check_pole(s):
    if s == 1.0:
        raise ZetaPoleError('zeta has a pole at s = 1')
    if abs(s - 1.0) < POLE_WARNING_DISTANCE:
        logging.warning(f'zeta evaluated at {s}, within {POLE_WARNING_DISTANCE} of the pole')


def _zeta_direct(s):
    eta, rel_err = _eta(s)
    factor = 1.0 - 2.0 ** (1.0 - s)
    value = eta / factor
    abs_err = (abs(eta) * rel_err + 1e-16 * max(1.0, abs(eta))) / abs(factor)
    return value, abs_err


def zeta_via_reflection(s):
    """zeta(s) = 2^s pi^(s-1) sin(pi s / 2) Gamma(1 - s) zeta(1 - s) for s != 0, 1"""
    s = float(s)
    _check_pole(s)
    if s == 0.0:
        raise ValueError('reflection is singular at s = 0')
    if _is_nonpositive_integer(s) and int(s) % 2 == 0:
        return ZetaValue(s, 0.0, 0.0)
    partner, partner_err = _zeta_direct(1.0 - s) if 1.0 - s > 0 else riemann_zeta(1.0 - s)[1:]
    factor = 2.0 ** s * math.pi ** (s - 1.0) * math.sin(0.5 * math.pi * s) * gamma_real(1.0 - s)
    value = factor * partner
    abs_err = abs(factor) * partner_err + 1e-15 * abs(value)
    return ZetaValue(s, value, abs_err)


def riemann_zeta(s):
    """Riemann zeta of a real argument.

    Args:
        s: real, s != 1

    Returns:
        ZetaValue(s, value, abs_err)
    Raises:
        ZetaPoleError at s = 1
    """
    s = float(s)
    _check_pole(s)
    if s >= 0.0:
        value, abs_err = _zeta_direct(s)
        return ZetaValue(s, value, abs_err)
    return zeta_via_reflection(s)


def Z0(s):
    """(1 - 2^(-s)) zeta(s), the zeta function of the odd integers"""
    s = float(s)
    zeta = riemann_zeta(s)
    factor = 1.0 - 2.0 ** (-s)
    return ZetaValue(s, factor * zeta.value, abs(factor) * zeta.abs_err)


def odd_partial(s, N):
    """sum_{n <= N} (2n - 1)^(-s), correctly rounded"""
    return compensated_sum((2.0 * n - 1.0) ** (-s) for n in range(1, N + 1))


def _falling(a, m):
    out = 1.0
    for i in range(m):
        out *= a - i
    return out


def odd_tail(s, N):
    """sum_{n > N} (2n - 1)^(-s), continued analytically in s.

    Terms up to M = max(N, 64) are summed explicitly and the rest by
    Euler-Maclaurin at M. For s <= 1 the result is the continuation that
    satisfies odd_partial(s, N) + odd_tail(s, N) = Z0(s).
    """
    s = float(s)
    if s == 1.0:
        raise ZetaPoleError('the odd tail has a pole at s = 1')
    M = max(N, EM_START)
    explicit = [(2.0 * n - 1.0) ** (-s) for n in range(N + 1, M + 1)]

    base = 2.0 * M - 1.0
    pieces = [base ** (1.0 - s) / (2.0 * (s - 1.0)), -0.5 * base ** (-s)]
    bernoulli_numbers = bernoulli(2 * EM_TERMS)
    for k in range(1, EM_TERMS + 1):
        m = 2 * k - 1
        derivative = _falling(-s, m) * 2.0 ** m * base ** (-s - m)
        pieces.append(-bernoulli_numbers[2 * k] / math.factorial(2 * k) * derivative)
    return compensated_sum(explicit + pieces)
