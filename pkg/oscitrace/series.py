# ============================*
 # ** Copyright UCAR (c) 2020
 # ** University Corporation for Atmospheric Research (UCAR)
 # ** National Center for Atmospheric Research (NCAR)
 # ** Research Applications Lab (RAL)
 # ** P.O.Box 3000, Boulder, Colorado, 80307-3000, USA
 # ============================*



"""
Program Name: series.py

Truncated series in mu = lambda^(-1/2) and the two expansions

    lambda0 = lambda + sum_j b_j lambda^(-(j - 1/2))
    lambda  = lambda0 + sum_j c_j lambda0^(-j/2)

With lambda = lambda0 (1 + eps) and mu = lambda0^(-1/2) the first one reads

    eps = -sum_j b_j mu^(2j+1) (1 + eps)^(1/2 - j),    eps = sum_j c_j mu^(j+2)

which is solved for eps by fixed-point substitution. Powers of (1 + eps)
also give the coefficients d_j(s) of lambda^(-s).
"""
import logging

import numpy as np

__author__ = 'Tatiana Burek'
__version__ = '0.1.0'

COMPOSE_TOL = 1e-10


class SeriesNotConverged(Exception):
    """Raised when the reversion fixed point does not stabilise."""


class HalfPowerSeries:
    """Truncated series sum_k coeffs[k] mu^k for k = 0..trunc.

    For the c and b expansions the key k holds c_k (b_k); key 0 is unused.
    """

    def __init__(self, coeffs, trunc=None):
        coeffs = np.asarray(coeffs, dtype=float).ravel()
        if trunc is None:
            trunc = len(coeffs) - 1
        if trunc < 0:
            raise ValueError('truncation order must be nonnegative')
        data = np.zeros(trunc + 1)
        count = min(len(coeffs), trunc + 1)
        data[:count] = coeffs[:count]
        self._coeffs = data

    @classmethod
    def zeros(cls, trunc):
        return cls(np.zeros(trunc + 1))

    @classmethod
    def from_keys(cls, values, trunc=None):
        """Series with values[i] at key i + 1 and key 0 empty"""
        values = list(values)
        if trunc is None:
            trunc = len(values)
        return cls([0.0] + values, trunc)

    @property
    def coeffs(self):
        return self._coeffs.copy()

    @property
    def trunc(self):
        return len(self._coeffs) - 1

    def __getitem__(self, key):
        if key < 0 or key > self.trunc:
            raise IndexError(f'key {key} outside 0..{self.trunc}')
        return float(self._coeffs[key])

    def get(self, key, default=0.0):
        return self[key] if 0 <= key <= self.trunc else default

    def truncate(self, trunc):
        return HalfPowerSeries(self._coeffs, trunc)

    def shift(self, power):
        """mu^power times the series, keeping every coefficient"""
        return HalfPowerSeries(np.concatenate((np.zeros(power), self._coeffs)))

    def valuation(self):
        """Lowest key with a nonzero coefficient, trunc + 1 for the zero series"""
        nonzero = np.flatnonzero(self._coeffs)
        return int(nonzero[0]) if nonzero.size else self.trunc + 1

    def _common(self, other):
        if not isinstance(other, HalfPowerSeries):
            other = HalfPowerSeries([float(other)], self.trunc)
        trunc = min(self.trunc, other.trunc)
        return self._coeffs[:trunc + 1], other._coeffs[:trunc + 1], trunc

    def __add__(self, other):
        left, right, _ = self._common(other)
        return HalfPowerSeries(left + right)

    __radd__ = __add__

    def __neg__(self):
        return HalfPowerSeries(-self._coeffs)

    def __sub__(self, other):
        left, right, _ = self._common(other)
        return HalfPowerSeries(left - right)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, HalfPowerSeries):
            return self.scale(other)
        left, right, trunc = self._common(other)
        return HalfPowerSeries(np.convolve(left, right)[:trunc + 1])

    __rmul__ = __mul__

    def scale(self, factor):
        return HalfPowerSeries(float(factor) * self._coeffs)

    def one_plus_power(self, alpha):
        """(1 + self)^alpha by the generalised binomial series; self needs valuation >= 1"""
        if self._coeffs[0] != 0.0:
            raise ValueError('binomial power needs a series without constant term')
        result = np.zeros(self.trunc + 1)
        result[0] = 1.0
        term = HalfPowerSeries([1.0], self.trunc)
        for n in range(1, self.trunc + 1):
            term = term * self * ((alpha - n + 1) / n)
            if not np.any(term._coeffs):
                break
            result += term._coeffs
        return HalfPowerSeries(result)

    def max_abs(self, lo=1, hi=None):
        hi = self.trunc if hi is None else min(hi, self.trunc)
        if hi < lo:
            return 0.0
        return float(np.max(np.abs(self._coeffs[lo:hi + 1])))

    def __eq__(self, other):
        return isinstance(other, HalfPowerSeries) and np.array_equal(self._coeffs, other._coeffs)

    def __repr__(self):
        return f'HalfPowerSeries({self._coeffs.tolist()!r})'

    def to_dict(self):
        return {'trunc': self.trunc,
                'coeffs': {str(key): float(self._coeffs[key]) for key in range(1, self.trunc + 1)}}


def _b_list(b):
    """b_1..b_J as a plain list from BCoeffs, a HalfPowerSeries or a sequence"""
    if hasattr(b, 'values') and hasattr(b, 'J'):
        return [float(v) for v in b.values[1:]]
    if isinstance(b, HalfPowerSeries):
        return [b[k] for k in range(1, b.trunc + 1)]
    return [float(v) for v in b]


def _b_bracket(b_values, eps, order):
    """sum_j b_j mu^(2j+1) (1 + eps)^(1/2 - j) truncated at mu^order"""
    total = HalfPowerSeries.zeros(order)
    for j, b_j in enumerate(b_values, start=1):
        power = 2 * j + 1
        if power > order:
            break
        if b_j == 0.0:
            continue
        factor = eps.one_plus_power(0.5 - j).truncate(order - power)
        total = total + factor.shift(power).truncate(order).scale(b_j)
    return total


def invert_expansion(b, trunc):
    """c_1..c_trunc from b_1..b_J.

    Args:
        b: BCoeffs, HalfPowerSeries keyed by j, or a sequence b_1..b_J
        trunc: highest key of c, at most 2J (c_(2J+1) would need b_(J+1))

    Returns:
        HalfPowerSeries with c_j at key j
    Raises:
        SeriesNotConverged when the substitution does not stabilise or the
        composition check fails
    """
    b_values = _b_list(b)
    if trunc < 1:
        raise ValueError('trunc must be at least 1')
    if trunc > 2 * len(b_values):
        raise ValueError(f'trunc={trunc} needs b_j up to j={(trunc + 1) // 2}, '
                         f'only {len(b_values)} available')
    order = trunc + 2
    eps = HalfPowerSeries.zeros(order)
    for iteration in range(trunc + 2):
        updated = -_b_bracket(b_values, eps, order)
        if updated == eps:
            break
        eps = updated
    else:
        raise SeriesNotConverged(f'reversion did not stabilise after {trunc + 2} substitutions')
    logging.debug(f'reversion stabilised after {iteration} substitutions')

    c = HalfPowerSeries(eps.coeffs[2:], trunc)
    residual = compose_check(b_values, c, trunc)
    scale = max(1.0, c.max_abs())
    if residual > COMPOSE_TOL * scale:
        raise SeriesNotConverged(f'composition residual {residual:.3e} after reversion')
    return c


def reversion_errors(b, trunc, errors=None):
    """First-order bound on |delta c_j| from the error estimates of b_j.

    Args:
        b: BCoeffs, HalfPowerSeries or sequence as for invert_expansion
        trunc: highest key of c
        errors: delta b_1..delta b_J; taken from BCoeffs.errors when None

    Returns:
        HalfPowerSeries with the bound for c_j at key j
    """
    b_values = _b_list(b)
    if errors is None:
        errors = b.errors[1:] if hasattr(b, 'errors') else np.zeros(len(b_values))
    errors = np.abs(np.asarray(errors, dtype=float))
    c = invert_expansion(b_values, trunc).coeffs
    total = np.zeros(trunc + 1)
    for m, error in enumerate(errors[:len(b_values)]):
        if error == 0.0:
            continue
        step = 1e-6 * max(1.0, abs(b_values[m]))
        shifted = list(b_values)
        shifted[m] += step
        total += np.abs(invert_expansion(shifted, trunc).coeffs - c) * (error / step)
    return HalfPowerSeries(total, trunc)


def c_from_b(b, trunc):
    """(c, composition residual) in one call"""
    c = invert_expansion(b, trunc)
    return c, compose_check(b, c, trunc)


def compose_check(b, c, trunc):
    """Largest |coefficient| of lambda + sum_j b_j lambda^(-(j - 1/2)) - lambda0 at keys 1..trunc.

    lambda is substituted from the c expansion; key k is the coefficient of
    lambda0^(-k/2).
    """
    b_values = _b_list(b)
    order = trunc + 2
    eps = c.truncate(trunc).shift(2).truncate(order)
    residual = eps + _b_bracket(b_values, eps, order)
    return residual.max_abs(3, order)


def wholepower_check(c):
    """(c_2, c_1^2 + 2 c_4, c_6 + c_2^2 + 2 c_1 c_3), all zero for a genuine c"""
    if c.trunc < 6:
        raise ValueError('wholepower_check needs c through key 6')
    return (c[2], c[1] ** 2 + 2.0 * c[4], c[6] + c[2] ** 2 + 2.0 * c[1] * c[3])


class DTable:
    """d_0(s)..d_trunc(s) of lambda^(-s) = sum_j d_j(s) lambda0^(-s - j/2)"""

    def __init__(self, s, values):
        self.s = float(s)
        self.values = np.asarray(values, dtype=float)

    @property
    def trunc(self):
        return len(self.values) - 1

    def __getitem__(self, j):
        return float(self.values[j])

    def to_dict(self):
        return {'s': self.s, 'd': [float(v) for v in self.values]}


def d_table(s, c, trunc):
    """Expands (1 + sum_j c_j mu^(j+2))^(-s).

    Args:
        s: real exponent
        c: HalfPowerSeries of c_j
        trunc: highest j of d_j, needs c through key trunc - 2

    Returns:
        DTable with d_0 = 1 and d_1 = d_2 = 0
    """
    if trunc > c.trunc + 2:
        raise ValueError(f'd_{trunc} needs c_{trunc - 2}, only c_{c.trunc} available')
    eps = c.truncate(max(trunc - 2, 0)).shift(2).truncate(trunc)
    values = eps.one_plus_power(-s).coeffs
    values[0] = 1.0
    values[1:3] = 0.0
    return DTable(s, values)
