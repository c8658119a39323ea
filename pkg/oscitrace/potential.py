# ============================*
 # ** Copyright UCAR (c) 2020
 # ** University Corporation for Atmospheric Research (UCAR)
 # ** National Center for Atmospheric Research (NCAR)
 # ** Research Applications Lab (RAL)
 # ** P.O.Box 3000, Boulder, Colorado, 80307-3000, USA
 # ============================*



"""
Program Name: potential.py

Compactly supported smooth perturbations q(x) built from terms

    P(x) * B((x - center) / radius),   B(u) = exp(-1 / (1 - u^2)) for |u| < 1

and their derivative jets, computed with truncated Taylor arithmetic.
JSON schema: {"terms": [{"poly": [a0, a1, ...], "center": c, "radius": r}]}
"""
import math
from collections import namedtuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import minimize_scalar

from oscitrace import MAX_JET_ORDER, UNDERFLOW_EXPONENT
from oscitrace.util.utils import content_hash

__author__ = 'Tatiana Burek'
__version__ = '0.1.0'


class JetOrderError(Exception):
    """Raised when a jet order is negative or above the configured maximum."""


class Interval(namedtuple('Interval', ['lo', 'hi'])):
    """Closed interval [lo, hi]; lo > hi marks the empty interval"""

    @property
    def is_empty(self):
        return self.lo > self.hi

    @property
    def length(self):
        return 0.0 if self.is_empty else self.hi - self.lo

    def __contains__(self, x):
        return self.lo <= x <= self.hi


EMPTY_INTERVAL = Interval(math.inf, -math.inf)


class Jet(namedtuple('Jet', ['point', 'values'])):
    """values[k] is the k-th derivative at point"""

    @property
    def order(self):
        return len(self.values) - 1


class BumpTerm(namedtuple('BumpTerm', ['poly', 'center', 'radius'])):
    """P(x) * B((x - center) / radius) with P given by ascending coefficients"""

    def __new__(cls, poly, center, radius):
        radius = float(radius)
        if not radius > 0:
            raise ValueError(f'bump radius must be positive, got {radius}')
        poly = tuple(float(a) for a in np.atleast_1d(poly))
        return super().__new__(cls, poly, float(center), radius)

    def to_dict(self):
        return {'poly': list(self.poly), 'center': self.center, 'radius': self.radius}


class Potential:
    """Sum of bump terms. Immutable; an empty term list is the zero potential."""

    def __init__(self, terms=()):
        self._terms = tuple(term if isinstance(term, BumpTerm) else BumpTerm(*term)
                            for term in terms)

    @property
    def terms(self):
        return self._terms

    def is_zero(self):
        return all(not any(term.poly) for term in self._terms)

    def to_dict(self):
        return {'terms': [term.to_dict() for term in self._terms]}

    @classmethod
    def from_dict(cls, data):
        """Builds a potential from the JSON schema, raising ValueError on bad input"""
        if not isinstance(data, dict) or 'terms' not in data:
            raise ValueError('potential must be a mapping with a "terms" list')
        terms = []
        for index, term in enumerate(data['terms']):
            try:
                terms.append(BumpTerm(term['poly'], term['center'], term['radius']))
            except (KeyError, TypeError) as err:
                raise ValueError(f'potential term {index} is malformed: {err}') from err
        return cls(terms)

    def scaled(self, factor):
        """factor * q"""
        return Potential([BumpTerm([factor * a for a in term.poly], term.center, term.radius)
                          for term in self._terms])

    def __eq__(self, other):
        return isinstance(other, Potential) and self._terms == other._terms

    def __hash__(self):
        return hash(self._terms)

    def __repr__(self):
        return f'Potential({self.to_dict()!r})'


ZERO_POTENTIAL = Potential()


def reference_potential():
    """q_ref(x) = 0.25 * exp(-1 / (1 - x^2)) on (-1, 1)"""
    return Potential([BumpTerm([0.25], 0.0, 1.0)])


def potential_id(q):
    """sha256 of the canonical JSON of q"""
    return content_hash(q.to_dict())


def support(q):
    """Smallest closed interval containing every term support, or EMPTY_INTERVAL"""
    if not q.terms:
        return EMPTY_INTERVAL
    return Interval(min(term.center - term.radius for term in q.terms),
                    max(term.center + term.radius for term in q.terms))


def _taylor_mul(a, b):
    """Truncated product of two coefficient arrays, Taylor index on axis 0"""
    order = a.shape[0] - 1
    out = np.zeros_like(a)
    for n in range(order + 1):
        for i in range(n + 1):
            out[n] += a[i] * b[n - i]
    return out


def _taylor_reciprocal(a):
    """1/a for a[0] != 0"""
    out = np.zeros_like(a)
    out[0] = 1.0 / a[0]
    for n in range(1, a.shape[0]):
        tot = np.zeros_like(a[0])
        for i in range(1, n + 1):
            tot += a[i] * out[n - i]
        out[n] = -tot * out[0]
    return out


def _taylor_exp(a):
    """exp(a) from e' = a' e"""
    out = np.zeros_like(a)
    out[0] = np.exp(a[0])
    for n in range(1, a.shape[0]):
        tot = np.zeros_like(a[0])
        for k in range(1, n + 1):
            tot += k * a[k] * out[n - k]
        out[n] = tot / n
    return out


def _term_taylor(term, x, order):
    """Taylor coefficients of one term at the points x, shape (order + 1, npoints)"""
    u0 = (x - term.center) / term.radius
    w0 = 1.0 - u0 * u0
    inside = w0 > 0
    inside[inside] = -1.0 / w0[inside] >= UNDERFLOW_EXPONENT
    coeffs = np.zeros((order + 1, x.size))
    if not np.any(inside):
        return coeffs

    xi = x[inside]
    ui = u0[inside]
    # w(h) = 1 - (u0 + h/r)^2 truncated at the requested order
    w = np.zeros((order + 1, xi.size))
    w[0] = 1.0 - ui * ui
    if order >= 1:
        w[1] = -2.0 * ui / term.radius
    if order >= 2:
        w[2] = -1.0 / term.radius ** 2
    bump = _taylor_exp(-_taylor_reciprocal(w))

    poly = Polynomial(term.poly)
    shifted = np.zeros_like(bump)
    for k in range(order + 1):
        shifted[k] = poly.deriv(k)(xi) / math.factorial(k)
    coeffs[:, inside] = _taylor_mul(shifted, bump)
    return coeffs


def _check_order(order):
    if order < 0 or order > MAX_JET_ORDER:
        raise JetOrderError(f'jet order {order} outside 0..{MAX_JET_ORDER}')


def eval_jets(q, x, order):
    """Derivatives of q at many points.

    Args:
        q: Potential
        x: array of points
        order: highest derivative

    Returns:
        array of shape (order + 1, len(x)) with row k the k-th derivative
    """
    _check_order(order)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    total = np.zeros((order + 1, x.size))
    for term in q.terms:
        total += _term_taylor(term, x, order)
    factorials = np.array([math.factorial(k) for k in range(order + 1)], dtype=float)
    return total * factorials[:, None]


def eval_jet(q, x, order):
    """Jet of q at a single point x"""
    return Jet(float(x), eval_jets(q, [x], order)[:, 0])


def v_jets(q, x, order):
    """Jets of v = x^2 + q at many points"""
    jets = eval_jets(q, x, order)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    jets[0] += x * x
    if order >= 1:
        jets[1] += 2.0 * x
    if order >= 2:
        jets[2] += 2.0
    return jets


def v_jet(q, x, order):
    """Jet of v = x^2 + q at a single point x"""
    return Jet(float(x), v_jets(q, [x], order)[:, 0])


def values(q, x):
    """q(x) for an array of points, without the jet machinery"""
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for term in q.terms:
        u = (x - term.center) / term.radius
        w = 1.0 - u * u
        exponent = np.full_like(x, -np.inf)
        np.divide(-1.0, w, out=exponent, where=w > 0)
        exponent[exponent < UNDERFLOW_EXPONENT] = -np.inf
        total = total + np.polynomial.polynomial.polyval(x, term.poly) * np.exp(exponent)
    return total


def max_abs(q, grid_points=2001):
    """sup |q| from a dense grid over the support, refined by a bounded scalar search"""
    interval = support(q)
    if interval.is_empty or q.is_zero():
        return 0.0
    grid = np.linspace(interval.lo, interval.hi, grid_points)
    magnitude = np.abs(values(q, grid))
    best = int(np.argmax(magnitude))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid_points - 1)]
    result = minimize_scalar(lambda s: -abs(float(values(q, s))), bounds=(lo, hi),
                             method='bounded', options={'xatol': 1e-12})
    return max(float(magnitude[best]), -float(result.fun))
