# ============================*
 # ** Copyright UCAR (c) 2020
 # ** University Corporation for Atmospheric Research (UCAR)
 # ** National Center for Atmospheric Research (NCAR)
 # ** Research Applications Lab (RAL)
 # ** P.O.Box 3000, Boulder, Colorado, 80307-3000, USA
 # ============================*



"""
Program Name: diffpoly.py

Exact differential polynomials in an abstract function v, its derivatives
and the displacement z = y - x, with rational coefficients.

How to use:
    a_2 = heat_invariant(2)
    print(render(a_2))                      # 1/2 v^2 - 1/6 v''
    value = eval_diffpoly(a_2, [2., 0., 6.])  # 1.0

The local heat invariants a_j[v] are synthesised by applying the operator
A = -d^2/dy^2 + v(y) to even powers of z and restricting to z = 0.
"""
import math
import threading
from collections import Counter, namedtuple
from fractions import Fraction

import numpy as np

from oscitrace import DEFAULT_MAX_J

__author__ = 'Tatiana Burek'
__version__ = '0.1.0'


class InsufficientJetOrder(Exception):
    """Raised when a jet is shorter than the derivatives a polynomial needs."""


DiffMono = namedtuple('DiffMono', ['coeff', 'z_power', 'factors'])
DiffMono.__doc__ = """One monomial coeff * z^z_power * prod(v^(k) for k in factors)"""


def _canonical_key(key):
    """Sort key: total degree descending, z power ascending, factors lexicographic."""
    z_power, factors = key
    return -len(factors), z_power, factors


class DiffPoly:
    """Immutable differential polynomial.

    Terms are kept in a dictionary keyed by (z_power, factors) where factors is
    a sorted tuple of derivative orders; zero coefficients are never stored.
    """

    __slots__ = ('_terms', '_float_terms')

    def __init__(self, terms=None):
        merged = {}
        if terms:
            for (z_power, factors), coeff in terms.items():
                if z_power < 0:
                    raise ValueError('z power must be nonnegative')
                key = (int(z_power), tuple(sorted(factors)))
                merged[key] = merged.get(key, Fraction(0)) + Fraction(coeff)
        self._terms = {key: val for key, val in merged.items() if val != 0}
        self._float_terms = None

    @classmethod
    def constant(cls, value):
        return cls({(0, ()): value})

    @classmethod
    def v(cls, order=0):
        """The polynomial consisting of the single factor v^(order)."""
        return cls({(0, (order,)): 1})

    @classmethod
    def z(cls, power=1):
        return cls({(power, ()): 1})

    @property
    def terms(self):
        return dict(self._terms)

    @property
    def monos(self):
        """Monomials in canonical order."""
        return [DiffMono(self._terms[key], key[0], key[1])
                for key in sorted(self._terms, key=_canonical_key)]

    def is_zero(self):
        return not self._terms

    def max_z_power(self):
        return max((key[0] for key in self._terms), default=0)

    def max_derivative(self):
        """Highest derivative order of v appearing, -1 for a constant."""
        return max((max(key[1]) for key in self._terms if key[1]), default=-1)

    def restrict_to_diagonal(self):
        """Evaluation at y = x: drop every monomial that still carries z."""
        return DiffPoly({key: val for key, val in self._terms.items() if key[0] == 0})

    def truncate_z(self, max_power):
        return DiffPoly({key: val for key, val in self._terms.items() if key[0] <= max_power})

    def __add__(self, other):
        other = _as_diffpoly(other)
        terms = dict(self._terms)
        for key, val in other._terms.items():
            terms[key] = terms.get(key, Fraction(0)) + val
        return DiffPoly(terms)

    __radd__ = __add__

    def __neg__(self):
        return DiffPoly({key: -val for key, val in self._terms.items()})

    def __sub__(self, other):
        return self + (-_as_diffpoly(other))

    def __rsub__(self, other):
        return _as_diffpoly(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return DiffPoly({key: val * other for key, val in self._terms.items()})
        return mono_mul(self, other)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = DiffPoly.constant(other)
        if not isinstance(other, DiffPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __str__(self):
        return render(self)

    def __repr__(self):
        return f'DiffPoly({render(self)!r})'

    def float_terms(self):
        """Coefficients converted to float once and reused by eval_diffpoly."""
        if self._float_terms is None:
            self._float_terms = [(float(mono.coeff), mono.z_power, mono.factors)
                                 for mono in self.monos]
        return self._float_terms


def _as_diffpoly(value):
    if isinstance(value, DiffPoly):
        return value
    if isinstance(value, (int, Fraction)):
        return DiffPoly.constant(value)
    raise TypeError(f'cannot convert {type(value).__name__} to DiffPoly')


def mono_mul(p, q):
    """Distributive product of two differential polynomials.

    Args:
        p: DiffPoly
        q: DiffPoly

    Returns:
        canonical DiffPoly with added z powers and merged factor multisets
    """
    p = _as_diffpoly(p)
    q = _as_diffpoly(q)
    terms = {}
    for (z_p, f_p), c_p in p.terms.items():
        for (z_q, f_q), c_q in q.terms.items():
            key = (z_p + z_q, tuple(sorted(f_p + f_q)))
            terms[key] = terms.get(key, Fraction(0)) + c_p * c_q
    return DiffPoly(terms)


def d_dy(p):
    """Derivative in y. Since z = y - x, dz/dy = 1 and d v^(k)/dy = v^(k+1)."""
    terms = {}
    for (z_power, factors), coeff in p.terms.items():
        if z_power > 0:
            key = (z_power - 1, factors)
            terms[key] = terms.get(key, Fraction(0)) + coeff * z_power
        for order, multiplicity in Counter(factors).items():
            rest = list(factors)
            rest.remove(order)
            key = (z_power, tuple(sorted(rest + [order + 1])))
            terms[key] = terms.get(key, Fraction(0)) + coeff * multiplicity
    return DiffPoly(terms)


_V = DiffPoly.v(0)


def apply_A(p):
    """One application of A = -d^2/dy^2 + v(y)."""
    return mono_mul(_V, p) - d_dy(d_dy(p))


def _gamma_half_over_sqrt_pi(n):
    """Gamma(n + 1/2) / sqrt(pi) = (2n)! / (4^n n!) as an exact rational."""
    return Fraction(math.factorial(2 * n), 4 ** n * math.factorial(n))


def gamma_half_ratio(j, k):
    """Exact value of Gamma(j + 1/2) / Gamma(k + 3/2)."""
    if j < 0 or k < 0:
        raise ValueError('gamma_half_ratio needs nonnegative arguments')
    return _gamma_half_over_sqrt_pi(j) / _gamma_half_over_sqrt_pi(k + 1)


def heat_coefficient(j, k):
    """Rational weight of A^(k+j)(z^(2k))|_(y=x) inside a_j, 0 <= k <= j-1.

    The factorial (j-k-1)! in the denominator is the one that reproduces
    a_2, a_3, a_4 and a_j[c] = (-c)^j / j! for constant c.
    """
    sign = -1 if j % 2 else 1
    denominator = (4 ** k * math.factorial(k) * math.factorial(k + j)
                   * math.factorial(j - k - 1))
    return sign * gamma_half_ratio(j, k) / denominator


_CACHE = {}
_CACHE_LOCK = threading.Lock()


def heat_invariant(j, max_j=DEFAULT_MAX_J):
    """Local heat invariant a_j[v].

    Args:
        j: order of the invariant, 0 <= j <= max_j
        max_j: configured cap, the cost grows combinatorially with j

    Returns:
        DiffPoly without any z dependence
    """
    if j < 0:
        raise ValueError('heat invariant order must be nonnegative')
    if j > max_j:
        raise ValueError(f'heat invariant order {j} exceeds the configured maximum {max_j}')
    with _CACHE_LOCK:
        cached = _CACHE.get(j)
    if cached is not None:
        return cached

    if j == 0:
        result = DiffPoly.constant(1)
    else:
        result = DiffPoly()
        for k in range(j):
            poly = DiffPoly.z(2 * k)
            steps = k + j
            for step in range(steps):
                poly = apply_A(poly)
                # every later application lowers the z power by at most 2
                poly = poly.truncate_z(2 * (steps - step - 1))
            result = result + poly.restrict_to_diagonal() * heat_coefficient(j, k)

    with _CACHE_LOCK:
        _CACHE.setdefault(j, result)
    return result


def heat_invariant_table(max_order, max_j=DEFAULT_MAX_J):
    """a_0 .. a_max_order"""
    return [heat_invariant(j, max_j) for j in range(max_order + 1)]


def weight(p):
    """Set of monomial weights with v^(k) of weight k+2 and z of weight -1."""
    return {sum(order + 2 for order in mono.factors) - mono.z_power for mono in p.monos}


def eval_diffpoly(p, jet):
    """Substitute jet[k] for v^(k).

    Args:
        p: DiffPoly with no z dependence
        jet: sequence or array whose entry k is v^(k)(x); a 2D array of shape
            (order + 1, npoints) evaluates at many points at once

    Returns:
        float, or numpy array for a 2D jet
    Raises:
        InsufficientJetOrder when jet has fewer entries than p requires
    """
    values = getattr(jet, 'values', jet)
    values = np.asarray(values, dtype=float)
    if p.max_z_power() > 0:
        raise ValueError('cannot evaluate a polynomial that depends on z')
    if p.max_derivative() >= len(values):
        raise InsufficientJetOrder('insufficient jet order')
    total = np.zeros(values.shape[1:]) if values.ndim > 1 else 0.0
    for coeff, _, factors in p.float_terms():
        term = coeff
        for order in factors:
            term = term * values[order]
        total = total + term
    return total


def _v_symbol(order, latex):
    if order <= 3:
        return 'v' + "'" * order
    return f'v^{{({order})}}' if latex else f'v^({order})'


def _mono_body(mono, latex):
    parts = []
    if mono.z_power:
        if mono.z_power == 1:
            parts.append('z')
        else:
            parts.append(f'z^{{{mono.z_power}}}' if latex else f'z^{mono.z_power}')
    for order, power in sorted(Counter(mono.factors).items()):
        symbol = _v_symbol(order, latex)
        if power > 1:
            if latex and order > 3:
                symbol = f'(v^{{({order})}})'
            symbol += f'^{{{power}}}' if latex else f'^{power}'
        parts.append(symbol)
    return ' '.join(parts)


def _coeff_text(coeff, latex):
    if coeff.denominator == 1:
        return str(coeff.numerator)
    if latex:
        return f'\\frac{{{coeff.numerator}}}{{{coeff.denominator}}}'
    return f'{coeff.numerator}/{coeff.denominator}'


def render(p, fmt='plain'):
    """Deterministic text of p in canonical order, fmt is 'plain' or 'latex'."""
    if fmt not in ('plain', 'latex'):
        raise ValueError(f'unknown render format {fmt}')
    latex = fmt == 'latex'
    if p.is_zero():
        return '0'
    pieces = []
    for index, mono in enumerate(p.monos):
        magnitude = abs(mono.coeff)
        body = _mono_body(mono, latex)
        if not body:
            text = _coeff_text(magnitude, latex)
        elif magnitude == 1:
            text = body
        else:
            text = f'{_coeff_text(magnitude, latex)} {body}'
        if index == 0:
            pieces.append(('-' if mono.coeff < 0 else '') + text)
        else:
            pieces.append(('- ' if mono.coeff < 0 else '+ ') + text)
    return ' '.join(pieces)
