# ============================*
 # ** Copyright UCAR (c) 2020
 # ** University Corporation for Atmospheric Research (UCAR)
 # ** National Center for Atmospheric Research (NCAR)
 # ** Research Applications Lab (RAL)
 # ** P.O.Box 3000, Boulder, Colorado, 80307-3000, USA
 # ============================*



"""
Program Name: coeffs.py

Integrals I_j = int (a_j[x^2 + q] - a_j[x^2]) dx over the support of q and
the coefficients

    b_j = I_j / (sqrt(pi) * Gamma(3/2 - j))

of the expansion of the unperturbed eigenvalue in powers of lambda^(-1/2).
"""
import logging
import math
from fractions import Fraction

import numpy as np
import pandas as pd

from oscitrace import DEFAULT_MAX_J, MAX_JET_ORDER
from oscitrace.diffpoly import heat_invariant, eval_diffpoly
from oscitrace.potential import support, v_jets, eval_jets, potential_id, ZERO_POTENTIAL
from oscitrace.util.quadrature import adaptive_integrate, QuadResult, NODES_PER_PANEL, MAX_PANELS

__author__ = 'Tatiana Burek'
__version__ = '0.1.0'

DEFAULT_J = 6
DEFAULT_QUADRATURE_TOL = 1e-10


def jet_order_for(j):
    """Jet order requested for a_j: its highest derivative is 2j - 2, two more are taken"""
    return min(2 * j, MAX_JET_ORDER)


def integrand_delta(j, q, x, max_j=DEFAULT_MAX_J):
    """a_j[x^2 + q] - a_j[x^2] at the point(s) x.

    Args:
        j: invariant order, j >= 1
        q: Potential
        x: scalar or array of points
        max_j: cap passed to heat_invariant

    Returns:
        float for scalar x, array otherwise; exactly 0 outside the support of q
    """
    if j < 1:
        raise ValueError('integrand_delta needs j >= 1')
    invariant = heat_invariant(j, max_j)
    order = jet_order_for(j)
    scalar = np.ndim(x) == 0
    perturbed = v_jets(q, x, order)
    free = v_jets(ZERO_POTENTIAL, x, order)
    delta = eval_diffpoly(invariant, perturbed) - eval_diffpoly(invariant, free)
    return float(delta[0]) if scalar else delta


def _integrands(q, max_order, max_j):
    """Vectorised integrand for j = 1..max_order sharing one jet evaluation per node"""
    invariants = [heat_invariant(j, max_j) for j in range(1, max_order + 1)]
    order = jet_order_for(max_order)

    def func(nodes):
        perturbed = v_jets(q, nodes, order)
        free = v_jets(ZERO_POTENTIAL, nodes, order)
        return np.array([eval_diffpoly(inv, perturbed) - eval_diffpoly(inv, free)
                         for inv in invariants])

    return func


def invariant_integrals(q, max_order, tol=DEFAULT_QUADRATURE_TOL, max_j=DEFAULT_MAX_J):
    """I_1..I_max_order by composite Gauss-Legendre quadrature over support(q).

    Returns:
        QuadResult whose value, error and converged arrays are indexed j - 1
    """
    interval = support(q)
    if interval.is_empty:
        zeros = np.zeros(max_order)
        return QuadResult(zeros, zeros.copy(), 0, np.ones(max_order, dtype=bool))
    result = adaptive_integrate(_integrands(q, max_order, max_j), interval.lo, interval.hi, tol=tol)
    logging.debug(f'invariant integrals up to j={max_order}: {result.panels} panels, '
                  f'errors {result.error}')
    return result


def invariant_integral(j, q, tol=DEFAULT_QUADRATURE_TOL, max_j=DEFAULT_MAX_J):
    """(I_j, estimated error) for a single j"""
    values, errors, _, _ = invariant_integrals(q, j, tol, max_j)
    return float(values[j - 1]), float(errors[j - 1])


def gamma_half_rational(j):
    """Rational r_j with Gamma(3/2 - j) = sqrt(pi) * r_j, j >= 1"""
    if j < 1:
        raise ValueError('gamma_half_rational needs j >= 1')
    ratio = Fraction(1)
    for i in range(1, j):
        ratio /= Fraction(1, 2) - i
    return ratio


def gamma_prefactor(j):
    """1 / (sqrt(pi) * Gamma(3/2 - j)) = 1 / (pi * r_j)"""
    return 1.0 / (math.pi * float(gamma_half_rational(j)))


class BCoeffs:
    """b_1..b_J of a potential together with the quadrature record.

    values[j] is b_j for j = 1..J; values[0] is unused and kept 0.
    """

    def __init__(self, values, integrals, errors, converged, potential_id, quadrature_meta):
        self.values = np.asarray(values, dtype=float)
        self.integrals = np.asarray(integrals, dtype=float)
        self.errors = np.asarray(errors, dtype=float)
        self.converged = np.asarray(converged, dtype=bool)
        self.potential_id = potential_id
        self.quadrature_meta = dict(quadrature_meta)
        if not np.all(np.isfinite(self.values)):
            raise ValueError('b coefficients must be finite')

    @property
    def J(self):
        return len(self.values) - 1

    def b(self, j):
        return float(self.values[j])

    @classmethod
    def from_values(cls, b_values, potential_id=''):
        """BCoeffs from plain numbers b_1..b_J without a quadrature record"""
        b_values = [float(b) for b in b_values]
        count = len(b_values)
        return cls([0.0] + b_values, [0.0] * (count + 1), [0.0] * (count + 1),
                   [True] * (count + 1), potential_id,
                   {'panels': 0, 'nodes_per_panel': 0, 'tol': 0.0})

    @property
    def all_converged(self):
        return bool(np.all(self.converged[1:]))

    def to_rows(self):
        """List of {'j', 'I', 'b', 'err', 'converged'} rows for j = 1..J"""
        return [{'j': j, 'I': float(self.integrals[j]), 'b': float(self.values[j]),
                 'err': float(self.errors[j]), 'converged': bool(self.converged[j])}
                for j in range(1, self.J + 1)]

    def to_dataframe(self):
        return pd.DataFrame(self.to_rows(), columns=['j', 'I', 'b', 'err', 'converged'])


def b_coeffs(q, J=DEFAULT_J, tol=DEFAULT_QUADRATURE_TOL, max_j=DEFAULT_MAX_J):
    """b_1..b_J of q.

    Args:
        q: Potential
        J: truncation order
        tol: relative tolerance of the panel doubling
        max_j: heat invariant cap

    Returns:
        BCoeffs; entries whose quadrature hit the panel cap keep converged False
    """
    integrals, errors, panels, converged = invariant_integrals(q, J, tol, max_j)
    prefactors = np.array([gamma_prefactor(j) for j in range(1, J + 1)])
    values = np.concatenate(([0.0], prefactors * integrals))
    b_errors = np.concatenate(([0.0], np.abs(prefactors) * errors))
    flags = np.concatenate(([True], np.atleast_1d(converged)))
    if not np.all(flags):
        logging.warning(f'b coefficients not converged for j in '
                        f'{[j for j in range(1, J + 1) if not flags[j]]}')
    meta = {'panels': int(panels), 'nodes_per_panel': NODES_PER_PANEL, 'tol': tol,
            'max_panels': MAX_PANELS}
    return BCoeffs(values, np.concatenate(([0.0], integrals)), b_errors, flags,
                   potential_id(q), meta)


def b_coeff(j, q, tol=DEFAULT_QUADRATURE_TOL, max_j=DEFAULT_MAX_J):
    """b_j alone"""
    return b_coeffs(q, j, tol, max_j).b(j)


def closed_form_c(q, tol=DEFAULT_QUADRATURE_TOL):
    """Closed-form integral expressions for c_1, c_3 and c_5.

    Two normalisations are circulated for c_3; both are returned so the
    measured eigenvalues can decide. The '_from_b' entries follow from
    a_2 and a_3 through c_3 = -b_2 and c_5 = -b_3.

    Returns:
        dict with keys c1, c3_literal, c3_from_b, c5_literal, c5_from_b
    """
    interval = support(q)
    names = ['q', 'x2q', 'q2', 'x4q', 'x2q2', 'q3', 'dq2']
    if interval.is_empty:
        moments = dict.fromkeys(names, 0.0)
    else:
        def func(nodes):
            jets = eval_jets(q, nodes, 1)
            val, der = jets[0], jets[1]
            x2 = nodes * nodes
            return np.array([val, x2 * val, val * val, x2 * x2 * val, x2 * val * val,
                             val ** 3, der * der])

        result = adaptive_integrate(func, interval.lo, interval.hi, tol=tol)
        moments = dict(zip(names, (float(v) for v in result.value)))

    pi = math.pi
    cubic = moments['q3'] + 3.0 * moments['x2q2'] + 3.0 * moments['x4q']
    return {
        'c1': moments['q'] / pi,
        'c3_literal': moments['x2q'] / pi + moments['q2'] / (2.0 * pi),
        'c3_from_b': moments['x2q'] / (2.0 * pi) + moments['q2'] / (4.0 * pi),
        'c5_literal': (cubic + 0.5 * moments['dq2'] + 2.0 * moments['q']) / (16.0 * pi),
        'c5_from_b': cubic / (8.0 * pi) - moments['q'] / (4.0 * pi) + moments['dq2'] / (16.0 * pi),
    }
