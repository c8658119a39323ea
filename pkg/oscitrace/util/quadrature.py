# ============================*
 # ** Copyright UCAR (c) 2020
 # ** University Corporation for Atmospheric Research (UCAR)
 # ** National Center for Atmospheric Research (NCAR)
 # ** Research Applications Lab (RAL)
 # ** P.O.Box 3000, Boulder, Colorado, 80307-3000, USA
 # ============================*



"""
Program Name: quadrature.py

Composite Gauss-Legendre quadrature on equal panels with panel doubling.
"""
import logging
from collections import namedtuple

import numpy as np
from numpy.polynomial.legendre import leggauss

__author__ = 'Tatiana Burek'
__version__ = '0.1.0'

NODES_PER_PANEL = 20
MAX_PANELS = 4096

QuadResult = namedtuple('QuadResult', ['value', 'error', 'panels', 'converged'])

_RULES = {}


def gauss_legendre(order):
    """Nodes and weights of the order-point rule on [-1, 1], cached"""
    if order not in _RULES:
        _RULES[order] = leggauss(order)
    return _RULES[order]


def panel_nodes(a, b, panels, order=NODES_PER_PANEL):
    """Nodes and weights of the composite rule on [a, b].

        Args:
            a: left end
            b: right end
            panels: number of equal panels
            order: Gauss-Legendre points per panel

        Returns:
            nodes, weights as flat arrays in ascending panel order
    """
    roots, coeffs = gauss_legendre(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = mid[:, None] + half[:, None] * roots[None, :]
    weights = half[:, None] * coeffs[None, :]
    return nodes.ravel(), weights.ravel()


def composite_integral(func, a, b, panels, order=NODES_PER_PANEL):
    """One composite estimate of the integral of func over [a, b].

        func maps the node array to values of shape (npoints,) or
        (m, npoints) for m integrands sharing the nodes.

        Returns:
            (integral, integral of the absolute value) with the shape of
            func's leading axis
    """
    nodes, weights = panel_nodes(a, b, panels, order)
    values = np.asarray(func(nodes), dtype=float)
    per_panel = (values * weights).reshape(values.shape[:-1] + (panels, order)).sum(axis=-1)
    abs_panel = (np.abs(values) * weights).reshape(per_panel.shape + (order,)).sum(axis=-1)
    return per_panel.sum(axis=-1), abs_panel.sum(axis=-1)


def adaptive_integrate(func, a, b, tol=1e-10, order=NODES_PER_PANEL,
                       min_panels=4, max_panels=MAX_PANELS):
    """Doubles the panel count until two successive estimates agree.

        Agreement means |I_2P - I_P| <= tol * max(|I|, integral of |f|) for
        every integrand. Reaching max_panels returns the last estimate with
        converged set to False.

        Args:
            func: vectorised integrand, see composite_integral
            a: left end
            b: right end
            tol: relative tolerance
            order: points per panel
            min_panels: starting panel count
            max_panels: cap on the panel count

        Returns:
            QuadResult(value, error, panels, converged); for several
            integrands value, error and converged are arrays
    """
    if b <= a:
        shape = np.shape(func(np.array([0.5 * (a + b)])))[:-1]
        if not shape:
            return QuadResult(0.0, 0.0, 0, True)
        return QuadResult(np.zeros(shape), np.zeros(shape), 0, np.ones(shape, dtype=bool))

    panels = min_panels
    previous, _ = composite_integral(func, a, b, panels, order)
    while True:
        panels *= 2
        current, current_abs = composite_integral(func, a, b, panels, order)
        error = np.abs(current - previous)
        scale = np.maximum(np.abs(current), current_abs)
        converged = error <= tol * scale
        if np.all(converged) or panels >= max_panels:
            break
        previous = current
    if not np.all(converged):
        logging.warning(f'quadrature on [{a}, {b}] did not converge with {panels} panels, '
                        f'max error {np.max(error):.3e}')
    if np.ndim(current) == 0:
        return QuadResult(float(current), float(error), panels, bool(converged))
    return QuadResult(current, error, panels, converged)
