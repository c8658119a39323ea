# ============================*
 # ** Copyright UCAR (c) 2020
 # ** University Corporation for Atmospheric Research (UCAR)
 # ** National Center for Atmospheric Research (NCAR)
 # ** Research Applications Lab (RAL)
 # ** P.O.Box 3000, Boulder, Colorado, 80307-3000, USA
 # ============================*



"""
Program Name: spectra.py

Eigenvalues of H = -d^2/dx^2 + x^2 + q(x).

The production route is a Galerkin discretisation in the Hermite functions
(the eigenfunctions of the unperturbed oscillator) followed by a dense
symmetric eigensolve. An independent shooting solver locates each
eigenvalue as a zero of the Wronskian of the solutions decaying to the
left and to the right.
"""
import json
import logging
import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh
from scipy.optimize import brentq

from oscitrace.potential import support, values, max_abs, potential_id
from oscitrace.util.quadrature import panel_nodes, NODES_PER_PANEL
from oscitrace.util.utils import map_tasks, write_json

__author__ = 'Tatiana Burek'
__version__ = '0.1.0'

QL_MAX_ITERATIONS = 50
MIN_PANELS = 64
NODES_PER_WAVELENGTH = 6
SHOOTING_RTOL = 1e-12
SHOOTING_ATOL = 1e-12
EIGENSOLVERS = ('householder_ql', 'lapack')


class InsufficientBasis(Exception):
    """Raised when more eigenvalues are requested than the basis resolves."""


class EigenNotConverged(Exception):
    """Raised when the implicit QL iteration exceeds its iteration cap."""


class BracketFailure(Exception):
    """Raised when the shooting bracket does not isolate the requested eigenvalue."""


def lambda0(n):
    """Unperturbed eigenvalues 2n - 1, n counted from 1"""
    return 2.0 * np.asarray(n, dtype=float) - 1.0


class Spectrum:
    """Computed eigenvalues with their provenance.

    errors[i] is |lambda_(i+1)(N) - lambda_(i+1)(2N)| for the Galerkin method
    and the root tolerance for shooting.
    """

    def __init__(self, eigenvalues, basis_size, reliable_count, method, potential_id,
                 errors=None, eigensolver=None):
        self.eigenvalues = np.asarray(eigenvalues, dtype=float)
        if np.any(np.diff(self.eigenvalues) <= 0):
            raise ValueError('eigenvalues must be strictly increasing')
        self.basis_size = int(basis_size)
        self.reliable_count = int(min(reliable_count, len(self.eigenvalues)))
        self.method = method
        self.potential_id = potential_id
        self.errors = (np.zeros(len(self.eigenvalues)) if errors is None
                       else np.asarray(errors, dtype=float))
        self.eigensolver = eigensolver

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def lambda0(self):
        return lambda0(np.arange(1, len(self.eigenvalues) + 1))

    def reliable(self):
        return self.eigenvalues[:self.reliable_count]

    def truncated(self, count):
        """The same spectrum with at most count eigenvalues treated as reliable"""
        return Spectrum(self.eigenvalues, self.basis_size, min(count, self.reliable_count),
                        self.method, self.potential_id, self.errors, self.eigensolver)

    def to_dict(self):
        return {'potential_id': self.potential_id, 'N': self.basis_size,
                'eigenvalues': [float(v) for v in self.eigenvalues],
                'reliable_count': self.reliable_count, 'method': self.method,
                'errors': [float(v) for v in self.errors], 'eigensolver': self.eigensolver}

    @classmethod
    def from_dict(cls, data):
        return cls(data['eigenvalues'], data['N'], data['reliable_count'],
                   data.get('method', 'galerkin'), data['potential_id'],
                   data.get('errors'), data.get('eigensolver'))

    def save(self, path):
        write_json(path, self.to_dict())

    @classmethod
    def load(cls, path):
        with open(path) as cache_file:
            return cls.from_dict(json.load(cache_file))


class SymMatrix:
    """Dense symmetric matrix kept as its lower triangle"""

    def __init__(self, lower):
        lower = np.tril(np.asarray(lower, dtype=float))
        if lower.ndim != 2 or lower.shape[0] != lower.shape[1]:
            raise ValueError('SymMatrix needs a square array')
        self.lower = lower

    @classmethod
    def from_dense(cls, dense):
        return cls(np.tril(dense))

    @property
    def dimension(self):
        return self.lower.shape[0]

    def __getitem__(self, index):
        m, n = index
        return float(self.lower[max(m, n), min(m, n)])

    def dense(self):
        return self.lower + np.tril(self.lower, -1).T


def hermite_functions(count, x):
    """psi_0..psi_(count-1) at x by the normalised three-term recurrence.

    Args:
        count: number of functions
        x: array of points

    Returns:
        array of shape (count, len(x))
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    psi = np.zeros((count, x.size))
    if count == 0:
        return psi
    psi[0] = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    if count > 1:
        psi[1] = math.sqrt(2.0) * x * psi[0]
    for n in range(1, count - 1):
        psi[n + 1] = (x * math.sqrt(2.0 / (n + 1)) * psi[n]
                      - math.sqrt(n / (n + 1.0)) * psi[n - 1])
    return psi


def hermite_fn(n, x):
    """L2-normalised Hermite function psi_n at x"""
    result = hermite_functions(n + 1, x)[n]
    return float(result[0]) if np.ndim(x) == 0 else result


def galerkin_panels(length, N):
    """Panel count giving at least NODES_PER_WAVELENGTH nodes per wavelength 2 pi / sqrt(2N)"""
    wavelength = 2.0 * math.pi / math.sqrt(2.0 * N)
    needed = math.ceil(NODES_PER_WAVELENGTH * length / (wavelength * NODES_PER_PANEL))
    return max(MIN_PANELS, needed)


def galerkin_matrix(q, N):
    """M[m][n] = (2n - 1) delta_mn + int q psi_(m-1) psi_(n-1) dx, m, n = 1..N"""
    if N < 1:
        raise ValueError('basis size must be at least 1')
    lower = np.diag(lambda0(np.arange(1, N + 1)))
    interval = support(q)
    if not interval.is_empty and not q.is_zero():
        nodes, weights = panel_nodes(interval.lo, interval.hi, galerkin_panels(interval.length, N))
        psi = hermite_functions(N, nodes)
        lower += np.tril((psi * (weights * values(q, nodes))) @ psi.T)
    return SymMatrix(lower)


def householder_tridiagonal(a):
    """Reduces a symmetric matrix to tridiagonal form by Householder reflections.

    Args:
        a: dense symmetric array, overwritten

    Returns:
        (diagonal, off-diagonal) with off[k] coupling k and k + 1
    """
    n = len(a)
    for k in range(n - 2):
        u = a[k + 1:n, k].copy()
        u_mag = math.sqrt(np.dot(u, u))
        if u_mag == 0.0:
            continue
        if u[0] < 0.0:
            u_mag = -u_mag
        u[0] = u[0] + u_mag
        h = np.dot(u, u) / 2.0
        v = np.dot(a[k + 1:n, k + 1:n], u) / h
        g = np.dot(u, v) / (2.0 * h)
        v = v - g * u
        a[k + 1:n, k + 1:n] -= np.outer(v, u) + np.outer(u, v)
        a[k + 1:n, k] = 0.0
        a[k + 1, k] = -u_mag
        a[k, k + 1] = -u_mag
    return np.diagonal(a).copy(), np.diagonal(a, 1).copy()


def tridiagonal_ql(diagonal, off_diagonal):
    """Eigenvalues of a symmetric tridiagonal matrix by implicit-shift QL.

    Raises:
        EigenNotConverged after QL_MAX_ITERATIONS iterations for one eigenvalue
    """
    d = [float(v) for v in diagonal]
    n = len(d)
    e = [float(v) for v in off_diagonal] + [0.0]
    eps = np.finfo(float).eps
    for l in range(n):
        iterations = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            if iterations == QL_MAX_ITERATIONS:
                raise EigenNotConverged(f'QL iteration did not converge for eigenvalue {l}')
            iterations += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            deflated = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.sort(np.array(d))


def eigen_sym(matrix, eigensolver='householder_ql'):
    """All eigenvalues of a SymMatrix in ascending order"""
    if eigensolver not in EIGENSOLVERS:
        raise ValueError(f'unknown eigensolver {eigensolver}')
    dense = matrix.dense()
    if eigensolver == 'lapack':
        return np.sort(eigh(dense, eigvals_only=True))
    if len(dense) == 1:
        return dense[0].copy()
    diagonal, off_diagonal = householder_tridiagonal(dense)
    return tridiagonal_ql(diagonal, off_diagonal)


def compute_spectrum(q, N, count, tol=1e-8, eigensolver='householder_ql'):
    """Lowest count eigenvalues of H from a basis of N Hermite functions.

    Args:
        q: Potential
        N: basis size
        count: number of eigenvalues kept, at most N // 2
        tol: agreement required between the N and 2N bases
        eigensolver: householder_ql or lapack

    Returns:
        Spectrum with reliable_count the length of the agreeing prefix
    Raises:
        InsufficientBasis when count > N // 2
    """
    if count > N // 2:
        raise InsufficientBasis('insufficient basis')
    coarse = eigen_sym(galerkin_matrix(q, N), eigensolver)[:count]
    fine = eigen_sym(galerkin_matrix(q, 2 * N), eigensolver)[:count]
    errors = np.abs(coarse - fine)
    failing = np.flatnonzero(errors >= tol)
    reliable_count = int(failing[0]) if failing.size else count
    if reliable_count < count:
        logging.warning(f'only {reliable_count} of {count} eigenvalues agree to {tol} '
                        f'between N={N} and N={2 * N}')

    bound = max_abs(q)
    shift = np.abs(coarse - lambda0(np.arange(1, count + 1)))
    if np.any(shift > bound + 1e-9):
        logging.warning(f'eigenvalue shift {shift.max():.3e} exceeds max|q| = {bound:.3e}')
    logging.info(f'galerkin spectrum: N={N}, count={count}, reliable={reliable_count}')
    return Spectrum(coarse, N, reliable_count, 'galerkin', potential_id(q), errors, eigensolver)


def _domain_half_width(q, lam):
    interval = support(q)
    radius = 0.0 if interval.is_empty else max(abs(interval.lo), abs(interval.hi))
    return max(radius + 2.0, math.sqrt(max(lam, 0.0)) + 4.0)


def _prufer_phases(q, lam):
    """(theta_minus(0), theta_plus(0), s) of the decaying solutions at x = 0.

    With psi = rho sin(theta) and psi' = s rho cos(theta) the phase obeys
    theta' = s cos^2(theta) + (lam - V) / s sin^2(theta), V = x^2 + q.
    """
    s = math.sqrt(max(lam, 1.0))
    half_width = _domain_half_width(q, lam)

    def rhs(x, theta):
        potential = x * x + float(values(q, x))
        return [s * math.cos(theta[0]) ** 2 + (lam - potential) / s * math.sin(theta[0]) ** 2]

    def decay_rate(x):
        return math.sqrt(max(x * x + float(values(q, x)) - lam, 0.0))

    # psi'/psi = +kappa on the left end and -kappa on the right end
    theta_left = math.atan2(s, decay_rate(-half_width))
    theta_right = math.atan2(s, -decay_rate(half_width))
    left = solve_ivp(rhs, (-half_width, 0.0), [theta_left], method='DOP853',
                     rtol=SHOOTING_RTOL, atol=SHOOTING_ATOL)
    right = solve_ivp(rhs, (half_width, 0.0), [theta_right], method='DOP853',
                      rtol=SHOOTING_RTOL, atol=SHOOTING_ATOL)
    return float(left.y[0, -1]), float(right.y[0, -1]), s


def phase_mismatch(q, lam):
    """theta_minus(0) - theta_plus(0); equals (n - 1) pi exactly at lambda_n"""
    theta_minus, theta_plus, _ = _prufer_phases(q, lam)
    return theta_minus - theta_plus


def wronskian(q, lam):
    """psi_-' psi_+ - psi_- psi_+' at x = 0 for unit-amplitude decaying solutions"""
    theta_minus, theta_plus, s = _prufer_phases(q, lam)
    return s * math.sin(theta_plus - theta_minus)


def counting_function(q, lam):
    """Number of eigenvalues below lam, from the oscillation count of the phases"""
    return max(0, int(math.floor(phase_mismatch(q, lam) / math.pi)) + 1)


def shooting_eigenvalue(q, n, q_max=None, xtol=1e-13):
    """lambda_n as the root of phase_mismatch(lam) - (n - 1) pi.

    Args:
        q: Potential
        n: index, n >= 1
        q_max: max|q| if already known
        xtol: absolute root tolerance

    Returns:
        float
    Raises:
        BracketFailure when the bracket does not contain the root
    """
    if n < 1:
        raise ValueError('eigenvalue index must be at least 1')
    if q_max is None:
        q_max = max_abs(q)
    target = (n - 1) * math.pi
    center = float(lambda0(n))
    lo = center - 1.0 - q_max
    hi = center + 1.0 + q_max

    def func(lam):
        return phase_mismatch(q, lam) - target

    f_lo = func(lo)
    f_hi = func(hi)
    if f_lo * f_hi > 0:
        raise BracketFailure('bracket failure')
    root = brentq(func, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)
    index = int(round(phase_mismatch(q, root) / math.pi)) + 1
    if index != n:
        raise BracketFailure('bracket failure')
    logging.debug(f'shooting: lambda_{n} = {root!r}')
    return root


def shooting_spectrum(q, n_max, num_threads=1):
    """lambda_1..lambda_n_max by shooting, solved in a worker pool"""
    q_max = max_abs(q)
    roots = map_tasks(shooting_eigenvalue, [(q, n, q_max) for n in range(1, n_max + 1)],
                      num_threads)
    return Spectrum(roots, 0, n_max, 'shooting', potential_id(q),
                    np.full(n_max, SHOOTING_ATOL))
