"""Tests the differential polynomial engine and the heat invariants."""
import math
import random
import re
from fractions import Fraction

import numpy as np
import pytest

from oscitrace.diffpoly import DiffPoly, d_dy, apply_A, gamma_half_ratio, heat_invariant, \
    heat_invariant_table, eval_diffpoly, render, weight, mono_mul, InsufficientJetOrder


def poly(*pairs):
    """DiffPoly from (coeff, factors) pairs without z"""
    return DiffPoly({(0, factors): Fraction(coeff) for coeff, factors in pairs})


@pytest.fixture
def settings():
    """Printed heat invariants a_0..a_4.

    Returns:
        dictionary with the expected polynomials
    """
    settings_dict = dict()
    settings_dict['golden'] = [
        DiffPoly.constant(1),
        poly((-1, (0,))),
        poly((Fraction(1, 2), (0, 0)), (Fraction(-1, 6), (2,))),
        poly((Fraction(-1, 6), (0, 0, 0)), (Fraction(1, 6), (0, 2)),
             (Fraction(1, 12), (1, 1)), (Fraction(-1, 60), (4,))),
        poly((Fraction(1, 24), (0, 0, 0, 0)), (Fraction(1, 30), (1, 3)),
             (Fraction(1, 60), (0, 4)), (Fraction(1, 40), (2, 2)),
             (Fraction(-1, 840), (6,)), (Fraction(-1, 12), (0, 0, 2)),
             (Fraction(-1, 12), (0, 1, 1))),
    ]
    return settings_dict


def random_diffpoly(rng):
    terms = {}
    for _ in range(rng.randint(1, 4)):
        factors = tuple(rng.randint(0, 3) for _ in range(rng.randint(0, 2)))
        key = (rng.randint(0, 2), factors)
        terms[key] = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
    return DiffPoly(terms)


def test_heat_invariant_golden(settings):
    for j, expected in enumerate(settings['golden']):
        assert heat_invariant(j) == expected


def test_heat_invariant_table(settings):
    assert heat_invariant_table(4) == settings['golden']


def test_heat_invariant_cap():
    with pytest.raises(ValueError):
        heat_invariant(9)
    with pytest.raises(ValueError):
        heat_invariant(-1)


def test_d_dy():
    assert d_dy(DiffPoly.z(2)) == DiffPoly({(1, ()): 2})
    assert d_dy(DiffPoly.v(0)) == DiffPoly.v(1)
    z_v2 = DiffPoly({(1, (2,)): 1})
    assert d_dy(z_v2) == DiffPoly.v(2) + DiffPoly({(1, (3,)): 1})


def test_apply_A():
    assert apply_A(DiffPoly.constant(1)) == DiffPoly.v(0)
    assert apply_A(DiffPoly.z(2)) == DiffPoly({(2, (0,)): 1}) - 2
    assert apply_A(DiffPoly.v(0)) == poly((1, (0, 0)), (-1, (2,)))


def test_gamma_half_ratio():
    assert gamma_half_ratio(1, 0) == 1
    assert gamma_half_ratio(2, 0) == Fraction(3, 2)
    assert gamma_half_ratio(3, 1) == Fraction(5, 2)


def test_ring_laws():
    rng = random.Random(11)
    for _ in range(25):
        p, q, r = (random_diffpoly(rng) for _ in range(3))
        assert (p * q) * r == p * (q * r)
        assert p * q == q * p
        assert p * (q + r) == p * q + p * r
        assert (p + q) - q == p
        assert d_dy(mono_mul(p, q)) == d_dy(p) * q + p * d_dy(q)


def test_no_z_and_weight():
    for j in range(1, 7):
        invariant = heat_invariant(j)
        assert invariant.max_z_power() == 0
        assert weight(invariant) == {2 * j}


def test_constant_potential_identity():
    """a_j[c] = (-c)^j / j! for a constant potential"""
    c = Fraction(3, 2)
    for j in range(6):
        value = sum(mono.coeff * c ** len(mono.factors) for mono in heat_invariant(j).monos
                    if all(order == 0 for order in mono.factors))
        assert value == (-c) ** j / math.factorial(j)


def test_linear_potential_kernel():
    """For v = c + alpha x the diagonal heat kernel is (4 pi t)^(-1/2) exp(-t v + alpha^2 t^3 / 12)"""
    v, alpha = Fraction(-2, 3), Fraction(5, 4)
    for j in range(7):
        value = Fraction(0)
        for mono in heat_invariant(j).monos:
            if all(order <= 1 for order in mono.factors):
                value += mono.coeff * v ** mono.factors.count(0) * alpha ** mono.factors.count(1)
        expected = sum((-v) ** (j - 3 * m) / math.factorial(j - 3 * m)
                       * (alpha * alpha / 12) ** m / math.factorial(m)
                       for m in range(j // 3 + 1))
        assert value == expected


def test_eval_diffpoly():
    assert eval_diffpoly(heat_invariant(1), [3.0]) == pytest.approx(-3.0)
    assert eval_diffpoly(heat_invariant(2), [2.0, 0.0, 6.0]) == pytest.approx(1.0)
    assert eval_diffpoly(heat_invariant(3), [1.0, 1.0, 1.0, 0.0, 0.0]) == pytest.approx(1.0 / 12)
    jets = np.array([[1.0, 2.0], [0.0, 0.0], [0.0, 6.0]])
    assert np.allclose(eval_diffpoly(heat_invariant(2), jets), [0.5, 1.0])


def test_eval_diffpoly_linear():
    jet = [0.3, -1.2, 0.7, 2.0, -0.4, 0.1, 1.5]
    p, q = heat_invariant(2), heat_invariant(4)
    assert eval_diffpoly(p + q, jet) == pytest.approx(eval_diffpoly(p, jet) + eval_diffpoly(q, jet))


def test_eval_diffpoly_short_jet():
    with pytest.raises(InsufficientJetOrder):
        eval_diffpoly(heat_invariant(2), [1.0, 2.0])
    with pytest.raises(ValueError):
        eval_diffpoly(DiffPoly.z(2), [1.0])


def test_render():
    assert render(heat_invariant(0)) == '1'
    assert render(heat_invariant(1)) == '-v'
    assert render(heat_invariant(2)) == "1/2 v^2 - 1/6 v''"
    assert render(heat_invariant(2), 'latex') == "\\frac{1}{2} v^{2} - \\frac{1}{6} v''"
    assert render(DiffPoly()) == '0'
    with pytest.raises(ValueError):
        render(heat_invariant(1), 'html')


_Z_TOKEN = re.compile(r"^z(?:\^(\d+))?$")
_V_TOKEN = re.compile(r"^v('*)(?:\^\((\d+)\))?(?:\^(\d+))?$")
_COEFF_TOKEN = re.compile(r"^\d+(?:/\d+)?$")


def parse_plain(text):
    """Reads the plain rendering back into a DiffPoly"""
    groups = []
    sign, current = 1, []
    for token in text.split(' '):
        if token in ('+', '-'):
            groups.append((sign, current))
            sign, current = (1 if token == '+' else -1), []
        else:
            current.append(token)
    groups.append((sign, current))

    result = DiffPoly()
    for sign, tokens in groups:
        if tokens[0].startswith('-'):
            sign = -sign
            tokens = [tokens[0][1:]] + tokens[1:]
        coeff = Fraction(1)
        if _COEFF_TOKEN.match(tokens[0]):
            coeff = Fraction(tokens[0])
            tokens = tokens[1:]
        z_power, factors = 0, []
        for token in tokens:
            z_match = _Z_TOKEN.match(token)
            if z_match:
                z_power += int(z_match.group(1) or 1)
                continue
            v_match = _V_TOKEN.match(token)
            order = int(v_match.group(2)) if v_match.group(2) else len(v_match.group(1))
            factors.extend([order] * int(v_match.group(3) or 1))
        result = result + DiffPoly({(z_power, tuple(factors)): sign * coeff})
    return result


def test_render_round_trip():
    for j in range(6):
        invariant = heat_invariant(j)
        assert parse_plain(render(invariant)) == invariant
    rng = random.Random(5)
    for _ in range(20):
        p = random_diffpoly(rng)
        assert parse_plain(render(p)) == p


if __name__ == "__main__":
    test_ring_laws()
