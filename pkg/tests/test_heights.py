import math
import random
from fractions import Fraction

import mpmath as mp
import pytest

from dioph import ec_core, heights
from dioph.ec_core import CurvePoint
from dioph.errors import BudgetExceededError, ValidationError

PREC = 192
O = CurvePoint.identity()


def test_naive_height_product_formula(curve_110160):
    # only the archimedean place contributes for x = 5/1
    h = heights.naive_height(curve_110160, CurvePoint.affine(5, 8), PREC)
    assert abs(h.value - mp.log(5)) < 1e-30
    assert heights.naive_height(curve_110160, O, PREC).value == 0
    # x(2P) = 1409/256 in lowest terms: gcd(1409, 256) = 1, max = 1409
    P2 = ec_core.scalar_mul(curve_110160, 2, CurvePoint.affine(5, 8))
    h2 = heights.naive_height(curve_110160, P2, PREC)
    assert abs(h2.value - mp.log(1409)) < 1e-30


def test_canonical_limit_identity_and_torsion(curve_110160, curve_lemniscatic):
    assert heights.canonical_height_limit(curve_110160, O, 6, PREC).value == 0
    # 2-torsion (1, 0) on y^2 = x^3 - x
    t = heights.canonical_height_limit(curve_lemniscatic, CurvePoint.affine(1, 0), 6, PREC)
    assert t.value == 0


def test_canonical_local_torsion(curve_lemniscatic, curve_j0):
    for cur, pt in ((curve_lemniscatic, CurvePoint.affine(0, 0)),
                    (curve_lemniscatic, CurvePoint.affine(1, 0)),
                    (curve_j0, CurvePoint.affine(0, 1)),
                    (curve_j0, CurvePoint.affine(-1, 0))):
        assert heights.canonical_height_local(cur, pt, PREC).value == 0


def test_nmax_precondition(curve_110160):
    with pytest.raises(ValidationError):
        heights.canonical_height_limit(curve_110160, CurvePoint.affine(5, 8), 3, PREC)


def test_limit_vs_local_cross_check(curve_110160, curve_mordell):
    # the two independent algorithms must agree; no reference value assumed
    for cur in (curve_110160, curve_mordell):
        P = cur.generator_hint
        loc = heights.canonical_height_local(cur, P, PREC)
        lim = heights.canonical_height_limit(cur, P, n_max=11, precision_bits=PREC)
        assert float(loc.value) > 0
        assert abs(loc.value - lim.value) < 1e-6
        assert float(lim.tail_estimate) < 1e-6


def test_quadraticity_local(curve_110160):
    P = CurvePoint.affine(5, 8)
    h1 = heights.canonical_height_local(curve_110160, P, PREC).value
    for n in (2, 3):
        Pn = ec_core.scalar_mul(curve_110160, n, P)
        hn = heights.canonical_height_local(curve_110160, Pn, PREC).value
        assert abs(hn / h1 - n * n) < 1e-8


def test_quadraticity_range(curve_110160, curve_mordell):
    for cur in (curve_110160, curve_mordell):
        P = cur.generator_hint
        h1 = heights.canonical_height_local(cur, P, PREC).value
        for n in range(-10, 11):
            if n == 0:
                continue
            hn = heights.canonical_height_local(cur, ec_core.scalar_mul(cur, n, P), PREC).value
            assert abs(hn - n * n * h1) < 1e-6 * n * n


def test_parallelogram_defect(curve_110160):
    P = CurvePoint.affine(5, 8)
    assert abs(heights.height_pairing_check(curve_110160, P, O, PREC)) < 1e-8
    assert abs(heights.height_pairing_check(curve_110160, P, P, PREC)) < 1e-8
    rnd = random.Random(17)
    for _ in range(50):
        a = rnd.choice([-3, -2, -1, 1, 2, 3])
        b = rnd.choice([-3, -2, -1, 1, 2, 3])
        A = ec_core.scalar_mul(curve_110160, a, P)
        B = ec_core.scalar_mul(curve_110160, b, P)
        assert abs(heights.height_pairing_check(curve_110160, A, B, PREC)) < 1e-6


def test_naive_vs_canonical_bounded(curve_110160):
    # |hhat - log H| stays bounded over multiples; the bound is recorded only
    P = CurvePoint.affine(5, 8)
    h1 = float(heights.canonical_height_local(curve_110160, P, PREC).value)
    diffs = []
    for n in range(1, 51):
        Pn = ec_core.scalar_mul(curve_110160, n, P)
        naive = float(heights.naive_height(curve_110160, Pn, PREC).value)
        diffs.append(abs(n * n * h1 - naive))
    bound = max(diffs)
    assert math.isfinite(bound)


def test_digit_budget_error(curve_110160):
    with pytest.raises(BudgetExceededError):
        heights.canonical_height_limit(curve_110160, CurvePoint.affine(5, 8),
                                       n_max=12, precision_bits=PREC,
                                       digit_budget=10_000)


def test_height_model_invariance(curve_110160):
    # canonical height is invariant under (a, b) -> (a u^4, b u^6), x -> u^2 x
    P = CurvePoint.affine(5, 8)
    u = 2
    cur2 = ec_core.RationalCurve(a=curve_110160.a * u**4, b=curve_110160.b * u**6)
    P2 = CurvePoint.affine(P.x * u * u, P.y * u**3)
    h1 = heights.canonical_height_local(curve_110160, P, PREC).value
    h2 = heights.canonical_height_local(cur2, P2, PREC).value
    assert abs(h1 - h2) < 1e-9


def test_rational_coefficient_curve():
    # non-integral model: scaled internally before local decomposition
    cur = ec_core.RationalCurve(a=Fraction(-12, 16**2), b=Fraction(-1, 16**3))
    # (5/16, 8/64) maps from (5, 8) under u = 1/4 wait: x/u^2 with u = 4
    P = CurvePoint.affine(Fraction(5, 16), Fraction(8, 64))
    assert ec_core.on_curve(cur, P)
    h = heights.canonical_height_local(cur, P, PREC)
    base = ec_core.RationalCurve(a=Fraction(-12), b=Fraction(-1))
    hb = heights.canonical_height_local(base, CurvePoint.affine(5, 8), PREC)
    assert abs(h.value - hb.value) < 1e-9
