"""Naive and canonical heights on E(Q), by two independent algorithms.

Convention: natural log throughout, and hhat is normalized off the
x-coordinate height divided by 2, so that hhat([n]P) = n^2 hhat(P) and
hhat(P) ~ (1/2) log H(x(P)) + O(1).

The two canonical-height routes cross-check each other:

  * canonical_height_limit: exact doubling of the projective x-coordinate,
    hhat = (1/2) lim 4^-k log H(x([2^k]P)).  The gcd appearing at each
    doubling divides disc^2 (the resultant of the duplication quartics),
    so reduction costs two mods by a fixed integer instead of a giant gcd.

  * canonical_height_local: archimedean Neron function (unrolled duplication
    series) plus (1/2) log den(x(MP)) / M^2, where M is a multiple pushing
    the point into the kernel of reduction at every bad prime.  There the
    non-archimedean local heights are pure denominator contributions, so no
    reduction-type analysis is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import mpmath as mp

try:
    import gmpy2

    _mpz = gmpy2.mpz
    _gcd = gmpy2.gcd
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    _mpz = int
    _gcd = math.gcd

from . import ec_core
from .ec_core import CurvePoint, RationalCurve
from .errors import BudgetExceededError, ValidationError

DEFAULT_PRECISION = 256
DEFAULT_DIGIT_BUDGET = 60_000_000


@dataclass(frozen=True)
class HeightValue:
    value: mp.mpf
    precision_bits: int
    method: str  # 'naive' | 'limit' | 'local_decomposition'
    tail_estimate: Optional[mp.mpf] = None

    def __float__(self) -> float:
        return float(self.value)


def naive_height(curve: RationalCurve, pt: CurvePoint,
                 precision_bits: int = DEFAULT_PRECISION) -> HeightValue:
    """log H with H = max(|p|, |q|) for x = p/q in lowest terms; identity -> 0.

    This is the place-by-place product formula over Q collapsed: only the
    archimedean place and the primes dividing q contribute, and together
    they give exactly max(|p|, |q|).
    """
    ec_core._require_on_curve(curve, pt)
    with mp.workprec(precision_bits):
        if pt.is_identity:
            return HeightValue(mp.mpf(0), precision_bits, "naive")
        h = max(abs(pt.x.numerator), pt.x.denominator)
        return HeightValue(+mp.log(h), precision_bits, "naive")


def _log_of_int(n) -> float:
    """float log of a possibly huge positive integer via its top 64 bits."""
    n = int(n)
    bl = n.bit_length()
    if bl <= 64:
        return math.log(n)
    return math.log(n >> (bl - 64)) + (bl - 64) * math.log(2)


def canonical_height_limit(curve: RationalCurve, pt: CurvePoint, n_max: int = 11,
                           precision_bits: int = DEFAULT_PRECISION,
                           digit_budget: int = DEFAULT_DIGIT_BUDGET) -> HeightValue:
    """hhat by 4-adically accelerated doubling of the naive x-height.

    Runs k = 0..n_max doublings on the exact projective pair (p, q) and
    returns (1/2) 4^-n_max log max(|p|,|q|), with the error estimated from
    the last two iterates (the tail is geometric with ratio 1/4).
    """
    ec_core._require_on_curve(curve, pt)
    if n_max < 4:
        raise ValidationError("n_max must be >= 4")
    if pt.is_identity:
        return HeightValue(mp.mpf(0), precision_bits, "limit", tail_estimate=mp.mpf(0))
    cu, pu, _ = ec_core.integral_model(curve, pt)
    a, b = _mpz(int(cu.a)), _mpz(int(cu.b))
    disc = -16 * (4 * int(cu.a) ** 3 + 27 * int(cu.b) ** 2)
    gcd_bound = _mpz(disc * disc)
    p, q = _mpz(pu.x.numerator), _mpz(pu.x.denominator)
    estimates = []
    for k in range(n_max + 1):
        h = _log_of_int(max(abs(p), abs(q)))
        estimates.append(h / 4**k / 2)
        if k == n_max:
            break
        if max(abs(p), abs(q)).bit_length() > digit_budget:
            raise BudgetExceededError(
                f"x-coordinate exceeded {digit_budget} bits at doubling {k}")
        q2 = q * q
        q3 = q2 * q
        fp = (p * p - a * q2) ** 2 - 8 * b * p * q3
        fq = 4 * q * (p * p * p + a * p * q2 + b * q3)
        if fq == 0:
            # doubling hit the identity: pt is torsion
            return HeightValue(mp.mpf(0), precision_bits, "limit", tail_estimate=mp.mpf(0))
        g = _gcd(_gcd(fp, gcd_bound), _gcd(fq, gcd_bound))
        p, q = fp // g, fq // g
    with mp.workprec(precision_bits):
        value = mp.mpf(estimates[-1])
        tail = abs(mp.mpf(estimates[-1]) - mp.mpf(estimates[-2])) / 3
        return HeightValue(+value, precision_bits, "limit", tail_estimate=+tail)


def _lambda_archimedean(curve_int: RationalCurve, x0: mp.mpf, prec: int) -> mp.mpf:
    """Archimedean Neron function with hhat normalization.

    lam(P) = sum_{n<N} 4^-(n+1) log|2 y_n| + 4^-N (1/2) log+ |x_N|, from the
    duplication relation lam(2P) = 4 lam(P) - log|2y(P)|.  Doubling expands
    rounding error by ~4 per step, which the 4^-n weights cancel, so the sum
    is stable as long as N stays well under the working precision.
    """
    N = max(48, prec // 2 + 16)
    with mp.workprec(prec + 64):
        a = mp.mpf(curve_int.a.numerator)
        b = mp.mpf(curve_int.b.numerator)
        x = mp.mpf(x0)
        total = mp.mpf(0)
        w = mp.mpf(1)
        for _ in range(N):
            w /= 4
            f = x**3 + a * x + b
            f = abs(f)  # roundoff can graze zero near 2-torsion x-values
            total += w * mp.log(4 * f) / 2
            x = ((x * x - a) ** 2 - 8 * b * x) / (4 * f)
        total += w * mp.log(max(mp.mpf(1), abs(x))) / 2
        return +total


def _factorize(n: int) -> dict:
    """Prime factorization: trial division then Brent-Pollard rho."""
    n = abs(int(n))
    out: dict = {}
    for p in (2, 3, 5, 7, 11, 13):
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    d = 17
    while d * d <= n and d < 1_000_00:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 2
    if n == 1:
        return out
    stack = [n]
    while stack:
        m = stack.pop()
        if m == 1:
            continue
        if _is_probable_prime(m):
            out[m] = out.get(m, 0) + 1
            continue
        d = _brent_rho(m)
        stack.extend([d, m // d])
    return out


def _is_probable_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _brent_rho(n: int) -> int:
    if n % 2 == 0:
        return 2
    import random

    rng = random.Random(0xD10F ^ n)
    while True:
        y, c, m = rng.randrange(1, n), rng.randrange(1, n), 128
        g, r, q = 1, 1, 1
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g


def _kernel_multiple(curve_int: RationalCurve, pt: CurvePoint,
                     multiple_cap: int = 4000):
    """Smallest M with den(x(mP)) divisible by p for every bad prime p | disc,
    i.e. MP lies in the kernel of reduction at all bad primes.

    Returns (M, x(MP)) or (0, None) when pt turns out to be torsion.
    """
    disc = -16 * (4 * int(curve_int.a) ** 3 + 27 * int(curve_int.b) ** 2)
    pending = set(_factorize(disc).keys())
    orders = {}
    running = pt
    m = 1
    while pending:
        if running.is_identity:
            return 0, None  # torsion point
        den = running.x.denominator
        for p in list(pending):
            if den % p == 0:
                orders[p] = m
                pending.discard(p)
        if not pending:
            break
        m += 1
        if m > multiple_cap:
            raise BudgetExceededError(
                f"kernel-of-reduction order exceeds {multiple_cap} at primes {sorted(pending)}")
        running = ec_core.add(curve_int, running, pt, _checked=True)
    M = math.lcm(*orders.values()) if orders else 1
    Q = ec_core.scalar_mul(curve_int, M, pt)
    if Q.is_identity:
        return 0, None
    return M, Q.x


def canonical_height_local(curve: RationalCurve, pt: CurvePoint,
                           precision_bits: int = DEFAULT_PRECISION) -> HeightValue:
    """hhat by archimedean + non-archimedean local decomposition."""
    ec_core._require_on_curve(curve, pt)
    if pt.is_identity:
        return HeightValue(mp.mpf(0), precision_bits, "local_decomposition")
    cu, pu, _ = ec_core.integral_model(curve, pt)
    M, xq = _kernel_multiple(cu, pu)
    if M == 0:
        return HeightValue(mp.mpf(0), precision_bits, "local_decomposition")
    with mp.workprec(precision_bits + 64):
        x_mpf = mp.mpf(xq.numerator) / mp.mpf(xq.denominator)
        lam = _lambda_archimedean(cu, x_mpf, precision_bits)
        nonarch = mp.log(xq.denominator) / 2
        value = (lam + nonarch) / M**2
        return HeightValue(+value, precision_bits, "local_decomposition")


def height_pairing_check(curve: RationalCurve, p1: CurvePoint, p2: CurvePoint,
                         precision_bits: int = DEFAULT_PRECISION) -> mp.mpf:
    """Parallelogram defect hhat(P+Q) + hhat(P-Q) - 2 hhat(P) - 2 hhat(Q)."""
    ec_core._require_on_curve(curve, p1)
    ec_core._require_on_curve(curve, p2)
    s = ec_core.add(curve, p1, p2)
    d = ec_core.add(curve, p1, ec_core.negate(p2))
    h = lambda q: canonical_height_local(curve, q, precision_bits).value
    with mp.workprec(precision_bits):
        return +(h(s) + h(d) - 2 * h(p1) - 2 * h(p2))
