"""Exact rational arithmetic helpers.

Everything here works on ``fractions.Fraction`` (or plain ints) and either
returns exact answers or rational enclosures with a caller-supplied width.
Enclosures are produced by dyadic bisection from a canonical starting bracket,
so refining the tolerance always yields a nested interval.
"""

from __future__ import annotations

from fractions import Fraction
from math import isqrt

ZERO = Fraction(0)
ONE = Fraction(1)


def as_fraction(x) -> Fraction:
    """Coerce ints, strings like '-3/5' and Fractions to Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


def vp(x: Fraction, p: int):
    """p-adic valuation of a rational; None for x = 0."""
    if x == 0:
        return None
    v = 0
    n = x.numerator
    while n % p == 0:
        n //= p
        v += 1
    d = x.denominator
    while d % p == 0:
        d //= p
        v -= 1
    return v


def sqrt_exact(q: Fraction):
    """Exact square root if q is a perfect square of a rational, else None."""
    if q < 0:
        raise ValueError("negative square")
    rn = isqrt(q.numerator)
    if rn * rn != q.numerator:
        return None
    rd = isqrt(q.denominator)
    if rd * rd != q.denominator:
        return None
    return Fraction(rn, rd)


def nth_root_floor(n: int, k: int) -> int:
    """Floor of the k-th root of a nonnegative integer (big-int safe)."""
    if n < 0:
        raise ValueError("negative radicand")
    if n == 0:
        return 0
    if k == 1:
        return n
    if k == 2:
        return isqrt(n)
    r = 1 << ((n.bit_length() + k - 1) // k)  # r**k >= n
    while True:
        t = ((k - 1) * r + n // r ** (k - 1)) // k
        if t >= r:
            break
        r = t
    while r ** k > n:
        r -= 1
    while (r + 1) ** k <= n:
        r += 1
    return r


def nth_root_exact(q: Fraction, k: int):
    """Exact k-th root of q >= 0 if rational, else None."""
    if q < 0:
        raise ValueError("negative radicand")
    rn = nth_root_floor(q.numerator, k)
    if rn ** k != q.numerator:
        return None
    rd = nth_root_floor(q.denominator, k)
    if rd ** k != q.denominator:
        return None
    return Fraction(rn, rd)


def nth_root_enclosure(q: Fraction, k: int, tol: Fraction):
    """Rational [lo, hi] with lo <= q**(1/k) <= hi and hi - lo <= tol.

    Exact roots give width-0 enclosures.  Bisection is dyadic from the integer
    bracket, so a smaller tol refines (is nested in) a larger one.
    """
    q = as_fraction(q)
    tol = as_fraction(tol)
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if q < 0:
        raise ValueError("negative radicand")
    if q == 0:
        return ZERO, ZERO
    exact = nth_root_exact(q, k)
    if exact is not None:
        return exact, exact
    # integer bracket for (num*den^(k-1))^(1/k) / den
    scaled = q.numerator * q.denominator ** (k - 1)
    den = q.denominator
    f = nth_root_floor(scaled, k)
    lo, hi = Fraction(f, den), Fraction(f + 1, den)
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if mid ** k <= q:
            lo = mid
        else:
            hi = mid
    return lo, hi


def sqrt_enclosure(q: Fraction, tol: Fraction):
    return nth_root_enclosure(q, 2, tol)


def log_float(q) -> float:
    """float(log(q)) for display only; never feeds an exact check."""
    import math

    q = as_fraction(q)
    if q <= 0:
        raise ValueError("log of nonpositive rational")
    return math.log(q.numerator) - math.log(q.denominator)


def prime_factors(n: int):
    """Sorted prime factors of |n| (exact, via sympy)."""
    from sympy import factorint

    n = abs(int(n))
    if n in (0, 1):
        return []
    return sorted(factorint(n).keys())


def is_prime(n: int) -> bool:
    from sympy import isprime

    return bool(isprime(n))
