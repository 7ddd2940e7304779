"""Places of Q and norms at each place.

A place is the archimedean absolute value or a p-adic one.  Norm values are
kept exact wherever the arithmetic allows it:

* at a finite place every norm in this package is 0 or an exact power
  p**e with rational exponent e (integral for vector/matrix norms, possibly
  fractional for eigenvalue moduli);
* at the archimedean place a norm is a rational enclosure [lo, hi]; when the
  value is the square root of a known rational (true for every Euclidean
  vector/wedge norm of rational data) the exact square is carried along, so
  products, quotients and comparisons of such values stay exact.

Downstream inequality checks only accept an interval comparison when it is
certain; there is no silent floating point anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from . import polys
from .qmath import ZERO, ONE, as_fraction, sqrt_enclosure, nth_root_enclosure, vp

_DEFAULT_TOL = Fraction(1, 10**12)


@dataclass(frozen=True, order=True)
class Place:
    """A place of Q: ``Place(None)`` is the archimedean place, ``Place(p)``
    the p-adic one.  The local degree is always 1 since the base field is Q."""

    prime: Optional[int] = None

    def __post_init__(self):
        if self.prime is not None:
            from .qmath import is_prime

            if not is_prime(self.prime):
                raise ValueError(f"{self.prime} is not prime")

    @property
    def is_finite(self) -> bool:
        return self.prime is not None

    @property
    def local_degree(self) -> int:
        return 1

    def ck(self, d: int) -> int:
        """The constant C_k: 1 at ultrametric places, d at the archimedean one."""
        return 1 if self.is_finite else d

    def __str__(self):
        return "inf" if self.prime is None else f"p:{self.prime}"

    @staticmethod
    def parse(s: str) -> "Place":
        s = s.strip()
        if s in ("inf", "oo", "infinity"):
            return Place(None)
        if s.startswith("p:"):
            return Place(int(s[2:]))
        return Place(int(s))


INF = Place(None)


class NormValue:
    """A nonnegative norm value at a fixed place (see module docstring).

    Finite place: ``exponent`` is a Fraction (value == p**exponent) or None
    (value == 0).  Archimedean: ``lo <= value <= hi`` rationals, and when
    ``square`` is set the value is exactly sqrt(square).
    """

    __slots__ = ("place", "exponent", "lo", "hi", "square")

    def __init__(self, place, exponent=None, lo=None, hi=None, square=None):
        self.place = place
        self.exponent = exponent
        self.lo = lo
        self.hi = hi
        self.square = square

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(place: Place) -> "NormValue":
        if place.is_finite:
            return NormValue(place, exponent=None)
        return NormValue(place, lo=ZERO, hi=ZERO, square=ZERO)

    @staticmethod
    def p_power(place: Place, exponent) -> "NormValue":
        assert place.is_finite
        return NormValue(place, exponent=as_fraction(exponent))

    @staticmethod
    def exact(place: Place, value) -> "NormValue":
        value = as_fraction(value)
        if value < 0:
            raise ValueError("norms are nonnegative")
        if place.is_finite:
            if value == 0:
                return NormValue.zero(place)
            e = vp(value, place.prime)
            if value != Fraction(place.prime) ** e:
                raise ValueError(f"{value} is not a power of {place.prime}")
            return NormValue.p_power(place, e)
        return NormValue(place, lo=value, hi=value, square=value * value)

    @staticmethod
    def from_square(place: Place, square, tol=_DEFAULT_TOL) -> "NormValue":
        """Archimedean value sqrt(square), exact square kept."""
        assert not place.is_finite
        square = as_fraction(square)
        lo, hi = sqrt_enclosure(square, tol)
        return NormValue(place, lo=lo, hi=hi, square=square)

    @staticmethod
    def interval(place: Place, lo, hi) -> "NormValue":
        assert not place.is_finite
        lo, hi = as_fraction(lo), as_fraction(hi)
        if not (0 <= lo <= hi):
            raise ValueError("bad enclosure")
        return NormValue(place, lo=lo, hi=hi)

    # -- predicates --------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        if self.place.is_finite:
            return self.exponent is None
        return self.hi == 0

    @property
    def is_exact(self) -> bool:
        return self.place.is_finite or self.square is not None or self.lo == self.hi

    def exact_rational(self) -> Optional[Fraction]:
        """The exact rational value if representable, else None."""
        if self.place.is_finite:
            if self.exponent is None:
                return ZERO
            if self.exponent.denominator == 1:
                return Fraction(self.place.prime) ** self.exponent
            return None
        if self.lo == self.hi:
            return self.lo
        if self.square is not None:
            from .qmath import sqrt_exact

            return sqrt_exact(self.square)
        return None

    # -- arithmetic (same place only) ---------------------------------------

    def _check(self, other):
        if self.place != other.place:
            raise ValueError("norm values live at different places")

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            other = NormValue.exact(self.place, abs(as_fraction(other)))
        self._check(other)
        if self.place.is_finite:
            if self.exponent is None or other.exponent is None:
                return NormValue.zero(self.place)
            return NormValue.p_power(self.place, self.exponent + other.exponent)
        sq = None
        if self.square is not None and other.square is not None:
            sq = self.square * other.square
        return NormValue(self.place, lo=self.lo * other.lo, hi=self.hi * other.hi, square=sq)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            other = NormValue.exact(self.place, abs(as_fraction(other)))
        self._check(other)
        if other.is_zero:
            raise ZeroDivisionError("division by zero norm")
        if self.place.is_finite:
            if self.exponent is None:
                return NormValue.zero(self.place)
            return NormValue.p_power(self.place, self.exponent - other.exponent)
        sq = None
        if self.square is not None and other.square is not None:
            sq = self.square / other.square
        if other.lo == 0:
            raise ZeroDivisionError("enclosure touches zero")
        return NormValue(self.place, lo=self.lo / other.hi, hi=self.hi / other.lo, square=sq)

    def __pow__(self, n: int):
        if n == 0:
            return NormValue.exact(self.place, 1)
        if n < 0:
            return NormValue.exact(self.place, 1) / self**-n
        if self.place.is_finite:
            if self.exponent is None:
                return NormValue.zero(self.place)
            return NormValue.p_power(self.place, self.exponent * n)
        sq = self.square**n if self.square is not None else None
        return NormValue(self.place, lo=self.lo**n, hi=self.hi**n, square=sq)

    def root(self, k: int, tol=_DEFAULT_TOL) -> "NormValue":
        """k-th root; exact at finite places, enclosure of width <= tol at oo."""
        if self.place.is_finite:
            if self.exponent is None:
                return self
            return NormValue.p_power(self.place, self.exponent / k)
        if k == 1:
            return self
        lo, _ = nth_root_enclosure(self.lo, k, tol)
        _, hi = nth_root_enclosure(self.hi, k, tol)
        return NormValue(self.place, lo=lo, hi=hi)

    def refine(self, tol) -> "NormValue":
        """Tighter enclosure (nested) when an exact square is available."""
        if self.place.is_finite or self.square is None:
            return self
        return NormValue.from_square(self.place, self.square, tol)

    # -- comparisons ---------------------------------------------------------

    def _key(self):
        """(kind, data) enabling exact comparison where possible."""
        if self.place.is_finite:
            return self.exponent
        return None

    def compare_rational(self, q) -> Optional[int]:
        """Exact comparison with an arbitrary nonnegative rational."""
        q = as_fraction(q)
        if q < 0:
            raise ValueError("norms are nonnegative")
        if self.place.is_finite:
            if self.exponent is None:
                return -1 if q > 0 else 0
            if q == 0:
                return 1
            # p**(a/b) vs q  <=>  p**a vs q**b
            a, b = self.exponent.numerator, self.exponent.denominator
            lhs = Fraction(self.place.prime) ** a
            rhs = q**b
            return -1 if lhs < rhs else (1 if lhs > rhs else 0)
        if self.square is not None:
            qq = q * q
            return -1 if self.square < qq else (1 if self.square > qq else 0)
        if self.hi < q:
            return -1
        if self.lo > q:
            return 1
        if self.lo == self.hi == q:
            return 0
        return None

    def compare(self, other) -> Optional[int]:
        """-1, 0, +1 if the order is certain, None if the enclosures overlap."""
        if isinstance(other, (int, Fraction)):
            return self.compare_rational(other)
        self._check(other)
        if self.place.is_finite:
            a, b = self.exponent, other.exponent
            if a is None and b is None:
                return 0
            if a is None:
                return -1
            if b is None:
                return 1
            return -1 if a < b else (1 if a > b else 0)
        if self.square is not None and other.square is not None:
            a, b = self.square, other.square
            return -1 if a < b else (1 if a > b else 0)
        if self.hi < other.lo:
            return -1
        if other.hi < self.lo:
            return 1
        if self.lo == self.hi == other.lo == other.hi:
            return 0
        return None

    def certainly_lt(self, other) -> bool:
        return self.compare(other) == -1

    def certainly_le(self, other) -> bool:
        c = self.compare(other)
        return c is not None and c <= 0

    def eq_exact(self, other) -> bool:
        return self.compare(other) == 0

    def __float__(self):
        if self.place.is_finite:
            if self.exponent is None:
                return 0.0
            return float(self.place.prime) ** float(self.exponent)
        return (float(self.lo) + float(self.hi)) / 2

    def __repr__(self):
        if self.place.is_finite:
            if self.exponent is None:
                return f"|0|_{self.place}"
            return f"{self.place.prime}^{self.exponent}"
        if self.square is not None:
            return f"sqrt({self.square})"
        return f"[{self.lo}, {self.hi}]"


def norm_max(values: Sequence[NormValue]) -> NormValue:
    """Max of norm values at a common place (interval max at oo)."""
    values = list(values)
    if not values:
        raise ValueError("empty max")
    place = values[0].place
    if place.is_finite:
        best = values[0]
        for v in values[1:]:
            if best.certainly_lt(v):
                best = v
        return best
    # archimedean: prefer the certain maximum, else interval hull
    best = values[0]
    certain = True
    for v in values[1:]:
        c = v.compare(best)
        if c == 1:
            best = v
        elif c is None:
            certain = False
            best = NormValue.interval(place, max(best.lo, v.lo), max(best.hi, v.hi))
    if certain:
        return best
    return best


def norm_min(values: Sequence[NormValue]) -> NormValue:
    values = list(values)
    if not values:
        raise ValueError("empty min")
    place = values[0].place
    if place.is_finite:
        best = values[0]
        for v in values[1:]:
            if v.certainly_lt(best):
                best = v
        return best
    best = values[0]
    for v in values[1:]:
        c = v.compare(best)
        if c == -1:
            best = v
        elif c is None:
            best = NormValue.interval(place, min(best.lo, v.lo), min(best.hi, v.hi))
    return best


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------

def abs_value(x, v: Place) -> NormValue:
    """|x|_v.  p**(-v_p(x)) at finite places, |x| at the archimedean place;
    0 maps to 0 everywhere."""
    x = as_fraction(x)
    if x == 0:
        return NormValue.zero(v)
    if v.is_finite:
        return NormValue.p_power(v, -vp(x, v.prime))
    return NormValue.exact(v, abs(x))


def vector_norm(xs: Sequence, v: Place, tol=_DEFAULT_TOL) -> NormValue:
    """Sup norm at finite places, Euclidean norm (exact square) at oo."""
    xs = [as_fraction(x) for x in xs]
    if not xs:
        raise ValueError("empty vector")
    if v.is_finite:
        vals = [abs_value(x, v) for x in xs]
        nz = [w for w in vals if not w.is_zero]
        if not nz:
            return NormValue.zero(v)
        return norm_max(nz)
    square = sum(x * x for x in xs)
    return NormValue.from_square(v, square, tol)


def wedge_norm(w: Sequence, v: Place, tol=_DEFAULT_TOL) -> NormValue:
    """Norm on a wedge power: same contract as vector_norm on the coordinates
    in the standard basis e_I."""
    return vector_norm(w, v, tol)


def _entries(A):
    rows = A.rows if hasattr(A, "rows") else A
    return [list(r) for r in rows]


def operator_norm(A, v: Place, tol=_DEFAULT_TOL) -> NormValue:
    """Operator norm of a square matrix.

    Finite place: max entry absolute value (the sup-norm operator norm over
    Q_p; this identity is itself property-tested).  Archimedean: the spectral
    norm sqrt(lambda_max(A^T A)) enclosed via exact Sturm bisection on the
    characteristic polynomial of A^T A; exact when lambda_max is rational.
    """
    rows = _entries(A)
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("square matrix required")
    if v.is_finite:
        return vector_norm([x for r in rows for x in r], v)
    # A^T A
    ata = [[sum(rows[k][i] * rows[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
    f = polys.charpoly_rows(ata)
    lam = _largest_real_root(f, tol * tol)
    if lam[0] == lam[1]:
        return NormValue.from_square(v, lam[0], tol)
    lo, _ = sqrt_enclosure(max(lam[0], ZERO), tol)
    _, hi = sqrt_enclosure(lam[1], tol)
    out = NormValue.interval(v, lo, hi)
    # shrink to requested width
    while out.hi - out.lo > tol:
        lam = _largest_real_root(f, (lam[1] - lam[0]) / 16)
        lo, _ = sqrt_enclosure(max(lam[0], ZERO), tol / 4)
        _, hi = sqrt_enclosure(lam[1], tol / 4)
        out = NormValue.interval(v, lo, hi)
    return out


def _largest_real_root(f, tol):
    roots = polys.isolate_real_roots(f)
    if not roots:
        raise ArithmeticError("no real root (A^T A is PSD, so this cannot happen)")
    a, b = roots[-1]
    return polys.refine_root(f, a, b, tol)
