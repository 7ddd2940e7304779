"""Weil and Arakelov heights over Q.

Heights are weighted sums of log terms over the places of Q.  Every finite
place contributes log of an exact rational, and the archimedean place
contributes either log of an exact rational, half the log of an exact
rational (Euclidean norms of rational data), or the log of a rational
enclosure (operator norms).  A ``HeightValue`` therefore stores the height as
log(base)/root with ``base`` a rational interval and ``root`` a positive
integer; sums, rational multiples and comparisons of such values are exact
whenever the inputs are.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import List, Optional, Sequence, Tuple

from . import polys
from .errors import BudgetExceeded
from .linalg import MatQ, Subspace
from .places import INF, NormValue, Place, norm_max, operator_norm
from .qmath import ONE, as_fraction, log_float, prime_factors

_DEFAULT_TOL = Fraction(1, 10**9)


class HeightValue:
    """A height: value = log(base)/root with base in a positive rational
    interval [base_lo, base_hi] and root a positive integer."""

    __slots__ = ("base_lo", "base_hi", "root")

    def __init__(self, base_lo, base_hi, root: int = 1):
        base_lo, base_hi = as_fraction(base_lo), as_fraction(base_hi)
        if not (0 < base_lo <= base_hi):
            raise ValueError("height base interval must be positive")
        self.base_lo = base_lo
        self.base_hi = base_hi
        self.root = int(root)
        if self.root <= 0:
            raise ValueError("root must be positive")

    # -- constructors --------------------------------------------------------

    @staticmethod
    def zero() -> "HeightValue":
        return HeightValue(1, 1, 1)

    @staticmethod
    def log_of(base, root: int = 1) -> "HeightValue":
        base = as_fraction(base)
        return HeightValue(base, base, root)

    @property
    def is_exact(self) -> bool:
        return self.base_lo == self.base_hi

    @property
    def is_zero(self) -> bool:
        return self.base_lo == self.base_hi == 1

    # -- arithmetic -----------------------------------------------------------

    def __add__(self, other: "HeightValue") -> "HeightValue":
        r = lcm(self.root, other.root)
        a, b = r // self.root, r // other.root
        return HeightValue(
            self.base_lo**a * other.base_lo**b,
            self.base_hi**a * other.base_hi**b,
            r,
        )

    def scale(self, q) -> "HeightValue":
        """Multiply the height by an exact rational q."""
        q = as_fraction(q)
        if q == 0:
            return HeightValue.zero()
        num, den = q.numerator, q.denominator
        if num > 0:
            return HeightValue(self.base_lo**num, self.base_hi**num, self.root * den)
        return HeightValue(self.base_hi**num, self.base_lo**num, self.root * den)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    # -- comparisons -----------------------------------------------------------

    def compare(self, other: "HeightValue") -> Optional[int]:
        """-1/0/+1 when certain, None when the enclosures overlap."""
        r = lcm(self.root, other.root)
        a, b = r // self.root, r // other.root
        if self.base_hi**a < other.base_lo**b:
            return -1
        if other.base_hi**b < self.base_lo**a:
            return 1
        if self.is_exact and other.is_exact and self.base_lo**a == other.base_lo**b:
            return 0
        return None

    def certainly_le(self, other) -> bool:
        c = self.compare(other)
        return c is not None and c <= 0

    def eq_exact(self, other) -> bool:
        return self.compare(other) == 0

    def max_with(self, other: "HeightValue") -> "HeightValue":
        c = self.compare(other)
        if c is not None:
            return other if c < 0 else self
        r = lcm(self.root, other.root)
        a, b = r // self.root, r // other.root
        return HeightValue(
            max(self.base_lo**a, other.base_lo**b),
            max(self.base_hi**a, other.base_hi**b),
            r,
        )

    def width_bound(self) -> Fraction:
        """An upper bound for the width of the value enclosure (in nats)."""
        return (self.base_hi - self.base_lo) / (self.base_lo * self.root)

    def __float__(self):
        return (log_float(self.base_lo) + log_float(self.base_hi)) / (2 * self.root)

    def __repr__(self):
        if self.is_exact:
            return f"log({self.base_lo})/{self.root}"
        return f"log([{self.base_lo},{self.base_hi}])/{self.root}"


def height_from_norm(nv: NormValue) -> HeightValue:
    """log^+ of a norm value as a HeightValue (contribution of one place)."""
    if nv.place.is_finite:
        if nv.is_zero or nv.exponent <= 0:
            return HeightValue.zero()
        e = nv.exponent
        return HeightValue.log_of(Fraction(nv.place.prime) ** e.numerator, e.denominator)
    if nv.square is not None:
        sq = max(ONE, nv.square)
        return HeightValue.log_of(sq, 2)
    return HeightValue(max(ONE, nv.lo), max(ONE, nv.hi), 1)


def log_from_norm(nv: NormValue) -> HeightValue:
    """log (not log^+) of a positive norm value."""
    if nv.place.is_finite:
        if nv.is_zero:
            raise ValueError("log of zero norm")
        e = nv.exponent
        return HeightValue.log_of(Fraction(nv.place.prime) ** e.numerator, e.denominator)
    if nv.square is not None:
        return HeightValue.log_of(nv.square, 2)
    if nv.lo <= 0:
        raise ValueError("log of enclosure touching zero")
    return HeightValue(nv.lo, nv.hi, 1)


# ---------------------------------------------------------------------------
# Generating sets
# ---------------------------------------------------------------------------

class GenSet:
    """A finite set of rational matrices with symmetry/identity flags.

    The flags are verified on construction: ``symmetric`` requires the inverse
    of every element to be present, ``contains_identity`` requires the
    identity matrix to be listed.
    """

    __slots__ = ("elements", "symmetric", "contains_identity")

    def __init__(self, elements: Sequence[MatQ], symmetric: bool, contains_identity: bool):
        elements = tuple(elements)
        if not elements:
            raise ValueError("empty generating set")
        d = elements[0].dim
        if any(e.dim != d for e in elements):
            raise ValueError("mixed dimensions")
        ident = MatQ.identity(d)
        if contains_identity != any(e == ident for e in elements):
            raise ValueError("contains_identity flag inconsistent with elements")
        if symmetric:
            pool = {e for e in elements}
            for e in elements:
                if e.inverse() not in pool:
                    raise ValueError("symmetric flag inconsistent with elements")
        self.elements = elements
        self.symmetric = symmetric
        self.contains_identity = contains_identity

    @staticmethod
    def of(mats: Sequence[MatQ], symmetrize: bool = False, with_identity: bool = False) -> "GenSet":
        """Build a GenSet, optionally closing under inverses / adding 1.

        Each element's word is set to its own index in the final list (the
        identity gets the empty word), so product words stay index-consistent.
        """
        seen: List[MatQ] = []
        for m in mats:
            m = MatQ(m.rows)
            if m not in seen:
                seen.append(m)
        if symmetrize:
            for m in list(seen):
                mi = MatQ(m.inverse().rows)
                if mi not in seen:
                    seen.append(mi)
        d = mats[0].dim
        ident = MatQ.identity(d)
        if with_identity and ident not in seen:
            seen.insert(0, ident)
        labeled = [
            m.with_word(()) if m == ident else m.with_word((i,))
            for i, m in enumerate(seen)
        ]
        sym = all(m.inverse() in seen for m in seen)
        return GenSet(labeled, symmetric=sym, contains_identity=ident in seen)

    @property
    def dim(self) -> int:
        return self.elements[0].dim

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def product_sets(self, n_max: int, budget: int = 2 * 10**6):
        """Yield (n, set_of_products) for n = 1..n_max.

        With the identity present the sets are cumulative, matching S^n.
        Deduplication is by exact canonical matrix value.
        """
        current = {MatQ(m.rows, word=m.word) for m in self.elements}
        total = len(current)
        yield 1, current
        for n in range(2, n_max + 1):
            nxt = set()
            for a in current:
                for b in self.elements:
                    c = a * b
                    nxt.add(c)
                    total += 1
                    if total > budget:
                        raise BudgetExceeded(
                            f"product enumeration exceeded budget {budget}"
                        )
            current = nxt
            yield n, current


# ---------------------------------------------------------------------------
# Heights
# ---------------------------------------------------------------------------

def weil_height(x) -> HeightValue:
    """h(x) = sum over places of log^+ |x|_v; exactly log max(|num|, den)."""
    x = as_fraction(x)
    if x == 0:
        return HeightValue.zero()
    return HeightValue.log_of(max(abs(x.numerator), x.denominator))


def weil_height_algebraic(f, tol=_DEFAULT_TOL) -> HeightValue:
    """Height of any root of the irreducible integer polynomial f, via the
    Mahler measure: h = log M(f) / deg f with M(f) = |lc| * prod max(1, |root|).

    Cyclotomic factors (and x - r for rational r) short-circuit to exact
    values; otherwise root-modulus enclosures are refined until the height
    enclosure is narrower than tol.
    """
    f = polys.trim([as_fraction(c) for c in f])
    n = polys.deg(f)
    if n < 1:
        raise ValueError("constant polynomial")
    if any(c.denominator != 1 for c in f):
        raise ValueError("integer polynomial required")
    if f[0] == 0:
        raise ValueError("x divides f; the height of 0 is 0 by convention")
    if n == 1:
        return weil_height(-f[0] / f[1])
    if f[-1] in (1, -1) and polys.is_cyclotomic_like(polys.monic(f)):
        return HeightValue.zero()
    from .linalg import _complex_pair_moduli

    work = as_fraction(tol)
    while True:
        # Mahler measure squared as a rational interval
        m2_lo = Fraction(f[-1] ** 2)
        m2_hi = Fraction(f[-1] ** 2)
        for a, b in polys.isolate_real_roots(f):
            a, b = polys.refine_root(f, a, b, work)
            while a < 0 < b:
                a, b = polys.refine_root(f, a, b, (b - a) / 16)
            lo, hi = min(abs(a), abs(b)), max(abs(a), abs(b))
            if a == b:
                lo = hi = abs(a)
            m2_lo *= max(ONE, lo * lo)
            m2_hi *= max(ONE, hi * hi)
        for lo, hi in _complex_pair_moduli(f, work):
            m2_lo *= max(ONE, lo * lo) ** 2
            m2_hi *= max(ONE, hi * hi) ** 2
        hv = HeightValue(m2_lo, m2_hi, 2 * n)
        if hv.width_bound() <= tol:
            return hv
        work /= 64


def matrix_height(A: MatQ, tol=_DEFAULT_TOL) -> HeightValue:
    """h(A) = sum over places of log^+ of the operator norm."""
    h = HeightValue.zero()
    primes = set()
    for row in A.rows:
        for x in row:
            primes.update(prime_factors(x.denominator))
    for p in sorted(primes):
        h = h + height_from_norm(operator_norm(A, Place(p)))
    h = h + height_from_norm(operator_norm(A, INF, as_fraction(tol)))
    return h


def set_height(S: GenSet, tol=_DEFAULT_TOL) -> HeightValue:
    """h(S): per-place max over the set before summing the log^+ terms."""
    return _set_height_of(list(S.elements), tol)


def _set_height_of(mats: Sequence[MatQ], tol=_DEFAULT_TOL) -> HeightValue:
    h = HeightValue.zero()
    primes = set()
    for A in mats:
        for row in A.rows:
            for x in row:
                primes.update(prime_factors(x.denominator))
    for p in sorted(primes):
        v = Place(p)
        h = h + height_from_norm(norm_max([operator_norm(A, v) for A in mats]))
    h = h + height_from_norm(norm_max([operator_norm(A, INF, as_fraction(tol)) for A in mats]))
    return h


def arakelov_height(W: Subspace) -> HeightValue:
    """h_Ar(W): the Arakelov height of the Pluecker line of W.  Exact."""
    if W.is_zero:
        return HeightValue.zero()
    coords = W.pluecker()
    return arakelov_height_vector(coords)


def arakelov_height_vector(coords: Sequence[Fraction]) -> HeightValue:
    """h_Ar of a projective point given by rational coordinates.  Exact:
    normalize to a primitive integer vector (finite places then contribute 0)
    and return half the log of the squared Euclidean norm."""
    coords = [as_fraction(c) for c in coords]
    if all(c == 0 for c in coords):
        raise ValueError("zero vector has no projective height")
    den = 1
    for c in coords:
        den = lcm(den, c.denominator)
    ints = [int(c * den) for c in coords]
    from math import gcd

    g = 0
    for x in ints:
        g = gcd(g, x)
    ints = [x // g for x in ints]
    return HeightValue.log_of(sum(x * x for x in ints), 2)


@dataclass
class NormalizedHeightReport:
    """Sequence h(S^n)/n plus the place-decomposed lower bound from the
    per-place joint spectral radii."""

    terms: List[HeightValue]
    lower_bound: HeightValue
    lower_bound_places: List[Tuple[str, HeightValue]]
    n_max: int
    products_seen: int


def normalized_height_estimate(
    S: GenSet, n_max: int, budget: int = 2 * 10**6, tol=_DEFAULT_TOL, k_max: Optional[int] = None
) -> NormalizedHeightReport:
    """h(S^n)/n for n = 1..n_max by exact product enumeration, together with
    the lower bound sum over places of log^+ R_v(S) from the Bochi bounds."""
    from . import jsr

    terms = []
    seen = 0
    for n, products in S.product_sets(n_max, budget):
        seen += len(products)
        h = _set_height_of(sorted(products, key=lambda m: m.rows), tol)
        terms.append(h.scale(Fraction(1, n)))
    d = S.dim
    if k_max is None:
        k_max = d * d
    # only places where some entry is non-integral can have R_v(S) > 1
    primes = set()
    for A in S.elements:
        for row in A.rows:
            for x in row:
                primes.update(prime_factors(x.denominator))
    lower = HeightValue.zero()
    by_place = []
    for p in sorted(primes):
        v = Place(p)
        r = jsr.jsr_lower(S, v, k_max=k_max, tol=tol)
        term = height_from_norm(r.value)
        if not term.is_zero:
            by_place.append((str(v), term))
            lower = lower + term
    r_inf = jsr.jsr_lower(S, INF, k_max=min(k_max, 4), tol=tol)
    term = height_from_norm(r_inf.value)
    if not term.is_zero:
        by_place.append(("inf", term))
        lower = lower + term
    return NormalizedHeightReport(terms, lower, by_place, n_max, seen)
