"""Per-place joint spectral radius bounds and the place-selection lemma.

The lower bounds come from spectral radii of bounded-length words (exact at
finite places, where the bound is an equality once words of length d^2 are
reached); the upper bounds from submultiplicativity of the operator norm.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .errors import BudgetExceeded, HypothesisViolated
from .heights import GenSet
from .linalg import MatQ, eigenvalue_moduli
from .places import INF, NormValue, Place, norm_max, operator_norm
from .qmath import as_fraction

_DEFAULT_TOL = Fraction(1, 10**9)


def spectral_radius(A: MatQ, v: Place, tol=_DEFAULT_TOL) -> NormValue:
    """Largest eigenvalue modulus at the place v."""
    mods = eigenvalue_moduli(A, v, tol)
    return norm_max(mods)


@dataclass
class JsrBound:
    """A one-sided joint spectral radius bound with its guarantee label."""

    value: NormValue
    guarantee: str  # "exact" | "factor-2-certified" | "heuristic" | "upper"
    k_used: int
    words_seen: int

    def __float__(self):
        return float(self.value)


def jsr_lower(
    S: GenSet, v: Place, k_max: int, tol=_DEFAULT_TOL, budget: int = 10**6
) -> JsrBound:
    """max over k <= k_max and words w in S^k of Lambda_v(w)^(1/k).

    At a finite place with k_max >= d^2 this equals R_v(S) exactly; at the
    archimedean place it is a certified lower bound, within a factor 2 of
    R_v(S) once k_max >= 16 d^4 (the guarantee label records which applies).
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    tol = as_fraction(tol)
    d = S.dim
    best: Optional[NormValue] = None
    seen = 0
    radius_cache: Dict[MatQ, NormValue] = {}
    current = {m for m in S.elements}
    for k in range(1, k_max + 1):
        if k > 1:
            nxt = set()
            for a in current:
                for b in S.elements:
                    nxt.add(a * b)
                    seen += 1
                    if seen > budget:
                        raise BudgetExceeded(f"word enumeration exceeded {budget}")
            current = nxt
        for w in sorted(current, key=lambda m: m.rows):
            key = MatQ(w.rows)
            if key not in radius_cache:
                radius_cache[key] = spectral_radius(key, v, tol)
            val = radius_cache[key].root(k, tol) if k > 1 else radius_cache[key]
            if best is None or best.certainly_lt(val):
                best = val
    if v.is_finite:
        guarantee = "exact" if k_max >= d * d else "heuristic"
    else:
        guarantee = "factor-2-certified" if k_max >= 16 * d**4 else "heuristic"
    return JsrBound(best, guarantee, k_max, seen)


def jsr_upper(S: GenSet, v: Place, n: int, tol=_DEFAULT_TOL, budget: int = 10**6) -> JsrBound:
    """||S^n||_v^(1/n): an upper bound by submultiplicativity (exact at
    finite places)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    tol = as_fraction(tol)
    current = {m for m in S.elements}
    seen = len(current)
    for _ in range(n - 1):
        nxt = set()
        for a in current:
            for b in S.elements:
                nxt.add(a * b)
                seen += 1
                if seen > budget:
                    raise BudgetExceeded(f"word enumeration exceeded {budget}")
        current = nxt
    norm = norm_max([operator_norm(w, v, tol) for w in sorted(current, key=lambda m: m.rows)])
    return JsrBound(norm.root(n, tol), "upper", n, seen)


@dataclass
class PlaceSelection:
    """Outcome of the place-selection lemma: a finite place with
    e_v > s_v / 2C, or an infinite place with e_v >= s_v / 2C + e / 2, or a
    contradiction report when the finite data offers neither."""

    kind: str  # "finite" | "infinite" | "contradiction"
    place: Optional[Place]
    e_v: Optional[Fraction]
    s_v: Optional[Fraction]
    threshold: Optional[Fraction]

    @property
    def is_finite(self):
        return self.kind == "finite"


def place_select(e: Dict[Place, Fraction], s: Dict[Place, Fraction], C) -> PlaceSelection:
    """Constructive form of the place-selection dichotomy.

    Given nonnegative weights e_v and s_v with total sums satisfying
    s <= C * e, returns a finite place with e_v > s_v / 2C or an infinite
    place with e_v >= s_v / 2C + e / 2.  Raises HypothesisViolated otherwise.
    """
    C = as_fraction(C)
    if C <= 0:
        raise ValueError("C must be positive")
    e = {k: as_fraction(x) for k, x in e.items()}
    s = {k: as_fraction(x) for k, x in s.items()}
    if any(x < 0 for x in e.values()) or any(x < 0 for x in s.values()):
        raise ValueError("weights must be nonnegative")
    e_total = sum(e.values(), Fraction(0))
    s_total = sum(s.values(), Fraction(0))
    if s_total > C * e_total:
        raise HypothesisViolated(f"s = {s_total} > C*e = {C * e_total}")
    places = sorted(set(e) | set(s), key=lambda p: (p.prime is None, p.prime or 0))
    for p in places:
        if p.is_finite:
            ev, sv = e.get(p, Fraction(0)), s.get(p, Fraction(0))
            if ev > sv / (2 * C):
                return PlaceSelection("finite", p, ev, sv, sv / (2 * C))
    for p in places:
        if not p.is_finite:
            ev, sv = e.get(p, Fraction(0)), s.get(p, Fraction(0))
            thr = sv / (2 * C) + e_total / 2
            if ev >= thr:
                return PlaceSelection("infinite", p, ev, sv, thr)
    return PlaceSelection("contradiction", None, None, None, None)
