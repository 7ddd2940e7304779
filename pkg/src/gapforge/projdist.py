"""Projective distances, the gap function delta, and the dynamical checks.

The distance between projective points is ||x ^ y|| / (||x|| ||y||); between
subspaces it is the norm of the wedge of unit basis wedges, with the
conventions d(V, W) = 1 when either side is zero and d = 0 exactly when the
subspaces meet.  The gap delta(V, W) is evaluated through its orthogonal-
complement characterization, with the Z_(p)-complement at finite places and
the Euclidean one at the archimedean place.

At finite places every quantity here is an exact power of p; at the
archimedean place every distance is the square root of an explicit rational,
so comparisons against rationals and products of distances remain exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import List, Optional, Sequence, Tuple

from . import polys
from .heights import HeightValue, log_from_norm
from .linalg import MatQ, Subspace, eigensplit, orthogonal_complement
from .places import INF, NormValue, Place, norm_min, operator_norm, wedge_norm
from .qmath import ZERO, ONE, as_fraction, prime_factors

_DEFAULT_TOL = Fraction(1, 10**12)


class ProjPoint:
    """A point of P(Q^d) in canonical form: primitive integer coordinates
    with positive first nonzero entry.  Hashable, usable as an orbit key."""

    __slots__ = ("coords",)

    def __init__(self, coords):
        coords = [as_fraction(c) for c in coords]
        if all(c == 0 for c in coords):
            raise ValueError("zero vector is not projective")
        den = 1
        for c in coords:
            den = lcm(den, c.denominator)
        ints = [int(c * den) for c in coords]
        g = 0
        for x in ints:
            g = gcd(g, x)
        ints = [x // g for x in ints]
        first = next(x for x in ints if x != 0)
        if first < 0:
            ints = [-x for x in ints]
        self.coords = tuple(Fraction(x) for x in ints)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def apply(self, A: MatQ) -> "ProjPoint":
        return ProjPoint(A.apply(self.coords))

    def span(self) -> Subspace:
        return Subspace(len(self.coords), [self.coords])

    def __eq__(self, other):
        return isinstance(other, ProjPoint) and self.coords == other.coords

    def __hash__(self):
        return hash(self.coords)

    def __repr__(self):
        return f"ProjPoint({[str(c) for c in self.coords]})"


def _wedge_coords(rows: Sequence[Sequence[Fraction]], d: int) -> List[Fraction]:
    """Pluecker coordinates (all maximal minors) of a stacked row list."""
    r = len(rows)
    if r == 0:
        return [ONE]
    if r > d:
        return [ZERO]
    out = []
    for cols in itertools.combinations(range(d), r):
        sub = [[row[c] for c in cols] for row in rows]
        out.append(polys.det_rows(sub))
    return out


def proj_dist(x: ProjPoint, y: ProjPoint, v: Place, tol=_DEFAULT_TOL) -> NormValue:
    """d(x, y) = ||x ^ y|| / (||x|| ||y||), a value in [0, 1]."""
    d = x.dim
    wedge = _wedge_coords([x.coords, y.coords], d)
    num = wedge_norm(wedge, v, tol)
    if num.is_zero:
        return num
    den = wedge_norm(x.coords, v, tol) * wedge_norm(y.coords, v, tol)
    return num / den


def subspace_dist(V: Subspace, W: Subspace, v: Place, tol=_DEFAULT_TOL) -> NormValue:
    """d(V, W) = || v ^ w || for unit basis wedges; 1 when either is zero,
    0 exactly when the subspaces intersect nontrivially."""
    if V.ambient_dim != W.ambient_dim:
        raise ValueError("ambient mismatch")
    if V.is_zero or W.is_zero:
        return NormValue.exact(v, 1)
    d = V.ambient_dim
    stacked = _wedge_coords(list(V.basis) + list(W.basis), d)
    num = wedge_norm(stacked, v, tol)
    if num.is_zero:
        return num
    den = wedge_norm(V.pluecker(), v, tol) * wedge_norm(W.pluecker(), v, tol)
    return num / den


def point_to_subspace(x: ProjPoint, W: Subspace, v: Place, tol=_DEFAULT_TOL) -> NormValue:
    """d(kx, W); equals subspace_dist(span x, W).  The infimum
    characterization over y in W is a tested property, not the algorithm."""
    if W.is_zero:
        raise ValueError("W must be nonzero")
    return subspace_dist(x.span(), W, v, tol)


def delta_gap(V: Subspace, W: Subspace, v: Place, tol=_DEFAULT_TOL) -> NormValue:
    """The gap delta(V, W): sup over complements V' of V cap W of d(V', W),
    evaluated as d(V cap U, W cap U) for U an orthogonal complement of
    V cap W.  Always positive; equals 1 when V <= W."""
    if V.ambient_dim != W.ambient_dim:
        raise ValueError("ambient mismatch")
    if V.is_zero or W.is_zero:
        return NormValue.exact(v, 1)
    if W.contains(V):
        return NormValue.exact(v, 1)
    X = V.intersect(W)
    if X.is_zero:
        return subspace_dist(V, W, v, tol)
    U = orthogonal_complement(X, Subspace.full(V.ambient_dim), v)
    return subspace_dist(V.intersect(U), W.intersect(U), v, tol)


# ---------------------------------------------------------------------------
# Lemma-shaped checks
# ---------------------------------------------------------------------------

@dataclass
class InequalityReport:
    """Both sides of a lemma instance, the verdict, and whether the interval
    arithmetic could certify it (always true at finite places)."""

    place: Place
    lhs: NormValue
    rhs: NormValue
    holds: bool
    decided: bool
    context: dict

    def to_json(self):
        from .serialize import normvalue_to_json

        return {
            "place": str(self.place),
            "lhs": normvalue_to_json(self.lhs),
            "rhs": normvalue_to_json(self.rhs),
            "holds": self.holds,
            "decided": self.decided,
        }


def _pairwise_delta_min(subspaces: Sequence[Subspace], v: Place, tol) -> NormValue:
    """min over nonempty index sets I != J of delta(V_I, V_J), skipping pairs
    with V_I == V_J; exact intersections computed over Q once."""
    n = len(subspaces)
    idx = range(n)
    inters = {}
    for r in range(1, n + 1):
        for I in itertools.combinations(idx, r):
            cur = subspaces[I[0]]
            for i in I[1:]:
                cur = cur.intersect(subspaces[i])
            inters[I] = cur
    vals = [NormValue.exact(v, 1)]
    keys = sorted(inters.keys())
    for a in range(len(keys)):
        for b in range(a + 1, len(keys)):
            VI, VJ = inters[keys[a]], inters[keys[b]]
            if VI == VJ:
                continue
            vals.append(delta_gap(VI, VJ, v, tol))
            vals.append(delta_gap(VJ, VI, v, tol))
    return norm_min(vals)


def intersection_distance_check(
    x: ProjPoint, subspaces: Sequence[Subspace], v: Place, tol=_DEFAULT_TOL
) -> InequalityReport:
    """Check d(x, V_1 cap ... cap V_n) * delta^ceil(log2 n) <= C_k max d(x, V_i)."""
    n = len(subspaces)
    if n < 1:
        raise ValueError("need at least one subspace")
    d = x.dim
    ck = v.ck(d)
    inter = subspaces[0]
    for W in subspaces[1:]:
        inter = inter.intersect(W)
    delta = _pairwise_delta_min(subspaces, v, tol)
    loglog = (n - 1).bit_length()  # ceil(log2 n)
    dist_inter = (
        point_to_subspace(x, inter, v, tol)
        if not inter.is_zero
        else _dist_to_zero_subspace(x, v)
    )
    lhs = dist_inter * delta**loglog
    dists = [point_to_subspace(x, W, v, tol) for W in subspaces if not W.is_zero]
    dists += [_dist_to_zero_subspace(x, v) for W in subspaces if W.is_zero]
    from .places import norm_max

    rhs = norm_max(dists) * ck
    cmp = lhs.compare(rhs)
    return InequalityReport(
        place=v,
        lhs=lhs,
        rhs=rhs,
        holds=cmp is not None and cmp <= 0,
        decided=cmp is not None or lhs.eq_exact(rhs),
        context={"n": n, "delta": delta, "ck": ck},
    )


def _dist_to_zero_subspace(x: ProjPoint, v: Place) -> NormValue:
    # d(x, {0}) = 1 by the zero-subspace convention
    return NormValue.exact(v, 1)


def dynamics_check(
    gamma: MatQ,
    omega,
    x: ProjPoint,
    n: int,
    v: Place,
    tol=_DEFAULT_TOL,
    refine_rounds: int = 6,
) -> InequalityReport:
    """Check the contraction inequality for powers of a projective map:

        d(g^n x, A) * d(x, R) * d(A, R)^2
            <= (||g|| ||g^-1||)^(d-2) * (C_k^2 lambda/Lambda)^n
    """
    omega = as_fraction(omega)
    d = gamma.dim
    es = eigensplit(gamma, v, omega, tol)
    A_part, R_part = es.A_part, es.R_part
    gnx = x
    gn = gamma**n
    gnx = x.apply(gn)
    ck = v.ck(d)
    lhs_terms = []
    lhs_terms.append(
        point_to_subspace(gnx, A_part, v, tol) if not A_part.is_zero else NormValue.exact(v, 1)
    )
    lhs_terms.append(
        point_to_subspace(x, R_part, v, tol) if not R_part.is_zero else NormValue.exact(v, 1)
    )
    dAR = subspace_dist(A_part, R_part, v, tol)
    lhs = lhs_terms[0] * lhs_terms[1] * dAR**2
    alpha = es.alpha_omega
    work = tol
    for _ in range(refine_rounds):
        norm_g = operator_norm(gamma, v, work)
        norm_gi = operator_norm(gamma.inverse(), v, work)
        rhs = (norm_g * norm_gi) ** (d - 2) * ((alpha * (ck * ck)) ** n)
        cmp = lhs.compare(rhs)
        if cmp is not None or v.is_finite:
            return InequalityReport(
                place=v,
                lhs=lhs,
                rhs=rhs,
                holds=cmp is not None and cmp <= 0,
                decided=cmp is not None,
                context={"omega": omega, "n": n, "alpha": alpha},
            )
        work = work / 4096
    return InequalityReport(
        place=v, lhs=lhs, rhs=rhs, holds=False, decided=False,
        context={"omega": omega, "n": n, "alpha": alpha},
    )


# ---------------------------------------------------------------------------
# Arakelov distance
# ---------------------------------------------------------------------------

def _candidate_primes(*subspaces: Subspace) -> List[int]:
    """Primes where some listed subspace datum is not unimodular.

    Collects primes dividing numerators/denominators of the Pluecker
    coordinates of each subspace and of the stacked pair; at any other prime
    all the norms and complements involved are p-unimodular and the local gap
    is 1 (cross-checked by a brute-force scan in the tests).
    """
    primes = set()

    def eat(coords):
        nz = [c for c in coords if c != 0]
        for c in nz:
            primes.update(prime_factors(c.denominator))
        den = 1
        for c in nz:
            den = lcm(den, c.denominator)
        ints = [int(c * den) for c in nz]
        g = 0
        for xv in ints:
            g = gcd(g, xv)
        primes.update(prime_factors(g))

    for W in subspaces:
        if not W.is_zero:
            eat(W.pluecker())
            for row in W.basis:
                eat(row)
    if len(subspaces) >= 2:
        V, W = subspaces[0], subspaces[1]
        stacked = _wedge_coords(list(V.basis) + list(W.basis), V.ambient_dim)
        if any(c != 0 for c in stacked):
            eat(stacked)
    return sorted(primes)


def arakelov_distance(V: Subspace, W: Subspace, tol=_DEFAULT_TOL) -> HeightValue:
    """delta_Ar(V, W) = sum over places of log(1 / delta_v(V, W)); nonnegative
    and supported on finitely many places.  Exact (the archimedean gap is the
    square root of a rational)."""
    X = V.intersect(W)
    U = V.add(W)
    total = HeightValue.zero()
    for p in _candidate_primes(V, W, X, U):
        dv = delta_gap(V, W, Place(p), tol)
        total = total + (-log_from_norm(dv))
    dv = delta_gap(V, W, INF, tol)
    total = total + (-log_from_norm(dv))
    return total
