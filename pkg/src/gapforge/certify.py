"""Ping-pong certification and quasi-regular norm estimation.

The computable sufficient condition: with gamma split at a cursor omega into
attracting/repelling subspaces W = A, W' = R, conjugators g_1..g_r whose
translate families are distinct and in weak general position, separation

    delta = min over the translate-intersection pairs of the gap function,

norm bound Delta = max squared operator norms of gamma^{+-1}, g_i^{+-1}, and
contraction ratio alpha = lambda_omega / Lambda_omega, the family
{ (g_i gamma g_i^-1)^n } is in d-ping-pong position on P(k^d) as soon as

    (C_k^2 alpha)^n  <  delta^(2 + 2 ceil(log2 d)) / (C_k^2 Delta^(3(d-2))).

Certificates carry every ingredient exactly and re-verify from scratch.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, lcm
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import (
    BudgetExceeded,
    CursorOnEigenvalue,
    MixedFactor,
    NoContraction,
    NotFound,
    NotInPosition,
    PositionUnreachable,
)
from .escape import check_weak_general_position, weak_general_position
from .heights import GenSet
from .linalg import MatQ, Subspace, char_poly, eigensplit, eigenvalue_moduli, poly_at_matrix
from .places import INF, NormValue, Place, norm_max, norm_min, operator_norm
from .projdist import ProjPoint, delta_gap, point_to_subspace, subspace_dist
from .qmath import ZERO, ONE, as_fraction, prime_factors
from . import polys

_DEFAULT_TOL = Fraction(1, 10**12)


# ---------------------------------------------------------------------------
# Admissible subspaces
# ---------------------------------------------------------------------------

def admissible_subspaces(gamma: MatQ, v: Place) -> List[Tuple[Subspace, Subspace]]:
    """Nonzero proper sums of generalized eigenspaces of gamma whose
    eigenvalues are not all roots of unity, each paired with the
    complementary sum.  Deterministic order (subset size, then index)."""
    if gamma.det() == 0:
        raise ValueError("gamma must be invertible")
    f = char_poly(gamma)
    factors = polys.factor_rational_poly(f)
    d = gamma.dim
    blocks = []
    for q, m in factors:
        space = Subspace(d, _kernel_of(poly_at_matrix(polys.ppow(q, m), gamma)))
        cyclo = polys.is_cyclotomic_like(q)
        blocks.append((space, cyclo))
    out = []
    idx = range(len(blocks))
    for size in range(1, len(blocks)):
        for T in itertools.combinations(idx, size):
            if all(blocks[i][1] for i in T):
                continue  # all eigenvalues on this sum are roots of unity
            W = Subspace.zero(d)
            Wc = Subspace.zero(d)
            for i in idx:
                if i in T:
                    W = W.add(blocks[i][0])
                else:
                    Wc = Wc.add(blocks[i][0])
            out.append((W, Wc))
    return out


def _kernel_of(M: MatQ):
    from .linalg import kernel_basis

    return kernel_basis(M.rows, M.dim)


# ---------------------------------------------------------------------------
# The separation quantity delta_{W,v}
# ---------------------------------------------------------------------------

def delta_Wv(
    gamma: MatQ,
    W: Subspace,
    conjugators: Sequence[MatQ],
    v: Place,
    tol=_DEFAULT_TOL,
    W_complement: Optional[Subspace] = None,
) -> NormValue:
    """min over the translate-intersection pairs of the gap function.

    Covers delta(W, W'), the same-family pairs delta(W_I, W_J) and
    delta(W'_I, W'_J) for distinct intersections, and the cross pairs
    delta(W_I, W'_J); W_I is the exact intersection of the translates g_i W
    over i in I.  Same-family pairs with identical subspaces are skipped
    (their gap is 1 by the containment convention anyway)."""
    d = gamma.dim
    if W_complement is None:
        raise ValueError("the complementary subspace is required")
    Wp = W_complement
    fam = [W.apply(g) for g in conjugators]
    famp = [Wp.apply(g) for g in conjugators]
    inters = _all_intersections(fam)
    intersp = _all_intersections(famp)
    vals = [delta_gap(W, Wp, v, tol), delta_gap(Wp, W, v, tol)]
    keys = sorted(inters.keys())
    for a in range(len(keys)):
        for b in range(len(keys)):
            if a < b:
                for fams in (inters, intersp):
                    VI, VJ = fams[keys[a]], fams[keys[b]]
                    if VI == VJ:
                        continue
                    vals.append(delta_gap(VI, VJ, v, tol))
                    vals.append(delta_gap(VJ, VI, v, tol))
            VI, VJ = inters[keys[a]], intersp[keys[b]]
            vals.append(delta_gap(VI, VJ, v, tol))
    return norm_min(vals)


def _all_intersections(translates: Sequence[Subspace]) -> Dict[Tuple[int, ...], Subspace]:
    out = {}
    idx = range(len(translates))
    for r in range(1, len(translates) + 1):
        for I in itertools.combinations(idx, r):
            cur = translates[I[0]]
            for i in I[1:]:
                cur = cur.intersect(translates[i])
            out[I] = cur
    return out


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------

@dataclass
class PingPongCert:
    """A re-verifiable d-ping-pong certificate (all data exact)."""

    place: Place
    gamma: MatQ
    conjugators: Tuple[MatQ, ...]
    omega: Fraction
    n: int
    delta: NormValue
    Delta: NormValue
    alpha: NormValue
    M: int
    r: int
    generators: Optional[Tuple[MatQ, ...]] = None  # for word re-verification

    @property
    def dim(self) -> int:
        return self.gamma.dim

    def players(self) -> List[MatQ]:
        """The ping-pong family {(g_i gamma g_i^-1)^n}."""
        out = []
        for g in self.conjugators:
            out.append((g * self.gamma * g.inverse()) ** self.n)
        return out


def _ppcoco_sides(delta: NormValue, Delta: NormValue, alpha: NormValue, d: int, ck: int, n: int):
    lhs = (alpha * (ck * ck)) ** n
    loglog = (d - 1).bit_length()  # ceil(log2 d)
    rhs = delta ** (2 + 2 * loglog) / (Delta ** (3 * (d - 2)) * (ck * ck))
    return lhs, rhs


def certify_pingpong(
    gamma: MatQ,
    conjugators: Sequence[MatQ],
    v: Place,
    omega,
    tol=_DEFAULT_TOL,
    n_cap: int = 10**6,
    generators: Optional[Sequence[MatQ]] = None,
) -> Tuple[int, PingPongCert]:
    """Least n making the ping-pong condition hold with interval margin, plus
    the certificate.  Raises NotInPosition when the translate families are
    not distinct/in weak general position, NoContraction when C_k^2 alpha
    cannot be certified below 1 (only possible at the archimedean place)."""
    omega = as_fraction(omega)
    tol = as_fraction(tol)
    d = gamma.dim
    es = eigensplit(gamma, v, omega, tol)
    W, Wp = es.A_part, es.R_part
    if W.is_zero or W.is_full:
        raise NotInPosition("the eigensplit is trivial: no repelling/attracting pair")
    fam = [W.apply(g) for g in conjugators]
    famp = [Wp.apply(g) for g in conjugators]
    if not (check_weak_general_position(fam) and check_weak_general_position(famp)):
        raise NotInPosition("translate families are not distinct/in weak general position")
    ck = v.ck(d)
    delta = delta_Wv(gamma, W, conjugators, v, tol, W_complement=Wp)
    norms = [operator_norm(gamma, v, tol), operator_norm(gamma.inverse(), v, tol)]
    for g in conjugators:
        norms.append(operator_norm(g, v, tol))
        norms.append(operator_norm(g.inverse(), v, tol))
    Delta = norm_max(norms) ** 2
    alpha = es.alpha_omega
    one = NormValue.exact(v, 1)
    contraction = alpha * (ck * ck)
    work = tol
    for _ in range(8):
        if contraction.certainly_lt(one):
            break
        if v.is_finite:
            raise NoContraction(f"C_k^2 alpha = {contraction} >= 1")
        work /= 4096
        es = eigensplit(gamma, v, omega, work)
        alpha = es.alpha_omega
        contraction = alpha * (ck * ck)
    else:
        raise NoContraction(f"C_k^2 alpha could not be certified below 1: {contraction}")
    n = 1
    while n <= n_cap:
        lhs, rhs = _ppcoco_sides(delta, Delta, alpha, d, ck, n)
        if lhs.certainly_lt(rhs):
            break
        n += 1
    else:
        raise NoContraction(f"no n <= {n_cap} satisfies the ping-pong condition")
    cert = PingPongCert(
        place=v,
        gamma=gamma,
        conjugators=tuple(conjugators),
        omega=omega,
        n=n,
        delta=delta,
        Delta=Delta,
        alpha=alpha,
        M=d,
        r=len(conjugators),
        generators=tuple(generators) if generators is not None else None,
    )
    return n, cert


@dataclass
class VerifyOutcome:
    ok: bool
    failures: List[str]


def reverify(cert: PingPongCert, tol=_DEFAULT_TOL) -> VerifyOutcome:
    """Recompute every certificate ingredient from scratch and check the
    stored values and the ping-pong inequality (with interval margin)."""
    failures = []
    v, d = cert.place, cert.dim
    if cert.M != d:
        failures.append(f"overlap bound M={cert.M} != ambient dimension {d}")
    if cert.r != len(cert.conjugators):
        failures.append("conjugator count mismatch")
    if cert.generators is not None:
        for mat in (cert.gamma, *cert.conjugators):
            if mat.word is not None and not mat.verify_word(cert.generators):
                failures.append("a stored word does not reproduce its matrix")
                break
    try:
        es = eigensplit(cert.gamma, v, cert.omega, tol)
    except Exception as exc:  # Mixed/Cursor errors invalidate the certificate
        return VerifyOutcome(False, failures + [f"eigensplit failed: {exc}"])
    W, Wp = es.A_part, es.R_part
    fam = [W.apply(g) for g in cert.conjugators]
    famp = [Wp.apply(g) for g in cert.conjugators]
    if not (check_weak_general_position(fam) and check_weak_general_position(famp)):
        failures.append("translate families are not in weak general position")
    delta = delta_Wv(cert.gamma, W, cert.conjugators, v, tol, W_complement=Wp)
    if not delta.eq_exact(cert.delta) and delta.compare(cert.delta) is not None:
        failures.append(f"stored delta {cert.delta} != recomputed {delta}")
    norms = [operator_norm(cert.gamma, v, tol), operator_norm(cert.gamma.inverse(), v, tol)]
    for g in cert.conjugators:
        norms.append(operator_norm(g, v, tol))
        norms.append(operator_norm(g.inverse(), v, tol))
    Delta = norm_max(norms) ** 2
    if v.is_finite and not Delta.eq_exact(cert.Delta):
        failures.append(f"stored Delta {cert.Delta} != recomputed {Delta}")
    alpha = es.alpha_omega
    if v.is_finite and not alpha.eq_exact(cert.alpha):
        failures.append(f"stored alpha {cert.alpha} != recomputed {alpha}")
    ck = v.ck(d)
    lhs, rhs = _ppcoco_sides(delta, Delta, alpha, d, ck, cert.n)
    if not lhs.certainly_lt(rhs):
        failures.append("the ping-pong inequality fails at the stored power n")
    return VerifyOutcome(not failures, failures)


# ---------------------------------------------------------------------------
# Sampled position verification
# ---------------------------------------------------------------------------

@dataclass
class PositionSampleReport:
    violations: int
    checked: int
    epsilon: Fraction
    details: List[str]


def _rational_strictly_between(lo: NormValue, hi: NormValue, tol=_DEFAULT_TOL) -> Fraction:
    """A rational strictly inside the open interval (lo, hi), found by dyadic
    bisection with exact comparisons; assumes lo < hi as real numbers."""
    x_lo = Fraction(0)
    if hi.place.is_finite:
        e = hi.exponent
        x_hi = Fraction(hi.place.prime) ** (e.numerator // e.denominator + 1)
    else:
        x_hi = hi.hi + 1
    work = tol
    for _ in range(20000):
        mid = (x_lo + x_hi) / 2
        c_lo = lo.compare_rational(mid)
        c_hi = hi.compare_rational(mid)
        if c_lo == -1 and c_hi == 1:
            return mid
        if c_lo is None or c_hi is None:
            # refine archimedean enclosures and retry the same midpoint
            lo = lo.refine(work)
            hi = hi.refine(work)
            work /= 64
            continue
        if c_lo >= 0:
            x_lo = mid
        else:
            x_hi = mid
    raise ArithmeticError("could not find a rational in the window")


def default_epsilon(cert: PingPongCert, tol=_DEFAULT_TOL) -> Fraction:
    """Midpoint (geometric-mean flavored) of the proof window
    sqrt((C^2 alpha)^n Delta^(3(d-2))) / delta  <  eps  <  delta^ceil(log2 d) / C_k."""
    d, ck = cert.dim, cert.place.ck(cert.dim)
    loglog = (d - 1).bit_length()
    upper = cert.delta**loglog / ck
    lower_sq = (cert.alpha * ck * ck) ** cert.n * cert.Delta ** (3 * (d - 2)) / cert.delta**2
    lower = lower_sq.root(2, tol)
    return _rational_strictly_between(lower, upper, tol)


def verify_position_sample(
    cert: PingPongCert,
    epsilon=None,
    sample: Sequence[ProjPoint] = (),
    tol=_DEFAULT_TOL,
) -> PositionSampleReport:
    """Check conditions (i) and (ii) of the ping-pong position on sampled
    projective points: if d(x, R_i) > eps then d(gamma_i^n x, A_i) <= eps,
    and no point lies in more than M of the R-regions (resp. A-regions)."""
    v, d = cert.place, cert.dim
    eps = as_fraction(epsilon) if epsilon is not None else default_epsilon(cert, tol)
    es = eigensplit(cert.gamma, v, cert.omega, tol)
    A_parts = [es.A_part.apply(g) for g in cert.conjugators]
    R_parts = [es.R_part.apply(g) for g in cert.conjugators]
    players = cert.players()
    violations = 0
    details: List[str] = []
    for x in sample:
        in_R = 0
        in_A = 0
        for i, (Ai, Ri, gi_n) in enumerate(zip(A_parts, R_parts, players)):
            dR = point_to_subspace(x, Ri, v, tol)
            dA = point_to_subspace(x, Ai, v, tol)
            if dR.compare_rational(eps) <= 0:
                in_R += 1
            if dA.compare_rational(eps) <= 0:
                in_A += 1
            if dR.compare_rational(eps) > 0:
                img = x.apply(gi_n)
                dimg = point_to_subspace(img, Ai, v, tol)
                if dimg.compare_rational(eps) > 0:
                    violations += 1
                    details.append(
                        f"(i) fails at player {i}: d(x,R)={dR}, d(g^n x, A)={dimg}"
                    )
        if in_R > cert.M or in_A > cert.M:
            violations += 1
            details.append(f"(ii) fails: multiplicities {in_R}/{in_A} exceed M={cert.M}")
    return PositionSampleReport(violations, len(sample), eps, details[:32])


# ---------------------------------------------------------------------------
# End-to-end search
# ---------------------------------------------------------------------------

def _candidate_places(gamma: MatQ) -> List[Place]:
    f = char_poly(gamma)
    primes = set()
    for c in f:
        primes.update(prime_factors(c.denominator))
    if f[0] != 0:
        primes.update(prime_factors(f[0].numerator))
    finite = []
    for p in sorted(primes):
        if any(s != 0 for s, _ in polys.newton_polygon_slopes(f, p)):
            finite.append(Place(p))
    return finite + [INF]


def _candidate_cursors(gamma: MatQ, v: Place, tol=Fraction(1, 10**9)) -> List[Fraction]:
    """Rational cursors strictly between consecutive distinct eigenvalue
    moduli (only cuts with both sides nonempty are useful)."""
    mods = eigenvalue_moduli(gamma, v, tol)
    uniq: List[NormValue] = []
    for m in sorted(mods, key=float):
        if not any(m.eq_exact(u) or m.compare(u) is None for u in uniq):
            uniq.append(m)
    cursors = []
    for a, b in zip(uniq, uniq[1:]):
        try:
            cursors.append(_rational_strictly_between(a, b, tol))
        except ArithmeticError:
            continue
    return cursors


def _side_factors_admissible(gamma: MatQ, v: Place, omega: Fraction, tol) -> bool:
    """Both the attracting and repelling sums must be admissible (contain a
    factor that is not a root-of-unity block)."""
    from .linalg import _factor_side

    f = char_poly(gamma)
    sides = {1: [], -1: []}
    for q, m in polys.factor_rational_poly(f):
        side = _factor_side(q, v, omega, tol)
        if side == 0:
            return False
        sides[side].append(q)
    if not sides[1] or not sides[-1]:
        return False
    return any(not polys.is_cyclotomic_like(q) for q in sides[1]) and any(
        not polys.is_cyclotomic_like(q) for q in sides[-1]
    )


def locgap_search(
    S: GenSet,
    r: int,
    m: int,
    M_cap: int = 200_000,
    tol=_DEFAULT_TOL,
    word_budget: int = 50_000,
    constants: Optional[dict] = None,
) -> PingPongCert:
    """End-to-end witness search: enumerate gamma in S^m by word length, for
    each a deterministic list of places and cursors, build conjugators in
    weak general position, and return the first certificate found.

    Raises NotFound with diagnostics (best contraction and separation seen).
    The theoretical word-length bound N(d, r) is reported symbolically in the
    diagnostics; with height-gap constants supplied in ``constants``
    ({"gap_d": .., "kappa_prime_d": ..}) it is also evaluated numerically.
    """
    if not S.contains_identity or not S.symmetric:
        raise ValueError("the generating set must be symmetric and contain 1")
    d = S.dim
    best_alpha: Optional[float] = None
    best_delta: Optional[float] = None
    max_distinct_moduli = 0
    mixed_factor_hits = 0
    seen: set = set()
    ordered: List[MatQ] = []
    frontier = [MatQ.identity(d, word=())]
    words = 0
    for length in range(1, m + 1):
        nxt = []
        for a in frontier:
            for gi, g in enumerate(S.elements):
                c = a * g
                if c.word is None:
                    c = c.with_word((a.word or ()) + (gi,))
                if MatQ(c.rows) in seen:
                    continue
                seen.add(MatQ(c.rows))
                nxt.append(c)
                ordered.append(c)
                words += 1
                if words > word_budget:
                    raise BudgetExceeded(f"gamma enumeration exceeded {word_budget}")
        frontier = nxt
    for gamma in ordered:
        if gamma.det() == 0:
            continue
        if gamma == MatQ.identity(d):
            continue
        for v in _candidate_places(gamma):
            try:
                cursors = _candidate_cursors(gamma, v, tol)
            except Exception:
                continue
            max_distinct_moduli = max(max_distinct_moduli, len(cursors) + 1)
            for omega in cursors:
                try:
                    if not _side_factors_admissible(gamma, v, omega, tol):
                        mixed_factor_hits += 1
                        continue
                    es = eigensplit(gamma, v, omega, tol)
                except (MixedFactor, CursorOnEigenvalue):
                    mixed_factor_hits += 1
                    continue
                alpha_f = float(es.alpha_omega)
                if best_alpha is None or alpha_f < best_alpha:
                    best_alpha = alpha_f
                try:
                    wgp = weak_general_position(S, es.A_part, es.R_part, r, M_cap)
                except (PositionUnreachable, BudgetExceeded):
                    continue
                try:
                    n, cert = certify_pingpong(
                        gamma, wgp.conjugators, v, omega, tol,
                        generators=S.elements,
                    )
                except (NotInPosition, NoContraction):
                    continue
                delta_f = float(cert.delta)
                if best_delta is None or delta_f > best_delta:
                    best_delta = delta_f
                return cert
    diag = {
        "best_alpha": best_alpha,
        "best_delta": best_delta,
        "max_distinct_moduli": max_distinct_moduli,
        "mixed_or_cursor_skips": mixed_factor_hits,
        "explicit_N": explicit_N_report(d, r, constants),
    }
    raise NotFound("no ping-pong certificate found within the search budget", diag)


def explicit_N_report(d: int, r: int, constants: Optional[dict] = None) -> dict:
    """The paper-level bound on the word length N(d, r), kept symbolic; the
    height-gap and quasi-symmetrisation constants are user inputs."""
    out = {
        "formula": "kappa_prime_d*(1+2/gap_d)*4^(4*r*d)*exp((4*d)^5*(log d)^2/gap_d)",
        "d": d,
        "r": r,
    }
    if constants and "gap_d" in constants and "kappa_prime_d" in constants:
        import math

        gap = float(constants["gap_d"])
        kp = float(constants["kappa_prime_d"])
        out["numeric"] = kp * (1 + 2 / gap) * 4.0 ** (4 * r * d) * math.exp(
            (4 * d) ** 5 * math.log(d) ** 2 / gap
        )
    return out


# ---------------------------------------------------------------------------
# Markov operator bounds
# ---------------------------------------------------------------------------

def markov_norm_bound(F_size: int, M: int) -> Tuple[Fraction, NormValue]:
    """The overlap bound on the Markov operator of an M-ping-pong family F:
    ||sum lambda(g)||^2 <= 4 M |F|, and the averaged-operator norm bound
    2 sqrt(M / |F|)."""
    if F_size < 1 or M < 1:
        raise ValueError("need F_size, M >= 1")
    total = Fraction(4 * M * F_size)
    averaged = NormValue.from_square(INF, Fraction(4 * M, F_size))
    return total, averaged


# ---------------------------------------------------------------------------
# Quasi-regular actions and operator-norm estimation
# ---------------------------------------------------------------------------

class QRAction:
    """The action of a generated group on the orbit of a projective point,
    realizing the quasi-regular representation with the point stabilizer as
    isotropy group.  The orbit map grows lazily; indices are stable.

    With ``signed=True`` points are primitive integer vectors up to nothing
    (signs kept), giving the double cover of the projective orbit."""

    def __init__(self, generators: GenSet, base_point: ProjPoint, signed: bool = False):
        self.generators = generators
        self.signed = signed
        self.base_point = base_point
        base = self._canon(base_point.coords)
        self.orbit: Dict[tuple, int] = {base: 0}
        self.points: List[tuple] = [base]

    def _canon(self, coords):
        if self.signed:
            from math import gcd, lcm

            den = 1
            for c in coords:
                den = lcm(den, as_fraction(c).denominator)
            ints = [int(as_fraction(c) * den) for c in coords]
            g = 0
            for x in ints:
                g = gcd(g, x)
            return tuple(Fraction(x // g) for x in ints)
        return ProjPoint(coords).coords

    def index_of(self, coords) -> int:
        key = self._canon(coords)
        if key not in self.orbit:
            self.orbit[key] = len(self.points)
            self.points.append(key)
        return self.orbit[key]

    def ball(self, radius: int) -> List[int]:
        """Indices of the orbit points within the given word-length radius of
        the base point (BFS over the generator set)."""
        frontier = [0]
        seen = {0}
        for _ in range(radius):
            nxt = []
            for idx in frontier:
                pt = self.points[idx]
                for g in self.generators.elements:
                    j = self.index_of(g.apply(pt))
                    if j not in seen:
                        seen.add(j)
                        nxt.append(j)
            frontier = nxt
        return sorted(seen)


def _convolve_sym(action: QRAction, mu: Sequence[Tuple[Tuple[int, ...], Fraction]]):
    """The measure mu-check * mu as {group matrix (canonical): mass}."""
    gens = action.generators.elements
    mats = []
    for word, p in mu:
        m = MatQ.identity(action.generators.dim)
        for idx in word:
            m = m * gens[idx]
        mats.append((m, as_fraction(p)))
    total = sum(p for _, p in mats)
    if total != 1:
        raise ValueError("probabilities must sum to 1 exactly")
    nu: Dict[MatQ, Fraction] = {}
    for m1, p1 in mats:
        inv1 = m1.inverse()
        for m2, p2 in mats:
            g = MatQ((inv1 * m2).rows)
            nu[g] = nu.get(g, ZERO) + p1 * p2
    return nu


@dataclass
class QrNormReport:
    """Bracketing estimates for the quasi-regular operator norm of mu."""

    lower: NormValue
    upper: NormValue
    return_probability: Fraction
    return_steps: int
    best_ratio: Fraction
    ball_size: int
    ball_eigenvalue_bound: Fraction
    boundary_correction: Fraction

    def to_json(self):
        from .serialize import normvalue_to_json

        return {
            "lower": normvalue_to_json(self.lower),
            "upper": normvalue_to_json(self.upper),
            "return_probability": str(self.return_probability),
            "return_steps": self.return_steps,
            "best_ratio": str(self.best_ratio),
            "ball_size": self.ball_size,
            "ball_eigenvalue_bound": str(self.ball_eigenvalue_bound),
            "boundary_correction": str(self.boundary_correction),
        }


def estimate_qr_norm(
    action: QRAction,
    mu: Sequence[Tuple[Tuple[int, ...], Fraction]],
    radius: int,
    n_return: int = 10,
    power_iterations: int = 64,
    tol=Fraction(1, 10**9),
) -> QrNormReport:
    """Bracket ||pi(mu)|| on the orbit representation.

    Lower bound (rigorous): with nu = mu-check * mu compressed to the orbit
    ball with absorbing boundary, both the 2n-step return probability root
    (nu^{*2n}(class))^{1/4n} and the square root of the best consecutive
    return-probability ratio are certified lower bounds; return probabilities
    are exact rationals before the final root enclosures.

    Upper bound (estimate): an exact Collatz-Wielandt certificate for the
    top eigenvalue of the absorbed ball operator, plus a boundary coupling
    correction from the escaping-mass row sums weighted by the (approximate)
    Perron vector; capped at 1.  The correction makes this an overestimate of
    the infinite-volume norm in the regimes of interest, but the tail block
    outside the ball is not finitely certifiable.
    """
    nu = _convolve_sym(action, mu)
    ball = action.ball(radius)
    ball_set = set(ball)
    pos_of = {idx: i for i, idx in enumerate(ball)}
    size = len(ball)
    # transition tables: for each nu-atom g, src[i] = ball position of g^-1 x_i
    weights: List[Fraction] = []
    srcs: List[List[int]] = []
    for g, w in sorted(nu.items(), key=lambda kv: kv[0].rows):
        ginv = g.inverse()
        src = []
        for idx in ball:
            j = action.index_of(ginv.apply(action.points[idx]))
            src.append(pos_of.get(j, -1))
        weights.append(w)
        srcs.append(src)
    den = 1
    for w in weights:
        den = den * w.denominator // __import__("math").gcd(den, w.denominator)
    int_w = [int(w * den) for w in weights]

    # exact absorbed return probabilities q_m, m = 0..2*n_return
    mass = [0] * size
    mass[pos_of[0]] = 1
    q = [Fraction(1)]
    for m in range(1, 2 * n_return + 1):
        new = [0] * size
        for w, src in zip(int_w, srcs):
            if w == 0:
                continue
            for i in range(size):
                s = src[i]
                if s >= 0 and mass[s]:
                    new[i] += w * mass[s]
        mass = new
        q.append(Fraction(mass[pos_of[0]], den**m))
    best_ratio = max(
        (q[m] / q[m - 1] for m in range(1, len(q)) if q[m - 1] > 0),
        default=Fraction(0),
    )
    root_lo, _ = _nth_root_pair(q[2 * n_return], 4 * n_return, tol)
    ratio_lo, _ = _nth_root_pair(best_ratio, 2, tol)
    lower_val = max(root_lo, ratio_lo)
    lower = NormValue.interval(INF, lower_val, min(Fraction(1), lower_val + tol))

    # power iteration (float) for a good positive test vector
    import numpy as np

    w_f = np.array([float(w) for w in weights])
    src_np = [np.array(s, dtype=np.int64) for s in srcs]
    f = np.zeros(size)
    f[pos_of[0]] = 1.0
    for _ in range(power_iterations):
        new = np.zeros(size)
        for wf, s in zip(w_f, src_np):
            valid = s >= 0
            new[valid] += wf * f[s[valid]]
        nrm = np.linalg.norm(new)
        if nrm == 0:
            break
        f = new / nrm
    floor = max(float(np.max(f)) * 1e-9, 1e-300)
    f = np.maximum(f, floor)
    f_rat = [Fraction(x).limit_denominator(2**40) for x in f.tolist()]
    # exact Collatz-Wielandt: lambda_max(T_B) <= max (T_B f)(x) / f(x)
    tf = [ZERO] * size
    for w, src in zip(weights, srcs):
        for i in range(size):
            s = src[i]
            if s >= 0:
                tf[i] += w * f_rat[s]
    cw = max(tf[i] / f_rat[i] for i in range(size))
    # boundary coupling: escaping mass weighted by the Perron approximation
    esc = [ZERO] * size
    for w, src in zip(weights, srcs):
        for i in range(size):
            if src[i] < 0:
                esc[i] += w
    num = sum(esc[i] * f_rat[i] * f_rat[i] for i in range(size))
    denq = sum(x * x for x in f_rat)
    correction = 2 * num / denq
    upper_sq = min(Fraction(1), cw + correction)
    _, upper_hi = _nth_root_pair(upper_sq, 2, tol)
    upper = NormValue.interval(INF, max(ZERO, upper_hi - tol), min(Fraction(1), upper_hi))
    return QrNormReport(
        lower=lower,
        upper=upper,
        return_probability=q[2 * n_return],
        return_steps=2 * n_return,
        best_ratio=best_ratio,
        ball_size=size,
        ball_eigenvalue_bound=cw,
        boundary_correction=correction,
    )


def _nth_root_pair(x: Fraction, k: int, tol: Fraction):
    from .qmath import nth_root_enclosure

    if x <= 0:
        return ZERO, ZERO
    return nth_root_enclosure(x, k, tol)
