"""Constructive escape from subvarieties and weak general position.

escape_orbit runs the breadth-first escape argument for a polynomial f on the
orbit of a vector: either a witness with f != 0 appears within the
dimension-count bound M(D, deg f) - 1, or the orbit data certifies that f
vanishes identically on it (span stabilized and f restricted to the span is
zero, or the whole orbit was exhausted).

weak_general_position runs the greedy conjugator construction: at each step
the nonzero intersections of the current translate families produce witness
vectors, an escape polynomial is assembled from annihilator quadratic forms
composed with the adjugate action, and escape_orbit provides the next
conjugator.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import polys
from .errors import BudgetExceeded, Inconclusive, PositionUnreachable
from .heights import GenSet
from .linalg import MatQ, Subspace, kernel_basis
from .qmath import ZERO, ONE, as_fraction


# ---------------------------------------------------------------------------
# Sparse multivariate polynomials
# ---------------------------------------------------------------------------

class MultiPoly:
    """Sparse polynomial in n variables with exact rational coefficients.

    Terms map exponent tuples to coefficients.  Doubles as a polynomial on
    d x d matrices via row-major flattening of the entries.
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms=None):
        self.nvars = nvars
        self.terms: Dict[Tuple[int, ...], Fraction] = {}
        if terms:
            for exps, c in (terms.items() if isinstance(terms, dict) else terms):
                c = as_fraction(c)
                if c != 0:
                    exps = tuple(exps)
                    if len(exps) != nvars:
                        raise ValueError("exponent arity mismatch")
                    self.terms[exps] = self.terms.get(exps, ZERO) + c
            self.terms = {e: c for e, c in self.terms.items() if c != 0}

    @staticmethod
    def constant(nvars: int, c) -> "MultiPoly":
        return MultiPoly(nvars, {tuple([0] * nvars): as_fraction(c)})

    @staticmethod
    def coordinate(nvars: int, i: int) -> "MultiPoly":
        e = [0] * nvars
        e[i] = 1
        return MultiPoly(nvars, {tuple(e): ONE})

    @staticmethod
    def linear_form(coeffs) -> "MultiPoly":
        coeffs = [as_fraction(c) for c in coeffs]
        n = len(coeffs)
        terms = {}
        for i, c in enumerate(coeffs):
            if c != 0:
                e = [0] * n
                e[i] = 1
                terms[tuple(e)] = c
        return MultiPoly(n, terms)

    @property
    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(e) for e in self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def is_homogeneous(self) -> bool:
        degs = {sum(e) for e in self.terms}
        return len(degs) <= 1

    def eval(self, point: Sequence) -> Fraction:
        point = [as_fraction(x) for x in point]
        total = ZERO
        for exps, c in self.terms.items():
            term = c
            for x, e in zip(point, exps):
                if e:
                    term *= x**e
            total += term
        return total

    def eval_matrix(self, A: MatQ) -> Fraction:
        return self.eval([x for row in A.rows for x in row])

    def __add__(self, other):
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, ZERO) + c
        return MultiPoly(self.nvars, out)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return MultiPoly(self.nvars, {e: c * as_fraction(other) for e, c in self.terms.items()})
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, ZERO) + c1 * c2
        return MultiPoly(self.nvars, out)

    def __sub__(self, other):
        return self + (other * -1)

    def to_json(self):
        return [
            {"exponents": list(e), "coeff": f"{c.numerator}/{c.denominator}"}
            for e, c in sorted(self.terms.items())
        ]

    @staticmethod
    def from_json(nvars: int, data) -> "MultiPoly":
        terms = {}
        for item in data:
            terms[tuple(item["exponents"])] = Fraction(item["coeff"])
        return MultiPoly(nvars, terms)

    def __repr__(self):
        return f"MultiPoly({self.nvars} vars, {len(self.terms)} terms, deg {self.degree})"


class CallablePoly:
    """Polynomial given by an evaluator plus a degree bound.

    Used where expanding to monomials would blow up (adjugate compositions);
    escape_orbit only needs evaluation, the degree and homogeneity."""

    __slots__ = ("nvars", "degree", "_fn", "homogeneous")

    def __init__(self, nvars, degree, fn, homogeneous=False):
        self.nvars = nvars
        self.degree = degree
        self._fn = fn
        self.homogeneous = homogeneous

    def is_homogeneous(self):
        return self.homogeneous

    @property
    def is_zero(self):
        return False  # unknown; escape treats it as a generic polynomial

    def eval(self, point):
        return self._fn([as_fraction(x) for x in point])


def m_of_dm(d: int, m: int) -> int:
    """Dimension of the space of polynomials of degree <= m in d variables."""
    if d < 1 or m < 1:
        raise ValueError("d, m >= 1 required")
    return comb(m + d, d)


# ---------------------------------------------------------------------------
# Orbit escape
# ---------------------------------------------------------------------------

@dataclass
class EscapeResult:
    """Outcome of the orbit escape search.

    found: a witness with f != 0 exists; then n is the first layer and
    witness_word / witness_point identify it.  Otherwise the structured
    exhaustion certificate applies: the layer bound was reached (or the span
    stabilized with f vanishing on it, or the orbit itself was exhausted).
    """

    found: bool
    n: Optional[int]
    witness_word: Optional[Tuple[int, ...]]
    witness_point: Optional[Tuple[Fraction, ...]]
    bound: int
    layers_run: int
    span_dims: List[int]
    certificate: Optional[str] = None
    points_seen: int = 0


def _canonical_projective(vec):
    from math import gcd, lcm

    den = 1
    for c in vec:
        den = lcm(den, c.denominator)
    ints = [int(c * den) for c in vec]
    g = 0
    for x in ints:
        g = gcd(g, x)
    if g == 0:
        return tuple(ints)
    ints = [x // g for x in ints]
    first = next((x for x in ints if x != 0), 0)
    if first < 0:
        ints = [-x for x in ints]
    return tuple(Fraction(x) for x in ints)


def _zero_on_span(f, span_rows, grid_budget: int) -> Optional[bool]:
    """Deterministic grid test for f == 0 on the span; None if too large.

    A polynomial of total degree m vanishing on {0..m}^k in affine
    coordinates of the span must vanish on the span."""
    m = max(f.degree, 1)
    k = len(span_rows)
    if k == 0:
        return True
    if (m + 1) ** k > grid_budget:
        return None
    for combo in itertools.product(range(m + 1), repeat=k):
        pt = [sum(as_fraction(t) * row[i] for t, row in zip(combo, span_rows))
              for i in range(len(span_rows[0]))]
        if f.eval(pt) != 0:
            return False
    return True


def escape_orbit(
    sigma: GenSet,
    u: Sequence,
    f,
    point_budget: int = 500_000,
    grid_budget: int = 200_000,
) -> EscapeResult:
    """BFS over sigma^n u for the least n with some f(w) != 0, w in sigma^n u.

    Requires the identity in sigma, so layers are nested.  Points are
    deduplicated by exact value (projectively, when f is homogeneous).  If no
    witness exists through layer M(D, deg f) - 1, that exhausts the search by
    the dimension-count argument and a structured certificate is returned;
    the certificate is strengthened when the span stabilizes and f provably
    vanishes on it, or when the orbit itself is finite and fully enumerated.
    """
    if not sigma.contains_identity:
        raise ValueError("escape requires the identity in the acting set")
    u = tuple(as_fraction(x) for x in u)
    D = len(u)
    if any(m.dim != D for m in sigma.elements):
        raise ValueError("acting matrices must match the vector dimension")
    homogeneous = bool(getattr(f, "is_homogeneous")()) if callable(
        getattr(f, "is_homogeneous", None)
    ) else False
    key_of = _canonical_projective if homogeneous else (lambda v: tuple(v))
    mdeg = max(f.degree, 1)
    bound = m_of_dm(D, mdeg) - 1
    seen = {key_of(u)}
    frontier = [(u, ())]
    span_rows, _ = _rref_rows([u])
    span_dims = [len(span_rows)]
    points = 1
    if f.eval(u) != 0:
        return EscapeResult(True, 0, (), u, bound, 0, span_dims, points_seen=points)
    for n in range(1, bound + 1):
        new_frontier = []
        for vec, word in frontier:
            for gi, g in enumerate(sigma.elements):
                w = g.apply(vec)
                key = key_of(w)
                if key in seen:
                    continue
                seen.add(key)
                points += 1
                if points > point_budget:
                    raise BudgetExceeded(f"escape explored more than {point_budget} points")
                word2 = word + (gi,)
                if f.eval(w) != 0:
                    span_rows, _ = _rref_rows(list(span_rows) + [w])
                    span_dims.append(len(span_rows))
                    return EscapeResult(True, n, word2, w, bound, n, span_dims, points_seen=points)
                new_frontier.append((w, word2))
        old_dim = len(span_rows)
        for vec, _ in new_frontier:
            span_rows, _ = _rref_rows(list(span_rows) + [vec])
        span_dims.append(len(span_rows))
        if not new_frontier:
            return EscapeResult(
                False, None, None, None, bound, n, span_dims,
                certificate="orbit exhausted; f vanishes on every orbit point",
                points_seen=points,
            )
        if len(span_rows) == old_dim:
            z = _zero_on_span(f, span_rows, grid_budget)
            if z is True:
                return EscapeResult(
                    False, None, None, None, bound, n, span_dims,
                    certificate="span stabilized and f vanishes on it",
                    points_seen=points,
                )
        frontier = new_frontier
    return EscapeResult(
        False, None, None, None, bound, bound, span_dims,
        certificate="layer bound M(D, deg f) - 1 reached with f == 0 throughout",
        points_seen=points,
    )


def _rref_rows(rows):
    from .linalg import rref

    return rref([list(r) for r in rows])


# ---------------------------------------------------------------------------
# Variety escape (matrices under left multiplication)
# ---------------------------------------------------------------------------

def _left_mult_lift(s: MatQ) -> MatQ:
    """The d^2 x d^2 matrix of X -> sX on row-major vec(X)."""
    d = s.dim
    D = d * d
    rows = [[ZERO] * D for _ in range(D)]
    for i in range(d):
        for j in range(d):
            for k in range(d):
                rows[i * d + j][k * d + j] = s.rows[i][k]
    return MatQ(rows)


@dataclass
class VarietyEscape:
    """Result of escape_variety: least k with S^k not inside the variety."""

    found: bool
    k: Optional[int]
    witness_word: Optional[Tuple[int, ...]]
    witness: Optional[MatQ]
    bound_search: int       # M(d^2, deg f) - 1 from the linearization
    bound_lemma: int        # N^(d^2) form of the escape-lemma constant
    layers_run: int
    certificate: Optional[str] = None


def escape_variety(S: GenSet, f, point_budget: int = 500_000) -> VarietyEscape:
    """Least k such that some product of k generators leaves {f = 0}.

    Runs escape_orbit with the matrix space as the vector space, the identity
    matrix as base point, and {1} union S acting by left multiplication."""
    d = S.dim
    sigma_mats = [MatQ.identity(d)] + [MatQ(m.rows) for m in S.elements]
    lifted = [_left_mult_lift(m) for m in sigma_mats]
    for i, m in enumerate(lifted):
        lifted[i] = m.with_word((i,))
    sigma = GenSet(lifted, symmetric=False, contains_identity=True)
    u = tuple(x for row in MatQ.identity(d).rows for x in row)
    res = escape_orbit(sigma, u, f, point_budget=point_budget)
    N = max(3, f.degree)
    bound_lemma = N ** (d * d)
    if not res.found:
        return VarietyEscape(False, None, None, None, res.bound, bound_lemma,
                             res.layers_run, res.certificate)
    # escape applies letters on the left, so the product reads the word backwards
    s_word = tuple(i - 1 for i in reversed(res.witness_word) if i != 0)
    witness = MatQ.identity(d, word=())
    for idx in s_word:
        witness = witness * S.elements[idx]
    witness = witness.with_word(s_word)
    return VarietyEscape(True, res.n, s_word, witness, res.bound, bound_lemma, res.layers_run)


def coset_escape_search(
    S: GenSet,
    tests: Sequence,
    k_max: int,
    product_length: int = 3,
    budget: int = 200_000,
) -> int:
    """Least k <= k_max such that bounded products of S^k S^-k falsify every
    test polynomial.  A falsification harness, not a density decision
    procedure; raises Inconclusive when the budget runs out."""
    if not tests:
        raise ValueError("no test polynomials supplied")
    d = S.dim
    Sk = {MatQ.identity(d)}
    for k in range(1, k_max + 1):
        Sk = {a * b for a in Sk for b in S.elements}
        Sik = {m.inverse() for m in Sk}
        T = sorted({a * b for a in Sk for b in Sik}, key=lambda m: m.rows)
        if len(T) * len(tests) > budget:
            raise BudgetExceeded("coset escape enumeration too large")
        words = {MatQ.identity(d)}
        produced = set(words)
        ok = True
        remaining = list(tests)
        for _ in range(product_length):
            words = {a * b for a in words for b in T}
            produced |= words
            if len(produced) > budget:
                break
            remaining = [F for F in remaining
                         if all(F.eval_matrix(m) == 0 for m in produced)]
            if not remaining:
                break
        if not remaining:
            return k
    raise Inconclusive(k_max)


# ---------------------------------------------------------------------------
# Weak general position
# ---------------------------------------------------------------------------

def check_weak_general_position(translates: Sequence[Subspace]) -> bool:
    """codim of every subfamily intersection >= min(dim V, |I|), subspaces
    pairwise distinct; exact rank computations."""
    if len(set(translates)) != len(translates):
        return False
    d = translates[0].ambient_dim
    idx = range(len(translates))
    for r in range(1, len(translates) + 1):
        for I in itertools.combinations(idx, r):
            cur = translates[I[0]]
            for i in I[1:]:
                cur = cur.intersect(translates[i])
            if cur.ambient_dim - cur.dim < min(d, len(I)):
                return False
    return True


def _annihilator_form(H: Subspace) -> Callable:
    """Quadratic form vanishing exactly on H (sum of squares of a basis of
    linear forms annihilating H)."""
    d = H.ambient_dim
    forms = kernel_basis([list(r) for r in H.basis], d) if not H.is_zero else \
        [tuple(ONE if j == i else ZERO for j in range(d)) for i in range(d)]

    def q(vec):
        tot = ZERO
        for ell in forms:
            val = sum(a * b for a, b in zip(ell, vec))
            tot += val * val
        return tot

    return q


def _adjugate(A: MatQ) -> MatQ:
    d = A.dim
    if d == 1:
        return MatQ([[ONE]])
    rows = []
    for i in range(d):
        row = []
        for j in range(d):
            minor = [
                [A.rows[r][c] for c in range(d) if c != i]
                for r in range(d) if r != j
            ]
            sign = -1 if (i + j) % 2 else 1
            row.append(sign * polys.det_rows(minor))
        rows.append(row)
    return MatQ(rows)


@dataclass
class WgpStepAudit:
    step: int
    factor_count: int
    factor_bound: int      # 2 * C(r-1, d-1) from the degree remark
    poly_degree: int
    escape_layer: int


@dataclass
class WgpResult:
    conjugators: List[MatQ]
    audits: List[WgpStepAudit]


def weak_general_position(
    S: GenSet,
    Hplus: Subspace,
    Hminus: Subspace,
    r: int,
    M_cap: int = 300_000,
) -> WgpResult:
    """Conjugators g_1..g_r in the group generated by S such that both
    translate families {g_i H+} and {g_i H-} are distinct and in weak general
    position.  Follows the greedy induction: g_1 = 1; each next conjugator
    escapes the variety assembled from the nonzero intersection witnesses.

    Raises PositionUnreachable when the escape search exhausts, which signals
    that H+ or H- likely contains an invariant subspace.
    """
    d = S.dim
    for H in (Hplus, Hminus):
        if H.is_zero or H.is_full:
            raise ValueError("H+ and H- must be nonzero proper subspaces")
    gs: List[MatQ] = [MatQ.identity(d, word=())]
    audits: List[WgpStepAudit] = []
    qplus, qminus = _annihilator_form(Hplus), _annihilator_form(Hminus)
    while len(gs) < r:
        factors = []
        for eps, H, q in (("+", Hplus, qplus), ("-", Hminus, qminus)):
            translates = [H.apply(g) for g in gs]
            for rr in range(1, len(gs) + 1):
                for I in itertools.combinations(range(len(gs)), rr):
                    cur = translates[I[0]]
                    for i in I[1:]:
                        cur = cur.intersect(translates[i])
                    if not cur.is_zero:
                        factors.append((q, cur.basis[0]))
        degree = 2 * (d - 1) * max(len(factors), 1)

        def f_eval(point, _factors=tuple(factors), _d=d):
            X = MatQ([point[i * _d:(i + 1) * _d] for i in range(_d)])
            adj = _adjugate(X)
            total = ONE
            for q, v in _factors:
                total *= q(adj.apply(v))
                if total == 0:
                    return ZERO
            return total

        f = CallablePoly(d * d, degree, f_eval, homogeneous=True)
        res = escape_variety(S, f, point_budget=M_cap)
        if not res.found:
            raise PositionUnreachable(M_cap)
        g_new = res.witness
        gs.append(g_new)
        audits.append(
            WgpStepAudit(
                step=len(gs),
                factor_count=len(factors),
                factor_bound=2 * comb(max(r - 1, 1), max(d - 1, 1)),
                poly_degree=degree,
                escape_layer=res.k,
            )
        )
        fams_ok = check_weak_general_position([Hplus.apply(g) for g in gs]) and \
            check_weak_general_position([Hminus.apply(g) for g in gs])
        if not fams_ok:
            raise PositionUnreachable(
                M_cap, "escape witness failed the exact position check"
            )
    return WgpResult(gs, audits)
