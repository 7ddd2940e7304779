"""Exact rational linear algebra.

Matrices and subspaces over Q, Z_(p)-lattice orthogonality and orthogonal
complements via local Smith reduction, division-free characteristic
polynomials, Newton polygons, and the attracting/repelling eigensplit of a
matrix at a place relative to a cursor omega.

All operations are pure functions over immutable values.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from . import polys
from .errors import CursorOnEigenvalue, InseparableAtTolerance, MixedFactor
from .places import INF, NormValue, Place, norm_max, norm_min
from .qmath import ZERO, ONE, as_fraction, vp

_DEFAULT_TOL = Fraction(1, 10**12)


# ---------------------------------------------------------------------------
# Matrices
# ---------------------------------------------------------------------------

class MatQ:
    """Immutable square matrix over Q with an optional word label.

    The word records how the matrix was produced as a product of generators
    (indices into some generator list); ``verify_word`` re-multiplies it.
    """

    __slots__ = ("rows", "word", "_hash")

    def __init__(self, rows, word: Optional[Tuple[int, ...]] = None):
        rows = tuple(tuple(as_fraction(x) for x in r) for r in rows)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ValueError("square matrix required")
        self.rows = rows
        self.word = tuple(word) if word is not None else None
        self._hash = None

    @property
    def dim(self) -> int:
        return len(self.rows)

    @staticmethod
    def identity(n: int, word=()) -> "MatQ":
        return MatQ(
            [[ONE if i == j else ZERO for j in range(n)] for i in range(n)], word=word
        )

    @staticmethod
    def diagonal(entries) -> "MatQ":
        entries = [as_fraction(e) for e in entries]
        n = len(entries)
        return MatQ([[entries[i] if i == j else ZERO for j in range(n)] for i in range(n)])

    def __mul__(self, other: "MatQ") -> "MatQ":
        n = self.dim
        a, b = self.rows, other.rows
        rows = [
            tuple(sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n))
            for i in range(n)
        ]
        word = None
        if self.word is not None and other.word is not None:
            word = self.word + other.word
        return MatQ(rows, word=word)

    def apply(self, vec: Sequence[Fraction]) -> Tuple[Fraction, ...]:
        n = self.dim
        v = [as_fraction(x) for x in vec]
        return tuple(sum(self.rows[i][k] * v[k] for k in range(n)) for i in range(n))

    def transpose(self) -> "MatQ":
        n = self.dim
        return MatQ([[self.rows[j][i] for j in range(n)] for i in range(n)])

    def det(self) -> Fraction:
        return polys.det_rows(self.rows)

    def inverse(self) -> "MatQ":
        n = self.dim
        aug = [list(self.rows[i]) + [ONE if j == i else ZERO for j in range(n)] for i in range(n)]
        for c in range(n):
            piv = next((r for r in range(c, n) if aug[r][c] != 0), None)
            if piv is None:
                raise ZeroDivisionError("singular matrix")
            aug[c], aug[piv] = aug[piv], aug[c]
            inv = 1 / aug[c][c]
            aug[c] = [x * inv for x in aug[c]]
            for r in range(n):
                if r != c and aug[r][c] != 0:
                    t = aug[r][c]
                    aug[r] = [x - t * y for x, y in zip(aug[r], aug[c])]
        return MatQ([r[self.dim:] for r in aug])

    def __pow__(self, n: int) -> "MatQ":
        if n < 0:
            return self.inverse() ** (-n)
        out = MatQ.identity(self.dim)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def scale(self, a) -> "MatQ":
        a = as_fraction(a)
        return MatQ([[x * a for x in r] for r in self.rows])

    def __eq__(self, other):
        return isinstance(other, MatQ) and self.rows == other.rows

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.rows)
        return self._hash

    def __repr__(self):
        return f"MatQ({[[str(x) for x in r] for r in self.rows]})"

    def with_word(self, word) -> "MatQ":
        return MatQ(self.rows, word=tuple(word))

    def verify_word(self, generators: Sequence["MatQ"]) -> bool:
        """Exact check that multiplying the word reproduces the entries."""
        if self.word is None:
            return True
        prod = MatQ.identity(self.dim)
        for idx in self.word:
            prod = prod * MatQ(generators[idx].rows)
        return prod.rows == self.rows


def char_poly(A: MatQ) -> polys.Poly:
    """Exact characteristic polynomial det(xI - A), division-free."""
    return polys.charpoly_rows(A.rows)


def poly_at_matrix(f: polys.Poly, A: MatQ) -> MatQ:
    """Evaluate a rational polynomial at a matrix (Horner)."""
    n = A.dim
    out = MatQ.identity(n).scale(0)
    for c in reversed(f):
        out = out * A
        out = MatQ([[out.rows[i][j] + (c if i == j else 0) for j in range(n)] for i in range(n)])
    return out


# ---------------------------------------------------------------------------
# Row reduction and subspaces
# ---------------------------------------------------------------------------

def rref(rows: Sequence[Sequence[Fraction]]):
    """Reduced row echelon form; returns (rows_tuple, pivot_columns)."""
    M = [list(map(as_fraction, r)) for r in rows]
    if not M:
        return (), ()
    ncols = len(M[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = 1 / M[r][c]
        M[r] = [x * inv for x in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                t = M[i][c]
                M[i] = [x - t * y for x, y in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == len(M):
            break
    return tuple(tuple(row) for row in M[:r]), tuple(pivots)


def kernel_basis(rows, ncols=None):
    """Basis of the right kernel {x : rows @ x = 0} of a rational matrix."""
    rows = [list(map(as_fraction, r)) for r in rows]
    if not rows:
        if ncols is None:
            raise ValueError("need ncols for an empty matrix")
        return [tuple(ONE if j == i else ZERO for j in range(ncols)) for i in range(ncols)]
    ncols = len(rows[0])
    red, pivots = rref(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [ZERO] * ncols
        vec[fc] = ONE
        for i, pc in enumerate(pivots):
            vec[pc] = -red[i][fc]
        basis.append(tuple(vec))
    return basis


class Subspace:
    """A subspace of Q^d: canonical reduced-echelon basis plus cached Pluecker
    coordinates of the basis wedge in the standard e_I basis."""

    __slots__ = ("ambient_dim", "basis", "_pluecker")

    def __init__(self, ambient_dim: int, rows=()):
        self.ambient_dim = ambient_dim
        red, _ = rref([list(r) for r in rows]) if rows else ((), ())
        if red and len(red[0]) != ambient_dim:
            raise ValueError("row length mismatch")
        self.basis = red
        self._pluecker = None

    @staticmethod
    def span(ambient_dim: int, *vectors) -> "Subspace":
        return Subspace(ambient_dim, [tuple(map(as_fraction, v)) for v in vectors])

    @staticmethod
    def zero(ambient_dim: int) -> "Subspace":
        return Subspace(ambient_dim, ())

    @staticmethod
    def full(ambient_dim: int) -> "Subspace":
        return Subspace(
            ambient_dim,
            [[ONE if i == j else ZERO for j in range(ambient_dim)] for i in range(ambient_dim)],
        )

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def codim(self) -> int:
        return self.ambient_dim - self.dim

    @property
    def is_zero(self) -> bool:
        return self.dim == 0

    @property
    def is_full(self) -> bool:
        return self.dim == self.ambient_dim

    def pluecker(self) -> Tuple[Fraction, ...]:
        """All dim x dim minors of the basis matrix, indexed by sorted I."""
        if self._pluecker is None:
            r = self.dim
            if r == 0:
                self._pluecker = (ONE,)
            else:
                coords = []
                for cols in itertools.combinations(range(self.ambient_dim), r):
                    sub = [[self.basis[i][c] for c in cols] for i in range(r)]
                    coords.append(polys.det_rows(sub))
                self._pluecker = tuple(coords)
        return self._pluecker

    def contains_vector(self, vec) -> bool:
        aug = list(self.basis) + [tuple(map(as_fraction, vec))]
        red, _ = rref(aug)
        return len(red) == self.dim

    def contains(self, other: "Subspace") -> bool:
        return all(self.contains_vector(v) for v in other.basis)

    def intersect(self, other: "Subspace") -> "Subspace":
        """Exact intersection via the kernel of the stacked coordinate map."""
        if self.ambient_dim != other.ambient_dim:
            raise ValueError("ambient mismatch")
        if self.is_zero or other.is_zero:
            return Subspace.zero(self.ambient_dim)
        # x = a . basisA = b . basisB; solve [basisA^T | -basisB^T] kernel
        d = self.ambient_dim
        ra, rb = self.dim, other.dim
        rows = [
            [self.basis[i][k] for i in range(ra)] + [-other.basis[j][k] for j in range(rb)]
            for k in range(d)
        ]
        vecs = []
        for ker in kernel_basis(rows, ra + rb):
            a = ker[:ra]
            vec = tuple(
                sum(a[i] * self.basis[i][k] for i in range(ra)) for k in range(d)
            )
            if any(x != 0 for x in vec):
                vecs.append(vec)
        return Subspace(d, vecs)

    def add(self, other: "Subspace") -> "Subspace":
        if self.ambient_dim != other.ambient_dim:
            raise ValueError("ambient mismatch")
        return Subspace(self.ambient_dim, list(self.basis) + list(other.basis))

    def apply(self, A: MatQ) -> "Subspace":
        return Subspace(self.ambient_dim, [A.apply(v) for v in self.basis])

    def __eq__(self, other):
        return (
            isinstance(other, Subspace)
            and self.ambient_dim == other.ambient_dim
            and self.basis == other.basis
        )

    def __hash__(self):
        return hash((self.ambient_dim, self.basis))

    def __repr__(self):
        return f"Subspace(dim={self.dim} of {self.ambient_dim})"


# ---------------------------------------------------------------------------
# Z_(p) lattice reduction: saturation, Smith exponents, orthogonality
# ---------------------------------------------------------------------------

def _p_content_exp(row, p) -> Optional[int]:
    vals = [vp(x, p) for x in row if x != 0]
    return min(vals) if vals else None


def saturated_basis_p(rows, p: int, ambient_dim: int):
    """Z_(p)-basis of span_Q(rows) intersected with Z_(p)^d.

    Iterated scale-to-unit-content + min-valuation echelon reduction; each
    rescale strictly decreases total valuation, so this terminates with an
    echelon basis whose pivots are p-units (hence a saturated summand).
    """
    work = []
    for r in rows:
        r = [as_fraction(x) for x in r]
        if any(x != 0 for x in r):
            e = _p_content_exp(r, p)
            work.append([x / Fraction(p) ** e for x in r])
    changed = True
    while changed:
        changed = False
        # echelon over Z_(p): pick min-valuation pivot in each column sweep
        out = []
        rows_left = [row[:] for row in work]
        used_cols = []
        while rows_left:
            # find entry of minimal valuation among all remaining rows/cols
            best = None
            for i, row in enumerate(rows_left):
                for c in range(ambient_dim):
                    if row[c] == 0 or c in used_cols:
                        continue
                    val = vp(row[c], p)
                    if best is None or val < best[0]:
                        best = (val, i, c)
            if best is None:
                break
            _, i, c = best
            pivot_row = rows_left.pop(i)
            pv = pivot_row[c]
            for row in rows_left:
                if row[c] != 0:
                    t = row[c] / pv
                    for k in range(ambient_dim):
                        row[k] -= t * pivot_row[k]
            out.append(pivot_row)
            used_cols.append(c)
            # rescale any row that lost content
            for row in rows_left:
                if any(x != 0 for x in row):
                    e = _p_content_exp(row, p)
                    if e != 0:
                        changed = True
                        for k in range(ambient_dim):
                            row[k] /= Fraction(p) ** e
        work = [r for r in out if any(x != 0 for x in r)] + [
            r for r in rows_left if any(x != 0 for x in r)
        ]
    return [tuple(r) for r in work]


def smith_exponents_p(rows, p: int) -> List[int]:
    """Elementary-divisor exponents over Z_(p) (full min-valuation pivoting)."""
    M = [list(map(as_fraction, r)) for r in rows]
    M = [r for r in M if any(x != 0 for x in r)]
    exps = []
    while M and any(any(x != 0 for x in r) for r in M):
        best = None
        for i, row in enumerate(M):
            for j, x in enumerate(row):
                if x != 0:
                    val = vp(x, p)
                    if best is None or val < best[0]:
                        best = (val, i, j)
        if best is None:
            break
        val, i, j = best
        exps.append(val)
        piv_row = M.pop(i)
        pv = piv_row[j]
        for row in M:
            if row[j] != 0:
                t = row[j] / pv
                for k in range(len(row)):
                    row[k] -= t * piv_row[k]
        for row in M:
            row.pop(j)
        M = [r for r in M if r]
    return sorted(exps)


def is_orthogonal(U: Subspace, W: Subspace, p: int) -> bool:
    """Orthogonality of subspaces at the finite place p.

    True iff U and W meet trivially and U_O + W_O is a direct summand of the
    lattice: the stacked saturated bases must have full rank and unit
    elementary divisors over Z_(p).
    """
    if U.ambient_dim != W.ambient_dim:
        raise ValueError("ambient mismatch")
    if U.is_zero or W.is_zero:
        return True
    if not U.intersect(W).is_zero:
        return False
    d = U.ambient_dim
    bu = saturated_basis_p(U.basis, p, d)
    bw = saturated_basis_p(W.basis, p, d)
    exps = smith_exponents_p(bu + bw, p)
    return len(exps) == U.dim + W.dim and all(e == 0 for e in exps)


def orthogonal_complement_p(U: Subspace, V: Subspace, p: int) -> Subspace:
    """W with V = U (+) W, orthogonal at p.

    Completes a saturated basis of U inside the saturated lattice basis of V
    via Smith reduction with tracked column operations.
    """
    if not V.contains(U):
        raise ValueError("U must be contained in V")
    d = U.ambient_dim
    if U.is_zero:
        return V
    if U.dim == V.dim:
        return Subspace.zero(d)
    BV = saturated_basis_p(V.basis, p, d)
    BU = saturated_basis_p(U.basis, p, d)
    k, r = len(BV), len(BU)
    # coordinates of BU rows in terms of BV rows (entries lie in Z_(p))
    C = []
    for u in BU:
        sol = _solve_in_span(BV, u)
        C.append(sol)
    # Smith over Z_(p) on C with column ops mirrored inversely onto BV
    C = [list(row) for row in C]
    BVw = [list(row) for row in BV]
    done_rows = []
    col_of = list(range(k))
    for step in range(r):
        best = None
        for i in range(step, r):
            for j in range(step, k):
                if C[i][j] != 0:
                    val = vp(C[i][j], p)
                    if best is None or val < best[0]:
                        best = (val, i, j)
        if best is None:
            raise ArithmeticError("dependent rows in complement computation")
        val, bi, bj = best
        if val != 0:
            raise ArithmeticError("U is not saturated inside V")
        if bi != step:
            C[step], C[bi] = C[bi], C[step]
        if bj != step:
            for row in C:
                row[step], row[bj] = row[bj], row[step]
            BVw[step], BVw[bj] = BVw[bj], BVw[step]
        pv = C[step][step]
        # scale column to make pivot 1: col /= pv  <-> BV row *= pv
        for row in C:
            row[step] /= pv
        BVw[step] = [x * pv for x in BVw[step]]
        # clear the pivot row rightwards with column ops (mirror on BV rows)
        for j in range(k):
            if j != step and C[step][j] != 0:
                t = C[step][j]
                for row in C:
                    row[j] -= t * row[step]
                # col_j -= t*col_step  <->  BV row_step += t * BV row_j
                BVw[step] = [x + t * y for x, y in zip(BVw[step], BVw[j])]
        # clear the pivot column downwards with row ops (no BV effect)
        for i in range(r):
            if i != step and C[i][step] != 0:
                t = C[i][step]
                C[i] = [x - t * y for x, y in zip(C[i], C[step])]
    W = Subspace(d, [tuple(BVw[i]) for i in range(r, k)])
    return W


def _solve_in_span(basis_rows, target):
    """Coefficients c with sum c_i basis_i == target (exact; raises if outside)."""
    d = len(target)
    k = len(basis_rows)
    rows = [[basis_rows[i][j] for i in range(k)] + [target[j]] for j in range(d)]
    red, pivots = rref(rows)
    sol = [ZERO] * k
    for i, pc in enumerate(pivots):
        if pc == k:
            raise ArithmeticError("vector outside span")
        sol[pc] = red[i][k]
    return sol


def orthogonal_complement(U: Subspace, V: Subspace, place) -> Subspace:
    """Orthogonal complement of U inside V.

    At a finite place this is the Z_(p)-lattice complement; at the archimedean
    place the Euclidean one (exact, via the standard inner product on Q^d).
    """
    if isinstance(place, int):
        place = Place(place)
    if place.is_finite:
        return orthogonal_complement_p(U, V, place.prime)
    if U.is_zero:
        return V
    d = U.ambient_dim
    # {x in V : <x, u> = 0 for u in U}: solve gram system in V-coordinates
    rows = [
        [sum(u[k] * bv[k] for k in range(d)) for bv in V.basis] for u in U.basis
    ]
    vecs = []
    for ker in kernel_basis(rows, V.dim):
        vec = tuple(
            sum(ker[i] * V.basis[i][k] for i in range(V.dim)) for k in range(d)
        )
        vecs.append(vec)
    return Subspace(d, vecs)


# ---------------------------------------------------------------------------
# Newton polygons and eigenvalue moduli
# ---------------------------------------------------------------------------

def newton_polygon(f: polys.Poly, p: int):
    """Slope/multiplicity pairs of the lower hull of {(i, v_p(a_i))}.

    Convention: slope s means |root|_p = p**s (v_p(root) = -s).  Zero roots
    are stripped first and do not appear.
    """
    nzeros, g = polys.strip_zero_roots(f)
    return polys.newton_polygon_slopes(g, p)


def _cmp_ppow_rational(p: int, s: Fraction, omega: Fraction) -> int:
    """Compare p**s with the positive rational omega exactly."""
    b = s.denominator
    lhs = Fraction(p) ** s.numerator
    rhs = omega**b
    return -1 if lhs < rhs else (1 if lhs > rhs else 0)


def _complex_pair_moduli(q: polys.Poly, tol: Fraction):
    """Modulus enclosures for the conjugate pairs of complex roots of the
    Q-irreducible q (one enclosure per pair; each carries multiplicity 2)."""
    import sympy

    x = sympy.Symbol("x")
    expr = sum(sympy.Rational(c.numerator, c.denominator) * x**i for i, c in enumerate(q))
    roots = sympy.Poly(expr, x, domain="QQ").all_roots(radicals=False)
    complex_roots = [r for r in roots if not r.is_real]
    out = []
    for root in complex_roots:
        # refine until the imaginary part is sign-definite, then keep only the
        # upper-half-plane representative of each conjugate pair
        prec = max(Fraction(1, 10**6), tol / 8)
        while True:
            approx = root.eval_rational(
                dx=sympy.Rational(prec.numerator, prec.denominator),
                dy=sympy.Rational(prec.numerator, prec.denominator),
            )
            re_s, im_s = approx.as_real_imag()
            re = Fraction(int(re_s.p), int(re_s.q))
            im = Fraction(int(im_s.p), int(im_s.q))
            if im - prec > 0 or im + prec < 0:
                break
            prec /= 16
        if im < 0:
            continue
        lo, hi = _modulus_box(re, im, prec)
        while hi - lo > tol:
            prec /= 16
            approx = root.eval_rational(
                dx=sympy.Rational(prec.numerator, prec.denominator),
                dy=sympy.Rational(prec.numerator, prec.denominator),
            )
            re_s, im_s = approx.as_real_imag()
            re = Fraction(int(re_s.p), int(re_s.q))
            im = Fraction(int(im_s.p), int(im_s.q))
            lo, hi = _modulus_box(re, im, prec)
        out.append((lo, hi))
    if 2 * len(out) != len(complex_roots):
        raise ArithmeticError("conjugate pairing failed")
    return out


def _modulus_box(re: Fraction, im: Fraction, err: Fraction):
    from .qmath import sqrt_enclosure

    lo_sq = max(ZERO, abs(re) - err) ** 2 + max(ZERO, abs(im) - err) ** 2
    hi_sq = (abs(re) + err) ** 2 + (abs(im) + err) ** 2
    lo, _ = sqrt_enclosure(lo_sq, err if err > 0 else Fraction(1, 10**9))
    _, hi = sqrt_enclosure(hi_sq, err if err > 0 else Fraction(1, 10**9))
    return lo, hi


def _factor_moduli(q: polys.Poly, v: Place, tol: Fraction):
    """[(NormValue, multiplicity)] for the roots of a Q-irreducible factor."""
    out = []
    if v.is_finite:
        for slope, mult in polys.newton_polygon_slopes(q, v.prime):
            out.append((NormValue.p_power(v, slope), mult))
        return out
    if polys.deg(q) == 1:
        r = -q[0] / q[1]
        out.append((NormValue.exact(v, abs(r)), 1))
        return out
    for a, b in polys.isolate_real_roots(q):
        a, b = polys.refine_root(q, a, b, tol)
        while a < 0 < b:  # q(0) != 0 for irreducible q of degree > 1
            a, b = polys.refine_root(q, a, b, (b - a) / 16)
        if a == b:
            out.append((NormValue.exact(v, abs(a)), 1))
        else:
            out.append((NormValue.interval(v, min(abs(a), abs(b)), max(abs(a), abs(b))), 1))
    for lo, hi in _complex_pair_moduli(q, tol):
        nv = NormValue.interval(v, lo, hi)
        out.append((nv, 2))
    return out


def eigenvalue_moduli(A: MatQ, v: Place, tol=_DEFAULT_TOL, separated: bool = False):
    """Multiset of |eigenvalue|_v values as NormValues (with multiplicity).

    Exact p-powers at finite places via Newton polygons of the Q-irreducible
    factors; rigorous enclosures of width <= tol at the archimedean place.
    With ``separated=True``, distinct moduli must end up pairwise disjoint or
    InseparableAtTolerance is raised.
    """
    f = char_poly(A)
    nzero, g = polys.strip_zero_roots(f)
    out = [(NormValue.zero(v), nzero)] if nzero else []
    for q, mult in polys.factor_rational_poly(g):
        for nv, m in _factor_moduli(q, v, as_fraction(tol)):
            out.append((nv, m * mult))
    if separated and not v.is_finite:
        _check_separated(out, as_fraction(tol))
    flat = []
    for nv, m in out:
        flat.extend([nv] * m)
    return flat


def _check_separated(pairs, tol):
    vals = [nv for nv, _ in pairs]
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            c = vals[i].compare(vals[j])
            if c is None and not vals[i].eq_exact(vals[j]):
                raise InseparableAtTolerance(
                    f"moduli enclosures overlap below width {tol}"
                )


@dataclass(frozen=True)
class EigenSplit:
    """Attracting/repelling splitting of Q^d under A at a place and cursor."""

    place: Place
    omega: Fraction
    A_part: Subspace
    R_part: Subspace
    Lambda_omega: NormValue
    lambda_omega: NormValue
    tier: str  # "exact" or "hensel(tau)"

    @property
    def alpha_omega(self) -> NormValue:
        """Contraction ratio lambda_omega / Lambda_omega."""
        return self.lambda_omega / self.Lambda_omega


def _factor_side(q: polys.Poly, v: Place, omega: Fraction, tol: Fraction):
    """+1 if every root modulus of q is >= omega, -1 if all are < omega,
    0 if mixed.  Raises CursorOnEigenvalue on an exact tie."""
    if v.is_finite:
        sides = set()
        for slope, _ in polys.newton_polygon_slopes(q, v.prime):
            c = _cmp_ppow_rational(v.prime, slope, omega)
            if c == 0:
                raise CursorOnEigenvalue(f"|root|_{v} == omega == {omega}")
            sides.add(c)
        return 0 if len(sides) > 1 else sides.pop()
    # archimedean
    if polys.peval(q, omega) == 0 or polys.peval(q, -omega) == 0:
        raise CursorOnEigenvalue(f"real root of modulus omega == {omega}")
    sides = set()
    chain = polys.sturm_chain(q)
    inside = polys.count_roots(chain, -omega, omega)
    # count_roots uses (a, b]; q(omega) != 0 so the boundary is clean, but the
    # left end -omega must also be excluded: check it is not a root (done above)
    total_real = polys.count_roots(chain, -polys.cauchy_bound(q) - 1, polys.cauchy_bound(q))
    if inside:
        sides.add(-1)
    if total_real - inside:
        sides.add(1)
    # complex pairs
    work_tol = tol
    for _ in range(60):
        undecided = False
        sides_c = set()
        for lo, hi in _complex_pair_moduli(q, work_tol):
            if hi < omega:
                sides_c.add(-1)
            elif lo >= omega:
                sides_c.add(1)
            else:
                undecided = True
        if not undecided:
            sides |= sides_c
            break
        if polys.root_product_poly_value(q, omega * omega) == 0:
            # some product of two roots equals omega^2; for a straddling
            # conjugate pair this certifies |root| == omega
            raise CursorOnEigenvalue(f"complex modulus equals omega == {omega}")
        work_tol /= 256
    else:
        raise InseparableAtTolerance("complex modulus undecidable against omega")
    return 0 if len(sides) > 1 else (sides.pop() if sides else 1)


def eigensplit(
    A: MatQ,
    v: Place,
    omega,
    tol=_DEFAULT_TOL,
    tier: str = "exact",
    precision: int = 64,
) -> EigenSplit:
    """Split Q^d into A_part (eigenvalue moduli >= omega) and R_part (< omega).

    Exact tier: requires every Q-irreducible factor of the characteristic
    polynomial to be modulus-pure at v; A_part is the kernel of the product of
    the large factors evaluated at A.  The opt-in Hensel tier (finite places)
    splits mixed factors p-adically to the requested precision; it never feeds
    certificates.
    """
    omega = as_fraction(omega)
    if omega <= 0:
        raise ValueError("omega must be positive")
    if A.det() == 0:
        raise ValueError("matrix must be invertible")
    tol = as_fraction(tol)
    f = char_poly(A)
    factors = polys.factor_rational_poly(f)
    large, small, mixed = [], [], []
    for q, m in factors:
        side = _factor_side(q, v, omega, tol)
        (large if side > 0 else small if side < 0 else mixed).append((q, m))
    if mixed:
        if tier != "hensel":
            raise MixedFactor(
                f"{len(mixed)} Q-irreducible factor(s) straddle omega={omega} at {v}"
            )
        if not v.is_finite:
            raise MixedFactor("the Hensel tier only applies at finite places")
        return _eigensplit_hensel(A, v, omega, factors, large, small, mixed, precision)
    d = A.dim
    prod_large = polys.poly(1)
    prod_small = polys.poly(1)
    for q, m in large:
        prod_large = polys.pmul(prod_large, polys.ppow(q, m))
    for q, m in small:
        prod_small = polys.pmul(prod_small, polys.ppow(q, m))
    A_part = Subspace(d, kernel_basis(poly_at_matrix(prod_large, A).rows, d)) \
        if large else Subspace.zero(d)
    R_part = Subspace(d, kernel_basis(poly_at_matrix(prod_small, A).rows, d)) \
        if small else Subspace.zero(d)
    if A_part.dim + R_part.dim != d or not A_part.intersect(R_part).is_zero:
        raise ArithmeticError("eigensplit lost the direct sum")
    lam_big = norm_min(
        [nv for q, m in large for nv, _ in _factor_moduli(q, v, tol)]
    ) if large else NormValue.zero(v)
    lam_small = norm_max(
        [nv for q, m in small for nv, _ in _factor_moduli(q, v, tol)]
    ) if small else NormValue.zero(v)
    return EigenSplit(v, omega, A_part, R_part, lam_big, lam_small, "exact")


def _eigensplit_hensel(A, v, omega, factors, large, small, mixed, precision):
    """Approximate tier: p-adic slope splits of the mixed factors.

    The mixed factors are transformed so the omega-cut becomes the
    positive-valuation / unit-valuation boundary, peeled with certified Hensel
    lifts, and the resulting approximate small/large parts contribute kernels
    computed modulo p**precision.  Subspace entries are exact rationals whose
    residues are certified modulo the reported precision.
    """
    p = v.prime
    d = A.dim
    # exact parts first
    prod_large = polys.poly(1)
    prod_small = polys.poly(1)
    for q, m in large:
        prod_large = polys.pmul(prod_large, polys.ppow(q, m))
    for q, m in small:
        prod_small = polys.pmul(prod_small, polys.ppow(q, m))
    lam_candidates_big = [nv for q, m in large for nv, _ in _factor_moduli(q, v, _DEFAULT_TOL)]
    lam_candidates_small = [nv for q, m in small for nv, _ in _factor_moduli(q, v, _DEFAULT_TOL)]

    for q, mult in mixed:
        qs_small, qs_large, slopes = _split_factor_at(q, p, omega, precision)
        lam_candidates_big.extend(NormValue.p_power(v, s) for s in slopes if
                                  _cmp_ppow_rational(p, s, omega) > 0)
        lam_candidates_small.extend(NormValue.p_power(v, s) for s in slopes if
                                    _cmp_ppow_rational(p, s, omega) < 0)
        prod_large = polys.pmul(prod_large, polys.ppow(qs_large, mult))
        prod_small = polys.pmul(prod_small, polys.ppow(qs_small, mult))
    A_part = _kernel_subspace_mod(poly_at_matrix(prod_large, A), p, precision, d)
    R_part = _kernel_subspace_mod(poly_at_matrix(prod_small, A), p, precision, d)
    lam_big = norm_min(lam_candidates_big) if lam_candidates_big else NormValue.zero(v)
    lam_small = norm_max(lam_candidates_small) if lam_candidates_small else NormValue.zero(v)
    return EigenSplit(v, omega, A_part, R_part, lam_big, lam_small, f"hensel({precision})")


def _split_factor_at(q, p, omega, tau):
    """Split a p-adically mixed Q-irreducible q at the modulus cut omega.

    Returns (small_part, large_part, slopes) with rational-coefficient
    polynomials whose residues mod p**tau are certified by Hensel lifting;
    slopes is the exact slope list of q for the modulus bookkeeping.
    """
    segs = polys.newton_polygon_slopes(q, p)
    slopes = [s for s, _ in segs]
    svals = sorted(set(slopes))
    # place the cut between adjacent slopes; omega already strictly separates
    below = [s for s in svals if _cmp_ppow_rational(p, s, omega) < 0]
    above = [s for s in svals if _cmp_ppow_rational(p, s, omega) > 0]
    if not below or not above:
        raise ArithmeticError("factor is not mixed at this cut")
    from math import lcm

    b = lcm(*[s.denominator for s in svals]) if len(svals) > 1 else svals[0].denominator
    # roots mu = lambda**b have integral slopes b*s; cut between b*max(below)
    # and b*min(above)
    comp = _companion(q)
    comp_b = comp**b
    qb = polys.charpoly_rows(comp_b.rows)
    cut_lo = max(below) * b  # integral
    cut_hi = min(above) * b
    assert cut_lo.denominator == 1 and cut_hi.denominator == 1
    small_part, large_part = _peel_valuation_classes(qb, p, int(cut_lo), int(cut_hi), tau)
    # translate back: ker(small(mu)) with mu = A**b equals the small eigenspace
    # of A itself; callers evaluate these parts at A**b
    return _pullback_power(small_part, b), _pullback_power(large_part, b), slopes


def _pullback_power(g, b):
    """Represent g(x**b) so evaluation at A matches evaluation of g at A**b."""
    out = [ZERO] * (polys.deg(g) * b + 1) if g else []
    for i, c in enumerate(g):
        out[i * b] = c
    return polys.trim(out)


def _companion(q):
    n = polys.deg(q)
    mq = polys.monic(q)
    rows = [[ZERO] * n for _ in range(n)]
    for i in range(1, n):
        rows[i][i - 1] = ONE
    for i in range(n):
        rows[i][n - 1] = -mq[i]
    return MatQ(rows)


def _peel_valuation_classes(f, p, cut_lo, cut_hi, tau):
    """Split monic f in Q_p[x] into (small-modulus, large-modulus) parts,
    where small modulus means slope <= cut_lo < cut_hi <= slope for large
    (slopes here integral).  Iteratively peels minimal-valuation classes with
    Hensel lifts; coefficients certified mod p**tau."""
    remaining = f
    large_acc = polys.poly(1)
    while True:
        segs = polys.newton_polygon_slopes(remaining, p)
        svals = sorted(s for s, _ in segs)
        if all(s <= cut_lo for s in svals):
            small_acc = remaining
            break
        # peel the largest-modulus class (most negative valuation = largest
        # slope s... slope s: |root| = p^s: largest modulus = largest s == smallest valuation
        s_top = max(svals)
        if all(s >= cut_hi for s in svals):
            large_acc = polys.pmul(large_acc, remaining)
            small_acc = polys.poly(1)
            break
        # normalize so the top class sits at valuation 0 and others positive:
        # roots mu / p**s_top
        shift = int(s_top)
        g = polys.monic(polys.pcompose_scale(remaining, Fraction(p) ** shift))
        gsmall, glarge, _ = _hensel_unit_split(g, p, tau)
        # glarge has the valuation-0 roots of g  <-> top class of `remaining`
        top = polys.monic(polys.pcompose_scale(glarge, Fraction(p) ** -shift))
        rest = polys.monic(polys.pcompose_scale(gsmall, Fraction(p) ** -shift))
        large_acc = polys.pmul(large_acc, top)
        remaining = rest
    return small_acc, large_acc


def _hensel_unit_split(g, p, tau):
    """g monic p-integral: split into (positive-valuation part, unit part)."""
    gi = polys.trim([Fraction(int(c)) for c in g]) if all(
        c.denominator == 1 for c in g
    ) else None
    if gi is None:
        # clear p-free denominators (units in Z_(p))
        den = 1
        for c in g:
            dc = c.denominator
            while dc % p == 0:
                raise ArithmeticError("polynomial not p-integral")
            den = den * dc // __import__("math").gcd(den, dc)
        inv = pow(den, -1, p**tau)
        gi = polys.trim([Fraction((int(c * den) * inv) % p**tau) for c in g[:-1]] + [ONE])
    gsm, glg, _ = polys.hensel_slope_split(gi, p, tau)
    return (
        polys.trim([Fraction(c) for c in gsm]),
        polys.trim([Fraction(c) for c in glg]),
        tau,
    )


def _kernel_subspace_mod(M: MatQ, p: int, tau: int, d: int) -> Subspace:
    """Kernel of M computed modulo p**tau (entries scaled integral first)."""
    # scale to p-integral
    shift = 0
    for row in M.rows:
        for x in row:
            if x != 0:
                val = vp(x, p)
                shift = min(shift, val)
    scale = Fraction(p) ** (-shift)
    modulus = p**tau
    rows = []
    for row in M.rows:
        r = []
        for x in row:
            y = x * scale
            num, den = y.numerator, y.denominator
            r.append((num * pow(den, -1, modulus)) % modulus)
        rows.append(r)
    basis = _kernel_mod_pk(rows, p, tau, d)
    return Subspace(d, [tuple(Fraction(x) for x in vec) for vec in basis])


def _kernel_mod_pk(rows, p, k, d):
    """Kernel basis of an integer matrix over Z/p**k (valuation pivoting)."""
    modulus = p**k
    M = [row[:] for row in rows]
    n = len(M)
    pivots = []
    col_used = [False] * d
    for _ in range(min(n, d)):
        best = None
        for i in range(len(M)):
            if i in [pi for pi, _ in pivots]:
                continue
            for j in range(d):
                if col_used[j] or M[i][j] % modulus == 0:
                    continue
                val = 0
                x = M[i][j] % modulus
                while x % p == 0:
                    x //= p
                    val += 1
                if best is None or val < best[0]:
                    best = (val, i, j)
        if best is None:
            break
        val, bi, bj = best
        if val > 0:
            break  # remaining entries are non-units; stop (precision loss)
        inv = pow(M[bi][bj], -1, modulus)
        M[bi] = [(x * inv) % modulus for x in M[bi]]
        for i in range(len(M)):
            if i != bi and M[i][bj] % modulus:
                t = M[i][bj]
                M[i] = [(x - t * y) % modulus for x, y in zip(M[i], M[bi])]
        pivots.append((bi, bj))
        col_used[bj] = True
    free_cols = [j for j in range(d) if not col_used[j]]
    basis = []
    for fc in free_cols:
        vec = [0] * d
        vec[fc] = 1
        for bi, bj in pivots:
            vec[bj] = (-M[bi][fc]) % modulus
        basis.append(vec)
    return basis
