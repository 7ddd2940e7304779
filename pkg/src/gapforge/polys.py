"""Dense univariate polynomials over exact rationals.

Coefficient lists are low-to-high (``c[i]`` multiplies x**i) with no trailing
zeros.  This module carries the places-agnostic machinery: arithmetic, Sturm
sequences and real-root isolation, Newton polygons, division-free
characteristic polynomials, scalar resultants, and the p-adic slope/Hensel
split used by the approximate eigensplit tier.

Q-irreducible factorization is delegated to sympy (mature, exact); everything
downstream only relies on the certified identity "product of factors == f",
which is re-checked where it matters.
"""

from __future__ import annotations

from fractions import Fraction
from typing import List, Sequence, Tuple

from .qmath import ZERO, ONE, as_fraction, vp

Poly = Tuple[Fraction, ...]


def trim(cs) -> Poly:
    cs = list(cs)
    while cs and cs[-1] == 0:
        cs.pop()
    return tuple(cs)


def poly(*cs) -> Poly:
    return trim(as_fraction(c) for c in cs)


def deg(f: Poly) -> int:
    return len(f) - 1  # deg(0) == -1


def is_zero(f: Poly) -> bool:
    return len(f) == 0


def padd(f: Poly, g: Poly) -> Poly:
    n = max(len(f), len(g))
    return trim((f[i] if i < len(f) else 0) + (g[i] if i < len(g) else 0) for i in range(n))


def pneg(f: Poly) -> Poly:
    return tuple(-c for c in f)


def psub(f: Poly, g: Poly) -> Poly:
    return padd(f, pneg(g))


def pscale(f: Poly, a) -> Poly:
    a = as_fraction(a)
    if a == 0:
        return ()
    return tuple(c * a for c in f)


def pmul(f: Poly, g: Poly) -> Poly:
    if not f or not g:
        return ()
    out = [ZERO] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if a == 0:
            continue
        for j, b in enumerate(g):
            out[i + j] += a * b
    return trim(out)


def pdivmod(f: Poly, g: Poly):
    if not g:
        raise ZeroDivisionError("polynomial division by zero")
    q = [ZERO] * max(0, len(f) - len(g) + 1)
    r = list(f)
    dg, lg = len(g) - 1, g[-1]
    while len(r) >= len(g) and any(c != 0 for c in r):
        while r and r[-1] == 0:
            r.pop()
        if len(r) < len(g):
            break
        k = len(r) - 1 - dg
        c = r[-1] / lg
        q[k] = c
        for i in range(len(g)):
            r[k + i] -= c * g[i]
        r.pop()
    return trim(q), trim(r)


def pmod(f: Poly, g: Poly) -> Poly:
    return pdivmod(f, g)[1]


def pgcd(f: Poly, g: Poly) -> Poly:
    while g:
        f, g = g, pmod(f, g)
    if not f:
        return ()
    return pscale(f, 1 / f[-1])  # monic


def pdiff(f: Poly) -> Poly:
    return trim(f[i] * i for i in range(1, len(f)))


def peval(f: Poly, x) -> Fraction:
    x = as_fraction(x)
    acc = ZERO
    for c in reversed(f):
        acc = acc * x + c
    return acc


def ppow(f: Poly, n: int) -> Poly:
    out = (ONE,)
    base = f
    while n:
        if n & 1:
            out = pmul(out, base)
        base = pmul(base, base)
        n >>= 1
    return out


def pcompose_scale(f: Poly, a) -> Poly:
    """f(a*x)."""
    a = as_fraction(a)
    return trim(c * a**i for i, c in enumerate(f))


def preverse(f: Poly) -> Poly:
    """x**deg(f) * f(1/x)."""
    return trim(reversed(f))


def squarefree_part(f: Poly) -> Poly:
    if deg(f) <= 0:
        return f
    g = pgcd(f, pdiff(f))
    if deg(g) <= 0:
        return f
    return pdivmod(f, g)[0]


def monic(f: Poly) -> Poly:
    if not f:
        return f
    return pscale(f, 1 / f[-1])


def strip_zero_roots(f: Poly):
    """Return (k, g) with f = x**k * g and g(0) != 0."""
    k = 0
    while k < len(f) and f[k] == 0:
        k += 1
    return k, tuple(f[k:])


# ---------------------------------------------------------------------------
# Sturm sequences and real-root isolation
# ---------------------------------------------------------------------------

def sturm_chain(f: Poly) -> List[Poly]:
    f = squarefree_part(f)
    chain = [f, pdiff(f)]
    while chain[-1]:
        chain.append(pneg(pmod(chain[-2], chain[-1])))
    chain.pop()
    return chain


def _variations(chain, x) -> int:
    signs = []
    for g in chain:
        v = peval(g, x)
        if v != 0:
            signs.append(1 if v > 0 else -1)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def count_roots(chain, a, b) -> int:
    """Number of distinct real roots in (a, b] for a Sturm chain of f."""
    return _variations(chain, a) - _variations(chain, b)


def cauchy_bound(f: Poly) -> Fraction:
    """All complex roots have |z| <= bound."""
    if deg(f) < 1:
        return ONE
    lead = abs(f[-1])
    return ONE + max(abs(c) for c in f[:-1]) / lead


def isolate_real_roots(f: Poly) -> List[Tuple[Fraction, Fraction]]:
    """Disjoint intervals (a, b] each containing exactly one distinct real root.

    Rational roots are returned as degenerate [r, r] pairs.
    """
    f = squarefree_part(f)
    if deg(f) < 1:
        return []
    chain = sturm_chain(f)
    bound = cauchy_bound(f)
    lo, hi = -bound - 1, bound
    out = []
    stack = [(lo, hi, count_roots(chain, lo, hi))]
    while stack:
        a, b, n = stack.pop()
        if n == 0:
            continue
        if n == 1:
            out.append((a, b))
            continue
        mid = (a + b) / 2
        if peval(f, mid) == 0:
            out.append((mid, mid))
            eps = (b - a) / (4 * (deg(f) + 1))
            while peval(f, mid - eps) == 0 or peval(f, mid + eps) == 0:
                eps /= 2
            stack.append((a, mid - eps, count_roots(chain, a, mid - eps)))
            stack.append((mid + eps, b, count_roots(chain, mid + eps, b)))
        else:
            nl = count_roots(chain, a, mid)
            stack.append((a, mid, nl))
            stack.append((mid, b, n - nl))
    result = []
    for a, b in sorted(out):
        if a == b:
            result.append((a, b))
            continue
        r = _rational_root_in(f, a, b)
        result.append((r, r) if r is not None else (a, b))
    return result


def _rational_root_in(f: Poly, a, b):
    """A rational root in (a, b] if one exists (f squarefree).

    Only linear factors can hide rational roots; candidates come from the
    rational root theorem after clearing denominators.
    """
    from math import gcd

    k, g = strip_zero_roots(f)
    if k > 0 and a < 0 <= b:
        return ZERO
    if deg(g) < 1:
        return None
    den = 1
    for c in g:
        den = den * c.denominator // gcd(den, c.denominator)
    ic = [int(c * den) for c in g]
    lead, const = ic[-1], ic[0]

    def divisors(n):
        n = abs(n)
        ds = set()
        i = 1
        while i * i <= n:
            if n % i == 0:
                ds.add(i)
                ds.add(n // i)
            i += 1
        return ds

    for pnum in divisors(const):
        for qden in divisors(lead):
            for s in (1, -1):
                r = Fraction(s * pnum, qden)
                if a < r <= b and peval(f, r) == 0:
                    return r
    return None


def refine_root(f: Poly, a: Fraction, b: Fraction, tol: Fraction):
    """Shrink an isolating interval (a, b] of a squarefree f to width <= tol."""
    f = squarefree_part(f)
    if a == b:
        return a, b
    if peval(f, b) == 0:
        return b, b
    fa = peval(f, a)
    if fa == 0:
        # a itself is a different root; move the left end strictly inside
        step = (b - a) / 2
        while True:
            cand = a + step
            fc = peval(f, cand)
            if fc != 0 and (fc > 0) != (peval(f, b) > 0):
                a, fa = cand, fc
                break
            step /= 2
    fb = peval(f, b)
    while b - a > tol:
        mid = (a + b) / 2
        fm = peval(f, mid)
        if fm == 0:
            return mid, mid
        if (fa > 0) != (fm > 0):
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    return a, b


# ---------------------------------------------------------------------------
# Newton polygon
# ---------------------------------------------------------------------------

def newton_polygon_slopes(f: Poly, p: int) -> List[Tuple[Fraction, int]]:
    """Lower-hull slopes of {(i, v_p(a_i))} with multiplicities.

    Convention: a segment of slope s carries (multiplicity) roots of p-adic
    absolute value p**s, i.e. v_p(root) = -s.  Zero roots are stripped first
    and reported by the caller.
    """
    pts = [(i, vp(c, p)) for i, c in enumerate(f) if c != 0]
    if len(pts) < 2:
        return []
    hull = [pts[0]]
    for pt in pts[1:]:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # keep lower convexity: drop middle point if it lies on/above
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    segs = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        slope = Fraction(y2 - y1, x2 - x1)
        segs.append((slope, x2 - x1))  # |root|_p = p**slope, v_p(root) = -slope
    return segs


# ---------------------------------------------------------------------------
# Characteristic polynomial (division-free Berkowitz) and determinants
# ---------------------------------------------------------------------------

def charpoly_rows(rows: Sequence[Sequence[Fraction]]) -> Poly:
    """Characteristic polynomial det(xI - A), division-free (Berkowitz)."""
    n = len(rows)
    if n == 0:
        return (ONE,)
    A = [[as_fraction(x) for x in row] for row in rows]
    # Berkowitz: iteratively build the coefficient vector (Toeplitz products)
    vec = [ONE, -A[0][0]]
    for k in range(1, n):
        a = A[k][k]
        row = A[k][:k]
        col = [A[i][k] for i in range(k)]
        M = [r[:k] for r in A[:k]]
        # powers of M applied to col
        prods = [col]
        for _ in range(k - 1):
            prev = prods[-1]
            prods.append([sum(M[i][j] * prev[j] for j in range(k)) for i in range(k)])
        c = [ONE, -a]
        for m in range(k):
            c.append(-sum(row[j] * prods[m][j] for j in range(k)))
        # vec = Toeplitz(c) * vec
        new = [ZERO] * (k + 2)
        for i in range(k + 2):
            s = ZERO
            for j in range(len(vec)):
                if 0 <= i - j < len(c):
                    s += c[i - j] * vec[j]
            new[i] = s
        vec = new
    # vec holds coefficients of x^n, x^(n-1), ..., rescale to low-to-high
    return trim(reversed(vec))


def det_rows(rows) -> Fraction:
    """Exact determinant by fraction Gaussian elimination."""
    n = len(rows)
    A = [[as_fraction(x) for x in row] for row in rows]
    det = ONE
    for c in range(n):
        piv = next((r for r in range(c, n) if A[r][c] != 0), None)
        if piv is None:
            return ZERO
        if piv != c:
            A[c], A[piv] = A[piv], A[c]
            det = -det
        det *= A[c][c]
        inv = 1 / A[c][c]
        for r in range(c + 1, n):
            if A[r][c] == 0:
                continue
            t = A[r][c] * inv
            for cc in range(c, n):
                A[r][cc] -= t * A[c][cc]
    return det


def resultant(f: Poly, g: Poly) -> Fraction:
    """Res(f, g) via the Sylvester matrix (exact)."""
    m, n = deg(f), deg(g)
    if m < 0 or n < 0:
        return ZERO
    if m == 0:
        return f[0] ** n
    if n == 0:
        return g[0] ** m
    size = m + n
    rows = []
    fc = list(reversed(f))  # high-to-low
    gc = list(reversed(g))
    for i in range(n):
        rows.append([ZERO] * i + fc + [ZERO] * (size - m - 1 - i))
    for i in range(m):
        rows.append([ZERO] * i + gc + [ZERO] * (size - n - 1 - i))
    return det_rows(rows)


def root_product_poly_value(f: Poly, t: Fraction) -> Fraction:
    """Evaluate at t the polynomial whose roots are all pairwise products
    lambda_i * lambda_j of roots of f: Res_y(f(y), y^deg(f) * f(t/y)).

    Used as an exact witness for "some product of two roots equals t"
    (in particular squared moduli of complex-conjugate pairs).
    """
    n = deg(f)
    # h(y) = y^n f(t/y) = sum_i a_i t^i y^(n-i)
    h = trim(f[n - j] * t ** (n - j) for j in range(n + 1))
    return resultant(f, h)


# ---------------------------------------------------------------------------
# Q-factorization (sympy-backed) and cyclotomic detection
# ---------------------------------------------------------------------------

def factor_rational_poly(f: Poly) -> List[Tuple[Poly, int]]:
    """Monic Q-irreducible factors with multiplicities; product check enforced."""
    import sympy

    x = sympy.Symbol("x")
    expr = sum(sympy.Rational(c.numerator, c.denominator) * x**i for i, c in enumerate(f))
    _, factors = sympy.factor_list(sympy.Poly(expr, x, domain="QQ"))
    out = []
    for fac, mult in factors:
        pf = sympy.Poly(fac, x)
        cs = [Fraction(int(c.p), int(c.q)) for c in reversed(pf.all_coeffs())]
        out.append((monic(trim(cs)), int(mult)))
    # certified residual: factors multiply back to monic(f)
    prod = (ONE,)
    for fac, mult in out:
        prod = pmul(prod, ppow(fac, mult))
    if prod != monic(f):
        raise ArithmeticError("factorization failed its product check")
    return out


def euler_phi(n: int) -> int:
    from sympy import totient

    return int(totient(n))


def is_cyclotomic_like(f: Poly) -> bool:
    """True iff the monic Q-irreducible f has all roots equal to roots of unity.

    Kronecker-style exact test: such f must be integral and divide x**m - 1
    for some m with phi(m) = deg f (and phi(m) >= sqrt(m/2) bounds the search).
    """
    f = monic(f)
    n = deg(f)
    if n <= 0:
        return False
    if any(c.denominator != 1 for c in f):
        return False
    limit = 2 * n * n + 2
    for m in range(1, limit + 1):
        if euler_phi(m) != n:
            continue
        xm1 = trim([-1] + [0] * (m - 1) + [1])
        if is_zero(pmod(xm1, f)):
            return True
    return False


# ---------------------------------------------------------------------------
# Hensel slope split (approximate eigensplit tier)
# ---------------------------------------------------------------------------

def _poly_int_mod(f, modulus):
    return tuple(int(c) % modulus for c in f)


def hensel_slope_split(f: Poly, p: int, tau: int):
    """Split monic f over Z_p as g*h with g collecting the roots of positive
    valuation (|root|_p < 1) and h the rest, to precision p**tau.

    Requires the Newton polygon of f at p to have a vertex separating the
    strictly-positive-valuation roots from the others; then g == x^m mod p and
    the p-unit-rescaled h is coprime to it mod p, so classical quadratic
    Hensel lifting applies.  Returns (g, h, defect) where g, h have integer
    coefficients reduced mod p**tau, f = g*h holds mod p**tau exactly
    (certified residual: ``defect`` is the max valuation gap, always >= tau).
    """
    if not f or f[-1] != 1:
        raise ValueError("monic polynomial required")
    segs = newton_polygon_slopes(f, p)
    # |root|_p < 1 <=> slope (our convention) < 0
    m = sum(mult for s, mult in segs if s < 0)
    if m == 0 or m == deg(f):
        raise ValueError("no slope split at this cut")
    # scale away denominators of the non-small part: h may have negative-
    # valuation coefficients only if f does; require p-integral f here
    if any(vp(c, p) is not None and vp(c, p) < 0 for c in f):
        raise ValueError("polynomial must be p-integral for the unit/small split")
    modulus = p ** tau
    F = [int(c) % modulus for c in f]
    # initial factorization mod p: g0 = x^m, h0 = F / x^m mod p
    g = [0] * m + [1]
    h = [(F[m + i]) % p for i in range(deg(f) - m)] + [1]
    # Bezout: a*g + b*h == 1 mod p, via extended Euclid over GF(p)
    a, b = _poly_xgcd_modp(g, h, p)
    prec = 1
    while prec < tau:
        prec = min(2 * prec, tau)
        q = p ** prec
        g, h, a, b = _hensel_step(F, g, h, a, b, q, p)
    g = [c % modulus for c in g]
    h = [c % modulus for c in h]
    # certified residual
    prod = _polymul_int(g, h)
    defect = None
    for i in range(max(len(prod), len(F))):
        ci = (prod[i] if i < len(prod) else 0) - (F[i] if i < len(F) else 0)
        if ci % modulus != 0:
            raise ArithmeticError("Hensel lift lost precision")
    return tuple(g), tuple(h), tau


def _polymul_int(f, g):
    out = [0] * (len(f) + len(g) - 1)
    for i, afc in enumerate(f):
        if afc == 0:
            continue
        for j, bgc in enumerate(g):
            out[i + j] += afc * bgc
    return out


def _polydivmod_modp(f, g, q):
    """Division with invertible-lead g, coefficients mod q."""
    f = list(f)
    dg = len(g) - 1
    linv = pow(g[-1], -1, q)
    quo = [0] * max(0, len(f) - dg)
    for k in range(len(f) - dg - 1, -1, -1):
        c = (f[k + dg] * linv) % q
        quo[k] = c
        if c:
            for i in range(dg + 1):
                f[k + i] = (f[k + i] - c * g[i]) % q
    while f and f[-1] % q == 0:
        f.pop()
    return quo, f


def _poly_xgcd_modp(g, h, p):
    """a, b with a*g + b*h == 1 mod p (g, h coprime mod p)."""
    r0, r1 = [c % p for c in g], [c % p for c in h]
    a0, a1 = [1], [0]
    b0, b1 = [0], [1]
    while any(c % p for c in r1):
        quo, rem = _polydivmod_modp(r0, r1, p)
        r0, r1 = r1, rem
        a0, a1 = a1, _sub_mul_modp(a0, quo, a1, p)
        b0, b1 = b1, _sub_mul_modp(b0, quo, b1, p)
    if len(r0) != 1:
        raise ValueError("factors are not coprime mod p")
    inv = pow(r0[0], -1, p)
    return [c * inv % p for c in a0], [c * inv % p for c in b0]


def _sub_mul_modp(a, quo, b, p):
    prod = _polymul_int(quo, b)
    out = [0] * max(len(a), len(prod))
    for i in range(len(out)):
        x = a[i] if i < len(a) else 0
        y = prod[i] if i < len(prod) else 0
        out[i] = (x - y) % p
    while out and out[-1] == 0:
        out.pop()
    return out


def _hensel_step(F, g, h, a, b, q, p):
    """One quadratic lifting step to modulus q (Zassenhaus)."""
    e = [0] * max(len(F), len(_polymul_int(g, h)))
    gh = _polymul_int(g, h)
    for i in range(len(e)):
        x = F[i] if i < len(F) else 0
        y = gh[i] if i < len(gh) else 0
        e[i] = (x - y) % q
    # g' = g + (b*e mod g), h' = h + (a*e mod h) -- keep g monic of fixed degree
    be = _polymul_int(b, e)
    _, g_corr = _polydivmod_modp(be, g, q)
    ae = _polymul_int(a, e)
    quo, h_corr = _polydivmod_modp(ae, h, q)
    g2 = [((g[i] if i < len(g) else 0) + (g_corr[i] if i < len(g_corr) else 0)) % q
          for i in range(len(g))]
    h2 = [((h[i] if i < len(h) else 0) + (h_corr[i] if i < len(h_corr) else 0)) % q
          for i in range(len(h))]
    g2[-1] = g[-1]
    h2[-1] = h[-1]
    # refresh Bezout data to the new modulus
    e2len = max(len(_polymul_int(a, g2)), len(_polymul_int(b, h2)))
    ag = _polymul_int(a, g2)
    bh = _polymul_int(b, h2)
    err = [0] * e2len
    for i in range(e2len):
        x = ag[i] if i < len(ag) else 0
        y = bh[i] if i < len(bh) else 0
        err[i] = (x + y - (1 if i == 0 else 0)) % q
    bearr = _polymul_int(b, err)
    _, b_corr = _polydivmod_modp(bearr, g2, q)
    aearr = _polymul_int(a, err)
    _, a_corr = _polydivmod_modp(aearr, h2, q)
    a2 = [((a[i] if i < len(a) else 0) - (a_corr[i] if i < len(a_corr) else 0)) % q
          for i in range(max(len(a), len(a_corr)))]
    b2 = [((b[i] if i < len(b) else 0) - (b_corr[i] if i < len(b_corr) else 0)) % q
          for i in range(max(len(b), len(b_corr)))]
    return g2, h2, a2, b2
