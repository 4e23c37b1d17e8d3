"""Independent brute-force checkers used as test oracles.

Nothing here imports the table-driven arithmetic or the RREF machinery of the
package: fields are rebuilt from polynomial arithmetic and subspaces from
explicit linear combinations.
"""

from __future__ import annotations

from itertools import combinations, product


class PolyField:
    """GF(p^h) as polynomials modulo a monic polynomial, on the same integer codes."""

    def __init__(self, p: int, h: int, poly: tuple[int, ...]):
        self.p, self.h, self.q = p, h, p**h
        self.poly = poly

    def digits(self, x: int) -> list[int]:
        out = []
        for _ in range(self.h):
            out.append(x % self.p)
            x //= self.p
        return out

    def code(self, ds) -> int:
        return sum(d * self.p**k for k, d in enumerate(ds))

    def add(self, a: int, b: int) -> int:
        return self.code((x + y) % self.p for x, y in zip(self.digits(a), self.digits(b)))

    def neg(self, a: int) -> int:
        return self.code((-x) % self.p for x in self.digits(a))

    def mul(self, a: int, b: int) -> int:
        p, h = self.p, self.h
        prod = [0] * (2 * h - 1)
        for i, x in enumerate(self.digits(a)):
            for j, y in enumerate(self.digits(b)):
                prod[i + j] = (prod[i + j] + x * y) % p
        # Reduce with the monic modulus (coefficients from the constant term up).
        for k in range(len(prod) - 1, h - 1, -1):
            c = prod[k]
            if c:
                for j in range(h + 1):
                    prod[k - h + j] = (prod[k - h + j] - c * self.poly[j]) % p
        return self.code(prod[:h])

    def pow(self, a: int, e: int) -> int:
        out = 1
        for _ in range(e):
            out = self.mul(out, a)
        return out


def span_points(rows, q: int, mul, add, normalize) -> set[tuple[int, ...]]:
    """Normalized points of the row space, by enumerating every combination."""
    pts = set()
    m = len(rows[0]) if rows else 0
    for coeffs in product(range(q), repeat=len(rows)):
        v = [0] * m
        for c, r in zip(coeffs, rows):
            for k in range(m):
                v[k] = add(v[k], mul(c, r[k]))
        if any(v):
            pts.add(normalize(tuple(v)))
    return pts


def brute_gq(points: int, lines) -> tuple[int, int] | None:
    """Order (s, t) if the point-line geometry is a GQ, by scanning every flag and antiflag."""
    lines = [frozenset(L) for L in lines]
    if not lines:
        return None
    sizes = {len(L) for L in lines}
    if len(sizes) != 1:
        return None
    s = sizes.pop() - 1
    on = [[L for L in lines if p in L] for p in range(points)]
    degrees = {len(x) for x in on}
    if len(degrees) != 1:
        return None
    t = degrees.pop() - 1
    for a, b in combinations(range(points), 2):
        if sum(1 for L in on[a] if b in L) > 1:
            return None
    for P in range(points):
        nbrs = set()
        for L in on[P]:
            nbrs |= L
        for L in lines:
            if P in L:
                continue
            if len(L & nbrs) != 1:
                return None
    return s, t


def brute_rank(rows, q: int, F) -> int:
    """Rank by plain Gaussian elimination with the field operations of F."""
    M = [list(r) for r in rows]
    r = 0
    cols = len(M[0]) if M else 0
    for c in range(cols):
        piv = next((i for i in range(r, len(M)) if M[i][c]), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = F.inv[M[r][c]]
        M[r] = [F.mul[inv][x] for x in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c]:
                f = M[i][c]
                M[i] = [F.sub(x, F.mul[f][y]) for x, y in zip(M[i], M[r])]
        r += 1
    return r


def poly_eval(coeffs, y: int, F) -> int:
    """Horner evaluation; coeffs from the leading term down."""
    acc = 0
    for c in coeffs:
        acc = F.add[F.mul[acc][y]][c]
    return acc


def deflate(coeffs, root: int, F) -> list[int]:
    """Synthetic division by (y - root); coeffs from the leading term down."""
    out = [coeffs[0]]
    for c in coeffs[1:-1]:
        out.append(F.add[c][F.mul[out[-1]][root]])
    return out


def brute_laguerre(points: int, lines, circles) -> int | None:
    """Order n if lines partition the points and the three-point, line-circle and touching axioms hold."""
    lines = [frozenset(L) for L in lines]
    circles = [frozenset(C) for C in circles]
    if not circles or len({len(C) for C in circles}) != 1:
        return None
    line_of = {}
    for i, L in enumerate(lines):
        for p in L:
            if p in line_of:
                return None
            line_of[p] = i
    if len(line_of) != points:
        return None
    if any(len(L & C) != 1 for L in lines for C in circles):
        return None
    for a, b, c in combinations(range(points), 3):
        if len({line_of[a], line_of[b], line_of[c]}) == 3:
            if sum(1 for C in circles if {a, b, c} <= C) != 1:
                return None
    for C in circles:
        for P in C:
            for Q in range(points):
                if Q in C or line_of[Q] == line_of[P]:
                    continue
                if sum(1 for D in circles if P in D and Q in D and C & D == {P}) != 1:
                    return None
    return len(circles[0]) - 1


def brute_projective_plane(points: int, lines) -> int | None:
    lines = [frozenset(L) for L in lines]
    if len(lines) != points or len({len(L) for L in lines}) != 1:
        return None
    for a, b in combinations(range(points), 2):
        if sum(1 for L in lines if a in L and b in L) != 1:
            return None
    if any(len(L & M) != 1 for L, M in combinations(lines, 2)):
        return None
    return len(lines[0]) - 1


def brute_affine_plane(points: int, lines) -> int | None:
    lines = [frozenset(L) for L in lines]
    for a, b in combinations(range(points), 2):
        if sum(1 for L in lines if a in L and b in L) != 1:
            return None
    # Playfair: one parallel through each point off each line.
    for L in lines:
        for p in range(points):
            if p not in L and sum(1 for M in lines if p in M and not M & L) != 1:
                return None
    m = len(lines[0])
    return m if points == m * m else None
