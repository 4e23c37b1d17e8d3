"""Subspaces of PG(n, q) as canonical reduced row-echelon generator matrices.

Vectors are tuples of field codes. Points of PG(n, q) are numbered in
lexicographic order of their normalized coordinate tuples (first nonzero
coordinate equal to 1); for q = 2 the id of a point is its coordinate vector
read as a binary number, minus one.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Iterator, Sequence, Union

from .gf import FieldTable, field, frobenius

Vector = tuple[int, ...]


class AmbientMismatch(ValueError):
    pass


# --------------------------------------------------------------------------
# Row reduction kernels


def to_bits(row: Sequence[int]) -> int:
    v = 0
    for c in row:
        v = (v << 1) | c
    return v


def from_bits(v: int, m: int) -> Vector:
    return tuple((v >> (m - 1 - j)) & 1 for j in range(m))


def rref_bits(rows: Iterable[int]) -> tuple[int, ...]:
    """Reduced echelon form over GF(2) of rows packed as ints (MSB = column 0)."""
    work = [r for r in rows if r]
    out: list[int] = []
    while work:
        i = max(range(len(work)), key=work.__getitem__)
        top = work.pop(i)
        bit = 1 << (top.bit_length() - 1)
        work = [r ^ top if r & bit else r for r in work]
        work = [r for r in work if r]
        out = [o ^ top if o & bit else o for o in out]
        out.append(top)
    return tuple(out)


def rref(rows: Iterable[Sequence[int]], F: FieldTable, m: int | None = None) -> tuple[Vector, ...]:
    """Canonical reduced row-echelon form of the row space (zero rows dropped)."""
    mat = [list(r) for r in rows]
    if not mat:
        return ()
    if m is None:
        m = len(mat[0])
    if F.q == 2:
        return tuple(from_bits(b, m) for b in rref_bits(to_bits(r) for r in mat))
    add, mul, inv, neg = F.add, F.mul, F.inv, F.neg
    lead = 0
    nrows = len(mat)
    for col in range(m):
        if lead == nrows:
            break
        piv = next((r for r in range(lead, nrows) if mat[r][col]), None)
        if piv is None:
            continue
        mat[lead], mat[piv] = mat[piv], mat[lead]
        prow = mat[lead]
        s = inv[prow[col]]
        if s != 1:
            prow = [mul[s][x] for x in prow]
            mat[lead] = prow
        for r in range(nrows):
            if r != lead:
                f = mat[r][col]
                if f:
                    nf = neg[f]
                    row = mat[r]
                    mat[r] = [add[row[j]][mul[nf][prow[j]]] for j in range(m)]
        lead += 1
    return tuple(tuple(r) for r in mat[:lead])


def rank(rows: Iterable[Sequence[int]], F: FieldTable) -> int:
    return len(rref(rows, F))


def pivots_of(rows: Sequence[Sequence[int]]) -> tuple[int, ...]:
    return tuple(next(j for j, c in enumerate(r) if c) for r in rows)


def mat_mul(A, B, F: FieldTable):
    add, mul = F.add, F.mul
    cols = list(zip(*B))
    out = []
    for row in A:
        new = []
        for col in cols:
            acc = 0
            for a, b in zip(row, col):
                if a and b:
                    acc = add[acc][mul[a][b]]
            new.append(acc)
        out.append(tuple(new))
    return tuple(out)


def vec_mat(v: Sequence[int], M, F: FieldTable) -> Vector:
    add, mul = F.add, F.mul
    acc = [0] * len(M[0])
    for a, row in zip(v, M):
        if a:
            ma = mul[a]
            acc = [add[x][ma[y]] for x, y in zip(acc, row)]
    return tuple(acc)


def mat_inv(M, F: FieldTable):
    m = len(M)
    aug = [list(r) + [1 if i == j else 0 for j in range(m)] for i, r in enumerate(M)]
    red = rref(aug, F, 2 * m)
    if len(red) < m or pivots_of(red)[m - 1] != m - 1:
        raise ValueError("matrix is singular")
    return tuple(tuple(r[m:]) for r in red)


def identity_matrix(m: int):
    return tuple(tuple(1 if i == j else 0 for j in range(m)) for i in range(m))


# --------------------------------------------------------------------------
# Points


def normalize(vec: Sequence[int], F: FieldTable) -> Vector:
    for c in vec:
        if c:
            if c == 1:
                return tuple(vec)
            s = F.inv[c]
            return tuple(F.mul[s][x] for x in vec)
    raise ValueError("the zero vector is not a projective point")


def point_count(n: int, q: int) -> int:
    return (q ** (n + 1) - 1) // (q - 1)


def point_id(vec: Sequence[int], q: int) -> int:
    """Id of a normalized vector."""
    m = len(vec)
    for j, c in enumerate(vec):
        if c:
            break
    else:
        raise ValueError("zero vector")
    base = (q ** (m - 1 - j) - 1) // (q - 1)
    val = 0
    for c in vec[j + 1 :]:
        val = val * q + c
    return base + val


def point_vector(pid: int, n: int, q: int) -> Vector:
    m = n + 1
    for j in range(m - 1, -1, -1):
        base = (q ** (m - 1 - j) - 1) // (q - 1)
        if pid < base + q ** (m - 1 - j):
            val = pid - base
            tail = []
            for _ in range(m - 1 - j):
                tail.append(val % q)
                val //= q
            return (0,) * j + (1,) + tuple(reversed(tail))
    raise ValueError(f"point id {pid} out of range for PG({n},{q})")


def enumerate_points(n: int, q: int) -> list[Vector]:
    """All points of PG(n, q) in id order (lexicographic on normalized tuples)."""
    return [point_vector(i, n, q) for i in range(point_count(n, q))]


def gaussian_binomial(m: int, k: int, q: int) -> int:
    if k < 0 or k > m:
        return 0
    num = den = 1
    for i in range(k):
        num *= q ** (m - i) - 1
        den *= q ** (i + 1) - 1
    return num // den


# --------------------------------------------------------------------------
# Subspaces


@dataclass(frozen=True)
class Subspace:
    """Subspace of PG(n, q) given by its canonical RREF generator matrix."""

    n: int
    q: int
    rows: tuple[Vector, ...]

    @property
    def rank(self) -> int:
        return len(self.rows)

    @property
    def dim(self) -> int:
        return len(self.rows) - 1

    @property
    def field(self) -> FieldTable:
        return field(self.q)

    @cached_property
    def bits(self) -> tuple[int, ...]:
        return tuple(to_bits(r) for r in self.rows)

    @cached_property
    def pivots(self) -> tuple[int, ...]:
        return pivots_of(self.rows)

    @cached_property
    def point_ids(self) -> tuple[int, ...]:
        return tuple(sorted(_span_point_ids(self.rows, self.q)))

    @cached_property
    def mask(self) -> int:
        m = 0
        for i in self.point_ids:
            m |= 1 << i
        return m

    def __repr__(self) -> str:
        return f"Subspace(PG({self.n},{self.q}), dim={self.dim}, rows={self.rows})"

    def __lt__(self, other: "Subspace") -> bool:
        return (self.n, self.q, len(self.rows), self.rows) < (other.n, other.q, len(other.rows), other.rows)

    def contains(self, other: Union["Subspace", Sequence[int]]) -> bool:
        rows = other.rows if isinstance(other, Subspace) else (tuple(other),)
        return rank(self.rows + tuple(rows), self.field) == self.rank

    def reduce(self, vec: Sequence[int]) -> Vector:
        """Canonical representative of vec modulo this subspace."""
        F = self.field
        v = list(vec)
        for row, c in zip(self.rows, self.pivots):
            f = v[c]
            if f:
                nf = F.neg[f]
                v = [F.add[x][F.mul[nf][y]] for x, y in zip(v, row)]
        return tuple(v)


def subspace(n: int, q: int, rows: Iterable[Sequence[int]]) -> Subspace:
    rows = [tuple(r) for r in rows]
    for r in rows:
        if len(r) != n + 1:
            raise AmbientMismatch(f"row {r} does not live in PG({n},{q})")
    return Subspace(n, q, rref(rows, field(q), n + 1))


def empty_subspace(n: int, q: int) -> Subspace:
    return Subspace(n, q, ())


def full_space(n: int, q: int) -> Subspace:
    return Subspace(n, q, tuple(tuple(1 if i == j else 0 for j in range(n + 1)) for i in range(n + 1)))


def point(n: int, q: int, vec: Sequence[int]) -> Subspace:
    return subspace(n, q, [vec])


def _span_point_ids(rows: Sequence[Vector], q: int) -> list[int]:
    k = len(rows)
    if not k:
        return []
    if q == 2:
        bits = [to_bits(r) for r in rows]
        out = []
        for mask in range(1, 1 << k):
            v = 0
            for i in range(k):
                if mask >> (k - 1 - i) & 1:
                    v ^= bits[i]
            out.append(v - 1)
        return out
    F = field(q)
    add, mul = F.add, F.mul
    m = len(rows[0])
    out = []
    for first in range(k):
        rest = rows[first + 1 :]
        for coeffs in itertools.product(range(q), repeat=len(rest)):
            v = list(rows[first])
            for c, r in zip(coeffs, rest):
                if c:
                    mc = mul[c]
                    v = [add[x][mc[y]] for x, y in zip(v, r)]
            out.append(point_id(v, q))
    return out


def _rows_of(item, n: int, q: int) -> tuple[Vector, ...]:
    if isinstance(item, Subspace):
        if (item.n, item.q) != (n, q):
            raise AmbientMismatch(f"{item!r} is not in PG({n},{q})")
        return item.rows
    vec = tuple(item)
    if len(vec) != n + 1:
        raise AmbientMismatch(f"vector {vec} is not in PG({n},{q})")
    return (vec,)


def span(*items) -> Subspace:
    """Smallest subspace containing all arguments (Subspaces or vectors)."""
    if len(items) == 1 and not isinstance(items[0], Subspace) and not _is_vector(items[0]):
        items = tuple(items[0])
    first = next(i for i in items if isinstance(i, Subspace))
    n, q = first.n, first.q
    rows: list[Vector] = []
    for it in items:
        rows.extend(_rows_of(it, n, q))
    return Subspace(n, q, rref(rows, field(q), n + 1))


def _is_vector(x) -> bool:
    return isinstance(x, tuple) and all(isinstance(c, int) for c in x) and len(x) > 0


def dual_subspace(S: Subspace) -> Subspace:
    """Annihilator of S under the standard dot product."""
    F = field(S.q)
    m = S.n + 1
    piv = S.pivots
    free = [j for j in range(m) if j not in piv]
    rows = []
    for f in free:
        v = [0] * m
        v[f] = 1
        for row, c in zip(S.rows, piv):
            v[c] = F.neg[row[f]]
        rows.append(v)
    return Subspace(S.n, S.q, rref(rows, F, m))


def meet(A: Subspace, B: Subspace) -> Subspace:
    if (A.n, A.q) != (B.n, B.q):
        raise AmbientMismatch("subspaces live in different spaces")
    return dual_subspace(span(dual_subspace(A), dual_subspace(B)))


def is_disjoint(A: Subspace, B: Subspace) -> bool:
    return rank(A.rows + B.rows, field(A.q)) == A.rank + B.rank


def enumerate_subspaces(n: int, q: int, dim: int) -> Iterator[Subspace]:
    """All subspaces of projective dimension ``dim`` of PG(n, q)."""
    for rows in enumerate_rref(n + 1, dim + 1, q):
        yield Subspace(n, q, rows)


def enumerate_rref(m: int, k: int, q: int) -> Iterator[tuple[Vector, ...]]:
    """All k x m RREF matrices of rank k over GF(q)."""
    if k == 0:
        yield ()
        return
    for piv in itertools.combinations(range(m), k):
        pset = set(piv)
        slots = [(r, c) for r in range(k) for c in range(piv[r] + 1, m) if c not in pset]
        for vals in itertools.product(range(q), repeat=len(slots)):
            mat = [[0] * m for _ in range(k)]
            for r, c in enumerate(piv):
                mat[r][c] = 1
            for (r, c), v in zip(slots, vals):
                mat[r][c] = v
            yield tuple(tuple(r) for r in mat)


def enumerate_rref_bits(m: int, k: int) -> Iterator[tuple[int, ...]]:
    """GF(2) version of enumerate_rref with packed rows."""
    if k == 0:
        yield ()
        return
    for piv in itertools.combinations(range(m), k):
        pset = set(piv)
        slots = [(r, m - 1 - c) for r in range(k) for c in range(piv[r] + 1, m) if c not in pset]
        base = [1 << (m - 1 - c) for c in piv]
        for x in range(1 << len(slots)):
            rows = list(base)
            i = 0
            while x:
                if x & 1:
                    r, b = slots[i]
                    rows[r] |= 1 << b
                x >>= 1
                i += 1
            yield tuple(rows)


class Quotient:
    """The quotient PG(n, q)/K realised on the coordinate complement of K.

    The complement is spanned by the standard basis vectors at the non-pivot
    columns of K, so quotient coordinates are those columns after reducing a
    vector modulo K.
    """

    def __init__(self, K: Subspace):
        if K.rank == 0:
            raise ValueError("cannot quotient by the empty subspace")
        self.K = K
        self.columns = tuple(j for j in range(K.n + 1) if j not in K.pivots)
        self.n = len(self.columns) - 1
        self.q = K.q

    @property
    def complement(self) -> Subspace:
        m = self.K.n + 1
        return subspace(self.K.n, self.q, [[1 if j == c else 0 for j in range(m)] for c in self.columns])

    def coords(self, vec: Sequence[int]) -> Vector:
        red = self.K.reduce(vec)
        return tuple(red[c] for c in self.columns)

    def project(self, S: Subspace) -> Subspace:
        """Image of <S, K> in the quotient."""
        rows = [self.coords(r) for r in S.rows]
        return Subspace(self.n, self.q, rref(rows, field(self.q), self.n + 1))

    def image(self, S: Subspace) -> Subspace:
        if not S.contains(self.K):
            raise ValueError("subspace does not contain the quotient kernel")
        return self.project(S)

    def lift(self, T: Subspace) -> Subspace:
        m = self.K.n + 1
        rows = list(self.K.rows)
        for r in T.rows:
            v = [0] * m
            for c, x in zip(self.columns, r):
                v[c] = x
            rows.append(v)
        return Subspace(self.K.n, self.q, rref(rows, field(self.q), m))


def quotient_map(K: Subspace) -> Quotient:
    return Quotient(K)


def subspaces_through(S: Subspace, target_dim: int) -> Iterator[Subspace]:
    if not S.dim <= target_dim <= S.n:
        raise ValueError(f"target dimension {target_dim} out of range")
    if S.rank == 0:
        yield from enumerate_subspaces(S.n, S.q, target_dim)
        return
    Q = Quotient(S)
    for T in enumerate_subspaces(Q.n, S.q, target_dim - S.dim - 1):
        yield Q.lift(T)


# --------------------------------------------------------------------------
# Collineations


@dataclass(frozen=True)
class Collineation:
    """v -> frob^power(v) . matrix, acting on row vectors."""

    q: int
    matrix: tuple[Vector, ...]
    power: int = 0

    @property
    def n(self) -> int:
        return len(self.matrix) - 1

    def apply_vector(self, v: Sequence[int]) -> Vector:
        F = field(self.q)
        if self.power:
            v = [frobenius(F, x, self.power) for x in v]
        return vec_mat(v, self.matrix, F)

    def inverse(self) -> "Collineation":
        F = field(self.q)
        minv = mat_inv(self.matrix, F)
        back = (-self.power) % F.h
        if back:
            minv = tuple(tuple(frobenius(F, x, back) for x in r) for r in minv)
        return Collineation(self.q, minv, back)

    def then(self, other: "Collineation") -> "Collineation":
        """The collineation 'apply self, then other'."""
        F = field(self.q)
        m = self.matrix
        if other.power:
            m = tuple(tuple(frobenius(F, x, other.power) for x in r) for r in m)
        return Collineation(self.q, mat_mul(m, other.matrix, F), (self.power + other.power) % F.h)


def identity_collineation(n: int, q: int) -> Collineation:
    return Collineation(q, identity_matrix(n + 1), 0)


def apply_collineation(g: Collineation, S: Subspace) -> Subspace:
    if g.n != S.n or g.q != S.q:
        raise AmbientMismatch("collineation and subspace dimensions differ")
    F = field(S.q)
    if S.q == 2 and g.power == 0:
        mb = [to_bits(r) for r in g.matrix]
        return Subspace(S.n, 2, tuple(from_bits(b, S.n + 1) for b in rref_bits(apply_bits(S.bits, mb, S.n + 1))))
    return Subspace(S.n, S.q, rref([g.apply_vector(r) for r in S.rows], F, S.n + 1))


def apply_bits(rows: Sequence[int], mat_bits: Sequence[int], m: int) -> list[int]:
    out = []
    for v in rows:
        acc = 0
        for j in range(m):
            if v >> (m - 1 - j) & 1:
                acc ^= mat_bits[j]
        out.append(acc)
    return out


def gl_generators(m: int, q: int) -> list[tuple[Vector, ...]]:
    """A small generating set of GL(m, q)."""
    F = field(q)
    gens = []
    if m == 1:
        return [((F.primitive,),)] if q > 2 else []
    ident = [list(r) for r in identity_matrix(m)]
    if q > 2:
        d = [r[:] for r in ident]
        d[0][0] = F.primitive
        gens.append(tuple(tuple(r) for r in d))
    t = [r[:] for r in ident]
    t[0][1] = 1
    gens.append(tuple(tuple(r) for r in t))
    cyc = [[1 if j == (i + 1) % m else 0 for j in range(m)] for i in range(m)]
    gens.append(tuple(tuple(r) for r in cyc))
    return gens


def collineation_generators(n: int, q: int) -> list[Collineation]:
    gens = [Collineation(q, M, 0) for M in gl_generators(n + 1, q)]
    if field(q).h > 1:
        gens.append(Collineation(q, identity_matrix(n + 1), 1))
    return gens


def embed_block_generators(blocks: Sequence[tuple[int, int]], m: int, q: int) -> list[Collineation]:
    """GL generators acting on each diagonal block [start, start+size) of an m x m identity."""
    out = []
    for start, size in blocks:
        for g in gl_generators(size, q):
            M = [list(r) for r in identity_matrix(m)]
            for i in range(size):
                for j in range(size):
                    M[start + i][start + j] = g[i][j]
            out.append(Collineation(q, tuple(tuple(r) for r in M), 0))
    return out


# --------------------------------------------------------------------------
# Text format: "n q r" then r rows of n+1 codes.


def subspace_to_text(S: Subspace) -> str:
    lines = [f"{S.n} {S.q} {S.rank}"]
    lines += [" ".join(map(str, r)) for r in S.rows]
    return "\n".join(lines) + "\n"


def subspace_from_lines(lines: list[str]) -> tuple[Subspace, list[str]]:
    n, q, r = map(int, lines[0].split())
    rows = tuple(tuple(map(int, ln.split())) for ln in lines[1 : 1 + r])
    S = subspace(n, q, rows)
    if S.rows != rows:
        raise ValueError("subspace block is not in reduced row-echelon form")
    return S, lines[1 + r :]


def subspace_from_text(text: str) -> Subspace:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    S, rest = subspace_from_lines(lines)
    if rest:
        raise ValueError("trailing data after subspace block")
    return S


@lru_cache(maxsize=None)
def all_subspaces(n: int, q: int, dim: int) -> tuple[Subspace, ...]:
    return tuple(enumerate_subspaces(n, q, dim))


def subspaces_avoiding(n: int, q: int, dim: int, forbidden: int) -> list[Subspace]:
    """All dim-subspaces of PG(n, q) with no point in the forbidden id mask, sorted."""
    total = point_count(n, q)
    allowed = [i for i in range(total) if not forbidden >> i & 1]
    if dim < 0:
        return [empty_subspace(n, q)]
    if 2 * len(allowed) > total:
        return sorted(S for S in all_subspaces(n, q, dim) if not S.mask & forbidden)
    m = n + 1
    found: set[tuple[Vector, ...]] = set()
    if q == 2:
        ok = set(i + 1 for i in allowed)

        def grow2(basis: list[int], pts: list[int], lo: int) -> None:
            if len(basis) == dim + 1:
                found.add(rref_bits(basis))
                return
            for c in sorted(ok):
                if c <= lo or c in pts:
                    continue
                new = [c ^ p for p in pts]
                if all(v in ok and v > basis[0] for v in new):
                    grow2(basis + [c], pts + [c] + new, c)

        for a in sorted(ok):
            grow2([a], [a], a)
        return sorted(Subspace(n, 2, tuple(from_bits(b, m) for b in rows)) for rows in found)
    F = field(q)
    ok_ids = set(allowed)
    vecs = {i: point_vector(i, n, q) for i in allowed}

    def grow(rows: list[Vector], ids: set[int], a: int, lo: int) -> None:
        if len(rows) == dim + 1:
            found.add(rref(rows, F, m))
            return
        for c in allowed:
            if c <= lo or c in ids:
                continue
            S = _span_point_ids(rref(rows + [vecs[c]], F, m), q)
            if all(i in ok_ids and i >= a for i in S):
                grow(rows + [vecs[c]], set(S), a, c)

    for a in allowed:
        grow([vecs[a]], {a}, a, a)
    return sorted(Subspace(n, q, rows) for rows in found)
