"""Field reduction, Desarguesian spreads and reguli."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from itertools import combinations
from typing import TYPE_CHECKING, Sequence

from .gf import SubfieldEmbedding, field, subfield_embedding
from .planes import Conic, conic_points
from .projgeom import (
    Subspace,
    Vector,
    is_disjoint,
    mat_inv,
    mat_mul,
    meet,
    normalize,
    point_count,
    point_id,
    point_vector,
    span,
    subspace,
)

if TYPE_CHECKING:
    from .pseudoarcs import PseudoArc


class NotASpread(ValueError):
    pass


@dataclass(eq=False)
class FieldReductionMap:
    """PG(k, q^n) -> PG((k+1)n - 1, q); coordinate i occupies columns [i n, (i+1) n)."""

    k: int
    q: int
    n: int
    embedding: SubfieldEmbedding = dc_field(init=False)
    _table: dict[int, Subspace] = dc_field(init=False, default_factory=dict)

    def __post_init__(self) -> None:
        self.embedding = subfield_embedding(field(self.q), field(self.q**self.n))

    @property
    def big_q(self) -> int:
        return self.q**self.n

    @property
    def target_dim(self) -> int:
        return (self.k + 1) * self.n - 1

    def expand_vector(self, v: Sequence[int]) -> Vector:
        out: list[int] = []
        for x in v:
            out.extend(self.embedding.expand(x))
        return tuple(out)

    def reduce_rows(self, rows: Sequence[Sequence[int]]) -> list[Vector]:
        big = self.embedding.big
        out = []
        for r in rows:
            for b in self.embedding.basis:
                out.append(self.expand_vector([big.mul[b][x] for x in r]))
        return out

    def reduce_subspace(self, rows: Sequence[Sequence[int]]) -> Subspace:
        """Image of the GF(q^n)-span of rows."""
        return subspace(self.target_dim, self.q, self.reduce_rows(rows))

    def point(self, P) -> Subspace:
        if isinstance(P, int):
            pid = P
        else:
            pid = point_id(normalize(P, self.embedding.big), self.big_q)
        S = self._table.get(pid)
        if S is None:
            S = self.reduce_subspace([point_vector(pid, self.k, self.big_q)])
            self._table[pid] = S
        return S

    def all_points(self) -> list[Subspace]:
        return [self.point(i) for i in range(point_count(self.k, self.big_q))]


@lru_cache(maxsize=None)
def field_reduction(k: int, q: int, n: int) -> FieldReductionMap:
    return FieldReductionMap(k, q, n)


def field_reduce_point(m: FieldReductionMap, P) -> Subspace:
    return m.point(P)


def standard_conic(Q: int) -> Conic:
    """Y^2 = XZ."""
    F = field(Q)
    return Conic.make(Q, (0, 1, 0, 0, F.neg[1], 0))


def pseudo_conic(m: FieldReductionMap, C: Conic | None = None) -> "PseudoArc":
    """Field-reduction image of a conic of PG(2, q^n), elements ordered by point id."""
    from .pseudoarcs import PseudoArc

    if m.k != 2:
        raise ValueError("pseudo-conics live over PG(2, q^n)")
    C = C or standard_conic(m.big_q)
    if C.q != m.big_q:
        raise ValueError("conic field does not match the reduction map")
    pts = conic_points(C)
    return PseudoArc(m.n, m.q, tuple(m.point(p) for p in pts))


def canonical_pseudo_conic(n: int, q: int) -> "PseudoArc":
    return pseudo_conic(field_reduction(2, q, n))


# --------------------------------------------------------------------------
# Spreads of PG(2n-1, q)


def desarguesian_line_spread(n: int, q: int) -> list[Subspace]:
    return field_reduction(1, q, n).all_points()


def check_partial_spread(members: Sequence[Subspace]) -> None:
    for A, B in combinations(members, 2):
        if not is_disjoint(A, B):
            raise NotASpread("members are not pairwise disjoint")


def is_spread(members: Sequence[Subspace]) -> bool:
    if not members:
        return False
    S0 = members[0]
    n, q = S0.rank, S0.q
    if S0.n != 2 * n - 1 or any(S.rank != n or S.n != S0.n for S in members):
        return False
    if len(members) != q**n + 1:
        return False
    total = 0
    for S in members:
        if total & S.mask:
            return False
        total |= S.mask
    return True


def _line_points(L: Subspace) -> list[Vector]:
    return [point_vector(i, L.n, L.q) for i in L.point_ids]


def transversals(L1: Subspace, L2: Subspace, L3: Subspace) -> list[Subspace]:
    if L1.n != 3 or any(L.rank != 2 for L in (L1, L2, L3)):
        raise ValueError("reguli are defined for lines of PG(3, q)")
    for A, B in ((L1, L2), (L1, L3), (L2, L3)):
        if not is_disjoint(A, B):
            raise NotASpread("lines are not pairwise disjoint")
    out = []
    for P in _line_points(L1):
        R = meet(span(L2, P), L3)
        out.append(span(R, P))
    return sorted(out)


def regulus(L1: Subspace, L2: Subspace, L3: Subspace) -> list[Subspace]:
    """The q+1 lines meeting every common transversal of three skew lines."""
    t1, t2, t3 = transversals(L1, L2, L3)[:3]
    return transversals(t1, t2, t3)


def opposite_regulus(lines: Sequence[Subspace]) -> list[Subspace]:
    return transversals(*lines[:3])


def _is_regular(members: Sequence[Subspace]) -> bool:
    ids = set(members)
    for a, b, c in combinations(members, 3):
        if not set(regulus(a, b, c)) <= ids:
            return False
    return True


def spread_set(members: Sequence[Subspace]) -> list[tuple[Vector, ...]]:
    """Matrices M with member = [I M] once members 0, 1, 2 become [I 0], [0 I], [I I].

    Member 1 plays the role of infinity and is omitted; member 0 yields the
    zero matrix and member 2 the identity.
    """
    A, B, C = members[:3]
    n, q = A.rank, A.q
    F = field(q)
    P = [list(r) for r in A.rows + B.rows]
    Pinv = mat_inv(P, F)

    def coords(S: Subspace) -> tuple[tuple[Vector, ...], tuple[Vector, ...]]:
        rows = mat_mul(S.rows, Pinv, F)
        return tuple(r[:n] for r in rows), tuple(r[n:] for r in rows)

    X, Y = coords(C)
    T = mat_mul(mat_inv(X, F), Y, F)
    Tinv = mat_inv(T, F)
    out = []
    for i, S in enumerate(members):
        if i == 1:
            continue
        U, V = coords(S)
        out.append(tuple(map(tuple, mat_mul(mat_mul(mat_inv(U, F), V, F), Tinv, F))))
    return out


def is_field_spread_set(mats: Sequence[tuple[Vector, ...]], q: int) -> bool:
    F = field(q)
    pool = set(mats)
    if len(pool) != len(mats):
        return False
    for M1 in mats:
        for M2 in mats:
            s = tuple(tuple(F.add[a][b] for a, b in zip(r1, r2)) for r1, r2 in zip(M1, M2))
            if s not in pool or tuple(map(tuple, mat_mul(M1, M2, F))) not in pool:
                return False
    return True


def is_desarguesian_spread(members: Sequence[Subspace], method: str = "auto") -> bool:
    """Regulus closure for lines of PG(3, q); the spread-set field test otherwise.

    The spread-set test normalizes three members and asks whether the matrices
    describing the rest form a field, which is exactly the Desarguesian case.
    """
    members = list(members)
    if not is_spread(members):
        raise NotASpread("input is not a spread")
    n, q = members[0].rank, members[0].q
    if method == "auto":
        method = "regulus" if n == 2 else "spread_set"
    if method == "regulus":
        if n != 2:
            raise ValueError("regulus closure applies to line spreads of PG(3, q)")
        return True if q == 2 else _is_regular(members)
    if method == "spread_set":
        if n == 1:
            return True
        return is_field_spread_set(spread_set(members), q)
    raise ValueError(f"unknown method {method!r}")


def hall_spread(q: int) -> list[Subspace]:
    """Reverse one regulus of the Desarguesian line spread of PG(3, q)."""
    D = desarguesian_line_spread(2, q)
    R = regulus(D[0], D[1], D[2])
    keep = [S for S in D if S not in set(R)]
    return sorted(keep + opposite_regulus(R))


def translation_plane(members: Sequence[Subspace]):
    """The affine translation plane of a spread of PG(2n-1, q), completed projectively.

    Points are the vectors of GF(q)^(2n) plus one point per spread member; lines
    are the cosets v + S plus the line at infinity.
    """
    from itertools import product

    from .incidence import POINT_LINE, IncidenceStructure

    S0 = members[0]
    q, m = S0.q, S0.n + 1
    vecs = list(product(range(q), repeat=m))
    index = {v: i for i, v in enumerate(vecs)}
    nv = len(vecs)
    lines: list[tuple[int, ...]] = []
    for k, S in enumerate(members):
        seen = set()
        for v in vecs:
            rep = S.reduce(v)
            if rep in seen:
                continue
            seen.add(rep)
            coset = [index[u] for u in vecs if S.reduce(u) == rep]
            lines.append(tuple(coset) + (nv + k,))
    lines.append(tuple(range(nv, nv + len(members))))
    return IncidenceStructure.make(POINT_LINE, nv + len(members), lines)
