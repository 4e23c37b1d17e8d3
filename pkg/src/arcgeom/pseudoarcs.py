"""Pseudo-arcs of PG(3n-1, q): validation, projection, tangents, extension."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations, product
from typing import Iterable, Sequence

from .fieldred import (
    canonical_pseudo_conic,
    check_partial_spread,
    is_desarguesian_spread,
    is_spread,
)
from .gf import field, factor_prime_power
from .projgeom import (
    Collineation,
    Quotient,
    Subspace,
    apply_collineation,
    dual_subspace,
    enumerate_subspaces,
    identity_matrix,
    is_disjoint,
    mat_inv,
    mat_mul,
    meet,
    point_count,
    span,
    subspace_from_lines,
    subspace_to_text,
    subspaces_avoiding,
    gl_generators,
)


class PseudoArcError(ValueError):
    pass


@dataclass(frozen=True)
class PseudoArc:
    """Ordered (n-1)-spaces K_1..K_s of PG(3n-1, q)."""

    n: int
    q: int
    elements: tuple[Subspace, ...]

    def __post_init__(self) -> None:
        N = 3 * self.n - 1
        for K in self.elements:
            if K.n != N or K.q != self.q or K.rank != self.n:
                raise PseudoArcError(f"{K!r} is not an ({self.n - 1})-space of PG({N},{self.q})")

    @property
    def ambient(self) -> int:
        return 3 * self.n - 1

    @property
    def size(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, i: int) -> Subspace:
        return self.elements[i]

    def with_element(self, E: Subspace) -> "PseudoArc":
        return PseudoArc(self.n, self.q, self.elements + (E,))

    def without(self, i: int) -> "PseudoArc":
        return PseudoArc(self.n, self.q, self.elements[:i] + self.elements[i + 1 :])

    def as_set(self) -> frozenset[Subspace]:
        return frozenset(self.elements)

    @cached_property
    def forbidden_mask(self) -> int:
        """Points that no extending element may contain."""
        els = self.elements
        if len(els) == 1:
            return els[0].mask
        m = 0
        for A, B in combinations(els, 2):
            m |= span(A, B).mask
        return m


@dataclass(frozen=True)
class DualPseudoArc:
    """(2n-1)-spaces of PG(3n-1, q), any three meeting trivially."""

    n: int
    q: int
    elements: tuple[Subspace, ...]

    def __post_init__(self) -> None:
        N = 3 * self.n - 1
        for K in self.elements:
            if K.n != N or K.q != self.q or K.rank != 2 * self.n:
                raise PseudoArcError(f"{K!r} is not a ({2 * self.n - 1})-space of PG({N},{self.q})")

    @property
    def size(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)


def _as_pseudo_arc(K) -> PseudoArc:
    if isinstance(K, PseudoArc):
        return K
    els = tuple(K)
    if not els:
        raise PseudoArcError("cannot infer parameters of an empty list")
    return PseudoArc(els[0].rank, els[0].q, els)


def max_size(n: int, q: int) -> int:
    return q**n + (2 if q % 2 == 0 else 1)


def is_pseudo_arc(K) -> tuple[bool, tuple[int, int, int] | None]:
    """(True, None) iff every three elements span the ambient space."""
    if not isinstance(K, PseudoArc):
        if not K:
            return True, None
        K = _as_pseudo_arc(K)
    els = K.elements
    if len(set(els)) != len(els):
        raise PseudoArcError("repeated element")
    spans: dict[tuple[int, int], int] = {}
    for i, j in combinations(range(len(els)), 2):
        spans[i, j] = span(els[i], els[j]).mask
    for i, j, k in combinations(range(len(els)), 3):
        if not is_disjoint(els[i], els[j]) or els[k].mask & spans[i, j]:
            return False, (i, j, k)
    return True, None


def is_dual_pseudo_arc(D: DualPseudoArc) -> tuple[bool, tuple[int, int, int] | None]:
    for i, j, k in combinations(range(len(D.elements)), 3):
        a, b, c = D.elements[i], D.elements[j], D.elements[k]
        if meet(meet(a, b), c).rank:
            return False, (i, j, k)
    return True, None


def dualize(K: PseudoArc) -> DualPseudoArc:
    return DualPseudoArc(K.n, K.q, tuple(dual_subspace(E) for E in K.elements))


def undualize(D: DualPseudoArc) -> PseudoArc:
    return PseudoArc(D.n, D.q, tuple(dual_subspace(E) for E in D.elements))


def dual_partial_spread(D: DualPseudoArc, i: int) -> list[Subspace]:
    """{D_j meet D_i : j != i}, a partial (n-1)-spread of D_i."""
    Di = D.elements[i]
    return [meet(Dj, Di) for j, Dj in enumerate(D.elements) if j != i]


# --------------------------------------------------------------------------
# Projection and spreads


def default_projection_target(K: PseudoArc, i: int) -> Subspace:
    """Lexicographically least (2n-1)-space disjoint from K_i."""
    Ki = K.elements[i]
    for T in enumerate_subspaces(K.ambient, K.q, 2 * K.n - 1):
        if is_disjoint(T, Ki):
            return T
    raise AssertionError("no complement found")


def project_from_element(K: PseudoArc, i: int, target: Subspace | None = None) -> list[Subspace]:
    """Images <K_i, K_j> meet target, j != i, as subspaces of the ambient space."""
    Ki = K.elements[i]
    T = target if target is not None else default_projection_target(K, i)
    if T.rank != 2 * K.n:
        raise PseudoArcError("target must be a (2n-1)-space")
    if not is_disjoint(T, Ki):
        raise PseudoArcError("target meets the projection centre")
    return [meet(span(Ki, Kj), T) for j, Kj in enumerate(K.elements) if j != i]


def projected_partial_spread(K: PseudoArc, i: int) -> list[Subspace]:
    """The same projection realised in the quotient PG(2n-1, q) = PG(3n-1, q)/K_i."""
    Q = Quotient(K.elements[i])
    return [Q.project(Kj) for j, Kj in enumerate(K.elements) if j != i]


def complete_partial_spread(P: Sequence[Subspace], max_deficiency: int = 2) -> list[list[Subspace]]:
    """All spreads containing the partial spread P, as sorted member lists."""
    P = list(P)
    if not P:
        raise PseudoArcError("empty partial spread")
    check_partial_spread(P)
    n, q = P[0].rank, P[0].q
    N = P[0].n
    if N != 2 * n - 1:
        raise PseudoArcError("members must be (n-1)-spaces of PG(2n-1, q)")
    deficiency = q**n + 1 - len(P)
    if deficiency < 0:
        raise PseudoArcError("too many members for a partial spread")
    if deficiency > max_deficiency:
        raise PseudoArcError(f"deficiency {deficiency} exceeds {max_deficiency}")
    covered = 0
    for S in P:
        covered |= S.mask
    full = (1 << point_count(N, q)) - 1
    if deficiency == 0:
        return [sorted(P)] if covered == full else []
    cands = subspaces_avoiding(N, q, n - 1, covered)
    out: list[list[Subspace]] = []

    def dfs(start: int, chosen: list[Subspace], cov: int) -> None:
        if len(chosen) == deficiency:
            if cov == full:
                out.append(sorted(P + chosen))
            return
        for k in range(start, len(cands)):
            C = cands[k]
            if not C.mask & cov:
                dfs(k + 1, chosen + [C], cov | C.mask)

    dfs(0, [], covered)
    return sorted(out)


def tangent_spaces(K: PseudoArc, i: int) -> list[Subspace]:
    """(2n-1)-spaces through K_i meeting no other element."""
    Q = Quotient(K.elements[i])
    covered = 0
    for S in projected_partial_spread(K, i):
        covered |= S.mask
    return sorted(Q.lift(T) for T in subspaces_avoiding(Q.n, K.q, K.n - 1, covered))


def extend_pseudo_arc(K: PseudoArc) -> list[Subspace]:
    """Every (n-1)-space E for which K with E added is still a pseudo-arc."""
    if K.size == 0:
        return list(subspaces_avoiding(K.ambient, K.q, K.n - 1, 0))
    if K.size == 1:
        # No triple condition yet, only distinctness.
        return [E for E in subspaces_avoiding(K.ambient, K.q, K.n - 1, 0) if E != K.elements[0]]
    return subspaces_avoiding(K.ambient, K.q, K.n - 1, K.forbidden_mask)


def is_complete(K: PseudoArc) -> bool:
    return not extend_pseudo_arc(K)


def satisfies_main_hypothesis(K: PseudoArc, i: int, max_deficiency: int = 2) -> bool:
    """Whether the partial spread K/K_i extends to a Desarguesian spread of PG(2n-1, q)."""
    if K.size < 3:
        raise PseudoArcError("need at least three elements")
    P = projected_partial_spread(K, i)
    return any(is_desarguesian_spread(S) for S in complete_partial_spread(P, max_deficiency))


# --------------------------------------------------------------------------
# Frames and pseudo-conic recognition


def _block_diag(blocks, F) -> tuple[tuple[int, ...], ...]:
    m = sum(len(b) for b in blocks)
    M = [[0] * m for _ in range(m)]
    o = 0
    for b in blocks:
        for r, row in enumerate(b):
            for c, x in enumerate(row):
                M[o + r][o + c] = x
        o += len(b)
    return tuple(map(tuple, M))


def frame_collineation(K1: Subspace, K2: Subspace, K3: Subspace, K4: Subspace) -> Collineation:
    """A collineation sending K1..K4 to [I 0 0], [0 I 0], [0 0 I], [I I I].

    Requires K1, K2, K3 to span and K4 to be skew to each span of two of them.
    """
    n, q = K1.rank, K1.q
    F = field(q)
    M0 = K1.rows + K2.rows + K3.rows
    try:
        M0inv = mat_inv(M0, F)
    except ValueError as exc:
        raise PseudoArcError("first three elements do not span") from exc
    W = mat_mul(K4.rows, M0inv, F)
    blocks = []
    for b in range(3):
        B = tuple(r[b * n : (b + 1) * n] for r in W)
        try:
            blocks.append(mat_inv(B, F))
        except ValueError as exc:
            raise PseudoArcError("fourth element meets a span of two others") from exc
    return Collineation(q, mat_mul(M0inv, _block_diag(blocks, F), F), 0)


def frame_elements(n: int, q: int) -> list[Subspace]:
    from .projgeom import subspace

    I = identity_matrix(n)
    z = (0,) * n
    rows = {
        0: [r + z + z for r in I],
        1: [z + r + z for r in I],
        2: [z + z + r for r in I],
        3: [r + r + r for r in I],
    }
    return [subspace(3 * n - 1, q, rows[k]) for k in range(4)]


def apply_to_arc(g: Collineation, K: PseudoArc) -> PseudoArc:
    return PseudoArc(K.n, K.q, tuple(apply_collineation(g, E) for E in K.elements))


def _pgl_elements(n: int, q: int):
    """Representatives of PGL(n, q): invertible matrices with first nonzero entry 1."""
    F = field(q)
    for flat in product(range(q), repeat=n * n):
        if not any(flat) or next(x for x in flat if x) != 1:
            continue
        M = tuple(tuple(flat[r * n : (r + 1) * n]) for r in range(n))
        try:
            mat_inv(M, F)
        except ValueError:
            continue
        yield M


def is_pseudo_conic(K: PseudoArc, budget: int = 10**6) -> tuple[bool, Collineation | None]:
    """Whether some collineation maps K onto the canonical pseudo-conic.

    The stabiliser of a pseudo-conic induces PGL(2, q^n) on its elements and
    is therefore transitive on ordered triples, so K_1, K_2, K_3 may be sent to
    the first three canonical elements; the image of K_4 and the frame
    stabiliser diag(A, A, A) with field automorphisms are then enumerated.
    """
    n, q = K.n, K.q
    if K.size != q**n + 1:
        raise PseudoArcError("expected a pseudo-oval")
    C = canonical_pseudo_conic(n, q)
    target = C.as_set()
    gK = frame_collineation(*K.elements[:4])
    F = field(q)
    p, h = factor_prime_power(q)
    stab = [Collineation(q, _block_diag([A, A, A], F), e) for A in _pgl_elements(n, q) for e in range(h)]
    work = 0
    c1, c2, c3 = C.elements[:3]
    for c4 in C.elements[3:]:
        gC_inv = frame_collineation(c1, c2, c3, c4).inverse()
        for s in stab:
            work += 1
            if work > budget:
                raise PseudoArcError("budget exceeded in pseudo-conic recognition")
            g = gK.then(s).then(gC_inv)
            if all(apply_collineation(g, E) in target for E in K.elements):
                return True, g
    return False, None


# --------------------------------------------------------------------------
# Text format: "p h n s" then s subspace blocks.


def pseudo_arc_to_text(K: PseudoArc) -> str:
    p, h = factor_prime_power(K.q)
    return f"{p} {h} {K.n} {K.size}\n" + "".join(subspace_to_text(E) for E in K.elements)


def pseudo_arc_from_text(text: str) -> PseudoArc:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    p, h, n, s = map(int, lines[0].split())
    rest = lines[1:]
    els = []
    for _ in range(s):
        E, rest = subspace_from_lines(rest)
        els.append(E)
    if rest:
        raise ValueError("trailing data after pseudo-arc")
    return PseudoArc(n, p**h, tuple(els))
