"""Named constructions: GQs from (pseudo-)arcs and ovals, Laguerre planes, OAs.

Affine space PG(N+1, q) minus the hyperplane H: X0 = 0 is identified with
GF(q)^(N+1), and a subspace of PG(N+1, q) meeting H in a subspace W is the coset
a + W, keyed by its canonical representative W.reduce(a).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product
from typing import Callable, Sequence

from .gf import field
from .incidence import (
    POINT_LINE,
    POINT_LINE_CIRCLE,
    AxiomFailure,
    BudgetExceeded,
    IncidenceStructure,
    derive_affine,
    verify_laguerre,
    verify_near_plane,
)
from .planes import extension_points, is_arc, plane
from .projgeom import Subspace, all_subspaces, enumerate_subspaces, point, point_vector, span
from .pseudoarcs import (
    DualPseudoArc,
    PseudoArc,
    is_dual_pseudo_arc,
    is_pseudo_arc,
    tangent_spaces,
)


class ConstructionError(ValueError):
    pass


def _vectors(m: int, q: int) -> list[tuple[int, ...]]:
    return list(product(range(q), repeat=m))


def _fmt(v) -> str:
    return "".join(map(str, v)) if max(v, default=0) < 10 else ".".join(map(str, v))


def _cosets(W: Subspace, vecs: Sequence[tuple[int, ...]]) -> dict[tuple[int, ...], list[int]]:
    out: dict[tuple[int, ...], list[int]] = {}
    for i, v in enumerate(vecs):
        out.setdefault(W.reduce(v), []).append(i)
    return out


def _arc_as_pseudo_arc(points: Sequence, q: int) -> PseudoArc:
    pts = [point_vector(p, 2, q) if isinstance(p, int) else tuple(p) for p in points]
    return PseudoArc(1, q, tuple(point(2, q, v) for v in pts))


def _require_pseudo_arc(K: PseudoArc) -> None:
    ok, bad = is_pseudo_arc(K)
    if not ok:
        raise ConstructionError(f"not a pseudo-arc: triple {bad} fails to span")


# --------------------------------------------------------------------------
# GQ(q^n - 1, q^n + 1) from pseudo-arcs of size q^n


def _gq_from_tangents(K: PseudoArc, tangents: Sequence[Sequence[Subspace]], tag: str) -> IncidenceStructure:
    m = 3 * K.n
    vecs = _vectors(m, K.q)
    labels: list[str] = []
    index: dict[tuple[int, tuple[int, ...]], int] = {}
    for i, Ki in enumerate(K.elements):
        for rep in sorted(_cosets(Ki, vecs)):
            index[i, rep] = len(labels)
            labels.append(f"K{i}+{_fmt(rep)}")
    lines = [[index[i, Ki.reduce(a)] for i, Ki in enumerate(K.elements)] for a in vecs]
    for i, Ki in enumerate(K.elements):
        for T in tangents[i]:
            for members in _cosets(T, vecs).values():
                lines.append(sorted({index[i, Ki.reduce(vecs[v])] for v in members}))
    return IncidenceStructure.make(POINT_LINE, labels, lines)


def gq_from_pseudo_arc(K: PseudoArc) -> IncidenceStructure:
    """Points: n-spaces off H through an element. Lines: affine points and
    2n-spaces off H through a tangent (2n-1)-space."""
    if K.size != K.q**K.n:
        raise ConstructionError(f"expected a pseudo-arc of size {K.q**K.n}, got {K.size}")
    _require_pseudo_arc(K)
    tangents = [tangent_spaces(K, i) for i in range(K.size)]
    if any(len(t) != 2 for t in tangents):
        raise ConstructionError("an element does not lie on exactly two tangent spaces")
    return _gq_from_tangents(K, tangents, "T")


def as_gq_from_arc(arc: Sequence, q: int) -> IncidenceStructure:
    """The GQ(q-1, q+1) of a q-arc of PG(2, q)."""
    if len(arc) != q:
        raise ConstructionError(f"expected a {q}-arc, got {len(arc)} points")
    ok, bad = is_arc(arc, q)
    if not ok:
        raise ConstructionError(f"collinear triple {bad}")
    return gq_from_pseudo_arc(_arc_as_pseudo_arc(arc, q))


def hyperoval_completion(arc: Sequence, q: int) -> tuple[int, int]:
    """The two points completing a q-arc, q even, to a hyperoval."""
    ext = extension_points(arc, q)
    pl = plane(q)
    pairs = [(a, b) for a, b in combinations(ext, 2) if is_arc(list(arc) + [a, b], q)[0]]
    if len(pairs) != 1:
        raise ConstructionError(f"arc completes to a hyperoval in {len(pairs)} ways")
    return pairs[0]


def payne_arc_gq_even(arc: Sequence, q: int) -> IncidenceStructure:
    """Lines through arc points off H; lines: affine points and planes on <P,Q>, <P,R>."""
    if q % 2:
        raise ConstructionError("Payne's construction needs q even")
    if len(arc) != q:
        raise ConstructionError(f"expected a {q}-arc, got {len(arc)} points")
    ok, bad = is_arc(arc, q)
    if not ok:
        raise ConstructionError(f"collinear triple {bad}")
    Q, R = hyperoval_completion(arc, q)
    K = _arc_as_pseudo_arc(arc, q)
    vq, vr = point_vector(Q, 2, q), point_vector(R, 2, q)
    tangents = [[span(P, vq), span(P, vr)] for P in K.elements]
    return _gq_from_tangents(K, tangents, "PQR")


# --------------------------------------------------------------------------
# T(O), T2(O), T2*(hyperoval), W(q)


def t_pseudo_oval(O: PseudoArc) -> IncidenceStructure:
    """The GQ(q^n, q^n) of a pseudo-oval.

    Points: affine points, 2n-spaces meeting H in a tangent space, and H.
    Lines: n-spaces off H through an element, and the elements.
    """
    if O.size != O.q**O.n + 1:
        raise ConstructionError(f"expected a pseudo-oval of size {O.q**O.n + 1}")
    _require_pseudo_arc(O)
    tangents = [tangent_spaces(O, i) for i in range(O.size)]
    if any(len(t) != 1 for t in tangents):
        raise ConstructionError("an element does not have a unique tangent space")
    m = 3 * O.n
    vecs = _vectors(m, O.q)
    labels = [f"a{_fmt(v)}" for v in vecs]
    tindex: dict[tuple[int, tuple[int, ...]], int] = {}
    for i, (T,) in enumerate(tangents):
        for rep in sorted(_cosets(T, vecs)):
            tindex[i, rep] = len(labels)
            labels.append(f"T{i}+{_fmt(rep)}")
    h = len(labels)
    labels.append("H")
    lines = []
    for i, Oi in enumerate(O.elements):
        (T,) = tangents[i]
        for members in _cosets(Oi, vecs).values():
            lines.append(members + [tindex[i, T.reduce(vecs[members[0]])]])
        lines.append([tindex[i, rep] for rep in _cosets(T, vecs)] + [h])
    return IncidenceStructure.make(POINT_LINE, labels, lines)


def t2_oval(oval: Sequence, q: int) -> IncidenceStructure:
    if len(oval) != q + 1 or not is_arc(oval, q)[0]:
        raise ConstructionError("input is not an oval")
    return t_pseudo_oval(_arc_as_pseudo_arc(oval, q))


def t2_star_hyperoval(hyperoval: Sequence, q: int) -> IncidenceStructure:
    """Affine points of PG(3, q) and the affine lines through hyperoval points."""
    if q % 2:
        raise ConstructionError("hyperovals need q even")
    if len(hyperoval) != q + 2 or not is_arc(hyperoval, q)[0]:
        raise ConstructionError("input is not a hyperoval")
    vecs = _vectors(3, q)
    lines = []
    for P in _arc_as_pseudo_arc(hyperoval, q).elements:
        lines.extend(_cosets(P, vecs).values())
    return IncidenceStructure.make(POINT_LINE, [_fmt(v) for v in vecs], lines)


def symplectic_form(u: Sequence[int], v: Sequence[int], q: int) -> int:
    """x1 y2 - x2 y1 + x3 y4 - x4 y3."""
    F = field(q)
    a = F.sub(F.mul[u[0]][v[1]], F.mul[u[1]][v[0]])
    b = F.sub(F.mul[u[2]][v[3]], F.mul[u[3]][v[2]])
    return F.add[a][b]


def w_q(q: int) -> IncidenceStructure:
    """Points of PG(3, q) and the totally isotropic lines."""
    lines = []
    for L in enumerate_subspaces(3, q, 1):
        u, v = L.rows
        if symplectic_form(u, v, q) == 0:
            lines.append(L.point_ids)
    labels = [_fmt(point_vector(i, 3, q)) for i in range(q**3 + q**2 + q + 1)]
    return IncidenceStructure.make(POINT_LINE, labels, lines)


# --------------------------------------------------------------------------
# Laguerre planes


def classical_laguerre(q: int) -> IncidenceStructure:
    """Plane sections of the cone X1^2 = X0 X2 with vertex (0,0,0,1)."""
    F = field(q)
    pl = plane(q)
    conic = [i for i, v in enumerate(pl.points) if F.mul[v[1]][v[1]] == F.mul[v[0]][v[2]]]
    cvecs = [pl.points[i] for i in conic]
    index = {}
    labels = []
    for g, c in enumerate(cvecs):
        for x3 in range(q):
            index[g, x3] = len(labels)
            labels.append(_fmt(c + (x3,)))
    lines = [[index[g, x3] for x3 in range(q)] for g in range(len(cvecs))]
    circles = []
    for a in product(range(q), repeat=3):
        blk = []
        for g, c in enumerate(cvecs):
            dot = 0
            for x, y in zip(a, c):
                dot = F.add[dot][F.mul[x][y]]
            blk.append(index[g, F.neg[dot]])
        circles.append(blk)
    return IncidenceStructure.make(POINT_LINE_CIRCLE, labels, lines, circles)


def structure_g(D: DualPseudoArc) -> IncidenceStructure:
    """Points: 2n-spaces off H through an element; lines: the elements; circles: affine points."""
    m = 3 * D.n
    vecs = _vectors(m, D.q)
    labels: list[str] = []
    index: dict[tuple[int, tuple[int, ...]], int] = {}
    lines = []
    for i, Di in enumerate(D.elements):
        blk = []
        for rep in sorted(_cosets(Di, vecs)):
            index[i, rep] = len(labels)
            blk.append(len(labels))
            labels.append(f"D{i}+{_fmt(rep)}")
        lines.append(blk)
    circles = [[index[i, Di.reduce(a)] for i, Di in enumerate(D.elements)] for a in vecs]
    return IncidenceStructure.make(POINT_LINE_CIRCLE, labels, lines, circles)


def laguerre_from_dual_pseudo_oval(D: DualPseudoArc) -> IncidenceStructure:
    if D.size != D.q**D.n + 1:
        raise ConstructionError(f"expected a dual pseudo-oval of size {D.q**D.n + 1}")
    ok, bad = is_dual_pseudo_arc(D)
    if not ok:
        raise ConstructionError(f"triple {bad} meets nontrivially")
    return structure_g(D)


# --------------------------------------------------------------------------
# Orthogonal arrays


@dataclass(frozen=True)
class OrthogonalArray:
    rows: tuple[tuple[int, ...], ...]
    levels: int
    strength: int
    index: int

    @property
    def k(self) -> int:
        return len(self.rows)

    @property
    def N(self) -> int:
        return len(self.rows[0]) if self.rows else 0


@dataclass(frozen=True)
class OAFailure:
    rows: tuple[int, ...]
    symbols: tuple[int, ...]
    count: int

    def __bool__(self) -> bool:
        return False


def verify_oa(A: OrthogonalArray, t: int | None = None, lam: int | None = None) -> tuple[bool, OAFailure | None]:
    t = A.strength if t is None else t
    lam = A.index if lam is None else lam
    s = A.levels
    if A.N != lam * s**t:
        return False, OAFailure((), (), A.N)
    for sel in combinations(range(A.k), t):
        counts: dict[tuple[int, ...], int] = {}
        for col in zip(*(A.rows[r] for r in sel)):
            counts[col] = counts.get(col, 0) + 1
        for sym in product(range(s), repeat=t):
            c = counts.get(sym, 0)
            if c != lam:
                return False, OAFailure(sel, sym, c)
    return True, None


def oa_from_laguerre(L: IncidenceStructure, check: bool = True) -> OrthogonalArray:
    """Row i records, for every circle, the position of its point on line i."""
    if check:
        near = L.num_points == len(L.lines) ** 2
        res = verify_near_plane(L) if near else verify_laguerre(L)
        if not res:
            raise ConstructionError(f"input fails its axioms: {res}")
    pos = {}
    for li, blk in enumerate(L.lines):
        for k, p in enumerate(blk):
            pos[p] = (li, k)
    rows = [[0] * len(L.circles) for _ in L.lines]
    for c, blk in enumerate(L.circles):
        for p in blk:
            li, k = pos[p]
            rows[li][c] = k
    n = len(L.lines[0])
    return OrthogonalArray(tuple(map(tuple, rows)), n, 3, 1)


def laguerre_from_oa(A: OrthogonalArray) -> IncidenceStructure:
    """Points (row, symbol); lines are rows; circles are columns."""
    s = A.levels
    labels = [f"{r}:{x}" for r in range(A.k) for x in range(s)]
    lines = [[r * s + x for x in range(s)] for r in range(A.k)]
    circles = [[r * s + A.rows[r][c] for r in range(A.k)] for c in range(A.N)]
    return IncidenceStructure.make(POINT_LINE_CIRCLE, labels, lines, circles)


def oa_to_text(A: OrthogonalArray) -> str:
    out = [f"{A.k} {A.N} {A.levels} {A.strength} {A.index}"]
    out += [" ".join(map(str, r)) for r in A.rows]
    return "\n".join(out) + "\n"


def oa_from_text(text: str) -> OrthogonalArray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    k, N, s, t, lam = map(int, lines[0].split())
    rows = tuple(tuple(map(int, ln.split())) for ln in lines[1 : 1 + k])
    if len(rows) != k or any(len(r) != N for r in rows):
        raise ValueError("array shape does not match the header")
    return OrthogonalArray(rows, s, t, lam)


@dataclass
class GStructure:
    structure: IncidenceStructure
    oa: OrthogonalArray


def oa_from_dual_pseudo_arc(D: DualPseudoArc) -> GStructure:
    """The structure G of a dual pseudo-arc and its s x q^(3n) array on q^n levels."""
    ok, bad = is_dual_pseudo_arc(D)
    if not ok:
        raise ConstructionError(f"triple {bad} meets nontrivially")
    G = structure_g(D)
    from .incidence import _check_ax123

    bad_ax = _check_ax123(G)
    if bad_ax is not None:
        raise ConstructionError(f"structure G fails {bad_ax}")
    return GStructure(G, oa_from_laguerre(G, check=False))


# --------------------------------------------------------------------------
# Extending near-planes by one line


@dataclass
class NearPlaneExtension:
    solutions: list[IncidenceStructure]
    nodes: int
    exhaustive: bool

    @property
    def unique(self) -> bool:
        return self.exhaustive and len(self.solutions) == 1


def _pair_groups(N: IncidenceStructure) -> list[list[int]]:
    line_of = [ls[0] for ls in N.lines_on]
    through = [set(cs) for cs in N.circles_on]
    groups = []
    for a, b in combinations(range(N.num_points), 2):
        if line_of[a] != line_of[b]:
            groups.append(sorted(through[a] & through[b]))
    return groups


def extend_near_plane(
    N: IncidenceStructure, budget: int = 10**6, max_solutions: int | None = None
) -> NearPlaneExtension:
    """All ways to adjoin a line of n new points so that AX1-AX3 hold with circles of size n+1.

    Each circle receives one new point; the circles through two non-collinear old
    points must receive distinct new points. New-point labels are fixed on the
    first such group, which removes the relabelling symmetry.
    """
    order = verify_near_plane(N)
    if not order:
        raise ConstructionError(f"not a near-plane: {order}")
    n = order
    groups = _pair_groups(N)
    for g in groups:
        if len(g) != n:
            return NearPlaneExtension([], 0, True)
    ncirc = len(N.circles)
    in_groups: list[list[int]] = [[] for _ in range(ncirc)]
    for gi, g in enumerate(groups):
        for c in g:
            in_groups[c].append(gi)
    full = (1 << n) - 1
    solutions: list[list[int]] = []
    nodes = 0

    def assign(dom: list[int], done: bytearray, c: int, k: int) -> bool:
        stack = [(c, k)]
        while stack:
            c, k = stack.pop()
            bit = 1 << k
            if not dom[c] & bit:
                return False
            if done[c]:
                continue
            dom[c] = bit
            done[c] = 1
            for gi in in_groups[c]:
                for d in groups[gi]:
                    if d != c and dom[d] & bit:
                        dom[d] &= ~bit
                        if not dom[d]:
                            return False
                        if dom[d] & (dom[d] - 1) == 0:
                            stack.append((d, dom[d].bit_length() - 1))
        return True

    def propagate(dom: list[int], done: bytearray) -> bool:
        """Hidden singles until a fixed point; False on contradiction."""
        changed = True
        while changed:
            changed = False
            for g in groups:
                seen = 0
                for c in g:
                    seen |= dom[c]
                if seen != full:
                    return False
                for k in range(n):
                    bit = 1 << k
                    holder = -1
                    for c in g:
                        if dom[c] & bit:
                            if holder >= 0:
                                holder = -2
                                break
                            holder = c
                    if holder >= 0 and not done[holder]:
                        if not assign(dom, done, holder, k):
                            return False
                        changed = True
        return True

    def search(dom: list[int], done: bytearray) -> None:
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise BudgetExceeded(f"near-plane extension exceeded {budget} nodes")
        if not propagate(dom, done):
            return
        best, best_size = -1, n + 1
        for c in range(ncirc):
            if done[c]:
                continue
            size = dom[c].bit_count()
            if size < best_size:
                best, best_size = c, size
                if size == 2:
                    break
        if best < 0:
            solutions.append([d.bit_length() - 1 for d in dom])
            return
        for k in range(n):
            if dom[best] >> k & 1:
                if max_solutions is not None and len(solutions) >= max_solutions:
                    return
                nd, ndone = dom[:], bytearray(done)
                if assign(nd, ndone, best, k):
                    search(nd, ndone)

    dom = [full] * ncirc
    done = bytearray(ncirc)
    ok = True
    if groups:
        for k, c in enumerate(groups[0]):
            ok = ok and assign(dom, done, c, k)
    if ok:
        search(dom, done)
    exhaustive = max_solutions is None or len(solutions) < max_solutions
    v = N.num_points
    out = []
    for col in solutions:
        labels = list(N.points) + [f"new{k}" for k in range(n)]
        lines = [list(b) for b in N.lines] + [[v + k for k in range(n)]]
        circles = [list(b) + [v + col[c]] for c, b in enumerate(N.circles)]
        out.append(IncidenceStructure.make(POINT_LINE_CIRCLE, labels, lines, circles))
    return NearPlaneExtension(out, nodes, exhaustive)


def internal_structure(N: IncidenceStructure, P: int) -> IncidenceStructure:
    """Points off the line of P; lines not through P and circles through P."""
    return derive_affine(N, P)
