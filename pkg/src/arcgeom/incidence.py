"""Incidence structures: GQ and Laguerre axioms, derivations, planes, isomorphism."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

POINT_LINE = "point-line"
POINT_LINE_CIRCLE = "point-line-circle"
KINDS = (POINT_LINE, POINT_LINE_CIRCLE)

Block = tuple[int, ...]


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class AxiomFailure:
    """A violated axiom with a witness. Always falsy."""

    axiom: str
    witness: tuple
    message: str = ""

    def __bool__(self) -> bool:
        return False

    def __str__(self) -> str:
        return f"{self.axiom} fails at {self.witness}" + (f": {self.message}" if self.message else "")


@dataclass(frozen=True)
class GQOrder:
    s: int
    t: int

    def __str__(self) -> str:
        return f"GQ order ({self.s},{self.t})"

    @property
    def point_count(self) -> int:
        return (self.s + 1) * (self.s * self.t + 1)

    @property
    def line_count(self) -> int:
        return (self.t + 1) * (self.s * self.t + 1)


def _bits(block: Iterable[int]) -> int:
    m = 0
    for i in block:
        m |= 1 << i
    return m


def _members(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


@dataclass(frozen=True, eq=False)
class IncidenceStructure:
    """Points 0..v-1 with labels; lines and optional circles as sorted index tuples."""

    kind: str
    points: tuple[str, ...]
    lines: tuple[Block, ...]
    circles: tuple[Block, ...] = ()

    @classmethod
    def make(
        cls,
        kind: str,
        points: int | Sequence,
        lines: Iterable[Iterable[int]],
        circles: Iterable[Iterable[int]] | None = None,
    ) -> "IncidenceStructure":
        if kind not in KINDS:
            raise ValueError(f"unknown kind {kind!r}")
        labels = tuple(str(i) for i in range(points)) if isinstance(points, int) else tuple(map(str, points))
        v = len(labels)

        def canon(blocks) -> tuple[Block, ...]:
            out = []
            for b in blocks:
                t = tuple(sorted(b))
                if len(set(t)) != len(t):
                    raise ValueError(f"block {t} repeats a point")
                if t and (t[0] < 0 or t[-1] >= v):
                    raise ValueError(f"block {t} has an index out of range")
                out.append(t)
            out.sort()
            if len(set(out)) != len(out):
                raise ValueError("duplicate block")
            return tuple(out)

        L = canon(lines)
        C = canon(circles or ())
        if kind == POINT_LINE and C:
            raise ValueError("point-line structures have no circles")
        if set(L) & set(C):
            raise ValueError("a block is both a line and a circle")
        return cls(kind, labels, L, C)

    def __eq__(self, other) -> bool:
        return isinstance(other, IncidenceStructure) and (
            self.kind,
            self.points,
            self.lines,
            self.circles,
        ) == (other.kind, other.points, other.lines, other.circles)

    def __hash__(self) -> int:
        return hash((self.kind, self.lines, self.circles))

    @property
    def num_points(self) -> int:
        return len(self.points)

    @cached_property
    def line_masks(self) -> tuple[int, ...]:
        return tuple(_bits(b) for b in self.lines)

    @cached_property
    def circle_masks(self) -> tuple[int, ...]:
        return tuple(_bits(b) for b in self.circles)

    @cached_property
    def lines_on(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in self.points]
        for i, b in enumerate(self.lines):
            for p in b:
                out[p].append(i)
        return tuple(map(tuple, out))

    @cached_property
    def circles_on(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in self.points]
        for i, b in enumerate(self.circles):
            for p in b:
                out[p].append(i)
        return tuple(map(tuple, out))

    @cached_property
    def collinear_masks(self) -> tuple[int, ...]:
        """For each point, the points on a common line with it (itself included)."""
        lm = self.line_masks
        out = []
        for p, ls in enumerate(self.lines_on):
            m = 1 << p
            for li in ls:
                m |= lm[li]
            out.append(m)
        return tuple(out)

    def relabel(self, perm: Sequence[int]) -> "IncidenceStructure":
        """Point i becomes point perm[i]."""
        labels = [""] * len(perm)
        for i, j in enumerate(perm):
            labels[j] = self.points[i]
        return IncidenceStructure.make(
            self.kind,
            labels,
            [[perm[p] for p in b] for b in self.lines],
            [[perm[p] for p in b] for b in self.circles],
        )


# --------------------------------------------------------------------------
# JSON


def to_json(S: IncidenceStructure) -> str:
    doc: dict = {"kind": S.kind, "points": list(S.points), "lines": [list(b) for b in S.lines]}
    if S.kind == POINT_LINE_CIRCLE:
        doc["circles"] = [list(b) for b in S.circles]
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def from_json(text: str) -> IncidenceStructure:
    doc = json.loads(text)
    return IncidenceStructure.make(doc["kind"], doc["points"], doc["lines"], doc.get("circles"))


# --------------------------------------------------------------------------
# Generalized quadrangles


def verify_gq(S: IncidenceStructure) -> GQOrder | AxiomFailure:
    if S.kind != POINT_LINE:
        raise ValueError("verify_gq needs a point-line structure")
    if not S.lines or not S.points:
        return AxiomFailure("nonempty", (), "no points or no lines")
    sizes = {len(b) for b in S.lines}
    if len(sizes) != 1:
        li = next(i for i, b in enumerate(S.lines) if len(b) != len(S.lines[0]))
        return AxiomFailure("line-size", (li,), "lines have different sizes")
    degs = {len(ls) for ls in S.lines_on}
    if len(degs) != 1:
        p = next(i for i, ls in enumerate(S.lines_on) if len(ls) != len(S.lines_on[0]))
        return AxiomFailure("point-degree", (p,), "points lie on different numbers of lines")
    s, t = sizes.pop() - 1, degs.pop() - 1
    if s < 1 or t < 1:
        return AxiomFailure("order", (s, t), "s and t must be positive")
    lm = S.line_masks
    for p, ls in enumerate(S.lines_on):
        for a, b in combinations(ls, 2):
            common = lm[a] & lm[b]
            if common != 1 << p:
                q = next(x for x in _members(common) if x != p)
                return AxiomFailure("two-lines", (p, q, a, b), "two points on two lines")
    col = S.collinear_masks
    for p in range(S.num_points):
        cp = col[p]
        for li, m in enumerate(lm):
            if m >> p & 1:
                continue
            if (cp & m).bit_count() != 1:
                return AxiomFailure("unique-collinear", (p, li), f"{(cp & m).bit_count()} collinear points")
    return GQOrder(s, t)


def perp(S: IncidenceStructure, x: int) -> frozenset[int]:
    return frozenset(_members(S.collinear_masks[x]))


def _perp_mask(S: IncidenceStructure, xs: Iterable[int]) -> int:
    m = (1 << S.num_points) - 1
    for x in xs:
        m &= S.collinear_masks[x]
    return m


def double_perp(S: IncidenceStructure, x: int, y: int) -> frozenset[int]:
    """{x, y}^perp-perp for non-collinear x, y."""
    if S.collinear_masks[x] >> y & 1:
        raise ValueError("points are collinear")
    return frozenset(_members(_perp_mask(S, _members(_perp_mask(S, (x, y))))))


def is_regular_point(S: IncidenceStructure, x: int, t: int | None = None) -> bool:
    if t is None:
        t = len(S.lines_on[x]) - 1
    col = S.collinear_masks[x]
    for y in range(S.num_points):
        if col >> y & 1:
            continue
        if _perp_mask(S, _members(_perp_mask(S, (x, y)))).bit_count() != t + 1:
            return False
    return True


def regular_points(S: IncidenceStructure) -> list[int]:
    return [x for x in range(S.num_points) if is_regular_point(S, x)]


def payne_derive(S: IncidenceStructure, x: int) -> IncidenceStructure:
    """The GQ(q-1, q+1) derived from a GQ(q, q) at a regular point x."""
    order = verify_gq(S)
    if not order or order.s != order.t or order.s < 2:
        raise ValueError(f"Payne derivation needs a GQ(q,q) with q >= 2, got {order}")
    if not is_regular_point(S, x, order.t):
        raise ValueError(f"point {x} is not regular")
    xp = S.collinear_masks[x]
    keep = [p for p in range(S.num_points) if not xp >> p & 1]
    index = {p: i for i, p in enumerate(keep)}
    lines = [[index[p] for p in b if p in index] for b in S.lines if x not in b]
    seen: set[int] = set()
    for y in keep:
        h = _perp_mask(S, _members(_perp_mask(S, (x, y))))
        if h not in seen:
            seen.add(h)
            lines.append([index[p] for p in _members(h) if p != x])
    return IncidenceStructure.make(POINT_LINE, [S.points[p] for p in keep], lines)


def dual(S: IncidenceStructure) -> IncidenceStructure:
    if S.kind != POINT_LINE:
        raise ValueError("dual is defined for point-line structures")
    labels = ["L" + ",".join(S.points[p] for p in b) for b in S.lines]
    return IncidenceStructure.make(POINT_LINE, labels, S.lines_on)


# --------------------------------------------------------------------------
# Laguerre planes and near-planes


def _check_ax123(S: IncidenceStructure) -> AxiomFailure | None:
    for p, ls in enumerate(S.lines_on):
        if len(ls) != 1:
            return AxiomFailure("AX1", (p,), f"point on {len(ls)} lines")
    lm, cm = S.line_masks, S.circle_masks
    for ci, c in enumerate(cm):
        for li, l in enumerate(lm):
            if (c & l).bit_count() != 1:
                return AxiomFailure("AX2", (ci, li), f"circle meets line in {(c & l).bit_count()} points")
    line_of = [ls[0] for ls in S.lines_on]
    through = [_bits(cs) for cs in S.circles_on]
    v = S.num_points
    for a in range(v):
        for b in range(a + 1, v):
            if line_of[a] == line_of[b]:
                continue
            ab = through[a] & through[b]
            for c in range(b + 1, v):
                if line_of[c] in (line_of[a], line_of[b]):
                    continue
                k = (ab & through[c]).bit_count()
                if k != 1:
                    return AxiomFailure("AX3", (a, b, c), f"{k} circles through the triple")
    return None


def verify_laguerre(S: IncidenceStructure) -> int | AxiomFailure:
    """Order n if AX1-AX4 hold and all circles have n + 1 points."""
    if S.kind != POINT_LINE_CIRCLE:
        raise ValueError("verify_laguerre needs a point-line-circle structure")
    if not S.circles or not S.lines:
        return AxiomFailure("nonempty", (), "no circles or no lines")
    sizes = {len(c) for c in S.circles}
    if len(sizes) != 1:
        return AxiomFailure("circle-size", (), f"circle sizes {sorted(sizes)}")
    n = sizes.pop() - 1
    bad = _check_ax123(S)
    if bad is not None:
        return bad
    cm = S.circle_masks
    lm = S.line_masks
    line_of = [ls[0] for ls in S.lines_on]
    through = [_bits(cs) for cs in S.circles_on]
    for ci, c in enumerate(cm):
        for P in _members(c):
            for Q in range(S.num_points):
                if c >> Q & 1 or lm[line_of[P]] >> Q & 1:
                    continue
                hits = [d for d in _members(through[P] & through[Q]) if (cm[d] & c) == 1 << P]
                if len(hits) != 1:
                    return AxiomFailure("AX4", (ci, P, Q), f"{len(hits)} touching circles")
    return n


def verify_near_plane(S: IncidenceStructure) -> int | AxiomFailure:
    """Order n if there are n^2 points, n lines, n^3 circles and AX1-AX3 hold."""
    if S.kind != POINT_LINE_CIRCLE:
        raise ValueError("verify_near_plane needs a point-line-circle structure")
    n = len(S.lines)
    if n < 1 or S.num_points != n * n or len(S.circles) != n**3:
        return AxiomFailure(
            "counts", (S.num_points, len(S.lines), len(S.circles)), f"expected ({n * n},{n},{n**3})"
        )
    bad = _check_ax123(S)
    return n if bad is None else bad


def delete_line(L: IncidenceStructure, line: int) -> IncidenceStructure:
    """Remove a line and its points from a Laguerre plane."""
    gone = set(L.lines[line])
    keep = [p for p in range(L.num_points) if p not in gone]
    index = {p: i for i, p in enumerate(keep)}
    return IncidenceStructure.make(
        POINT_LINE_CIRCLE,
        [L.points[p] for p in keep],
        [[index[p] for p in b] for i, b in enumerate(L.lines) if i != line],
        [[index[p] for p in b if p in index] for b in L.circles],
    )


def derive_affine(L: IncidenceStructure, P: int) -> IncidenceStructure:
    """Points off the line through P; lines not through P and circles through P."""
    if not 0 <= P < L.num_points:
        raise ValueError(f"{P} is not a point")
    (lp,) = L.lines_on[P]
    off = set(L.lines[lp])
    keep = [p for p in range(L.num_points) if p not in off]
    index = {p: i for i, p in enumerate(keep)}
    blocks = [[index[p] for p in b] for i, b in enumerate(L.lines) if i != lp]
    blocks += [[index[p] for p in L.circles[c] if p != P] for c in L.circles_on[P]]
    return IncidenceStructure.make(POINT_LINE, [L.points[p] for p in keep], blocks)


def verify_affine_plane(A: IncidenceStructure) -> int | AxiomFailure:
    sizes = {len(b) for b in A.lines}
    if len(sizes) != 1:
        return AxiomFailure("line-size", (), f"line sizes {sorted(sizes)}")
    m = sizes.pop()
    if m < 2 or A.num_points != m * m or len(A.lines) != m * m + m:
        return AxiomFailure("counts", (A.num_points, len(A.lines)), f"not an affine plane of order {m}")
    lm = A.line_masks
    for p, ls in enumerate(A.lines_on):
        for a, b in combinations(ls, 2):
            if lm[a] & lm[b] != 1 << p:
                return AxiomFailure("two-lines", (p, a, b), "two points on two lines")
    for p in range(A.num_points):
        if A.collinear_masks[p] != (1 << A.num_points) - 1:
            return AxiomFailure("join", (p,), "some point is not joined to p")
    return m


def parallel_classes(A: IncidenceStructure) -> list[list[int]]:
    lm = A.line_masks
    full = (1 << A.num_points) - 1
    classes: list[list[int]] = []
    assigned = [False] * len(lm)
    for i in range(len(lm)):
        if assigned[i]:
            continue
        cls = [j for j in range(len(lm)) if j == i or not lm[i] & lm[j]]
        union = 0
        for j in cls:
            if assigned[j] or union & lm[j]:
                raise ValueError("parallelism is not an equivalence relation")
            union |= lm[j]
            assigned[j] = True
        if union != full:
            raise ValueError("a parallel class does not cover the points")
        classes.append(cls)
    return classes


def complete_affine_to_projective(A: IncidenceStructure) -> IncidenceStructure:
    m = verify_affine_plane(A)
    if not m:
        raise ValueError(f"not an affine plane: {m}")
    classes = parallel_classes(A)
    v = A.num_points
    ideal = {}
    for k, cls in enumerate(classes):
        for li in cls:
            ideal[li] = v + k
    lines = [list(b) + [ideal[i]] for i, b in enumerate(A.lines)]
    lines.append(list(range(v, v + len(classes))))
    labels = list(A.points) + [f"inf{k}" for k in range(len(classes))]
    return IncidenceStructure.make(POINT_LINE, labels, lines)


# --------------------------------------------------------------------------
# Projective planes


def verify_projective_plane(P: IncidenceStructure) -> int | AxiomFailure:
    sizes = {len(b) for b in P.lines}
    if len(sizes) != 1:
        return AxiomFailure("line-size", (), f"line sizes {sorted(sizes)}")
    m = sizes.pop() - 1
    N = m * m + m + 1
    if m < 2 or P.num_points != N or len(P.lines) != N:
        return AxiomFailure("counts", (P.num_points, len(P.lines)), f"not a plane of order {m}")
    full = (1 << N) - 1
    for p in range(N):
        if P.collinear_masks[p] != full:
            return AxiomFailure("join", (p,), "some point is not joined to p")
    lm = P.line_masks
    for a, b in combinations(range(N), 2):
        if (lm[a] & lm[b]).bit_count() != 1:
            return AxiomFailure("meet", (a, b), "lines do not meet in one point")
    return m


def standard_projective_plane(m: int) -> IncidenceStructure:
    from .planes import plane
    from .projgeom import point_vector

    pl = plane(m)
    labels = [",".join(map(str, point_vector(i, 2, m))) for i in range(pl.size)]
    return IncidenceStructure.make(POINT_LINE, labels, pl.line_points)


class _PlaneTables:
    def __init__(self, P: IncidenceStructure):
        N = P.num_points
        self.N = N
        self.join = [[-1] * N for _ in range(N)]
        for li, b in enumerate(P.lines):
            for x in b:
                for y in b:
                    if x != y:
                        self.join[x][y] = li
        self.meet = [[-1] * N for _ in range(N)]
        for p, ls in enumerate(P.lines_on):
            for a in ls:
                for b in ls:
                    if a != b:
                        self.meet[a][b] = p
        self.lines = P.lines
        self.lines_on = P.lines_on


def _close(A: _PlaneTables, B: _PlaneTables, pmap: dict[int, int], lmap: dict[int, int]) -> bool:
    """Extend a partial point/line map by joins and meets; False on conflict."""
    pinv = {v: k for k, v in pmap.items()}
    linv = {v: k for k, v in lmap.items()}
    pq = list(pmap)
    lq = list(lmap)

    def set_line(l: int, l2: int) -> bool:
        if l in lmap:
            return lmap[l] == l2
        if l2 in linv:
            return False
        lmap[l], linv[l2] = l2, l
        lq.append(l)
        return True

    def set_point(p: int, p2: int) -> bool:
        if p in pmap:
            return pmap[p] == p2
        if p2 in pinv:
            return False
        pmap[p], pinv[p2] = p2, p
        pq.append(p)
        return True

    done_p: list[int] = []
    done_l: list[int] = []
    while pq or lq:
        if pq:
            p = pq.pop()
            for r in done_p:
                if not set_line(A.join[p][r], B.join[pmap[p]][pmap[r]]):
                    return False
            for l in done_l:
                if (p in A.lines[l]) != (pmap[p] in B.lines[lmap[l]]):
                    return False
            done_p.append(p)
        else:
            l = lq.pop()
            for k in done_l:
                if not set_point(A.meet[l][k], B.meet[lmap[l]][lmap[k]]):
                    return False
            for r in done_p:
                if (r in A.lines[l]) != (pmap[r] in B.lines[lmap[l]]):
                    return False
            done_l.append(l)
    return True


def is_desarguesian_plane(P: IncidenceStructure, max_order: int = 9) -> tuple[bool, dict[int, int] | None]:
    """Whether P is isomorphic to PG(2, m); the witness maps P's points to PG(2, m) ids."""
    from .gf import UnsupportedField, factor_prime_power

    m = verify_projective_plane(P)
    if not m:
        raise ValueError(f"not a projective plane: {m}")
    if m > max_order:
        raise ValueError(f"order {m} exceeds the supported bound {max_order}")
    try:
        factor_prime_power(m)
    except UnsupportedField:
        return False, None
    Q = standard_projective_plane(m)
    A, B = _PlaneTables(P), _PlaneTables(Q)
    # A quadrangle of P: two points, a third off their line, a fourth off all three joins.
    a, b = 0, P.lines[0][1] if P.lines[0][0] == 0 else P.lines[0][0]
    lab = A.join[a][b]
    c = next(x for x in range(A.N) if x not in P.lines[lab])
    bad = set(P.lines[lab]) | set(P.lines[A.join[a][c]]) | set(P.lines[A.join[b][c]])
    d = next(x for x in range(A.N) if x not in bad)
    from .planes import plane
    from .projgeom import point_id

    frame = [point_id(v, m) for v in ((1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1))]

    def search(pmap: dict[int, int], lmap: dict[int, int]) -> dict[int, int] | None:
        if not _close(A, B, pmap, lmap):
            return None
        if len(pmap) == A.N:
            return pmap
        # Branch on an unmapped point of a mapped line.
        for l, l2 in sorted(lmap.items()):
            free = [x for x in P.lines[l] if x not in pmap]
            if free:
                x = free[0]
                used = set(pmap.values())
                for y in Q.lines[l2]:
                    if y in used:
                        continue
                    res = search(dict(pmap, **{}) | {x: y}, dict(lmap))
                    if res is not None:
                        return res
                return None
        return None

    res = search({a: frame[0], b: frame[1], c: frame[2], d: frame[3]}, {})
    if res is None:
        return False, None
    for li, blk in enumerate(P.lines):
        img = sorted(res[x] for x in blk)
        if tuple(img) not in set(Q.lines):
            return False, None
    return True, res


# --------------------------------------------------------------------------
# Miquel configurations


@dataclass(frozen=True)
class MiquelResult:
    holds: bool
    trials: int
    counterexample: tuple[int, ...] | None = None

    def __bool__(self) -> bool:
        return self.holds


def _circle_through(S: IncidenceStructure, through: list[int], a: int, b: int, c: int) -> int | None:
    m = through[a] & through[b] & through[c]
    return (m & -m).bit_length() - 1 if m else None


def miquel_check(
    L: IncidenceStructure, trials: int = 1000, seed: int = 0, exhaustive: bool = False
) -> MiquelResult:
    """Sample configurations with (ABCD), (ABEF), (BCFG), (CDGH), (ADEH) and test (EFGH).

    Configurations in which E, F, G, H contain two points on a common line are
    skipped, since such points never share a circle.
    """
    through = [_bits(cs) for cs in L.circles_on]
    line_of = [ls[0] for ls in L.lines_on]
    cm = L.circle_masks
    rng = random.Random(seed)
    v = L.num_points

    def check(A, B, C, D, E, F, G) -> tuple[int, ...] | None | bool:
        c1 = _circle_through(L, through, C, D, G)
        c2 = _circle_through(L, through, A, D, E)
        if c1 is None or c2 is None:
            return None
        used = {A, B, C, D, E, F, G}
        Hs = [h for h in _members(cm[c1] & cm[c2]) if h not in used]
        if not Hs:
            return None
        (H,) = Hs
        if len({line_of[E], line_of[F], line_of[G], line_of[H]}) < 4:
            return None
        if not through[E] & through[F] & through[G] & through[H]:
            return (A, B, C, D, E, F, G, H)
        return True

    def configs_exhaustive():
        for c0 in range(len(cm)):
            pts = _members(cm[c0])
            for A in pts:
                for B in pts:
                    for C in pts:
                        for D in pts:
                            if len({A, B, C, D}) < 4:
                                continue
                            for E in range(v):
                                if E in (A, B, C, D) or line_of[E] in (line_of[A], line_of[B]):
                                    continue
                                cABE = _circle_through(L, through, A, B, E)
                                if cABE is None:
                                    continue
                                for F in _members(cm[cABE]):
                                    if F in (A, B, E):
                                        continue
                                    cBCF = _circle_through(L, through, B, C, F)
                                    if cBCF is None:
                                        continue
                                    for G in _members(cm[cBCF]):
                                        if G not in (A, B, C, D, E, F):
                                            yield A, B, C, D, E, F, G

    def configs_random():
        for _ in range(200 * trials + 10000):
            c0 = rng.randrange(len(cm))
            A, B, C, D = rng.sample(_members(cm[c0]), 4)
            E = rng.randrange(v)
            if E in (A, B, C, D) or line_of[E] in (line_of[A], line_of[B]):
                continue
            cABE = _circle_through(L, through, A, B, E)
            if cABE is None:
                continue
            F = rng.choice(_members(cm[cABE]))
            if F in (A, B, C, D, E) or line_of[F] == line_of[C]:
                continue
            cBCF = _circle_through(L, through, B, C, F)
            if cBCF is None:
                continue
            G = rng.choice(_members(cm[cBCF]))
            if G in (A, B, C, D, E, F):
                continue
            yield A, B, C, D, E, F, G

    tested = 0
    source = configs_exhaustive() if exhaustive else configs_random()
    attempts = 0
    for cfg in source:
        attempts += 1
        res = check(*cfg)
        if res is None:
            if not exhaustive and attempts > 50 * trials + 1000:
                break
            continue
        tested += 1
        if res is not True:
            return MiquelResult(False, tested, res)
        if not exhaustive and tested >= trials:
            break
    return MiquelResult(True, tested)


# --------------------------------------------------------------------------
# Isomorphism by colour refinement and individualization


@dataclass(frozen=True)
class Isomorphism:
    points: tuple[int, ...]  # point i of the first structure -> points[i]
    lines: tuple[int, ...]
    circles: tuple[int, ...]


class _Graph:
    def __init__(self, S: IncidenceStructure):
        v = S.num_points
        blocks = [(1, b) for b in S.lines] + [(2, b) for b in S.circles]
        self.n = v + len(blocks)
        self.kind = [0] * v + [k for k, _ in blocks]
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, (_, b) in enumerate(blocks):
            for p in b:
                adj[p].append(v + i)
                adj[v + i].append(p)
        self.adj = adj
        self.edges = {(a, b) for a in range(self.n) for b in adj[a]}


def _refine(g1: _Graph, g2: _Graph, c1: list[int], c2: list[int]) -> tuple[list[int], list[int]] | None:
    while True:
        s1 = [(c1[v], tuple(sorted(c1[u] for u in g1.adj[v]))) for v in range(g1.n)]
        s2 = [(c2[v], tuple(sorted(c2[u] for u in g2.adj[v]))) for v in range(g2.n)]
        if sorted(s1) != sorted(s2):
            return None
        rank = {s: i for i, s in enumerate(sorted(set(s1)))}
        n1 = [rank[s] for s in s1]
        n2 = [rank[s] for s in s2]
        if len(rank) == len(set(c1)):
            return n1, n2
        c1, c2 = n1, n2


def isomorphic(
    S1: IncidenceStructure, S2: IncidenceStructure, budget: int = 100000
) -> Isomorphism | None:
    """An incidence-preserving bijection, or None when none exists.

    Raises BudgetExceeded when the search tree outgrows the budget.
    """
    if S1.kind != S2.kind:
        return None
    if (S1.num_points, len(S1.lines), len(S1.circles)) != (S2.num_points, len(S2.lines), len(S2.circles)):
        return None
    g1, g2 = _Graph(S1), _Graph(S2)
    nodes = 0

    def search(c1: list[int], c2: list[int]) -> list[int] | None:
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise BudgetExceeded(f"isomorphism search exceeded {budget} nodes")
        r = _refine(g1, g2, c1, c2)
        if r is None:
            return None
        c1, c2 = r
        counts: dict[int, int] = {}
        for c in c1:
            counts[c] = counts.get(c, 0) + 1
        if all(k == 1 for k in counts.values()):
            pos = {c: v for v, c in enumerate(c2)}
            f = [pos[c] for c in c1]
            if all((f[a], f[b]) in g2.edges for a, b in g1.edges):
                return f
            return None
        # Smallest non-singleton cell of points first: blocks split poorly.
        kinds = {c: g1.kind[v] for v, c in enumerate(c1)}
        target = min((kinds[c] != 0, k, c) for c, k in counts.items() if k > 1)[2]
        v = c1.index(target)
        fresh = max(c1) + 1
        n1 = c1[:]
        n1[v] = fresh
        for w in [u for u in range(g2.n) if c2[u] == target]:
            n2 = c2[:]
            n2[w] = fresh
            res = search(n1, n2)
            if res is not None:
                return res
        return None

    init1 = [g1.kind[v] * 100000 + len(g1.adj[v]) for v in range(g1.n)]
    init2 = [g2.kind[v] * 100000 + len(g2.adj[v]) for v in range(g2.n)]
    f = search(init1, init2)
    if f is None:
        return None
    v, nl = S1.num_points, len(S1.lines)
    return Isomorphism(
        tuple(f[:v]),
        tuple(x - v for x in f[v : v + nl]),
        tuple(x - v - nl for x in f[v + nl :]),
    )


def check_isomorphism(S1: IncidenceStructure, S2: IncidenceStructure, iso: Isomorphism) -> bool:
    lines2 = set(S2.lines)
    circles2 = set(S2.circles)
    for i, b in enumerate(S1.lines):
        img = tuple(sorted(iso.points[p] for p in b))
        if img not in lines2 or S2.lines[iso.lines[i]] != img:
            return False
    for i, b in enumerate(S1.circles):
        img = tuple(sorted(iso.points[p] for p in b))
        if img not in circles2 or S2.circles[iso.circles[i]] != img:
            return False
    return len(set(iso.points)) == S1.num_points
