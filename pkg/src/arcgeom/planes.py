"""Arcs and conics in PG(2, q)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Sequence

from .gf import FieldTable, field, factor_prime_power
from .projgeom import Vector, normalize, point_count, point_id, point_vector, rref


class NotAnArc(ValueError):
    pass


class DegenerateConic(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Plane:
    """Incidence tables of PG(2, q). Line i has dual coordinates point_vector(i)."""

    q: int
    points: tuple[Vector, ...]
    line_points: tuple[tuple[int, ...], ...]
    point_lines: tuple[tuple[int, ...], ...]
    line_masks: tuple[int, ...]
    join: tuple[tuple[int, ...], ...]  # join[a][b] = line id, -1 on the diagonal

    @property
    def size(self) -> int:
        return len(self.points)

    def line_vector(self, line: int) -> Vector:
        return self.points[line]

    def line_id(self, coeffs: Sequence[int]) -> int:
        return point_id(normalize(coeffs, field(self.q)), self.q)


@lru_cache(maxsize=None)
def plane(q: int) -> Plane:
    F = field(q)
    pts = tuple(point_vector(i, 2, q) for i in range(point_count(2, q)))
    N = len(pts)
    lp: list[list[int]] = [[] for _ in range(N)]
    pl: list[list[int]] = [[] for _ in range(N)]
    for li, lv in enumerate(pts):
        for pi, pv in enumerate(pts):
            if _dot(lv, pv, F) == 0:
                lp[li].append(pi)
                pl[pi].append(li)
    join = [[-1] * N for _ in range(N)]
    for li, ps in enumerate(lp):
        for a in ps:
            for b in ps:
                if a != b:
                    join[a][b] = li
    masks = tuple(sum(1 << p for p in ps) for ps in lp)
    return Plane(q, pts, tuple(map(tuple, lp)), tuple(map(tuple, pl)), masks, tuple(map(tuple, join)))


def _dot(u, v, F: FieldTable) -> int:
    acc = 0
    for a, b in zip(u, v):
        if a and b:
            acc = F.add[acc][F.mul[a][b]]
    return acc


def _ids(points: Iterable, q: int) -> list[int]:
    F = field(q)
    out = []
    for p in points:
        out.append(p if isinstance(p, int) else point_id(normalize(p, F), q))
    return out


def det3(a, b, c, F: FieldTable) -> int:
    add, mul, neg = F.add, F.mul, F.neg

    def m(x, y):
        return mul[x][y]

    t1 = m(a[0], add[m(b[1], c[2])][neg[m(b[2], c[1])]])
    t2 = m(a[1], add[m(b[0], c[2])][neg[m(b[2], c[0])]])
    t3 = m(a[2], add[m(b[0], c[1])][neg[m(b[1], c[0])]])
    return add[add[t1][neg[t2]]][t3]


# --------------------------------------------------------------------------
# Arcs


def is_arc(points: Iterable, q: int) -> tuple[bool, tuple[int, int, int] | None]:
    """(True, None) if no three of the points are collinear, else (False, triple)."""
    ids = _ids(points, q)
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate points")
    P = plane(q)
    for a, b, c in combinations(ids, 3):
        if P.join[a][b] == P.join[a][c]:
            return False, (a, b, c)
    return True, None


def tangent_lines(arc: Iterable, P, q: int) -> list[int]:
    """Ids of the lines through P meeting the arc only in P."""
    ids = _ids(arc, q)
    (p,) = _ids([P], q)
    if p not in ids:
        raise ValueError("point is not on the arc")
    pl = plane(q)
    arc_mask = sum(1 << i for i in ids)
    return [li for li in pl.point_lines[p] if pl.line_masks[li] & arc_mask == 1 << p]


def extension_points(arc: Iterable, q: int) -> list[int]:
    """Points whose addition keeps the set an arc."""
    ids = _ids(arc, q)
    pl = plane(q)
    covered = sum(1 << i for i in ids)
    for a, b in combinations(ids, 2):
        covered |= pl.line_masks[pl.join[a][b]]
    return [i for i in range(pl.size) if not covered >> i & 1]


# --------------------------------------------------------------------------
# Conics: a X^2 + b Y^2 + c Z^2 + d XY + e XZ + f YZ


MONOMIALS = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


@dataclass(frozen=True)
class Conic:
    q: int
    coeffs: tuple[int, int, int, int, int, int]

    @classmethod
    def make(cls, q: int, coeffs: Sequence[int]) -> "Conic":
        if not any(coeffs):
            raise DegenerateConic("all coefficients vanish")
        return cls(q, normalize(tuple(coeffs), field(q)))  # type: ignore[arg-type]

    def evaluate(self, v: Sequence[int]) -> int:
        F = field(self.q)
        acc = 0
        for c, (i, j) in zip(self.coeffs, MONOMIALS):
            if c:
                acc = F.add[acc][F.mul[c][F.mul[v[i]][v[j]]]]
        return acc

    def contains(self, p) -> bool:
        v = point_vector(p, 2, self.q) if isinstance(p, int) else p
        return self.evaluate(v) == 0

    def gradient(self, v: Sequence[int]) -> Vector:
        F = field(self.q)
        a, b, c, d, e, f = self.coeffs
        add, mul = F.add, F.mul
        two = F.from_int(2)
        gx = add[add[mul[mul[two][a]][v[0]]][mul[d][v[1]]]][mul[e][v[2]]]
        gy = add[add[mul[mul[two][b]][v[1]]][mul[d][v[0]]]][mul[f][v[2]]]
        gz = add[add[mul[mul[two][c]][v[2]]][mul[e][v[0]]]][mul[f][v[1]]]
        return (gx, gy, gz)

    def tangent_line(self, p) -> int:
        """Id of the tangent line at a point of the conic."""
        v = point_vector(p, 2, self.q) if isinstance(p, int) else tuple(p)
        if self.evaluate(v) != 0:
            raise ValueError("point is not on the conic")
        g = self.gradient(v)
        if not any(g):
            raise DegenerateConic("singular point")
        return point_id(normalize(g, field(self.q)), self.q)


def conic_points(C: Conic) -> list[int]:
    pl = plane(C.q)
    pts = [i for i, v in enumerate(pl.points) if C.evaluate(v) == 0]
    if len(pts) != C.q + 1:
        raise DegenerateConic(f"conic has {len(pts)} points, expected {C.q + 1}")
    mask = sum(1 << i for i in pts)
    if any(m & mask == m for m in pl.line_masks):
        raise DegenerateConic("conic contains a line")
    return pts


def _nullspace_vector(rows: list[Vector], F: FieldTable, m: int) -> Vector:
    red = rref(rows, F, m)
    if len(red) != m - 1:
        raise NotAnArc(f"evaluation system has rank {len(red)}, expected {m - 1}")
    piv = [next(j for j, c in enumerate(r) if c) for r in red]
    (free,) = [j for j in range(m) if j not in piv]
    v = [0] * m
    v[free] = 1
    for r, c in zip(red, piv):
        v[c] = F.neg[r[free]]
    return tuple(v)


def conic_through_five(points: Sequence, q: int) -> Conic:
    if q < 4:
        raise ValueError("PG(2,q) has no 5-arcs for q < 4")
    ids = _ids(points, q)
    if len(ids) != 5:
        raise ValueError("exactly five points required")
    ok, bad = is_arc(ids, q)
    if not ok:
        raise NotAnArc(f"collinear triple {bad}")
    F = field(q)
    pl = plane(q)
    rows = []
    for i in ids:
        v = pl.points[i]
        rows.append(tuple(F.mul[v[a]][v[b]] for a, b in MONOMIALS))
    return Conic.make(q, _nullspace_vector(rows, F, 6))


def complete_arc_to_conic(arc: Sequence, q: int) -> tuple[Conic, list[int]]:
    """The conic through a q-arc, q odd and at least 5, plus the added point."""
    ids = _ids(arc, q)
    if q % 2 == 0 or q < 5:
        raise ValueError("completion to a unique conic needs q odd and q >= 5")
    if len(ids) != q:
        raise ValueError(f"expected a {q}-arc")
    ok, bad = is_arc(ids, q)
    if not ok:
        raise NotAnArc(f"collinear triple {bad}")
    ext = extension_points(ids, q)
    if len(ext) != 1:
        raise AssertionError(f"q-arc has {len(ext)} completions; expected exactly one")
    full = ids + ext
    C = conic_through_five(full[:5], q)
    if not all(C.contains(p) for p in full):
        raise AssertionError("completed oval is not a conic")
    return C, ext


def common_tangent_audit(conics: Sequence[Conic], base_point) -> tuple[bool, list[int]]:
    """Whether all conics share the tangent line at base_point; also the tangent ids."""
    lines = []
    for C in conics:
        if not C.contains(base_point):
            raise ValueError(f"{C} does not pass through the base point")
        lines.append(C.tangent_line(base_point))
    return len(set(lines)) <= 1, lines


# --------------------------------------------------------------------------
# Complete arcs and the second-largest complete arc


@dataclass
class CompleteArcs:
    q: int
    counts: dict[int, int]  # size -> number of complete arcs through the standard frame
    representatives: dict[int, tuple[int, ...]]
    nodes: int

    @property
    def sizes(self) -> list[int]:
        return sorted(self.counts)


CLASSIFY_MAX_Q = 9


def classify_complete_arcs(q: int) -> CompleteArcs:
    """All complete arcs of PG(2, q) containing the frame e0, e1, e2, (1,1,1).

    Every complete arc has at least four points and PGL(3, q) is transitive on
    ordered frames, so the sizes found are exactly the complete-arc sizes.
    """
    if q > CLASSIFY_MAX_Q:
        raise ValueError(f"q = {q} is beyond the exhaustive range (q <= {CLASSIFY_MAX_Q})")
    pl = plane(q)
    N = pl.size
    full = (1 << N) - 1
    frame = _ids([(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)], q)
    join, masks = pl.join, pl.line_masks
    covered = 0
    for a, b in combinations(frame, 2):
        covered |= masks[join[a][b]]
    counts: dict[int, int] = {}
    reps: dict[int, tuple[int, ...]] = {}
    nodes = 0

    def dfs(arc: list[int], cov: int, last: int) -> None:
        nonlocal nodes
        nodes += 1
        free = full & ~cov
        if not free:
            k = len(arc)
            counts[k] = counts.get(k, 0) + 1
            reps.setdefault(k, tuple(sorted(arc)))
            return
        free >>= last + 1
        c = last + 1
        while free:
            if free & 1:
                new = cov
                for a in arc:
                    new |= masks[join[a][c]]
                arc.append(c)
                dfs(arc, new, c)
                arc.pop()
            free >>= 1
            c += 1

    dfs(list(frame), covered, -1)
    return CompleteArcs(q, counts, reps, nodes)


@dataclass(frozen=True)
class M2Value:
    """Tagged value of the second-largest complete arc size."""

    kind: str  # "exact" | "upper_bound" | "none" | "unknown"
    value: int | None = None
    branches: tuple[str, ...] = ()

    def threshold_ok(self, s: int) -> bool:
        """Whether s strictly exceeds the value (bounds count as known values)."""
        if self.kind == "none":
            return True
        if self.kind == "unknown" or self.value is None:
            return False
        return s > self.value


EXACT_M2_ORDERS = (3, 5, 7, 9)


@lru_cache(maxsize=None)
def m2_prime(q: int) -> M2Value:
    p, h = factor_prime_power(q)
    if p == 2:
        return M2Value("unknown")
    if q in EXACT_M2_ORDERS:
        sizes = [k for k in classify_complete_arcs(q).sizes if k < q + 1]
        if not sizes:
            return M2Value("none", None, ("exhaustive",))
        return M2Value("exact", max(sizes), ("exhaustive",))
    bounds: list[tuple[str, float]] = []
    root = math.sqrt(q)
    if p >= 5:
        bounds.append(("1", q - root / 2 + 5))
    if q >= 23**2 and q not in (5**5, 3**6) and (p != 3 or h % 2 == 0):
        bounds.append(("2", q - root / 2 + 3))
    if h % 2 == 1:
        bounds.append(("3", q - math.sqrt(p * q) / 4 + 29 * p / 16 + 1))
    if h == 1:
        bounds.append(("4", 44 * q / 45 + 8 / 9))
    if not bounds:
        return M2Value("unknown")
    best = min(v for _, v in bounds)
    used = tuple(name for name, v in bounds if v == best)
    return M2Value("upper_bound", math.floor(best + 1e-9), used)


# --------------------------------------------------------------------------
# Conics tangent at (1,0,0)


@dataclass(frozen=True)
class TangentConicParams:
    """Coefficients of XZ + d Y^2 + e YZ + f Z^2 (tangent Z = 0) and of
    XY + rho XZ + d_i Y^2 + e_i YZ + f_i Z^2 (tangent Y + rho Z = 0)."""

    q: int
    d_bar: int
    e_bar: int
    f_bar: int
    rho: int
    d_i: int = 0
    e_i: int = 0
    f_i: int = 0

    def conic_zero(self) -> Conic:
        return Conic.make(self.q, (0, self.d_bar, self.f_bar, 0, 1, self.e_bar))

    def conic_i(self) -> Conic:
        return Conic.make(self.q, (0, self.d_i, self.f_i, 1, self.rho, self.e_i))

    def cubic(self) -> tuple[int, int, int, int]:
        """Coefficients (y^3, y^2, y, 1) of the intersection cubic in y."""
        F = field(self.q)
        add, mul, neg = F.add, F.mul, F.neg
        d, e, f, r = self.d_bar, self.e_bar, self.f_bar, self.rho
        c3 = neg[d]
        c2 = add[add[neg[e]][neg[mul[r][d]]]][self.d_i]
        c1 = add[add[neg[f]][neg[mul[r][e]]]][self.e_i]
        c0 = add[neg[mul[r][f]]][self.f_i]
        return c3, c2, c1, c0


def third_root_vieta(params: TangentConicParams, y0: int, y1: int) -> int:
    """Third intersection parameter y2 = (f_i - rho f) / (d y0 y1)."""
    F = field(params.q)
    den = F.mul[params.d_bar][F.mul[y0][y1]]
    if den == 0:
        raise ZeroDivisionError("d * y0 * y1 vanishes")
    num = F.add[params.f_i][F.neg[F.mul[params.rho][params.f_bar]]]
    return F.div(num, den)
