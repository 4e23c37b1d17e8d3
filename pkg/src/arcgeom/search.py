"""Isomorph-reduced enumeration of pseudo-arcs and extendability audits.

Symmetry modes fix a prefix of canonical elements before the free search:

* ``none``: nothing fixed.
* ``fix-first``: K1 = [I 0 0].
* ``fix-first-two``: K1 and K2 = [0 I 0].
* ``frame``: K1, K2, K3 = [0 0 I] and K4 = [I I I]; the fifth element then
  runs over orbit representatives of the frame stabiliser.

A prefix is only trusted after a stepwise orbit certificate shows that the
stabiliser of the earlier canonical elements is transitive on the admissible
choices for the next one. Without that certificate the engine falls back to
``none``.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field as dc_field
from functools import lru_cache
from itertools import product
from pathlib import Path
from typing import Callable, Sequence

from .gf import field, factor_prime_power
from .incidence import BudgetExceeded
from .projgeom import (
    Collineation,
    Subspace,
    gaussian_binomial,
    gl_generators,
    identity_matrix,
    normalize,
    point_count,
    point_id,
    point_vector,
    rank,
    span,
    subspace_to_text,
    subspaces_avoiding,
)
from .pseudoarcs import (
    PseudoArc,
    PseudoArcError,
    _block_diag,
    frame_elements,
    is_pseudo_arc,
    max_size,
    pseudo_arc_to_text,
)

MODES = ("none", "fix-first", "fix-first-two", "frame")
PREFIX_LENGTH = {"none": 0, "fix-first": 1, "fix-first-two": 2, "frame": 4}
PREFILTERS = ("bitset", "rank")
HEADLINE_AUDITS = ((2, 2, 4), (2, 3, 9), (3, 2, 8))
BUDGET_ENV = "ARCGEOM_BUDGET"
CHECKPOINT_MAGIC = "arcgeom-checkpoint 1"


@dataclass(frozen=True)
class SearchSpec:
    n: int
    q: int
    size: int
    symmetry: str = "none"
    prefilter: str = "bitset"
    budget: int | None = None
    shards: int = 1

    def __post_init__(self) -> None:
        if self.symmetry not in MODES:
            raise ValueError(f"unknown symmetry mode {self.symmetry!r}")
        if self.prefilter not in PREFILTERS:
            raise ValueError(f"unknown prefilter {self.prefilter!r}")
        if self.n < 1 or self.size < 1 or self.shards < 1:
            raise ValueError("n, size and shards must be positive")
        factor_prime_power(self.q)

    @property
    def ambient(self) -> int:
        return 3 * self.n - 1

    def digest(self) -> str:
        """Identifies the search tree; the budget is deliberately excluded."""
        key = [self.n, self.q, self.size, self.symmetry, self.prefilter, self.shards]
        return hashlib.sha256(json.dumps(key).encode()).hexdigest()[:16]


@dataclass
class OrbitCertificate:
    label: str
    objects: int
    orbit_sizes: tuple[int, ...]
    transversal: tuple
    claimed: int | None = None

    @property
    def orbit_count(self) -> int:
        return len(self.orbit_sizes)

    @property
    def holds(self) -> bool:
        return self.claimed is None or self.claimed == self.orbit_count

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "objects": self.objects,
            "orbit_count": self.orbit_count,
            "orbit_sizes": list(self.orbit_sizes),
            "claimed": self.claimed,
            "holds": self.holds,
            "transversal": [_describe(t) for t in self.transversal],
        }


@dataclass
class AuditReport:
    n: int
    q: int
    size: int
    symmetry: str
    nodes: int = 0
    found: int = 0
    extendable: int = 0
    complete: int = 0
    exhaustive: bool = True
    wall_time: float = 0.0
    shards: int = 1
    certificates: list[dict] = dc_field(default_factory=list)
    complete_examples: list[str] = dc_field(default_factory=list)
    notes: list[str] = dc_field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return self.extendable + self.complete == self.found

    @property
    def claim_holds(self) -> bool:
        """Every enumerated pseudo-arc lies in a pseudo-oval, and nothing was skipped."""
        return self.exhaustive and self.complete == 0 and self.consistent

    @property
    def verdict(self) -> str:
        tag = "exhaustive" if self.exhaustive else "non-exhaustive"
        return f"complete-count {self.complete} found {self.found} nodes {self.nodes} {tag}"

    def to_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        if not timing:
            d.pop("wall_time")
        d["claim_holds"] = self.claim_holds
        return d

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), sort_keys=True, indent=1)


@dataclass
class Enumeration:
    arcs: list[PseudoArc]
    report: AuditReport


def _describe(obj) -> str:
    if isinstance(obj, Subspace):
        return ";".join("".join(map(str, r)) if obj.q < 10 else ",".join(map(str, r)) for r in obj.rows)
    return " | ".join(_describe(o) for o in obj)


def default_budget() -> int | None:
    raw = os.environ.get(BUDGET_ENV)
    return int(raw) if raw else None


# --------------------------------------------------------------------------
# Group actions on point masks


def point_permutation(g: Collineation, n: int, q: int) -> list[int]:
    F = field(q)
    return [point_id(normalize(g.apply_vector(point_vector(i, n, q)), F), q) for i in range(point_count(n, q))]


def _image(mask: int, perm: Sequence[int]) -> int:
    out = 0
    while mask:
        low = mask & -mask
        out |= 1 << perm[low.bit_length() - 1]
        mask ^= low
    return out


def _key(obj):
    return obj.mask if isinstance(obj, Subspace) else tuple(o.mask for o in obj)


def _act(key, perm):
    if isinstance(key, int):
        return _image(key, perm)
    return tuple(_image(k, perm) for k in key)


def _perms(generators: Sequence[Collineation]) -> list[list[int]]:
    return [point_permutation(g, g.n, g.q) for g in generators]


def orbit_certificate(
    generators: Sequence[Collineation],
    objects: Sequence,
    claimed_orbits: int | None = None,
    budget: int | None = None,
    label: str = "",
) -> OrbitCertificate:
    """Orbits of the generated group on a finite invariant set of subspaces or tuples of them."""
    objects = list(objects)
    if not objects:
        return OrbitCertificate(label, 0, (), (), claimed_orbits)
    perms = _perms(generators)
    index = {_key(o): i for i, o in enumerate(objects)}
    seen = [False] * len(objects)
    sizes: list[int] = []
    reps: list = []
    visited = 0
    for start in range(len(objects)):
        if seen[start]:
            continue
        seen[start] = True
        frontier = [_key(objects[start])]
        size = 0
        while frontier:
            k = frontier.pop()
            size += 1
            visited += 1
            if budget is not None and visited > budget:
                raise BudgetExceeded(f"orbit closure exceeded {budget} objects")
            for p in perms:
                img = _act(k, p)
                j = index.get(img)
                if j is None:
                    raise ValueError("object set is not invariant under the generators")
                if not seen[j]:
                    seen[j] = True
                    frontier.append(img)
        sizes.append(size)
        reps.append(objects[start])
    return OrbitCertificate(label, len(objects), tuple(sizes), tuple(reps), claimed_orbits)


def orbit_partition(generators: Sequence[Collineation], objects: Sequence[Subspace]) -> list[int]:
    """For each object, the least index in its orbit."""
    perms = _perms(generators)
    index = {o.mask: i for i, o in enumerate(objects)}
    rep = [-1] * len(objects)
    for start in range(len(objects)):
        if rep[start] >= 0:
            continue
        rep[start] = start
        frontier = [objects[start].mask]
        while frontier:
            k = frontier.pop()
            for p in perms:
                j = index[_image(k, p)]
                if rep[j] < 0:
                    rep[j] = start
                    frontier.append(objects[j].mask)
    return rep


def _closure_certificate(
    generators: Sequence[Collineation],
    seed: Subspace,
    total: int,
    fixed: Sequence[Subspace],
    budget: int | None,
    label: str,
) -> OrbitCertificate:
    """Single-orbit claim by counting: the orbit of seed has the size of the whole admissible set."""
    perms = _perms(generators)
    for p in perms:
        for K in fixed:
            if _image(K.mask, p) != K.mask:
                raise ValueError(f"{label}: a generator moves a fixed element")
    seen = {seed.mask}
    frontier = [seed.mask]
    while frontier:
        k = frontier.pop()
        for p in perms:
            img = _image(k, p)
            if img not in seen:
                seen.add(img)
                if budget is not None and len(seen) > budget:
                    raise BudgetExceeded(f"orbit closure exceeded {budget} objects")
                frontier.append(img)
    return OrbitCertificate(label, total, (len(seen),) if len(seen) == total else (len(seen), total - len(seen)), (seed,), 1)


# --------------------------------------------------------------------------
# Stabilisers of canonical prefixes


def _block_generators(m: int, q: int, blocks: Sequence[tuple[int, int]]) -> list[tuple[tuple[int, ...], ...]]:
    out = []
    for start, size in blocks:
        for g in gl_generators(size, q):
            M = [list(r) for r in identity_matrix(m)]
            for i in range(size):
                for j in range(size):
                    M[start + i][start + j] = g[i][j]
            out.append(tuple(map(tuple, M)))
    return out


def _shear(m: int, row: int, col: int) -> tuple[tuple[int, ...], ...]:
    M = [list(r) for r in identity_matrix(m)]
    M[row][col] = 1
    return tuple(map(tuple, M))


def prefix_stabilizer(n: int, q: int, k: int) -> list[Collineation]:
    """Generators of a group fixing the first k canonical frame elements."""
    m = 3 * n
    F = field(q)
    if k == 0:
        mats = _block_generators(m, q, [(0, m)])
    elif k == 1:
        mats = _block_generators(m, q, [(0, n), (n, 2 * n)]) + [_shear(m, n, 0)]
    elif k == 2:
        mats = _block_generators(m, q, [(0, n), (n, n), (2 * n, n)])
        mats += [_shear(m, 2 * n, 0), _shear(m, 2 * n, n)]
    elif k == 3:
        mats = _block_generators(m, q, [(0, n), (n, n), (2 * n, n)])
    else:
        mats = [_block_diag([g, g, g], F) for g in gl_generators(n, q)]
    gens = [Collineation(q, M, 0) for M in mats]
    if F.h > 1:
        gens.append(Collineation(q, identity_matrix(m), 1))
    return gens


def _gl_order(n: int, q: int) -> int:
    out = 1
    for i in range(n):
        out *= q**n - q**i
    return out


def admissible_count(n: int, q: int, k: int) -> int:
    """Number of choices for element k+1 once the first k canonical elements are fixed."""
    if k == 0:
        return gaussian_binomial(3 * n, n, q)
    if k == 1:
        return q ** (n * n) * gaussian_binomial(2 * n, n, q)
    if k == 2:
        return q ** (2 * n * n)
    if k == 3:
        return _gl_order(n, q) ** 2
    raise ValueError("only the first four elements form a frame")


def prefix_certificates(n: int, q: int, k: int, budget: int | None = None) -> list[OrbitCertificate]:
    """Stepwise transitivity certificates justifying a canonical prefix of length k."""
    return list(_prefix_certificates(n, q, k, budget))


@lru_cache(maxsize=32)
def _prefix_certificates(n: int, q: int, k: int, budget: int | None) -> tuple[OrbitCertificate, ...]:
    frame = frame_elements(n, q)
    return tuple(
        _closure_certificate(
            prefix_stabilizer(n, q, j),
            frame[j],
            admissible_count(n, q, j),
            frame[:j],
            budget,
            f"level {j + 1}: stabiliser of {j} fixed elements on admissible K{j + 1}",
        )
        for j in range(k)
    )


# --------------------------------------------------------------------------
# Candidate pools


def gl_elements(n: int, q: int):
    F = field(q)
    from .projgeom import mat_inv

    for flat in product(range(q), repeat=n * n):
        M = tuple(tuple(flat[r * n : (r + 1) * n]) for r in range(n))
        try:
            mat_inv(M, F)
        except ValueError:
            continue
        yield M


def _span_mask(A: Subspace, B: Subspace) -> int:
    if A.q == 2:
        va = [0] + [i + 1 for i in A.point_ids]
        vb = [0] + [i + 1 for i in B.point_ids]
        m = 0
        for x in va:
            for y in vb:
                if x != y:
                    m |= 1 << ((x ^ y) - 1)
        return m
    return span(A, B).mask


def _arc_forbidden(elements: Sequence[Subspace]) -> int:
    m = 0
    for i, A in enumerate(elements):
        m |= A.mask
        for B in elements[:i]:
            m |= _span_mask(A, B)
    return m


@lru_cache(maxsize=8)
def candidate_pool(n: int, q: int, k: int) -> tuple[Subspace, ...]:
    """All (n-1)-spaces extending the canonical prefix of length k to a pseudo-arc."""
    N = 3 * n - 1
    prefix = frame_elements(n, q)[:k]
    forbidden = _arc_forbidden(prefix)
    if k < 3:
        return tuple(subspaces_avoiding(N, q, n - 1, forbidden))
    # Anything skew to span(K2, K3) has the form [I C D].
    I = identity_matrix(n)
    gl = list(gl_elements(n, q))
    out = []
    for C in gl:
        for D in gl:
            S = Subspace(N, q, tuple(I[r] + C[r] + D[r] for r in range(n)))
            if not S.mask & forbidden:
                out.append(S)
    return tuple(sorted(out))


# --------------------------------------------------------------------------
# Search engine


@dataclass
class _Tally:
    nodes: int = 0
    found: int = 0
    extendable: int = 0
    complete: int = 0
    examples: list[tuple[int, ...]] = dc_field(default_factory=list)

    def add(self, other: "_Tally") -> None:
        self.nodes += other.nodes
        self.found += other.found
        self.extendable += other.extendable
        self.complete += other.complete
        self.examples.extend(other.examples)


class _Engine:
    MAX_EXAMPLES = 10

    def __init__(self, spec: SearchSpec, mode: str, classify: bool):
        self.spec = spec
        self.mode = mode
        self.classify = classify
        n, q = spec.n, spec.q
        self.target = q**n + 1  # pseudo-oval size, also for q even
        self.k = min(PREFIX_LENGTH[mode], spec.size)
        self.prefix = tuple(frame_elements(n, q)[: self.k])
        self.pool = candidate_pool(n, q, self.k)
        self.masks = [S.mask for S in self.pool]
        on_point: dict[int, int] = {}
        for c, m in enumerate(self.masks):
            while m:
                low = m & -m
                p = low.bit_length() - 1
                on_point[p] = on_point.get(p, 0) | (1 << c)
                m ^= low
        self.on_point = on_point
        self.full = (1 << len(self.pool)) - 1
        self.F0 = _arc_forbidden(self.prefix)
        self.orbit: list[int] | None = None
        if mode == "frame" and self.k == 4 and spec.size > 4:
            self.orbit = orbit_partition(prefix_stabilizer(n, q, 4), self.pool)
        self._ge: dict[int, int] = {}
        self.budget = spec.budget
        self.sink: Callable[[tuple[int, ...]], None] | None = None
        self.tally = _Tally()

    # -- compatibility -----------------------------------------------------

    def _kill(self, delta: int) -> int:
        dead = 0
        on = self.on_point
        while delta:
            low = delta & -delta
            dead |= on.get(low.bit_length() - 1, 0)
            delta ^= low
        return dead

    def _add(self, chosen: Sequence[int], c: int, F: int, allowed: int) -> tuple[int, int]:
        E = self.pool[c]
        newF = F | E.mask
        for e in self.prefix:
            newF |= _span_mask(E, e)
        for d in chosen:
            newF |= _span_mask(E, self.pool[d])
        if self.spec.prefilter == "bitset":
            return newF, allowed & ~self._kill(newF & ~F)
        return newF, self._rank_filter(chosen, c, allowed)

    def _rank_filter(self, chosen: Sequence[int], c: int, allowed: int) -> int:
        els = list(self.prefix) + [self.pool[d] for d in chosen]
        E = self.pool[c]
        F = field(self.spec.q)
        full = 3 * self.spec.n
        out = 0
        a = allowed & ~(1 << c)
        while a:
            low = a & -a
            x = low.bit_length() - 1
            a ^= low
            X = self.pool[x]
            if rank(E.rows + X.rows, F) < 2 * self.spec.n:
                continue
            if all(rank(A.rows + E.rows + X.rows, F) == full for A in els):
                out |= low
        return out

    def _ge_mask(self, first: int) -> int:
        m = self._ge.get(first)
        if m is None:
            m = 0
            for c, r in enumerate(self.orbit):
                if r >= first:
                    m |= 1 << c
            self._ge[first] = m
        return m

    def _choices(self, chosen: Sequence[int], allowed: int) -> int:
        if self.orbit is not None:
            if not chosen:
                return allowed & self._rep_mask
            eligible = allowed & self._ge_mask(chosen[0])
            if len(chosen) >= 2:
                eligible &= ~((1 << (chosen[-1] + 1)) - 1)
            return eligible
        if chosen:
            return allowed & ~((1 << (chosen[-1] + 1)) - 1)
        return allowed

    @property
    def _rep_mask(self) -> int:
        m = getattr(self, "_reps", None)
        if m is None:
            m = 0
            for c, r in enumerate(self.orbit):
                if r == c:
                    m |= 1 << c
            self._reps = m
        return m

    # -- traversal ---------------------------------------------------------

    def units(self) -> list[tuple[int, ...]]:
        """Top-level branches: the first one or two free choices."""
        free = self.spec.size - self.k
        if free <= 0:
            return [()]
        depth = min(2, free)
        out: list[tuple[int, ...]] = []

        def walk(chosen: list[int], F: int, allowed: int) -> None:
            if len(chosen) == depth:
                out.append(tuple(chosen))
                return
            for c in _bits(self._choices(chosen, allowed)):
                nF, na = self._add(chosen, c, F, allowed)
                walk(chosen + [c], nF, na)

        walk([], self.F0, self.full)
        return out

    def run_unit(self, unit: tuple[int, ...]) -> None:
        F, allowed = self.F0, self.full
        chosen: list[int] = []
        for c in unit:
            F, allowed = self._add(chosen, c, F, allowed)
            chosen.append(c)
        self._dfs(chosen, F, allowed)

    def _tick(self) -> None:
        self.tally.nodes += 1
        if self.budget is not None and self.tally.nodes > self.budget:
            raise BudgetExceeded(f"search exceeded {self.budget} nodes")

    def _dfs(self, chosen: list[int], F: int, allowed: int) -> None:
        self._tick()
        depth = self.k + len(chosen)
        if depth == self.spec.size:
            self._leaf(tuple(chosen), F, allowed)
            return
        choices = self._choices(chosen, allowed)
        if not self.classify and self.sink is None and depth == self.spec.size - 1:
            self.tally.found += choices.bit_count()
            return
        for c in _bits(choices):
            nF, na = self._add(chosen, c, F, allowed)
            chosen.append(c)
            self._dfs(chosen, nF, na)
            chosen.pop()

    def _leaf(self, chosen: tuple[int, ...], F: int, allowed: int) -> None:
        t = self.tally
        t.found += 1
        if self.sink is not None:
            self.sink(chosen)
        if not self.classify:
            return
        if self._reaches(list(chosen), F, allowed, self.target - self.spec.size):
            t.extendable += 1
        else:
            t.complete += 1
            if len(t.examples) < self.MAX_EXAMPLES:
                t.examples.append(chosen)

    def _reaches(self, chosen: list[int], F: int, allowed: int, need: int) -> bool:
        # Every extending element is compatible with the prefix, hence lies in the pool.
        if need <= 0:
            return True
        if need == 1:
            return allowed != 0
        for c in _bits(allowed):
            nF, na = self._add(chosen, c, F, allowed)
            if self._reaches(chosen + [c], nF, na & ~((1 << (c + 1)) - 1), need - 1):
                return True
        return False

    def arc(self, chosen: Sequence[int]) -> PseudoArc:
        return PseudoArc(self.spec.n, self.spec.q, self.prefix + tuple(self.pool[c] for c in chosen))


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


# --------------------------------------------------------------------------
# Checkpoints: one line-oriented text file per shard.


@dataclass
class Checkpoint:
    digest: str
    shard: int
    shards: int
    cursor: int = 0
    done: bool = False
    tally: _Tally = dc_field(default_factory=_Tally)

    def to_text(self) -> str:
        t = self.tally
        lines = [
            CHECKPOINT_MAGIC,
            f"spec {self.digest}",
            f"shard {self.shard} {self.shards}",
            f"cursor {self.cursor}",
            f"done {int(self.done)}",
            f"nodes {t.nodes}",
            f"found {t.found}",
            f"extendable {t.extendable}",
            f"complete {t.complete}",
        ]
        lines += ["example " + " ".join(map(str, ex)) for ex in t.examples]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Checkpoint":
        lines = text.splitlines()
        if not lines or lines[0] != CHECKPOINT_MAGIC:
            raise ValueError("not a checkpoint file")
        fields: dict[str, list[str]] = {}
        examples = []
        for ln in lines[1:]:
            key, _, rest = ln.partition(" ")
            if key == "example":
                examples.append(tuple(int(x) for x in rest.split()))
            else:
                fields[key] = rest.split()
        shard, shards = map(int, fields["shard"])
        t = _Tally(
            int(fields["nodes"][0]),
            int(fields["found"][0]),
            int(fields["extendable"][0]),
            int(fields["complete"][0]),
            examples,
        )
        return cls(fields["spec"][0], shard, shards, int(fields["cursor"][0]), fields["done"][0] == "1", t)


def checkpoint_path(directory: str | os.PathLike, spec: SearchSpec, shard: int) -> Path:
    return Path(directory) / f"{spec.digest()}-shard{shard}of{spec.shards}.ckpt"


def _save(path: Path, ck: Checkpoint) -> None:
    tmp = path.with_suffix(".tmp")
    tmp.write_text(ck.to_text())
    os.replace(tmp, path)


# --------------------------------------------------------------------------
# Driver


@dataclass
class _ShardResult:
    tally: _Tally
    exhaustive: bool
    arcs: list[tuple[int, ...]]


def _run_shard(
    spec: SearchSpec,
    mode: str,
    shard: int,
    classify: bool,
    collect: bool,
    checkpoint_dir: str | None,
) -> _ShardResult:
    eng = _Engine(spec, mode, classify)
    arcs: list[tuple[int, ...]] = []
    if collect:
        eng.sink = arcs.append
    units = eng.units()
    mine = [u for i, u in enumerate(units) if i % spec.shards == shard]
    ck = Checkpoint(spec.digest(), shard, spec.shards)
    path = None
    if checkpoint_dir is not None:
        path = checkpoint_path(checkpoint_dir, spec, shard)
        if path.exists():
            old = Checkpoint.from_text(path.read_text())
            if old.digest == ck.digest and not collect:
                ck = old
    base = ck.tally
    exhaustive = True
    try:
        for pos in range(ck.cursor, len(mine)):
            eng.run_unit(mine[pos])
            if path is not None:
                # Checkpoints only ever record whole units.
                merged = _Tally()
                merged.add(base)
                merged.add(eng.tally)
                _save(path, Checkpoint(ck.digest, shard, spec.shards, pos + 1, pos + 1 == len(mine), merged))
    except BudgetExceeded:
        exhaustive = False
    total = _Tally()
    total.add(base)
    total.add(eng.tally)
    return _ShardResult(total, exhaustive, arcs)


def _resolve_mode(spec: SearchSpec, report: AuditReport, cert_budget: int | None) -> str:
    mode = spec.symmetry
    k = min(PREFIX_LENGTH[mode], spec.size)
    if k == 0:
        return mode
    try:
        certs = prefix_certificates(spec.n, spec.q, k, cert_budget)
    except BudgetExceeded as exc:
        report.notes.append(f"certificate budget exceeded ({exc}); falling back to raw enumeration")
        return "none"
    report.certificates = [c.to_dict() for c in certs]
    if not all(c.holds for c in certs):
        report.notes.append("transitivity certificate failed; falling back to raw enumeration")
        return "none"
    if mode == "frame" and spec.size > 4:
        report.notes.append("fifth element restricted to orbit representatives of the frame stabiliser")
    return mode


def _execute(
    spec: SearchSpec,
    classify: bool,
    collect: bool,
    checkpoint_dir: str | os.PathLike | None,
    parallel: bool,
    cert_budget: int | None,
) -> tuple[list[PseudoArc], AuditReport]:
    t0 = time.perf_counter()
    report = AuditReport(spec.n, spec.q, spec.size, spec.symmetry, shards=spec.shards)
    if spec.size > max_size(spec.n, spec.q) + (1 if spec.q % 2 == 0 else 0):
        report.notes.append("size exceeds the maximum for a pseudo-arc; nothing to enumerate")
        report.wall_time = time.perf_counter() - t0
        return [], report
    mode = _resolve_mode(spec, report, cert_budget)
    report.symmetry = mode
    if checkpoint_dir is not None:
        Path(checkpoint_dir).mkdir(parents=True, exist_ok=True)
    ckdir = None if checkpoint_dir is None else str(checkpoint_dir)
    args = [(spec, mode, s, classify, collect, ckdir) for s in range(spec.shards)]
    if parallel and spec.shards > 1:
        with ProcessPoolExecutor(max_workers=min(spec.shards, os.cpu_count() or 1)) as ex:
            results = list(ex.map(_run_shard, *zip(*args)))
    else:
        results = [_run_shard(*a) for a in args]
    eng = _Engine(spec, mode, classify) if collect or any(r.tally.examples for r in results) else None
    arcs: list[PseudoArc] = []
    for r in results:
        report.nodes += r.tally.nodes
        report.found += r.tally.found
        report.extendable += r.tally.extendable
        report.complete += r.tally.complete
        report.exhaustive &= r.exhaustive
        if eng is not None:
            for ex in r.tally.examples:
                if len(report.complete_examples) < _Engine.MAX_EXAMPLES:
                    report.complete_examples.append(pseudo_arc_to_text(eng.arc(ex)))
            arcs.extend(eng.arc(c) for c in r.arcs)
    arcs.sort(key=lambda K: tuple(E.rows for E in K.elements))
    report.complete_examples.sort()
    report.wall_time = time.perf_counter() - t0
    return arcs, report


def enumerate_pseudo_arcs(
    spec: SearchSpec,
    *,
    collect: bool = True,
    checkpoint_dir: str | os.PathLike | None = None,
    parallel: bool = False,
    cert_budget: int | None = None,
) -> Enumeration:
    """Pseudo-arcs of the given size modulo the certified symmetry reduction.

    The free part is enumerated in increasing pool order. With collect=False
    only the count is kept, and the last level is counted without visiting it.
    """
    arcs, report = _execute(spec, False, collect, checkpoint_dir, parallel, cert_budget)
    return Enumeration(arcs, report)


def audit_extendability(
    n: int,
    q: int,
    size: int,
    *,
    symmetry: str | None = None,
    budget: int | None = None,
    shards: int = 1,
    checkpoint_dir: str | os.PathLike | None = None,
    parallel: bool = False,
    cert_budget: int | None = None,
) -> AuditReport:
    """Classify every pseudo-arc of the given size as extendable to a pseudo-oval or complete."""
    if symmetry is None:
        symmetry = "fix-first-two" if size <= 4 else "frame"
    spec = SearchSpec(n, q, size, symmetry, budget=budget if budget is not None else default_budget(), shards=shards)
    _, report = _execute(spec, True, False, checkpoint_dir, parallel, cert_budget)
    if (n, q, size) not in HEADLINE_AUDITS:
        report.notes.append("not one of the headline audits")
    return report


def reduction_cross_check(n: int, q: int) -> dict:
    """Size-3 counts computed raw and via fix-first-two plus the certified orbit sizes."""
    raw = enumerate_pseudo_arcs(SearchSpec(n, q, 3, "none"), collect=False).report.found
    reduced = enumerate_pseudo_arcs(SearchSpec(n, q, 3, "fix-first-two"), collect=False).report
    pairs = admissible_count(n, q, 0) * admissible_count(n, q, 1)
    return {
        "raw": raw,
        "reduced": reduced.found,
        "ordered_pairs": pairs,
        "certified": all(c["holds"] for c in reduced.certificates),
        "agrees": reduced.found * pairs == 6 * raw,
    }


# --------------------------------------------------------------------------
# Main theorem pipeline


@dataclass
class MainTheoremReport:
    size: int
    threshold: str
    hypothesis: bool
    extensions: list[PseudoArc] = dc_field(default_factory=list)
    pseudo_conic: list[bool] = dc_field(default_factory=list)
    witnesses: list[Collineation | None] = dc_field(default_factory=list)
    oa_route: dict = dc_field(default_factory=dict)
    notes: list[str] = dc_field(default_factory=list)

    @property
    def conclusion(self) -> bool:
        return self.hypothesis and bool(self.extensions) and all(self.pseudo_conic)

    @property
    def unique(self) -> bool:
        return len(self.extensions) == 1

    def to_dict(self) -> dict:
        return {
            "size": self.size,
            "threshold": self.threshold,
            "hypothesis": self.hypothesis,
            "extensions": len(self.extensions),
            "pseudo_conic": self.pseudo_conic,
            "witnesses": [None if g is None else [list(r) for r in g.matrix] + [[g.power]] for g in self.witnesses],
            "oa_route": self.oa_route,
            "notes": self.notes,
            "conclusion": self.conclusion,
        }


def pseudo_oval_extensions(K: PseudoArc, budget: int | None = None) -> list[PseudoArc]:
    """All pseudo-ovals containing K, each listed once."""
    from .pseudoarcs import extend_pseudo_arc

    target = K.q**K.n + 1
    out: list[PseudoArc] = []
    seen: set[frozenset[Subspace]] = set()
    work = 0

    def grow(A: PseudoArc, lo: Subspace | None) -> None:
        nonlocal work
        work += 1
        if budget is not None and work > budget:
            raise BudgetExceeded(f"extension search exceeded {budget} nodes")
        if A.size == target:
            key = A.as_set()
            if key not in seen:
                seen.add(key)
                out.append(A)
            return
        for E in extend_pseudo_arc(A):
            if lo is None or lo < E:
                grow(A.with_element(E), E)

    grow(K, None)
    return out


def main_theorem_pipeline(
    K: PseudoArc,
    i: int = 0,
    *,
    bound_mode: bool = False,
    oa_route: bool = True,
    budget: int | None = None,
) -> MainTheoremReport:
    """Check the hypotheses, find every pseudo-oval through K and test each for being a pseudo-conic."""
    from .planes import m2_prime
    from .pseudoarcs import is_pseudo_conic, satisfies_main_hypothesis

    n, q = K.n, K.q
    if q % 2 == 0:
        raise PseudoArcError("the pipeline needs q odd")
    ok, bad = is_pseudo_arc(K)
    if not ok:
        raise PseudoArcError(f"triple {bad} does not span")
    m2 = m2_prime(q**n)
    if m2.kind == "exact" or m2.kind == "none":
        threshold = f"{m2.kind} {m2.value}"
        passes = m2.threshold_ok(K.size)
    elif bound_mode:
        threshold = f"{m2.kind} {m2.value} (bound mode)"
        passes = m2.threshold_ok(K.size)
    else:
        raise PseudoArcError("m2' is not known exactly here; pass bound_mode=True to accept a bound")
    report = MainTheoremReport(K.size, threshold, False)
    if K.size == max_size(n, q):
        good, g = is_pseudo_conic(K)
        report.hypothesis = True
        report.extensions = [K]
        report.pseudo_conic = [good]
        report.witnesses = [g]
        report.notes.append("input is already a pseudo-oval")
        return report
    if not passes:
        report.notes.append("size does not exceed m2'; precondition not met")
        return report
    report.hypothesis = satisfies_main_hypothesis(K, i)
    if not report.hypothesis:
        report.notes.append("projected partial spread does not complete to a Desarguesian spread")
        return report
    report.extensions = pseudo_oval_extensions(K, budget)
    for P in report.extensions:
        good, g = is_pseudo_conic(P)
        report.pseudo_conic.append(good)
        report.witnesses.append(g)
    if oa_route:
        report.oa_route = _oa_route(K)
    return report


def _oa_route(K: PseudoArc) -> dict:
    """Dualize, build the near-plane G and count its one-line completions."""
    from .constructions import extend_near_plane, oa_from_dual_pseudo_arc, verify_oa
    from .incidence import verify_near_plane
    from .pseudoarcs import dualize

    gs = oa_from_dual_pseudo_arc(dualize(K))
    A = gs.oa
    ok, _ = verify_oa(A, A.strength, A.index)
    out = {"oa_rows": A.k, "oa_levels": A.levels, "oa_verified": ok}
    order = verify_near_plane(gs.structure)
    if isinstance(order, int):
        ext = extend_near_plane(gs.structure)
        out["near_plane_order"] = order
        out["near_plane_extensions"] = len(ext.solutions)
        out["near_plane_exhaustive"] = ext.exhaustive
    return out


def describe_arc(K: PseudoArc) -> str:
    return " / ".join(subspace_to_text(E).strip().replace("\n", ";") for E in K.elements)
