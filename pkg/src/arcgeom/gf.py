"""Finite field arithmetic for GF(p^h) on dense integer codes.

An element of GF(p^h) is coded by the integer sum(c_k * p**k), where
c_0 + c_1 x + ... + c_{h-1} x^{h-1} is its polynomial representative modulo
the field's Conway polynomial. Consequently 0 and 1 are the identities and the
prime subfield GF(p) occupies codes 0..p-1.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache

MAX_ORDER = 128

# Conway polynomials for h >= 2, coefficients from the constant term upward.
# Degree-one Conway polynomials are x - g for the least primitive root g mod p
# and are computed on demand.
CONWAY_POLYNOMIALS: dict[tuple[int, int], tuple[int, ...]] = {
    (2, 2): (1, 1, 1),
    (2, 3): (1, 1, 0, 1),
    (2, 4): (1, 1, 0, 0, 1),
    (2, 5): (1, 0, 1, 0, 0, 1),
    (2, 6): (1, 1, 0, 1, 1, 0, 1),
    (2, 7): (1, 1, 0, 0, 0, 0, 0, 1),
    (3, 2): (2, 2, 1),
    (3, 3): (1, 2, 0, 1),
    (3, 4): (2, 0, 0, 2, 1),
    (5, 2): (2, 4, 1),
    (5, 3): (3, 3, 0, 1),
    (7, 2): (3, 6, 1),
    (11, 2): (2, 7, 1),
}


class UnsupportedField(ValueError):
    pass


class IdenticallyZero(ValueError):
    """Raised when an equation has all coefficients zero."""


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    i = 2
    while i * i <= p:
        if p % i == 0:
            return False
        i += 1
    return True


def factor_prime_power(q: int) -> tuple[int, int]:
    """Return (p, h) with q = p**h, or raise UnsupportedField."""
    if q < 2:
        raise UnsupportedField(f"{q} is not a prime power")
    p = 2
    while q % p:
        p += 1
    h, r = 0, q
    while r % p == 0:
        r //= p
        h += 1
    if r != 1:
        raise UnsupportedField(f"{q} is not a prime power")
    return p, h


def _least_primitive_root(p: int) -> int:
    if p == 2:
        return 1
    n = p - 1
    factors = {f for f in range(2, n + 1) if n % f == 0 and is_prime(f)}
    for g in range(2, p):
        if all(pow(g, n // f, p) != 1 for f in factors):
            return g
    raise AssertionError("no primitive root")


@dataclass(frozen=True)
class PrimePower:
    p: int
    h: int

    @property
    def q(self) -> int:
        return self.p**self.h


@dataclass(frozen=True, eq=False)
class FieldTable:
    """Lookup tables for GF(q). Immutable; share freely."""

    prime_power: PrimePower
    polynomial: tuple[int, ...]
    add: tuple[tuple[int, ...], ...]
    mul: tuple[tuple[int, ...], ...]
    neg: tuple[int, ...]
    inv: tuple[int, ...]  # inv[0] is 0 by convention
    exp: tuple[int, ...]  # exp[i] = g**i for the primitive element g
    log: tuple[int, ...]  # log[0] is -1

    @property
    def p(self) -> int:
        return self.prime_power.p

    @property
    def h(self) -> int:
        return self.prime_power.h

    @property
    def q(self) -> int:
        return self.prime_power.q

    @property
    def primitive(self) -> int:
        return self.exp[1] if self.q > 2 else 1

    def __repr__(self) -> str:
        return f"GF({self.q})"

    def sub(self, a: int, b: int) -> int:
        return self.add[a][self.neg[b]]

    def div(self, a: int, b: int) -> int:
        if b == 0:
            raise ZeroDivisionError("division by zero in " + repr(self))
        return self.mul[a][self.inv[b]]

    def pow(self, a: int, e: int) -> int:
        if a == 0:
            return 1 if e == 0 else 0
        return self.exp[(self.log[a] * e) % (self.q - 1)]

    def elements(self) -> range:
        return range(self.q)

    def from_int(self, k: int) -> int:
        """Image of the integer k under Z -> GF(p)."""
        return k % self.p

    def random_nonzero(self, rng: random.Random) -> int:
        return rng.randrange(1, self.q)


def make_field(p: int, h: int = 1, max_order: int = MAX_ORDER) -> FieldTable:
    if not is_prime(p):
        raise UnsupportedField(f"{p} is not prime")
    if h < 1 or p**h > max_order:
        raise UnsupportedField(f"GF({p}^{h}) exceeds the supported range")
    return _make_field(p, h)


@lru_cache(maxsize=None)
def _make_field(p: int, h: int) -> FieldTable:
    q = p**h
    if h == 1:
        g = _least_primitive_root(p)
        poly = ((-g) % p, 1)
        add = tuple(tuple((a + b) % p for b in range(p)) for a in range(p))
        exp = [1]
        for _ in range(q - 2):
            exp.append(exp[-1] * g % p)
    else:
        if (p, h) not in CONWAY_POLYNOMIALS:
            raise UnsupportedField(f"no primitive polynomial for GF({p}^{h})")
        poly = CONWAY_POLYNOMIALS[(p, h)]

        def digits(x: int) -> list[int]:
            out = []
            for _ in range(h):
                out.append(x % p)
                x //= p
            return out

        def code(ds: list[int]) -> int:
            return sum(d * p**k for k, d in enumerate(ds))

        add = tuple(
            tuple(code([(x + y) % p for x, y in zip(digits(a), digits(b))]) for b in range(q))
            for a in range(q)
        )
        exp = [1]
        cur = [1] + [0] * (h - 1)
        for _ in range(q - 2):
            top = cur[-1]
            cur = [0] + cur[:-1]
            if top:
                cur = [(c - top * poly[k]) % p for k, c in enumerate(cur)]
            exp.append(code(cur))
    if len(set(exp)) != q - 1:
        raise UnsupportedField(f"polynomial {poly} is not primitive over GF({p})")
    log = [-1] * q
    for i, x in enumerate(exp):
        log[x] = i
    mul = tuple(
        tuple(0 if a == 0 or b == 0 else exp[(log[a] + log[b]) % (q - 1)] for b in range(q))
        for a in range(q)
    )
    inv = tuple(0 if a == 0 else exp[(-log[a]) % (q - 1)] for a in range(q))
    neg = tuple(add[a].index(0) for a in range(q))
    return FieldTable(PrimePower(p, h), tuple(poly), add, mul, neg, inv, tuple(exp), tuple(log))


def field(q: int) -> FieldTable:
    """The field of order q (cached)."""
    p, h = factor_prime_power(q)
    return make_field(p, h)


def frobenius(ft: FieldTable, x: int, i: int = 1) -> int:
    """x ** (p ** i)."""
    if x == 0:
        return 0
    return ft.exp[(ft.log[x] * pow(ft.p, i % ft.h, ft.q - 1)) % (ft.q - 1)]


def solve_quadratic(ft: FieldTable, a: int, b: int, c: int) -> list[int]:
    """Roots of a*y^2 + b*y + c = 0 by exhaustive evaluation.

    Double roots are listed twice. With a = b = 0 and c != 0 the list is empty;
    the all-zero equation raises IdenticallyZero.
    """
    if a == 0 and b == 0:
        if c == 0:
            raise IdenticallyZero("0 = 0 holds for every y")
        return []
    add, mul = ft.add, ft.mul
    roots = [y for y in range(ft.q) if add[add[mul[a][mul[y][y]]][mul[b][y]]][c] == 0]
    if a != 0 and len(roots) == 1:
        roots = roots * 2
    return roots


@dataclass(frozen=True, eq=False)
class SubfieldEmbedding:
    """GF(q) inside GF(q^n) together with the basis 1, b, ..., b^(n-1).

    ``b`` is the primitive element of the big field.
    """

    small: FieldTable
    big: FieldTable
    degree: int
    image: tuple[int, ...]  # small code -> big code
    basis: tuple[int, ...]
    _expand: tuple[tuple[int, ...], ...]

    def embed(self, x: int) -> int:
        return self.image[x]

    def expand(self, x: int) -> tuple[int, ...]:
        """Coordinates of a big-field element in the basis."""
        return self._expand[x]

    def contract(self, coords) -> int:
        big, out = self.big, 0
        for c, b in zip(coords, self.basis):
            out = big.add[out][big.mul[self.image[c]][b]]
        return out


def subfield_embedding(small: FieldTable, big: FieldTable) -> SubfieldEmbedding:
    if small.p != big.p or big.h % small.h:
        raise ValueError(f"{small!r} is not a subfield of {big!r}")
    n = big.h // small.h
    return _embedding(small.p, small.h, big.h, n)


@lru_cache(maxsize=None)
def _embedding(p: int, h_small: int, h_big: int, n: int) -> SubfieldEmbedding:
    small, big = make_field(p, h_small), make_field(p, h_big)
    qs, qb = small.q, big.q
    # A root of the small field's polynomial, preferring the Conway-compatible one.
    poly = small.polynomial

    def evaluate(x: int) -> int:
        acc = 0
        for coeff in reversed(poly):
            acc = big.add[big.mul[acc][x]][coeff]  # coefficients live in GF(p) codes
        return acc

    preferred = big.pow(big.primitive, (qb - 1) // (qs - 1)) if qs > 2 else 1
    if small.h == 1:
        root = small.primitive  # prime field codes coincide
    elif evaluate(preferred) == 0:
        root = preferred
    else:
        root = next(x for x in range(qb) if evaluate(x) == 0)
    image = [0] * qs
    for x in range(qs):
        acc, r = 0, 1
        k = x
        for _ in range(small.h):
            acc = big.add[acc][big.mul[k % p][r]]
            r = big.mul[r][root]
            k //= p
        image[x] = acc
    if len(set(image)) != qs:
        raise AssertionError("embedding is not injective")
    basis = [1]
    for _ in range(n - 1):
        basis.append(big.mul[basis[-1]][big.primitive if qb > 2 else 1])
    expand: list[tuple[int, ...] | None] = [None] * qb

    def combos(k: int):
        if k == 0:
            yield ()
            return
        for rest in combos(k - 1):
            for c in range(qs):
                yield rest + (c,)

    for coords in combos(n):
        acc = 0
        for c, b in zip(coords, basis):
            acc = big.add[acc][big.mul[image[c]][b]]
        if expand[acc] is not None:
            raise AssertionError("basis is not independent")
        expand[acc] = coords
    return SubfieldEmbedding(small, big, n, tuple(image), tuple(basis), tuple(expand))
