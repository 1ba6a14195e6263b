"""Hereditarily finite sets.

Every :class:`HFSet` is interned, so two sets are equal exactly when they are
the same object.  Sets are ordered by their Ackermann code
``code(x) = sum(2 ** code(y) for y in x)``; the comparison is structural, so it
works even where the code itself is far too large to materialize.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, cmp_to_key
from typing import Iterable, Sequence

__all__ = [
    "EMPTY",
    "ClosureN",
    "CodeTooLarge",
    "HFError",
    "HFSet",
    "Universe",
    "as_natural",
    "as_pair",
    "as_tuple",
    "build_closure_N",
    "build_universe",
    "canonical_less",
    "from_code",
    "hf",
    "natural",
    "notin_rk",
    "pair",
    "parse_hf",
    "rank_less",
    "tuple_",
]

UNIVERSE_BOUND = 5
# codes of children larger than this are not materialized (2**65536 already
# has 65537 bits)
_CODE_CHILD_LIMIT = 1 << 16


class HFError(ValueError):
    pass


class CodeTooLarge(HFError):
    pass


_intern: dict[tuple[int, ...], "HFSet"] = {}
_cmp_cache: dict[tuple[int, int], int] = {}


class HFSet:
    __slots__ = ("uid", "children", "rank", "_code", "_members", "__weakref__")

    uid: int
    children: tuple["HFSet", ...]
    rank: int

    def __new__(cls, *args, **kwargs):  # pragma: no cover - guarded constructor
        raise TypeError("use hf(...) to construct hereditarily finite sets")

    @classmethod
    def _make(cls, children: tuple["HFSet", ...]) -> "HFSet":
        key = tuple(c.uid for c in children)
        found = _intern.get(key)
        if found is not None:
            return found
        obj = object.__new__(cls)
        obj.uid = len(_intern)
        obj.children = children
        obj.rank = 1 + max(c.rank for c in children) if children else 0
        obj._members = None
        if not children:
            obj._code = 0
        elif all(c._code is not None and c._code <= _CODE_CHILD_LIMIT for c in children):
            obj._code = sum(1 << c._code for c in children)
        else:
            obj._code = None
        _intern[key] = obj
        return obj

    @property
    def cardinality(self) -> int:
        return len(self.children)

    @property
    def code(self) -> int:
        if self._code is None:
            raise CodeTooLarge(f"Ackermann code of a rank-{self.rank} set is too large to materialize")
        return self._code

    @property
    def has_code(self) -> bool:
        return self._code is not None

    def members(self) -> frozenset["HFSet"]:
        if self._members is None:
            self._members = frozenset(self.children)
        return self._members

    def __contains__(self, item: object) -> bool:
        return item in self.members()

    def __iter__(self):
        return iter(self.children)

    def __len__(self) -> int:
        return len(self.children)

    def __hash__(self) -> int:
        return self.uid

    def __eq__(self, other: object) -> bool:
        return self is other

    def __lt__(self, other: "HFSet") -> bool:
        return _cmp(self, other) < 0

    def __le__(self, other: "HFSet") -> bool:
        return _cmp(self, other) <= 0

    def __gt__(self, other: "HFSet") -> bool:
        return _cmp(self, other) > 0

    def __ge__(self, other: "HFSet") -> bool:
        return _cmp(self, other) >= 0

    def __repr__(self) -> str:
        return f"hf({self.render()})"

    def __str__(self) -> str:
        return self.render()

    def render(self) -> str:
        """Brace notation, children in canonical order."""
        return "{" + ",".join(c.render() for c in self.children) + "}"

    def __reduce__(self):
        return (parse_hf, (self.render(),))


def _cmp(a: HFSet, b: HFSet) -> int:
    if a is b:
        return 0
    if a._code is not None and b._code is not None:
        return -1 if a._code < b._code else 1
    key = (a.uid, b.uid)
    cached = _cmp_cache.get(key)
    if cached is not None:
        return cached
    # compare the binary expansions from the most significant bit down
    xs, ys = a.children, b.children
    i, j = len(xs) - 1, len(ys) - 1
    result = 0
    while i >= 0 and j >= 0:
        c = _cmp(xs[i], ys[j])
        if c:
            result = c
            break
        i -= 1
        j -= 1
    else:
        result = (i >= 0) - (j >= 0)
    _cmp_cache[key] = result
    _cmp_cache[(b.uid, a.uid)] = -result
    return result


_cmp_key = cmp_to_key(_cmp)


def hf(*members: HFSet | Iterable[HFSet]) -> HFSet:
    """Build the set of the given members.

    ``hf()`` is the empty set, ``hf(a, b)`` is ``{a, b}``, and a single
    non-HFSet iterable is unpacked: ``hf([a, b])``.
    """
    if len(members) == 1 and not isinstance(members[0], HFSet):
        members = tuple(members[0])
    for m in members:
        if not isinstance(m, HFSet):
            raise TypeError(f"members must be HFSet, got {type(m).__name__}")
    unique = sorted(set(members), key=_cmp_key)
    return HFSet._make(tuple(unique))


EMPTY = HFSet._make(())


def canonical_less(x: HFSet, y: HFSet) -> bool:
    """Strict total order by Ackermann code."""
    return _cmp(x, y) < 0


def rank_less(x: HFSet, y: HFSet) -> bool:
    return x.rank < y.rank


def notin_rk(x: HFSet, y: HFSet) -> bool:
    """``x`` is not a member of ``y`` although it has smaller rank."""
    return x.rank < y.rank and x not in y


def from_code(n: int) -> HFSet:
    if n < 0:
        raise HFError("codes are natural numbers")
    members = []
    i = 0
    while n:
        if n & 1:
            members.append(from_code(i))
        n >>= 1
        i += 1
    return hf(members)


def natural(m: int) -> HFSet:
    """The von Neumann ordinal ``m``."""
    if m < 0:
        raise HFError("naturals are non-negative")
    out = EMPTY
    for _ in range(m):
        out = hf(*out.children, out)
    return out


def pair(x: HFSet, y: HFSet) -> HFSet:
    """Kuratowski pair ``{{x}, {x, y}}``."""
    return hf(hf(x), hf(x, y))


def tuple_(xs: Sequence[HFSet]) -> HFSet:
    """``<x_1, ..., x_k>`` as the set ``{(i, x_{i+1}) : i < k}``."""
    if not xs:
        raise HFError("empty tuple")
    return hf([pair(natural(i), x) for i, x in enumerate(xs)])


_natural_cache: dict[int, int | None] = {}


def as_natural(x: HFSet) -> int | None:
    """Return ``m`` if ``x`` is the von Neumann ordinal ``m``."""
    if x.uid in _natural_cache:
        return _natural_cache[x.uid]
    out: int | None = len(x.children)
    for c in x.children:
        if as_natural(c) is None:
            out = None
            break
    if out is not None and {as_natural(c) for c in x.children} != set(range(len(x.children))):
        out = None
    _natural_cache[x.uid] = out
    return out


def as_pair(z: HFSet) -> tuple[HFSet, HFSet] | None:
    """Decode a Kuratowski pair, or ``None``."""
    if len(z) == 1:
        (s,) = z.children
        if len(s) == 1:
            return s.children[0], s.children[0]
        return None
    if len(z) != 2:
        return None
    a, b = z.children
    for single, double in ((a, b), (b, a)):
        if len(single) == 1 and len(double) == 2 and single.children[0] in double:
            x = single.children[0]
            (y,) = [c for c in double.children if c is not x]
            return x, y
    return None


def as_tuple(z: HFSet) -> tuple[HFSet, ...] | None:
    """Decode ``{(0, x_1), ..., (k-1, x_k)}``, or ``None``."""
    if not z.children:
        return None
    slots: dict[int, HFSet] = {}
    for c in z.children:
        p = as_pair(c)
        if p is None:
            return None
        i = as_natural(p[0])
        if i is None or i in slots:
            return None
        slots[i] = p[1]
    if set(slots) != set(range(len(slots))):
        return None
    return tuple(slots[i] for i in range(len(slots)))


def parse_hf(text: str) -> HFSet:
    """Parse brace notation such as ``{{},{{}}}``."""
    s = "".join(text.split())
    pos = 0

    def parse() -> HFSet:
        nonlocal pos
        if pos >= len(s) or s[pos] != "{":
            raise HFError(f"expected '{{' at position {pos} in {text!r}")
        pos += 1
        members = []
        if pos < len(s) and s[pos] == "}":
            pos += 1
            return EMPTY
        while True:
            members.append(parse())
            if pos >= len(s):
                raise HFError(f"unterminated set in {text!r}")
            if s[pos] == ",":
                pos += 1
                continue
            if s[pos] == "}":
                pos += 1
                return hf(members)
            raise HFError(f"unexpected {s[pos]!r} at position {pos} in {text!r}")

    out = parse()
    if pos != len(s):
        raise HFError(f"trailing input at position {pos} in {text!r}")
    return out


@dataclass(frozen=True)
class Universe:
    """The level ``V_level``: all hereditarily finite sets of rank below ``level``."""

    level: int
    elements: tuple[HFSet, ...]

    def as_set(self) -> HFSet:
        return hf(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, x: object) -> bool:
        return isinstance(x, HFSet) and x.rank < self.level


def build_universe(n: int, bound: int = UNIVERSE_BOUND) -> Universe:
    if n < 0:
        raise HFError("level must be non-negative")
    if n > bound:
        raise HFError(f"universe level {n} exceeds bound {bound}")
    elems: list[HFSet] = []
    for _ in range(n):
        prev = elems
        # codes of V_{k+1} are exactly 0 .. 2**|V_k| - 1, so enumerating
        # subsets by bitmask yields canonical order
        elems = [hf([prev[i] for i in range(len(prev)) if mask >> i & 1]) for mask in range(1 << len(prev))]
    return Universe(n, tuple(elems))


@dataclass(frozen=True)
class ClosureN:
    """Finite truncation of the closure of a universe under finite subsets.

    Holds the base universe, the universe as a set, all pairs of base elements,
    all tuples of base elements up to ``arity_bound`` and the transitive closure
    of all of these, in canonical order.
    """

    base: Universe
    arity_bound: int
    elements: tuple[HFSet, ...]

    @property
    def universe_set(self) -> HFSet:
        return self.base.as_set()

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, x: object) -> bool:
        return x in self._members

    @cached_property
    def _members(self) -> frozenset[HFSet]:
        return frozenset(self.elements)

    def tuples(self, arity: int) -> list[tuple[tuple[HFSet, ...], HFSet]]:
        """All ``(coords, tuple-set)`` for base coordinates of the given arity."""
        return [(xs, tuple_(xs)) for xs in itertools.product(self.base.elements, repeat=arity)]


def build_closure_N(u: Universe, arity_bound: int, max_size: int = 5000) -> ClosureN:
    if arity_bound < 1:
        raise HFError("arity_bound must be at least 1")

    seeds: list[HFSet] = list(u.elements)
    seeds.append(u.as_set())
    base = u.elements
    seeds.extend(pair(x, y) for x in base for y in base)
    for k in range(1, arity_bound + 1):
        seeds.extend(tuple_(xs) for xs in itertools.product(base, repeat=k))
    seen: set[HFSet] = set()
    stack = list(seeds)
    while stack:
        x = stack.pop()
        if x in seen:
            continue
        seen.add(x)
        if len(seen) > max_size:
            raise HFError(f"closure exceeds vertex budget of {max_size} sets")
        stack.extend(x.children)
    return ClosureN(u, arity_bound, tuple(sorted(seen, key=_cmp_key)))
