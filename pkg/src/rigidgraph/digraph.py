"""Finite directed graphs with role-tagged vertices."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

from .hf import HFSet, parse_hf

__all__ = [
    "Digraph",
    "DigraphBuilder",
    "GraphError",
    "VertexMap",
    "VertexRole",
    "compose",
    "find_cycles",
    "graph_hash",
    "has_loop",
    "identity",
    "induced_subgraph",
    "is_acyclic",
    "is_homomorphism",
    "outdegree",
    "strongly_connected_components",
    "to_dot",
    "unique_cycle",
]

FORMAT_VERSION = 1

# a total self-map, stored as its image vector
VertexMap = tuple[int, ...]


class GraphError(ValueError):
    pass


# payload schema per role tag: "i" int, "s" str, "h" HFSet
ROLE_SCHEMA: dict[str, str] = {
    "Anchor": "i",
    "PathB": "si",
    "P": "i",
    "Q": "i",
    "W": "i",
    "E": "s",
    "N": "h",
    "NC": "hi",
    "Chain": "i",
    "ClassMember": "hsi",
    "Sink": "s",
    "H": "i",
    "Plain": "i",
}


@dataclass(frozen=True)
class VertexRole:
    tag: str
    payload: tuple = ()

    def __post_init__(self) -> None:
        schema = ROLE_SCHEMA.get(self.tag)
        if schema is None:
            raise GraphError(f"unknown role tag {self.tag!r}")
        if len(schema) != len(self.payload):
            raise GraphError(f"role {self.tag} expects {len(schema)} payload fields")
        for kind, value in zip(schema, self.payload):
            ok = {"i": isinstance(value, int), "s": isinstance(value, str), "h": isinstance(value, HFSet)}[kind]
            if not ok:
                raise GraphError(f"bad payload {value!r} for role {self.tag}")

    def payload_text(self) -> str:
        return "|".join(v.render() if isinstance(v, HFSet) else str(v) for v in self.payload)

    @classmethod
    def parse(cls, tag: str, text: str) -> "VertexRole":
        schema = ROLE_SCHEMA.get(tag)
        if schema is None:
            raise GraphError(f"unknown role tag {tag!r}")
        parts = text.split("|") if schema else []
        if len(parts) != len(schema):
            raise GraphError(f"bad payload {text!r} for role {tag}")
        conv = {"i": int, "s": str, "h": parse_hf}
        return cls(tag, tuple(conv[k](p) for k, p in zip(schema, parts)))

    def label(self) -> str:
        return f"{self.tag}({self.payload_text()})" if self.payload else self.tag

    def __str__(self) -> str:
        return self.label()


class Digraph:
    """Immutable digraph on vertices ``0 .. n-1``.

    Out- and in-lists are sorted tuples; ``out_mask``/``in_mask`` hold the same
    adjacency as integer bitsets for the search code.
    """

    __slots__ = ("roles", "arrows", "out", "inn", "out_mask", "in_mask", "_index")

    def __init__(self, roles: Sequence[VertexRole], arrows: Iterable[tuple[int, int]]):
        self.roles: tuple[VertexRole, ...] = tuple(roles)
        n = len(self.roles)
        arrow_set = frozenset((int(a), int(b)) for a, b in arrows)
        for a, b in arrow_set:
            if not (0 <= a < n and 0 <= b < n):
                raise GraphError(f"arrow ({a}, {b}) leaves the vertex set")
        self.arrows: frozenset[tuple[int, int]] = arrow_set
        out: list[list[int]] = [[] for _ in range(n)]
        inn: list[list[int]] = [[] for _ in range(n)]
        for a, b in arrow_set:
            out[a].append(b)
            inn[b].append(a)
        self.out: tuple[tuple[int, ...], ...] = tuple(tuple(sorted(x)) for x in out)
        self.inn: tuple[tuple[int, ...], ...] = tuple(tuple(sorted(x)) for x in inn)
        self.out_mask = tuple(sum(1 << b for b in o) for o in self.out)
        self.in_mask = tuple(sum(1 << a for a in i) for i in self.inn)
        index: dict[VertexRole, int] = {}
        for v, r in enumerate(self.roles):
            if r in index:
                raise GraphError(f"duplicate role {r}")
            index[r] = v
        self._index = index

    @property
    def n(self) -> int:
        return len(self.roles)

    def __len__(self) -> int:
        return len(self.roles)

    def vertices(self) -> range:
        return range(len(self.roles))

    def vertex(self, role: VertexRole) -> int:
        try:
            return self._index[role]
        except KeyError:
            raise GraphError(f"no vertex with role {role}") from None

    def find(self, role: VertexRole) -> int | None:
        return self._index.get(role)

    def has_arrow(self, a: int, b: int) -> bool:
        return (a, b) in self.arrows

    def sorted_arrows(self) -> list[tuple[int, int]]:
        return sorted(self.arrows)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Digraph) and self.roles == other.roles and self.arrows == other.arrows

    def __hash__(self) -> int:
        return hash((self.roles, self.arrows))

    def __repr__(self) -> str:
        return f"Digraph(n={self.n}, arrows={len(self.arrows)})"

    def __reduce__(self):
        return (Digraph, (self.roles, self.sorted_arrows()))

    # interchange format

    def to_document(self) -> dict[str, Any]:
        return {
            "version": FORMAT_VERSION,
            "vertices": [[v, r.tag, r.payload_text()] for v, r in enumerate(self.roles)],
            "arrows": [list(a) for a in self.sorted_arrows()],
        }

    @classmethod
    def from_document(cls, doc: Mapping[str, Any]) -> "Digraph":
        if doc.get("version") != FORMAT_VERSION:
            raise GraphError(f"unsupported graph format version {doc.get('version')!r}")
        rows = sorted(doc["vertices"], key=lambda r: r[0])
        if [r[0] for r in rows] != list(range(len(rows))):
            raise GraphError("vertex ids must be 0..n-1")
        roles = [VertexRole.parse(tag, text) for _, tag, text in rows]
        return cls(roles, [tuple(a) for a in doc["arrows"]])

    def canonical_text(self) -> str:
        return json.dumps(self.to_document(), sort_keys=True, separators=(",", ":"))


class DigraphBuilder:
    def __init__(self) -> None:
        self.roles: list[VertexRole] = []
        self.arrows: set[tuple[int, int]] = set()
        self._index: dict[VertexRole, int] = {}

    def add(self, tag: str, *payload: Any) -> int:
        role = VertexRole(tag, tuple(payload))
        if role in self._index:
            raise GraphError(f"duplicate role {role}")
        self._index[role] = len(self.roles)
        self.roles.append(role)
        return len(self.roles) - 1

    def vertex(self, tag: str, *payload: Any) -> int:
        return self._index[VertexRole(tag, tuple(payload))]

    def arrow(self, a: int, b: int) -> None:
        self.arrows.add((a, b))

    def build(self) -> Digraph:
        return Digraph(self.roles, self.arrows)


def graph_hash(g: Digraph) -> str:
    return hashlib.sha256(g.canonical_text().encode()).hexdigest()


def _check_vertex(g: Digraph, v: int) -> None:
    if not (0 <= v < g.n):
        raise GraphError(f"unknown vertex {v}")


def outdegree(g: Digraph, v: int) -> int:
    _check_vertex(g, v)
    return len(g.out[v])


def has_loop(g: Digraph) -> bool:
    return any(a == b for a, b in g.arrows)


def identity(g: Digraph) -> VertexMap:
    return tuple(range(g.n))


def is_homomorphism(h: Sequence[int], g1: Digraph, g2: Digraph) -> bool:
    if len(h) != g1.n:
        raise GraphError(f"map covers {len(h)} vertices, graph has {g1.n}")
    if any(not (0 <= x < g2.n) for x in h):
        raise GraphError("map leaves the target vertex set")
    arrows = g2.arrows
    return all((h[a], h[b]) in arrows for a, b in g1.arrows)


def compose(h1: Sequence[int], h2: Sequence[int]) -> VertexMap:
    """``h2 . h1`` (apply ``h1`` first)."""
    if any(not (0 <= x < len(h2)) for x in h1):
        raise GraphError("domain mismatch: image of h1 not inside the domain of h2")
    return tuple(h2[x] for x in h1)


def induced_subgraph(g: Digraph, keep: Iterable[int]) -> Digraph:
    """Subgraph on ``keep``; vertices are renumbered densely in id order."""
    kept = sorted(set(keep))
    for v in kept:
        _check_vertex(g, v)
    new = {v: i for i, v in enumerate(kept)}
    return Digraph([g.roles[v] for v in kept], [(new[a], new[b]) for a, b in g.arrows if a in new and b in new])


def strongly_connected_components(g: Digraph) -> list[list[int]]:
    """Tarjan's algorithm, iterative."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in g.vertices():
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            v, i = work.pop()
            if i == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack.add(v)
            recurse = False
            succ = g.out[v]
            while i < len(succ):
                w = succ[i]
                i += 1
                if w not in index:
                    work.append((v, i))
                    work.append((w, 0))
                    recurse = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return comps


def is_acyclic(g: Digraph) -> bool:
    """Kahn's topological sort; loops count as cycles."""
    indeg = [len(i) for i in g.inn]
    ready = [v for v in g.vertices() if indeg[v] == 0]
    seen = 0
    while ready:
        v = ready.pop()
        seen += 1
        for w in g.out[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
    return seen == g.n


def find_cycles(g: Digraph, max_len: int | None = None) -> list[tuple[int, ...]]:
    """All elementary directed cycles of length at most ``max_len``.

    Each cycle is reported once, as ``(v0, ..., vk)`` with ``v0 == vk`` and
    ``v0`` the smallest vertex on it.  ``max_len=None`` means unbounded; that
    is exponential in general, so it is meant for graphs whose strongly
    connected components are small.
    """
    if max_len is not None and max_len < 1:
        raise GraphError("max_len must be at least 1")
    comp_of: dict[int, int] = {}
    for ci, comp in enumerate(strongly_connected_components(g)):
        for v in comp:
            comp_of[v] = ci
    limit = g.n if max_len is None else max_len
    cycles: list[tuple[int, ...]] = []
    for s in g.vertices():
        if s in g.out[s]:
            cycles.append((s, s))
        if limit < 2:
            continue
        path = [s]
        on_path = {s}
        stack = [iter(g.out[s])]
        while stack:
            for w in stack[-1]:
                if w == s and len(path) >= 2:
                    cycles.append(tuple(path) + (s,))
                elif w > s and w not in on_path and comp_of[w] == comp_of[s] and len(path) < limit:
                    path.append(w)
                    on_path.add(w)
                    stack.append(iter(g.out[w]))
                    break
            else:
                stack.pop()
                on_path.discard(path.pop())
    return sorted(cycles)


def unique_cycle(g: Digraph) -> tuple[int, ...] | None:
    """The only cycle of ``g`` if it has exactly one, else ``None``.

    A strongly connected component with ``k`` vertices and ``k`` internal
    arrows is a single cycle, so this is decided without enumerating cycles.
    """
    nontrivial = []
    for comp in strongly_connected_components(g):
        members = set(comp)
        internal = sum(1 for v in comp for w in g.out[v] if w in members)
        if len(comp) == 1 and internal == 0:
            continue
        nontrivial.append((comp, internal))
    if len(nontrivial) != 1:
        return None
    comp, internal = nontrivial[0]
    if internal != len(comp):
        return None
    (cycle,) = find_cycles(induced_subgraph(g, comp))
    return tuple(comp[i] for i in cycle)


def to_dot(g: Digraph, name: str = "G") -> str:
    lines = [f"digraph {json.dumps(name)} {{"]
    for v, r in enumerate(g.roles):
        lines.append(f"  {v} [label={json.dumps(f'{v}: {r.label()}')}];")
    for a, b in g.sorted_arrows():
        lines.append(f"  {a} -> {b};")
    lines.append("}")
    return "\n".join(lines) + "\n"
