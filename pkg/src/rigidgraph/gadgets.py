"""Compilers from rigidity constructions to concrete digraphs.

Most gadgets share one skeleton: a root vertex (the anchor's ``u3``, or the top
of the chain in the Berkeley gadget) with a bundle of tag paths hanging off it.
Every tag path has its own length, so an endomorphism that fixes the root has
to fix every path.  Two sinks keep the tag side and the set side apart:

* ``z_B`` receives an arrow from the root and from every path vertex;
* ``z_N`` receives an arrow from the root and from every set-side vertex, and
  points at ``z_B``.

A tag whose target set would be empty is not created: such a tag could fold
onto a longer path and the gadget would stop being rigid.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .digraph import Digraph, DigraphBuilder, GraphError, VertexRole, graph_hash
from .folog import CatalogEntry, FOStructure, catalog_hash, catalog_manifest, evaluator, formula_catalog
from .hf import ClosureN, HFSet, Universe, as_tuple, build_closure_N, canonical_less, natural, notin_rk, rank_less

__all__ = [
    "BlowupSpec",
    "GadgetError",
    "GadgetGraph",
    "PrefixFamily",
    "blow_up",
    "build_B_tags",
    "build_anchor",
    "build_berkeley",
    "build_finite_kappa",
    "build_lex_order",
    "build_ordinal_case",
    "build_prefix_family",
    "build_rank_copies",
    "build_ray",
    "drop_prefix_arrows",
    "gadget_from_document",
    "tournament_plus_cycle",
]

DEFAULT_VERTEX_BUDGET = 20000


class GadgetError(GraphError):
    pass


@dataclass(frozen=True)
class GadgetGraph:
    graph: Digraph
    parts: Mapping[str, tuple[int, ...]]
    meta: Mapping[str, Any] = field(default_factory=dict)

    def part(self, name: str) -> tuple[int, ...]:
        return tuple(self.parts.get(name, ()))

    @property
    def kind(self) -> str:
        return self.meta.get("kind", "graph")

    def vertex(self, tag: str, *payload: Any) -> int:
        return self.graph.vertex(VertexRole(tag, tuple(payload)))

    def hf_of(self, v: int) -> HFSet | None:
        """The set a set-side vertex stands for."""
        role = self.graph.roles[v]
        if role.tag in ("N", "NC", "ClassMember"):
            return role.payload[0]
        return None

    def copies(self, copy: int = 0) -> dict[int, int]:
        """``x -> x^c`` on vertex ids for the given copy index."""
        g = self.graph
        out = {}
        for v, r in enumerate(g.roles):
            if r.tag == "N":
                c = g.find(VertexRole("NC", (r.payload[0], copy)))
                if c is not None:
                    out[v] = c
        return out

    def primary_parts(self) -> list[str]:
        return list(self.meta.get("partition", self.parts))

    def check_partition(self) -> bool:
        seen: list[int] = []
        for name in self.primary_parts():
            seen.extend(self.parts.get(name, ()))
        return sorted(seen) == list(range(self.graph.n))

    def to_document(self) -> dict[str, Any]:
        doc = self.graph.to_document()
        doc["parts"] = {k: list(v) for k, v in sorted(self.parts.items())}
        doc["meta"] = dict(self.meta)
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_document(), sort_keys=True, indent=1) + "\n"

    def hash(self) -> str:
        return graph_hash(self.graph)


def gadget_from_document(doc: Mapping[str, Any]) -> GadgetGraph:
    g = Digraph.from_document(doc)
    parts = {k: tuple(v) for k, v in doc.get("parts", {}).items()}
    return GadgetGraph(g, parts, dict(doc.get("meta", {})))


class _Assembler(DigraphBuilder):
    """Builder with named parts and the shared tag-path skeleton."""

    def __init__(self, budget: int = DEFAULT_VERTEX_BUDGET) -> None:
        super().__init__()
        self.parts: dict[str, list[int]] = {}
        self.budget = budget
        self.root: int | None = None
        self.path_lengths: dict[str, int] = {}
        self.next_length = 1

    def add_to(self, part: str, tag: str, *payload: Any) -> int:
        if len(self.roles) >= self.budget:
            raise GadgetError(f"gadget exceeds vertex budget of {self.budget}")
        v = self.add(tag, *payload)
        self.parts.setdefault(part, []).append(v)
        return v

    def anchor(self) -> int:
        u = [self.add_to("A", "Anchor", i) for i in range(4)]
        for a, b in ((0, 1), (1, 2), (2, 0), (1, 3), (2, 3)):
            self.arrow(u[a], u[b])
        self.root = u[3]
        return u[3]

    def sinks(self) -> tuple[int, int]:
        assert self.root is not None
        zb = self.add_to("sinks", "Sink", "B")
        zn = self.add_to("sinks", "Sink", "N")
        self.arrow(self.root, zb)
        self.arrow(self.root, zn)
        self.arrow(zn, zb)
        return zb, zn

    def tag_path(self, label: str, length: int, tag: str, *payload: Any, part: str) -> int:
        """Path ``root -> ... -> tag`` with ``length`` arrows; returns the tag."""
        assert self.root is not None
        if length < 1:
            raise GadgetError("tag paths have at least one arrow")
        if label in self.path_lengths:
            raise GadgetError(f"duplicate tag {label}")
        if length in self.path_lengths.values():
            raise GadgetError(f"tag path length {length} already taken")
        zb = self.vertex("Sink", "B")
        prev = self.root
        for i in range(1, length):
            v = self.add_to("B", "PathB", label, i)
            self.parts.setdefault("C", []).append(v)
            if i == 1:
                self.parts.setdefault("starts", []).append(v)
            self.arrow(prev, v)
            self.arrow(v, zb)
            prev = v
        t = self.add_to("B", tag, *payload)
        self.parts.setdefault(part, []).append(t)
        if length == 1:
            self.parts.setdefault("starts", []).append(t)
        self.arrow(prev, t)
        self.arrow(t, zb)
        self.path_lengths[label] = length
        self.next_length = max(self.next_length, length + 1)
        return t

    def finish(self, meta: dict[str, Any], partition: Sequence[str]) -> GadgetGraph:
        meta = dict(meta)
        meta["partition"] = [p for p in partition if p in self.parts]
        meta["path_lengths"] = dict(self.path_lengths)
        parts = {k: tuple(v) for k, v in self.parts.items()}
        return GadgetGraph(self.build(), parts, meta)


_SKELETON_PARTS = ("A", "chain", "sinks", "B")


def build_ray(n: int) -> GadgetGraph:
    """Triangle-with-chord on ``u0, u1, u2`` continued by a path to ``u_{n-1}``."""
    if n < 3:
        raise GadgetError("the ray needs at least 3 vertices")
    b = _Assembler()
    u = [b.add_to("U", "Plain", i) for i in range(n)]
    b.arrow(u[0], u[1])
    b.arrow(u[0], u[2])
    for i in range(1, n - 1):
        b.arrow(u[i], u[i + 1])
    return b.finish({"kind": "ray", "n": n}, ["U"])


def build_lex_order(points: Sequence[tuple[str, int]]) -> GadgetGraph:
    """Strict lexicographic order on ``(string, ordinal)`` points, ordinal first."""
    pts = [(str(r), int(xi)) for r, xi in points]
    if len(set(pts)) != len(pts):
        raise GadgetError("points must be pairwise distinct")
    b = _Assembler()
    vs = [b.add_to("points", "Plain", i) for i in range(len(pts))]
    for i, (r1, x1) in enumerate(pts):
        for j, (r2, x2) in enumerate(pts):
            if x1 < x2 or (x1 == x2 and r1 < r2):
                b.arrow(vs[i], vs[j])
    return b.finish({"kind": "lex", "points": [list(p) for p in pts]}, ["points"])


@dataclass(frozen=True)
class PrefixFamily:
    depth: int
    strings: tuple[str, ...]

    def tree_arrows(self) -> list[tuple[str, str]]:
        members = set(self.strings)
        return [(s, s + bit) for s in self.strings for bit in "01" if s + bit in members]

    @staticmethod
    def tags(s: str, r: str) -> bool:
        """``e_s`` points at a vertex labelled ``r`` iff ``s`` is a prefix of ``r``."""
        return r.startswith(s)

    def restricted_to(self, labels: Iterable[str]) -> "PrefixFamily":
        """Only the prefixes of labels actually in use."""
        used = {r[:k] for r in labels for k in range(len(r) + 1)}
        return PrefixFamily(self.depth, tuple(s for s in self.strings if s in used))


def build_prefix_family(L: int) -> PrefixFamily:
    """All binary strings of length at most ``L``, shortest first."""
    if L < 1:
        raise GadgetError("prefix depth must be at least 1")
    strings = [""]
    for k in range(1, L + 1):
        strings.extend("".join(bits) for bits in itertools.product("01", repeat=k))
    return PrefixFamily(L, tuple(strings))


def _check_label(r: str, L: int) -> None:
    if len(r) != L or set(r) - {"0", "1"}:
        raise GadgetError(f"label {r!r} is not a binary string of length {L}")


def _attach_prefix_family(b: _Assembler, fam: PrefixFamily, members: Sequence[tuple[int, str]]) -> None:
    """Tag-path per ``e_s``, tree arrows, and ``e_s -> member`` for prefixes.

    Path lengths are spaced ``depth + 1`` apart: a walk down one ``e_s`` path
    and then along tree arrows must never be as long as another tag's path.
    """
    e = {}
    step = fam.depth + 1
    length = b.next_length
    for s in fam.strings:
        e[s] = b.tag_path(f"e:{s}", length, "E", s, part="E")
        length += step
    for s, t in fam.tree_arrows():
        b.arrow(e[s], e[t])
    for v, r in members:
        for k in range(len(r) + 1):
            s = r[:k]
            if s in e:
                b.arrow(e[s], v)


def build_anchor() -> GadgetGraph:
    """Directed triangle ``u0 -> u1 -> u2 -> u0`` with chords ``u1 -> u3``, ``u2 -> u3``."""
    b = _Assembler()
    b.anchor()
    return b.finish({"kind": "anchor"}, ["A"])


def _skeleton_lengths(p_count: int, q_count: int) -> tuple[list[int], list[int], int]:
    p = [2 * i + 2 for i in range(p_count)]
    q = [2 * j + 3 for j in range(q_count)]
    nxt = max([1] + [x + 1 for x in p + q])
    return p, q, nxt


def build_B_tags(p_count: int, q_count: int) -> GadgetGraph:
    """Anchor plus tag paths ``p_i`` (length ``2i+2``) and ``q_j`` (length ``2j+3``).

    Standing alone, the tags have no targets, so each tag points straight at
    ``z_N`` in their place.
    """
    if p_count < 0 or q_count < 0:
        raise GadgetError("counts must be non-negative")
    b = _Assembler()
    b.anchor()
    _, zn = b.sinks()
    p, q, _ = _skeleton_lengths(p_count, q_count)
    for i, length in enumerate(p):
        b.arrow(b.tag_path(f"p{i}", length, "P", i, part="P"), zn)
    for j, length in enumerate(q):
        b.arrow(b.tag_path(f"q{j}", length, "Q", j, part="Q"), zn)
    return b.finish({"kind": "B-tags", "p_count": p_count, "q_count": q_count}, _SKELETON_PARTS)


def build_finite_kappa(
    K_parts: Sequence[Iterable[str]], L: int, H_size: int = 0, *, prefix: bool = True
) -> GadgetGraph:
    """Parts ``K_i`` of labelled vertices, each pinned as a whole by a tag ``w_i``.

    ``prefix`` attaches the ``e_s`` family, which separates the members of a
    part from each other.  ``H_size`` extra vertices extend the fixed part as
    one more path whose end points at ``z_N``.
    """
    parts = [sorted(set(k)) for k in K_parts]
    if not parts or any(not k for k in parts):
        raise GadgetError("every part needs at least one label")
    for k in parts:
        for r in k:
            _check_label(r, L)
    if H_size < 0:
        raise GadgetError("H_size must be non-negative")
    b = _Assembler()
    b.anchor()
    _, zn = b.sinks()
    members: list[tuple[int, str]] = []
    for i, k in enumerate(parts):
        w = b.tag_path(f"w{i}", i + 1, "W", i, part="W")
        for r in k:
            v = b.add_to("K", "ClassMember", natural(i), r, 0)
            b.arrow(w, v)
            b.arrow(v, zn)
            members.append((v, r))
    if H_size:
        end = b.tag_path("h", b.next_length + H_size, "H", H_size, part="H")
        b.arrow(end, zn)
    if prefix:
        fam = build_prefix_family(L).restricted_to(r for _, r in members)
        _attach_prefix_family(b, fam, members)
    meta = {"kind": "finite-kappa", "L": L, "parts": parts, "H_size": H_size, "prefix": prefix}
    return b.finish(meta, _SKELETON_PARTS + ("K",))


def _set_side(
    b: _Assembler,
    nset: ClosureN,
    catalog: Sequence[CatalogEntry],
    nc_relation,
    tag_lengths,
) -> dict[str, Any]:
    """N, N^c, the bridges and the w/p/q tags shared by the set-theoretic gadgets."""
    zn = b.vertex("Sink", "N")
    elems = nset.elements
    xv = {x: b.add_to("N", "N", x) for x in elems}
    xc = {x: b.add_to("NC", "NC", x, 0) for x in elems}
    for x in elems:
        b.arrow(xv[x], zn)
        b.arrow(xc[x], zn)
        b.arrow(xv[x], xc[x])
        for y in x.children:
            b.arrow(xv[y], xv[x])
    for x in elems:
        for y in elems:
            if x is not y and nc_relation(x, y):
                b.arrow(xc[x], xc[y])

    # targets of every tag, before any path is laid down
    by_card: dict[int, list[HFSet]] = {}
    for x in elems:
        by_card.setdefault(len(x), []).append(x)
    base = set(nset.base.elements)
    holds = evaluator(FOStructure.membership(nset.base.elements))
    position = {x: i for i, x in enumerate(elems)}
    tuple_index: dict[tuple[HFSet, ...], HFSet] = {}
    for x in elems:
        coords = as_tuple(x)
        if coords is not None and len(coords) > 1 and all(c in base for c in coords):
            tuple_index[coords] = x
    q_targets: dict[int, list[HFSet]] = {}
    for e in catalog:
        if e.arity == 1:
            hits = [x for x in nset.base.elements if holds(e.formula, (x,))]
        else:
            hits = sorted(
                (t for coords, t in tuple_index.items() if len(coords) == e.arity and holds(e.formula, coords)),
                key=position.__getitem__,
            )
        q_targets[e.index] = hits

    max_card = max(by_card)
    p_list = [n for n in range(max_card + 1) if by_card.get(n)]
    q_list = [e.index for e in catalog if q_targets[e.index]]
    p_len, q_len, nxt = tag_lengths(len(p_list), len(q_list))
    w0 = b.tag_path("w0", nxt, "W", 0, part="W")
    w1 = b.tag_path("w1", nxt + 1, "W", 1, part="W")
    for x in elems:
        b.arrow(w0, xv[x])
        b.arrow(w1, xc[x])
    for n, length in zip(p_list, p_len):
        t = b.tag_path(f"p{n}", length, "P", n, part="P")
        for x in by_card[n]:
            b.arrow(t, xc[x])
    for k, length in zip(q_list, q_len):
        t = b.tag_path(f"q{k}", length, "Q", k, part="Q")
        for x in q_targets[k]:
            b.arrow(t, xc[x])
    return {
        "level": nset.base.level,
        "arity_bound": nset.arity_bound,
        "closure_size": len(elems),
        "catalog": catalog_manifest(catalog),
        "catalog_hash": catalog_hash(catalog),
        "p_tags": p_list,
        "q_tags": q_list,
        "dropped_q_tags": [e.index for e in catalog if not q_targets[e.index]],
    }


def _closure_and_catalog(u: Universe, catalog: Sequence[CatalogEntry] | None, arity_bound: int, budget: int):
    nset = build_closure_N(u, arity_bound, max_size=budget)
    if catalog is None:
        catalog = formula_catalog(u, arity_bound)
    for e in catalog:
        if e.arity > arity_bound:
            raise GadgetError(f"catalog entry {e.name} has arity {e.arity} above the arity bound {arity_bound}")
    return nset, list(catalog)


def build_ordinal_case(
    u: Universe,
    catalog: Sequence[CatalogEntry] | None = None,
    arity_bound: int = 2,
    *,
    budget: int = DEFAULT_VERTEX_BUDGET,
) -> GadgetGraph:
    """Anchor, tag paths, ``N`` under membership and ``N^c`` under the code order."""
    nset, catalog = _closure_and_catalog(u, catalog, arity_bound, budget)
    b = _Assembler(budget)
    b.anchor()
    b.sinks()
    meta = _set_side(b, nset, catalog, canonical_less, _skeleton_lengths)
    meta = {"kind": "ordinal-case", **meta}
    return b.finish(meta, _SKELETON_PARTS + ("N", "NC"))


def build_berkeley(
    u: Universe,
    catalog: Sequence[CatalogEntry] | None = None,
    chain_len: int | None = None,
    arity_bound: int = 2,
    *,
    budget: int = DEFAULT_VERTEX_BUDGET,
) -> GadgetGraph:
    """Like the ordinal case with ``!=`` on ``N^c``, rooted at the top of a chain.

    The chain is a transitive tournament on ``chain_len`` fresh vertices; it
    must be longer than everything else in the graph.  ``None`` picks the
    shortest admissible length.
    """
    nset, catalog = _closure_and_catalog(u, catalog, arity_bound, budget)
    # lay out the rest first on a scratch assembler to count it
    scratch = _Assembler(budget)
    scratch.root = scratch.add("Chain", 0)
    scratch.sinks()
    _set_side(scratch, nset, catalog, lambda x, y: True, _skeleton_lengths)
    rest = len(scratch.roles) - 1
    if chain_len is None:
        chain_len = rest + 1
    if chain_len <= rest:
        raise GadgetError(f"chain of length {chain_len} is not longer than the {rest} non-chain vertices")
    b = _Assembler(budget)
    chain = [b.add_to("chain", "Chain", i) for i in range(chain_len)]
    for i in range(chain_len):
        for j in range(i + 1, chain_len):
            b.arrow(chain[i], chain[j])
    b.root = chain[-1]
    b.sinks()
    meta = _set_side(b, nset, catalog, lambda x, y: True, _skeleton_lengths)
    meta = {"kind": "berkeley", "chain_len": chain_len, "non_chain": rest, **meta}
    return b.finish(meta, _SKELETON_PARTS + ("N", "NC"))


def build_rank_copies(nset: ClosureN) -> GadgetGraph:
    """``N`` under membership, ``N^c1`` under rank-guarded non-membership, ``N^c2`` under rank order."""
    b = _Assembler()
    elems = nset.elements
    xv = {x: b.add_to("N", "N", x) for x in elems}
    c1 = {x: b.add_to("NC1", "NC", x, 1) for x in elems}
    c2 = {x: b.add_to("NC2", "NC", x, 2) for x in elems}
    for x in elems:
        b.arrow(xv[x], c1[x])
        b.arrow(c1[x], c2[x])
        for y in elems:
            if x in y:
                b.arrow(xv[x], xv[y])
            if notin_rk(x, y):
                b.arrow(c1[x], c1[y])
            if rank_less(x, y):
                b.arrow(c2[x], c2[y])
    meta = {"kind": "rank-copies", "level": nset.base.level, "arity_bound": nset.arity_bound, "closure_size": len(elems)}
    return b.finish(meta, ["N", "NC1", "NC2"])


@dataclass(frozen=True)
class BlowupSpec:
    """Labels per set-side vertex: each vertex becomes a class of labelled copies."""

    labels: Mapping[int, tuple[str, ...]]
    L: int

    def __post_init__(self) -> None:
        for v, rs in self.labels.items():
            if not rs:
                raise GadgetError(f"vertex {v} has no labels")
            if len(set(rs)) != len(rs):
                raise GadgetError(f"vertex {v} has duplicate labels")
            for r in rs:
                _check_label(r, self.L)

    @classmethod
    def uniform(cls, base: GadgetGraph, L: int, sizes: Mapping[int, int] | None = None) -> "BlowupSpec":
        """Every set-side vertex gets the label ``0...0``; ``sizes`` enlarges chosen classes."""
        sizes = dict(sizes or {})
        strings = ["".join(p) for p in itertools.product("01", repeat=L)]
        labels = {}
        for v in base.part("N") + base.part("NC"):
            k = sizes.pop(v, 1)
            if not 1 <= k <= len(strings):
                raise GadgetError(f"class size {k} impossible with labels of length {L}")
            labels[v] = tuple(strings[:k])
        if sizes:
            raise GadgetError(f"vertices {sorted(sizes)} are not on the set side")
        return cls(labels, L)


def blow_up(base: GadgetGraph, spec: BlowupSpec, *, prefix: bool = True) -> GadgetGraph:
    """Replace every set-side vertex by its class; arrows touching a class go all-to-all."""
    side = set(base.part("N")) | set(base.part("NC"))
    if set(spec.labels) != side:
        raise GadgetError("blow-up labels must cover exactly the N and N^c vertices")
    g = base.graph
    b = _Assembler()
    image: dict[int, list[int]] = {}
    members: list[tuple[int, str]] = []
    base_part = {v: name for name in base.primary_parts() for v in base.part(name)}
    for v, role in enumerate(g.roles):
        if v in side:
            x = role.payload[0]
            copy = 0 if role.tag == "N" else 1
            part = "N" if copy == 0 else "NC"
            image[v] = []
            for r in spec.labels[v]:
                m = b.add_to(part, "ClassMember", x, r, copy)
                image[v].append(m)
                members.append((m, r))
        else:
            image[v] = [b.add_to(base_part[v], role.tag, *role.payload)]
    for name in ("C", "starts", "W", "P", "Q", "E", "H"):
        for v in base.part(name):
            b.parts.setdefault(name, []).append(image[v][0])
    for a, c in g.arrows:
        for x in image[a]:
            for y in image[c]:
                b.arrow(x, y)
    b.root = b.vertex("Anchor", 3) if "A" in base.parts else b.vertex("Chain", len(base.part("chain")) - 1)
    b.path_lengths = dict(base.meta.get("path_lengths", {}))
    b.next_length = max(b.path_lengths.values(), default=0) + 1
    if prefix:
        fam = build_prefix_family(spec.L).restricted_to(r for _, r in members)
        _attach_prefix_family(b, fam, members)
    meta = {k: v for k, v in base.meta.items() if k not in ("partition", "path_lengths")}
    meta.update(
        kind="blowup",
        base_kind=base.kind,
        base_hash=base.hash(),
        L=spec.L,
        prefix=prefix,
        classes={str(v): list(spec.labels[v]) for v in sorted(spec.labels)},
    )
    return b.finish(meta, _SKELETON_PARTS + ("N", "NC"))


def drop_prefix_arrows(gg: GadgetGraph) -> GadgetGraph:
    """The same gadget without the ``e_s -> member`` arrows."""
    g = gg.graph
    e = set(gg.part("E"))
    side = set(gg.part("N")) | set(gg.part("NC")) | set(gg.part("K"))
    arrows = [(a, c) for a, c in g.arrows if not (a in e and c in side)]
    meta = dict(gg.meta)
    meta["prefix_arrows"] = False
    return GadgetGraph(Digraph(g.roles, arrows), gg.parts, meta)


def tournament_plus_cycle(t: int = 5, c: int = 3) -> GadgetGraph:
    """Transitive tournament ``T_t`` next to a directed ``c``-cycle."""
    b = _Assembler()
    tv = [b.add_to("chain", "Chain", i) for i in range(t)]
    cv = [b.add_to("cycle", "Plain", i) for i in range(c)]
    for i in range(t):
        for j in range(i + 1, t):
            b.arrow(tv[i], tv[j])
    for i in range(c):
        b.arrow(cv[i], cv[(i + 1) % c])
    return b.finish({"kind": "tournament-plus-cycle", "t": t, "c": c}, ["chain", "cycle"])
