"""Rigidity certificates, the lemma battery, and embedding extraction.

A certificate records what an exhaustive search established about a graph.
The lemma battery replays, on a concrete self-map, the chain of facts an
endomorphism of a set-theoretic gadget is supposed to satisfy; each check is
gated on the ones it builds on, so a broken map is blamed on the first step
that actually fails.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Mapping, Sequence

from . import __version__
from .digraph import Digraph, GraphError, VertexMap, graph_hash, is_homomorphism
from .endosearch import (
    Budget,
    SearchConstraints,
    SearchResult,
    SearchStats,
    enumerate_endomorphisms,
    find_nontrivial_endomorphism,
)
from .folog import CatalogEntry, FOStructure, evaluator, parse
from .gadgets import GadgetGraph
from .hf import HFSet, as_natural, as_pair, as_tuple, build_universe, hf, pair, tuple_

__all__ = [
    "BatteryReport",
    "Certificate",
    "Claim",
    "ElementarityResult",
    "EndomorphismReport",
    "ExtractedMap",
    "ExtractionError",
    "LemmaResult",
    "SATISFACTION_KINDS",
    "catalog_from_meta",
    "certify_rigidity",
    "certify_strong_rigidity",
    "check_chain_top_fixed",
    "check_elementarity",
    "check_lemma_battery",
    "check_copies_coherent",
    "enumerate_gadget_endomorphisms",
    "extract_embedding",
]

SATISFACTION_KINDS = ("ordinal-case", "berkeley", "blowup")


class Claim(str, Enum):
    STRONGLY_RIGID = "strongly-rigid"
    RIGID = "rigid"
    NOT_STRONGLY_RIGID = "not-strongly-rigid"
    NOT_RIGID = "not-rigid"
    INCONCLUSIVE = "inconclusive"


@dataclass
class LemmaResult:
    name: str
    status: str  # pass / fail / blocked
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def as_dict(self) -> dict[str, str]:
        return {"name": self.name, "status": self.status, "detail": self.detail}


@dataclass
class BatteryReport:
    results: list[LemmaResult]

    def status(self, name: str) -> str:
        for r in self.results:
            if r.name == name:
                return r.status
        raise KeyError(name)

    def failed(self) -> list[str]:
        return [r.name for r in self.results if r.status == "fail"]

    @property
    def all_pass(self) -> bool:
        return all(r.passed for r in self.results)

    def as_list(self) -> list[dict[str, str]]:
        return [r.as_dict() for r in self.results]


@dataclass
class Certificate:
    graph_hash: str
    claim: Claim
    exhausted: bool
    witness: VertexMap | None = None
    lemmas: list[dict[str, str]] = field(default_factory=list)
    catalog: list[dict[str, Any]] = field(default_factory=list)
    stats: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.claim in (Claim.STRONGLY_RIGID, Claim.RIGID) and not self.exhausted:
            raise ValueError("a rigidity claim needs an exhausted search")

    def to_document(self) -> dict[str, Any]:
        return {
            "tool": "rigidgraph",
            "version": __version__,
            "graph_hash": self.graph_hash,
            "claim": self.claim.value,
            "exhausted": self.exhausted,
            "witness": list(self.witness) if self.witness is not None else None,
            "lemmas": self.lemmas,
            "catalog": self.catalog,
            "stats": self.stats,
        }

    def summary(self) -> str:
        line = f"{self.claim.value} (graph {self.graph_hash[:12]}, {self.stats.get('nodes', 0)} nodes)"
        if self.witness is not None:
            moved = [(v, a) for v, a in enumerate(self.witness) if v != a]
            line += f"; witness moves {len(moved)} vertices, first {moved[:3]}"
        return line


def _graph(g: GadgetGraph | Digraph) -> Digraph:
    return g.graph if isinstance(g, GadgetGraph) else g


def _stats_dict(*stats: SearchStats) -> dict[str, Any]:
    # wall time stays out: documents must be reproducible byte for byte
    out = {"nodes": 0, "prunes": 0, "solutions": 0}
    for s in stats:
        out["nodes"] += s.nodes
        out["prunes"] += s.prunes
        out["solutions"] += s.solutions
    return out


def _verified(h: VertexMap, g: Digraph) -> VertexMap:
    # independent of the solver's own post-check
    if len(h) != g.n or not all((h[a], h[b]) in g.arrows for a, b in g.arrows):
        raise AssertionError("solver witness is not an endomorphism")
    return h


def certify_strong_rigidity(
    g: GadgetGraph | Digraph, budget: Budget | None = None, *, battery: bool = True
) -> Certificate:
    """Exhaustive search for a non-identity endomorphism.

    When the first witness is not bijective, a nontrivial automorphism is
    looked for as well and preferred: it says more about the graph.
    """
    dg = _graph(g)
    res = find_nontrivial_endomorphism(dg, budget)
    stats = [res.stats]
    catalog = list(g.meta.get("catalog", [])) if isinstance(g, GadgetGraph) else []
    witness = None
    if res.status == "found":
        witness = _verified(res.maps[0], dg)
        if len(set(witness)) != len(witness):
            auto = find_nontrivial_endomorphism(dg, budget, injective=True)
            stats.append(auto.stats)
            if auto.status == "found":
                witness = _verified(auto.maps[0], dg)
        claim = Claim.NOT_STRONGLY_RIGID
    elif res.status == "none":
        claim = Claim.STRONGLY_RIGID
    else:
        claim = Claim.INCONCLUSIVE
    lemmas: list[dict[str, str]] = []
    if battery and isinstance(g, GadgetGraph) and g.kind in SATISFACTION_KINDS and claim is not Claim.INCONCLUSIVE:
        h = witness if witness is not None else tuple(range(dg.n))
        lemmas = check_lemma_battery(g, h).as_list()
    return Certificate(
        _hash(g), claim, res.exhausted or witness is not None, witness, lemmas, catalog, _stats_dict(*stats)
    )


def certify_rigidity(g: GadgetGraph | Digraph, budget: Budget | None = None) -> Certificate:
    dg = _graph(g)
    res = find_nontrivial_endomorphism(dg, budget, injective=True)
    if res.status == "found":
        claim, witness = Claim.NOT_RIGID, _verified(res.maps[0], dg)
    elif res.status == "none":
        claim, witness = Claim.RIGID, None
    else:
        claim, witness = Claim.INCONCLUSIVE, None
    catalog = list(g.meta.get("catalog", [])) if isinstance(g, GadgetGraph) else []
    return Certificate(_hash(g), claim, res.exhausted or witness is not None, witness, [], catalog, _stats_dict(res.stats))


def _hash(g: GadgetGraph | Digraph) -> str:
    return graph_hash(_graph(g))


# set-side views of a vertex map


class _SideView:
    """What ``h`` does to the sets, read off the N and N^c vertices.

    For a blow-up the view goes through the classes: ``N_map[x]`` is defined
    when every member of ``[x]`` lands in one N-class.
    """

    def __init__(self, gg: GadgetGraph, h: Sequence[int]):
        self.gg = gg
        self.h = h
        g = gg.graph
        self.N = set(gg.part("N"))
        self.NC = set(gg.part("NC"))
        self.blowup = gg.kind == "blowup"
        self.sets: list[HFSet] = []
        self.classes: dict[tuple[HFSet, int], list[int]] = {}
        for v in sorted(self.N | self.NC):
            r = g.roles[v]
            copy = r.payload[-1] if self.blowup else (0 if r.tag == "N" else 1)
            self.classes.setdefault((r.payload[0], copy), []).append(v)
        self.sets = sorted({x for x, copy in self.classes if copy == 0})
        self.incoherent: list[tuple[HFSet, int]] = []
        self.N_map = self._side_map(0, self.N)
        self.NC_map = self._side_map(1, self.NC)

    def _side_map(self, copy: int, part: set[int]) -> dict[HFSet, HFSet]:
        g, h = self.gg.graph, self.h
        out = {}
        for (x, c), members in self.classes.items():
            if c != copy:
                continue
            images = {g.roles[h[m]].payload[0] for m in members if h[m] in part}
            if len(images) == 1 and all(h[m] in part for m in members):
                out[x] = images.pop()
            elif len(images) > 1:
                self.incoherent.append((x, copy))
        return out


def _first(items) -> str:
    for item in items:
        return str(item)
    return ""


def _gated(order: Sequence[tuple[str, Sequence[str], Callable[[], str | None]]], gated: bool) -> BatteryReport:
    status: dict[str, str] = {}
    results = []
    for name, prereqs, check in order:
        if gated and any(status.get(p) != "pass" for p in prereqs):
            status[name] = "blocked"
            blockers = [p for p in prereqs if status.get(p) != "pass"]
            results.append(LemmaResult(name, "blocked", "needs " + ", ".join(blockers)))
            continue
        problem = check()
        status[name] = "pass" if problem is None else "fail"
        results.append(LemmaResult(name, status[name], problem or ""))
    return BatteryReport(results)


def check_lemma_battery(
    gg: GadgetGraph, h: Sequence[int], *, require_endomorphism: bool = True, gated: bool = True
) -> BatteryReport:
    """Evaluate the named facts about ``h`` on a set-theoretic gadget.

    ``require_endomorphism=False`` admits arbitrary self-maps, which is how
    negative controls are run.  ``gated=False`` evaluates every check even
    when the checks it depends on failed.
    """
    if gg.kind not in SATISFACTION_KINDS:
        raise GraphError(f"no lemma battery for gadgets of kind {gg.kind!r}")
    g = gg.graph
    h = tuple(h)
    if len(h) != g.n or any(not (0 <= a < g.n) for a in h):
        raise GraphError("map is not a total self-map of the gadget")
    if require_endomorphism and not is_homomorphism(h, g, g):
        raise GraphError("map is not an endomorphism of the gadget")
    view = _SideView(gg, h)
    base_elems = _base_elements(gg)
    base = set(base_elems)
    blowup = view.blowup

    def fixed(part_names: Sequence[str]) -> Callable[[], str | None]:
        def run() -> str | None:
            vs = [v for p in part_names for v in gg.part(p)]
            return _first(f"{g.roles[v]} -> {g.roles[h[v]]}" for v in vs if h[v] != v) or None

        return run

    def parts_closed() -> str | None:
        bad = [v for v in view.N if h[v] not in view.N] + [v for v in view.NC if h[v] not in view.NC]
        return _first(f"{g.roles[v]} -> {g.roles[h[v]]}" for v in sorted(bad)) or None

    def class_coherence() -> str | None:
        return _first(f"class {x} (copy {c}) is split" for x, c in view.incoherent) or None

    def within_class_identity() -> str | None:
        bad = []
        for members in view.classes.values():
            ms = set(members)
            bad.extend(m for m in members if h[m] in ms and h[m] != m)
        return _first(f"{g.roles[m]} -> {g.roles[h[m]]}" for m in bad) or None

    N_map, NC_map = view.N_map, view.NC_map

    def copy_coherence() -> str | None:
        bad = [x for x in view.sets if x in N_map and x in NC_map and N_map[x] is not NC_map[x]]
        return _first(f"h({x})={N_map[x]} but h({x}^c)={NC_map[x]}^c" for x in bad) or None

    def injective() -> str | None:
        seen: dict[HFSet, HFSet] = {}
        for x in view.sets:
            if x in N_map:
                y = N_map[x]
                if y in seen:
                    return f"{seen[y]} and {x} both go to {y}"
                seen[y] = x
        return None

    def image(x: HFSet) -> HFSet | None:
        return N_map.get(x)

    def finite_sets() -> str | None:
        for s in view.sets:
            imgs = [image(c) for c in s.children]
            if image(s) is None or any(i is None for i in imgs):
                continue
            if image(s) is not hf(imgs):
                return f"h({s}) = {image(s)}, images of members give {hf(imgs)}"
        return None

    def pairs() -> str | None:
        for z in view.sets:
            p = as_pair(z)
            if p is None or any(image(t) is None for t in (z, *p)):
                continue
            want = pair(image(p[0]), image(p[1]))
            if image(z) is not want:
                return f"h({z}) = {image(z)} instead of the pair {want}"
        return None

    def naturals() -> str | None:
        for z in view.sets:
            if as_natural(z) is not None and image(z) is not None and image(z) is not z:
                return f"natural {as_natural(z)} goes to {image(z)}"
        return None

    def tuples() -> str | None:
        for z in view.sets:
            t = as_tuple(z)
            if t is None or len(t) < 2 or any(image(c) is None for c in (z, *t)):
                continue
            want = tuple_([image(c) for c in t])
            if image(z) is not want:
                return f"h({z}) = {image(z)} instead of the tuple {want}"
        return None

    def base_universe() -> str | None:
        whole = hf(base_elems)
        if whole in N_map and N_map[whole] is not whole:
            return f"the base universe goes to {N_map[whole]}"
        return _first(f"{x} -> {N_map[x]} leaves the base universe" for x in base_elems if x in N_map and N_map[x] not in base) or None

    anchors = ("A", "chain")
    order: list[tuple[str, Sequence[str], Callable[[], str | None]]] = [
        ("anchors_fixed", (), fixed(anchors)),
        ("tags_fixed", ("anchors_fixed",), fixed(("sinks", "B"))),
        ("parts_closed", ("tags_fixed",), parts_closed),
    ]
    side_prereq: tuple[str, ...] = ("parts_closed",)
    if blowup:
        order.append(("class_coherence", ("parts_closed",), class_coherence))
        order.append(("within_class_identity", ("class_coherence",), within_class_identity))
        side_prereq = ("class_coherence",)
    order += [
        ("copy_coherence", side_prereq, copy_coherence),
        ("injective_on_N", ("copy_coherence",), injective),
        ("finite_sets_preserved", ("injective_on_N",), finite_sets),
        ("pairs_preserved", ("finite_sets_preserved",), pairs),
        ("naturals_fixed", ("finite_sets_preserved",), naturals),
        ("tuples_preserved", ("pairs_preserved", "naturals_fixed"), tuples),
        ("base_universe_preserved", ("finite_sets_preserved",), base_universe),
    ]
    return _gated(order, gated)


def _base_elements(gg: GadgetGraph) -> list[HFSet]:
    return list(build_universe(int(gg.meta["level"])).elements)


class ExtractionError(GraphError):
    pass


@dataclass
class ExtractedMap:
    """The map on sets induced by a gadget endomorphism."""

    on_N: dict[HFSet, HFSet]
    base: tuple[HFSet, ...]
    source: VertexMap
    quotient: bool

    @property
    def on_base(self) -> dict[HFSet, HFSet]:
        return {x: self.on_N[x] for x in self.base}

    def is_identity(self) -> bool:
        return all(x is y for x, y in self.on_N.items())

    def is_identity_on_base(self) -> bool:
        return all(x is y for x, y in self.on_base.items())


def extract_embedding(gg: GadgetGraph, h: Sequence[int]) -> ExtractedMap:
    """Read ``h`` as a map on sets (the quotient ``j`` for a blow-up)."""
    if gg.kind not in SATISFACTION_KINDS:
        raise ExtractionError(f"nothing to extract from a gadget of kind {gg.kind!r}")
    g = gg.graph
    h = tuple(h)
    if not is_homomorphism(h, g, g):
        raise ExtractionError("map is not an endomorphism of the gadget")
    view = _SideView(gg, h)
    if view.incoherent:
        x, c = view.incoherent[0]
        raise ExtractionError(f"not well defined: members of class {x} (copy {c}) land in different classes")
    missing = [x for x in view.sets if x not in view.N_map]
    if missing:
        raise ExtractionError(f"{missing[0]} is sent outside N")
    base = tuple(_base_elements(gg))
    not_base = [x for x in base if view.N_map[x] not in set(base)]
    if not_base:
        raise ExtractionError(f"{not_base[0]} is sent outside the base universe")
    return ExtractedMap(dict(view.N_map), base, h, view.blowup)


@dataclass
class ElementarityResult:
    ok: bool
    counterexample: tuple[str, tuple[HFSet, ...]] | None = None
    checked: int = 0


def check_elementarity(m: FOStructure, j: Mapping[Any, Any], catalog: Sequence[CatalogEntry]) -> ElementarityResult:
    """Does ``j`` preserve every catalog formula in both directions?"""
    dom = set(m.domain)
    for x in m.domain:
        if x not in j or j[x] not in dom:
            raise ValueError(f"map is not total into the domain at {x}")
    holds = evaluator(m)
    checked = 0
    for e in catalog:
        for args in itertools.product(m.domain, repeat=e.arity):
            checked += 1
            if holds(e.formula, args) != holds(e.formula, tuple(j[a] for a in args)):
                return ElementarityResult(False, (e.name, args), checked)
    return ElementarityResult(True, None, checked)


def catalog_from_meta(gg: GadgetGraph) -> list[CatalogEntry]:
    """The catalog a gadget was compiled with, rebuilt from its manifest."""
    out = []
    for row in gg.meta.get("catalog", []):
        e = CatalogEntry(int(row["index"]), row["name"], parse(row["text"]))
        if str(e.godel) != row["godel"]:
            raise ValueError(f"catalog entry {row['name']} does not match its Goedel number")
        out.append(e)
    return out


def enumerate_gadget_endomorphisms(
    gg: GadgetGraph | Digraph, c: SearchConstraints | None = None, budget: Budget | None = None
) -> SearchResult:
    return enumerate_endomorphisms(_graph(gg), c, budget)


@dataclass
class EndomorphismReport:
    checked: int
    exhausted: bool
    failures: list[dict[str, Any]]
    maps: list[VertexMap]
    stats: dict[str, Any]

    @property
    def all_pass(self) -> bool:
        return self.exhausted and not self.failures

    def as_dict(self) -> dict[str, Any]:
        return {
            "checked": self.checked,
            "exhausted": self.exhausted,
            "all_pass": self.all_pass,
            "failures": self.failures,
            "stats": self.stats,
        }


def check_copies_coherent(gg: GadgetGraph, budget: Budget | None = None) -> EndomorphismReport:
    """Every endomorphism keeping the three copies closed is copy-coherent and injective on N."""
    g = gg.graph
    N, C1, C2 = gg.part("N"), gg.part("NC1"), gg.part("NC2")
    allowed = {}
    for part in (N, C1, C2):
        fs = frozenset(part)
        allowed.update({v: fs for v in part})
    res = enumerate_endomorphisms(g, SearchConstraints(allowed=allowed), budget)
    c1 = {x: y for x, y in zip(N, C1)}
    c2 = {x: y for x, y in zip(N, C2)}
    failures = []
    for h in res.maps:
        problems = []
        if any(h[c1[x]] != c1[h[x]] for x in N):
            problems.append("copy1_coherent")
        if any(h[c2[x]] != c2[h[x]] for x in N):
            problems.append("copy2_coherent")
        if len({h[x] for x in N}) != len(N):
            problems.append("injective_on_N")
        if problems:
            failures.append({"map": list(h), "failed": problems})
    return EndomorphismReport(len(res.maps), res.exhausted, failures, res.maps, _stats_dict(res.stats))


def check_chain_top_fixed(gg: GadgetGraph, budget: Budget | None = None) -> EndomorphismReport:
    """Every endomorphism fixes the top of the chain, maps the chain into itself and is increasing on it."""
    chain = gg.part("chain")
    if not chain:
        raise GraphError("gadget has no chain")
    g = gg.graph
    rank = {v: g.roles[v].payload[0] for v in chain}
    top = max(chain, key=rank.__getitem__)
    res = enumerate_endomorphisms(g, SearchConstraints(), budget)
    failures = []
    for h in res.maps:
        problems = []
        if h[top] != top:
            problems.append("top_fixed")
        if any(h[v] not in rank for v in chain):
            problems.append("chain_closed")
        elif any(rank[h[a]] >= rank[h[b]] for a, b in itertools.combinations(sorted(chain, key=rank.__getitem__), 2)):
            problems.append("strictly_increasing")
        if problems:
            failures.append({"map": list(h), "failed": problems})
    return EndomorphismReport(len(res.maps), res.exhausted, failures, res.maps, _stats_dict(res.stats))
