"""Endomorphism and automorphism search for finite digraphs.

Candidate images are kept as integer bitsets.  The solver maintains arc
consistency over both arrow directions, branches on the smallest domain first
and reports a three-valued outcome: a budget cutoff is never mistaken for
"no solution".
"""

from __future__ import annotations

import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

from .digraph import Digraph, GraphError, VertexMap, VertexRole, is_homomorphism

__all__ = [
    "BUDGET_ENV",
    "Budget",
    "Mode",
    "ORACLE_CAP",
    "OracleCapExceeded",
    "SearchConstraints",
    "SearchResult",
    "SearchStats",
    "default_budget",
    "enumerate_automorphisms",
    "enumerate_endomorphisms",
    "find_nontrivial_endomorphism",
    "naive_oracle",
    "random_digraph",
]

ORACLE_CAP = 8
BUDGET_ENV = "RIGIDGRAPH_MAX_NODES"


class Mode(str, Enum):
    FIND_ONE = "find-one"
    ENUMERATE = "enumerate"
    COUNT = "count"


class OracleCapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class SearchConstraints:
    must_fix: frozenset[int] = frozenset()
    must_move: frozenset[int] = frozenset()
    forced: Mapping[int, int] = field(default_factory=dict)
    # per-vertex allowed images; vertices not listed are unrestricted
    allowed: Mapping[int, frozenset[int]] = field(default_factory=dict)
    mode: Mode = Mode.ENUMERATE
    nontrivial_only: bool = False
    injective: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "must_fix", frozenset(self.must_fix))
        object.__setattr__(self, "must_move", frozenset(self.must_move))
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.must_fix & self.must_move:
            raise GraphError("must_fix and must_move overlap")
        for v, a in self.forced.items():
            if v in self.must_fix and a != v:
                raise GraphError(f"vertex {v} is forced to {a} but must be fixed")
            if v in self.must_move and a == v:
                raise GraphError(f"vertex {v} is forced to itself but must move")

    def validate(self, g: Digraph) -> None:
        n = g.n
        verts = set(self.must_fix) | set(self.must_move) | set(self.forced) | set(self.allowed)
        verts |= set(self.forced.values())
        for vs in self.allowed.values():
            verts |= set(vs)
        bad = [v for v in verts if not (0 <= v < n)]
        if bad:
            raise GraphError(f"constraint mentions unknown vertices {sorted(bad)[:5]}")

    def admits(self, h: VertexMap) -> bool:
        if any(h[v] != v for v in self.must_fix):
            return False
        if any(h[v] == v for v in self.must_move):
            return False
        if any(h[v] != a for v, a in self.forced.items()):
            return False
        if any(h[v] not in vs for v, vs in self.allowed.items()):
            return False
        if self.nontrivial_only and all(h[v] == v for v in range(len(h))):
            return False
        if self.injective and len(set(h)) != len(h):
            return False
        return True

    def with_mode(self, mode: Mode) -> "SearchConstraints":
        return SearchConstraints(
            self.must_fix, self.must_move, self.forced, self.allowed, mode, self.nontrivial_only, self.injective
        )


@dataclass(frozen=True)
class Budget:
    max_nodes: int | None = None
    max_seconds: float | None = None

    def __post_init__(self) -> None:
        if self.max_nodes is not None and self.max_nodes <= 0:
            raise ValueError("max_nodes must be positive")
        if self.max_seconds is not None and self.max_seconds <= 0:
            raise ValueError("max_seconds must be positive")


def default_budget() -> Budget:
    raw = os.environ.get(BUDGET_ENV)
    return Budget(max_nodes=int(raw)) if raw else Budget()


@dataclass
class SearchStats:
    nodes: int = 0
    prunes: int = 0
    solutions: int = 0
    wall_time: float = 0.0

    def merge(self, other: "SearchStats") -> None:
        self.nodes += other.nodes
        self.prunes += other.prunes
        self.solutions += other.solutions

    def as_dict(self) -> dict:
        return {"nodes": self.nodes, "prunes": self.prunes, "solutions": self.solutions}


@dataclass
class SearchResult:
    maps: list[VertexMap]
    count: int
    exhausted: bool
    stats: SearchStats
    mode: Mode

    @property
    def status(self) -> str:
        """``found`` / ``none`` for find-one, ``complete`` for full runs, else ``inconclusive``."""
        if self.mode is Mode.FIND_ONE:
            if self.maps:
                return "found"
            return "none" if self.exhausted else "inconclusive"
        return "complete" if self.exhausted else "inconclusive"

    @property
    def inconclusive(self) -> bool:
        return self.status == "inconclusive"


class _BudgetExceeded(Exception):
    pass


def _popcount(x: int) -> int:
    return x.bit_count()


def _bits(x: int) -> Iterable[int]:
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


class _Solver:
    def __init__(self, g: Digraph, c: SearchConstraints, budget: Budget, propagate: bool):
        self.g = g
        self.c = c
        self.n = g.n
        self.propagate = propagate
        self.max_nodes = budget.max_nodes
        self.deadline = None if budget.max_seconds is None else time.perf_counter() + budget.max_seconds
        self.stats = SearchStats()
        self.solutions: list[VertexMap] = []
        self.out_mask = g.out_mask
        self.in_mask = g.in_mask
        self.out = g.out
        self.inn = g.inn
        self.stop_after_first = c.mode is Mode.FIND_ONE
        self.keep = c.mode is not Mode.COUNT
        self.groups = _distinct_groups(g) if propagate else []

    def initial_domains(self) -> list[int] | None:
        g, c, n = self.g, self.c, self.n
        full = (1 << n) - 1
        loops = sum(1 << v for v in g.vertices() if v in g.out[v])
        doms = [full] * n
        for v in g.vertices():
            if v in g.out[v]:
                doms[v] &= loops
        for v in c.must_fix:
            doms[v] &= 1 << v
        for v in c.must_move:
            doms[v] &= ~(1 << v)
        for v, a in c.forced.items():
            doms[v] &= 1 << a
        for v, vs in c.allowed.items():
            doms[v] &= sum(1 << a for a in vs)
        if c.injective:
            # distinct out-neighbours need distinct images among out(h(v))
            outdeg = [len(o) for o in g.out]
            indeg = [len(i) for i in g.inn]
            for v in g.vertices():
                ok = sum(1 << a for a in g.vertices() if outdeg[a] >= outdeg[v] and indeg[a] >= indeg[v])
                doms[v] &= ok
        if any(d == 0 for d in doms):
            return None
        return doms

    # propagation

    def revise(self, doms: list[int], changed: Iterable[int]) -> bool:
        """Arc consistency from the changed vertices; False on a wipe-out."""
        out, inn, out_mask, in_mask = self.out, self.inn, self.out_mask, self.in_mask
        queue = list(dict.fromkeys(changed))
        queued = set(queue)
        while queue:
            w = queue.pop()
            queued.discard(w)
            dw = doms[w]
            # union of out/in neighbourhoods of w's candidates
            succ_of_dw = 0
            pred_of_dw = 0
            for a in _bits(dw):
                succ_of_dw |= out_mask[a]
                pred_of_dw |= in_mask[a]
            # u -> w : h(u) must have an out-arrow into D(w)
            for u in inn[w]:
                du = doms[u]
                nd = du & pred_of_dw
                if nd != du:
                    if not nd:
                        return False
                    self.stats.prunes += _popcount(du ^ nd)
                    doms[u] = nd
                    if u not in queued:
                        queue.append(u)
                        queued.add(u)
            # w -> x : h(x) must have an in-arrow from D(w)
            for x in out[w]:
                dx = doms[x]
                nd = dx & succ_of_dw
                if nd != dx:
                    if not nd:
                        return False
                    self.stats.prunes += _popcount(dx ^ nd)
                    doms[x] = nd
                    if x not in queued:
                        queue.append(x)
                        queued.add(x)
            if self.c.injective and _popcount(doms[w]) == 1:
                bit = doms[w]
                for u in range(self.n):
                    if u != w and doms[u] & bit:
                        nd = doms[u] & ~bit
                        if not nd:
                            return False
                        self.stats.prunes += 1
                        doms[u] = nd
                        if u not in queued:
                            queue.append(u)
                            queued.add(u)
        return True

    def pigeonhole(self, doms: list[int]) -> list[int] | None:
        """All-different over each clique group; returns changed vertices or None on failure."""
        changed = []
        for members in self.groups:
            union = 0
            taken = 0
            for v in members:
                d = doms[v]
                union |= d
                if d & (d - 1) == 0:
                    if taken & d:
                        return None
                    taken |= d
            if _popcount(union) < len(members):
                return None
            if taken:
                for v in members:
                    d = doms[v]
                    if d & (d - 1) and d & taken:
                        nd = d & ~taken
                        if not nd:
                            return None
                        self.stats.prunes += _popcount(d & taken)
                        doms[v] = nd
                        changed.append(v)
        return changed

    def check_assigned(self, doms: list[int], v: int) -> bool:
        """Consistency of ``v`` against fixed neighbours only (propagation off)."""
        a = doms[v].bit_length() - 1
        for w in self.out[v]:
            if _popcount(doms[w]) == 1 and not (self.out_mask[a] >> (doms[w].bit_length() - 1)) & 1:
                return False
        for u in self.inn[v]:
            if _popcount(doms[u]) == 1 and not (self.in_mask[a] >> (doms[u].bit_length() - 1)) & 1:
                return False
        if self.c.injective:
            for u in range(self.n):
                if u != v and doms[u] == doms[v]:
                    return False
        return True

    def watch_nontrivial(self, doms: list[int]) -> tuple[bool, int | None]:
        """Returns (alive, vertex forced off itself)."""
        movable = None
        for v in range(self.n):
            d = doms[v]
            if not (d >> v) & 1:
                return True, None  # some vertex already moves
            if d != 1 << v:
                if movable is not None:
                    return True, None
                movable = v
        if movable is None:
            return False, None
        return True, movable

    def settle(self, doms: list[int], changed: Iterable[int]) -> bool:
        if self.propagate:
            if not self.revise(doms, changed):
                return False
            while self.groups:
                more = self.pigeonhole(doms)
                if more is None:
                    return False
                if not more:
                    break
                if not self.revise(doms, more):
                    return False
        else:
            for v in changed:
                if _popcount(doms[v]) == 1 and not self.check_assigned(doms, v):
                    return False
        while self.c.nontrivial_only:
            alive, forced = self.watch_nontrivial(doms)
            if not alive:
                return False
            if forced is None:
                break
            doms[forced] &= ~(1 << forced)
            if not doms[forced]:
                return False
            if self.propagate:
                if not self.revise(doms, [forced]):
                    return False
            elif _popcount(doms[forced]) == 1 and not self.check_assigned(doms, forced):
                return False
        return True

    # search

    def tick(self) -> None:
        self.stats.nodes += 1
        if self.max_nodes is not None and self.stats.nodes > self.max_nodes:
            raise _BudgetExceeded
        if self.deadline is not None and self.stats.nodes % 256 == 0 and time.perf_counter() > self.deadline:
            raise _BudgetExceeded

    def choose(self, doms: list[int]) -> int | None:
        best, best_size = None, 0
        for v in range(self.n):
            s = _popcount(doms[v])
            if s > 1 and (best is None or s < best_size):
                best, best_size = v, s
                if s == 2:
                    break
        return best

    def values(self, v: int, dom: int) -> list[int]:
        vals = list(_bits(dom))
        if self.c.nontrivial_only and (dom >> v) & 1:
            # try moving first: witnesses turn up sooner
            vals.remove(v)
            vals.append(v)
        return vals

    def emit(self, doms: list[int]) -> None:
        h = tuple(d.bit_length() - 1 for d in doms)
        self.stats.solutions += 1
        if self.keep:
            self.solutions.append(h)

    def run_from(self, doms: list[int]) -> bool:
        """Depth-first search; returns True to stop early."""
        stack: list[tuple[list[int], int, list[int]]] = []
        self.tick()
        v = self.choose(doms)
        if v is None:
            self.emit(doms)
            return self.stop_after_first
        stack.append((doms, v, self.values(v, doms[v])))
        while stack:
            base, v, vals = stack[-1]
            if not vals:
                stack.pop()
                continue
            a = vals.pop(0)
            child = list(base)
            child[v] = 1 << a
            self.tick()
            if not self.settle(child, [v]):
                continue
            w = self.choose(child)
            if w is None:
                self.emit(child)
                if self.stop_after_first:
                    return True
                continue
            stack.append((child, w, self.values(w, child[w])))
        return False

    def root(self) -> list[int] | None:
        doms = self.initial_domains()
        if doms is None:
            return None
        if self.propagate:
            ok = self.settle(doms, range(self.n))
        else:
            ok = self.settle(doms, [v for v in range(self.n) if _popcount(doms[v]) == 1])
            if ok and not self.c.nontrivial_only:
                ok = all(self.check_assigned(doms, v) for v in range(self.n) if _popcount(doms[v]) == 1)
        return doms if ok else None


def _distinct_groups(g: Digraph, min_size: int = 4) -> list[tuple[int, ...]]:
    """Greedy cliques of the underlying undirected graph.

    Without loops, the two ends of an arrow never share an image, so every
    clique must be mapped injectively.  Only meaningful for loop-free graphs.
    """
    if any(a == b for a, b in g.arrows):
        return []
    adj = [g.out_mask[v] | g.in_mask[v] for v in g.vertices()]
    order = sorted(g.vertices(), key=lambda v: (-_popcount(adj[v]), v))
    groups: set[tuple[int, ...]] = set()
    covered = 0
    for v in order:
        if (covered >> v) & 1 or _popcount(adj[v]) + 1 < min_size:
            continue
        clique = [v]
        cand = adj[v]
        while cand:
            w = max(_bits(cand), key=lambda x: (_popcount(adj[x] & cand), -x))
            clique.append(w)
            cand &= adj[w]
        if len(clique) >= min_size:
            groups.add(tuple(sorted(clique)))
            for w in clique:
                covered |= 1 << w
    return sorted(groups)


def _run_subtree(args) -> tuple[list[VertexMap], SearchStats, bool]:
    g, c, budget, propagate, doms, changed = args
    s = _Solver(g, c, budget, propagate)
    try:
        if s.settle(doms, changed):
            s.run_from(doms)
        exhausted = True
    except _BudgetExceeded:
        exhausted = False
    return s.solutions, s.stats, exhausted


def enumerate_endomorphisms(
    g: Digraph,
    c: SearchConstraints | None = None,
    budget: Budget | None = None,
    *,
    propagate: bool = True,
    threads: int = 1,
) -> SearchResult:
    """Homomorphisms ``g -> g`` admitted by ``c``.

    In enumerate mode the maps come back sorted by image vector.  With
    ``threads > 1`` the first branching vertex's subtrees are farmed out to
    worker processes; the result set is the same.
    """
    c = c or SearchConstraints()
    c.validate(g)
    budget = budget or default_budget()
    start = time.perf_counter()
    solver = _Solver(g, c, budget, propagate)
    exhausted = True
    maps: list[VertexMap] = []
    stats = solver.stats
    try:
        doms = solver.root()
        if doms is not None:
            v = solver.choose(doms) if threads > 1 and c.mode is not Mode.FIND_ONE else None
            if v is None:
                solver.run_from(doms)
                maps = solver.solutions
            else:
                jobs = []
                for a in solver.values(v, doms[v]):
                    child = list(doms)
                    child[v] = 1 << a
                    jobs.append((g, c, budget, propagate, child, [v]))
                with ProcessPoolExecutor(max_workers=threads) as pool:
                    for sols, st, ok in pool.map(_run_subtree, jobs):
                        maps.extend(sols)
                        stats.merge(st)
                        exhausted = exhausted and ok
    except _BudgetExceeded:
        exhausted = False
        maps = solver.solutions
    if c.mode is Mode.ENUMERATE:
        maps.sort()
    for h in maps:
        # cheap insurance against propagation bugs
        if not is_homomorphism(h, g, g) or not c.admits(h):
            raise AssertionError(f"solver produced an invalid map {h}")
    stats.wall_time = time.perf_counter() - start
    return SearchResult(maps, stats.solutions, exhausted, stats, c.mode)


def find_nontrivial_endomorphism(
    g: Digraph,
    budget: Budget | None = None,
    c: SearchConstraints | None = None,
    *,
    injective: bool = False,
) -> SearchResult:
    base = c or SearchConstraints()
    c = SearchConstraints(
        base.must_fix, base.must_move, base.forced, base.allowed, Mode.FIND_ONE, True, injective or base.injective
    )
    return enumerate_endomorphisms(g, c, budget)


def _is_automorphism(h: VertexMap, g: Digraph) -> bool:
    if len(set(h)) != len(h):
        return False
    inverse = [0] * len(h)
    for v, a in enumerate(h):
        inverse[a] = v
    return is_homomorphism(h, g, g) and is_homomorphism(inverse, g, g)


def enumerate_automorphisms(
    g: Digraph, c: SearchConstraints | None = None, budget: Budget | None = None
) -> SearchResult:
    base = c or SearchConstraints()
    c = SearchConstraints(base.must_fix, base.must_move, base.forced, base.allowed, base.mode, base.nontrivial_only, True)
    res = enumerate_endomorphisms(g, c, budget)
    # on a finite graph a bijective endomorphism is onto the arrow set, so
    # this filter never drops anything; it is kept as a check
    res.maps = [h for h in res.maps if _is_automorphism(h, g)]
    return res


def naive_oracle(g: Digraph, c: SearchConstraints | None = None, cap: int = ORACLE_CAP) -> list[VertexMap]:
    """Brute force over all ``n ** n`` self-maps, in image-vector order."""
    c = c or SearchConstraints()
    n = g.n
    if n > cap:
        raise OracleCapExceeded(f"naive oracle is capped at {cap} vertices, graph has {n}")
    if n == 0:
        return [()]
    adj = np.zeros((n, n), dtype=bool)
    for a, b in g.arrows:
        adj[a, b] = True
    weights = n ** np.arange(n - 1, -1, -1, dtype=np.int64)
    total = n**n
    found: list[VertexMap] = []
    chunk = 1 << 20
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(total, lo + chunk), dtype=np.int64)
        maps = (idx[:, None] // weights[None, :]) % n
        ok = np.ones(len(idx), dtype=bool)
        for a, b in g.arrows:
            ok &= adj[maps[:, a], maps[:, b]]
        for v in c.must_fix:
            ok &= maps[:, v] == v
        for v in c.must_move:
            ok &= maps[:, v] != v
        for v, a in c.forced.items():
            ok &= maps[:, v] == a
        for v, vs in c.allowed.items():
            ok &= np.isin(maps[:, v], list(vs))
        if c.nontrivial_only:
            ok &= (maps != np.arange(n)[None, :]).any(axis=1)
        if c.injective:
            srt = np.sort(maps, axis=1)
            ok &= (srt[:, 1:] != srt[:, :-1]).all(axis=1)
        found.extend(tuple(int(x) for x in row) for row in maps[ok])
    return found


def random_digraph(n: int, density: float, rng: random.Random, loop_density: float = 0.0) -> Digraph:
    """Each ordered pair ``u != v`` is an arrow with probability ``density``."""
    arrows = []
    for u in range(n):
        for v in range(n):
            p = loop_density if u == v else density
            if rng.random() < p:
                arrows.append((u, v))
    return Digraph([VertexRole("Plain", (i,)) for i in range(n)], arrows)
