import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import complete, cycle, plain_graph, transitive_tournament
from rigidgraph.digraph import GraphError, identity, is_homomorphism
from rigidgraph.endosearch import (
    BUDGET_ENV,
    Budget,
    Mode,
    OracleCapExceeded,
    SearchConstraints,
    default_budget,
    enumerate_automorphisms,
    enumerate_endomorphisms,
    find_nontrivial_endomorphism,
    naive_oracle,
    random_digraph,
)
from rigidgraph.gadgets import BlowupSpec, blow_up, build_ordinal_case, build_ray
from rigidgraph.hf import build_universe


def brute_force(g, c=SearchConstraints()):
    """itertools reference, independent of the numpy oracle."""
    return [h for h in itertools.product(range(g.n), repeat=g.n) if is_homomorphism(h, g, g) and c.admits(h)]


def test_single_arrow():
    g = plain_graph(2, [(0, 1)]).graph
    assert enumerate_endomorphisms(g).maps == [(0, 1)]


def test_three_cycle_rotations(three_cycle):
    g = three_cycle.graph
    assert enumerate_endomorphisms(g).maps == [(0, 1, 2), (1, 2, 0), (2, 0, 1)]
    assert enumerate_automorphisms(g).maps == [(0, 1, 2), (1, 2, 0), (2, 0, 1)]


def test_complete_graph_on_three():
    g = complete(3).graph
    perms = sorted(itertools.permutations(range(3)))
    assert enumerate_endomorphisms(g).maps == perms
    assert enumerate_automorphisms(g).maps == perms


def test_transitive_tournament_is_rigid():
    g = transitive_tournament(5).graph
    assert enumerate_automorphisms(g).maps == [identity(g)]


def test_ray_has_no_nontrivial_endomorphism():
    res = find_nontrivial_endomorphism(build_ray(5).graph)
    assert res.status == "none" and res.exhausted and res.maps == []


def test_loop_absorbs_everything():
    g = plain_graph(4, [(0, 3), (1, 3), (2, 3), (3, 3), (0, 1)]).graph
    res = find_nontrivial_endomorphism(g)
    assert res.status == "found"
    assert (3, 3, 3, 3) in enumerate_endomorphisms(g).maps


def test_blowup_swap_witness():
    base = build_ordinal_case(build_universe(1))
    x = base.part("N")[0]
    gg = blow_up(base, BlowupSpec.uniform(base, 2, {x: 2}), prefix=False)
    res = find_nontrivial_endomorphism(gg.graph)
    (h,) = res.maps
    assert is_homomorphism(h, gg.graph, gg.graph)
    moved = [v for v in gg.graph.vertices() if h[v] != v]
    assert len(moved) == 2 and h[moved[0]] == moved[1] and h[moved[1]] == moved[0]


def test_oracle_examples():
    assert naive_oracle(plain_graph(2, []).graph) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    g = build_ray(4).graph
    assert naive_oracle(g) == [identity(g)]
    with pytest.raises(OracleCapExceeded):
        naive_oracle(build_ray(9).graph)


def test_count_mode():
    g = cycle(4).graph
    res = enumerate_endomorphisms(g, SearchConstraints(mode=Mode.COUNT))
    assert res.count == len(naive_oracle(g)) and res.maps == [] and res.status == "complete"


def test_constraints():
    g = complete(3).graph
    c = SearchConstraints(must_fix=[0], must_move=[1])
    assert enumerate_endomorphisms(g, c).maps == [(0, 2, 1)]
    c = SearchConstraints(forced={0: 1}, allowed={1: frozenset({0})})
    assert enumerate_endomorphisms(g, c).maps == [(1, 0, 2)]
    with pytest.raises(GraphError):
        SearchConstraints(must_fix=[0], must_move=[0])
    with pytest.raises(GraphError):
        enumerate_endomorphisms(g, SearchConstraints(must_fix=[7]))


def test_budget_gives_inconclusive():
    g = build_ordinal_case(build_universe(2)).graph
    res = find_nontrivial_endomorphism(g, Budget(max_nodes=1))
    assert res.status == "inconclusive" and not res.exhausted
    res = enumerate_endomorphisms(complete(6).graph, budget=Budget(max_nodes=5))
    assert res.inconclusive
    with pytest.raises(ValueError):
        Budget(max_nodes=0)


def test_budget_from_environment(monkeypatch):
    monkeypatch.setenv(BUDGET_ENV, "17")
    assert default_budget() == Budget(max_nodes=17)
    monkeypatch.delenv(BUDGET_ENV)
    assert default_budget() == Budget()


def test_parallel_matches_serial():
    g = random_digraph(7, 0.3, random.Random(11), 0.2)
    serial = enumerate_endomorphisms(g).maps
    assert enumerate_endomorphisms(g, threads=2).maps == serial


def test_numpy_oracle_matches_itertools():
    rng = random.Random(5)
    for _ in range(30):
        g = random_digraph(rng.randint(1, 5), rng.choice([0.2, 0.5, 0.8]), rng, 0.2)
        assert naive_oracle(g) == brute_force(g)


CONSTRAINTS = [
    SearchConstraints(),
    SearchConstraints(nontrivial_only=True),
    SearchConstraints(injective=True),
    SearchConstraints(must_fix=[0], must_move=[1]),
    SearchConstraints(allowed={0: frozenset({0, 1})}),
]

graphs = st.builds(
    lambda n, density, loops, seed: random_digraph(n, density, random.Random(seed), loops),
    st.integers(2, 6),
    st.sampled_from([0.2, 0.5, 0.8]),
    st.sampled_from([0.0, 0.2]),
    st.integers(0, 10**6),
)


@settings(max_examples=80)
@given(graphs, st.sampled_from(CONSTRAINTS), st.booleans())
def test_solver_equals_oracle(g, c, propagate):
    ref = naive_oracle(g, c)
    res = enumerate_endomorphisms(g, c, propagate=propagate)
    assert res.exhausted and res.maps == ref
    count = enumerate_endomorphisms(g, c.with_mode(Mode.COUNT), propagate=propagate)
    assert count.count == len(ref)
    one = enumerate_endomorphisms(g, c.with_mode(Mode.FIND_ONE), propagate=propagate)
    assert (one.status == "found") == bool(ref)
    assert all(m in ref for m in one.maps)


@settings(max_examples=60)
@given(graphs)
def test_automorphisms_equal_oracle(g):
    assert enumerate_automorphisms(g).maps == naive_oracle(g, SearchConstraints(injective=True))


@settings(max_examples=60)
@given(graphs)
def test_nontrivial_search_agrees_with_enumeration(g):
    everything = naive_oracle(g)
    res = find_nontrivial_endomorphism(g)
    assert (res.status == "found") == (len(everything) > 1)
