import json
import random

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from conftest import complete, cycle, plain_graph
from rigidgraph.digraph import (
    Digraph,
    DigraphBuilder,
    GraphError,
    VertexRole,
    compose,
    find_cycles,
    graph_hash,
    has_loop,
    identity,
    induced_subgraph,
    is_acyclic,
    is_homomorphism,
    outdegree,
    strongly_connected_components,
    to_dot,
    unique_cycle,
)
from rigidgraph.endosearch import naive_oracle, random_digraph
from rigidgraph.gadgets import build_lex_order, build_ordinal_case, build_ray
from rigidgraph.hf import EMPTY, build_universe, hf


def to_nx(g: Digraph) -> nx.DiGraph:
    d = nx.DiGraph()
    d.add_nodes_from(g.vertices())
    d.add_edges_from(g.arrows)
    return d


def canonical_rotation(c):
    i = c.index(min(c))
    body = c[i:] + c[:i]
    return (*body, body[0])


def test_roles_validate_payloads():
    assert VertexRole("N", (EMPTY,)).payload_text() == "{}"
    assert VertexRole.parse("NC", "{{}}|2") == VertexRole("NC", (hf(EMPTY), 2))
    with pytest.raises(GraphError):
        VertexRole("Nope", (1,))
    with pytest.raises(GraphError):
        VertexRole("Plain", ("x",))
    with pytest.raises(GraphError):
        VertexRole("PathB", ("x",))


def test_graph_rejects_bad_input():
    with pytest.raises(GraphError):
        Digraph([VertexRole("Plain", (0,))], [(0, 1)])
    with pytest.raises(GraphError):
        Digraph([VertexRole("Plain", (0,))] * 2, [])
    b = DigraphBuilder()
    b.add("Plain", 0)
    with pytest.raises(GraphError):
        b.add("Plain", 0)


def test_outdegree_examples():
    g = plain_graph(2, [])
    assert outdegree(g.graph, 0) == 0
    assert outdegree(build_ray(6).graph, 0) == 2
    k4 = complete(4).graph
    assert [outdegree(k4, v) for v in k4.vertices()] == [3, 3, 3, 3]
    with pytest.raises(GraphError):
        outdegree(k4, 9)


def test_loops():
    assert has_loop(plain_graph(1, [(0, 0)]).graph)
    assert not any(has_loop(build_ray(n).graph) for n in range(3, 12))
    assert not has_loop(build_lex_order([("0", 0), ("1", 0), ("0", 1), ("1", 2)]).graph)


def test_cycles_examples():
    assert find_cycles(build_ray(6).graph) == []
    assert find_cycles(cycle(3).graph) == [(0, 1, 2, 0)]
    gg = build_ordinal_case(build_universe(2))
    u = [gg.vertex("Anchor", i) for i in range(3)]
    assert find_cycles(gg.graph) == [(*u, u[0])]
    assert unique_cycle(gg.graph) == (*u, u[0])


def test_cycle_length_bound():
    g = plain_graph(4, [(0, 1), (1, 0), (1, 2), (2, 3), (3, 1)]).graph
    assert find_cycles(g, max_len=2) == [(0, 1, 0)]
    assert find_cycles(g) == [(0, 1, 0), (1, 2, 3, 1)]
    assert unique_cycle(g) is None
    with pytest.raises(GraphError):
        find_cycles(g, max_len=0)


def test_induced_subgraph_examples():
    g = build_ray(10).graph
    assert induced_subgraph(g, g.vertices()) == g
    assert induced_subgraph(g, []).n == 0
    assert induced_subgraph(g, range(6)) == build_ray(6).graph


def test_homomorphism_examples(three_cycle):
    g = three_cycle.graph
    assert is_homomorphism(identity(g), g, g)
    assert is_homomorphism((1, 2, 0), g, g)
    assert not is_homomorphism((0, 0, 0), g, g)
    with pytest.raises(GraphError):
        is_homomorphism((0, 1), g, g)


def test_interchange_round_trip_and_hash():
    gg = build_ordinal_case(build_universe(2))
    doc = json.loads(json.dumps(gg.graph.to_document()))
    back = Digraph.from_document(doc)
    assert back == gg.graph and back.roles == gg.graph.roles
    assert graph_hash(back) == graph_hash(gg.graph)
    assert graph_hash(build_ray(5).graph) != graph_hash(build_ray(6).graph)
    with pytest.raises(GraphError):
        Digraph.from_document({**doc, "version": 99})


def test_dot_export():
    dot = to_dot(build_ray(3).graph, "ray")
    assert dot.startswith('digraph "ray" {')
    assert "0 -> 1;" in dot and "Plain(2)" in dot


def test_idempotent_injective_endomorphisms_are_identity():
    rng = random.Random(3)
    for _ in range(40):
        g = random_digraph(rng.randint(1, 5), rng.choice([0.2, 0.5]), rng, 0.1)
        for h in naive_oracle(g):
            if compose(h, h) == h and len(set(h)) == len(h):
                assert h == identity(g)


graphs = st.builds(
    lambda n, density, seed: random_digraph(n, density, random.Random(seed), 0.1),
    st.integers(1, 6),
    st.sampled_from([0.2, 0.4, 0.6]),
    st.integers(0, 10**6),
)


@settings(max_examples=60)
@given(graphs)
def test_cycles_match_networkx(g):
    ours = find_cycles(g)
    ref = sorted(canonical_rotation(c) for c in nx.simple_cycles(to_nx(g)))
    assert ours == ref
    assert is_acyclic(g) == (ref == [])
    comps = sorted(sorted(c) for c in strongly_connected_components(g))
    assert comps == sorted(sorted(c) for c in nx.strongly_connected_components(to_nx(g)))


@settings(max_examples=60)
@given(graphs, st.data())
def test_compose_preserves_homomorphisms(g, data):
    homs = naive_oracle(g)
    h1 = data.draw(st.sampled_from(homs))
    h2 = data.draw(st.sampled_from(homs))
    assert is_homomorphism(compose(h1, h2), g, g)
    assert compose(h1, h2) == tuple(h2[h1[v]] for v in g.vertices())


@settings(max_examples=40)
@given(graphs, st.data())
def test_induced_subgraph_keeps_exactly_internal_arrows(g, data):
    keep = sorted(data.draw(st.sets(st.sampled_from(list(g.vertices())))))
    sub = induced_subgraph(g, keep)
    assert sub.n == len(keep)
    expected = {(keep.index(a), keep.index(b)) for a, b in g.arrows if a in keep and b in keep}
    assert set(sub.arrows) == expected
    assert induced_subgraph(g, g.vertices()).arrows == g.arrows


@given(graphs)
def test_identity_is_homomorphism(g):
    assert is_homomorphism(identity(g), g, g)
