import itertools

import pytest
from hypothesis import given, settings, strategies as st

from rigidgraph.digraph import Digraph, VertexRole, find_cycles, has_loop, is_acyclic, outdegree, unique_cycle
from rigidgraph.endosearch import enumerate_endomorphisms, find_nontrivial_endomorphism, naive_oracle
from rigidgraph.folog import formula_catalog
from rigidgraph.gadgets import (
    BlowupSpec,
    GadgetError,
    PrefixFamily,
    blow_up,
    build_anchor,
    build_B_tags,
    build_berkeley,
    build_finite_kappa,
    build_lex_order,
    build_ordinal_case,
    build_prefix_family,
    build_rank_copies,
    build_ray,
    drop_prefix_arrows,
    gadget_from_document,
    tournament_plus_cycle,
)
from rigidgraph.hf import build_closure_N, build_universe

V1, V2 = build_universe(1), build_universe(2)


def only_identity(gg):
    res = enumerate_endomorphisms(gg.graph)
    return res.exhausted and res.maps == [tuple(range(gg.graph.n))]


def all_gadgets():
    base = build_ordinal_case(V1)
    spec = BlowupSpec.uniform(base, 2, {base.part("N")[0]: 2})
    return [
        build_ray(7),
        build_lex_order([("01", 0), ("10", 1), ("00", 1)]),
        build_anchor(),
        build_B_tags(2, 3),
        build_finite_kappa([["000", "011"], ["101"]], 3, 2),
        build_ordinal_case(V2),
        build_berkeley(V1),
        build_rank_copies(build_closure_N(V1, 2)),
        blow_up(base, spec),
        tournament_plus_cycle(),
    ]


def test_ray_triangle_with_chord():
    gg = build_ray(3)
    assert gg.graph.sorted_arrows() == [(0, 1), (0, 2), (1, 2)]
    assert naive_oracle(gg.graph) == [(0, 1, 2)]


def test_ray_outdegrees():
    g = build_ray(6).graph
    assert [outdegree(g, v) for v in g.vertices()] == [2, 1, 1, 1, 1, 0]
    assert all(is_acyclic(build_ray(n).graph) for n in range(3, 12))
    with pytest.raises(GadgetError):
        build_ray(2)


def test_lex_order():
    assert build_lex_order([("0", 0)]).graph.arrows == frozenset()
    g = build_lex_order([("0", 0), ("1", 0), ("0", 1)]).graph
    assert g.sorted_arrows() == [(0, 1), (0, 2), (1, 2)]
    with pytest.raises(GadgetError):
        build_lex_order([("0", 0), ("0", 0)])


@settings(max_examples=30)
@given(st.lists(st.tuples(st.text("01", min_size=2, max_size=2), st.integers(0, 3)), min_size=1, max_size=10, unique=True))
def test_lex_order_is_transitive_tournament(points):
    g = build_lex_order(points).graph
    assert not has_loop(g)
    for a, b in itertools.combinations(g.vertices(), 2):
        assert g.has_arrow(a, b) != g.has_arrow(b, a)
    for a, b, c in itertools.permutations(g.vertices(), 3):
        if g.has_arrow(a, b) and g.has_arrow(b, c):
            assert g.has_arrow(a, c)


def test_prefix_family():
    assert build_prefix_family(1).strings == ("", "0", "1")
    fam = build_prefix_family(2)
    assert [s for s in fam.strings if PrefixFamily.tags(s, "01")] == ["", "0", "01"]
    assert fam.restricted_to(["01"]).strings == ("", "0", "01")
    assert ("0", "01") in fam.tree_arrows()


def test_anchor_is_rigid_and_its_chords_matter():
    gg = build_anchor()
    assert len(naive_oracle(gg.graph)) == 1
    u = [gg.vertex("Anchor", i) for i in range(4)]
    g = gg.graph
    without = Digraph(g.roles, g.arrows - {(u[1], u[3])})
    # frozen from the brute-force oracle: u3 may fold onto u0 and the triangle may rotate
    expected = [(0, 1, 2, 0), (0, 1, 2, 3), (1, 2, 0, 1), (2, 0, 1, 2)]
    assert naive_oracle(without) == expected
    assert enumerate_endomorphisms(without).maps == expected


def test_b_tags():
    gg = build_B_tags(1, 1)
    assert gg.meta["path_lengths"] == {"p0": 2, "q0": 3}
    assert only_identity(gg)
    assert only_identity(build_B_tags(3, 4))


def test_finite_kappa_prefix_family_separates_labels():
    assert only_identity(build_finite_kappa([["010"]], 3))
    no_prefix = build_finite_kappa([["000", "001"]], 3, prefix=False)
    (h,) = find_nontrivial_endomorphism(no_prefix.graph).maps
    k = no_prefix.part("K")
    assert (h[k[0]], h[k[1]]) == (k[1], k[0])
    assert only_identity(build_finite_kappa([["000", "001"]], 3))
    with pytest.raises(GadgetError):
        build_finite_kappa([["01"]], 3)


def test_ordinal_case_structure():
    gg = build_ordinal_case(V1, formula_catalog(V1, 1))
    n = len(gg.part("N"))
    w0, w1 = gg.vertex("W", 0), gg.vertex("W", 1)
    g = gg.graph
    bridges = [(x, c) for x, c in gg.copies().items() if g.has_arrow(x, c)]
    pinning = sum(g.has_arrow(w0, x) for x in gg.part("N")) + len(bridges) + sum(g.has_arrow(w1, c) for c in gg.part("NC"))
    assert pinning == 3 * n
    assert gg.check_partition()


def test_ordinal_case_cycle_and_lengths():
    gg = build_ordinal_case(V2)
    u = [gg.vertex("Anchor", i) for i in range(3)]
    assert find_cycles(gg.graph) == [(*u, u[0])]
    lengths = gg.meta["path_lengths"]
    assert len(set(lengths.values())) == len(lengths)
    g = gg.graph
    root = gg.vertex("Anchor", 3)
    for label, length in lengths.items():
        path = [root] + [gg.vertex("PathB", label, i) for i in range(1, length)]
        assert all(g.has_arrow(a, b) for a, b in zip(path, path[1:]))


def test_ordinal_case_is_deterministic():
    a = build_ordinal_case(V2)
    b = build_ordinal_case(V2)
    assert a.hash() == b.hash() and a.to_json() == b.to_json()


def test_catalog_arity_checked():
    with pytest.raises(GadgetError):
        build_ordinal_case(V1, formula_catalog(V1, 2), arity_bound=1)


def test_berkeley_chain():
    gg = build_berkeley(V1)
    assert gg.meta["chain_len"] == gg.meta["non_chain"] + 1
    assert gg.meta["non_chain"] == gg.graph.n - gg.meta["chain_len"]
    chain = gg.part("chain")
    g = gg.graph
    assert all(g.has_arrow(a, b) for a, b in itertools.combinations(chain, 2))
    with pytest.raises(GadgetError):
        build_berkeley(V1, chain_len=gg.meta["non_chain"])


def test_tournament_plus_cycle():
    gg = tournament_plus_cycle()
    maps = naive_oracle(gg.graph)
    assert maps == enumerate_endomorphisms(gg.graph).maps
    assert len(maps) == 3
    assert all(h[v] == v for h in maps for v in gg.part("chain"))


def test_rank_copies_acyclic():
    gg = build_rank_copies(build_closure_N(V1, 2))
    assert is_acyclic(gg.graph)
    assert gg.check_partition()


def test_blowup_examples():
    base = build_ordinal_case(V1)
    x = base.part("N")[0]
    spec = BlowupSpec.uniform(base, 2, {x: 2})
    assert only_identity(blow_up(base, spec))
    bare = blow_up(base, spec, prefix=False)
    assert find_nontrivial_endomorphism(bare.graph).status == "found"
    dropped = drop_prefix_arrows(blow_up(base, spec))
    assert find_nontrivial_endomorphism(dropped.graph).status == "found"
    with pytest.raises(GadgetError):
        BlowupSpec.uniform(base, 1, {x: 3})
    with pytest.raises(GadgetError):
        blow_up(base, BlowupSpec({x: ("00",)}, 2))


def test_singleton_blowup_is_isomorphic_to_base():
    base = build_ordinal_case(V1)
    spec = BlowupSpec.uniform(base, 2)
    bg = blow_up(base, spec, prefix=False).graph

    def image(role):
        if role.tag in ("N", "NC"):
            return VertexRole("ClassMember", (role.payload[0], spec.labels[base.graph.vertex(role)][0], 0 if role.tag == "N" else 1))
        return role

    iso = [bg.vertex(image(r)) for r in base.graph.roles]
    assert len(set(iso)) == bg.n == base.graph.n
    assert {(iso[a], iso[b]) for a, b in base.graph.arrows} == set(bg.arrows)
    # with the prefix family, the base sits inside as an induced copy
    full = blow_up(base, spec).graph
    assert all(full.has_arrow(full.vertex(bg.roles[a]), full.vertex(bg.roles[b])) for a, b in bg.arrows)


@pytest.mark.parametrize("gg", all_gadgets(), ids=lambda gg: gg.kind)
def test_every_gadget_is_loop_free_and_round_trips(gg):
    assert not has_loop(gg.graph)
    back = gadget_from_document(gg.to_document())
    assert back.graph == gg.graph and back.hash() == gg.hash()
    assert back.to_json() == gg.to_json()


@pytest.mark.parametrize("gg", [g for g in all_gadgets() if "A" in g.parts], ids=lambda gg: gg.kind)
def test_anchor_is_the_only_cycle(gg):
    u = [gg.vertex("Anchor", i) for i in range(3)]
    assert unique_cycle(gg.graph) == (*u, u[0])
