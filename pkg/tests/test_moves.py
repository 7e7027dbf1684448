import random
from fractions import Fraction

import pytest

from graphs import bs, f2, random_graph, theta, two_vertex_gbs
from gtd.core import Edge, GraphError, GraphOfGroups, Vertex, canonical_marking, reduce_letters, translate, validate_graph
from gtd.moves import (
    ExpansionSpec,
    collapse_edge,
    expand_vertex,
    graphs_equal,
    is_reduced,
    random_move,
    random_words,
    rescale_marking,
    same_deformation_space,
    spec_from_json,
    spec_to_json,
)


def classify(g, w):
    return reduce_letters(g, translate(g, w)).classification


def _profile(g, words):
    return [classify(g, w) for w in words]


def test_two_vertex_collapse():
    g = two_vertex_gbs()
    h, rec = collapse_edge(g, "e1")
    assert len(h.vertices) == 1
    (e,) = h.edges
    assert (e.index_from, e.index_to) == (6, 5)
    assert h.volume == 1
    assert rec.volume_before == 2 and rec.volume_after == 1
    assert str(rec.marking_update["a"]) == "b^2"


def test_tietze_oracle_for_collapse():
    # a = b^2 and e2^-1 b^5 e2 = a^3, so b^6 is conjugate to b^5 after collapsing
    g = two_vertex_gbs()
    h, _ = collapse_edge(g, "e1")
    for w in ["a b", "e2^-1 b^5 e2", "e2^-1 b^5 e2 a^-3", "a^-3 b^6"]:
        assert classify(g, w) == classify(h, w) == "elliptic"
    assert reduce_letters(h, translate(h, "e2^-1 b^5 e2 b^-6")).translation_length == 0
    assert classify(g, "e2") == classify(h, "e2") == "hyperbolic"


def test_collapse_then_inverse_expansion_is_identity():
    g = two_vertex_gbs()
    h, rec = collapse_edge(g, "e1")
    back, rec2 = expand_vertex(h, "v", rec.inverse)
    assert graphs_equal(back, g)
    assert rec2.volume_after == g.volume
    assert rec2.inverse == "e1"


def test_theta_collapse_gives_rose():
    h, _ = collapse_edge(theta(), "e1")
    assert len(h.vertices) == 1 and len(h.edges) == 2
    assert all(e.loop for e in h.edges)
    assert is_reduced(h) == (True, None)


def test_loop_collapse_rejected():
    with pytest.raises(GraphError) as info:
        collapse_edge(f2(), "x")
    assert info.value.name == "LoopCollapse"


def test_proper_edge_group_rejected():
    g = GraphOfGroups(
        (Vertex("u", "Z", "a"), Vertex("v", "Z", "b")),
        (Edge("e", "u", "v", 2, 3, Fraction(1)), Edge("f", "u", "v", 1, 1, Fraction(1))),
        frozenset({"e"}),
        None,
        "u",
    )
    with pytest.raises(GraphError) as info:
        collapse_edge(g, "e")
    assert info.value.name == "EdgeGroupNotFull"


def test_rose_expansion_adds_a_quarter():
    g = f2(lengths=(Fraction(1), Fraction(1)))
    spec = ExpansionSpec((("x", "to"), ("y", "to")), Fraction(1, 4), new_vertex="w", new_edge="s")
    h, rec = expand_vertex(g, "v", spec)
    assert validate_graph(h) == []
    assert len(h.vertices) == 2 and len(h.edges) == 3
    assert h.volume == g.volume + Fraction(1, 4)
    assert rec.volume_after - rec.volume_before == Fraction(1, 4)
    words = random_words(random.Random(1), g, 30)
    assert _profile(g, words) == _profile(h, words)
    # every element stays hyperbolic in the free action
    assert set(_profile(h, words)) == {"hyperbolic"}


def test_divisibility_failure():
    g = bs(3, 1)
    spec = ExpansionSpec((("t", "from"),), Fraction(1), k=2)
    with pytest.raises(GraphError) as info:
        expand_vertex(g, "v", spec)
    assert info.value.name == "DivisibilityFailure"


def test_unknown_vertex():
    with pytest.raises(GraphError) as info:
        expand_vertex(f2(), "nope", ExpansionSpec((), Fraction(1)))
    assert info.value.name == "UnknownVertex"


def test_spec_json_round_trip():
    spec = ExpansionSpec((("x", "to"),), Fraction(3, 4), 2, -1, "w", "s", False, "c", True)
    assert spec_from_json(spec_to_json(spec)) == spec


def test_reducedness():
    assert is_reduced(f2()) == (True, None)
    assert is_reduced(bs(2, 3)) == (True, None)
    assert is_reduced(theta())[0] is False
    assert is_reduced(two_vertex_gbs()) == (False, "e1")
    assert is_reduced(two_vertex_gbs(a=(2, 3)))[0] is True


@pytest.mark.parametrize("seed", range(5))
def test_collapse_agrees_with_original(seed):
    rng = random.Random(seed)
    g = random_graph(rng)
    words = random_words(rng, g, 50)
    for e in g.edges:
        try:
            h, _ = collapse_edge(g, e.id)
        except GraphError:
            continue
        assert same_deformation_space(g, h, words).agree


def test_free_and_bs_disagree():
    marked_bs = bs(2, 3).with_marking({"x": "a_v", "y": "t"})
    cmp = same_deformation_space(f2(), marked_bs, ["x y", "x", "y"])
    assert not cmp.agree
    assert cmp.witness == "x"
    assert cmp.classes == ("hyperbolic", "elliptic")


def test_rescaling_agrees():
    g = bs(2, 3)
    words = random_words(random.Random(3), g, 50)
    assert same_deformation_space(g, rescale_marking(g, 2), words).agree


def test_missing_marking():
    g = bs(2, 3)
    bare = GraphOfGroups(g.vertices, g.edges, g.spanning_tree, None, g.base)
    with pytest.raises(GraphError) as info:
        same_deformation_space(g, bare, ["a"])
    assert info.value.name == "MissingMarking"


@pytest.mark.parametrize("seed", range(6))
def test_random_sequences_preserve_profile(seed):
    rng = random.Random(seed)
    g = random_graph(rng)
    words = random_words(rng, g, 30)
    before = _profile(g, words)
    for _ in range(6):
        out = random_move(g, rng)
        if out is None:
            break
        h, rec = out
        assert validate_graph(h) == []
        assert h.volume == rec.volume_after
        assert _profile(h, words) == before
        g = h
    assert canonical_marking(g) is not None
