import random
from fractions import Fraction

import pytest

from graphs import bs, f2
from gtd.core import Edge, GraphError, GraphOfGroups, Vertex
from gtd.folding import (
    base_length,
    fold_at_time,
    fold_budget,
    fold_depth_bruteforce,
    fold_path,
    length_profile,
    make_morphism,
    random_morphism,
)
from gtd.moves import random_words
from gtd.section import rose

HALF = Fraction(1, 2)


def worked_example():
    dom = rose(["a", "b"], (1, 2))
    rng = rose(["a", "c"], (1, 1)).with_marking({"a": "a", "b": "a c"})
    return make_morphism(dom, rng, {"a": "a", "b": "a c"})


def small_rose():
    return GraphOfGroups(
        (Vertex("v", "1"),),
        (Edge("a", "v", "v", 1, 1, Fraction(1)), Edge("c", "v", "v", 1, 1, HALF)),
        frozenset(),
        None,
        "v",
    )


def small_theta():
    vs = (Vertex("u", "1"), Vertex("w", "1"))
    es = (
        Edge("e1", "u", "w", 1, 1, Fraction(1)),
        Edge("e2", "u", "w", 1, 1, HALF),
        Edge("e3", "u", "w", 1, 1, Fraction(3, 2)),
    )
    return GraphOfGroups(vs, es, frozenset({"e1"}), None, "u")


def seeded_morphism(seed):
    rng = random.Random(seed)
    target = small_rose() if seed % 2 else small_theta()
    return rng, random_morphism(rng, target, moves=rng.randint(1, 3))


def test_identity_has_depth_zero():
    m = make_morphism(f2(), f2(), {"x": "x", "y": "y"})
    assert m.fold_depth == 0
    assert fold_at_time(m, HALF).tree.volume == f2().volume


def test_worked_example_depth():
    m = worked_example()
    assert m.fold_depth == 1
    assert fold_depth_bruteforce(m, 12) == 1


def test_worked_example_half_fold():
    T = fold_at_time(worked_example(), HALF).tree
    assert sorted(e.length for e in T.edges) == [HALF, HALF, Fraction(3, 2)]
    assert T.volume == Fraction(5, 2)


def test_worked_example_half_fold_lengths():
    # a = a0 a1 and b = a0 b1 after sharing the first half of a
    T = fold_at_time(worked_example(), HALF).tree
    assert base_length(T, "a") == 1
    assert base_length(T, "b") == 2
    assert base_length(T, "a^-1 b") == 2
    assert base_length(T, "a b") == 3


def test_length_mismatch():
    dom = rose(["a", "b"], (1, 2))
    rng = rose(["a", "c"], (1, 1)).with_marking({"a": "a", "b": "a c"})
    with pytest.raises(GraphError) as info:
        make_morphism(dom, rng, {"a": "a", "b": "a c a"})
    assert info.value.name == "LengthMismatch"


def test_nontrivial_stabilizer():
    with pytest.raises(GraphError) as info:
        make_morphism(bs(2, 3), f2(), {"t": "x"})
    assert info.value.name == "NontrivialStabilizer"


def test_marking_incompatible():
    dom = rose(["a", "b"], (1, 2))
    rng = rose(["a", "c"], (1, 1)).with_marking({"a": "a", "b": "c"})
    with pytest.raises(GraphError) as info:
        make_morphism(dom, rng, {"a": "a", "b": "a c"})
    assert info.value.name == "MarkingIncompatible"


def test_time_out_of_range():
    with pytest.raises(GraphError) as info:
        fold_at_time(worked_example(), Fraction(3, 2))
    assert info.value.name == "TOutOfRange"


@pytest.mark.parametrize("seed", range(6))
def test_depth_matches_bruteforce(seed):
    _, m = seeded_morphism(seed)
    assert m.fold_depth == fold_depth_bruteforce(m, 10)


@pytest.mark.parametrize("seed", range(6))
def test_endpoints(seed):
    rng, m = seeded_morphism(seed)
    words = random_words(rng, m.domain, 20)
    T0 = fold_at_time(m, 0).tree
    T1 = fold_at_time(m, 1).tree
    for w in words:
        assert base_length(T0, w) == base_length(m.domain, w)
        assert base_length(T1, w) == base_length(m.range, w)


@pytest.mark.parametrize("seed", range(4))
def test_profile_is_monotone(seed):
    rng, m = seeded_morphism(seed)
    words = random_words(rng, m.domain, 20)
    times = [Fraction(k, 8) for k in range(9)]
    for row in length_profile(m, words, times):
        assert all(a >= b for a, b in zip(row, row[1:]))


@pytest.mark.parametrize("seed", range(4))
def test_semigroup(seed):
    rng, m = seeded_morphism(seed)
    words = random_words(rng, m.domain, 15)
    s, t = Fraction(1, 3), Fraction(2, 3)
    Rs, Rt = fold_at_time(m, s), fold_at_time(m, t)
    # the remaining fold depth shrinks linearly
    assert Rs.phi_t1.fold_depth == m.fold_depth * (1 - s)
    Rst = fold_budget(Rs.phi_t1, m.fold_depth * (t - s))
    for w in words:
        assert base_length(Rst.tree, w) == base_length(Rt.tree, w)


@pytest.mark.parametrize("seed", range(4))
def test_composites_recover_images(seed):
    _, m = seeded_morphism(seed)
    for t in (Fraction(1, 4), HALF, 1):
        R = fold_at_time(m, t)
        assert all(R.composite_images()[e] == list(m.images[e]) for e in m.images)


@pytest.mark.parametrize("k", [Fraction(2), Fraction(1, 3)])
def test_scaling(k):
    rng, m = seeded_morphism(3)
    words = random_words(rng, m.domain, 15)
    mk = m.scaled(k)
    assert mk.fold_depth == k * m.fold_depth
    for t in (Fraction(1, 4), Fraction(3, 4)):
        a, b = fold_at_time(m, t).tree, fold_at_time(mk, t).tree
        for w in words:
            assert base_length(b, w) == k * base_length(a, w)


def test_fold_path_collects_times():
    path = fold_path(worked_example(), [0, HALF, 1])
    assert sorted(path.times) == [0, HALF, 1]
    assert path.times[Fraction(1)].tree.volume == 2
