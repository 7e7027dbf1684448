import random
from fractions import Fraction

import pytest

from graphs import bs, f2, random_graph
from gtd.core import GraphError
from gtd.moves import random_words
from gtd.section import rose
from gtd.topology import (
    Approximation,
    SimplexCoords,
    check_approximation,
    grid_points,
    identity_approximation,
    length_vector,
    simplex_coords,
    simplex_segment,
    simplex_tree,
    thicken,
)
from gtd.treegeom import Point, Tree, build_ball

MARGIN = Fraction(1, 1000)


def test_f2_length_vector():
    lv = length_vector(f2(), ["x", "y", "x y", "x y^-1"])
    assert lv.values == (Fraction(1, 2), Fraction(1, 2), 1, 1)


def test_doubled_tree_doubles_vector():
    rng = random.Random(2)
    g = random_graph(rng)
    words = random_words(rng, g, 20)
    assert length_vector(g.scaled(2), words) == length_vector(g, words).scaled(2)


def test_elliptic_classes():
    assert length_vector(bs(2, 3), ["a", "a^2"]).values == (0, 0)


def test_simplex_example():
    c = simplex_coords(rose(["x", "y", "z"], (1, 1, 2)))
    assert c.barycentric == (Fraction(1, 4), Fraction(1, 4), Fraction(1, 2))
    assert c.volume == 4


def test_volume_one_is_fixed():
    g = rose(["x", "y"], (Fraction(1, 3), Fraction(2, 3)))
    c = simplex_coords(g)
    assert c.volume == 1
    assert c.barycentric == (Fraction(1, 3), Fraction(2, 3))


@pytest.mark.parametrize("seed", range(5))
def test_simplex_round_trip(seed):
    g = random_graph(random.Random(seed))
    assert simplex_tree(simplex_coords(g), g) == g


def test_bad_coordinates():
    g = f2()
    with pytest.raises(GraphError) as info:
        simplex_tree(SimplexCoords(("x", "y"), (Fraction(1, 2), Fraction(1, 3)), Fraction(1)), g)
    assert info.value.name == "BadCoordinates"
    with pytest.raises(GraphError) as info:
        simplex_tree(SimplexCoords(("x", "z"), (Fraction(1, 2), Fraction(1, 2)), Fraction(1)), g)
    assert info.value.name == "EdgeOrderMismatch"


def test_simplex_segment_midpoint():
    a = simplex_coords(rose(["x", "y"], (1, 3)))
    b = simplex_coords(rose(["x", "y"], (1, 1)))
    m = simplex_segment(a, b, Fraction(1, 2))
    assert m.barycentric == (Fraction(3, 8), Fraction(5, 8))
    assert m.volume == 3


def test_identity_relation_is_ok():
    tree = Tree(f2())
    pts = grid_points(tree, 1, 2)
    a = Approximation(tree, tree, pts, pts, [(p, p) for p in pts], Fraction(1, 10), ("x", "y"), full=True)
    rep = check_approximation(a)
    assert rep.ok and rep.max_distortion == 0


def test_distortion_violation():
    tree = Tree(rose(["x", "y"], (1, 1)))
    ball = build_ball(tree.g, 1, tree=tree)
    far = Point(ball.vertices[1])
    assert tree.distance(Point(), far) == 1
    left = [Point()]
    a = Approximation(tree, tree, left, [Point(), far], [(Point(), Point()), (Point(), far)], Fraction(1, 2))
    rep = check_approximation(a)
    assert not rep.ok
    assert rep.violation == "DistortionViolation"
    assert rep.max_distortion == 1


def test_not_surjective():
    tree = Tree(f2())
    pts = grid_points(tree, Fraction(1, 2), 1)
    a = Approximation(tree, tree, pts, pts, [(p, p) for p in pts[1:]], Fraction(1, 10))
    assert check_approximation(a).violation == "NotSurjective"


def test_equivariance_violation():
    tree = Tree(f2())
    pts = grid_points(tree, 1, 1)
    # swap two translates of the base so that x no longer commutes with the relation
    shuffled = pts[:]
    i, j = 1, 2
    shuffled[i], shuffled[j] = shuffled[j], shuffled[i]
    a = Approximation(tree, tree, pts, pts, list(zip(pts, shuffled)), Fraction(100), ("x", "y"))
    assert check_approximation(a).violation == "EquivarianceViolation"


def test_thicken_by_zero_is_unchanged():
    left, right = Tree(f2()), Tree(f2((Fraction(3, 5), Fraction(2, 5))))
    a = identity_approximation(left, right, 1, 2)
    b = thicken(a, 0)
    assert b.pairs == a.pairs and b.epsilon == a.epsilon


def test_thickened_identity_passes():
    tree = Tree(f2())
    pts = grid_points(tree, 1, 4)
    a = Approximation(tree, tree, pts, pts, [(p, p) for p in pts], MARGIN, ("x", "y"), full=True)
    delta = Fraction(1, 8)
    b = thicken(a, delta)
    assert len(b.pairs) > len(a.pairs)
    b.epsilon = 2 * delta + MARGIN
    assert check_approximation(b).ok


@pytest.mark.parametrize("seed", range(3))
def test_thickened_approximation_passes(seed):
    rng = random.Random(seed)
    g = rng.choice([f2(), bs(2, 3), rose(["x", "y"], (1, 2))])
    h = g.with_lengths({e.id: e.length * Fraction(rng.randint(95, 105), 100) for e in g.edges})
    P = sorted(g.marking_map)
    a = identity_approximation(Tree(g), Tree(h), 1, 2, P=P, full=True)
    assert check_approximation(a).ok
    delta = Fraction(rng.randint(1, 4), 16)
    b = thicken(a, delta)
    b.epsilon = a.epsilon + 2 * delta + MARGIN
    assert check_approximation(b).ok
