import random
from fractions import Fraction

import pytest

from graphs import bs, f2, theta
from gtd.core import GraphError
from gtd.folding import base_length
from gtd.section import (
    basepoint_stability,
    contraction_path,
    elliptic_profile,
    induced_morphism,
    perturb,
    random_target,
    random_words,
    rose,
    section_map,
)
from gtd.treegeom import Point

HALF = Fraction(1, 2)


def lengths(g):
    return {e.id: e.length for e in g.edges}


def test_identity_section():
    g = f2()
    sm = section_map(g, g)
    assert sm.basepoint == Point()
    assert lengths(sm.remetrized) == lengths(g)
    assert induced_morphism(sm).fold_depth == 0


def test_rose_pullback():
    sm = section_map(rose(["x", "y"]), rose(["x", "y"], (2, 3)))
    assert lengths(sm.remetrized) == {"x": 2, "y": 3}
    assert set(sm.vertex_images.values()) == {sm.basepoint}


def test_theta_base_rejected():
    with pytest.raises(GraphError) as info:
        section_map(theta(), rose(["x", "y"]))
    assert info.value.name == "BaseNotReduced"


def test_nielsen_target():
    # target rose with x -> x, y -> xy: T_Y pulls back the loop lengths 1 and 2
    Y = rose(["x", "y"]).with_marking({"x": "x", "y": "x y"})
    cp = contraction_path(rose(["x", "y"]), Y, [0, Fraction(1, 4), HALF, 1])
    assert lengths(cp.section.remetrized) == {"x": 1, "y": 2}
    words = random_words(random.Random(0), ["x", "y"], 30)
    for _, T in cp.steps:
        assert elliptic_profile(T, words) == []
    # y_* is the midpoint of x, so both images begin with the same half of x
    assert cp.morphism.fold_depth == HALF


def test_endpoints_of_path():
    base, Y = rose(["x", "y"]), rose(["x", "y"], (2, 3))
    cp = contraction_path(base, Y, [0, 1])
    words = random_words(random.Random(1), ["x", "y"], 30)
    (t0, T0), (t1, T1) = cp.steps
    assert (t0, t1) == (0, 1)
    for w in words:
        assert base_length(T0, w) == base_length(cp.section.remetrized, w)
        assert base_length(T1, w) == base_length(Y, w)


def test_isometric_case_is_constant():
    base = rose(["x", "y"], (2, 3))
    cp = contraction_path(rose(["x", "y"]), base, [0, HALF, 1])
    assert cp.morphism.fold_depth == 0
    assert all(lengths(T) == {"x": 2, "y": 3} for _, T in cp.steps)


@pytest.mark.parametrize("seed", range(4))
def test_random_targets(seed):
    rng = random.Random(seed)
    Y = random_target(rng)
    base = rose(["x", "y"])
    cp = contraction_path(base, Y, [0, HALF, 1])
    TY = cp.section.remetrized
    words = random_words(rng, ["x", "y"], 25)
    for w in words:
        # the induced morphism is 1-Lipschitz, so lengths only drop along the path
        a, b, c = (base_length(T, w) for _, T in cp.steps)
        assert base_length(TY, w) == a >= b >= c == base_length(Y, w)


@pytest.mark.parametrize("k", [Fraction(2), Fraction(1, 3)])
def test_section_scales(k):
    Y = random_target(random.Random(5))
    base = rose(["x", "y"])
    a = section_map(base, Y).remetrized
    b = section_map(base, Y.scaled(k)).remetrized
    assert {e: k * L for e, L in lengths(a).items()} == lengths(b)


def test_perturb_keeps_lengths_positive():
    g = rose(["x", "y"], (Fraction(1, 10), 1))
    h = perturb(g, Fraction(1, 5), seed=3)
    assert all(e.length > 0 for e in h.edges)
    assert all(abs(a.length - b.length) == Fraction(1, 5) for a, b in zip(g.edges, h.edges))


def test_zero_perturbation():
    rep = basepoint_stability(f2(), 0)
    assert rep.displacement == 0 and rep.distortion == 0 and rep.ok


def test_f2_perturbation():
    rep = basepoint_stability(f2(), Fraction(1, 100))
    assert rep.displacement <= Fraction(4, 25)
    assert rep.distortion <= Fraction(4, 100)
    assert rep.ok


def test_bs23_perturbation():
    rep = basepoint_stability(bs(2, 3), Fraction(1, 100))
    assert rep.ok


@pytest.mark.parametrize("seed", range(4))
def test_random_stability(seed):
    rng = random.Random(seed)
    Y = random_target(rng, names=("x", "y", "z") if seed % 2 else ("x", "y"))
    for p in (Fraction(1, 100), Fraction(1, 10)):
        assert basepoint_stability(Y, p, seed=seed).ok
