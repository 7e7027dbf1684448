"""Length vectors, simplex coordinates, and epsilon-approximations between trees.

An approximation lives on finite point sets of two trees: the points are
``treegeom.Point`` values and distances are exact.  Verification checks
surjectivity, strict distance distortion below epsilon, equivariance
under a finite set of group elements, and optionally the density
property of full approximations on sampled segments.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from gtd.core import GraphError, GraphOfGroups, Word, as_q, fmt_q, reduce_letters, to_letters, translate
from gtd.treegeom import Point, Tree, build_ball


def element_letters(g: GraphOfGroups, w: Word | str):
    """Letters of ``w``: through the marking when its generators are base-group names."""
    w = Word.parse(w)
    mk = g.marking_map
    if mk is not None and all(name in mk for name, _ in w.letters):
        return translate(g, w)
    return to_letters(g, w)


# ---------------------------------------------------------------- length vectors


@dataclass(frozen=True)
class LengthVector:
    classes: tuple[str, ...]
    values: tuple[Fraction, ...]

    def scaled(self, k) -> "LengthVector":
        k = as_q(k)
        return LengthVector(self.classes, tuple(v * k for v in self.values))

    def report(self) -> dict:
        return {"classes": list(self.classes), "values": [fmt_q(v) for v in self.values]}


def length_vector(g: GraphOfGroups, classes: Sequence[Word | str]) -> LengthVector:
    vals = tuple(reduce_letters(g, element_letters(g, w)).translation_length for w in classes)
    return LengthVector(tuple(str(Word.parse(w)) for w in classes), vals)


# ---------------------------------------------------------------- simplex coordinates


@dataclass(frozen=True)
class SimplexCoords:
    edge_order: tuple[str, ...]
    barycentric: tuple[Fraction, ...]
    volume: Fraction

    def report(self) -> dict:
        return {
            "edge_order": list(self.edge_order),
            "barycentric": [fmt_q(b) for b in self.barycentric],
            "volume": fmt_q(self.volume),
        }


def simplex_coords(g: GraphOfGroups) -> SimplexCoords:
    vol = g.volume
    if vol <= 0:
        raise GraphError("NonpositiveLength", "volume must be positive")
    order = tuple(e.id for e in g.edges)
    return SimplexCoords(order, tuple(e.length / vol for e in g.edges), vol)


def simplex_tree(c: SimplexCoords, template: GraphOfGroups) -> GraphOfGroups:
    if sorted(c.edge_order) != sorted(e.id for e in template.edges) or len(set(c.edge_order)) != len(c.edge_order):
        raise GraphError("EdgeOrderMismatch", "coordinates do not match the template's edges")
    if sum(c.barycentric) != 1 or any(b <= 0 for b in c.barycentric) or c.volume <= 0:
        raise GraphError("BadCoordinates", "barycentric entries must be positive and sum to 1")
    return template.with_lengths({e: b * c.volume for e, b in zip(c.edge_order, c.barycentric)})


def simplex_segment(a: SimplexCoords, b: SimplexCoords, s) -> SimplexCoords:
    """Straight-line point ``(1-s) a + s b`` in simplex-times-volume coordinates."""
    s = as_q(s)
    if a.edge_order != b.edge_order:
        raise GraphError("EdgeOrderMismatch", "coordinates use different edge orders")
    bary = tuple((1 - s) * x + s * y for x, y in zip(a.barycentric, b.barycentric))
    return SimplexCoords(a.edge_order, bary, (1 - s) * a.volume + s * b.volume)


# ---------------------------------------------------------------- approximations


@dataclass
class Approximation:
    left: Tree
    right: Tree
    left_points: list[Point]
    right_points: list[Point]
    pairs: list[tuple[Point, Point]]
    epsilon: Fraction
    P: tuple[str, ...] = ()
    full: bool = False
    samples: int = 200
    seed: int = 0


@dataclass
class ApproxReport:
    ok: bool
    violation: str | None = None
    detail: dict = field(default_factory=dict)
    max_distortion: Fraction = Fraction(0)

    def report(self) -> dict:
        out = {"ok": self.ok, "max_distortion": fmt_q(self.max_distortion)}
        if self.violation:
            out["violation"] = self.violation
            out.update(self.detail)
        return out


def _elements(tree: Tree, words: Iterable[str]):
    return [tree.element(element_letters(tree.g, w)) for w in words]


def max_distortion(a: Approximation) -> tuple[Fraction, tuple | None]:
    worst, where = Fraction(-1), None
    dl, dr = _Metric(a.left), _Metric(a.right)
    for (x, y), (x2, y2) in combinations(a.pairs, 2):
        d = abs(dl(x, x2) - dr(y, y2))
        if d > worst:
            worst, where = d, (x, x2, y, y2)
    return max(worst, Fraction(0)), where


def check_approximation(a: Approximation) -> ApproxReport:
    """Verify ``a`` on its declared point sets; the first failure is reported."""
    lset, rset = set(a.left_points), set(a.right_points)
    rel = set(a.pairs)
    for x, y in a.pairs:
        if x not in lset or y not in rset:
            return ApproxReport(False, "PointOutsideBall", {"pair": [_pt(a.left, x), _pt(a.right, y)]})
    covered_l = {x for x, _ in a.pairs}
    covered_r = {y for _, y in a.pairs}
    if covered_l != lset or covered_r != rset:
        miss = sorted(lset - covered_l, key=str)[:1] or sorted(rset - covered_r, key=str)[:1]
        return ApproxReport(False, "NotSurjective", {"point": str(miss[0]) if miss else ""})
    worst, where = max_distortion(a)
    if worst >= a.epsilon:
        x, x2, y, y2 = where
        return ApproxReport(
            False,
            "DistortionViolation",
            {"x": _pt(a.left, x), "x2": _pt(a.left, x2), "y": _pt(a.right, y), "y2": _pt(a.right, y2),
             "distortion": fmt_q(worst)},
            worst,
        )
    gl, gr = _elements(a.left, a.P), _elements(a.right, a.P)
    for w, el, er in zip(a.P, gl, gr):
        for x, y in a.pairs:
            gx = a.left.act(el, x)
            if gx not in lset:
                continue
            gy = a.right.act(er, y)
            if gy not in rset:
                continue  # translate leaves the declared window
            if (gx, gy) not in rel:
                return ApproxReport(False, "EquivarianceViolation", {"g": w, "x": _pt(a.left, x), "y": _pt(a.right, y)}, worst)
    if a.full:
        bad = density_violation(a)
        if bad is not None:
            return ApproxReport(False, "DensityViolation", bad, worst)
    return ApproxReport(True, max_distortion=worst)


def _pt(tree: Tree, p: Point) -> dict:
    from gtd.treegeom import describe_point

    return describe_point(tree, p)


class _Metric:
    """Memoised distances between declared points of one tree."""

    def __init__(self, tree: Tree):
        self.tree = tree
        self.cache: dict[tuple[Point, Point], Fraction] = {}

    def __call__(self, p: Point, q: Point) -> Fraction:
        key = (p, q) if p <= q else (q, p)
        d = self.cache.get(key)
        if d is None:
            d = self.cache[key] = self.tree.distance(p, q)
        return d

    def on_segment(self, x: Point, p: Point, q: Point) -> bool:
        return self(p, x) + self(x, q) == self(p, q)


def density_violation(a: Approximation) -> dict | None:
    """Every sampled point of ``[y1, y2]`` has a partner of ``[x1, x2]`` within ``2 eps``."""
    rng = random.Random(a.seed)
    ml, mr = _Metric(a.left), _Metric(a.right)
    pairs = list(combinations(a.pairs, 2))
    if len(pairs) > a.samples:
        pairs = rng.sample(pairs, a.samples)
    for (x1, y1), (x2, y2) in pairs:
        for side in (0, 1):
            src, dst = (ml, mr) if side == 0 else (mr, ml)
            s1, s2 = (x1, x2) if side == 0 else (y1, y2)
            t1, t2 = (y1, y2) if side == 0 else (x1, x2)
            related = [(u, v) if side == 0 else (v, u) for u, v in a.pairs]
            image = [v for u, v in related if src.on_segment(u, s1, s2)]
            declared = a.right_points if side == 0 else a.left_points
            for z0 in (z for z in declared if dst.on_segment(z, t1, t2)):
                if not any(dst(z0, z) < 2 * a.epsilon for z in image):
                    return {"segment": [_pt(dst.tree, t1), _pt(dst.tree, t2)], "z0": _pt(dst.tree, z0)}
    return None


def thicken(a: Approximation, delta) -> Approximation:
    """The closed L1 ``delta``-neighbourhood of the relation over the declared points."""
    delta = as_q(delta)
    if delta < 0:
        raise GraphError("BadDelta", "delta must be nonnegative")
    if delta == 0:
        return replace(a, pairs=list(a.pairs))
    dl, dr = _Metric(a.left), _Metric(a.right)
    out = []
    for x in a.left_points:
        near_l = [(x2, dl(x, x2)) for x2, _ in a.pairs]
        near_l = {x2: d for x2, d in near_l if d <= delta}
        if not near_l:
            continue
        wits = [(x2, y2, near_l[x2]) for x2, y2 in a.pairs if x2 in near_l]
        for y in a.right_points:
            if any(d + dr(y, y2) <= delta for _, y2, d in wits):
                out.append((x, y))
    return replace(a, pairs=out, epsilon=a.epsilon + 2 * delta)


# ---------------------------------------------------------------- test relations


def grid_points(tree: Tree, radius, n: int, cap: int | None = None) -> list[Point]:
    """Ball vertices plus the points cutting each ball edge into ``n`` equal parts."""
    ball = build_ball(tree.g, radius, cap, tree)
    pts = [Point(v) for v in ball.vertices]
    for v in ball.vertices[1:]:
        L = tree.step_length(v[-1])
        pts += [Point(v, L * k / n) for k in range(1, n)]
    return pts


def transport(src: Tree, dst: Tree, p: Point) -> Point:
    """Same combinatorial position and edge fraction in a tree with other lengths."""
    if p.back == 0:
        return p
    step = p.path[-1]
    return Point(p.path, p.back * dst.step_length(step) / src.step_length(step))


def identity_approximation(
    left: Tree, right: Tree, radius, n: int, P: Sequence[str] = (), margin=Fraction(1, 1000), full: bool = False
) -> Approximation:
    """Graph of the edge-fraction correspondence between two metrics on one graph.

    Epsilon is the exact maximal distortion plus ``margin``.
    """
    lp = grid_points(left, radius, n)
    pairs = [(x, transport(left, right, x)) for x in lp]
    a = Approximation(left, right, lp, [y for _, y in pairs], pairs, Fraction(1), tuple(P), full)
    worst, _ = max_distortion(a)
    a.epsilon = worst + as_q(margin)
    return a
