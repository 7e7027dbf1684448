"""Exact geometry in the Bass-Serre tree of a graph of groups.

Tree vertices are coset normal forms: tuples of steps ``(r, edge, sign)``
read from the base vertex.  A point of the tree is a vertex path together
with ``back``, the distance from that vertex back toward its parent, so
``back == 0`` is the vertex itself and ``0 < back < length`` sits inside
the edge above it.  Distances and the group action are computed in the
full infinite tree; finite balls are only needed to enumerate candidates.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from gtd.core import (
    GraphError,
    GraphOfGroups,
    Letter,
    Step,
    Word,
    _fix_vertex_letters,
    fmt_q,
    invert_letters,
    iter_reduced_words,
    base_elements,
    normal_form,
    reduce_letters,
    to_letters,
)

DEFAULT_CAP = 100_000


def default_cap() -> int:
    return int(os.environ.get("GTD_CAP", DEFAULT_CAP))


Path = tuple[Step, ...]


@dataclass(frozen=True, order=True)
class Point:
    path: Path = ()
    back: Fraction = Fraction(0)

    @property
    def is_vertex(self) -> bool:
        return self.back == 0


class Tree:
    """The Bass-Serre tree of ``g`` with exact distances and action."""

    def __init__(self, g: GraphOfGroups):
        self.g = g
        self._depth = lru_cache(maxsize=None)(self._depth_uncached)
        self._act = lru_cache(maxsize=200_000)(self._act_uncached)

    # structure
    def step_length(self, step: Step) -> Fraction:
        return self.g.edge(step[1]).length

    def _depth_uncached(self, path: Path) -> Fraction:
        if not path:
            return Fraction(0)
        return self._depth(path[:-1]) + self.step_length(path[-1])

    def depth(self, path: Path) -> Fraction:
        return self._depth(path)

    def height(self, p: Point) -> Fraction:
        return self._depth(p.path) - p.back

    def vertex_type(self, path: Path) -> str:
        return self.g.end(path[-1][1], path[-1][2]) if path else self.g.base

    def letters(self, path: Path) -> list[Letter]:
        return _fix_vertex_letters(self.g, self.g.base, path, 0)

    def children(self, path: Path) -> list[Path]:
        u = self.vertex_type(path)
        back = (path[-1][1], -path[-1][2]) if path else None
        out = []
        for eid, s in self.g.half_edges(u):
            for r in range(abs(self.g.leaving_index(eid, s))):
                if r == 0 and (eid, s) == back:
                    continue
                out.append(path + ((r, eid, s),))
        return out

    def degree(self, path: Path) -> int:
        u = self.vertex_type(path)
        return sum(abs(self.g.leaving_index(e, s)) for e, s in self.g.half_edges(u))

    def point(self, path: Path, back=0) -> Point:
        back = Fraction(back)
        if path and not (0 <= back < self.step_length(path[-1])):
            raise GraphError("PointOutsideBall", "offset outside the edge")
        return Point(tuple(path), back)

    def point_from_parent(self, child: Path, s: Fraction) -> Point:
        """Point at distance ``s`` from the parent of ``child`` along their edge."""
        L = self.step_length(child[-1])
        if s >= L:
            return Point(child)
        if s <= 0:
            return Point(child[:-1])
        return Point(child, L - s)

    # metric
    def distance(self, p: Point, q: Point) -> Fraction:
        P, Q = p.path, q.path
        hp, hq = self.height(p), self.height(q)
        if P == Q:
            return abs(hp - hq)
        n = 0
        for a, b in zip(P, Q):
            if a != b:
                break
            n += 1
        if n == len(Q):
            meet = hq
        elif n == len(P):
            meet = hp
        else:
            meet = self._depth(P[:n])
        return hp + hq - 2 * meet

    def ancestor(self, p: Point, h: Fraction) -> Point:
        """Point at height ``h`` on the segment from ``p`` up to the base."""
        if h >= self.height(p):
            return p
        if h <= 0:
            return Point()
        path = p.path
        acc = Fraction(0)
        for i, step in enumerate(path):
            nxt = acc + self.step_length(step)
            if nxt >= h:
                return Point(path[: i + 1], nxt - h)
            acc = nxt
        return p

    def meet_height(self, p: Point, q: Point) -> Fraction:
        return (self.height(p) + self.height(q) - self.distance(p, q)) / 2

    def along(self, p: Point, q: Point, s) -> Point:
        """Point at distance ``s`` from ``p`` on the geodesic ``[p, q]``."""
        s = Fraction(s)
        d = self.distance(p, q)
        if s <= 0:
            return p
        if s >= d:
            return q
        m = self.meet_height(p, q)
        up = self.height(p) - m
        if s <= up:
            return self.ancestor(p, self.height(p) - s)
        return self.ancestor(q, m + (s - up))

    def midpoint(self, p: Point, q: Point) -> Point:
        return self.along(p, q, self.distance(p, q) / 2)

    def on_segment(self, x: Point, p: Point, q: Point) -> bool:
        return self.distance(p, x) + self.distance(x, q) == self.distance(p, q)

    def project_to_segment(self, z: Point, p: Point, q: Point) -> Point:
        s = (self.distance(p, z) + self.distance(p, q) - self.distance(q, z)) / 2
        return self.along(p, q, s)

    # action
    def element(self, w: Word | str | Sequence[Letter]) -> tuple[Letter, ...]:
        """Britton-reduced letters of a loop at the base, hashable."""
        letters = to_letters(self.g, w) if isinstance(w, (Word, str)) else list(w)
        nf = normal_form(self.g, letters, self.g.base)
        if nf.end != self.g.base:
            raise GraphError("NotALoop", "element is not a loop at the base vertex")
        return tuple(_fix_vertex_letters(self.g, nf.start, nf.steps, nf.tail))

    def _act_uncached(self, elem: tuple[Letter, ...], path: Path) -> Path:
        return normal_form(self.g, list(elem) + self.letters(path), self.g.base).steps

    def act_vertex(self, elem: tuple[Letter, ...], path: Path) -> Path:
        return self._act(elem, path)

    def act(self, elem: tuple[Letter, ...], p: Point) -> Point:
        gp = self._act(elem, p.path)
        if p.back == 0:
            return Point(gp)
        gq = self._act(elem, p.path[:-1])
        if gq == gp[:-1]:
            return Point(gp, p.back)
        L = self.step_length(p.path[-1])
        return Point(gq, L - p.back)

    def displacement(self, elem: tuple[Letter, ...], p: Point) -> Fraction:
        return self.distance(p, self.act(elem, p))

    def vertex_displacement(self, elem: tuple[Letter, ...], path: Path) -> Fraction:
        return self.distance(Point(path), Point(self._act(elem, path)))

    def point_of_letters(self, letters: Sequence[Letter]) -> Point:
        """Tree vertex reached from the base by a path of letters."""
        nf = normal_form(self.g, list(letters), self.g.base)
        return Point(nf.steps)


def tree_distance(ball: "TreeBall", x: Point, y: Point) -> Fraction:
    """Exact distance between two points of a ball."""
    return ball.tree.distance(ball.check_point(x), ball.check_point(y))


def describe_path(g: GraphOfGroups, path: Path) -> str:
    from gtd.core import letters_to_word

    return str(letters_to_word(g, _fix_vertex_letters(g, g.base, path, 0))) or "1"


def describe_point(tree: Tree, p: Point) -> dict:
    out = {"vertex": describe_path(tree.g, p.path)}
    if p.back:
        out["back"] = fmt_q(p.back)
    return out


# ---------------------------------------------------------------- balls


@dataclass
class TreeBall:
    tree: Tree
    radius: Fraction
    vertices: list[Path]
    parent: dict[Path, Path | None]
    boundary: set[Path]
    achieved: Fraction = Fraction(0)
    index: dict[Path, int] = field(default_factory=dict)

    @property
    def g(self) -> GraphOfGroups:
        return self.tree.g

    def edges(self) -> list[tuple[Path, Path, Fraction]]:
        return [(self.parent[v], v, self.tree.step_length(v[-1])) for v in self.vertices if v]

    def __contains__(self, p: Point) -> bool:
        return p.path in self.index

    def check_point(self, p: Point) -> Point:
        if p.path not in self.index:
            raise GraphError("PointOutsideBall", "point is not in the ball")
        return p

    def points(self) -> list[Point]:
        return [Point(v) for v in self.vertices]


def build_ball(g: GraphOfGroups, radius, cap: int | None = None, tree: Tree | None = None) -> TreeBall:
    """Vertices of the tree within ``radius`` of the base vertex, breadth first."""
    radius = Fraction(radius)
    if radius < 0:
        raise GraphError("BadRadius", "radius must be nonnegative")
    cap = default_cap() if cap is None else cap
    tree = tree or Tree(g)
    root: Path = ()
    order = [root]
    parent: dict[Path, Path | None] = {root: None}
    boundary: set[Path] = set()
    achieved = Fraction(0)
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for c in tree.children(v):
            if tree.depth(c) > radius:
                boundary.add(v)
                continue
            parent[c] = v
            order.append(c)
            achieved = max(achieved, tree.depth(c))
            if len(order) > cap:
                raise GraphError("BallTooLarge", f"ball exceeds {cap} vertices", cap=cap)
            queue.append(c)
    return TreeBall(tree, radius, order, parent, boundary, achieved, {v: i for i, v in enumerate(order)})


def ball_to_dot(ball: TreeBall) -> str:
    lines = ["graph ball {"]
    for i, v in enumerate(ball.vertices):
        lines.append(f'  n{i} [label="{describe_path(ball.g, v)}"];')
    for p, c, L in ball.edges():
        lines.append(f'  n{ball.index[p]} -- n{ball.index[c]} [label="{fmt_q(L)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- characteristic sets


@dataclass
class CharacteristicSet:
    elements: tuple[str, ...]
    min_value: Fraction
    vertices: list[Path]
    segments: list[tuple[Point, Point]]
    truncated: bool

    def contains_vertex(self, path: Path) -> bool:
        return path in set(self.vertices)


def characteristic_set(ball: TreeBall, w: Word | str) -> CharacteristicSet:
    """Points of the ball where ``w`` attains its translation length."""
    tree = ball.tree
    elem = tree.element(w)
    rw = reduce_letters(ball.g, list(elem))
    ell = rw.translation_length
    disp = {v: tree.vertex_displacement(elem, v) for v in ball.vertices}
    locus = [v for v in ball.vertices if disp[v] == ell]
    if not locus:
        raise GraphError("ActionLeavesBall", "no point of the characteristic set lies in the ball")
    inside = set(locus)
    segs = [(Point(p), Point(c)) for p, c, _ in ball.edges() if p in inside and c in inside]
    trunc = any(v in ball.boundary for v in locus)
    return CharacteristicSet((str(w),), ell, locus, segs, trunc)


def distance_to_locus(tree: Tree, x: Point, cs: CharacteristicSet) -> Fraction:
    if x.path in set(cs.vertices) and (x.back == 0 or x.path[:-1] in set(cs.vertices)):
        return Fraction(0)
    return min(tree.distance(x, Point(v)) for v in cs.vertices)


# ---------------------------------------------------------------- min-max locus and basepoint


@dataclass
class MinMaxLocus:
    min_value: Fraction
    pieces: list[tuple[Point, Point]]
    endpoints: tuple[Point, Point]
    active: tuple[str, ...]
    truncated: bool


def _edge_minmax(lines: list[tuple[Fraction, Fraction]], L: Fraction):
    """min over s in [0, L] of max_i (a_i + b_i s), with the argmin interval."""
    cands = {Fraction(0), L}
    for i, (a1, b1) in enumerate(lines):
        for a2, b2 in lines[i + 1 :]:
            if b1 != b2:
                s = (a2 - a1) / (b1 - b2)
                if 0 < s < L:
                    cands.add(s)
    vals = {s: max(a + b * s for a, b in lines) for s in cands}
    mu = min(vals.values())
    arg = [s for s, v in vals.items() if v == mu]
    return mu, min(arg), max(arg)


def minmax_locus(ball: TreeBall, S: Sequence[Word | str]) -> MinMaxLocus:
    if not S:
        raise GraphError("EmptyS", "the set S must be nonempty")
    tree = ball.tree
    elems = [tree.element(w) for w in S]
    disp = {v: [tree.vertex_displacement(e, v) for e in elems] for v in ball.vertices}
    best = None
    pieces: list[tuple[Point, Point, Path, Path]] = []
    if len(ball.vertices) == 1:
        mu = max(disp[()])
        best = mu
        pieces = [(Point(), Point(), (), ())]
    for p, c, L in ball.edges():
        lines = [(dp, (dc - dp) / L) for dp, dc in zip(disp[p], disp[c])]
        mu, s1, s2 = _edge_minmax(lines, L)
        if best is None or mu < best:
            best, pieces = mu, []
        if mu == best:
            pieces.append((tree.point_from_parent(c, s1), tree.point_from_parent(c, s2), p, c))
    touched = False
    for a, b, p, c in pieces:
        for pt in (a, b):
            if pt.is_vertex and pt.path in ball.boundary:
                touched = True
    return _assemble_locus(tree, S, elems, best, pieces, touched)


def _assemble_locus(tree: Tree, S, elems, best: Fraction, pieces, touched: bool) -> MinMaxLocus:
    pts = [pt for a, b, _, _ in pieces for pt in (a, b)]
    far = (pts[0], pts[0])
    dmax = Fraction(-1)
    for i, x in enumerate(pts):
        for y in pts[i:]:
            d = tree.distance(x, y)
            if d > dmax:
                dmax, far = d, (x, y)
    far = tuple(sorted(far))
    for x in pts:
        if not tree.on_segment(x, *far):
            raise GraphError("ShapeViolation", "min-max locus is not a point or a segment")
    mid = tree.midpoint(*far)
    active = tuple(str(w) for w, e in zip(S, elems) if tree.displacement(e, mid) == best)
    return MinMaxLocus(best, [(a, b) for a, b, _, _ in pieces], far, active, touched)


@dataclass
class Basepoint:
    locus: MinMaxLocus
    point: Point

    @property
    def value(self) -> Fraction:
        return self.locus.min_value


def basepoint(ball: TreeBall, S: Sequence[Word | str]) -> Basepoint:
    """Midpoint of the locus minimizing ``max_{g in S} d(x, gx)``."""
    loc = minmax_locus(ball, S)
    if loc.truncated:
        raise GraphError("LocusTruncated", "min-max locus meets the ball boundary; enlarge the radius")
    return Basepoint(loc, ball.tree.midpoint(*loc.endpoints))


def _descend(tree: Tree, elems: Sequence[tuple[Letter, ...]], cap: int) -> Path:
    """Greedy descent of the convex function ``max_g d(x, gx)`` over tree vertices.

    Stops at a vertex none of whose neighbours is strictly better; the min-max
    locus then meets the closed star of that vertex.
    """
    def f(v):
        return max(tree.vertex_displacement(e, v) for e in elems)

    v, fv, seen = (), None, 0
    fv = f(v)
    while True:
        nbrs = tree.children(v) + ([v[:-1]] if v else [])
        best, fb = None, fv
        for n in nbrs:
            seen += 1
            if seen > cap:
                raise GraphError("BallTooLarge", f"descent exceeds {cap} vertices", cap=cap)
            fn = f(n)
            if fn < fb:
                best, fb = n, fn
        if best is None:
            return v
        v, fv = best, fb


TRACE_LIMIT = 1000


def trace_locus(tree: Tree, S: Sequence[Word | str], cap: int | None = None, limit: int = TRACE_LIMIT) -> MinMaxLocus:
    """The min-max locus found without a ball.

    Descent reaches a vertex whose closed star meets the locus, so the least
    value over that star is the global minimum; the locus (a segment) is then
    followed edge by edge from there.  Inspecting more than ``limit`` edges
    is taken as a sign of an unbounded locus and reported as truncation.
    """
    if not S:
        raise GraphError("EmptyS", "the set S must be nonempty")
    cap = default_cap() if cap is None else cap
    elems = [tree.element(w) for w in S]
    centre = _descend(tree, elems, cap)
    if not tree.g.edges:
        best = max(tree.vertex_displacement(e, ()) for e in elems)
        return _assemble_locus(tree, S, elems, best, [(Point(), Point(), (), ())], False)
    disp: dict[Path, list[Fraction]] = {}

    def d(v):
        if v not in disp:
            disp[v] = [tree.vertex_displacement(e, v) for e in elems]
        return disp[v]

    def star(v):
        return [(v, c) for c in tree.children(v)] + ([(v[:-1], v)] if v else [])

    def piece(edge):
        p, c = edge
        L = tree.step_length(c[-1])
        mu, s1, s2 = _edge_minmax([(a, (b - a) / L) for a, b in zip(d(p), d(c))], L)
        return mu, s1, s2, L

    seen = {e: piece(e) for e in star(centre)}
    best = min(v[0] for v in seen.values())
    queue = [e for e, v in seen.items() if v[0] == best]
    kept = []
    while queue:
        edge = queue.pop()
        _, s1, s2, L = seen[edge]
        p, c = edge
        kept.append((tree.point_from_parent(c, s1), tree.point_from_parent(c, s2), p, c))
        ends = ([p] if s1 == 0 else []) + ([c] if s2 == L else [])
        for v in ends:
            for e2 in star(v):
                if e2 in seen:
                    continue
                if len(seen) > min(cap, limit):
                    raise GraphError(
                        "LocusTruncated", f"locus still growing after {len(seen)} edges; it may be unbounded"
                    )
                seen[e2] = piece(e2)
                if seen[e2][0] == best:
                    queue.append(e2)
    return _assemble_locus(tree, S, elems, best, kept, False)


def basepoint_auto(g: GraphOfGroups, S: Sequence[Word | str], cap: int | None = None, tree: Tree | None = None) -> Basepoint:
    """Basepoint of the locus traced by ``trace_locus`` (no radius needed)."""
    tree = tree or Tree(g)
    loc = trace_locus(tree, S, cap)
    return Basepoint(loc, tree.midpoint(*loc.endpoints))


def base_generators(g: GraphOfGroups) -> list[tuple[Letter, ...]]:
    """Generating set: images of the marking generators, or canonical ones."""
    return [tuple(v) for _, v in sorted(base_elements(g).items())]


# ---------------------------------------------------------------- irreducibility


@dataclass
class Irreducibility:
    verdict: str  # "irreducible" | "reducible" | "unknown"
    witness: tuple[str, str] | None = None
    reason: str = ""
    overlap: Fraction | None = None


def _axis_base(tree: Tree, elem: tuple[Letter, ...]):
    rw = reduce_letters(tree.g, list(elem))
    x0 = tree.point_of_letters(list(rw.conjugator))
    return rw, x0


def _power(elem, n):
    if n >= 0:
        return tuple(list(elem) * n)
    return tuple(invert_letters(list(elem)) * (-n))


def _segment_overlap(tree: Tree, a: Point, b: Point, c: Point, d: Point):
    """Overlap data of ``[a,b]`` and ``[c,d]``; ``None`` if it touches an end."""
    dab, dcd = tree.distance(a, b), tree.distance(c, d)
    al = (tree.distance(a, c) + dab - tree.distance(b, c)) / 2
    be = (tree.distance(a, d) + dab - tree.distance(b, d)) / 2
    if al == be:
        u = tree.along(a, b, al)
        du = tree.distance(c, u) + tree.distance(u, d) - dcd
        if du == 0:
            pos = tree.distance(c, u)
            if 0 < al < dab and 0 < pos < dcd:
                return Fraction(0)
            return None
        w = tree.project_to_segment(u, c, d)
        pos = tree.distance(c, w)
        if 0 < al < dab and 0 < pos < dcd:
            return Fraction(-1)  # disjoint
        return None
    lo, hi = sorted((al, be))
    u, w = tree.along(a, b, lo), tree.along(a, b, hi)
    pu, pw = sorted((tree.distance(c, u), tree.distance(c, w)))
    if 0 < lo and hi < dab and 0 < pu and pw < dcd:
        return hi - lo
    return None


def _word_element(tree: Tree, gens: dict[str, list[Letter]], w: Word) -> tuple[Letter, ...]:
    letters: list[Letter] = []
    for name, k in w.letters:
        piece = gens[name] if k > 0 else invert_letters(gens[name])
        letters.extend(piece * abs(k))
    return tree.element(letters)


def certify_pair(tree: Tree, e1: tuple[Letter, ...], e2: tuple[Letter, ...]) -> Fraction | None:
    """Overlap length of the axes of two hyperbolic elements when certified compact.

    Returns ``-1`` for disjoint axes and ``None`` when no certificate was found
    (long overlap, or the axis segments were too short to see both ends).
    """
    r1, r2 = reduce_letters(tree.g, list(e1)), reduce_letters(tree.g, list(e2))
    if not (r1.hyperbolic and r2.hyperbolic):
        return None
    x1 = tree.point_of_letters(list(r1.conjugator))
    x2 = tree.point_of_letters(list(r2.conjugator))
    l1, l2 = r1.translation_length, r2.translation_length
    for n in (2, 4, 8):
        a, b = tree.act(_power(e1, -n), x1), tree.act(_power(e1, n), x1)
        c, d = tree.act(_power(e2, -n), x2), tree.act(_power(e2, n), x2)
        ov = _segment_overlap(tree, a, b, c, d)
        if ov is not None:
            return ov if ov < l1 + l2 else None
    return None


def is_irreducible(g: GraphOfGroups, search_depth: int = 3, max_hyperbolic: int = 24) -> Irreducibility:
    """Search for two hyperbolic elements whose axes meet in a compact set.

    Words are enumerated in the base-group generators (the marking when
    present), so a witness can be carried through elementary moves.
    """
    tree = Tree(g)
    gens = {k: list(v) for k, v in base_elements(g).items()}
    if not gens:
        return Irreducibility("reducible", reason="trivial group")
    hyps = []
    seen = set()
    for w in iter_reduced_words(sorted(gens), search_depth):
        elem = _word_element(tree, gens, w)
        rw = reduce_letters(g, list(elem))
        if not rw.hyperbolic:
            continue
        key = (rw.vertex, rw.cyclic_steps, rw.cyclic_tail)
        if key in seen:
            continue
        seen.add(key)
        hyps.append((str(w), elem))
        if len(hyps) >= max_hyperbolic:
            break
    if not hyps:
        return Irreducibility("reducible", reason="no hyperbolic element found: action has a fixed point")
    for i, (n1, e1) in enumerate(hyps):
        for n2, e2 in hyps[i + 1 :]:
            ov = certify_pair(tree, e1, e2)
            if ov is not None:
                return Irreducibility("irreducible", (n1, n2), overlap=max(ov, Fraction(0)))
    comm_hyp = False
    for i, (_, e1) in enumerate(hyps):
        for _, e2 in hyps[i + 1 :]:
            comm = list(e1) + list(e2) + invert_letters(list(e1)) + invert_letters(list(e2))
            if reduce_letters(g, comm).hyperbolic:
                comm_hyp = True
                break
        if comm_hyp:
            break
    if not comm_hyp:
        ends = _common_line(tree, [e for _, e in hyps])
        return Irreducibility("reducible", reason="invariant line" if ends else "fixed end")
    return Irreducibility("unknown", reason=f"no certificate up to depth {search_depth}")


def _common_line(tree: Tree, elems) -> bool:
    """True when every listed hyperbolic element translates along one axis."""
    e0 = elems[0]
    r0 = reduce_letters(tree.g, list(e0))
    x0 = tree.point_of_letters(list(r0.conjugator))
    a, b = tree.act(_power(e0, -12), x0), tree.act(_power(e0, 12), x0)
    for e in elems[1:]:
        for n in (-1, 1):
            if not tree.on_segment(tree.act(_power(e, n), x0), a, b):
                return False
    return True
