"""Transverse section maps from a fixed reduced base tree and sampled contraction paths.

Given a reduced base graph ``T`` (carrying its canonical marking) and a target
``Y`` marked by the same generator names, the section sends the base vertex of
``Y``'s minimal displacement locus ``y_*`` to a fundamental domain of ``T``:
cyclic vertices go to the projection of ``y_*`` onto the fixed set of their
generator, trivial vertices go to ``y_*`` itself, and edges go to geodesics.
Pulling back lengths gives the remetrized base ``T_Y``.  When both trees are
free, the induced map ``T_Y -> Y`` is a morphism and folding it gives the
contraction path from ``T_Y`` (time 0) to ``Y`` (time 1).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from gtd.core import (
    Edge,
    GraphError,
    GraphOfGroups,
    Vertex,
    Word,
    as_q,
    canonical_generators,
    canonical_marking,
    default_spanning_tree,
    fmt_q,
    nf_letters,
    normal_form,
    random_word,
    reduce_letters,
    translate,
)
from gtd.folding import (
    FoldResult,
    Morphism,
    Subdivision,
    _free_reduce,
    _require_free,
    _steps,
    fold_at_time,
    letters_to_word_free,
    make_morphism,
)
from gtd.moves import is_reduced
from gtd.topology import SimplexCoords, simplex_coords, simplex_segment, transport
from gtd.treegeom import Point, Tree, basepoint, basepoint_auto, build_ball, describe_point


@dataclass
class SectionMap:
    base: GraphOfGroups
    target: GraphOfGroups
    basepoint: Point
    vertex_images: dict[str, Point]
    edge_images: dict[str, tuple[Point, Point]]
    remetrized: GraphOfGroups
    tree: Tree = field(repr=False)

    def report(self) -> dict:
        return {
            "basepoint": describe_point(self.tree, self.basepoint),
            "vertex_images": {v: describe_point(self.tree, p) for v, p in sorted(self.vertex_images.items())},
            "edge_lengths": {e.id: fmt_q(e.length) for e in self.remetrized.edges},
        }


def _check_canonical(base: GraphOfGroups) -> dict[str, list]:
    canon = canonical_generators(base)
    mk = base.marking_map
    if mk is None:
        return canon
    if set(mk) != set(canon):
        raise GraphError("MarkingMismatch", "the base must carry its canonical marking")
    for k, w in mk.items():
        a = normal_form(base, translate(base, Word(((k, 1),))), base.base)
        b = normal_form(base, canon[k], base.base)
        if nf_letters(base, a) != nf_letters(base, b):
            raise GraphError("MarkingMismatch", f"base marking of {k!r} is not canonical", generator=k)
    return canon


def section_map(base: GraphOfGroups, target: GraphOfGroups, radius=None, cap: int | None = None) -> SectionMap:
    ok, witness = is_reduced(base)
    if not ok:
        raise GraphError("BaseNotReduced", f"edge {witness!r} of the base is collapsible", edge=witness)
    canon = _check_canonical(base)
    mk = target.marking_map
    if mk is None or set(mk) != set(canon):
        raise GraphError("MarkingMismatch", "target must be marked by the base generators")
    tree = Tree(target)
    elem = {k: tree.element(translate(target, Word(((k, 1),)))) for k in sorted(canon)}
    S = [list(elem[k]) for k in sorted(canon)]
    if radius is None:
        bp = basepoint_auto(target, S, cap, tree)
    else:
        bp = basepoint(build_ball(target, radius, cap, tree), S)
    y = bp.point

    images: dict[str, Point] = {}
    for v in base.vertices:
        if v.cyclic:
            # the midpoint of [y, a y] is the projection of y onto Fix(a)
            images[v.id] = tree.midpoint(y, tree.act(elem[v.generator], y))
        else:
            images[v.id] = y
    edges: dict[str, tuple[Point, Point]] = {}
    lengths: dict[str, Fraction] = {}
    for e in base.edges:
        p = images[base.start(e.id, 1)]
        q = images[base.end(e.id, 1)]
        if e.id not in base.spanning_tree:
            q = tree.act(elem[e.id], q)
        L = tree.distance(p, q)
        if L == 0:
            raise GraphError("DegenerateEdge", f"edge {e.id!r} maps to a point", edge=e.id)
        edges[e.id] = (p, q)
        lengths[e.id] = L
    remetrized = base.with_lengths(lengths).with_marking(canonical_marking(base))
    return SectionMap(base, target, y, images, edges, remetrized, tree)


# ---------------------------------------------------------------- free case


def rebase_at(target: GraphOfGroups, y: Point) -> tuple[GraphOfGroups, str]:
    """``target`` subdivided at ``y`` and based there, marking conjugated by the path to it."""
    steps = [(e, s) for _, e, s in y.path]
    offsets: dict[str, list[Fraction]] = {}
    if y.back:
        e, s = steps[-1]
        L = target.edge(e).length
        offsets[e] = [L - y.back if s > 0 else y.back]
    sub = Subdivision(target, offsets)
    g = sub.graph()
    if not y.back:
        path = sub.expand(steps)
        vertex = target.end(*steps[-1]) if steps else target.base
    else:
        e, s = steps[-1]
        names, pts = sub.piece_names[e], sub.point_names[e]
        i = sub.cuts[e].index(offsets[e][0])
        last = [(n, 1) for n in names[:i]] if s > 0 else [(n, -1) for n in reversed(names[i:])]
        path = sub.expand(steps[:-1]) + last
        vertex = pts[i]
    back = [(e, -s) for e, s in reversed(path)]
    mk = {}
    for k, w in g.marking_map.items():
        loop = back + _steps(g, w) + path
        mk[k] = letters_to_word_free(_free_reduce(loop))
    out = GraphOfGroups(g.vertices, g.edges, g.spanning_tree, mk, vertex)
    return out, vertex


def induced_morphism(sm: SectionMap) -> Morphism:
    """The map ``T_Y -> Y`` (range subdivided at ``y_*``), validated as a morphism."""
    _require_free(sm.base, sm.target)
    Y, _ = rebase_at(sm.target, sm.basepoint)
    canon = canonical_generators(sm.remetrized)
    images = {}
    for e in sm.remetrized.edges:
        if e.id in sm.remetrized.spanning_tree:
            raise GraphError("NontrivialStabilizer", "free base graphs must be roses")
        images[e.id] = [f"{a}^{s}" for a, s in _free_reduce(_steps(Y, Y.marking_map[e.id]))]
        if canon[e.id] != [("e", e.id, 1)]:
            raise GraphError("MarkingMismatch", "free base graphs must be roses")
    return make_morphism(sm.remetrized, Y, images)


@dataclass
class ContractionPath:
    section: SectionMap
    morphism: Morphism
    steps: list[tuple[Fraction, GraphOfGroups]]
    terminal: SimplexCoords
    simplex_samples: list[SimplexCoords] = field(default_factory=list)

    def report(self) -> dict:
        return {
            "fold_depth": fmt_q(self.morphism.fold_depth),
            "steps": [{"t": fmt_q(t), "lengths": {e.id: fmt_q(e.length) for e in g.edges}} for t, g in self.steps],
            "terminal": self.terminal.report(),
            "simplex_samples": [c.report() for c in self.simplex_samples],
        }


def contraction_path(
    base: GraphOfGroups, target: GraphOfGroups, times: Sequence, radius=None, simplex_steps: int = 0
) -> ContractionPath:
    """Steps ``T_t`` of the fold path from ``T_Y`` (t = 0) to the target (t = 1)."""
    _require_free(base, target)
    sm = section_map(base, target, radius)
    m = induced_morphism(sm)
    steps = []
    for t in sorted({as_q(t) for t in times}):
        res: FoldResult = fold_at_time(m, t)
        steps.append((t, res.tree))
    term = simplex_coords(sm.remetrized)
    samples = []
    if simplex_steps:
        goal = simplex_coords(base)
        if goal.edge_order == term.edge_order:
            samples = [simplex_segment(term, goal, Fraction(k, simplex_steps)) for k in range(simplex_steps + 1)]
    return ContractionPath(sm, m, steps, term, samples)


def elliptic_profile(g: GraphOfGroups, words: Sequence) -> list[str]:
    """Sampled words acting elliptically."""
    return [str(w) for w in words if reduce_letters(g, translate(g, w)).translation_length == 0]


# ---------------------------------------------------------------- stability


@dataclass
class StabilityReport:
    displacement: Fraction
    distortion: Fraction
    points: int

    @property
    def ok(self) -> bool:
        return self.displacement <= 4 * self.distortion

    def report(self) -> dict:
        return {
            "displacement": fmt_q(self.displacement),
            "distortion": fmt_q(self.distortion),
            "bound": fmt_q(4 * self.distortion),
            "ok": self.ok,
        }


def perturb(g: GraphOfGroups, p, seed: int = 0) -> GraphOfGroups:
    """Each edge length moved by ``+p`` or ``-p`` (seeded), keeping lengths positive."""
    p = as_q(p)
    rng = random.Random(seed)
    out = {}
    for e in g.edges:
        s = rng.choice((1, -1))
        if e.length + s * p <= 0:
            s = 1
        out[e.id] = e.length + s * p
    return g.with_lengths(out)


def _generators(g: GraphOfGroups, tree: Tree):
    mk = g.marking_map or canonical_generators(g)
    if g.marking_map is not None:
        return [tree.element(translate(g, Word(((k, 1),)))) for k in sorted(mk)]
    return [tree.element(v) for _, v in sorted(mk.items())]


def basepoint_stability(target: GraphOfGroups, perturbation, seed: int = 0) -> StabilityReport:
    """Compare ``y_*`` with the basepoint of a perturbed copy through the edge-fraction map.

    The distortion is that of the edge-fraction relation on the subtree
    spanned by the base vertex, the two basepoints and their generator
    translates.
    """
    other = perturb(target, perturbation, seed)
    t1, t2 = Tree(target), Tree(other)
    g1, g2 = _generators(target, t1), _generators(other, t2)
    b1 = basepoint_auto(target, [list(e) for e in g1], tree=t1)
    b2 = basepoint_auto(other, [list(e) for e in g2], tree=t2)
    y1 = b1.point
    y2 = transport(t2, t1, b2.point)
    disp = t2.distance(transport(t1, t2, y1), b2.point)
    pts = {y1, y2}
    for e in g1:
        pts |= {t1.act(e, y1), t1.act(e, y2)}
    for p in list(pts):
        pts |= {Point(p.path[:i]) for i in range(len(p.path) + 1)}
    pts = sorted(pts)
    worst = Fraction(0)
    image = [transport(t1, t2, p) for p in pts]
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            worst = max(worst, abs(t1.distance(pts[i], pts[j]) - t2.distance(image[i], image[j])))
    return StabilityReport(disp, worst, len(pts))


# ---------------------------------------------------------------- random targets


def rose(names: Sequence[str], lengths: Sequence = ()) -> GraphOfGroups:
    lengths = list(lengths) or [1] * len(names)
    edges = tuple(Edge(x, "v", "v", 1, 1, as_q(L)) for x, L in zip(names, lengths))
    g = GraphOfGroups((Vertex("v", "1"),), edges, frozenset(), None, "v")
    return g.with_marking(canonical_marking(g))


def _shape(rng: random.Random, n: int) -> GraphOfGroups:
    """A random free graph of rank ``n`` with small rational lengths."""
    def q():
        return Fraction(rng.randint(1, 6), rng.choice((1, 2, 3)))

    kind = rng.choice(("rose", "theta", "barbell")) if n == 2 else rng.choice(("rose", "theta"))
    if kind == "rose":
        vs = (Vertex("a", "1"),)
        es = [Edge(f"e{i + 1}", "a", "a", 1, 1, q()) for i in range(n)]
    elif kind == "theta":
        vs = (Vertex("a", "1"), Vertex("b", "1"))
        es = [Edge(f"e{i + 1}", "a", "b", 1, 1, q()) for i in range(n + 1)]
    else:
        vs = (Vertex("a", "1"), Vertex("b", "1"))
        es = [Edge("e1", "a", "a", 1, 1, q()), Edge("e2", "a", "b", 1, 1, q()), Edge("e3", "b", "b", 1, 1, q())]
    return GraphOfGroups(vs, tuple(es), default_spanning_tree(vs, es), None, "a")


def random_target(rng: random.Random, names: Sequence[str] = ("x", "y"), nielsen: int = 3) -> GraphOfGroups:
    """A random marked free graph whose marking is a Nielsen-moved canonical basis."""
    g = _shape(rng, len(names))
    canon = canonical_marking(g)
    mk = {x: canon[k] for x, k in zip(names, sorted(canon))}
    for _ in range(nielsen):
        a, b = rng.sample(list(names), 2)
        w = mk[b] if rng.random() < 0.5 else mk[b].inverse()
        mk[a] = mk[a] * w if rng.random() < 0.5 else w * mk[a]
    return g.with_marking(mk)


def random_words(rng: random.Random, names: Sequence[str], count: int, max_len: int = 6) -> list[Word]:
    return [random_word(rng, list(names), rng.randint(1, max_len)) for _ in range(count)]
