"""Collapse and expansion moves, reducedness, and elliptic-profile comparison."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

from gtd.core import (
    Edge,
    GraphError,
    GraphOfGroups,
    Letter,
    Vertex,
    Word,
    as_q,
    letters_to_word,
    marked,
    normal_form,
    to_letters,
    translate,
)


@dataclass(frozen=True)
class ExpansionSpec:
    """Explicit data for an expansion at vertex ``v``.

    The new vertex ``new_vertex`` gets the same group as ``v``; the new edge
    ``new_edge`` joins them with index ``k`` at ``v`` and ``sign`` (+-1) at the
    new vertex.  ``migrate`` lists half-edges ``(edge id, "from" | "to")``
    at ``v`` that move to the new vertex; their indices are divided by
    ``k * sign``.  ``outward`` orients the new edge from ``v`` to the new
    vertex, otherwise from the new vertex to ``v``.
    """

    migrate: tuple[tuple[str, str], ...]
    length: Fraction
    k: int = 1
    sign: int = 1
    new_vertex: str = ""
    new_edge: str = ""
    outward: bool = True
    generator: str = ""
    base_to_new: bool = False


@dataclass
class MoveRecord:
    kind: str  # "collapse" | "expansion"
    vertex: str | None
    edge: str
    volume_before: Fraction
    volume_after: Fraction
    marking_update: dict[str, Word]
    inverse: ExpansionSpec | str | None = None  # expansion spec at ``keep``, or the edge to collapse
    rewrites: dict[str, str] = field(default_factory=dict)
    inverse_remove: str | None = None  # for expansions: the vertex the inverse collapse removes

    def report(self) -> dict:
        from gtd.core import fmt_q

        out = {
            "kind": self.kind,
            "edge": self.edge,
            "volume_before": fmt_q(self.volume_before),
            "volume_after": fmt_q(self.volume_after),
            "marking_update": {k: str(w) for k, w in sorted(self.marking_update.items())},
            "rewrites": dict(sorted(self.rewrites.items())),
        }
        if self.vertex is not None:
            out["vertex"] = self.vertex
        if isinstance(self.inverse, ExpansionSpec):
            out["inverse"] = spec_to_json(self.inverse)
        elif self.inverse is not None:
            out["inverse"] = {"collapse": self.inverse, "remove": self.inverse_remove}
        return out


def spec_to_json(spec: ExpansionSpec) -> dict:
    from gtd.core import fmt_q

    return {
        "k": spec.k,
        "sign": spec.sign,
        "migrate": [list(h) for h in spec.migrate],
        "length": fmt_q(spec.length),
        "new_vertex": spec.new_vertex,
        "new_edge": spec.new_edge,
        "outward": spec.outward,
        "generator": spec.generator,
        "base_to_new": spec.base_to_new,
    }


def spec_from_json(data: dict) -> ExpansionSpec:
    try:
        return ExpansionSpec(
            migrate=tuple((str(e), str(end)) for e, end in data.get("migrate", [])),
            length=as_q(data["length"]),
            k=int(data.get("k", 1)),
            sign=int(data.get("sign", 1)),
            new_vertex=str(data.get("new_vertex", "")),
            new_edge=str(data.get("new_edge", "")),
            outward=bool(data.get("outward", True)),
            generator=str(data.get("generator", "")),
            base_to_new=bool(data.get("base_to_new", False)),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise GraphError("BadSpec", f"malformed expansion spec: {err}") from None


# ---------------------------------------------------------------- reducedness


def collapsible_side(g: GraphOfGroups, e: Edge) -> str | None:
    """Endpoint id whose group equals the edge group, preferring the ``to`` end."""
    if e.loop:
        return None
    for vid, idx in ((e.terminus, e.index_to), (e.origin, e.index_from)):
        if not g.vertex(vid).cyclic or abs(idx) == 1:
            return vid
    return None


def is_reduced(g: GraphOfGroups) -> tuple[bool, str | None]:
    for e in g.edges:
        if collapsible_side(g, e) is not None:
            return False, e.id
    return True, None


# ---------------------------------------------------------------- helpers


def _spanning_tree(vertices: Sequence[Vertex], edges: Sequence[Edge], prefer: frozenset[str]) -> frozenset[str]:
    parent = {v.id: v.id for v in vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    chosen = set()
    for e in sorted(edges, key=lambda e: (e.id not in prefer, edges.index(e))):
        a, b = find(e.origin), find(e.terminus)
        if a != b:
            parent[a] = b
            chosen.add(e.id)
    return frozenset(chosen)


def _fresh(taken: set[str], stem: str) -> str:
    i = 1
    while f"{stem}{i}" in taken:
        i += 1
    return f"{stem}{i}"


def minimality_violation(g: GraphOfGroups) -> str | None:
    """A vertex of valence one whose edge group is the whole vertex group."""
    for v in g.vertices:
        hs = g.half_edges(v.id)
        if len(hs) != 1:
            continue
        eid, s = hs[0]
        if not v.cyclic or abs(g.leaving_index(eid, s)) == 1:
            return v.id
    return None


# ---------------------------------------------------------------- collapse


def collapse_edge(g: GraphOfGroups, eid: str, remove: str | None = None) -> tuple[GraphOfGroups, MoveRecord]:
    """Collapse the edge ``eid``, merging its endpoints into the surviving one."""
    g = marked(g)
    e = g.edge(eid)
    if e.loop:
        raise GraphError("LoopCollapse", f"edge {eid!r} is a loop", edge=eid)
    if remove is None:
        remove = collapsible_side(g, e)
    if remove is None or remove not in (e.origin, e.terminus):
        raise GraphError("EdgeGroupNotFull", f"edge group of {eid!r} is proper in both endpoint groups", edge=eid)
    keep = e.origin if remove == e.terminus else e.terminus
    near, far = (e.index_to, e.index_from) if remove == e.terminus else (e.index_from, e.index_to)
    cyc = g.vertex(remove).cyclic
    if cyc and abs(near) != 1:
        raise GraphError("EdgeGroupNotFull", f"edge group of {eid!r} is proper at {remove!r}", edge=eid)
    if len(g.vertices) == 2 and len(g.edges) == 1:
        raise GraphError("LastEdgeOfMinimalAction", "collapse would leave a single point", edge=eid)
    c = near * far if cyc else 1

    edges = []
    for f in g.edges:
        if f.id == eid:
            continue
        o, t, p, q = f.origin, f.terminus, f.index_from, f.index_to
        if o == remove:
            o, p = keep, p * c
        if t == remove:
            t, q = keep, q * c
        edges.append(Edge(f.id, o, t, p, q, f.length))
    vertices = [v for v in g.vertices if v.id != remove]
    tree = _spanning_tree(vertices, edges, g.spanning_tree - {eid})
    base = keep if g.base == remove else g.base
    h = GraphOfGroups(tuple(vertices), tuple(edges), tree, None, base)

    gen_u = g.vertex(remove).generator
    gen_v = g.vertex(keep).generator

    def image(letters: Sequence[Letter]) -> list[Letter]:
        out: list[Letter] = []
        for kind, ident, k in letters:
            if kind == "e" and ident == eid:
                continue
            if kind == "v" and ident == remove:
                out.append(("v", keep, k * c))
            else:
                out.append((kind, ident, k))
        return out

    mk = {k: letters_to_word(h, image(to_letters(g, w))) for k, w in g.marking_map.items()}
    h = h.with_marking(mk)
    rewrites = {eid: "1"}
    if cyc:
        rewrites[gen_u] = str(Word(((gen_v, c),)))
    inv = ExpansionSpec(
        migrate=tuple(_migrating(g, remove, eid)),
        length=e.length,
        k=far,
        sign=near,
        new_vertex=remove,
        new_edge=eid,
        outward=(remove == e.terminus),
        generator=gen_u if cyc else "",
        base_to_new=(g.base == remove),
    )
    rec = MoveRecord("collapse", remove, eid, g.volume, h.volume, mk, inv, rewrites)
    return h, rec


def _migrating(g: GraphOfGroups, vid: str, skip: str) -> list[tuple[str, str]]:
    out = []
    for f in g.edges:
        if f.id == skip:
            continue
        if f.origin == vid:
            out.append((f.id, "from"))
        if f.terminus == vid:
            out.append((f.id, "to"))
    return out


# ---------------------------------------------------------------- expansion


def expand_vertex(g: GraphOfGroups, vid: str, spec: ExpansionSpec) -> tuple[GraphOfGroups, MoveRecord]:
    """Blow up ``vid`` into an edge; the inverse of ``collapse_edge``."""
    g = marked(g)
    v = g.vertex(vid)
    length = as_q(spec.length)
    if length <= 0:
        raise GraphError("NonpositiveLength", "new edge must have positive length")
    k, sign = spec.k, spec.sign
    if not v.cyclic:
        k, sign = 1, 1
    if k == 0:
        raise GraphError("ZeroIndex", "subgroup index k must be nonzero")
    if sign not in (1, -1):
        raise GraphError("BadSpec", "sign at the new vertex must be +1 or -1")
    c = k * sign
    wid = spec.new_vertex or _fresh({u.id for u in g.vertices}, f"{vid}_")
    fid = spec.new_edge or _fresh({e.id for e in g.edges} | {u.generator for u in g.vertices}, "f")
    if wid in {u.id for u in g.vertices}:
        raise GraphError("DuplicateId", f"vertex {wid!r} exists", element=wid)
    if g.has_edge(fid) or fid in g._gens:
        raise GraphError("DuplicateId", f"edge {fid!r} exists", element=fid)

    moving = set()
    for eid, end in spec.migrate:
        e = g.edge(eid)
        if end not in ("from", "to") or (e.origin if end == "from" else e.terminus) != vid:
            raise GraphError("BadSpec", f"half-edge ({eid}, {end}) does not end at {vid!r}", edge=eid)
        moving.add((eid, end))
    edges = []
    for e in g.edges:
        o, t, p, q = e.origin, e.terminus, e.index_from, e.index_to
        if (e.id, "from") in moving:
            if p % c:
                raise GraphError("DivisibilityFailure", f"{k} does not divide index {p} of {e.id!r}", edge=e.id)
            o, p = wid, p // c
        if (e.id, "to") in moving:
            if q % c:
                raise GraphError("DivisibilityFailure", f"{k} does not divide index {q} of {e.id!r}", edge=e.id)
            t, q = wid, q // c
        edges.append(Edge(e.id, o, t, p, q, e.length))
    if spec.outward:
        edges.append(Edge(fid, vid, wid, k, sign, length))
    else:
        edges.append(Edge(fid, wid, vid, sign, k, length))
    gen = spec.generator or (f"a_{wid}" if v.cyclic else "")
    vertices = list(g.vertices) + [Vertex(wid, v.group, gen)]
    if spec.base_to_new and g.base != vid:
        raise GraphError("BadSpec", "base can only move when expanding the base vertex")
    new_base = wid if spec.base_to_new else g.base
    h = GraphOfGroups(tuple(vertices), tuple(edges), g.spanning_tree | {fid}, None, new_base)
    bad = minimality_violation(h)
    if bad is not None:
        raise GraphError("NonMinimal", f"expansion leaves {bad!r} with a single full edge", vertex=bad)

    def conn(src: str, dst: str) -> list[Letter]:
        if src == dst:
            return []
        s = 1 if h.start(fid, 1) == src else -1
        return [("e", fid, s)]

    def image(letters: Sequence[Letter]) -> list[Letter]:
        out: list[Letter] = []
        cur_old = g.base
        cur_new = g.base
        for kind, ident, kk in letters:
            if kind == "v":
                if ident == vid:
                    out += conn(cur_new, vid)
                    cur_new = vid
                out.append((kind, ident, kk))
                continue
            src_old = g.start(ident, kk)
            need = h.start(ident, kk)
            if src_old == vid:
                out += conn(cur_new, need)
            out.append((kind, ident, kk))
            cur_old = g.end(ident, kk)
            cur_new = h.end(ident, kk)
        if cur_old == vid:
            out += conn(cur_new, vid)
        if new_base != g.base:
            out = conn(new_base, vid) + out + conn(vid, new_base)
        return out

    mk = {name: letters_to_word(h, image(to_letters(g, w))) for name, w in g.marking_map.items()}
    h = h.with_marking(mk)
    rec = MoveRecord("expansion", vid, fid, g.volume, h.volume, mk, fid, inverse_remove=wid)
    return h, rec


# ---------------------------------------------------------------- comparison


def graphs_equal(g1: GraphOfGroups, g2: GraphOfGroups) -> bool:
    """Same vertices, edges, base, and markings (compared as group elements)."""
    if set(g1.vertices) != set(g2.vertices) or set(g1.edges) != set(g2.edges) or g1.base != g2.base:
        return False
    m1, m2 = g1.marking_map, g2.marking_map
    if (m1 is None) != (m2 is None):
        return False
    if m1 is None:
        return True
    if set(m1) != set(m2):
        return False
    for k in m1:
        if normal_form(g1, to_letters(g1, m1[k])) != normal_form(g2, to_letters(g2, m2[k])):
            return False
    return True


@dataclass
class Comparison:
    agree: bool
    witness: str | None = None
    classes: tuple[str, str] | None = None


def same_deformation_space(g1: GraphOfGroups, g2: GraphOfGroups, words: Sequence[Word | str]) -> Comparison:
    for g in (g1, g2):
        if g.marking is None:
            raise GraphError("MissingMarking", "both graphs need markings")
    if set(g1.marking_map) != set(g2.marking_map):
        raise GraphError("MarkingMismatch", "markings have different base generators")
    for w in words:
        c1 = _classify_base(g1, w)
        c2 = _classify_base(g2, w)
        if c1 != c2:
            return Comparison(False, str(Word.parse(w)), (c1, c2))
    return Comparison(True)


def _classify_base(g: GraphOfGroups, w) -> str:
    from gtd.core import reduce_letters

    return reduce_letters(g, translate(g, w)).classification


# ---------------------------------------------------------------- random moves


def _divisors(n: int) -> list[int]:
    n = abs(n)
    return [d for d in range(1, n + 1) if n % d == 0]


def random_expansion(g: GraphOfGroups, rng: random.Random, tries: int = 50):
    g = marked(g)
    for _ in range(tries):
        v = rng.choice(g.vertices)
        halves = [(e.id, "from") for e in g.edges if e.origin == v.id] + [(e.id, "to") for e in g.edges if e.terminus == v.id]
        if len(halves) < 2:
            continue
        sub = tuple(h for h in halves if rng.random() < 0.5)
        if not sub or len(sub) == len(halves):
            continue
        k, sign = 1, 1
        if v.cyclic:
            idx = [g.edge(e).index_from if end == "from" else g.edge(e).index_to for e, end in sub]
            k = rng.choice(_divisors(math.gcd(*idx))) * rng.choice((1, -1))
            sign = rng.choice((1, -1))
        spec = ExpansionSpec(sub, Fraction(rng.randint(1, 4), rng.randint(1, 3)), k, sign, outward=rng.random() < 0.5)
        try:
            return expand_vertex(g, v.id, spec)
        except GraphError:
            continue
    return None


def random_collapse(g: GraphOfGroups, rng: random.Random):
    g = marked(g)
    cands = [e.id for e in g.edges if collapsible_side(g, e) is not None]
    rng.shuffle(cands)
    for eid in cands:
        try:
            return collapse_edge(g, eid)
        except GraphError:
            continue
    return None


def random_move(g: GraphOfGroups, rng: random.Random):
    """A random collapse or expansion, or ``None`` if neither applies."""
    order = [random_collapse, random_expansion]
    if rng.random() < 0.5:
        order.reverse()
    for fn in order:
        out = fn(g, rng)
        if out is not None:
            return out
    return None


def random_words(rng: random.Random, g: GraphOfGroups, count: int, max_len: int = 8) -> list[Word]:
    from gtd.core import random_word

    gens = sorted(marked(g).marking_map)
    return [random_word(rng, gens, rng.randint(1, max_len)) for _ in range(count)]


def rescale_marking(g: GraphOfGroups, k) -> GraphOfGroups:
    return replace(marked(g).scaled(k))
