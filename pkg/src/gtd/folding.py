"""Morphisms between free simplicial G-trees and their canonical fold paths.

Everything is done on quotient graphs.  A morphism sends each domain edge
to a reduced edge path in the range; lifting to universal covers gives the
equivariant map of trees.  For a budget ``r`` two points ``x, x'`` of the
domain tree are identified when they have the same image and the image of
``[x, x']`` stays within ``r`` of it.  The quotient ``T_r`` is computed by
subdividing so that this relation is cellular, then running union-find on
cells of the subdivided domain graph.  The fold path is ``T_t = T_{m t}``
where ``m`` is the fold depth, the least budget with ``T_r`` equal to the range.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from gtd.core import (
    Edge,
    GraphError,
    GraphOfGroups,
    Vertex,
    Word,
    as_q,
    canonical_generators,
    default_spanning_tree,
    loop_to_generators,
    marked,
    random_word,
    reduce_letters,
    to_letters,
    translate,
)

HalfStep = tuple[str, int]  # (edge id, sign) in the letter convention of core
FOLD_NODE_CAP = 2_000_000


def _steps(g: GraphOfGroups, w) -> list[HalfStep]:
    out = []
    for kind, ident, k in to_letters(g, w) if isinstance(w, (str, Word)) else w:
        if kind != "e":
            raise GraphError("NontrivialStabilizer", "vertex-group letter in a free graph")
        out.append((ident, k))
    return out


def _free_reduce(steps: Iterable[HalfStep]) -> list[HalfStep]:
    out: list[HalfStep] = []
    for e, s in steps:
        if out and out[-1] == (e, -s):
            out.pop()
        else:
            out.append((e, s))
    return out


def _require_free(*graphs: GraphOfGroups) -> None:
    for g in graphs:
        for v in g.vertices:
            if v.cyclic:
                raise GraphError("NontrivialStabilizer", f"vertex {v.id!r} has a nontrivial group", vertex=v.id)


def _fresh(taken: set[str], stem: str) -> str:
    if stem not in taken:
        return stem
    i = 1
    while f"{stem}_{i}" in taken:
        i += 1
    return f"{stem}_{i}"


# ---------------------------------------------------------------- subdivision


class Subdivision:
    """``g`` with each edge cut at the given offsets along its ``+1`` traversal.

    Pieces are named after the parent edge when it is not cut.
    """

    def __init__(self, g: GraphOfGroups, offsets: Mapping[str, Iterable[Fraction]]):
        self.g = g
        self.cuts: dict[str, list[Fraction]] = {}
        taken = {v.id for v in g.vertices} | {e.id for e in g.edges}
        self.piece_names: dict[str, list[str]] = {}
        self.point_names: dict[str, list[str]] = {}
        for e in g.edges:
            cuts = sorted({as_q(o) for o in offsets.get(e.id, ()) if 0 < as_q(o) < e.length})
            self.cuts[e.id] = [Fraction(0)] + cuts + [e.length]
            if not cuts:
                self.piece_names[e.id] = [e.id]
                self.point_names[e.id] = [g.start(e.id, 1), g.end(e.id, 1)]
                continue
            names = []
            for i in range(len(cuts) + 1):
                n = _fresh(taken, f"{e.id}_{i}")
                taken.add(n)
                names.append(n)
            pts = [g.start(e.id, 1)]
            for i in range(1, len(cuts) + 1):
                n = _fresh(taken, f"{e.id}_p{i}")
                taken.add(n)
                pts.append(n)
            pts.append(g.end(e.id, 1))
            self.piece_names[e.id] = names
            self.point_names[e.id] = pts
        self.parent = {n: (eid, i) for eid, ns in self.piece_names.items() for i, n in enumerate(ns)}

    def expand(self, steps: Sequence[HalfStep]) -> list[HalfStep]:
        out = []
        for e, s in steps:
            ns = self.piece_names[e]
            out.extend([(n, 1) for n in ns] if s > 0 else [(n, -1) for n in reversed(ns)])
        return out

    def coarsen(self, steps: Sequence[HalfStep]) -> list[HalfStep]:
        """Inverse of ``expand`` for paths that run between original vertices."""
        out = []
        for n, s in steps:
            e, i = self.parent[n]
            last = len(self.piece_names[e]) - 1
            if (s > 0 and i == 0) or (s < 0 and i == last):
                out.append((e, s))
        return out

    def graph(self) -> GraphOfGroups:
        g = self.g
        vertices = list(g.vertices)
        edges = []
        for e in g.edges:
            ns, pts, cuts = self.piece_names[e.id], self.point_names[e.id], self.cuts[e.id]
            if len(ns) == 1:
                edges.append(e)
                continue
            vertices += [Vertex(p, "1") for p in pts[1:-1]]
            for i, n in enumerate(ns):
                # letter +1 runs terminus -> origin
                edges.append(Edge(n, pts[i + 1], pts[i], 1, 1, cuts[i + 1] - cuts[i]))
        tree = default_spanning_tree(vertices, edges)
        mk = None
        if g.marking is not None:
            mk = {}
            for k, w in g.marking_map.items():
                mk[k] = letters_to_word_free(self.expand(_steps(g, w)))
        return GraphOfGroups(tuple(vertices), tuple(edges), tree, mk, g.base)


def letters_to_word_free(steps: Sequence[HalfStep]) -> Word:
    return Word(tuple((e, s) for e, s in steps)).merged()


# ---------------------------------------------------------------- morphisms


@dataclass
class Morphism:
    domain: GraphOfGroups
    range: GraphOfGroups
    images: dict[str, tuple[HalfStep, ...]]
    vertex_map: dict[str, str]
    _depth: Fraction | None = field(default=None, repr=False)

    @property
    def fold_depth(self) -> Fraction:
        if self._depth is None:
            self._depth = fold_depth(self)
        return self._depth

    def image_of(self, steps: Sequence[HalfStep]) -> list[HalfStep]:
        out: list[HalfStep] = []
        for e, s in steps:
            img = self.images[e]
            out.extend(img if s > 0 else [(x, -y) for x, y in reversed(img)])
        return out

    def scaled(self, k) -> "Morphism":
        k = as_q(k)
        return Morphism(self.domain.scaled(k), self.range.scaled(k), dict(self.images), dict(self.vertex_map))

    def report(self) -> dict:
        from gtd.core import fmt_q

        return {
            "edge_images": {e: str(letters_to_word_free(img)) for e, img in sorted(self.images.items())},
            "vertex_map": dict(sorted(self.vertex_map.items())),
            "fold_depth": fmt_q(self.fold_depth),
        }


def _parse_image(rng_graph: GraphOfGroups, img) -> list[HalfStep]:
    if isinstance(img, (list, tuple)):
        steps = []
        for piece in img:
            steps += _steps(rng_graph, piece)
        return steps
    return _steps(rng_graph, img)


def make_morphism(
    domain: GraphOfGroups,
    range_: GraphOfGroups,
    edge_images: Mapping[str, object],
    sample: int = 50,
    seed: int = 0,
    check: bool = True,
) -> Morphism:
    """Validate edge images and marking compatibility; fold depth is computed lazily."""
    _require_free(domain, range_)
    domain, range_ = marked(domain), marked(range_)
    images: dict[str, tuple[HalfStep, ...]] = {}
    vmap: dict[str, str] = {}

    def bind(v: str, w: str, eid: str):
        if vmap.setdefault(v, w) != w:
            raise GraphError("NotAGraphMap", f"vertex {v!r} sent to both {vmap[v]!r} and {w!r}", edge=eid)

    for e in domain.edges:
        if e.id not in edge_images:
            raise GraphError("MissingImage", f"no image for edge {e.id!r}", edge=e.id)
        steps = _parse_image(range_, edge_images[e.id])
        if not steps:
            raise GraphError("LengthMismatch", f"edge {e.id!r} has an empty image", edge=e.id)
        for (a, s), (b, t) in zip(steps, steps[1:]):
            if range_.end(a, s) != range_.start(b, t):
                raise GraphError("NotAGraphMap", f"image of {e.id!r} is not a path", edge=e.id)
            if (a, s) == (b, -t):
                raise GraphError("LengthMismatch", f"image of {e.id!r} backtracks", edge=e.id)
        total = sum((range_.edge(a).length for a, _ in steps), Fraction(0))
        if total != e.length:
            raise GraphError(
                "LengthMismatch", f"edge {e.id!r} has length {e.length} but image length {total}", edge=e.id
            )
        images[e.id] = tuple(steps)
        bind(domain.start(e.id, 1), range_.start(*steps[0]), e.id)
        bind(domain.end(e.id, 1), range_.end(*steps[-1]), e.id)
    extra = set(edge_images) - {e.id for e in domain.edges}
    if extra:
        raise GraphError("UnknownEdge", f"images given for unknown edges {sorted(extra)}", edge=sorted(extra)[0])
    m = Morphism(domain, range_, images, vmap)
    if check:
        check_marking(m, sample, seed)
    return m


def pushforward(m: Morphism, w) -> list[tuple[str, str, int]]:
    """Range letters of the image of a base-group word, as a loop at ``phi(base)``."""
    steps = _steps(m.domain, translate(m.domain, w))
    return [("e", e, s) for e, s in m.image_of(steps)]


def check_marking(m: Morphism, sample: int = 50, seed: int = 0) -> None:
    mk_d, mk_r = m.domain.marking_map, m.range.marking_map
    if set(mk_d) != set(mk_r):
        raise GraphError("MarkingIncompatible", "domain and range mark different base groups")
    rng = random.Random(seed)
    gens = sorted(mk_d)
    words = [Word(((x, 1),)) for x in gens] + [random_word(rng, gens, rng.randint(1, 8)) for _ in range(sample)]
    start = m.vertex_map.get(m.domain.base, m.range.base)
    for w in words:
        lr = reduce_letters(m.range, translate(m.range, w)).translation_length
        lp = reduce_letters(m.range, pushforward(m, w), start).translation_length
        ld = reduce_letters(m.domain, translate(m.domain, w)).translation_length
        if lp != lr or ld < lr:
            raise GraphError("MarkingIncompatible", f"word {w} has lengths {ld} -> {lr} (image {lp})", word=str(w))


# ---------------------------------------------------------------- the budget-r quotient


def _vertex_distances(g: GraphOfGroups, v: str, r: Fraction) -> set[Fraction]:
    """Distances from a lift of ``v`` to tree vertices within ``r``."""
    out = {Fraction(0)}
    # a state is (vertex, arriving half-edge, distance); paths sharing one continue identically
    seen = set()
    stack = [(v, None, Fraction(0))]
    while stack:
        u, back, d = stack.pop()
        for e, s in g.half_edges(u):
            if (e, -s) == back:
                continue
            nd = d + g.edge(e).length
            state = (g.end(e, s), (e, s), nd)
            if nd <= r and state not in seen:
                seen.add(state)
                out.add(nd)
                stack.append(state)
    return out


@dataclass
class _Cells:
    """Subdivided domain: cells with their image range cell and orientation."""

    start: list[str]
    end: list[str]
    length: list[Fraction]
    image: list[HalfStep]
    owner: list[tuple[str, int]]
    at: dict[str, list[tuple[int, int]]]
    by_edge: dict[str, list[int]]


def _domain_cells(m: Morphism, rsub: Subdivision) -> _Cells:
    start, end, length, image, owner = [], [], [], [], []
    at: dict[str, list[tuple[int, int]]] = {}
    by_edge: dict[str, list[int]] = {}
    for e in m.domain.edges:
        pieces = rsub.expand(m.images[e.id])
        pts = [m.domain.start(e.id, 1)] + [f"{e.id}#{j}" for j in range(1, len(pieces))] + [m.domain.end(e.id, 1)]
        ids = []
        for j, (n, s) in enumerate(pieces):
            eid, i = rsub.parent[n]
            cuts = rsub.cuts[eid]
            c = len(start)
            start.append(pts[j])
            end.append(pts[j + 1])
            length.append(cuts[i + 1] - cuts[i])
            image.append((n, s))
            owner.append((e.id, j))
            at.setdefault(pts[j], []).append((c, 1))
            at.setdefault(pts[j + 1], []).append((c, -1))
            ids.append(c)
        by_edge[e.id] = ids
    return _Cells(start, end, length, image, owner, at, by_edge)


class _UF:
    def __init__(self):
        self.p: dict = {}

    def find(self, x):
        self.p.setdefault(x, x)
        while self.p[x] != x:
            self.p[x] = self.p[self.p[x]]
            x = self.p[x]
        return x

    def union(self, a, b):
        a, b = self.find(a), self.find(b)
        if a != b:
            if str(b) < str(a):
                a, b = b, a
            self.p[b] = a


@dataclass
class FoldResult:
    budget: Fraction
    tree: GraphOfGroups
    phi_0t: Morphism
    phi_t1: Morphism
    range_subdivision: Subdivision

    def composite_images(self) -> dict[str, list[HalfStep]]:
        """Edge images of ``phi_t1 . phi_0t`` in the original range."""
        out = {}
        for e, img in self.phi_0t.images.items():
            out[e] = self.range_subdivision.coarsen(self.phi_t1.image_of(img))
        return out


def fold_budget(m: Morphism, r, order_seed: int | None = None) -> FoldResult:
    """The quotient ``T_r`` of the domain tree at absolute fold budget ``r``."""
    r = as_q(r)
    if r < 0:
        raise GraphError("TOutOfRange", "fold budget must be nonnegative")
    rg = m.range
    dist = {v.id: _vertex_distances(rg, v.id, r) for v in rg.vertices}
    offs: dict[str, set[Fraction]] = {}
    for e in rg.edges:
        a, b = rg.start(e.id, 1), rg.end(e.id, 1)
        o = {r - d for d in dist[a]} | {e.length - r + d for d in dist[b]}
        offs[e.id] = {x for x in o if 0 < x < e.length}
    rsub = Subdivision(rg, offs)
    clen = {}
    for eid, ns in rsub.piece_names.items():
        cuts = rsub.cuts[eid]
        for i, n in enumerate(ns):
            clen[n] = cuts[i + 1] - cuts[i]
    cells = _domain_cells(m, rsub)
    verts = sorted(cells.at)
    if order_seed is not None:
        random.Random(order_seed).shuffle(verts)
    vuf, cuf = _UF(), _UF()
    nodes = 0
    # integer arithmetic in the searches: scale by a common denominator
    den = r.denominator
    for v in clen.values():
        den = den * v.denominator // math.gcd(den, v.denominator)
    ilen = {n: int(v * den) for n, v in clen.items()}
    ir = int(r * den)

    # Reduced image positions are interned as nodes of a trie: node 0 is the
    # empty path, and each node stores its parent, last letter and first letter.
    # Letters are coded as integers with the inverse letter at ``code ^ 1``.
    code: dict[HalfStep, int] = {}
    names = sorted(clen)
    for i, n in enumerate(names):
        code[(n, 1)], code[(n, -1)] = 2 * i, 2 * i + 1
    clen_code = [ilen[names[i // 2]] for i in range(2 * len(names))]
    parent, last, first = [-1], [-1], [-1]
    child: dict[tuple[int, int], int] = {}

    def step_pos(pid: int, k: int) -> tuple[int, bool]:
        """New node and whether the step extended the path."""
        if pid and last[pid] == k ^ 1:
            return parent[pid], False
        nid = child.get((pid, k))
        if nid is None:
            nid = child[(pid, k)] = len(parent)
            parent.append(pid)
            last.append(k)
            first.append(k if pid == 0 else first[pid])
        return nid, True

    cell_code = [code[(n, t)] for n, t in cells.image]
    # moves out of each domain vertex: (image letter, far end, cell)
    moves = {
        u: [(cell_code[c] if s > 0 else cell_code[c] ^ 1, cells.end[c] if s > 0 else cells.start[c], c)
            for c, s in lst]
        for u, lst in cells.at.items()
    }

    # Reachability only depends on the state (domain vertex, reduced image
    # offset): a walk with backtracking reaches the same tree vertices as the
    # geodesics it contains, so each state is expanded once.
    def tick():
        nonlocal nodes
        nodes += 1
        if nodes > FOLD_NODE_CAP:
            raise GraphError("FoldTooLarge", "fold search exceeded its node cap")

    # vertex identifications
    for x in verts:
        seen = {(x, 0)}
        stack = [(x, 0, 0)]
        while stack:
            u, pos, d = stack.pop()
            for k, w, _ in moves[u]:
                npos, up = step_pos(pos, k)
                nd = d + clen_code[k] if up else d - clen_code[k]
                if nd > ir:
                    continue
                if (w, npos) in seen:
                    continue
                seen.add((w, npos))
                if not npos:
                    vuf.union(x, w)
                tick()
                stack.append((w, npos, nd))

    # cell identifications, through midpoints
    order = list(range(len(cells.start)))
    if order_seed is not None:
        random.Random(order_seed + 1).shuffle(order)
    for c0 in order:
        k0 = cell_code[c0]
        ell = clen_code[k0]
        if ell > 2 * ir:
            continue
        p0, _ = step_pos(0, k0)
        # h: image distance from the far end of img0 when pos starts with it
        seen = {(cells.start[c0], 0), (cells.end[c0], p0)}
        stack = [(cells.start[c0], 0, 0), (cells.end[c0], p0, ell)]
        while stack:
            u, pos, d = stack.pop()
            for k, w, c in moves[u]:
                npos, up = step_pos(pos, k)
                nd = d + clen_code[k] if up else d - clen_code[k]
                h = nd - ell if npos and first[npos] == k0 else nd
                if ell + 2 * h > 2 * ir:
                    continue
                if pos == 0 and npos == p0:
                    cuf.union(c0, c)
                    vuf.union(cells.start[c0], u)
                    vuf.union(cells.end[c0], w)
                elif pos == p0 and npos == 0:
                    cuf.union(c0, c)
                    vuf.union(cells.end[c0], u)
                    vuf.union(cells.start[c0], w)
                if (w, npos) in seen:
                    continue
                seen.add((w, npos))
                tick()
                stack.append((w, npos, nd))

    return _build_quotient(m, r, rsub, cells, vuf, cuf)


def _build_quotient(m: Morphism, r: Fraction, rsub: Subdivision, cells: _Cells, vuf: _UF, cuf: _UF) -> FoldResult:
    dom = m.domain
    ncell = len(cells.start)
    # cell classes with orientation relative to the representative
    reps: dict[int, int] = {}
    orient: list[int] = [1] * ncell
    for c in range(ncell):
        rep = cuf.find(c)
        reps.setdefault(rep, rep)
        orient[c] = cells.image[c][1] * cells.image[rep][1]
    vclass = {v: vuf.find(v) for v in cells.at}
    qstart = {k: vclass[cells.start[k]] for k in reps}
    qend = {k: vclass[cells.end[k]] for k in reps}
    qat: dict[str, list[tuple[int, int]]] = {}
    for k in sorted(reps):
        qat.setdefault(qstart[k], []).append((k, 1))
        qat.setdefault(qend[k], []).append((k, -1))
    dom_vertices = {v.id for v in dom.vertices}
    base_cls = vclass[dom.base]
    kept = {vclass[v] for v in dom_vertices} | {u for u, hs in qat.items() if len(hs) != 2}

    # chains of cells between kept vertices
    chains: list[list[tuple[int, int]]] = []
    used: set[int] = set()
    for u in sorted(kept, key=str):
        for k, s in qat.get(u, []):
            if k in used:
                continue
            chain = [(k, s)]
            used.add(k)
            cur = qend[k] if s > 0 else qstart[k]
            while cur not in kept:
                (k1, s1), (k2, s2) = qat[cur]
                nk, ns = (k2, s2) if k1 == chain[-1][0] and s1 == -chain[-1][1] else (k1, s1)
                chain.append((nk, ns))
                used.add(nk)
                cur = qend[nk] if ns > 0 else qstart[nk]
            chains.append(chain)

    # vertex names
    taken: set[str] = set()
    vname: dict[str, str] = {}
    for cls in sorted(kept, key=str):
        members = sorted(v for v in dom_vertices if vclass[v] == cls)
        if members:
            vname[cls] = members[0]
            taken.add(members[0])
    n = 0
    for cls in sorted(kept, key=str):
        if cls not in vname:
            while f"w{n}" in taken or f"w{n}" in dom_vertices:
                n += 1
            vname[cls] = f"w{n}"
            taken.add(vname[cls])

    # orient and name chains
    cell_pos: dict[int, tuple[int, int, int]] = {}  # rep -> (chain index, position, sign)
    edges: list[Edge] = []
    names: list[str] = []
    ename_taken = set(taken)
    for idx, chain in enumerate(chains):
        flipped = [(k, -s) for k, s in reversed(chain)]
        name = None
        for cand in (chain, flipped):
            eid = cells.owner[cand[0][0]][0]
            if [k for k, _ in cand] == cells.by_edge[eid] and all(s == 1 for _, s in cand):
                chain, name = cand, eid
                break
        if name is None:
            if chain[0][1] < 0:
                chain = flipped
            e0, j0 = cells.owner[chain[0][0]]
            name = f"{e0}_{j0}"
        name = _fresh(ename_taken, name)
        ename_taken.add(name)
        chains[idx] = chain
        names.append(name)
        for pos, (k, s) in enumerate(chain):
            cell_pos[k] = (idx, pos, s)
        first, last = chain[0], chain[-1]
        a = qstart[first[0]] if first[1] > 0 else qend[first[0]]
        b = qend[last[0]] if last[1] > 0 else qstart[last[0]]
        length = sum((cells.length[k] for k, _ in chain), Fraction(0))
        edges.append(Edge(name, vname[b], vname[a], 1, 1, length))

    def to_chain_letters(path: Sequence[tuple[int, int]]) -> list[HalfStep]:
        out = []
        for k, s in path:
            idx, pos, cs = cell_pos[k]
            L = len(chains[idx])
            if s == cs and pos == 0:
                out.append((names[idx], 1))
            elif s == -cs and pos == L - 1:
                out.append((names[idx], -1))
        return out

    def domain_path(steps: Sequence[HalfStep]) -> list[tuple[int, int]]:
        out = []
        for e, s in steps:
            ids = cells.by_edge[e]
            seq = ids if s > 0 else list(reversed(ids))
            out += [(cuf.find(c), orient[c] * s) for c in seq]
        return out

    def qreduce(path):
        out = []
        for k, s in path:
            if out and out[-1] == (k, -s):
                out.pop()
            else:
                out.append((k, s))
        return out

    vertices = tuple(Vertex(vname[c], "1") for c in sorted(kept, key=lambda c: vname[c]))
    tree_edges = default_spanning_tree(vertices, edges)
    mk = {}
    for x, w in dom.marking_map.items():
        mk[x] = letters_to_word_free(to_chain_letters(qreduce(domain_path(_steps(dom, w)))))
    T = GraphOfGroups(vertices, tuple(edges), tree_edges, mk, vname[base_cls])

    phi0 = Morphism(dom, T, {e.id: tuple(to_chain_letters(domain_path([(e.id, 1)]))) for e in dom.edges},
                    {v: vname[vclass[v]] for v in dom_vertices})

    # the range subdivided at the images of the new vertices
    need: dict[str, set[Fraction]] = {}
    img_of_vertex: dict[str, tuple[str, int]] = {}
    for cls in kept:
        for c, s in qat.get(cls, [])[:1]:
            n, t = cells.image[c]
            eid, i = rsub.parent[n]
            # image point is the start of the traversed range cell
            at_start = (s > 0) == (t > 0)
            j = i if at_start else i + 1
            img_of_vertex[cls] = (eid, j)
            cut = rsub.cuts[eid][j]
            if 0 < cut < m.range.edge(eid).length:
                need.setdefault(eid, set()).add(cut)
    rr = Subdivision(m.range, need)
    R2 = rr.graph()

    def chain_image(chain) -> list[HalfStep]:
        out: list[HalfStep] = []
        for k, s in chain:
            n, t = cells.image[k]
            sign = t * s
            eid, i = rsub.parent[n]
            lo, hi = rsub.cuts[eid][i], rsub.cuts[eid][i + 1]
            rcuts = rr.cuts[eid]
            q = max(j for j in range(len(rcuts) - 1) if rcuts[j] <= lo)
            if sign > 0 and lo == rcuts[q]:
                out.append((rr.piece_names[eid][q], 1))
            elif sign < 0 and hi == rcuts[q + 1]:
                out.append((rr.piece_names[eid][q], -1))
        return out

    phi1_images = {names[i]: tuple(chain_image(chains[i])) for i in range(len(chains))}
    vmap1 = {}
    for cls, (eid, j) in img_of_vertex.items():
        vmap1[vname[cls]] = rr.point_names[eid][rr.cuts[eid].index(rsub.cuts[eid][j])]
    phi1 = Morphism(T, R2, phi1_images, vmap1)
    return FoldResult(r, T, phi0, phi1, rr)


# ---------------------------------------------------------------- fold depth


def range_vertex_distances(g: GraphOfGroups, r: Fraction) -> list[Fraction]:
    vals: set[Fraction] = set()
    for v in g.vertices:
        vals |= _vertex_distances(g, v.id, r)
    return sorted(vals)


def _volume_at(m: Morphism, r: Fraction) -> Fraction:
    return fold_budget(m, r).tree.volume


def fold_depth(m: Morphism) -> Fraction:
    """Least budget ``r`` at which the quotient is the whole range."""
    total = m.range.volume
    if m.domain.volume == total:
        return Fraction(0)
    hi = max(e.length for e in m.range.edges)
    for _ in range(40):
        if _volume_at(m, hi) == total:
            break
        hi *= 2
    else:
        raise GraphError("FoldTooLarge", "fold depth search did not terminate")
    cands = [c for c in range_vertex_distances(m.range, hi) if c > 0]
    lo_i, hi_i = 0, len(cands) - 1
    while lo_i < hi_i:
        mid = (lo_i + hi_i) // 2
        if _volume_at(m, cands[mid]) == total:
            hi_i = mid
        else:
            lo_i = mid + 1
    return cands[lo_i]


def fold_depth_bruteforce(m: Morphism, max_cells: int = 8) -> Fraction:
    """Largest loop height of images of domain geodesics with equal endpoint images.

    Independent of the quotient construction: enumerates reduced paths of at
    most ``max_cells`` cells in the domain cut at preimages of range vertices.
    """
    rsub = Subdivision(m.range, {})
    cells = _domain_cells(m, rsub)
    clen = {e.id: e.length for e in m.range.edges}
    best = Fraction(0)
    for x in sorted(cells.at):
        stack = [(x, None, (), Fraction(0), Fraction(0), 0)]
        while stack:
            u, back, pos, d, peak, depth = stack.pop()
            if depth >= max_cells:
                continue
            for c, s in cells.at[u]:
                if (c, -s) == back:
                    continue
                n, t = cells.image[c]
                img = (n, t * s)
                if pos and pos[-1] == (n, -t * s):
                    npos, nd = pos[:-1], d - clen[n]
                else:
                    npos, nd = pos + (img,), d + clen[n]
                npeak = max(peak, nd)
                w = cells.end[c] if s > 0 else cells.start[c]
                if not npos:
                    best = max(best, npeak)
                stack.append((w, (c, s), npos, nd, npeak, depth + 1))
    return best


# ---------------------------------------------------------------- fold paths


def fold_at_time(m: Morphism, t) -> FoldResult:
    t = as_q(t)
    if not 0 <= t <= 1:
        raise GraphError("TOutOfRange", f"time {t} outside [0, 1]")
    return fold_budget(m, m.fold_depth * t)


@dataclass
class FoldPath:
    morphism: Morphism
    times: dict[Fraction, FoldResult]


def fold_path(m: Morphism, times: Iterable) -> FoldPath:
    return FoldPath(m, {as_q(t): fold_at_time(m, t) for t in times})


def base_length(g: GraphOfGroups, w) -> Fraction:
    return reduce_letters(g, translate(g, w)).translation_length


def length_profile(m: Morphism, words: Sequence, times: Sequence) -> list[list[Fraction]]:
    """``l_{T_t}(w)`` for each word (rows) and time (columns)."""
    trees = [fold_at_time(m, t).tree for t in times]
    return [[base_length(T, w) for T in trees] for w in words]


# ---------------------------------------------------------------- random morphisms


def random_morphism(rng: random.Random, range_: GraphOfGroups, moves: int = 4) -> Morphism:
    """A rose mapping onto ``range_`` along a Nielsen-transformed basis."""
    _require_free(range_)
    range_ = marked(range_)
    canon = canonical_generators(range_)
    names = sorted(canon)
    basis = [_free_reduce(_steps(range_, canon[x])) for x in names]
    # expression of each canonical generator in the current basis symbols 0..n-1
    expr: dict[str, list[tuple[int, int]]] = {x: [(i, 1)] for i, x in enumerate(names)}
    n = len(basis)

    def inv(p):
        return [(e, -s) for e, s in reversed(p)]

    for _ in range(moves):
        if n < 2:
            break
        i, j = rng.sample(range(n), 2)
        sj = rng.choice((1, -1))
        right = rng.random() < 0.5
        bj = basis[j] if sj > 0 else inv(basis[j])
        basis[i] = _free_reduce(basis[i] + bj if right else bj + basis[i])
        # old b_i = new b_i b_j^-sj  (or b_j^-sj new b_i)
        repl = [(i, 1), (j, -sj)] if right else [(j, -sj), (i, 1)]
        for x in names:
            out = []
            for sym, s in expr[x]:
                if sym == i:
                    out += repl if s > 0 else [(a, -b) for a, b in reversed(repl)]
                else:
                    out.append((sym, s))
            expr[x] = out
    petals = [f"p{i + 1}" for i in range(n)]
    lengths = [sum((range_.edge(e).length for e, _ in b), Fraction(0)) for b in basis]
    dom_edges = tuple(Edge(p, "o", "o", 1, 1, L) for p, L in zip(petals, lengths))
    mk = {}
    for x, w in range_.marking_map.items():
        cw = loop_to_generators(range_, to_letters(range_, w))
        word = []
        for g, k in cw.letters:
            piece = [(petals[a], b) for a, b in expr[g]]
            if k < 0:
                piece = [(a, -b) for a, b in reversed(piece)]
            word += piece * abs(k)
        mk[x] = letters_to_word_free(_free_reduce(word))
    dom = GraphOfGroups((Vertex("o", "1"),), dom_edges, frozenset(), mk, "o")
    images = {p: [f"{e}^{s}" for e, s in b] for p, b in zip(petals, basis)}
    return make_morphism(dom, range_, images)
