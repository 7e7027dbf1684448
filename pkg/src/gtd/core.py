"""Graphs of groups, words in their fundamental groups, and normal forms.

A graph of groups here has vertex groups that are trivial or infinite
cyclic, which covers free groups and generalized Baumslag-Solitar groups.
Every edge ``e`` from ``u`` to ``v`` with indices ``(p, q)`` carries the
relation::

    e . a_u^p . e^-1  =  a_v^q

Words are read as edge paths.  Because of the relation above, the letter
``e`` is crossed *against* the stored orientation: it starts at the
``to`` vertex and ends at the ``from`` vertex, so that in ``e a^k e^-1``
the middle power lives at the ``from`` vertex and pinches exactly when
``p`` divides ``k``.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

TRIVIAL = "1"
CYCLIC = "Z"


class GraphError(ValueError):
    """Domain error carrying a stable error name plus context for reports."""

    def __init__(self, name: str, message: str = "", **context):
        super().__init__(message or name)
        self.name = name
        self.context = context

    def report(self) -> dict:
        out = {"error": self.name}
        out.update({k: _jsonable(v) for k, v in self.context.items()})
        if str(self) != self.name:
            out["message"] = str(self)
        return out


def _jsonable(v):
    if isinstance(v, Fraction):
        return fmt_q(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def as_q(x) -> Fraction:
    """Parse ``"p/q"`` strings, ints and Fractions.  Floats are refused."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool) or isinstance(x, float):
        raise TypeError(f"refusing inexact value {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot read {x!r} as a rational")


def fmt_q(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


# ---------------------------------------------------------------- words

_TOKEN = re.compile(r"^([A-Za-z_][A-Za-z0-9_']*)(?:\^(-?\d+))?$")


@dataclass(frozen=True)
class Word:
    """A word as a sequence of ``(generator name, nonzero exponent)``."""

    letters: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        for name, k in self.letters:
            if k == 0:
                raise ValueError(f"zero exponent on {name}")

    @classmethod
    def parse(cls, text: str | "Word") -> "Word":
        if isinstance(text, Word):
            return text
        letters = []
        for tok in text.replace("*", " ").split():
            m = _TOKEN.match(tok)
            if not m:
                raise GraphError("ParseError", f"bad token {tok!r} in word {text!r}")
            k = int(m.group(2)) if m.group(2) is not None else 1
            if k:
                letters.append((m.group(1), k))
        return cls(tuple(letters)).merged()

    def merged(self) -> "Word":
        out: list[tuple[str, int]] = []
        for name, k in self.letters:
            if out and out[-1][0] == name:
                k += out.pop()[1]
            if k:
                out.append((name, k))
        return Word(tuple(out))

    def inverse(self) -> "Word":
        return Word(tuple((n, -k) for n, k in reversed(self.letters)))

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters).merged()

    def __pow__(self, n: int) -> "Word":
        base = self if n >= 0 else self.inverse()
        return Word(base.letters * abs(n)).merged()

    def __len__(self) -> int:
        return sum(abs(k) for _, k in self.letters)

    def __str__(self) -> str:
        return " ".join(n if k == 1 else f"{n}^{k}" for n, k in self.letters)

    def substitute(self, images: Mapping[str, "Word"]) -> "Word":
        out: list[tuple[str, int]] = []
        for name, k in self.letters:
            if name not in images:
                raise GraphError("UnknownGenerator", f"no image for generator {name!r}", generator=name)
            piece = images[name] if k > 0 else images[name].inverse()
            out.extend(piece.letters * abs(k))
        return Word(tuple(out)).merged()


# ---------------------------------------------------------------- graphs


@dataclass(frozen=True)
class Vertex:
    id: str
    group: str = CYCLIC
    generator: str = ""

    @property
    def cyclic(self) -> bool:
        return self.group == CYCLIC


@dataclass(frozen=True)
class Edge:
    id: str
    origin: str
    terminus: str
    index_from: int
    index_to: int
    length: Fraction

    @property
    def loop(self) -> bool:
        return self.origin == self.terminus


@dataclass(frozen=True)
class Violation:
    code: str
    element: str
    detail: str = ""


@dataclass(frozen=True)
class GraphOfGroups:
    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]
    spanning_tree: frozenset[str] = frozenset()
    marking: tuple[tuple[str, Word], ...] | None = None
    base: str = ""
    _vmap: dict = field(default=None, compare=False, repr=False, hash=False)
    _emap: dict = field(default=None, compare=False, repr=False, hash=False)
    _gens: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        vs = tuple(v if v.generator else replace(v, generator=f"a_{v.id}") for v in self.vertices)
        es = tuple(replace(e, length=as_q(e.length)) for e in self.edges)
        object.__setattr__(self, "vertices", vs)
        object.__setattr__(self, "edges", es)
        object.__setattr__(self, "spanning_tree", frozenset(self.spanning_tree))
        if not self.base and vs:
            object.__setattr__(self, "base", vs[0].id)
        if isinstance(self.marking, Mapping):
            object.__setattr__(self, "marking", tuple(sorted((k, Word.parse(w)) for k, w in self.marking.items())))
        object.__setattr__(self, "_vmap", {v.id: v for v in vs})
        object.__setattr__(self, "_emap", {e.id: e for e in es})
        gens = {}
        for v in vs:
            if v.cyclic:
                gens[v.generator] = ("v", v.id)
        for e in es:
            gens[e.id] = ("e", e.id)
        object.__setattr__(self, "_gens", gens)

    # lookups
    def vertex(self, vid: str) -> Vertex:
        try:
            return self._vmap[vid]
        except KeyError:
            raise GraphError("UnknownVertex", f"no vertex {vid!r}", vertex=vid) from None

    def edge(self, eid: str) -> Edge:
        try:
            return self._emap[eid]
        except KeyError:
            raise GraphError("UnknownEdge", f"no edge {eid!r}", edge=eid) from None

    def has_edge(self, eid: str) -> bool:
        return eid in self._emap

    @property
    def marking_map(self) -> dict[str, Word] | None:
        return None if self.marking is None else dict(self.marking)

    @property
    def free(self) -> bool:
        return all(not v.cyclic for v in self.vertices)

    @property
    def volume(self) -> Fraction:
        return sum((e.length for e in self.edges), Fraction(0))

    def lengths(self) -> dict[str, Fraction]:
        return {e.id: e.length for e in self.edges}

    # traversal convention, see module docstring
    def start(self, eid: str, sign: int) -> str:
        e = self._emap[eid]
        return e.terminus if sign > 0 else e.origin

    def end(self, eid: str, sign: int) -> str:
        e = self._emap[eid]
        return e.origin if sign > 0 else e.terminus

    def leaving_index(self, eid: str, sign: int) -> int:
        """Index of the edge group at the vertex the half-edge ``e^sign`` leaves."""
        e = self._emap[eid]
        return e.index_to if sign > 0 else e.index_from

    def arriving_index(self, eid: str, sign: int) -> int:
        e = self._emap[eid]
        return e.index_from if sign > 0 else e.index_to

    def half_edges(self, vid: str) -> list[tuple[str, int]]:
        """Half-edges leaving ``vid`` in deterministic order."""
        out = []
        for e in self.edges:
            if e.terminus == vid:
                out.append((e.id, 1))
            if e.origin == vid:
                out.append((e.id, -1))
        return out

    def valence(self, vid: str) -> int:
        return len(self.half_edges(vid))

    # derived graphs
    def with_lengths(self, lengths: Mapping[str, Fraction]) -> "GraphOfGroups":
        es = tuple(replace(e, length=as_q(lengths.get(e.id, e.length))) for e in self.edges)
        return replace(self, edges=es)

    def scaled(self, k) -> "GraphOfGroups":
        k = as_q(k)
        return self.with_lengths({e.id: e.length * k for e in self.edges})

    def with_marking(self, marking: Mapping[str, Word | str] | None) -> "GraphOfGroups":
        if marking is None:
            return replace(self, marking=None)
        return replace(self, marking=tuple(sorted((k, Word.parse(w)) for k, w in marking.items())))

    def checked(self) -> "GraphOfGroups":
        bad = validate_graph(self)
        if bad:
            raise GraphValidationError(bad)
        return self

    # spanning tree paths
    def tree_path(self, src: str, dst: str) -> list[tuple[str, str, int]]:
        """Letters of the spanning-tree path from ``src`` to ``dst``."""
        prev: dict[str, tuple[str, str, int] | None] = {src: None}
        queue = deque([src])
        while queue:
            u = queue.popleft()
            if u == dst:
                break
            for eid, s in self.half_edges(u):
                if eid not in self.spanning_tree:
                    continue
                w = self.end(eid, s)
                if w not in prev:
                    prev[w] = (u, eid, s)
                    queue.append(w)
        if dst not in prev:
            raise GraphError("BadSpanningTree", f"{dst!r} unreachable from {src!r} in spanning tree")
        path = []
        node = dst
        while prev[node] is not None:
            u, eid, s = prev[node]
            path.append(("e", eid, s))
            node = u
        return path[::-1]


class GraphValidationError(GraphError):
    def __init__(self, violations: Sequence[Violation]):
        first = violations[0]
        super().__init__(first.code, "; ".join(f"{v.code}({v.element}) {v.detail}".strip() for v in violations))
        self.violations = list(violations)
        kind = "edge" if first.code in _EDGE_CODES else "element"
        self.context = {kind: first.element}


_EDGE_CODES = {"ZeroIndex", "TrivialVertexWithIndex", "NonpositiveLength", "MixedEdgeGroup", "UnknownVertex"}


def validate_graph(g: GraphOfGroups) -> list[Violation]:
    """Every invariant violation of ``g``, in a stable order."""
    bad: list[Violation] = []
    ids = [v.id for v in g.vertices]
    if not ids:
        return [Violation("Disconnected", "", "no vertices")]
    if len(set(ids)) != len(ids):
        bad.append(Violation("DuplicateId", ",".join(sorted({i for i in ids if ids.count(i) > 1}))))
    eids = [e.id for e in g.edges]
    if len(set(eids)) != len(eids) or set(eids) & set(ids):
        bad.append(Violation("DuplicateId", "edges"))
    gens = [v.generator for v in g.vertices if v.cyclic]
    if len(set(gens)) != len(gens) or set(gens) & set(eids):
        bad.append(Violation("DuplicateId", "generators"))
    for v in g.vertices:
        if v.group not in (TRIVIAL, CYCLIC):
            bad.append(Violation("UnknownGroup", v.id, v.group))
    for e in g.edges:
        ends_ok = e.origin in g._vmap and e.terminus in g._vmap
        if not ends_ok:
            bad.append(Violation("UnknownVertex", e.id))
        if e.index_from == 0 or e.index_to == 0:
            bad.append(Violation("ZeroIndex", e.id))
        if e.length <= 0:
            bad.append(Violation("NonpositiveLength", e.id))
        if not ends_ok:
            continue
        o, t = g.vertex(e.origin), g.vertex(e.terminus)
        if (not o.cyclic and abs(e.index_from) > 1) or (not t.cyclic and abs(e.index_to) > 1):
            bad.append(Violation("TrivialVertexWithIndex", e.id))
        if o.cyclic != t.cyclic:
            bad.append(Violation("MixedEdgeGroup", e.id, "trivial edge group into a cyclic vertex group"))
    if any(b.code == "UnknownVertex" for b in bad):
        return bad
    # connectivity
    seen = {ids[0]}
    queue = deque([ids[0]])
    while queue:
        u = queue.popleft()
        for eid, s in g.half_edges(u):
            w = g.end(eid, s)
            if w not in seen:
                seen.add(w)
                queue.append(w)
    if len(seen) != len(set(ids)):
        bad.append(Violation("Disconnected", ",".join(sorted(set(ids) - seen))))
    # spanning tree
    st = g.spanning_tree
    if not st <= set(eids):
        bad.append(Violation("BadSpanningTree", ",".join(sorted(st - set(eids))), "unknown edge"))
    elif not bad or all(b.code != "Disconnected" for b in bad):
        parent = {v: v for v in set(ids)}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        cyclic = False
        for eid in sorted(st):
            e = g.edge(eid)
            a, b = find(e.origin), find(e.terminus)
            if a == b:
                cyclic = True
            parent[a] = b
        if cyclic or len(st) != len(set(ids)) - 1:
            bad.append(Violation("BadSpanningTree", ",".join(sorted(st)), "not a spanning tree"))
    if g.base not in g._vmap:
        bad.append(Violation("UnknownVertex", g.base, "base vertex"))
    if g.marking is not None and not bad:
        for name, w in g.marking:
            try:
                nf = normal_form(g, to_letters(g, w), g.base)
            except GraphError as err:
                bad.append(Violation("BadMarking", name, str(err)))
                continue
            if nf.end != g.base:
                bad.append(Violation("BadMarking", name, "image is not a loop at the base vertex"))
    return bad


def default_spanning_tree(vertices: Sequence[Vertex], edges: Sequence[Edge]) -> frozenset[str]:
    """Breadth-first spanning tree from the first vertex, lowest edge id first."""
    if not vertices:
        return frozenset()
    by_vertex: dict[str, list[Edge]] = {v.id: [] for v in vertices}
    for e in sorted(edges, key=lambda e: e.id):
        if e.loop:
            continue
        by_vertex.setdefault(e.origin, []).append(e)
        by_vertex.setdefault(e.terminus, []).append(e)
    seen = {vertices[0].id}
    tree = set()
    queue = deque([vertices[0].id])
    while queue:
        u = queue.popleft()
        for e in by_vertex.get(u, []):
            w = e.terminus if e.origin == u else e.origin
            if w not in seen:
                seen.add(w)
                tree.add(e.id)
                queue.append(w)
    return frozenset(tree)


# ---------------------------------------------------------------- letters

# Internal letters: ("v", vertex id, exponent) or ("e", edge id, +-1).
Letter = tuple[str, str, int]


def to_letters(g: GraphOfGroups, w: Word | str) -> list[Letter]:
    w = Word.parse(w)
    out: list[Letter] = []
    for name, k in w.letters:
        kind = g._gens.get(name)
        if kind is None:
            raise GraphError("UnknownGenerator", f"{name!r} is not a generator of this graph", generator=name)
        if kind[0] == "v":
            out.append(("v", kind[1], k))
        else:
            s = 1 if k > 0 else -1
            out.extend([("e", kind[1], s)] * abs(k))
    return out


def letters_to_word(g: GraphOfGroups, letters: Iterable[Letter]) -> Word:
    out = []
    for kind, ident, k in letters:
        if k == 0:
            continue
        name = g.vertex(ident).generator if kind == "v" else ident
        out.append((name, k))
    return Word(tuple(out)).merged()


def invert_letters(letters: Sequence[Letter]) -> list[Letter]:
    return [(kind, ident, -k) for kind, ident, k in reversed(letters)]


Step = tuple[int, str, int]  # (coset exponent at current vertex, edge id, sign)


@dataclass(frozen=True)
class NormalForm:
    """``a^{r_0} e_1 a^{r_1} ... e_n a^{tail}`` with left-transversal exponents.

    Each ``r_i`` lies in ``[0, |index|)`` for the half-edge it precedes, and
    no step backtracks with ``r_i = 0``.  Two letter sequences with the same
    start denote the same group element (or path class) iff their normal
    forms agree.
    """

    start: str
    steps: tuple[Step, ...]
    tail: int
    end: str



def _fix_vertex_letters(g: GraphOfGroups, start: str, steps: Sequence[Step], tail: int) -> list[Letter]:
    out: list[Letter] = []
    cur = start
    for r, eid, s in steps:
        if r:
            out.append(("v", cur, r))
        out.append(("e", eid, s))
        cur = g.end(eid, s)
    if tail:
        out.append(("v", cur, tail))
    return out


def normal_form(g: GraphOfGroups, letters: Iterable[Letter], start: str | None = None) -> NormalForm:
    """Britton-reduce a path of letters into its left-transversal normal form."""
    cur_v = g.base if start is None else start
    start_v = cur_v
    stack: list[Step] = []
    verts: list[str] = []  # vertex before each step
    pend = 0
    for kind, ident, k in letters:
        if kind == "v":
            if ident != cur_v:
                raise GraphError(
                    "NotALoop", f"vertex letter for {ident!r} read while at {cur_v!r}", vertex=ident
                )
            pend += k
            continue
        eid, s = ident, k
        if g.start(eid, s) != cur_v:
            raise GraphError("NotALoop", f"edge letter {eid}^{s} does not start at {cur_v!r}", edge=eid)
        m = g.leaving_index(eid, s)
        if stack and stack[-1][1] == eid and stack[-1][2] == -s and pend % m == 0:
            j = pend // m
            r_prev, _, _ = stack.pop()
            cur_v = verts.pop()
            pend = r_prev + j * g.arriving_index(eid, s)
            continue
        r = pend % abs(m)
        j = (pend - r) // m
        stack.append((r, eid, s))
        verts.append(cur_v)
        cur_v = g.end(eid, s)
        pend = j * g.arriving_index(eid, s)
    if not g.vertex(cur_v).cyclic:
        pend = 0
    return NormalForm(start_v, tuple(stack), pend, cur_v)


def nf_letters(g: GraphOfGroups, nf: NormalForm) -> list[Letter]:
    return _fix_vertex_letters(g, nf.start, nf.steps, nf.tail)


# ---------------------------------------------------------------- reduction

ELLIPTIC = "elliptic"
HYPERBOLIC = "hyperbolic"


@dataclass(frozen=True)
class ReducedWord:
    """Britton-reduced element together with its cyclic reduction."""

    element: NormalForm
    vertex: str
    cyclic_steps: tuple[Step, ...]
    cyclic_tail: int
    conjugator: tuple[Letter, ...]
    classification: str
    translation_length: Fraction

    @property
    def hyperbolic(self) -> bool:
        return self.classification == HYPERBOLIC

    def cyclic_letters(self, g: GraphOfGroups) -> list[Letter]:
        return _fix_vertex_letters(g, self.vertex, self.cyclic_steps, self.cyclic_tail)

    def word(self, g: GraphOfGroups) -> Word:
        """Letters of the cyclically reduced form, read from ``self.vertex``."""
        return letters_to_word(g, self.cyclic_letters(g))

    def syllables(self, g: GraphOfGroups) -> list[tuple[str, int]]:
        return list(self.word(g).letters)


def reduce_letters(g: GraphOfGroups, letters: Sequence[Letter], start: str | None = None) -> ReducedWord:
    start = g.base if start is None else start
    nf = normal_form(g, letters, start)
    if nf.end != start:
        raise GraphError("NotALoop", f"path from {start!r} ends at {nf.end!r}")
    conj: list[Letter] = []
    cur = nf
    while cur.steps:
        r0, e1, s1 = cur.steps[0]
        _, en, sn = cur.steps[-1]
        m = g.leaving_index(e1, s1)
        if not (en == e1 and sn == -s1 and (cur.tail + r0) % m == 0):
            break
        head = ([("v", cur.start, r0)] if r0 else []) + [("e", e1, s1)]
        conj.extend(head)
        body = invert_letters(head) + nf_letters(g, cur) + head
        cur = normal_form(g, body, g.end(e1, s1))
    if cur.steps:
        cls = HYPERBOLIC
        length = sum((g.edge(e).length for _, e, _ in cur.steps), Fraction(0))
    else:
        cls = ELLIPTIC
        length = Fraction(0)
    return ReducedWord(nf, cur.start, cur.steps, cur.tail, tuple(conj), cls, length)


def reduce_word(g: GraphOfGroups, w: Word | str, start: str | None = None) -> ReducedWord:
    """Britton and cyclic reduction of a loop ``w`` based at ``start`` (default: base)."""
    return reduce_letters(g, to_letters(g, w), start)


def translation_length(g: GraphOfGroups, w: Word | str, start: str | None = None) -> Fraction:
    return reduce_word(g, w, start).translation_length


def classify(g: GraphOfGroups, w: Word | str) -> str:
    return reduce_word(g, w).classification


# ---------------------------------------------------------------- markings


def canonical_generators(g: GraphOfGroups) -> dict[str, list[Letter]]:
    """Loops at the base for the presentation with spanning-tree letters trivial.

    Keys are the generator names of the graph: one per cyclic vertex and one
    per edge outside the spanning tree.
    """
    out: dict[str, list[Letter]] = {}
    for v in g.vertices:
        if v.cyclic:
            p = g.tree_path(g.base, v.id)
            out[v.generator] = p + [("v", v.id, 1)] + invert_letters(p)
    for e in g.edges:
        if e.id in g.spanning_tree:
            continue
        p = g.tree_path(g.base, g.start(e.id, 1))
        q = g.tree_path(g.end(e.id, 1), g.base)
        out[e.id] = p + [("e", e.id, 1)] + q
    return out


def canonical_marking(g: GraphOfGroups) -> dict[str, Word]:
    return {k: letters_to_word(g, v) for k, v in canonical_generators(g).items()}


def marked(g: GraphOfGroups) -> GraphOfGroups:
    """``g`` itself if it carries a marking, else ``g`` with its canonical marking."""
    return g if g.marking is not None else g.with_marking(canonical_marking(g))


def translate(g: GraphOfGroups, w: Word | str) -> list[Letter]:
    """Letters in ``g`` of a base-group word, via the marking."""
    mk = g.marking_map
    if mk is None:
        raise GraphError("MissingMarking", "graph carries no marking")
    return to_letters(g, Word.parse(w).substitute(mk))


def loop_to_generators(g: GraphOfGroups, letters: Sequence[Letter]) -> Word:
    """Rewrite a loop at the base as a word in the canonical generators."""
    out = []
    for kind, ident, k in letters:
        if kind == "v":
            out.append((g.vertex(ident).generator, k))
        elif ident not in g.spanning_tree:
            out.append((ident, k))
    return Word(tuple(out)).merged()


def base_elements(g: GraphOfGroups) -> dict[str, list[Letter]]:
    """Images in ``g`` of the base-group generators."""
    mk = g.marking_map
    if mk is None:
        return canonical_generators(g)
    return {k: to_letters(g, w) for k, w in mk.items()}


def iter_reduced_words(gens: Sequence[str], max_len: int) -> Iterator[Word]:
    """All freely reduced words of length 1..max_len in ``gens``, shortlex order."""
    alphabet = [(x, 1) for x in gens] + [(x, -1) for x in gens]

    def extend(prefix, n):
        if n == 0:
            yield Word(tuple(prefix)).merged()
            return
        for x, s in alphabet:
            if prefix and prefix[-1] == (x, -s):
                continue
            yield from extend(prefix + [(x, s)], n - 1)

    for n in range(1, max_len + 1):
        yield from extend([], n)


def random_word(rng, gens: Sequence[str], length: int) -> Word:
    out: list[tuple[str, int]] = []
    while len(out) < length:
        x, s = rng.choice(gens), rng.choice((1, -1))
        if out and out[-1] == (x, -s):
            continue
        out.append((x, s))
    return Word(tuple(out)).merged()


# ---------------------------------------------------------------- JSON


def _index(x, eid: str) -> int:
    if isinstance(x, bool) or not isinstance(x, (int, str)):
        raise GraphError("ParseError", f"edge {eid!r} has a non-integer index", edge=eid)
    try:
        return int(x)
    except ValueError:
        raise GraphError("ParseError", f"edge {eid!r} has a non-integer index", edge=eid) from None


def graph_from_json(data: Mapping) -> GraphOfGroups:
    """Parse the JSON object form of a graph of groups (not validated)."""
    try:
        vertices = tuple(Vertex(str(v["id"]), str(v.get("group", CYCLIC)), str(v.get("generator", ""))) for v in data["vertices"])
        edges = []
        for e in data["edges"]:
            eid = str(e["id"])
            try:
                length = as_q(e.get("length", 1))
            except (TypeError, ValueError, ZeroDivisionError):
                raise GraphError("ParseError", f"edge {eid!r} has an unreadable length", edge=eid) from None
            edges.append(
                Edge(eid, str(e["from"]), str(e["to"]), _index(e.get("index_from", 1), eid), _index(e.get("index_to", 1), eid), length)
            )
    except (KeyError, TypeError) as err:
        raise GraphError("ParseError", f"malformed graph: {err}") from None
    tree = data.get("spanning_tree")
    tree = frozenset(tree) if tree is not None else default_spanning_tree(vertices, edges)
    marking = data.get("marking")
    try:
        marking = {str(k): Word.parse(w) for k, w in marking.items()} if marking is not None else None
    except (AttributeError, ValueError) as err:
        raise GraphError("ParseError", f"malformed marking: {err}") from None
    return GraphOfGroups(vertices, tuple(edges), tree, marking, str(data.get("base", "")))


def graph_to_json(g: GraphOfGroups) -> dict:
    out = {
        "vertices": [
            {"id": v.id, "group": v.group, **({"generator": v.generator} if v.cyclic else {})} for v in g.vertices
        ],
        "edges": [
            {
                "id": e.id,
                "from": e.origin,
                "to": e.terminus,
                "index_from": e.index_from,
                "index_to": e.index_to,
                "length": fmt_q(e.length),
            }
            for e in g.edges
        ],
        "spanning_tree": sorted(g.spanning_tree),
        "base": g.base,
    }
    if g.marking is not None:
        out["marking"] = {k: str(w) for k, w in g.marking}
    return out
