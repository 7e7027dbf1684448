"""``gtd`` command line: JSON in, JSON report out, optional DOT/CSV artifacts.

Exit status is 0 on success, 1 on a domain error (the report names the
error) and 2 on a usage or parse error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import random
import sys
from fractions import Fraction
from pathlib import Path as FilePath

from gtd.core import (
    GraphError,
    GraphOfGroups,
    Word,
    as_q,
    fmt_q,
    graph_from_json,
    graph_to_json,
    random_word,
    reduce_letters,
    to_letters,
    validate_graph,
)
from gtd.folding import base_length, fold_at_time, length_profile, make_morphism
from gtd.moves import collapse_edge, expand_vertex, is_reduced, same_deformation_space, spec_from_json
from gtd.section import contraction_path, elliptic_profile, section_map
from gtd.topology import (
    Approximation,
    check_approximation,
    element_letters,
    grid_points,
    identity_approximation,
    simplex_coords,
    thicken,
)
from gtd.treegeom import (
    Point,
    Tree,
    ball_to_dot,
    basepoint,
    basepoint_auto,
    build_ball,
    default_cap,
    describe_point,
)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- I/O helpers


def read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as err:
        raise UsageError(f"cannot read {path}: {err.strerror}") from None
    except json.JSONDecodeError as err:
        raise UsageError(f"{path}: invalid JSON ({err.msg})") from None


def load_graph(src, relative_to: str | None = None, check: bool = True) -> GraphOfGroups:
    if isinstance(src, dict):
        g = graph_from_json(src)
    else:
        path = src
        if relative_to and not os.path.isabs(path):
            path = os.path.join(os.path.dirname(relative_to), path)
        g = graph_from_json(read_json(path))
    return g.checked() if check else g


def dump(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), sort_keys=False)


def parse_q(text: str) -> Fraction:
    try:
        return as_q(text)
    except (TypeError, ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from None


def parse_times(text: str) -> list[Fraction]:
    return [parse_q(t) for t in text.split(",") if t.strip()]


def parse_words(text: str | None) -> list[str]:
    return [w.strip() for w in text.split(",") if w.strip()] if text else []


def parse_point(tree: Tree, data) -> Point:
    if not isinstance(data, dict) or "vertex" not in data:
        raise GraphError("ParseError", "points are objects with a 'vertex' word and optional 'back'")
    word = str(data["vertex"]).strip()
    letters = [] if word in ("", "1") else to_letters(tree.g, word)
    p = tree.point_of_letters(letters)
    return tree.point(p.path, as_q(data.get("back", 0)))


def graph_to_dot(g: GraphOfGroups, name: str = "G") -> str:
    lines = [f"digraph {name} {{"]
    for v in g.vertices:
        label = v.id if not v.cyclic else f"{v.id}: <{v.generator}>"
        lines.append(f'  "{v.id}" [label="{label}"];')
    for e in g.edges:
        idx = "" if (e.index_from, e.index_to) == (1, 1) else f" ({e.index_from},{e.index_to})"
        style = "" if e.id in g.spanning_tree else ", style=dashed"
        lines.append(f'  "{e.origin}" -> "{e.terminus}" [label="{e.id} {fmt_q(e.length)}{idx}"{style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_dot(directory: str, name: str, text: str) -> str:
    FilePath(directory).mkdir(parents=True, exist_ok=True)
    path = os.path.join(directory, f"{name}.dot")
    with open(path, "w") as fh:
        fh.write(text)
    return path


def cap_of(args) -> int:
    return args.cap if args.cap is not None else default_cap()


def sample_words(g: GraphOfGroups, count: int, seed: int) -> list[Word]:
    rng = random.Random(seed)
    gens = sorted(g.marking_map) if g.marking is not None else sorted(g._gens)
    return [Word(((x, 1),)) for x in gens] + [random_word(rng, gens, rng.randint(1, 6)) for _ in range(count)]


# ---------------------------------------------------------------- verbs


def cmd_validate(args) -> dict:
    g = load_graph(args.graph, check=False)
    bad = validate_graph(g)
    if bad:
        from gtd.core import GraphValidationError

        raise GraphValidationError(bad)
    return {"ok": True, "vertices": len(g.vertices), "edges": len(g.edges), "volume": fmt_q(g.volume)}


def cmd_length(args) -> dict:
    g = load_graph(args.graph)
    rw = reduce_letters(g, element_letters(g, args.word))
    return {"classification": rw.classification, "length": fmt_q(rw.translation_length)}


def cmd_ball(args) -> dict:
    g = load_graph(args.graph)
    ball = build_ball(g, args.radius, cap_of(args))
    out = {
        "radius": fmt_q(ball.radius),
        "vertices": len(ball.vertices),
        "boundary": len(ball.boundary),
        "achieved": fmt_q(ball.achieved),
    }
    if args.emit_dot:
        out["dot"] = write_dot(args.emit_dot, "ball", ball_to_dot(ball))
    return out


def _generators(g: GraphOfGroups, words: list[str]) -> list:
    if words:
        return [element_letters(g, w) for w in words]
    if g.marking is not None:
        return [element_letters(g, k) for k in sorted(g.marking_map)]
    from gtd.core import canonical_generators

    return [v for _, v in sorted(canonical_generators(g).items())]


def cmd_basepoint(args) -> dict:
    g = load_graph(args.graph)
    S = _generators(g, parse_words(args.S))
    tree = Tree(g)
    if args.radius is None:
        bp = basepoint_auto(g, S, cap_of(args), tree)
    else:
        bp = basepoint(build_ball(g, args.radius, cap_of(args), tree), S)
    loc = bp.locus
    return {
        "value": fmt_q(bp.value),
        "point": describe_point(tree, bp.point),
        "endpoints": [describe_point(tree, p) for p in loc.endpoints],
    }


def _emit_tree(args, g: GraphOfGroups) -> None:
    if getattr(args, "output", None):
        with open(args.output, "w") as fh:
            json.dump(graph_to_json(g), fh, indent=1)
            fh.write("\n")


def cmd_collapse(args) -> dict:
    g = load_graph(args.graph)
    new, rec = collapse_edge(g, args.edge, args.remove)
    _emit_tree(args, new)
    return {"record": rec.report(), "tree": graph_to_json(new)}


def cmd_expand(args) -> dict:
    g = load_graph(args.graph)
    spec = spec_from_json(read_json(args.spec))
    new, rec = expand_vertex(g, args.vertex, spec)
    _emit_tree(args, new)
    return {"record": rec.report(), "tree": graph_to_json(new)}


def cmd_reduced(args) -> dict:
    ok, witness = is_reduced(load_graph(args.graph))
    return {"reduced": ok, "witness": witness}


def cmd_profile_compare(args) -> dict:
    g1, g2 = load_graph(args.first), load_graph(args.second)
    words = parse_words(args.S) or [str(w) for w in sample_words(g1, args.words, args.seed)]
    c = same_deformation_space(g1, g2, words)
    out = {"agree": c.agree, "words": len(words)}
    if not c.agree:
        out["witness"] = c.witness
        out["classes"] = list(c.classes)
    return out


def _load_morphism(path: str):
    data = read_json(path)
    try:
        dom = load_graph(data["domain"], path)
        rng = load_graph(data["range"], path)
        images = data["edge_images"]
    except KeyError as err:
        raise UsageError(f"{path}: missing key {err}") from None
    return make_morphism(dom, rng, images)


def cmd_fold(args) -> dict:
    m = _load_morphism(args.morphism)
    out = {"fold_depth": fmt_q(m.fold_depth)}
    if args.profile:
        with open(args.profile) as fh:
            words = [line.strip() for line in fh if line.strip() and not line.startswith("#")]
        times = args.times or [Fraction(k, 4) for k in range(5)]
        prof = length_profile(m, words, times)
        out["times"] = [fmt_q(t) for t in times]
        out["profile"] = {w: [fmt_q(x) for x in row] for w, row in zip(words, prof)}
        if args.emit_csv:
            with open(args.emit_csv, "w", newline="") as fh:
                wr = csv.writer(fh)
                wr.writerow(["word"] + out["times"])
                for w, row in out["profile"].items():
                    wr.writerow([w] + row)
        return out
    res = fold_at_time(m, args.t)
    out["t"] = fmt_q(args.t)
    out["budget"] = fmt_q(res.budget)
    if args.emit == "tree":
        out["tree"] = graph_to_json(res.tree)
    else:
        out["edge_lengths"] = {e.id: fmt_q(e.length) for e in res.tree.edges}
    if args.emit_dot:
        out["dot"] = write_dot(args.emit_dot, "fold", graph_to_dot(res.tree, "T"))
    return out


def _ball_ref(ref, rel_path: str):
    if isinstance(ref, str):
        ref = {"tree": ref}
    g = load_graph(ref["tree"], rel_path)
    tree = Tree(g)
    declared = []
    if "grid" in ref:
        declared = grid_points(tree, as_q(ref.get("radius", 1)), int(ref["grid"]))
    return tree, declared


def _load_relation(path: str) -> Approximation:
    data = read_json(path)
    try:
        left, lpts = _ball_ref(data["left"], path)
        right, rpts = _ball_ref(data["right"], path)
        pairs = [(parse_point(left, a), parse_point(right, b)) for a, b in data["pairs"]]
        eps = as_q(data["epsilon"])
    except (KeyError, TypeError, ValueError) as err:
        raise UsageError(f"{path}: malformed relation ({err})") from None
    lpts = list(dict.fromkeys(lpts + [x for x, _ in pairs]))
    rpts = list(dict.fromkeys(rpts + [y for _, y in pairs]))
    return Approximation(left, right, lpts, rpts, pairs, eps, tuple(data.get("P", ())), bool(data.get("full", False)))


def _relation_json(a: Approximation, src: dict) -> dict:
    return {
        "left": src["left"],
        "right": src["right"],
        "epsilon": fmt_q(a.epsilon),
        "P": list(a.P),
        "full": a.full,
        "pairs": [[describe_point(a.left, x), describe_point(a.right, y)] for x, y in a.pairs],
    }


def cmd_approx(args) -> dict:
    if args.action == "identity":
        left, right = load_graph(args.relation), load_graph(args.right)
        a = identity_approximation(Tree(left), Tree(right), args.radius or 1, args.grid, parse_words(args.S), full=args.full)
        return _relation_json(a, {"left": args.relation, "right": args.right})
    a = _load_relation(args.relation)
    if args.action == "thicken":
        if args.delta is None:
            raise UsageError("thicken needs -d/--delta")
        t = thicken(a, args.delta)
        out = {"epsilon": fmt_q(t.epsilon), "pairs": len(t.pairs), "check": check_approximation(t).report()}
        if args.output:
            with open(args.output, "w") as fh:
                json.dump(_relation_json(t, read_json(args.relation)), fh, indent=1)
        return out
    return check_approximation(a).report()


def cmd_simplex(args) -> dict:
    c = simplex_coords(load_graph(args.graph))
    return {"barycentric": [fmt_q(b) for b in c.barycentric], "volume": fmt_q(c.volume)}


def cmd_section(args) -> dict:
    base, target = load_graph(args.base), load_graph(args.target)
    return section_map(base, target, args.radius, cap_of(args)).report()


def cmd_contract(args) -> dict:
    base, target = load_graph(args.base), load_graph(args.target)
    times = args.times or [Fraction(k, 4) for k in range(5)]
    path = contraction_path(base, target, times, args.radius, args.simplex_steps)
    words = parse_words(args.S) or [str(w) for w in sample_words(target, args.words, args.seed)]
    from gtd.moves import graphs_equal

    steps = []
    for t, g in path.steps:
        steps.append(
            {
                "t": fmt_q(t),
                "lengths": {e.id: fmt_q(e.length) for e in g.edges},
                "volume": fmt_q(g.volume),
                "elliptic": elliptic_profile(g, words),
            }
        )
    first, last = path.steps[0][1], path.steps[-1][1]
    out = path.report()
    out["steps"] = steps
    out["t0_in_LT"] = path.steps[0][0] == 0 and graphs_equal(first, path.section.remetrized)
    out["t1_matches_target"] = path.steps[-1][0] == 1 and all(
        base_length(last, w) == base_length(target, w) for w in words
    )
    if args.emit_csv:
        with open(args.emit_csv, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "edge", "length"])
            for s in steps:
                for e, L in s["lengths"].items():
                    wr.writerow([s["t"], e, L])
        out["csv"] = args.emit_csv
    if args.emit_dot:
        out["dot"] = [
            write_dot(args.emit_dot, f"step_{i}", graph_to_dot(g, f"T_{i}")) for i, (_, g) in enumerate(path.steps)
        ]
    return out


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gtd", description="Exact computation with cocompact G-trees.")
    p.add_argument("--cap", type=int, default=None, help="ball vertex cap (default 100000, env GTD_CAP)")
    sub = p.add_subparsers(dest="verb", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(fn=fn)
        sp.add_argument("--cap", type=int, default=argparse.SUPPRESS, help=argparse.SUPPRESS)
        return sp

    sp = add("validate", cmd_validate, "check a graph of groups")
    sp.add_argument("graph")
    sp = add("length", cmd_length, "translation length of a word")
    sp.add_argument("graph")
    sp.add_argument("word")
    sp = add("ball", cmd_ball, "build a ball of the tree")
    sp.add_argument("graph")
    sp.add_argument("-r", "--radius", type=parse_q, required=True)
    sp.add_argument("--emit-dot")
    sp = add("basepoint", cmd_basepoint, "midpoint of the min-max locus")
    sp.add_argument("graph")
    sp.add_argument("-S")
    sp.add_argument("-r", "--radius", type=parse_q)
    sp = add("collapse", cmd_collapse, "collapse an edge")
    sp.add_argument("graph")
    sp.add_argument("-e", "--edge", required=True)
    sp.add_argument("--remove")
    sp.add_argument("-o", "--output")
    sp = add("expand", cmd_expand, "expand a vertex")
    sp.add_argument("graph")
    sp.add_argument("-v", "--vertex", required=True)
    sp.add_argument("--spec", required=True)
    sp.add_argument("-o", "--output")
    sp = add("reduced", cmd_reduced, "is the graph reduced")
    sp.add_argument("graph")
    sp = add("profile-compare", cmd_profile_compare, "compare elliptic profiles")
    sp.add_argument("first")
    sp.add_argument("second")
    sp.add_argument("-S")
    sp.add_argument("--words", type=int, default=50)
    sp.add_argument("--seed", type=int, default=0)
    sp = add("fold", cmd_fold, "fold path of a morphism")
    sp.add_argument("morphism")
    sp.add_argument("-t", type=parse_q, default=Fraction(1, 2))
    sp.add_argument("--emit", choices=("tree", "lengths"), default="lengths")
    sp.add_argument("--profile")
    sp.add_argument("--times", type=parse_times)
    sp.add_argument("--emit-csv")
    sp.add_argument("--emit-dot")
    sp = add("approx", cmd_approx, "verify or thicken an approximation")
    sp.add_argument("action", choices=("check", "thicken", "identity"))
    sp.add_argument("relation", help="relation JSON (identity: the left tree)")
    sp.add_argument("right", nargs="?", help="identity: the right tree")
    sp.add_argument("-d", "--delta", type=parse_q)
    sp.add_argument("-r", "--radius", type=parse_q)
    sp.add_argument("--grid", type=int, default=2)
    sp.add_argument("-S")
    sp.add_argument("--full", action="store_true")
    sp.add_argument("-o", "--output")
    sp = add("simplex", cmd_simplex, "simplex coordinates")
    sp.add_argument("graph")
    sp = add("section", cmd_section, "section map from a reduced base")
    sp.add_argument("--base", required=True)
    sp.add_argument("--target", required=True)
    sp.add_argument("-r", "--radius", type=parse_q)
    sp = add("contract", cmd_contract, "sampled contraction path")
    sp.add_argument("--base", required=True)
    sp.add_argument("--target", required=True)
    sp.add_argument("-t", "--times", type=parse_times)
    sp.add_argument("-r", "--radius", type=parse_q)
    sp.add_argument("-S")
    sp.add_argument("--words", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--simplex-steps", type=int, default=0)
    sp.add_argument("--emit-csv")
    sp.add_argument("--emit-dot")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verb == "approx" and args.action == "identity" and not args.right:
        parser.error("approx identity needs LEFT and RIGHT trees")
    try:
        report = args.fn(args)
    except UsageError as err:
        print(dump({"error": "UsageError", "message": str(err)}))
        return 2
    except GraphError as err:
        out = err.report()
        msg = out.pop("message", None)
        if msg:
            print(msg, file=sys.stderr)
        print(dump(out))
        return 1
    print(dump(report))
    return 0


if __name__ == "__main__":
    sys.exit(main())
