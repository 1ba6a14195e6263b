"""Command-line front end.

Exit codes: 0 success, 1 an expectation or differential check failed,
2 usage or input error, 3 a search ran out of budget.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .certify import Claim, certify_rigidity, certify_strong_rigidity
from .digraph import GraphError, to_dot
from .endosearch import (
    BUDGET_ENV,
    ORACLE_CAP,
    Budget,
    Mode,
    SearchConstraints,
    default_budget,
    enumerate_automorphisms,
    enumerate_endomorphisms,
    naive_oracle,
    random_digraph,
)
from .folog import FormulaError, FOStructure, formula_catalog, free_vars, parse, satisfies
from .gadgets import (
    BlowupSpec,
    GadgetGraph,
    blow_up,
    build_berkeley,
    build_finite_kappa,
    build_lex_order,
    build_ordinal_case,
    build_rank_copies,
    build_ray,
    drop_prefix_arrows,
    gadget_from_document,
)
from .hf import HFError, build_closure_N, build_universe, parse_hf

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3


class CliError(Exception):
    pass


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def _budget(args: argparse.Namespace) -> Budget:
    if args.max_nodes is None and args.max_seconds is None:
        return default_budget()
    return Budget(args.max_nodes, args.max_seconds)


def _load_gadget(path: str) -> GadgetGraph:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read graph {path}: {exc}") from exc
    return gadget_from_document(doc)


def _catalog(args: argparse.Namespace, u):
    if args.catalog in (None, "builtin"):
        return formula_catalog(u, args.arity)
    lines = Path(args.catalog).read_text().splitlines()
    formulas = [parse(line) for line in lines if line.strip() and not line.lstrip().startswith("#")]
    return formula_catalog(u, args.arity, extra=formulas, numerals=0, structural=False)


def _vertex_list(text: str | None) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()] if text else []


# gadget


def _gadget(args: argparse.Namespace) -> GadgetGraph:
    kind = args.kind
    if kind == "ray":
        return build_ray(args.n)
    if kind == "lex":
        points = []
        for item in args.points.split(","):
            r, _, xi = item.partition(":")
            points.append((r, int(xi)))
        return build_lex_order(points)
    if kind == "finite-kappa":
        parts = [p.split(",") for p in args.parts.split(";")]
        return build_finite_kappa(parts, args.L, args.h_size, prefix=not args.no_prefix)
    u = build_universe(args.level)
    if kind == "ordinal-case":
        return build_ordinal_case(u, _catalog(args, u), args.arity)
    if kind == "berkeley":
        chain = None if args.chain in (None, "auto") else int(args.chain)
        return build_berkeley(u, _catalog(args, u), chain, args.arity)
    if kind == "rank-copies":
        return build_rank_copies(build_closure_N(u, args.arity))
    if kind == "blowup":
        base = build_ordinal_case(u, _catalog(args, u), args.arity)
        if args.spec:
            raw = json.loads(Path(args.spec).read_text())
            spec = BlowupSpec({int(v): tuple(rs) for v, rs in raw["labels"].items()}, int(raw["L"]))
        else:
            sizes = {}
            for item in args.class_size or []:
                key, _, k = item.rpartition("=")
                sizes[_set_vertex(base, key)] = int(k)
            spec = BlowupSpec.uniform(base, args.L, sizes)
        gg = blow_up(base, spec, prefix=not args.no_prefix)
        return drop_prefix_arrows(gg) if args.drop_prefix_arrows else gg
    raise CliError(f"unknown gadget {kind}")


def _set_vertex(base: GadgetGraph, key: str) -> int:
    """A set-side vertex named by id, by a set in brace notation, or by ``c:SET`` for its copy."""
    key = key.strip()
    if key.isdigit():
        return int(key)
    if key.startswith("c:"):
        return base.vertex("NC", parse_hf(key[2:]), 0)
    return base.vertex("N", parse_hf(key))


def cmd_gadget(args: argparse.Namespace) -> int:
    gg = _gadget(args)
    _write(gg.to_json(), args.out)
    print(gg.hash(), file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


# certify

_EXPECT = {c.value: c for c in Claim}


def cmd_certify(args: argparse.Namespace) -> int:
    gg = _load_gadget(args.graph)
    budget = _budget(args)
    if args.mode == "rigid":
        cert = certify_rigidity(gg, budget)
    else:
        cert = certify_strong_rigidity(gg, budget, battery=not args.no_battery)
    _write(_dump(cert.to_document()), args.out)
    print(cert.summary(), file=sys.stderr)
    if cert.claim is Claim.INCONCLUSIVE:
        return EXIT_INCONCLUSIVE
    if args.expect is not None and cert.claim is not _EXPECT[args.expect]:
        return EXIT_FAILED
    return EXIT_OK


def cmd_search(args: argparse.Namespace) -> int:
    gg = _load_gadget(args.graph)
    c = SearchConstraints(
        must_fix=frozenset(_vertex_list(args.fix)),
        must_move=frozenset(_vertex_list(args.move)),
        mode=Mode(args.mode),
        nontrivial_only=args.nontrivial,
        injective=args.injective,
    )
    if args.automorphisms:
        res = enumerate_automorphisms(gg.graph, c, _budget(args))
    else:
        res = enumerate_endomorphisms(gg.graph, c, _budget(args), threads=args.threads)
    maps = sorted(res.maps)
    doc = {
        "graph_hash": gg.hash(),
        "status": res.status,
        "count": res.count,
        "maps": [list(h) for h in maps],
        "stats": res.stats.as_dict(),
    }
    _write(_dump(doc), args.out)
    return EXIT_INCONCLUSIVE if res.inconclusive else EXIT_OK


def cmd_sat(args: argparse.Namespace) -> int:
    u = build_universe(args.level)
    s = FOStructure.from_universe(u)
    f = parse(args.formula)
    assignment = {}
    for item in args.assign or []:
        var, sep, text = item.partition("=")
        if not sep:
            raise CliError(f"assignment {item!r} is not of the form var=set")
        x = parse_hf(text)
        if x not in u:
            raise CliError(f"{x} is not an element of V_{args.level}")
        assignment[var.strip()] = x
    if args.each:
        free = free_vars(f)
        if args.each not in free:
            raise CliError(f"{args.each} is not free in the formula")
        for x in u.elements:
            print(f"{x.render()} {str(satisfies(s, f, {**assignment, args.each: x})).lower()}")
        return EXIT_OK
    print(str(satisfies(s, f, assignment)).lower())
    return EXIT_OK


def cmd_export_dot(args: argparse.Namespace) -> int:
    gg = _load_gadget(args.graph)
    _write(to_dot(gg.graph, gg.kind), args.out)
    return EXIT_OK


def oracle_diff(count: int, max_n: int, seed: int, densities: Sequence[float], loop_density: float = 0.0) -> dict[str, Any]:
    """Seeded random digraphs; solver and brute force must agree on every one."""
    if max_n > ORACLE_CAP:
        raise CliError(f"--max-n {max_n} exceeds the oracle cap of {ORACLE_CAP}")
    if max_n < 1 or count < 0:
        raise CliError("--max-n must be positive and --count non-negative")
    rng = random.Random(seed)
    rows = []
    mismatches = 0
    for i in range(count):
        n = rng.randint(1, max_n)
        density = densities[i % len(densities)]
        g = random_digraph(n, density, rng, loop_density)
        endo = enumerate_endomorphisms(g).maps
        auto = enumerate_automorphisms(g).maps
        endo_ok = endo == naive_oracle(g)
        auto_ok = auto == naive_oracle(g, SearchConstraints(injective=True))
        mismatches += (not endo_ok) + (not auto_ok)
        rows.append(
            {"n": n, "density": density, "arrows": len(g.arrows), "endomorphisms": len(endo), "automorphisms": len(auto), "agree": endo_ok and auto_ok}
        )
    return {"seed": seed, "count": count, "max_n": max_n, "mismatches": mismatches, "graphs": rows}


def cmd_oracle_diff(args: argparse.Namespace) -> int:
    densities = [float(d) for d in args.densities.split(",")]
    report = oracle_diff(args.count, args.max_n, args.seed, densities, args.loop_density)
    _write(_dump(report), args.out)
    print(f"{report['count']} graphs, {report['mismatches']} mismatches", file=sys.stderr)
    return EXIT_FAILED if report["mismatches"] else EXIT_OK


def _budget_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-nodes", type=int, help=f"search node budget (default: ${BUDGET_ENV} or unlimited)")
    p.add_argument("--max-seconds", type=float, help="search wall-clock budget")


def _universe_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--level", type=int, default=2, help="universe level n of V_n (default 2)")
    p.add_argument("--arity", type=int, default=2, help="tuple arity bound (default 2)")
    p.add_argument("--catalog", default="builtin", help="'builtin' or a file with one formula per line")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rigidgraph",
        description="Build rigid-digraph gadgets and certify them.",
        epilog=f"exit codes: 0 ok, 1 check failed, 2 usage or input error, 3 inconclusive (budget). "
        f"{BUDGET_ENV} sets the default node budget.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="JSON file of option defaults; flags win over it")
    sub = parser.add_subparsers(dest="command", required=True)

    gp = sub.add_parser("gadget", help="compile a gadget to the graph interchange format")
    gsub = gp.add_subparsers(dest="kind", required=True)
    for name, help_text in [
        ("ray", "triangle-with-chord ray"),
        ("lex", "lexicographic order on (string, ordinal) points"),
        ("finite-kappa", "labelled parts pinned by w-tags, optional prefix family"),
        ("ordinal-case", "membership gadget with the code order on the copy"),
        ("blowup", "ordinal-case gadget with set vertices blown up into classes"),
        ("berkeley", "membership gadget rooted at a long chain"),
        ("rank-copies", "three copies under membership, rank-guarded non-membership and rank order"),
    ]:
        p = gsub.add_parser(name, help=help_text)
        p.add_argument("--out", help="output file (default stdout)")
        if name == "ray":
            p.add_argument("--n", type=int, default=6)
        elif name == "lex":
            p.add_argument("--points", required=True, help="comma-separated string:ordinal, e.g. 0:0,1:0,0:1")
        elif name == "finite-kappa":
            p.add_argument("--parts", required=True, help="parts separated by ';', labels by ','")
            p.add_argument("--L", type=int, default=3)
            p.add_argument("--h-size", type=int, default=0)
            p.add_argument("--no-prefix", action="store_true")
        else:
            _universe_flags(p)
        if name == "berkeley":
            p.add_argument("--chain", default="auto", help="chain length or 'auto' (non-chain count + 1)")
        if name == "blowup":
            p.set_defaults(level=1)
            p.add_argument("--L", type=int, default=2, help="label length (default 2)")
            p.add_argument("--class-size", action="append", help="KEY=K: enlarge a class; KEY is a vertex id, a set like {} or c:{} for its copy")
            p.add_argument("--spec", help="JSON blow-up spec {'L': .., 'labels': {vertex: [..]}}")
            p.add_argument("--no-prefix", action="store_true", help="leave out the prefix family")
            p.add_argument("--drop-prefix-arrows", action="store_true", help="keep the prefix family, drop its arrows")
        p.set_defaults(func=cmd_gadget)

    p = sub.add_parser("certify", help="certify (strong) rigidity of a graph file")
    p.add_argument("graph")
    p.add_argument("--mode", choices=["strong", "rigid"], default="strong")
    p.add_argument("--expect", choices=sorted(_EXPECT), help="exit 1 unless the claim matches")
    p.add_argument("--no-battery", action="store_true")
    p.add_argument("--out")
    _budget_flags(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("search", help="enumerate, count or find endomorphisms")
    p.add_argument("graph")
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.ENUMERATE.value)
    p.add_argument("--nontrivial", action="store_true")
    p.add_argument("--injective", action="store_true")
    p.add_argument("--automorphisms", action="store_true")
    p.add_argument("--fix", help="comma-separated vertices that must be fixed")
    p.add_argument("--move", help="comma-separated vertices that must move")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out")
    _budget_flags(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("sat", help="evaluate a formula in (V_n, in)")
    p.add_argument("--level", type=int, default=2)
    p.add_argument("--formula", required=True)
    p.add_argument("--assign", action="append", help="var=set in brace notation, e.g. x={}")
    p.add_argument("--each", help="print the value for every element assigned to this variable")
    p.set_defaults(func=cmd_sat)

    p = sub.add_parser("export-dot", help="render a graph file as DOT")
    p.add_argument("graph")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_dot)

    p = sub.add_parser("oracle-diff", help="compare the solver with brute force on random digraphs")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--max-n", type=int, default=7)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--densities", default="0.2,0.5,0.8")
    p.add_argument("--loop-density", type=float, default=0.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle_diff)
    return parser


def _all_parsers(parser: argparse.ArgumentParser):
    yield parser
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sp in action.choices.values():
                yield from _all_parsers(sp)


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.Namespace:
    first = parser.parse_args(argv)
    if not first.config:
        return first
    try:
        config = json.loads(Path(first.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {first.config}: {exc}") from exc
    if not isinstance(config, dict):
        raise CliError("config file must hold a JSON object")
    # config values become parser defaults, so explicit flags still win
    config = {k.replace("-", "_"): v for k, v in config.items()}
    for p in _all_parsers(parser):
        p.set_defaults(**config)
    return parser.parse_args(argv)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
        return args.func(args)
    except (CliError, GraphError, HFError, FormulaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
