"""Command-line interface: check, run, ask, stable, graph.

Exit codes for ``check``: 0 when any requested property is satisfied, 1
when all are violated, 2 when none is satisfied and at least one is
unknown.  ``ask`` exits 0/1/2 for yes / definitive no / no-within-budget.
All other successful invocations exit 0; input and usage errors exit 3.
JSON outputs carry a top-level {"version": 1}.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from . import __version__
from .acyclicity import analyze, build
from .chase import Budget, Criterion, answer, run, trace_jsonl
from .nonmonotonic import TreeBudget, nm_analyze, stable_sets
from .parser import KBError, KnowledgeBase, atoms_json, atoms_text, parse, parse_atoms
from .rules import pos
from .unification import UnifierCapError, grd

PROPERTY_ALIASES = {
    "agrd": "aGRD",
    "wa": "wa",
    "wad": "wa^D",
    "wa^d": "wa^D",
    "wau": "wa^U",
    "wa^u": "wa^U",
    "wau+": "wa^U+",
    "wa^u+": "wa^U+",
}
ALL_PROPERTIES = ("aGRD", "wa", "wa^D", "wa^U", "wa^U+")


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise CliError(str(e))


def _load(path: str) -> KnowledgeBase:
    try:
        return parse(_read(path))
    except KBError as e:
        raise CliError(str(e))


def _criterion(name: str) -> Criterion:
    try:
        return Criterion(name)
    except ValueError:
        raise CliError("unknown chase criterion %r" % name)


def _properties(spec: Optional[str]) -> List[str]:
    if not spec:
        return list(ALL_PROPERTIES)
    out = []
    for raw in spec.split(","):
        key = raw.strip().lower()
        if key not in PROPERTY_ALIASES:
            raise CliError("unknown property %r (choose from %s)"
                           % (raw.strip(), ", ".join(ALL_PROPERTIES)))
        out.append(PROPERTY_ALIASES[key])
    return out


def cmd_check(args) -> int:
    kb = _load(args.path)
    wanted = _properties(args.properties)
    if kb.has_negation and not args.positive_only:
        report = nm_analyze(kb.rules)
    else:
        rules = [pos(r) for r in kb.rules] if args.positive_only else kb.rules
        report = analyze(rules, negation_aware=args.negation_aware)
    verdicts = [v for v in report.verdicts if v.property in wanted]
    if args.format == "json":
        doc = report.to_json()
        doc["properties"] = [p for p in doc["properties"] if p["property"] in wanted]
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        shown = AnalysisView(report, wanted)
        print(shown, end="")
    if any(v.outcome == "satisfied" for v in verdicts):
        return 0
    if any(v.outcome == "unknown" for v in verdicts):
        return 2
    return 1


class AnalysisView:
    def __init__(self, report, wanted):
        self.report = report
        self.wanted = wanted

    def __str__(self):
        lines = []
        for v in self.report.verdicts:
            if v.property not in self.wanted:
                continue
            line = "%-8s %s" % (v.property, v.outcome)
            if v.witness is not None:
                line += "  (%s)" % v.witness.describe()
            lines.append(line)
        lines.append("")
        lines.append("chase termination guarantees:")
        for variant, state in self.report.chase.items():
            lines.append("  %-10s %s" % (variant, state))
        if self.report.negation_aware:
            if self.report.dropped_rules:
                lines.append("self-blocking rules dropped: %s"
                             % ", ".join(self.report.dropped_rules))
            for k, v in sorted(self.report.stable.items()):
                lines.append("  %-18s %s" % (k, v))
        return "\n".join(lines) + "\n"


def cmd_run(args) -> int:
    kb = _load(args.path)
    crit = _criterion(args.chase)
    budget = Budget(max_rounds=args.max_rounds, max_steps=args.max_steps)
    try:
        result = run(kb.facts, [pos(r) for r in kb.rules] if args.positive_only
                     else kb.rules, crit, budget)
    except ValueError as e:
        raise CliError(str(e))
    if args.trace:
        print(trace_jsonl(result))
    if args.format == "json":
        print(json.dumps({
            "version": 1,
            "status": result.status,
            "rounds": result.rounds,
            "atoms": atoms_json(result.produced),
        }, indent=2, sort_keys=True))
    else:
        print("status: %s (%d rounds, %d atoms)"
              % (result.status, result.rounds, len(result.produced)))
        for a in sorted(result.produced, key=str):
            print("%s." % a)
    return 0


def cmd_ask(args) -> int:
    kb = _load(args.path)
    crit = _criterion(args.chase)
    budget = Budget(max_rounds=args.max_rounds, max_steps=args.max_steps)
    try:
        query = parse_atoms(args.query.lstrip("?").strip(), scope="?cli")
    except KBError as e:
        raise CliError("bad query: %s" % e)
    try:
        res = answer(kb.facts, kb.rules, query, crit, budget)
    except ValueError as e:
        raise CliError(str(e))
    print(res.answer)
    return {"yes": 0, "no": 1, "no-within-budget": 2}[res.answer]


def cmd_stable(args) -> int:
    kb = _load(args.path)
    crit = _criterion(args.chase)
    if crit not in (Criterion.SKOLEM, Criterion.CORE):
        raise CliError(
            "stable sets require --chase skolem or --chase core; the other "
            "variants can produce non-equivalent stable sets from equivalent "
            "knowledge bases")
    budget = TreeBudget(max_depth=args.max_depth, max_nodes=args.max_nodes)
    res = stable_sets(kb.facts, kb.rules, crit, budget)
    if args.format == "json":
        print(json.dumps({
            "version": 1,
            "stable_sets": [
                {"atoms": atoms_json(s.atoms), "criterion": str(s.criterion)}
                for s in res.stable_sets
            ],
            "exhaustive": res.exhaustive,
            "explored_nodes": res.explored,
        }, indent=2, sort_keys=True))
    else:
        print("%d stable set(s); exhaustive=%s; explored %d node(s)"
              % (len(res.stable_sets), res.exhaustive, res.explored))
        for i, s in enumerate(res.stable_sets, 1):
            print("[%d] %s" % (i, atoms_text(s.atoms)))
    return 0


def cmd_graph(args) -> int:
    kb = _load(args.path)
    try:
        g = grd(kb.rules, negation_aware=args.negation_aware)
        if args.kind == "grd":
            print(g.to_dot(), end="")
            return 0
        kind = {"pgf": "full", "pgd": "dependency", "pgu": "unifier"}[args.kind]
        pg = build(kind, kb.rules, g, negation_aware=args.negation_aware)
    except UnifierCapError as e:
        raise CliError("graph construction hit an enumeration cap: %s" % e)
    print(pg.to_dot(), end="")
    return 0


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="exrules",
                description="Chase engines, termination analysis and stable "
                            "sets for existential rules")
    p.add_argument("--version", action="version", version="exrules " + __version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common_chase(sp):
        sp.add_argument("--chase", default="skolem",
                        choices=[c.value for c in Criterion])
        sp.add_argument("--max-rounds", type=int, default=64)
        sp.add_argument("--max-steps", type=int, default=10000)

    sp = sub.add_parser("check", help="acyclicity properties and chase guarantees")
    sp.add_argument("path")
    sp.add_argument("--properties", default=None,
                    help="comma list: aGRD,wa,waD,waU,waU+ (default all)")
    sp.add_argument("--negation-aware", action="store_true")
    sp.add_argument("--positive-only", action="store_true",
                    help="analyze pos() of the rules, ignoring negative bodies")
    sp.add_argument("--format", choices=("text", "json"), default="text")
    sp.set_defaults(fn=cmd_check)

    sp = sub.add_parser("run", help="saturate the facts under the rules")
    sp.add_argument("path")
    common_chase(sp)
    sp.add_argument("--positive-only", action="store_true")
    sp.add_argument("--trace", action="store_true",
                    help="emit one derivation step per line as JSON before the result")
    sp.add_argument("--format", choices=("text", "json"), default="text")
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("ask", help="boolean query answering by saturation")
    sp.add_argument("path")
    sp.add_argument("query", help='e.g. "hasParent(a,X)"')
    common_chase(sp)
    sp.set_defaults(fn=cmd_ask)

    sp = sub.add_parser("stable", help="stable sets of a knowledge base with negation")
    sp.add_argument("path")
    sp.add_argument("--chase", default="skolem",
                    choices=[c.value for c in Criterion])
    sp.add_argument("--max-depth", type=int, default=64)
    sp.add_argument("--max-nodes", type=int, default=5000)
    sp.add_argument("--format", choices=("text", "json"), default="text")
    sp.set_defaults(fn=cmd_stable)

    sp = sub.add_parser("graph", help="export the GRD or a position graph as DOT")
    sp.add_argument("path")
    sp.add_argument("--kind", choices=("grd", "pgf", "pgd", "pgu"), required=True)
    sp.add_argument("--negation-aware", action="store_true")
    sp.add_argument("--format", choices=("dot",), default="dot")
    sp.set_defaults(fn=cmd_graph)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = make_parser().parse_args(argv)
        return args.fn(args)
    except CliError as e:
        print("error: %s" % e, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
