"""Batch command-line interface: check, resolve, verify, principalize, sample.

Documents are JSON.  A system document carries a denominator, the index set,
a stratum family (either in full or just the closed strata, with a flag) and
the generators per stratum, keyed by comma-joined sorted ids with "p/q"
rational coordinates.  A monomial-ideal document replaces the polyhedra with
a divisor exponent list.  Traces are JSON lines: one header object, then one
object per step.

Exit codes: 0 ok, 1 internal error, 2 parse/validation error, 3 verification
mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import apps, oracle
from . import system as sysmod
from .errors import ParseError, PolyfabError, ReplayError
from .fabric import SupportFabric, connected_components, format_stratum, stratum
from .polyhedron import ExponentVector, make
from .resolve import (
    KIND_CHAR,
    KIND_MODERATED,
    KIND_TOTAL,
    Center,
    ResolutionTrace,
    moderated_sequence_with_final,
    replay,
    resolve_with_final,
    snapshot,
)
from .system import PolyhedraSystem, classify, delta_max, sing, spi_report, validate

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_PARSE = 2
EXIT_MISMATCH = 3


# -- document parsing and printing ---------------------------------------------


def _stratum_key_str(j) -> str:
    return ",".join(str(i) for i in j)


def _parse_stratum_key(key: str):
    if key == "":
        return ()
    try:
        return stratum(int(p) for p in key.split(","))
    except (ValueError, PolyfabError) as exc:
        raise ParseError(f"bad stratum key {key!r}: {exc}") from exc


def _parse_coord(value) -> Fraction:
    if isinstance(value, bool):
        raise ParseError(f"bad coordinate {value!r}")
    if isinstance(value, int):
        out = Fraction(value)
    elif isinstance(value, str):
        try:
            out = Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"bad coordinate {value!r}: {exc}") from exc
    else:
        raise ParseError(f"coordinates must be integers or 'p/q' strings, got {value!r}")
    if out < 0:
        raise ParseError(f"negative coordinate {value!r}")
    return out


def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}") from exc


def _build_fabric(doc) -> SupportFabric:
    try:
        indices = stratum(doc["indices"])
        listed = [stratum(j) for j in doc["strata"]]
    except KeyError as exc:
        raise ParseError(f"document missing field {exc}") from exc
    except (TypeError, PolyfabError) as exc:
        raise ParseError(f"bad indices/strata: {exc}") from exc
    closed_only = bool(doc.get("closed_strata_only", False))
    try:
        if closed_only:
            fam = {()}
            for top in listed:
                from .fabric import power_set
                fam.update(power_set(top))
            return SupportFabric(indices, frozenset(fam))
        return SupportFabric(indices, frozenset(listed))
    except PolyfabError as exc:
        raise ParseError(f"bad stratum family: {exc}") from exc


def load_system_document(path: str) -> PolyhedraSystem:
    doc = _load_json(path)
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be an object")
    kind = doc.get("kind", "system")
    if kind == "monomial_ideal":
        return apps.from_monomial_ideal(load_monomial_document(path))
    if kind != "system":
        raise ParseError(f"unknown document kind {kind!r}")
    denom = doc.get("denominator")
    if not isinstance(denom, int) or isinstance(denom, bool) or denom < 1:
        raise ParseError(f"field 'denominator': expected a positive integer, got {denom!r}")
    fabric = _build_fabric(doc)
    polys_doc = doc.get("polyhedra")
    if not isinstance(polys_doc, dict):
        raise ParseError("field 'polyhedra': expected an object")
    given = {}
    for key, rows in polys_doc.items():
        j = _parse_stratum_key(key)
        if j not in fabric.strata:
            raise ParseError(f"polyhedron key {key!r} is not a stratum")
        if not isinstance(rows, list) or not rows:
            raise ParseError(f"polyhedron {key!r}: expected a nonempty list of generators")
        gens = []
        for row in rows:
            if not isinstance(row, list) or len(row) != len(j):
                raise ParseError(f"polyhedron {key!r}: generator arity mismatch")
            gens.append(ExponentVector(j, tuple(_parse_coord(c) for c in row)))
        try:
            given[j] = make(gens, denom)
        except PolyfabError as exc:
            raise ParseError(f"polyhedron {key!r}: {exc}") from exc
    closed = fabric.closed_points()
    missing = [k for k in closed if k not in given]
    if missing:
        raise ParseError(f"missing polyhedron for closed stratum {format_stratum(missing[0])}")
    try:
        system = sysmod.from_closed_strata(fabric, {k: given[k] for k in closed}, denom)
    except PolyfabError as exc:
        raise ParseError(str(exc)) from exc
    for j, p in given.items():
        if j in set(closed):
            continue
        if system.polyhedra[j].generators != p.generators:
            raise ParseError(
                f"given polyhedron at {format_stratum(j)} disagrees with the projection"
            )
    return system


def load_monomial_document(path: str) -> apps.MonomialIdealData:
    doc = _load_json(path)
    if doc.get("kind") != "monomial_ideal":
        raise ParseError(f"{path}: expected a monomial_ideal document")
    fabric = _build_fabric(doc)
    divisors = doc.get("divisors")
    if not isinstance(divisors, list) or not divisors:
        raise ParseError("field 'divisors': expected a nonempty list")
    try:
        return apps.MonomialIdealData(fabric, [tuple(d) for d in divisors])
    except (TypeError, PolyfabError) as exc:
        raise ParseError(f"bad divisors: {exc}") from exc


def system_document(system: PolyhedraSystem) -> dict:
    """Canonical document for a system; parsing it back yields the same system."""
    return {
        "kind": "system",
        "denominator": system.denominator,
        "indices": list(system.fabric.indices),
        "strata": [list(j) for j in system.strata_sorted()],
        "polyhedra": {
            _stratum_key_str(j): [
                [_coord_str(c) for c in g.coords] for g in system.polyhedra[j].generators
            ]
            for j in system.strata_sorted()
        },
    }


def _coord_str(c: Fraction):
    return int(c) if c.denominator == 1 else str(c)


def dump_system_document(system: PolyhedraSystem) -> str:
    return json.dumps(system_document(system), indent=1, sort_keys=False) + "\n"


# -- trace serialization ---------------------------------------------------------


def trace_lines(trace: ResolutionTrace) -> list[str]:
    header = {
        "polyfab_trace": 1,
        "mode": trace.mode,
        "moderation": trace.moderation,
    }
    out = [json.dumps(header, separators=(",", ":"))]
    for s in trace.steps:
        rec = {
            "step": s.index,
            "center": list(s.center.stratum),
            "kind": s.center.kind,
            "branch": s.branch,
            "delta_before": str(s.before.delta),
            "delta_after": str(s.after.delta),
            "spi_before": str(s.before.spi),
            "spi_after": str(s.after.spi),
            "new_index": s.new_index,
        }
        if s.center.kind == KIND_MODERATED:
            rec["moderation"] = s.center.moderation
        out.append(json.dumps(rec, separators=(",", ":")))
    return out


def dump_trace(trace: ResolutionTrace) -> str:
    return "\n".join(trace_lines(trace)) + "\n"


def parse_trace(text: str):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParseError("empty trace")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ParseError(f"trace header: {exc}") from exc
    if not isinstance(header, dict) or header.get("polyfab_trace") != 1:
        raise ParseError("not a polyfab trace file")
    mode = header.get("mode", KIND_CHAR)
    if mode not in (KIND_CHAR, KIND_MODERATED, KIND_TOTAL):
        raise ParseError(f"unknown trace mode {mode!r}")
    moderation = header.get("moderation")
    records = []
    for k, ln in enumerate(lines[1:]):
        try:
            rec = json.loads(ln)
        except json.JSONDecodeError as exc:
            raise ParseError(f"trace step {k}: {exc}") from exc
        records.append(rec)
    return header, records


def _record_center(rec, mode, moderation) -> Center:
    try:
        s = stratum(rec["center"])
    except (KeyError, TypeError, PolyfabError) as exc:
        raise ParseError(f"trace step {rec.get('step')}: bad center: {exc}") from exc
    kind = rec.get("kind", mode)
    return Center(s, kind, rec.get("moderation", moderation) if kind == KIND_MODERATED else None)


# -- commands --------------------------------------------------------------------


def cmd_check(path: str, out=sys.stdout) -> int:
    try:
        system = load_system_document(path)
    except ParseError as exc:
        print(f"invalid: {exc}", file=out)
        return EXIT_PARSE
    report = validate(system)
    if not report.ok:
        print("invalid: " + "; ".join(report.problems), file=out)
        return EXIT_PARSE
    print("valid: yes", file=out)
    cls = classify(system)
    print(f"classification: {cls.value}", file=out)
    print(f"delta: {delta_max(system)}", file=out)
    print(f"spi: {spi_report(system).spi}", file=out)
    singular = sing(system)
    print(f"sing: {len(singular)} strata", file=out)
    if singular:
        comps = connected_components(system.fabric, singular)
        for k, comp in enumerate(comps):
            note = ""
            if delta_max(system) == 1:
                reduced = sysmod.reduce_system(system, comp)
                cands = sysmod.maximal_contact_candidates(reduced)
                note = (
                    f" (maximal contact: {format_stratum(cands[0])})"
                    if cands
                    else " (no maximal contact)"
                )
            strata_str = " ".join(format_stratum(j) for j in comp)
            print(f"  component {k + 1}: {strata_str}{note}", file=out)
    return EXIT_OK


def _parse_mode(mode: str):
    if mode == "characteristic":
        return KIND_CHAR, None
    if mode.startswith("moderated:"):
        try:
            level = int(mode.split(":", 1)[1])
        except ValueError as exc:
            raise ParseError(f"bad moderation level in {mode!r}") from exc
        if level < 1:
            raise ParseError("moderation level must be at least 1")
        return KIND_MODERATED, level
    raise ParseError(f"unknown mode {mode!r}")


def cmd_resolve(path: str, mode: str = "characteristic", trace_path=None,
                budget=None, out=sys.stdout) -> int:
    try:
        kind, level = _parse_mode(mode)
        system = load_system_document(path)
        if kind == KIND_MODERATED and system.denominator != 1:
            raise ParseError("moderated mode needs a document with denominator 1")
    except ParseError as exc:
        print(f"error: {exc}", file=out)
        return EXIT_PARSE
    if kind == KIND_CHAR:
        trace, final = resolve_with_final(system, budget)
    else:
        trace, final = moderated_sequence_with_final(system, level, budget)
    text = dump_trace(trace)
    if trace_path:
        with open(trace_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)
    max_denom = max(
        [s.actual_denominator for s in final.polyhedra.values()]
        + [s.actual_denominator for s in system.polyhedra.values()]
    )
    print(f"steps: {len(trace.steps)}", file=out)
    print(f"final dimension: {final.dimension()}", file=out)
    print(f"max denominator: {max_denom}", file=out)
    if kind == KIND_MODERATED:
        print(f"final delta: {delta_max(final)} < {level}", file=out)
    return EXIT_OK


def cmd_verify(path: str, trace_file: str, out=sys.stdout) -> int:
    try:
        system = load_system_document(path)
        with open(trace_file, "r", encoding="utf-8") as fh:
            header, records = parse_trace(fh.read())
    except ParseError as exc:
        print(f"error: {exc}", file=out)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: {exc}", file=out)
        return EXIT_PARSE
    mode = header.get("mode", KIND_CHAR)
    moderation = header.get("moderation")
    cur = system
    for rec in records:
        idx = rec.get("step")
        try:
            center = _record_center(rec, mode, moderation)
        except ParseError as exc:
            print(f"mismatch at step {idx}: {exc}", file=out)
            return EXIT_MISMATCH
        before = snapshot(cur)
        try:
            cur, snaps = replay(cur, [center])
        except ReplayError as exc:
            print(f"mismatch at step {idx}: {exc}", file=out)
            return EXIT_MISMATCH
        after = snaps[-1]
        expected = {
            "delta_before": str(before.delta),
            "delta_after": str(after.delta),
            "spi_before": str(before.spi),
            "spi_after": str(after.spi),
        }
        for key, val in expected.items():
            if key in rec and rec[key] != val:
                print(f"mismatch at step {idx}: {key} is {val}, trace says {rec[key]}",
                      file=out)
                return EXIT_MISMATCH
        if "new_index" in rec and rec["new_index"] != max(cur.fabric.indices):
            print(f"mismatch at step {idx}: new index is {max(cur.fabric.indices)}, "
                  f"trace says {rec['new_index']}", file=out)
            return EXIT_MISMATCH
    if mode == KIND_CHAR:
        if sing(cur):
            print("mismatch: final system is still singular", file=out)
            return EXIT_MISMATCH
    elif mode == KIND_MODERATED:
        if delta_max(cur) >= (moderation or 1):
            print("mismatch: final contact exponent not below the moderation level", file=out)
            return EXIT_MISMATCH
    else:
        if not apps.is_principal(cur):
            print("mismatch: final system is not single-vertex everywhere", file=out)
            return EXIT_MISMATCH
    print(f"verified: {len(records)} steps", file=out)
    return EXIT_OK


def cmd_principalize(path: str, trace_path=None, budget=None, out=sys.stdout) -> int:
    try:
        data = load_monomial_document(path)
    except ParseError as exc:
        print(f"error: {exc}", file=out)
        return EXIT_PARSE
    newton = apps.from_monomial_ideal(data)
    trace, final = apps.principalize_with_final(newton, budget)
    text = dump_trace(trace)
    if trace_path:
        with open(trace_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)
    print(f"steps: {len(trace.steps)}", file=out)
    original = set(newton.fabric.indices)
    charts = [
        j for j in final.strata_sorted() if set(j) - original
    ] or [j for j in final.fabric.closed_points()]
    print(f"charts: {len(charts)}", file=out)
    for j in charts:
        gen = final.polyhedra[j].generators[0]
        print(f"  {_stratum_key_str(j)}: ({','.join(str(c) for c in gen.coords)})", file=out)
    return EXIT_OK


def cmd_sample(seed: int, max_indices: int, max_generators: int, max_numerator: int,
               denominators, out=sys.stdout) -> int:
    spec = oracle.RandomSpec(
        max_indices=max_indices,
        max_generators=max_generators,
        max_numerator=max_numerator,
        denominators=tuple(denominators),
        seed=seed,
    )
    out.write(dump_system_document(oracle.random_system(spec)))
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="polyfab",
        description="exact combinatorial desingularization of polyhedra systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="validate and classify a system document")
    p.add_argument("path")

    p = sub.add_parser("resolve", help="emit a desingularization trace")
    p.add_argument("path")
    p.add_argument("--mode", default="characteristic",
                   help="characteristic (default) or moderated:<d>")
    p.add_argument("--trace", dest="trace_path", default=None, help="trace output file")
    p.add_argument("--budget", type=int, default=None, help="step budget override")

    p = sub.add_parser("verify", help="replay a trace against a document")
    p.add_argument("path")
    p.add_argument("trace")

    p = sub.add_parser("principalize", help="total-transform sequence for a monomial ideal")
    p.add_argument("path")
    p.add_argument("--trace", dest="trace_path", default=None)
    p.add_argument("--budget", type=int, default=None)

    p = sub.add_parser("sample", help="emit a random system document")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-indices", type=int, default=4)
    p.add_argument("--max-generators", type=int, default=4)
    p.add_argument("--max-numerator", type=int, default=4)
    p.add_argument("--denominators", default="1,2,3")

    args = parser.parse_args(argv)
    try:
        if args.command == "check":
            return cmd_check(args.path)
        if args.command == "resolve":
            return cmd_resolve(args.path, args.mode, args.trace_path, args.budget)
        if args.command == "verify":
            return cmd_verify(args.path, args.trace)
        if args.command == "principalize":
            return cmd_principalize(args.path, args.trace_path, args.budget)
        if args.command == "sample":
            denoms = [int(x) for x in args.denominators.split(",")]
            return cmd_sample(args.seed, args.max_indices, args.max_generators,
                              args.max_numerator, denoms)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except PolyfabError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_INTERNAL


def entry():
    sys.exit(main())
