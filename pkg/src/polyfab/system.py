"""Polyhedra systems: one characteristic polyhedron per stratum, coherent under
coordinate projections, together with their blow-up transforms.

The transforms keep every operation at generator level.  After each
construction the result is validated (coherence against the closed points,
grid and support checks); failures raise rather than propagate bad systems.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import fabric as fab
from .errors import (
    CoherenceError,
    DomainError,
    EmptySystemError,
    InvariantError,
    PreconditionError,
)
from .fabric import Stratum, StratumMap, SupportFabric, format_stratum, stratum, stratum_key
from .polyhedron import (
    CharPolyhedron,
    ExponentVector,
    char_push,
    empty_polyhedron,
    hironaka_project,
    lambda_push,
    make,
    point_polyhedron,
)


class Classification(enum.Enum):
    NON_SINGULAR = "NonSingular"
    QUASI_ORDINARY = "QuasiOrdinary"
    SPECIAL = "Special"
    GENERAL = "General"


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    problems: tuple[str, ...]
    violating_pair: tuple[Stratum, Stratum] | None = None


@dataclass(frozen=True)
class SpiReport:
    """Largest fitted contact exponent over the singular strata and its argmax."""

    spi: Fraction
    argmax: tuple[Stratum, ...]


@dataclass(frozen=True, eq=False)
class PolyhedraSystem:
    fabric: SupportFabric
    polyhedra: dict
    denominator: int
    all_empty: bool = False

    def __init__(self, fabric_, polyhedra, denominator, all_empty=False):
        object.__setattr__(self, "fabric", fabric_)
        object.__setattr__(self, "polyhedra", dict(polyhedra))
        object.__setattr__(self, "denominator", denominator)
        object.__setattr__(self, "all_empty", bool(all_empty))
        object.__setattr__(self, "_memo", {})

    def poly(self, j) -> CharPolyhedron:
        return self.polyhedra[stratum(j)]

    def strata_sorted(self) -> list[Stratum]:
        return self.fabric.strata_sorted()

    def dimension(self) -> int:
        return self.fabric.dimension()

    def __str__(self):
        parts = [f"{format_stratum(j)}:{self.polyhedra[j]}" for j in self.strata_sorted()]
        return f"system(d={self.denominator}; " + "; ".join(parts) + ")"


def validate(system: PolyhedraSystem) -> ValidationReport:
    """Check every system invariant; never raises.

    Coherence is checked between each stratum and the closed points above it
    (equivalent to checking all nested pairs); the first violating pair in
    canonical order is reported.
    """
    problems = []
    f = system.fabric
    if f.degenerate:
        return ValidationReport(False, ("fabric has no strata",))
    strata = set(f.strata)
    keys = set(system.polyhedra)
    if keys != strata:
        missing = sorted(strata - keys, key=stratum_key)
        extra = sorted(keys - strata, key=stratum_key)
        if missing:
            problems.append(f"missing polyhedron for stratum {format_stratum(missing[0])}")
        if extra:
            problems.append(f"polyhedron for non-stratum {format_stratum(extra[0])}")
        return ValidationReport(False, tuple(problems))
    if not isinstance(system.denominator, int) or system.denominator < 1:
        problems.append(f"declared denominator {system.denominator!r} is not a positive integer")
        return ValidationReport(False, tuple(problems))
    for j in f.strata_sorted():
        p = system.polyhedra[j]
        if p.support != j:
            problems.append(f"polyhedron at {format_stratum(j)} has support {format_stratum(p.support)}")
        for g in p.generators:
            for c in g.coords:
                if (c * system.denominator).denominator != 1:
                    problems.append(
                        f"coordinate {c} at {format_stratum(j)} is off the 1/{system.denominator} grid"
                    )
                    break
    if problems:
        return ValidationReport(False, tuple(problems))
    empties = [j for j in f.strata_sorted() if system.polyhedra[j].is_empty]
    if empties and len(empties) != len(f.strata):
        return ValidationReport(
            False,
            (f"empty polyhedron at {format_stratum(empties[0])} in a non-empty system",),
        )
    if empties:
        if system.all_empty:
            return ValidationReport(True, ())
        return ValidationReport(False, ("all polyhedra empty but the system is not flagged",))
    closed = f.closed_points()
    for j in f.strata_sorted():
        js = set(j)
        for k in closed:
            if not js <= set(k) or j == k:
                continue
            expected = system.polyhedra[k].project(j)
            if expected.generators != system.polyhedra[j].generators:
                return ValidationReport(
                    False,
                    (
                        f"coherence violation: polyhedron at {format_stratum(j)} is not the "
                        f"projection of the one at {format_stratum(k)}",
                    ),
                    (j, k),
                )
    return ValidationReport(True, ())


def build_system(fabric_, polyhedra, denominator, *, all_empty=False) -> PolyhedraSystem:
    """Construct and validate; raises CoherenceError on any violation."""
    system = PolyhedraSystem(fabric_, polyhedra, denominator, all_empty)
    report = validate(system)
    if not report.ok:
        raise CoherenceError(report.problems[0], witness=report.violating_pair)
    return system


# -- constructors ------------------------------------------------------------


def local_system(poly: CharPolyhedron, denominator: int) -> PolyhedraSystem:
    """System over the full power set of the polyhedron's support, filled by projection."""
    f = fab.local_fabric(poly.support)
    polys = {j: poly.project(j) for j in f.strata}
    return build_system(f, polys, denominator)


def from_closed_strata(fabric_, closed_polyhedra, denominator: int) -> PolyhedraSystem:
    """Fill a system from polyhedra given on the closed points only.

    Every other stratum gets the projection; disagreement between two closed
    points over a shared sub-stratum raises with the witness stratum.
    """
    closed = fabric_.closed_points()
    given = {stratum(j): p for j, p in closed_polyhedra.items()}
    if set(given) != set(closed):
        raise DomainError(
            "closed-strata input must cover exactly the closed points"
        )
    polys = {}
    for j in fabric_.strata_sorted():
        js = set(j)
        candidates = [k for k in closed if js <= set(k)]
        first = given[candidates[0]].project(j)
        for k in candidates[1:]:
            other = given[k].project(j)
            if other.generators != first.generators:
                raise CoherenceError(
                    f"closed strata {format_stratum(candidates[0])} and {format_stratum(k)} "
                    f"induce different polyhedra on {format_stratum(j)}",
                    witness=j,
                )
        polys[j] = first
    return build_system(fabric_, polys, denominator)


def restrict_system(system: PolyhedraSystem, open_family) -> PolyhedraSystem:
    f = system.fabric.restrict(open_family)
    return build_system(
        f, {j: system.polyhedra[j] for j in f.strata}, system.denominator
    )


def reduce_system(system: PolyhedraSystem, closed_family) -> PolyhedraSystem:
    f = system.fabric.reduce(closed_family)
    return build_system(
        f, {j: system.polyhedra[j] for j in f.strata}, system.denominator
    )


def fitting_system(system: PolyhedraSystem) -> PolyhedraSystem:
    _require_nonempty(system)
    polys = {j: system.polyhedra[j].fitting()[1] for j in system.fabric.strata}
    return build_system(system.fabric, polys, system.denominator)


def newton_system(system: PolyhedraSystem) -> PolyhedraSystem:
    """Scale every polyhedron by the declared denominator; the result is integral."""
    _require_nonempty(system)
    d = system.denominator
    polys = {
        j: CharPolyhedron(j, 1, tuple(g.scale(d) for g in p.generators))
        for j, p in system.polyhedra.items()
    }
    return build_system(system.fabric, polys, 1)


def divide_system(system: PolyhedraSystem, divisor: int) -> PolyhedraSystem:
    if not isinstance(divisor, int) or divisor < 1:
        raise DomainError("divisor must be a positive integer")
    _require_nonempty(system)
    d = system.denominator * divisor
    polys = {
        j: CharPolyhedron(j, d, tuple(g.scale(Fraction(1, divisor)) for g in p.generators))
        for j, p in system.polyhedra.items()
    }
    return build_system(system.fabric, polys, d)


def _require_nonempty(system: PolyhedraSystem):
    if system.all_empty:
        raise EmptySystemError("operation undefined on the all-empty system")


# -- singular locus and classification ---------------------------------------


def delta_of(system: PolyhedraSystem, j) -> Fraction:
    return system.poly(j).delta()


def sing(system: PolyhedraSystem) -> tuple[Stratum, ...]:
    """Strata with contact exponent at least 1; always a closed family."""
    _require_nonempty(system)
    out = system._memo.get("sing")
    if out is None:
        out = tuple(
            j for j in system.strata_sorted() if system.polyhedra[j].delta() >= 1
        )
        assert system.fabric.is_closed_family(out)
        system._memo["sing"] = out
    return out


def delta_max(system: PolyhedraSystem) -> Fraction:
    _require_nonempty(system)
    out = system._memo.get("delta_max")
    if out is None:
        out = max(system.polyhedra[j].delta() for j in system.fabric.strata)
        system._memo["delta_max"] = out
    return out


def classify(system: PolyhedraSystem) -> Classification:
    singular = sing(system)
    if not singular:
        return Classification.NON_SINGULAR
    if all(system.polyhedra[j].single_vertex() for j in singular):
        return Classification.QUASI_ORDINARY
    if delta_max(system) == 1:
        return Classification.SPECIAL
    return Classification.GENERAL


def spi_report(system: PolyhedraSystem) -> SpiReport:
    """Maximal fitted contact exponent over singular strata (0 when nonsingular)."""
    out = system._memo.get("spi")
    if out is None:
        singular = sing(system)
        if not singular:
            out = SpiReport(Fraction(0), ())
        else:
            fitted = {}
            for j in singular:
                p = system.polyhedra[j]
                w, _ = p.fitting()
                fitted[j] = p.delta() - w.norm
            spi = max(fitted.values())
            out = SpiReport(spi, tuple(j for j in singular if fitted[j] == spi))
        system._memo["spi"] = out
    return out


# -- transforms ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TransformResult:
    system: PolyhedraSystem
    stratum_map: StratumMap
    new_index: int


def _blowup_transform(system, center, subtract) -> TransformResult:
    j = stratum(center)
    _require_nonempty(system)
    bl = fab.blowup(system.fabric, j)
    polys = {}
    for jp in bl.fabric.strata:
        if bl.new_index not in jp:
            polys[jp] = system.polyhedra[jp]
            continue
        k = bl.stratum_map.apply(jp)
        pushed = lambda_push(system.polyhedra[k], j, jp)
        if subtract:
            pushed = pushed.translate_down(bl.new_index, subtract)
        polys[jp] = pushed
    out = build_system(bl.fabric, polys, system.denominator)
    return TransformResult(out, bl.stratum_map, bl.new_index)


def total_transform(system: PolyhedraSystem, center) -> PolyhedraSystem:
    return total_transform_with_map(system, center).system


def total_transform_with_map(system: PolyhedraSystem, center) -> TransformResult:
    return _blowup_transform(system, center, 0)


def char_transform(system: PolyhedraSystem, center) -> PolyhedraSystem:
    return char_transform_with_map(system, center).system


def char_transform_with_map(system: PolyhedraSystem, center) -> TransformResult:
    j = stratum(center)
    if j not in set(sing(system)):
        raise PreconditionError(
            f"characteristic transform requires a singular center, got {format_stratum(j)}"
        )
    return _blowup_transform(system, center, 1)


def moderated_transform(newton: PolyhedraSystem, center, level: int) -> PolyhedraSystem:
    return moderated_transform_with_map(newton, center, level).system


def moderated_transform_with_map(newton: PolyhedraSystem, center, level: int) -> TransformResult:
    """Total transform minus `level` units on the new coordinate, on an integral system."""
    if newton.denominator != 1:
        raise DomainError("moderated transforms act on systems with denominator 1")
    if not isinstance(level, int) or level < 1:
        raise DomainError("moderation level must be a positive integer")
    j = stratum(center)
    if j not in newton.fabric.strata:
        raise DomainError(f"center {format_stratum(j)} is not a stratum")
    if newton.poly(j).delta() < level:
        raise PreconditionError(
            f"moderated transform needs contact exponent at least {level} at the center"
        )
    return _blowup_transform(newton, center, level)


def hironaka_project_system(system: PolyhedraSystem, t) -> PolyhedraSystem:
    """Project the whole system from a stratum t; dimension drops by |t|.

    The declared denominator becomes d! * d.  When t is singular every
    projected polyhedron is empty and the flagged all-empty system is
    returned.
    """
    _require_nonempty(system)
    t = stratum(t)
    ft = system.fabric.project(t)
    d = system.denominator
    d_new = math.factorial(d) * d
    if t in set(sing(system)):
        polys = {j: empty_polyhedron(j, d_new) for j in ft.strata}
        return build_system(ft, polys, d_new, all_empty=True)
    ts = set(t)
    polys = {}
    for jstar in ft.strata:
        source = stratum(set(jstar) | ts)
        polys[jstar] = hironaka_project(system.polyhedra[source], t)
        if polys[jstar].is_empty:
            raise InvariantError(
                f"projection from non-singular {format_stratum(t)} produced an empty polyhedron"
            )
    return build_system(ft, polys, d_new)


def spivakovsky(system: PolyhedraSystem) -> tuple[SpiReport, PolyhedraSystem | None]:
    """Invariant report, and the associated special system when the invariant is nonzero.

    Per stratum the new polyhedron is generated by the fitted generators
    scaled down by the invariant together with the original generators.  The
    declared denominator is the computed minimal one (the naive d*d bound
    fails on easy examples, e.g. scaling [[ (2,0),(0,3) ]] by 1/2).
    """
    report = spi_report(system)
    if report.spi == 0:
        return report, None
    raw = {}
    denom = 1
    for j in system.fabric.strata:
        p = system.polyhedra[j]
        w, fitted = p.fitting()
        scaled = fitted.scale(Fraction(1) / report.spi) if j else fitted
        gens = scaled.generators + p.generators
        raw[j] = gens
        for g in gens:
            for c in g.coords:
                denom = denom * c.denominator // math.gcd(denom, c.denominator)
    polys = {j: make(gens, denom) for j, gens in raw.items()}
    out = build_system(system.fabric, polys, denom)
    if classify(out) is not Classification.SPECIAL:
        raise InvariantError("spivakovsky projection failed to be special")
    if set(sing(out)) != set(report.argmax):
        raise InvariantError("spivakovsky projection has the wrong singular locus")
    return report, out


# -- maximal contact -----------------------------------------------------------


def maximal_contact_candidates(system: PolyhedraSystem) -> tuple[Stratum, ...]:
    """Strata contained in every singular stratum's strict tangent space.

    Meant for a system reduced to one connected component of its singular
    locus.  Candidates are ordered by descending cardinality (fastest
    dimension drop after projection), then lexicographically; the list is
    empty exactly when the component admits no maximal contact.
    """
    if delta_max(system) != 1:
        raise PreconditionError("maximal contact applies to systems with contact exponent 1")
    singular = sing(system)
    if not singular:
        return ()
    meet = set(system.polyhedra[singular[0]].strict_tangent())
    for j in singular[1:]:
        meet &= set(system.polyhedra[j].strict_tangent())
    if not meet:
        return ()
    subsets = [s for s in fab.power_set(stratum(meet)) if s]
    for s in subsets:
        assert s in system.fabric.strata
    return tuple(sorted(subsets, key=lambda s: (-len(s), s)))


def consistent(system: PolyhedraSystem) -> bool:
    """Every connected component of the singular locus admits maximal contact."""
    singular = sing(system)
    if not singular:
        return True
    for comp in fab.connected_components(system.fabric, singular):
        meet = set(system.polyhedra[comp[0]].strict_tangent())
        for j in comp[1:]:
            meet &= set(system.polyhedra[j].strict_tangent())
        if not meet:
            return False
    return True


# -- equality and equivalence ---------------------------------------------------


def _rename_vector(g: ExponentVector, rename) -> ExponentVector:
    pairs = sorted((rename.get(i, i), c) for i, c in zip(g.support, g.coords))
    return ExponentVector(tuple(i for i, _ in pairs), tuple(c for _, c in pairs))


def systems_equal(a: PolyhedraSystem, b: PolyhedraSystem, rename=None, *,
                  compare_denominator=False) -> bool:
    """Exact equality of canonical generators, optionally renaming b's ids into a's."""
    rename = rename or {}
    bmap = {}
    for j, p in b.polyhedra.items():
        jj = stratum(rename.get(i, i) for i in j)
        bmap[jj] = tuple(_rename_vector(g, rename) for g in p.generators)
    if set(a.fabric.strata) != set(bmap):
        return False
    if {rename.get(i, i) for i in b.fabric.indices} != set(a.fabric.indices):
        return False
    if compare_denominator and a.denominator != b.denominator:
        return False
    for j, p in a.polyhedra.items():
        if tuple(sorted(g.coords for g in p.generators)) != tuple(
            sorted(g.coords for g in bmap[j])
        ):
            return False
    return True


def equivalent_systems(d1: PolyhedraSystem, d2: PolyhedraSystem) -> fab.Equivalence | None:
    """First fabric equivalence whose index bijection also matches every polyhedron."""
    if d1.denominator != d2.denominator:
        return None
    for mapping in fab.iter_equivalences(d1.fabric, d2.fabric):
        ok = True
        for j in d1.fabric.strata:
            image = stratum(mapping[i] for i in j) if j else ()
            gens1 = {_rename_vector(g, mapping).coords for g in d1.polyhedra[j].generators}
            gens2 = {g.coords for g in d2.polyhedra[image].generators}
            if gens1 != gens2:
                ok = False
                break
        if ok:
            return fab.Equivalence(d1.fabric, d2.fabric, mapping)
    return None
