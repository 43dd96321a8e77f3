"""Recursive desingularization engine.

resolve() emits a trace of characteristic transforms after which the singular
locus is empty.  Dispatch is by classification, with recursion only on
strictly smaller dimension (restrictions and projections) or on well-founded
invariants:

  dim <= 1        blow up singular strata; the summed contact exponent drops
                  by exactly one per step.
  quasi-ordinary  blow up a minimal-cardinality singular stratum; the sorted
                  multiplicity profile drops lexicographically.
  special         make the system consistent by resolving away from the
                  closed points, then clear one singular component at a time
                  through a maximal contact stratum, lifting the resolution
                  of the projected lower-dimensional system.
  general         resolve the associated special (Spivakovsky) system and
                  replay its centers until the invariant drops, then repeat.

Every branch asserts the inequalities that justify it; a failure raises
InvariantError (or ConsistencyDiagnostic for the maximal-contact existence
checks) instead of producing a wrong trace.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import fabric as fab
from . import system as sysmod
from .errors import (
    BudgetExceededError,
    ConsistencyDiagnostic,
    InvariantError,
    PreconditionError,
    ReplayError,
)
from .fabric import Stratum, format_stratum, stratum, stratum_key
from .system import Classification, PolyhedraSystem, classify, delta_max, sing, spi_report

DEFAULT_BUDGET = 10**6

BRANCH_DIM1 = "dim1"
BRANCH_QO = "qo"
BRANCH_MAKE_CONSISTENT = "special/make-consistent"
BRANCH_MAX_CONTACT = "special/max-contact"
BRANCH_SPI = "general/spi"

KIND_CHAR = "characteristic"
KIND_TOTAL = "total"
KIND_MODERATED = "moderated"


@dataclass(frozen=True)
class Center:
    stratum: Stratum
    kind: str = KIND_CHAR
    moderation: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "stratum", stratum(self.stratum))
        if self.kind not in (KIND_CHAR, KIND_TOTAL, KIND_MODERATED):
            raise ReplayError(f"unknown transform kind {self.kind!r}")
        if (self.kind == KIND_MODERATED) != (self.moderation is not None):
            raise ReplayError("moderation level set iff the kind is moderated")


@dataclass(frozen=True)
class Snapshot:
    """Per-step invariants: contact exponent, Spivakovsky invariant, sorted
    multiplicity profile (denominator-scaled contact exponents over the
    nonempty strata, descending) and the singular stratum count."""

    delta: Fraction
    spi: Fraction
    profile: tuple[int, ...]
    sing_count: int


def snapshot(system: PolyhedraSystem) -> Snapshot:
    d = system.denominator
    vals = []
    for j in system.fabric.strata:
        if not j:
            continue
        v = system.polyhedra[j].delta() * d
        assert v.denominator == 1
        vals.append(int(v))
    vals.sort(reverse=True)
    return Snapshot(
        delta=delta_max(system),
        spi=spi_report(system).spi,
        profile=tuple(vals),
        sing_count=len(sing(system)),
    )


def profile_less(a: tuple[int, ...], b: tuple[int, ...]) -> bool:
    """Lexicographic comparison after padding with zeros on the right."""
    n = max(len(a), len(b))
    return a + (0,) * (n - len(a)) < b + (0,) * (n - len(b))


@dataclass(frozen=True)
class TraceStep:
    index: int
    center: Center
    branch: str
    provenance: tuple[str, ...]
    before: Snapshot
    after: Snapshot
    new_index: int


@dataclass(frozen=True)
class ResolutionTrace:
    steps: tuple[TraceStep, ...]
    mode: str = KIND_CHAR
    moderation: int | None = None

    @property
    def centers(self) -> tuple[Center, ...]:
        return tuple(s.center for s in self.steps)

    def __len__(self):
        return len(self.steps)


def _contact_total(system: PolyhedraSystem) -> Fraction:
    """Sum of contact exponents over all strata (the dimension-one measure)."""
    return sum((system.polyhedra[j].delta() for j in system.fabric.strata), Fraction(0))


class _Budget:
    def __init__(self, limit):
        self.limit = limit
        self.used = 0

    def tick(self):
        self.used += 1
        if self.used > self.limit:
            raise BudgetExceededError(
                f"step budget of {self.limit} transforms exceeded; "
                "this is a tripwire for engine bugs, not a semantic limit"
            )


class _Engine:
    """One trace under construction; sub-resolutions get fresh engines that
    share the budget, and their plans are lifted into the caller's trace."""

    def __init__(self, budget: _Budget):
        self.budget = budget
        self.steps: list[TraceStep] = []

    # -- step application --------------------------------------------------

    def emit(self, system, center, branch, prov):
        before = snapshot(system)
        res = sysmod.char_transform_with_map(system, center)
        after = snapshot(res.system)
        self.steps.append(
            TraceStep(len(self.steps), Center(center), branch, prov, before, after, res.new_index)
        )
        self.budget.tick()
        return res

    def _silent_char(self, system, center):
        self.budget.tick()
        return sysmod.char_transform_with_map(system, center)

    # -- dispatch ------------------------------------------------------------

    def run(self, system, prov=()):
        while True:
            cls = classify(system)
            if cls is Classification.NON_SINGULAR:
                return system
            if system.dimension() <= 1:
                system = self.run_dim1(system, prov)
            elif cls is Classification.QUASI_ORDINARY:
                system = self.run_qo(system, prov)
            elif cls is Classification.SPECIAL:
                system = self.run_special(system, prov)
            else:
                system = self.run_general_round(system, prov)

    # -- branches ------------------------------------------------------------

    def run_dim1(self, system, prov):
        while True:
            singular = sing(system)
            if not singular:
                return system
            total = _contact_total(system)
            system = self.emit(system, singular[0], BRANCH_DIM1, prov).system
            if _contact_total(system) != total - 1:
                raise InvariantError("dimension-one measure did not drop by exactly one")

    def run_qo(self, system, prov):
        while True:
            singular = sing(system)
            if not singular:
                return system
            if not all(system.polyhedra[j].single_vertex() for j in singular):
                raise InvariantError("quasi-ordinary shape lost during its own resolution")
            before = snapshot(system)
            # Canonical order is cardinality then ids, so the first singular
            # stratum is the minimal-cardinality center with lexicographic ties.
            system = self.emit(system, singular[0], BRANCH_QO, prov).system
            after = snapshot(system)
            if not profile_less(after.profile, before.profile):
                raise InvariantError("multiplicity profile did not drop on a quasi-ordinary step")

    # Special systems ---------------------------------------------------------

    def run_special(self, system, prov):
        system = self.make_consistent(system, prov)
        while True:
            singular = sing(system)
            if not singular:
                return system
            if delta_max(system) != 1:
                raise InvariantError("special system left the contact-exponent-1 regime")
            comps = fab.connected_components(system.fabric, singular)
            comp = comps[0]
            rest = comps[1:]
            before_others = {
                c: {
                    j: system.polyhedra[j]
                    for j0 in c
                    for j in fab.power_set(j0)
                }
                for c in rest
            }
            reduced = sysmod.reduce_system(system, comp)
            candidates = sysmod.maximal_contact_candidates(reduced)
            if not candidates:
                raise InvariantError(
                    "no maximal contact stratum for a component of a consistent system"
                )
            contact = candidates[0]
            tag = f"component {format_stratum(comp[0])}"
            if contact in set(singular):
                system = self.emit(
                    system, contact, BRANCH_MAX_CONTACT,
                    prov + (f"{tag}: singular maximal contact",),
                ).system
            else:
                system = self.clear_component_by_projection(
                    system, reduced, comp, contact, prov + (tag,)
                )
            after_sing = set(sing(system))
            expected = {j for c in rest for j in c}
            if after_sing != expected:
                raise ConsistencyDiagnostic(
                    "component processing left an unexpected singular locus: "
                    f"{sorted(after_sing - expected)} extra, {sorted(expected - after_sing)} missing"
                )
            for c in rest:
                for j, p in before_others[c].items():
                    cur = system.polyhedra.get(j)
                    if cur is None or cur.generators != p.generators:
                        raise ConsistencyDiagnostic(
                            f"untouched component changed at {format_stratum(j)}"
                        )

    def clear_component_by_projection(self, system, reduced, comp, contact, prov):
        """Resolve the projection from the contact stratum and lift its centers.

        The reduced system and the projected one are replayed in lockstep so
        the singular-locus bijection and the projection/transform
        commutation can be asserted at every lifted step.
        """
        projected = sysmod.hironaka_project_system(reduced, contact)
        sub = _Engine(self.budget)
        sub.run(projected, prov + (f"projection from {format_stratum(contact)}",))
        idmap = {i: i for i in projected.fabric.indices}
        tset = set(contact)
        cur = system
        cur_reduced = reduced
        cur_projected = projected
        for step in sub.steps:
            self._assert_sing_bijection(cur_reduced, cur_projected, tset, idmap)
            lifted = stratum({idmap[i] for i in step.center.stratum} | tset)
            full = cur.polyhedra.get(lifted)
            if full is None or full.generators != cur_reduced.polyhedra[lifted].generators:
                raise InvariantError("reduced replay lost track of the full system")
            cur = self.emit(cur, lifted, BRANCH_MAX_CONTACT, prov + ("lifted center",)).system
            red_res = self._silent_char(cur_reduced, lifted)
            proj_res = self._silent_char(cur_projected, step.center.stratum)
            cur_reduced = red_res.system
            cur_projected = proj_res.system
            idmap[proj_res.new_index] = red_res.new_index
            reprojected = sysmod.hironaka_project_system(cur_reduced, contact)
            if not sysmod.systems_equal(reprojected, cur_projected, rename=idmap):
                raise InvariantError(
                    "projection does not commute with the lifted characteristic transform"
                )
        if sing(cur_reduced):
            raise InvariantError("component resolution finished with singular reduced system")
        self._assert_sing_bijection(cur_reduced, cur_projected, tset, idmap)
        return cur

    @staticmethod
    def _assert_sing_bijection(reduced, projected, tset, idmap):
        down = set()
        for j in sing(reduced):
            if not tset <= set(j):
                raise InvariantError("singular stratum escaped the maximal contact closure")
            down.add(stratum(set(j) - tset))
        up = {stratum(idmap[i] for i in j) for j in sing(projected)}
        if down != up:
            raise InvariantError("singular loci do not correspond under the projection")

    def make_consistent(self, system, prov):
        """Characteristic transforms after which every singular component has
        maximal contact.  Resolves the restriction away from the closed
        points (strictly smaller dimension), replays the same centers, and
        checks the resulting components sit over single closed strata whose
        strict tangent spaces survive as strata."""
        if not sing(system) or sysmod.consistent(system):
            return system
        closed = system.fabric.closed_points()
        open_part = frozenset(set(system.fabric.strata) - set(closed))
        restricted = sysmod.restrict_system(system, open_part)
        original = {k: system.polyhedra[k] for k in closed}
        sub = _Engine(self.budget)
        sub.run(restricted, prov + ("restriction off the closed points",))
        cur = system
        cur_restricted = restricted
        composed = None
        for step in sub.steps:
            c = step.center.stratum
            full = cur.polyhedra.get(c)
            if full is None or full.generators != cur_restricted.polyhedra[c].generators:
                raise InvariantError("restricted replay lost track of the full system")
            res = self.emit(cur, c, BRANCH_MAKE_CONSISTENT, prov + ("replayed center",))
            cur = res.system
            cur_restricted = self._silent_char(cur_restricted, c).system
            composed = res.stratum_map if composed is None else composed.compose(res.stratum_map)
        if composed is None:
            return cur
        singular = sing(cur)
        if not singular:
            return cur
        fibers = {}
        for j in singular:
            base = composed.apply(j)
            if base not in set(closed):
                raise ConsistencyDiagnostic(
                    f"singular stratum {format_stratum(j)} does not sit over a closed stratum"
                )
            fibers[j] = base
        for comp in fab.connected_components(cur.fabric, singular):
            bases = {fibers[j] for j in comp}
            if len(bases) != 1:
                raise ConsistencyDiagnostic(
                    "a singular component straddles several closed strata"
                )
            base = bases.pop()
            contact = original[base].strict_tangent()
            if contact not in cur.fabric.strata:
                raise ConsistencyDiagnostic(
                    f"strict tangent stratum {format_stratum(contact)} of closed stratum "
                    f"{format_stratum(base)} is no longer a stratum"
                )
            for j in comp:
                if not set(contact) <= set(cur.polyhedra[j].strict_tangent()):
                    raise ConsistencyDiagnostic(
                        f"strict tangent stratum {format_stratum(contact)} lost maximal "
                        f"contact at {format_stratum(j)}"
                    )
        if not sysmod.consistent(cur):
            raise ConsistencyDiagnostic("system still inconsistent after the closed-point pass")
        return cur

    # General systems -----------------------------------------------------------

    def run_general_round(self, system, prov):
        """Replay the resolution of the Spivakovsky system until the invariant drops."""
        level = spi_report(system).spi
        if level == 0:
            raise InvariantError("general round started on a quasi-ordinary system")
        report, special = sysmod.spivakovsky(system)
        if set(sing(special)) != set(report.argmax):
            raise InvariantError("spivakovsky system has the wrong singular locus")
        sub = _Engine(self.budget)
        sub.run(special, prov + ("spivakovsky system",))
        cur = system
        cur_special = special
        for step in sub.steps:
            if delta_max(cur) <= 1:
                return cur  # special now; the dispatcher takes over
            rep = spi_report(cur)
            if rep.spi > level:
                raise InvariantError("Spivakovsky invariant increased")
            if rep.spi < level:
                return cur
            c = step.center.stratum
            if c not in set(rep.argmax):
                raise InvariantError("replayed center left the Spivakovsky argmax")
            cur = self.emit(cur, c, BRANCH_SPI, prov).system
            cur_special = self._silent_char(cur_special, c).system
            new_spi = spi_report(cur).spi
            if new_spi > level:
                raise InvariantError("Spivakovsky invariant increased across a transform")
            if new_spi == level:
                _, fresh = sysmod.spivakovsky(cur)
                if not sysmod.systems_equal(fresh, cur_special):
                    raise InvariantError(
                        "Spivakovsky projection does not commute with the transform"
                    )
        if sing(cur) and spi_report(cur).spi == level:
            raise InvariantError("Spivakovsky plan exhausted without an invariant drop")
        return cur


# -- public operations ------------------------------------------------------------


def _fresh_engine(budget=None) -> _Engine:
    return _Engine(_Budget(DEFAULT_BUDGET if budget is None else budget))


def resolve_with_final(system, budget=None) -> tuple[ResolutionTrace, PolyhedraSystem]:
    engine = _fresh_engine(budget)
    final = engine.run(system)
    if sing(final):
        raise InvariantError("resolution finished with a singular system")
    return ResolutionTrace(tuple(engine.steps)), final


def resolve(system, budget=None) -> ResolutionTrace:
    """Full desingularization: a trace of characteristic transforms whose
    replay ends with an empty singular locus."""
    return resolve_with_final(system, budget)[0]


def resolve_dim1(system, budget=None) -> ResolutionTrace:
    if system.dimension() > 1:
        raise PreconditionError("resolve_dim1 requires dimension at most 1")
    engine = _fresh_engine(budget)
    engine.run_dim1(system, ())
    return ResolutionTrace(tuple(engine.steps))


def resolve_qo(system, budget=None) -> ResolutionTrace:
    if classify(system) not in (Classification.QUASI_ORDINARY, Classification.NON_SINGULAR):
        raise PreconditionError("resolve_qo requires a quasi-ordinary system")
    engine = _fresh_engine(budget)
    engine.run_qo(system, ())
    return ResolutionTrace(tuple(engine.steps))


def resolve_special(system, budget=None) -> ResolutionTrace:
    if sing(system) and delta_max(system) != 1:
        raise PreconditionError("resolve_special requires contact exponent exactly 1")
    engine = _fresh_engine(budget)
    final = engine.run_special(system, ())
    if sing(final):
        raise InvariantError("special resolution finished singular")
    return ResolutionTrace(tuple(engine.steps))


def resolve_general(system, budget=None) -> ResolutionTrace:
    if classify(system) is not Classification.GENERAL:
        raise PreconditionError("resolve_general requires a singular non-quasi-ordinary "
                                "system with contact exponent above 1")
    return resolve(system, budget)


def make_consistent(system, budget=None) -> tuple[ResolutionTrace, PolyhedraSystem]:
    """Prefix of characteristic transforms making a special system consistent."""
    if sing(system) and delta_max(system) != 1:
        raise PreconditionError("make_consistent applies to special systems")
    engine = _fresh_engine(budget)
    final = engine.make_consistent(system, ())
    return ResolutionTrace(tuple(engine.steps)), final


def moderated_sequence_with_final(newton, level, budget=None):
    if newton.denominator != 1:
        raise PreconditionError("moderated sequences act on systems with denominator 1")
    base = sysmod.divide_system(newton, level) if level > 1 else newton
    plan = resolve(base, budget)
    steps = []
    cur = newton
    for step in plan.steps:
        before = snapshot(cur)
        res = sysmod.moderated_transform_with_map(cur, step.center.stratum, level)
        cur = res.system
        steps.append(
            TraceStep(
                len(steps),
                Center(step.center.stratum, KIND_MODERATED, level),
                step.branch,
                step.provenance,
                before,
                snapshot(cur),
                res.new_index,
            )
        )
    if delta_max(cur) >= level:
        raise InvariantError("moderated sequence finished with contact exponent "
                             f"{delta_max(cur)} >= {level}")
    return ResolutionTrace(tuple(steps), KIND_MODERATED, level), cur


def moderated_sequence(newton, level, budget=None) -> ResolutionTrace:
    """Moderated transforms on an integral system until its contact exponent
    falls below the level."""
    return moderated_sequence_with_final(newton, level, budget)[0]


def replay(system, centers) -> tuple[PolyhedraSystem, tuple[Snapshot, ...]]:
    """Apply recorded centers in order, returning the final system and the
    snapshots before each step plus the final one."""
    snaps = [snapshot(system)]
    cur = system
    for idx, center in enumerate(centers):
        try:
            if center.kind == KIND_CHAR:
                cur = sysmod.char_transform(cur, center.stratum)
            elif center.kind == KIND_TOTAL:
                cur = sysmod.total_transform(cur, center.stratum)
            else:
                cur = sysmod.moderated_transform(cur, center.stratum, center.moderation)
        except Exception as exc:  # noqa: BLE001 - rewrap with the step index
            raise ReplayError(f"step {idx}: center {format_stratum(center.stratum)} "
                              f"not applicable: {exc}", step=idx) from exc
        snaps.append(snapshot(cur))
    return cur, tuple(snaps)
