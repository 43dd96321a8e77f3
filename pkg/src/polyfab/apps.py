"""Builders for the concrete inputs the engine consumes.

Monomial ideals come in as divisor exponent lists and turn into integral
systems; principalization is the level-1 moderated sequence replayed as
total transforms.  Hypersurface/foliation-style inputs are ingested purely
combinatorially: callers supply the exponent supports on closed strata and
only projection compatibility is checked.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import system as sysmod
from .errors import DomainError, InvariantError
from .fabric import Stratum, SupportFabric, format_stratum, stratum
from .polyhedron import ExponentVector, make
from .resolve import (
    KIND_TOTAL,
    Center,
    ResolutionTrace,
    TraceStep,
    resolve,
    snapshot,
)
from .system import PolyhedraSystem


@dataclass(frozen=True)
class MonomialIdealData:
    """A finite list of effective divisors, each an exponent map on the index set."""

    fabric: SupportFabric
    divisors: tuple[tuple[int, ...], ...]

    def __init__(self, fabric, divisors):
        divs = []
        for d in divisors:
            row = tuple(d)
            if len(row) != len(fabric.indices):
                raise DomainError("divisor exponents must cover the whole index set")
            for n in row:
                if not isinstance(n, int) or isinstance(n, bool) or n < 0:
                    raise DomainError(f"divisor exponent {n!r} is not a nonnegative integer")
            divs.append(row)
        if not divs:
            raise DomainError("a monomial ideal needs at least one divisor")
        object.__setattr__(self, "fabric", fabric)
        object.__setattr__(self, "divisors", tuple(divs))

    def exponent(self, divisor_idx: int, index: int) -> int:
        return self.divisors[divisor_idx][self.fabric.indices.index(index)]


def from_monomial_ideal(data: MonomialIdealData) -> PolyhedraSystem:
    """Integral system whose stratum polyhedra are generated by the restricted divisors."""
    polys = {}
    for j in data.fabric.strata:
        gens = [
            ExponentVector(j, tuple(data.exponent(s, i) for i in j))
            for s in range(len(data.divisors))
        ]
        polys[j] = make(gens, 1)
    return sysmod.build_system(data.fabric, polys, 1)


def is_principal(newton: PolyhedraSystem) -> bool:
    """Normal crossings test: every polyhedron has a single vertex."""
    return all(p.single_vertex() for p in newton.polyhedra.values())


def principalize_with_final(newton: PolyhedraSystem, budget=None):
    """Blow-up sequence after which the system is single-vertex everywhere.

    Centers come from resolving the system itself (level-1 moderated
    sequence); the emitted trace replays them as total transforms, which
    differ from the moderated ones only by per-stratum translations and so
    end single-vertex exactly when the moderated sequence ends nonsingular.
    """
    if newton.denominator != 1:
        raise DomainError("principalization applies to systems with denominator 1")
    plan = resolve(newton, budget)
    steps = []
    cur = newton
    for step in plan.steps:
        if is_principal(cur):
            break  # single-vertex is absorbing under total transforms
        before = snapshot(cur)
        res = sysmod.total_transform_with_map(cur, step.center.stratum)
        cur = res.system
        steps.append(
            TraceStep(
                len(steps),
                Center(step.center.stratum, KIND_TOTAL),
                step.branch,
                step.provenance,
                before,
                snapshot(cur),
                res.new_index,
            )
        )
    if not is_principal(cur):
        raise InvariantError("principalization finished with a multi-vertex polyhedron")
    return ResolutionTrace(tuple(steps), KIND_TOTAL), cur


def principalize(newton: PolyhedraSystem, budget=None) -> ResolutionTrace:
    return principalize_with_final(newton, budget)[0]


@dataclass(frozen=True)
class SupportModelData:
    """Combinatorial exponent supports on the closed strata, denominator 1.

    Stands in for hypersurface or one-form data whose coefficient
    non-vanishing cannot be computed here; the supports are trusted and only
    projection compatibility is validated when the system is built.
    """

    fabric: SupportFabric
    supports: dict

    def __init__(self, fabric, supports):
        closed = set(fabric.closed_points())
        cleaned = {}
        for j, vectors in supports.items():
            jj = stratum(j)
            if jj not in closed:
                raise DomainError(f"support given on non-closed stratum {format_stratum(jj)}")
            rows = []
            for v in vectors:
                row = tuple(v)
                if len(row) != len(jj):
                    raise DomainError("support vector length must match its stratum")
                for n in row:
                    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
                        raise DomainError(f"support exponent {n!r} is not a nonnegative integer")
                rows.append(row)
            if not rows:
                raise DomainError(f"empty support on stratum {format_stratum(jj)}")
            cleaned[jj] = tuple(rows)
        if set(cleaned) != closed:
            raise DomainError("supports must be given on exactly the closed strata")
        object.__setattr__(self, "fabric", fabric)
        object.__setattr__(self, "supports", cleaned)


def from_support_model(data: SupportModelData) -> PolyhedraSystem:
    closed_polys = {
        j: make([ExponentVector(j, row) for row in rows], 1)
        for j, rows in data.supports.items()
    }
    return sysmod.from_closed_strata(data.fabric, closed_polys, 1)


def equimultiple(newton: PolyhedraSystem, j) -> bool:
    """True when the contact exponent is constant on the closure of the stratum."""
    j = stratum(j)
    if j not in newton.fabric.strata:
        raise DomainError(f"{format_stratum(j)} is not a stratum")
    base = newton.poly(j).delta()
    js = set(j)
    return all(
        newton.polyhedra[k].delta() == base
        for k in newton.fabric.strata
        if js <= set(k)
    )
