"""Independent verifiers and seeded generators for the property suites.

member_fm decides hull membership through a second, structurally different
route: it eliminates the convex weights symbolically to obtain facet
inequalities in point space, then evaluates the query point.  It shares no
code with the solver behind CharPolyhedron.member, so agreement between the
two is meaningful evidence.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from . import system as sysmod
from .errors import DomainError, PreconditionError
from .fabric import SupportFabric, format_stratum, stratum
from .polyhedron import CharPolyhedron, ExponentVector, make
from .system import PolyhedraSystem, sing

_FM_COORD_LIMIT = 6


# -- facet-elimination membership oracle --------------------------------------

_hrep_cache: dict = {}


def _facet_rows(generators: tuple[tuple[Fraction, ...], ...]):
    """Inequalities in point space cut out by conv(generators) + orthant.

    Variables are the convex weights l0..l{m-1} followed by the point
    coordinates x0..x{n-1}; rows are mappings var -> coeff with a constant,
    read as sum(coeff * var) <= const.  Eliminating every weight leaves rows
    in the x's only.
    """
    if generators in _hrep_cache:
        return _hrep_cache[generators]
    m = len(generators)
    n = len(generators[0]) if m else 0
    rows = []
    for i in range(m):
        rows.append(({f"l{i}": Fraction(-1)}, Fraction(0)))
    rows.append(({f"l{i}": Fraction(1) for i in range(m)}, Fraction(1)))
    rows.append(({f"l{i}": Fraction(-1) for i in range(m)}, Fraction(-1)))
    for k in range(n):
        row = {f"x{k}": Fraction(-1)}
        for i in range(m):
            if generators[i][k]:
                row[f"l{i}"] = generators[i][k]
        rows.append((row, Fraction(0)))

    for i in range(m):
        var = f"l{i}"
        pos, neg, rest = [], [], []
        for row, const in rows:
            c = row.get(var, Fraction(0))
            if c > 0:
                pos.append((row, const))
            elif c < 0:
                neg.append((row, const))
            else:
                rest.append((row, const))
        combined = {}

        def _push(row, const, sink=combined):
            live = {v: c for v, c in row.items() if c}
            top = max((abs(c) for c in live.values()), default=Fraction(0))
            if top:
                live = {v: c / top for v, c in live.items()}
                const = const / top
            key = tuple(sorted(live.items()))
            if key not in sink or const < sink[key]:
                sink[key] = const

        for row, const in rest:
            _push(row, const)
        for prow, pconst in pos:
            pc = prow[var]
            for nrow, nconst in neg:
                nc = -nrow[var]
                merged = dict((v, c * nc) for v, c in prow.items())
                for v, c in nrow.items():
                    merged[v] = merged.get(v, Fraction(0)) + c * pc
                merged.pop(var, None)
                _push(merged, pconst * nc + nconst * pc)
        rows = [(dict(key), const) for key, const in combined.items()]
    _hrep_cache[generators] = rows
    return rows


def member_fm(point: ExponentVector, generators) -> bool:
    """Membership of a point in [[generators]] via eliminated facet inequalities."""
    gens = tuple(generators)
    if not gens:
        return False
    support = gens[0].support
    if any(g.support != support for g in gens) or point.support != support:
        raise DomainError("membership oracle needs a common support")
    if len(support) > _FM_COORD_LIMIT:
        raise PreconditionError(
            f"membership oracle limited to {_FM_COORD_LIMIT} coordinates"
        )
    rows = _facet_rows(tuple(g.coords for g in gens))
    values = {f"x{k}": c for k, c in enumerate(point.coords)}
    for row, const in rows:
        lhs = sum((c * values.get(v, Fraction(0)) for v, c in row.items()), Fraction(0))
        if lhs > const:
            return False
    return True


# -- seeded random systems -----------------------------------------------------


@dataclass(frozen=True)
class RandomSpec:
    """Bounds for random system generation; output is a pure function of the seed."""

    max_indices: int = 4
    max_generators: int = 4
    max_numerator: int = 4
    denominators: tuple[int, ...] = (1, 2, 3)
    seed: int = 0

    def __post_init__(self):
        if self.max_indices < 1 or self.max_generators < 1 or self.max_numerator < 1:
            raise DomainError("random spec bounds must be at least 1")
        if not self.denominators or any(d < 1 for d in self.denominators):
            raise DomainError("denominator choices must be positive")


def random_system(spec: RandomSpec) -> PolyhedraSystem:
    """A valid random system: random downward-closed stratum family plus the
    restrictions of one random generator set, installed on the closed points
    and filled by projection."""
    rng = random.Random(spec.seed)
    n = rng.randint(1, spec.max_indices)
    indices = tuple(range(1, n + 1))
    tops = set()
    for _ in range(rng.randint(1, 3)):
        size = rng.randint(1, n)
        tops.add(stratum(rng.sample(indices, size)))
    strata = {()}
    for top in tops:
        queue = [top]
        while queue:
            j = queue.pop()
            if j in strata:
                continue
            strata.add(j)
            for i in j:
                queue.append(tuple(x for x in j if x != i))
    fabric = SupportFabric(indices, frozenset(strata))
    d = rng.choice(spec.denominators)
    gens = []
    for _ in range(rng.randint(1, spec.max_generators)):
        gens.append(
            ExponentVector(
                indices,
                tuple(Fraction(rng.randint(0, spec.max_numerator), d) for _ in indices),
            )
        )
    closed = {}
    for k in fabric.closed_points():
        closed[k] = make([g.restrict(k) for g in gens], d)
    return sysmod.from_closed_strata(fabric, closed, d)


def random_point_in(poly: CharPolyhedron, rng: random.Random,
                    max_offset_numerator: int = 3) -> ExponentVector:
    """Random convex combination of the generators plus a nonnegative offset."""
    if poly.is_empty:
        raise DomainError("cannot sample the empty polyhedron")
    weights = [Fraction(rng.randint(0, 6)) for _ in poly.generators]
    if sum(weights) == 0:
        weights[rng.randrange(len(weights))] = Fraction(1)
    total = sum(weights)
    coords = [Fraction(0)] * len(poly.support)
    for w, g in zip(weights, poly.generators):
        for k, c in enumerate(g.coords):
            coords[k] += c * w / total
    for k in range(len(coords)):
        if rng.random() < 0.5:
            coords[k] += Fraction(rng.randint(0, max_offset_numerator), rng.randint(1, 4))
    return ExponentVector(poly.support, coords)


# -- projection/transform commutation check ------------------------------------


@dataclass(frozen=True)
class CommutationReport:
    ok: bool
    mismatched_strata: tuple
    point_failures: tuple

    def __bool__(self):
        return self.ok


def check_commutation(system: PolyhedraSystem, contact, center, *,
                      samples: int = 100, seed: int = 0,
                      lhs_override=None, rhs_override=None) -> CommutationReport:
    """Verify that projecting from a maximal contact stratum commutes with the
    characteristic transform, both system-wide and pointwise.

    System side: transform-then-project must equal project-then-transform
    (after matching the two new ids).  Point side: for sampled points below
    the unit level over the contact stratum, pushing forward then projecting
    agrees coordinate by coordinate with projecting then pushing forward.
    """
    t = stratum(contact)
    j = stratum(center)
    singular = set(sing(system))
    if j not in singular:
        raise PreconditionError("commutation check needs a singular center")
    if not set(t) < set(j):
        raise PreconditionError("contact stratum must be a proper subset of the center")
    for s in singular:
        if not set(t) <= set(system.polyhedra[s].strict_tangent()):
            raise PreconditionError("contact stratum lacks maximal contact")

    transformed = sysmod.char_transform_with_map(system, j)
    lhs = lhs_override or sysmod.hironaka_project_system(transformed.system, t)
    projected = sysmod.hironaka_project_system(system, t)
    rhs_res = sysmod.char_transform_with_map(
        projected, stratum(set(j) - set(t))
    )
    rhs = rhs_override or rhs_res.system
    rename = {rhs_res.new_index: transformed.new_index}

    mismatched = []
    rhs_strata = {
        stratum(rename.get(i, i) for i in s): s for s in rhs.fabric.strata
    }
    for s in sorted(lhs.fabric.strata, key=lambda x: (len(x), x)):
        other = rhs_strata.get(s)
        if other is None:
            mismatched.append(s)
            continue
        gens_l = sorted(g.coords for g in lhs.polyhedra[s].generators)
        gens_r = sorted(
            tuple(c for _, c in sorted(
                (rename.get(i, i), c) for i, c in zip(g.support, g.coords)
            ))
            for g in rhs.polyhedra[other].generators
        )
        if gens_l != gens_r:
            mismatched.append(s)
    for s in rhs_strata:
        if s not in lhs.fabric.strata:
            mismatched.append(s)

    # Pointwise identities on every exceptional stratum containing the contact.
    rng = random.Random(seed)
    point_failures = []
    targets = [
        jp for jp in transformed.system.fabric.strata
        if transformed.new_index in jp and set(t) <= set(jp)
    ]
    per_target = max(1, samples // max(1, len(targets)))
    for jp in sorted(targets, key=lambda x: (len(x), x)):
        k = transformed.stratum_map.apply(jp)
        source = system.polyhedra[k]
        tried = 0
        attempts = 0
        while tried < per_target and attempts < per_target * 20:
            attempts += 1
            sigma = random_point_in(source, rng)
            if sigma.restrict(t).norm >= 1:
                continue
            tried += 1
            pushed = _push_point(sigma, j, jp, transformed.new_index)
            lhs_pt = _hironaka_point(pushed, t)
            proj_pt = _hironaka_point(sigma, t)
            rhs_pt = _push_point(
                proj_pt, stratum(set(j) - set(t)),
                stratum(set(jp) - set(t)), transformed.new_index,
            )
            if lhs_pt.coords != rhs_pt.coords:
                point_failures.append((jp, sigma))
    ok = not mismatched and not point_failures
    return CommutationReport(ok, tuple(mismatched), tuple(point_failures))


def _push_point(sigma: ExponentVector, center, target, new_index) -> ExponentVector:
    tgt = stratum(target)
    csum = sigma.restrict(stratum(set(center) & set(sigma.support))).norm
    coords = tuple(
        (csum - 1) if i == new_index else sigma.coord(i) for i in tgt
    )
    return ExponentVector(tgt, coords)


def _hironaka_point(sigma: ExponentVector, t) -> ExponentVector:
    ts = stratum(t)
    scale = Fraction(1) / (1 - sigma.restrict(ts).norm)
    rest = stratum(set(sigma.support) - set(ts))
    return sigma.restrict(rest).scale(scale)
