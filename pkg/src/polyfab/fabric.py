"""Support fabrics: finite Zariski topologies on subsets of an index set.

A fabric is a pair (I, H) of a finite index set and a family H of subsets of
I that is open for the topology whose closed families are the upward-closed
ones.  Strata are the members of H.  The module provides the constructions
used everywhere else: restriction, reduction to a closed family, projection
from a stratum, and the combinatorial blow-up with its stratum map.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError, EmptyFabricError, InvariantError, TopologyError

Stratum = tuple[int, ...]


def stratum(ids) -> Stratum:
    """Canonical stratum: strictly increasing tuple of nonnegative ids."""
    out = tuple(sorted(set(ids)))
    for i in out:
        if not isinstance(i, int) or isinstance(i, bool) or i < 0:
            raise DomainError(f"stratum ids must be nonnegative integers, got {i!r}")
    return out


def stratum_key(j: Stratum):
    """Sort key used for all deterministic iteration: cardinality, then ids."""
    return (len(j), j)


def format_stratum(j: Stratum) -> str:
    return "{" + ",".join(str(i) for i in j) + "}"


def _is_subset(a: Stratum, b: Stratum) -> bool:
    return set(a) <= set(b)


@dataclass(frozen=True)
class SupportFabric:
    """A finite index set together with an open family of strata."""

    indices: tuple[int, ...]
    strata: frozenset[Stratum]

    def __init__(self, indices, strata):
        idx = tuple(sorted(set(indices)))
        for i in idx:
            if not isinstance(i, int) or isinstance(i, bool) or i < 0:
                raise DomainError(f"index ids must be nonnegative integers, got {i!r}")
        fam = frozenset(stratum(j) for j in strata)
        iset = set(idx)
        for j in fam:
            if not set(j) <= iset:
                raise DomainError(f"stratum {format_stratum(j)} uses ids outside the index set")
        # Openness: dropping any single id from a stratum stays in the family.
        for j in fam:
            for i in j:
                if tuple(x for x in j if x != i) not in fam:
                    raise TopologyError(
                        f"stratum family is not open: {format_stratum(j)} present "
                        f"but {format_stratum(tuple(x for x in j if x != i))} missing"
                    )
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "strata", fam)
        object.__setattr__(self, "_memo", {})

    # -- basic queries ----------------------------------------------------

    @property
    def degenerate(self) -> bool:
        """True for the empty stratum family, which every operation rejects."""
        return not self.strata

    def _require_valid(self):
        if self.degenerate:
            raise EmptyFabricError("operation undefined on the degenerate fabric (no strata)")

    def strata_sorted(self) -> list[Stratum]:
        out = self._memo.get("sorted")
        if out is None:
            out = sorted(self.strata, key=stratum_key)
            self._memo["sorted"] = out
        return list(out)

    def dimension(self) -> int:
        self._require_valid()
        return max(len(j) for j in self.strata)

    def closed_points(self) -> tuple[Stratum, ...]:
        """Strata with no proper superset in the family.

        Downward closure makes one-element extensions decisive.
        """
        self._require_valid()
        out = self._memo.get("closed")
        if out is None:
            out = tuple(
                j for j in self.strata_sorted()
                if not any(
                    i not in j and stratum(j + (i,)) in self.strata for i in self.indices
                )
            )
            self._memo["closed"] = out
        return out

    def relevant_indices(self) -> tuple[int, ...]:
        """Ids that occur in at least one stratum."""
        self._require_valid()
        seen = set()
        for j in self.strata:
            seen.update(j)
        return tuple(sorted(seen))

    def is_open_family(self, fam) -> bool:
        fam = frozenset(stratum(j) for j in fam)
        if not fam <= self.strata:
            return False
        return all(tuple(x for x in j if x != i) in fam for j in fam for i in j)

    def is_closed_family(self, fam) -> bool:
        """Closed within the fabric: supersets (inside H) of members are members.

        One-element extensions suffice because the fabric is downward closed.
        """
        fam = frozenset(stratum(j) for j in fam)
        if not fam <= self.strata:
            return False
        for j in fam:
            for i in self.indices:
                if i in j:
                    continue
                up = stratum(j + (i,))
                if up in self.strata and up not in fam:
                    return False
        return True

    # -- constructions -----------------------------------------------------

    def restrict(self, open_family) -> "SupportFabric":
        self._require_valid()
        fam = frozenset(stratum(j) for j in open_family)
        for j in fam:
            for i in j:
                if tuple(x for x in j if x != i) not in fam:
                    raise TopologyError("restriction family is not open")
        if not fam <= self.strata:
            raise DomainError("restriction family is not contained in the stratum family")
        return SupportFabric(self.indices, fam)

    def reduce(self, closed_family) -> "SupportFabric":
        """Restrict to the smallest open family containing a closed one."""
        self._require_valid()
        fam = frozenset(stratum(j) for j in closed_family)
        if not self.is_closed_family(fam):
            raise TopologyError("reduction family is not closed in the fabric")
        hull = set()
        for j in fam:
            hull.update(power_set(j))
        return SupportFabric(self.indices, frozenset(hull))

    def project(self, t) -> "SupportFabric":
        """Remove a nonempty stratum t from every stratum containing it."""
        self._require_valid()
        t = stratum(t)
        if not t:
            raise DomainError("cannot project from the empty stratum")
        if t not in self.strata:
            raise DomainError(f"projection center {format_stratum(t)} is not a stratum")
        ts = set(t)
        fam = frozenset(
            tuple(i for i in j if i not in ts) for j in self.strata if ts <= set(j)
        )
        out = SupportFabric(tuple(i for i in self.indices if i not in ts), fam)
        assert out.dimension() < self.dimension()
        return out


def local_fabric(ids) -> SupportFabric:
    """The fabric whose strata are all subsets of the index set."""
    idx = stratum(ids)
    return SupportFabric(idx, frozenset(power_set(idx)))


def power_set(j: Stratum):
    out = [()]
    for i in j:
        out += [prev + (i,) for prev in out]
    return out


@dataclass(frozen=True, eq=False)
class StratumMap:
    """Association from the strata of one fabric onto the strata of another.

    Total on the source, surjective onto the target and continuous (monotone
    for inclusion, which is equivalent in these finite topologies).
    """

    source: SupportFabric
    target: SupportFabric
    mapping: dict

    def __init__(self, source, target, mapping):
        mp = {stratum(k): stratum(v) for k, v in mapping.items()}
        if set(mp) != set(source.strata):
            raise DomainError("stratum map must be total on the source strata")
        if not set(mp.values()) <= set(target.strata):
            raise DomainError("stratum map image must consist of target strata")
        if set(mp.values()) != set(target.strata):
            raise DomainError("stratum map must be surjective onto the target strata")
        # Monotone on covering pairs, hence continuous.
        for j in source.strata:
            for i in j:
                sub = tuple(x for x in j if x != i)
                if not _is_subset(mp[sub], mp[j]):
                    raise TopologyError("stratum map is not continuous")
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "mapping", mp)

    def apply(self, j: Stratum) -> Stratum:
        return self.mapping[stratum(j)]

    def preimage(self, family) -> frozenset:
        fam = frozenset(stratum(j) for j in family)
        return frozenset(j for j, v in self.mapping.items() if v in fam)

    def compose(self, earlier: "StratumMap") -> "StratumMap":
        """self : F1 -> F0 composed after earlier : F2 -> F1, giving F2 -> F0."""
        if earlier.target is not self.source and earlier.target.strata != self.source.strata:
            raise DomainError("stratum maps do not compose")
        return StratumMap(
            earlier.source, self.target,
            {j: self.mapping[v] for j, v in earlier.mapping.items()},
        )


def identity_map(fabric: SupportFabric) -> StratumMap:
    return StratumMap(fabric, fabric, {j: j for j in fabric.strata})


@dataclass(frozen=True, eq=False)
class BlowupResult:
    fabric: SupportFabric
    stratum_map: StratumMap
    new_index: int

    def __iter__(self):
        return iter((self.fabric, self.stratum_map))


def blowup(fabric: SupportFabric, center) -> BlowupResult:
    """Blow up a fabric in a nonempty stratum.

    Strata containing the center are replaced: each such K contributes the
    strata (K minus center) + A + {new id} for every proper subset A of the
    center.  The stratum map sends those back to K and fixes the rest.  The
    new id is max(existing ids) + 1, appended last in the total order, so
    replays are reproducible.
    """
    fabric._require_valid()
    j = stratum(center)
    if not j:
        raise DomainError("blow-up center must be nonempty")
    if j not in fabric.strata:
        raise DomainError(f"blow-up center {format_stratum(j)} is not a stratum")
    new_id = max(fabric.indices) + 1
    js = set(j)
    mapping = {}
    new_strata = set()
    above = [k for k in fabric.strata if js <= set(k)]
    for k in fabric.strata:
        if not js <= set(k):
            mapping[k] = k
            new_strata.add(k)
    proper_subsets = [a for a in power_set(j) if len(a) < len(j)]
    for k in above:
        rest = tuple(i for i in k if i not in js)
        fiber = set()
        for a in proper_subsets:
            jp = stratum(rest + a + (new_id,))
            fiber.add(jp)
            mapping[jp] = k
        assert len(fiber) == 2 ** len(j) - 1
        new_strata.update(fiber)
    out = SupportFabric(fabric.indices + (new_id,), frozenset(new_strata))
    smap = StratumMap(out, fabric, mapping)
    assert out.dimension() == fabric.dimension()
    rel = set(fabric.relevant_indices())
    expected = (rel | {new_id}) if len(j) >= 2 else ((rel - set(j)) | {new_id})
    assert set(out.relevant_indices()) == expected
    return BlowupResult(out, smap, new_id)


def decompose_infinity_stratum(fabric: SupportFabric, center, jp) -> tuple[Stratum, Stratum]:
    """Recover (K, A) with jp == (K minus center) + A + {new id}."""
    j = stratum(center)
    jp = stratum(jp)
    foreign = [i for i in jp if i not in set(fabric.indices)]
    if len(foreign) != 1:
        raise DomainError("stratum does not contain exactly one exceptional id")
    inf = foreign[0]
    a = stratum(set(jp) & set(j))
    k = stratum((set(jp) - {inf} - set(a)) | set(j))
    if stratum((set(k) - set(j)) | set(a) | {inf}) != jp or not set(a) < set(j):
        raise DomainError("stratum is not of exceptional blow-up shape")
    return k, a


def connected_components(fabric: SupportFabric, closed_family) -> tuple[tuple[Stratum, ...], ...]:
    """Components of a closed family under the comparability relation.

    Two strata are adjacent when one contains the other; in this finite
    topology that graph's components are the topological ones.  Components
    are ordered by their smallest member, members canonically.
    """
    fam = sorted((stratum(j) for j in closed_family), key=stratum_key)
    if not fabric.is_closed_family(fam):
        raise TopologyError("component decomposition requires a closed family")
    remaining = set(fam)
    comps = []
    for seed in fam:
        if seed not in remaining:
            continue
        comp = {seed}
        remaining.discard(seed)
        frontier = [seed]
        while frontier:
            cur = frontier.pop()
            adj = [o for o in remaining if _is_subset(cur, o) or _is_subset(o, cur)]
            for o in adj:
                remaining.discard(o)
                comp.add(o)
                frontier.append(o)
        comps.append(tuple(sorted(comp, key=stratum_key)))
    comps.sort(key=lambda c: stratum_key(c[0]))
    return tuple(comps)


@dataclass(frozen=True, eq=False)
class Equivalence:
    """A bijection of relevant indices carrying one stratum family onto another."""

    source: SupportFabric
    target: SupportFabric
    mapping: dict

    def __init__(self, source, target, mapping):
        mp = dict(mapping)
        if set(mp) != set(source.relevant_indices()):
            raise DomainError("equivalence must be defined exactly on the relevant indices")
        if sorted(mp.values()) != sorted(set(mp.values())) or set(mp.values()) != set(
            target.relevant_indices()
        ):
            raise DomainError("equivalence must biject onto the target's relevant indices")
        image = {stratum(mp[i] for i in j) for j in source.strata}
        if image != set(target.strata):
            raise DomainError("index bijection does not carry the stratum family over")
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "mapping", mp)

    def apply_stratum(self, j) -> Stratum:
        return stratum(self.mapping[i] for i in stratum(j))

    def inverse(self) -> "Equivalence":
        return Equivalence(self.target, self.source, {v: k for k, v in self.mapping.items()})


def _index_signature(fabric: SupportFabric, i: int):
    sizes = sorted(len(j) for j in fabric.strata if i in j)
    return tuple(sizes)


def iter_equivalences(f1: SupportFabric, f2: SupportFabric):
    """Deterministic backtracking over all index bijections witnessing equivalence."""
    f1._require_valid()
    f2._require_valid()
    rel1 = f1.relevant_indices()
    rel2 = f2.relevant_indices()
    if len(rel1) != len(rel2) or len(f1.strata) != len(f2.strata):
        return
    if sorted(len(j) for j in f1.strata) != sorted(len(j) for j in f2.strata):
        return
    sig2 = {i: _index_signature(f2, i) for i in rel2}
    sig1 = {i: _index_signature(f1, i) for i in rel1}
    target_strata = set(f2.strata)

    def extend(pos, mapping, used):
        if pos == len(rel1):
            if {stratum(mapping[i] for i in j) for j in f1.strata} == target_strata:
                yield dict(mapping)
            return
        i1 = rel1[pos]
        assigned = set(mapping)
        for i2 in rel2:
            if i2 in used or sig1[i1] != sig2[i2]:
                continue
            mapping[i1] = i2
            # Prune with strata fully contained in the assigned ids.
            ok = all(
                stratum(mapping[i] for i in j) in target_strata
                for j in f1.strata
                if set(j) <= assigned | {i1}
            )
            if ok:
                yield from extend(pos + 1, mapping, used | {i2})
            del mapping[i1]

    yield from extend(0, {}, set())


def equivalent(f1: SupportFabric, f2: SupportFabric) -> Equivalence | None:
    """First equivalence between two fabrics in deterministic search order."""
    for mapping in iter_equivalences(f1, f2):
        return Equivalence(f1, f2, mapping)
    return None
