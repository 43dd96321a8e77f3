"""Characteristic polyhedra with exact rational arithmetic.

A characteristic polyhedron over a stratum J is the convex hull of a finite
set of nonnegative rational points plus the nonnegative orthant.  Values are
kept in canonical form: the stored generators are exactly the vertices.  All
transforms work on generators; each is backed by a closure argument (linear
maps send orthant directions into the orthant, and the projective map used
by the Hironaka projection sends vertices to generators of the image).

No floating point anywhere: iterated denominators grow past any fixed width,
so every coordinate is a Fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    DenominatorError,
    DomainError,
    EmptyPolyhedronError,
    PreconditionError,
)
from .fabric import Stratum, format_stratum, stratum

_FM_VARIABLE_LIMIT = 6


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int) and not isinstance(x, bool):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise DomainError(f"coordinates must be exact rationals, got {x!r}")


@dataclass(frozen=True)
class ExponentVector:
    """A point of the nonnegative orthant over a stratum, coordinates aligned with it."""

    support: Stratum
    coords: tuple[Fraction, ...]

    def __init__(self, support, coords):
        sup = stratum(support)
        vals = tuple(_frac(c) for c in coords)
        if len(vals) != len(sup):
            raise DomainError("coordinate count does not match the support")
        for c in vals:
            if c < 0:
                raise DomainError(f"negative coordinate {c} in exponent vector")
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "coords", vals)

    @classmethod
    def _raw(cls, support, coords):
        """Internal constructor for already-validated canonical data."""
        self = object.__new__(cls)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "coords", coords)
        return self

    @property
    def norm(self) -> Fraction:
        """Sum of all coordinates."""
        return sum(self.coords, Fraction(0))

    def coord(self, i: int) -> Fraction:
        try:
            return self.coords[self.support.index(i)]
        except ValueError:
            return Fraction(0)

    def restrict(self, sub) -> "ExponentVector":
        sub = stratum(sub)
        if not set(sub) <= set(self.support):
            raise DomainError("restriction target is not a sub-stratum of the support")
        return ExponentVector._raw(sub, tuple(self.coord(i) for i in sub))

    def scale(self, factor) -> "ExponentVector":
        f = _frac(factor)
        return ExponentVector(self.support, tuple(c * f for c in self.coords))

    def __add__(self, other: "ExponentVector") -> "ExponentVector":
        if self.support != other.support:
            raise DomainError("support mismatch in vector sum")
        return ExponentVector(self.support, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "ExponentVector") -> "ExponentVector":
        if self.support != other.support:
            raise DomainError("support mismatch in vector difference")
        return ExponentVector(self.support, tuple(a - b for a, b in zip(self.coords, other.coords)))

    def dominates(self, other: "ExponentVector") -> bool:
        """Componentwise at least `other`; then self lies in [[{other}]]."""
        return all(a >= b for a, b in zip(self.coords, other.coords))


def vector(support, coords) -> ExponentVector:
    return ExponentVector(support, coords)


def basis_vector(support, i: int) -> ExponentVector:
    """Indicator of i restricted to the support (zero vector when i is absent)."""
    sup = stratum(support)
    return ExponentVector(sup, tuple(Fraction(1) if k == i else Fraction(0) for k in sup))


@dataclass(frozen=True)
class CharPolyhedron:
    """Canonical generators of conv(A) + orthant over a stratum, or the empty polyhedron.

    `denominator` is the declared grid 1/d: every generator coordinate is a
    multiple of it.  Derived polyhedra may carry a coarser declared value than
    strictly needed; `actual_denominator` is the computed minimal one.
    """

    support: Stratum
    denominator: int
    generators: tuple[ExponentVector, ...]

    def __init__(self, support, denominator, generators):
        sup = stratum(support)
        if not isinstance(denominator, int) or denominator < 1:
            raise DenominatorError(f"denominator must be a positive integer, got {denominator!r}")
        gens = tuple(generators)
        for g in gens:
            if g.support != sup:
                raise DomainError("generator support differs from polyhedron support")
            for c in g.coords:
                if (c * denominator).denominator != 1:
                    raise DenominatorError(
                        f"coordinate {c} is not a multiple of 1/{denominator}"
                    )
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "denominator", denominator)
        object.__setattr__(self, "generators", tuple(sorted(gens, key=lambda g: g.coords)))
        object.__setattr__(self, "_memo", {})

    # -- structure ----------------------------------------------------------

    @property
    def is_empty(self) -> bool:
        return not self.generators

    @property
    def actual_denominator(self) -> int:
        out = 1
        for g in self.generators:
            for c in g.coords:
                out = out * c.denominator // math.gcd(out, c.denominator)
        return out

    def _require_nonempty(self):
        if self.is_empty:
            raise EmptyPolyhedronError("operation undefined on the empty polyhedron")

    def delta(self) -> Fraction:
        """Contact exponent: minimal coordinate sum; -1 over the empty support."""
        self._require_nonempty()
        out = self._memo.get("delta")
        if out is None:
            out = Fraction(-1) if not self.support else min(g.norm for g in self.generators)
            self._memo["delta"] = out
        return out

    def single_vertex(self) -> bool:
        self._require_nonempty()
        return len(self.generators) == 1

    def fitting(self) -> tuple[ExponentVector, "CharPolyhedron"]:
        """Componentwise minimum vector and the polyhedron translated onto the axes."""
        self._require_nonempty()
        out = self._memo.get("fitting")
        if out is None:
            w = ExponentVector(
                self.support,
                tuple(min(g.coords[k] for g in self.generators) for k in range(len(self.support))),
            )
            shifted = tuple(g - w for g in self.generators)
            # Translation preserves canonical form.
            out = (w, CharPolyhedron(self.support, self.denominator, shifted))
            self._memo["fitting"] = out
        return out

    def strict_tangent(self) -> Stratum:
        """Ids that occur in the face of minimal coordinate sum; defined when delta is 1."""
        self._require_nonempty()
        if self.delta() != 1:
            raise PreconditionError("strict tangent space requires contact exponent 1")
        out = self._memo.get("tangent")
        if out is None:
            seen = set()
            for g in self.generators:
                if g.norm == 1:
                    seen.update(i for i, c in zip(g.support, g.coords) if c != 0)
            out = stratum(seen)
            self._memo["tangent"] = out
        return out

    def scale(self, factor) -> "CharPolyhedron":
        self._require_nonempty()
        f = _frac(factor)
        if f <= 0:
            raise DomainError("scale factor must be positive")
        gens = tuple(g.scale(f) for g in self.generators)
        denom = 1
        for g in gens:
            for c in g.coords:
                denom = denom * c.denominator // math.gcd(denom, c.denominator)
        # Positive scaling preserves canonical form.
        return CharPolyhedron(self.support, denom, gens)

    def translate_down(self, index: int, amount) -> "CharPolyhedron":
        """Subtract amount * (basis vector of index); requires room on that coordinate."""
        self._require_nonempty()
        amt = _frac(amount)
        if index not in self.support:
            if amt == 0:
                return self
            raise DomainError("translation index outside the support")
        if min(g.coord(index) for g in self.generators) < amt:
            raise PreconditionError("translation would make a coordinate negative")
        e = basis_vector(self.support, index).scale(amt)
        return CharPolyhedron(self.support, self.denominator, tuple(g - e for g in self.generators))

    def project(self, sub) -> "CharPolyhedron":
        """Drop coordinates outside a sub-stratum; image of the polyhedron as a set.

        Memoized per target: systems project the same polyhedra over and over
        during coherence validation.
        """
        sub = stratum(sub)
        cached = self._memo.get(("project", sub))
        if cached is not None:
            return cached
        if not set(sub) <= set(self.support):
            raise DomainError(
                f"projection target {format_stratum(sub)} is not contained in the support"
            )
        if self.is_empty:
            out = CharPolyhedron(sub, self.denominator, ())
        else:
            out = make((g.restrict(sub) for g in self.generators), self.denominator)
        self._memo[("project", sub)] = out
        return out

    def member(self, point: ExponentVector) -> bool:
        """Exact membership test: some convex combination of generators is below the point."""
        if point.support != self.support:
            raise DomainError("membership query must share the polyhedron's support")
        if self.is_empty:
            return False
        if not self.support:
            return True
        rows = [g.coords for g in self.generators]
        target = point.coords
        return _convex_cover_feasible(rows, target)

    def __str__(self):
        if self.is_empty:
            return f"empty/{format_stratum(self.support)}"
        body = " ".join("(" + ",".join(str(c) for c in g.coords) + ")" for g in self.generators)
        return f"[[{body}]]/{format_stratum(self.support)}"


def empty_polyhedron(support, denominator: int) -> CharPolyhedron:
    return CharPolyhedron(support, denominator, ())


def point_polyhedron(denominator: int = 1) -> CharPolyhedron:
    """The unique nonempty polyhedron over the empty support."""
    return CharPolyhedron((), denominator, (ExponentVector((), ()),))


def make(vectors, denominator: int) -> CharPolyhedron:
    """Build a polyhedron from any finite generating set, canonicalizing it.

    Canonicalization is dominance pruning (drop points componentwise above
    another) followed by vertex filtering: a surviving point is dropped when
    it lies in the hull of the others.  Both steps are order independent, so
    the result is the vertex set.
    """
    vecs = list(vectors)
    if not vecs:
        raise DomainError("a generating set must be nonempty; use empty_polyhedron instead")
    sup = vecs[0].support
    for v in vecs:
        if v.support != sup:
            raise DomainError("generators must share a common support")
    distinct = sorted({v.coords for v in vecs})
    kept = []
    for c in distinct:
        if not any(o != c and all(a >= b for a, b in zip(c, o)) for o in distinct):
            kept.append(c)
    if len(kept) > 2:
        # Two incomparable points are always both vertices; more need the solver.
        i = 0
        while i < len(kept):
            others = kept[:i] + kept[i + 1:]
            if _convex_cover_feasible(others, kept[i]):
                kept.pop(i)
            else:
                i += 1
    return CharPolyhedron(sup, denominator, tuple(ExponentVector._raw(sup, c) for c in kept))


def member(point: ExponentVector, poly: CharPolyhedron) -> bool:
    return poly.member(point)


# -- transforms under blow-up and projection --------------------------------


def _split_exceptional(poly: CharPolyhedron, center, target) -> tuple[Stratum, int]:
    k = poly.support
    j = stratum(center)
    jp = stratum(target)
    if not set(j) <= set(k):
        raise DomainError("blow-up center must be contained in the polyhedron support")
    foreign = [i for i in jp if i not in set(k)]
    if len(foreign) != 1:
        raise DomainError("target stratum must contain exactly one new id")
    inf = foreign[0]
    a = stratum(set(jp) & set(j))
    if not set(a) < set(j):
        raise DomainError("target stratum meets the whole blow-up center")
    if stratum((set(k) - set(j)) | set(a) | {inf}) != jp:
        raise DomainError("target stratum is not of blow-up shape over this support")
    return j, inf


def lambda_push(poly: CharPolyhedron, center, target) -> CharPolyhedron:
    """Push a polyhedron to an exceptional stratum: old coordinates kept, the
    new coordinate is the coordinate sum over the blow-up center."""
    poly._require_nonempty()
    j, inf = _split_exceptional(poly, center, target)
    jp = stratum(target)
    js = set(j)
    images = []
    for g in poly.generators:
        center_sum = sum((c for i, c in zip(g.support, g.coords) if i in js), Fraction(0))
        images.append(
            ExponentVector(jp, tuple(center_sum if i == inf else g.coord(i) for i in jp))
        )
    return make(images, poly.denominator)


def char_push(poly: CharPolyhedron, center, target) -> CharPolyhedron:
    """lambda_push followed by subtracting one unit on the new coordinate."""
    jp = stratum(target)
    foreign = [i for i in jp if i not in set(poly.support)]
    if not foreign:
        # A stratum away from the center keeps its polyhedron.
        if jp != poly.support:
            raise DomainError("non-exceptional target must equal the support")
        return poly
    poly._require_nonempty()
    j = stratum(center)
    if min(g.restrict(j).norm for g in poly.generators) < 1:
        raise PreconditionError(
            "characteristic push needs contact exponent at least 1 over the center"
        )
    pushed = lambda_push(poly, center, target)
    return pushed.translate_down(foreign[0], 1)


def hironaka_project(poly: CharPolyhedron, t) -> CharPolyhedron:
    """Projective projection from a sub-stratum t.

    A generator with coordinate sum below 1 on t maps to its restriction off
    t divided by (1 - that sum); generators at or above 1 fall outside the
    domain and are discarded.  Images of the qualifying vertices generate the
    image polyhedron; the result is empty exactly when nothing qualifies.
    Coordinate denominators divide d! * d for declared denominator d.
    """
    t = stratum(t)
    if not t or not set(t) <= set(poly.support):
        raise DomainError("projection sub-stratum must be nonempty inside the support")
    rest = stratum(set(poly.support) - set(t))
    new_denom = math.factorial(poly.denominator) * poly.denominator
    images = []
    for g in poly.generators:
        tsum = g.restrict(t).norm
        if tsum < 1:
            images.append(g.restrict(rest).scale(Fraction(1) / (1 - tsum)))
    if not images:
        return empty_polyhedron(rest, new_denom)
    return make(images, new_denom)


# -- exact feasibility solvers ----------------------------------------------
#
# Membership asks for lambda >= 0 with sum(lambda) = 1 and G^T lambda <= target.
# Fourier-Motzkin eliminates the lambdas when there are few; a phase-1 simplex
# with Bland's rule covers larger generator counts.  Both are exact.


def _convex_cover_feasible(rows, target) -> bool:
    m = len(rows)
    n = len(target)
    # A single generator below the target decides immediately.
    for r in rows:
        if all(a <= b for a, b in zip(r, target)):
            return True
    if m == 1:
        return False
    # Cheap necessary conditions.
    for k in range(n):
        if target[k] < min(r[k] for r in rows):
            return False
    if sum(target) < min(sum(r) for r in rows):
        return False
    if m <= _FM_VARIABLE_LIMIT:
        return _fm_feasible(rows, target)
    return _simplex_feasible(rows, target)


def _normalize_row(coeffs, const):
    """Scale so the coefficient vector is primitive integer; key rows by direction."""
    denom = 1
    for c in coeffs:
        denom = denom * c.denominator // math.gcd(denom, c.denominator)
    ints = [int(c * denom) for c in coeffs]
    g = 0
    for v in ints:
        g = math.gcd(g, abs(v))
    if g == 0:
        return tuple(ints), const
    scale = Fraction(denom, g)
    return tuple(v // g for v in ints), const * scale


def _fm_feasible(rows, target) -> bool:
    """Eliminate the convex weights one by one; constants decide feasibility."""
    m = len(rows)
    system = []  # (coeffs over lambda, const) meaning coeffs . lambda <= const
    one = Fraction(1)
    for k in range(len(target)):
        system.append(_normalize_row([Fraction(r[k]) for r in rows], Fraction(target[k])))
    system.append(_normalize_row([one] * m, one))
    system.append(_normalize_row([-one] * m, -one))
    for i in range(m):
        system.append(_normalize_row([-one if k == i else Fraction(0) for k in range(m)], Fraction(0)))

    for var in range(m):
        pos, neg, zero = [], [], []
        for coeffs, const in system:
            a = coeffs[var]
            if a > 0:
                pos.append((coeffs, const))
            elif a < 0:
                neg.append((coeffs, const))
            else:
                zero.append((coeffs, const))
        best = {}
        for coeffs, const in zero:
            key = coeffs
            if key not in best or const < best[key]:
                best[key] = const
        for pc, pb in pos:
            ap = pc[var]
            for nc, nb in neg:
                an = -nc[var]
                coeffs = tuple(an * p + ap * q for p, q in zip(pc, nc))
                const = an * pb + ap * nb
                coeffs, const = _normalize_row(
                    [Fraction(c) for c in coeffs], Fraction(const)
                )
                if _all_zero(coeffs):
                    if const < 0:
                        return False
                    continue
                if coeffs not in best or const < best[coeffs]:
                    best[coeffs] = const
        system = [(c, b) for c, b in best.items()]
        for coeffs, const in system:
            if _all_zero(coeffs) and const < 0:
                return False
    return all(const >= 0 for coeffs, const in system)


def _all_zero(coeffs) -> bool:
    return all(c == 0 for c in coeffs)


def _simplex_feasible(rows, target) -> bool:
    """Phase-1 simplex for sum(lambda)=1, G^T lambda + slack = target, all vars >= 0.

    One artificial variable per row, Bland's rule, exact fractions; feasible
    exactly when the artificial objective reaches zero.
    """
    m = len(rows)
    n = len(target)
    nrows = n + 1
    nvars = m + n + nrows  # lambdas, slacks, artificials
    tab = []
    for k in range(n):
        row = [Fraction(rows[i][k]) for i in range(m)]
        row += [Fraction(1) if s == k else Fraction(0) for s in range(n)]
        row += [Fraction(1) if a == k else Fraction(0) for a in range(nrows)]
        row.append(Fraction(target[k]))
        tab.append(row)
    row = [Fraction(1)] * m + [Fraction(0)] * n
    row += [Fraction(1) if a == n else Fraction(0) for a in range(nrows)]
    row.append(Fraction(1))
    tab.append(row)
    basis = [m + n + r for r in range(nrows)]
    # Objective: minimize the sum of artificials; start from the row sums.
    obj = [sum(tab[r][c] for r in range(nrows)) for c in range(nvars + 1)]
    for c in range(m + n, m + n + nrows):
        obj[c] = Fraction(0)

    while True:
        enter = next((c for c in range(m + n) if obj[c] > 0), None)
        if enter is None:
            return obj[nvars] == 0
        ratios = [
            (tab[r][nvars] / tab[r][enter], basis[r], r)
            for r in range(nrows)
            if tab[r][enter] > 0
        ]
        if not ratios:
            return obj[nvars] == 0
        _, _, piv = min(ratios)
        pr = tab[piv]
        pv = pr[enter]
        tab[piv] = [x / pv for x in pr]
        for r in range(nrows):
            if r != piv and tab[r][enter] != 0:
                f = tab[r][enter]
                tab[r] = [x - f * y for x, y in zip(tab[r], tab[piv])]
        if obj[enter] != 0:
            f = obj[enter]
            obj = [x - f * y for x, y in zip(obj, tab[piv])]
        basis[piv] = enter
