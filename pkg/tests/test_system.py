"""Polyhedra systems: coherence, classification, transforms, projections."""

from fractions import Fraction as F

import pytest

import polyfab as pf
from polyfab.errors import (
    CoherenceError,
    DomainError,
    EmptySystemError,
    PreconditionError,
)
from polyfab.system import PolyhedraSystem

from conftest import ev, iter_random, local, poly


def gens(system, j):
    return [g.coords for g in system.poly(j).generators]


# -- validate -----------------------------------------------------------------


def test_validate_accepts_worked_example(inconsistent_system):
    report = pf.validate(inconsistent_system)
    assert report.ok and report.problems == ()


def test_validate_reports_first_coherence_violation(inconsistent_system):
    bad_polys = dict(inconsistent_system.polyhedra)
    bad_polys[(2,)] = poly((2,), [(1,)], 2)
    bad = PolyhedraSystem(inconsistent_system.fabric, bad_polys, 2)
    report = pf.validate(bad)
    assert not report.ok
    assert report.violating_pair == ((2,), (1, 2, 3))


def test_validate_local_system_by_construction():
    report = pf.validate(local([(1, 1)]))
    assert report.ok


def test_validate_rejects_missing_polyhedron():
    D = local([(1, 1)])
    polys = dict(D.polyhedra)
    del polys[(1,)]
    report = pf.validate(PolyhedraSystem(D.fabric, polys, 1))
    assert not report.ok and "missing" in report.problems[0]


def test_validate_rejects_off_grid_coordinate():
    D = local([(F(1, 2), 1)], 2)
    report = pf.validate(PolyhedraSystem(D.fabric, D.polyhedra, 1))
    assert not report.ok and "grid" in report.problems[0]


def test_validate_rejects_partial_emptiness():
    D = local([(1, 1)])
    polys = dict(D.polyhedra)
    polys[(1,)] = pf.empty_polyhedron((1,), 1)
    report = pf.validate(PolyhedraSystem(D.fabric, polys, 1))
    assert not report.ok and "empty" in report.problems[0]


# -- from_closed_strata -----------------------------------------------------------


def test_from_closed_strata_fills_projections(inconsistent_system):
    assert gens(inconsistent_system, (2, 3)) == [(0, 1), (1, 0)]
    assert gens(inconsistent_system, (2,)) == [(0,)]


def test_from_closed_strata_equals_local_construction():
    p = poly((1, 2), [(1, 1)])
    via_closed = pf.from_closed_strata(pf.local_fabric((1, 2)), {(1, 2): p}, 1)
    assert pf.systems_equal(via_closed, pf.local_system(p, 1))


def test_from_closed_strata_conflict(four_index_fabric):
    p123 = poly((1, 2, 3), [(0, 0, 1)])
    p234 = poly((2, 3, 4), [(1, 1, 1)])  # projections to {2,3} disagree
    with pytest.raises(CoherenceError) as err:
        pf.from_closed_strata(four_index_fabric, {(1, 2, 3): p123, (2, 3, 4): p234}, 1)
    assert err.value.witness is not None


def test_from_closed_strata_requires_exact_cover(four_index_fabric):
    with pytest.raises(DomainError):
        pf.from_closed_strata(
            four_index_fabric, {(1, 2, 3): poly((1, 2, 3), [(0, 0, 1)])}, 1
        )


# -- sing / delta_max / classify -----------------------------------------------------


def test_sing_of_worked_example(inconsistent_system):
    assert pf.sing(inconsistent_system) == ((2, 3), (1, 2, 3), (2, 3, 4))
    assert pf.delta_max(inconsistent_system) == 1


def test_sing_of_square_vertex():
    D = local([(1, 1)])
    assert pf.sing(D) == ((1,), (2,), (1, 2))
    assert pf.delta_max(D) == 2


def test_sing_skips_nonsingular_projection():
    D = local([(0, 1)])
    assert pf.sing(D) == ((2,), (1, 2))
    assert pf.delta_max(D) == 1


def test_sing_upward_closed_on_random_systems():
    for D in iter_random(5000, count=60):
        singular = set(pf.sing(D))
        for j in singular:
            for k in D.fabric.strata:
                if set(j) <= set(k):
                    assert k in singular


def test_classify_quasi_ordinary():
    assert pf.classify(local([(1, 1)])) is pf.Classification.QUASI_ORDINARY


def test_classify_special(inconsistent_system):
    assert pf.classify(inconsistent_system) is pf.Classification.SPECIAL


def test_classify_general():
    assert pf.classify(local([(2, 0), (0, 3)])) is pf.Classification.GENERAL


def test_classify_nonsingular():
    assert pf.classify(local([(0, 0)])) is pf.Classification.NON_SINGULAR


def test_all_empty_system_rejected_by_operations(inconsistent_system):
    flagged = pf.hironaka_project_system(inconsistent_system, (2, 3))
    assert flagged.all_empty
    with pytest.raises(EmptySystemError):
        pf.sing(flagged)
    with pytest.raises(EmptySystemError):
        pf.delta_max(flagged)


# -- total / characteristic / moderated transforms -------------------------------------


def test_total_transform_monomial_square():
    N = local([(1, 0), (0, 1)])
    out = pf.total_transform(N, (1, 2))
    assert gens(out, (1, 3)) == [(0, 1)]
    assert gens(out, (2, 3)) == [(0, 1)]
    assert gens(out, (3,)) == [(1,)]


def test_total_transform_singleton_center():
    out = pf.total_transform(local([(1,)], support=(1,)), (1,))
    assert gens(out, (2,)) == [(1,)]


def test_total_transform_keeps_single_vertex():
    out = pf.total_transform(local([(2, 3)]), (1, 2))
    assert all(out.poly(j).single_vertex() for j in out.fabric.strata)


def test_char_transform_square_vertex_repeats_on_closed_charts():
    D = local([(1, 1)])
    out = pf.char_transform(D, (1, 2))
    assert gens(out, (1, 3)) == [(1, 1)]
    assert gens(out, (2, 3)) == [(1, 1)]
    assert gens(out, (3,)) == [(1,)]


def test_char_transform_singleton_center():
    out = pf.char_transform(local([(1, 1)]), (1,))
    assert gens(out, (2, 3)) == [(1, 0)]
    assert gens(out, (3,)) == [(0,)]


def test_char_transform_requires_singular_center():
    with pytest.raises(PreconditionError):
        pf.char_transform(local([(0, 1)]), (1,))


def test_char_transform_of_special_stays_special(inconsistent_system):
    out = pf.char_transform(inconsistent_system, (2, 3))
    assert pf.delta_max(out) <= 1
    assert pf.validate(out).ok


def test_moderated_transform_level_two():
    N = local([(2, 0), (0, 2)])
    out = pf.moderated_transform(N, (1, 2), 2)
    assert gens(out, (1, 3)) == [(0, 0)]
    assert out.denominator == 1


def test_moderated_transform_level_one_is_characteristic():
    N = local([(1, 0), (0, 1)])
    a = pf.moderated_transform(N, (1, 2), 1)
    b = pf.char_transform(N, (1, 2))
    assert pf.systems_equal(a, b)


def test_moderated_round_trip_matches_characteristic_on_divided_system():
    N = local([(2, 0), (0, 2)])
    D = pf.divide_system(N, 2)
    assert pf.systems_equal(pf.newton_system(D), N)
    via_mod = pf.divide_system(pf.moderated_transform(N, (1, 2), 2), 2)
    via_char = pf.char_transform(D, (1, 2))
    assert pf.systems_equal(via_mod, via_char)


def test_moderated_transform_requires_enough_contact():
    N = local([(1, 0), (0, 1)])
    with pytest.raises(PreconditionError):
        pf.moderated_transform(N, (1, 2), 2)


def test_transforms_preserve_coherence_on_random_systems():
    checked = 0
    for D in iter_random(6000, count=40):
        for j in pf.sing(D):
            out = pf.char_transform(D, j)
            assert pf.validate(out).ok
            checked += 1
            break
    assert checked > 10


def test_quasi_ordinary_closed_under_char_transform():
    for D in iter_random(6500, count=60):
        if pf.classify(D) is not pf.Classification.QUASI_ORDINARY:
            continue
        j = pf.sing(D)[0]
        out = pf.char_transform(D, j)
        if pf.sing(out):
            assert pf.classify(out) in (
                pf.Classification.QUASI_ORDINARY,
                pf.Classification.NON_SINGULAR,
            )


# -- hironaka projection of systems ------------------------------------------------------


def test_hironaka_project_system_worked_example():
    D = local([(0, 0, 1), (1, 1, 0)])
    out = pf.hironaka_project_system(D, (3,))
    assert out.denominator == 1
    assert gens(out, (1, 2)) == [(1, 1)]
    assert gens(out, (1,)) == [(1,)]
    assert gens(out, (2,)) == [(1,)]
    assert pf.sing(out) == ((1,), (2,), (1, 2))


def test_hironaka_project_system_singular_center_flagged(inconsistent_system):
    out = pf.hironaka_project_system(inconsistent_system, (2, 3))
    assert out.all_empty
    assert all(p.is_empty for p in out.polyhedra.values())


def test_hironaka_project_system_denominator_bookkeeping(inconsistent_system):
    out = pf.hironaka_project_system(inconsistent_system, (3,))
    assert out.denominator == 4  # 2! * 2


# -- spivakovsky ---------------------------------------------------------------------------


def test_spivakovsky_basic():
    report, special = pf.spivakovsky(local([(2, 0), (0, 3)]))
    assert report.spi == 2
    assert report.argmax == ((1, 2),)
    assert [g.coords for g in special.poly((1, 2)).generators] == [(0, F(3, 2)), (1, 0)]
    assert pf.classify(special) is pf.Classification.SPECIAL
    assert pf.sing(special) == report.argmax


def test_spivakovsky_zero_for_quasi_ordinary():
    report, special = pf.spivakovsky(local([(1, 1)]))
    assert report.spi == 0 and special is None


def test_spivakovsky_fitted_union():
    report, special = pf.spivakovsky(local([(1, 2), (3, 1)]))
    assert report.spi == 1
    assert [g.coords for g in special.poly((1, 2)).generators] == [(0, 1), (2, 0)]


def test_spivakovsky_declared_denominator_is_minimal():
    _, special = pf.spivakovsky(local([(2, 0), (0, 3)]))
    assert special.denominator == 2


# -- maximal contact -------------------------------------------------------------------------


def test_candidates_empty_for_inconsistent_component(inconsistent_system):
    comps = pf.connected_components(
        inconsistent_system.fabric, pf.sing(inconsistent_system)
    )
    reduced = pf.reduce_system(inconsistent_system, comps[0])
    assert pf.maximal_contact_candidates(reduced) == ()
    assert not pf.consistent(inconsistent_system)


def test_candidates_for_local_example():
    D = local([(0, 0, 1), (1, 1, 0)])
    assert pf.maximal_contact_candidates(D) == ((3,),)
    assert pf.consistent(D)


def test_candidates_are_subsets_of_top_tangent():
    D = local([(0, 1, 0), (1, 0, 0)])
    cands = pf.maximal_contact_candidates(D)
    top = set(D.poly((1, 2, 3)).strict_tangent())
    assert cands and all(set(c) <= top for c in cands)
    assert cands[0] == (1, 2)  # descending cardinality first
    assert cands == ((1, 2), (1,), (2,))


# -- equivalence ------------------------------------------------------------------------------


def test_equivalent_systems_identity(inconsistent_system):
    eq = pf.equivalent_systems(inconsistent_system, inconsistent_system)
    assert eq is not None
    assert eq.mapping == {i: i for i in (1, 2, 3, 4)}


def test_equivalent_systems_relabeled():
    D1 = local([(1, 2), (2, 1)])
    p = poly((5, 7), [(1, 2), (2, 1)])
    D2 = pf.local_system(p, 1)
    eq = pf.equivalent_systems(D1, D2)
    assert eq is not None
    assert eq.mapping == {1: 5, 2: 7}


def test_equivalent_systems_asymmetric_relabeling():
    D1 = local([(1, 2)])  # vertex puts 1 on index 1, 2 on index 2
    p = poly((5, 7), [(2, 1)])
    D2 = pf.local_system(p, 1)
    eq = pf.equivalent_systems(D1, D2)
    assert eq is not None and eq.mapping == {1: 7, 2: 5}


def test_equivalent_systems_rejects_different_polyhedra():
    assert pf.equivalent_systems(local([(1, 1)]), local([(1, 0), (0, 1)])) is None


def test_equivalent_systems_requires_same_denominator():
    assert (
        pf.equivalent_systems(local([(1, 1)]), local([(F(1, 2), 1)], 2)) is None
    )


# -- restriction, reduction, fitting, scaling ---------------------------------------------------


def test_restrict_and_reduce_system(inconsistent_system):
    comps = pf.connected_components(
        inconsistent_system.fabric, pf.sing(inconsistent_system)
    )
    red = pf.reduce_system(inconsistent_system, comps[0])
    assert set(red.fabric.strata) == {
        j
        for top in [(1, 2, 3), (2, 3, 4)]
        for j in __import__("polyfab.fabric", fromlist=["power_set"]).power_set(top)
    }
    assert pf.validate(red).ok


def test_fitting_system_is_coherent():
    D = local([(1, 2), (3, 1)])
    fitted = pf.fitting_system(D)
    assert pf.validate(fitted).ok
    assert [g.coords for g in fitted.poly((1, 2)).generators] == [(0, 1), (2, 0)]


def test_divide_then_newton_round_trip():
    D = local([(1, 1)], 1)
    halved = pf.divide_system(D, 2)
    assert halved.denominator == 2
    assert pf.systems_equal(pf.newton_system(halved), D)
