"""Support fabric operations and their topology invariants."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import polyfab as pf
from polyfab.errors import (
    DomainError,
    EmptyFabricError,
    TopologyError,
)
from polyfab.fabric import power_set, stratum


def fab(indices, strata):
    return pf.SupportFabric(tuple(indices), frozenset(stratum(j) for j in strata))


@st.composite
def fabrics(draw, max_indices=4):
    n = draw(st.integers(1, max_indices))
    indices = tuple(range(1, n + 1))
    tops = draw(
        st.lists(
            st.sets(st.sampled_from(indices), min_size=1), min_size=1, max_size=3
        )
    )
    strata = {()}
    for top in tops:
        strata.update(power_set(stratum(top)))
    return pf.SupportFabric(indices, frozenset(strata))


# -- construction -----------------------------------------------------------


def test_constructor_rejects_non_open_family():
    with pytest.raises(TopologyError):
        fab([1, 2], [(1, 2)])  # missing the singletons and the empty stratum


def test_constructor_rejects_foreign_ids():
    with pytest.raises(DomainError):
        fab([1], [(), (2,)])


def test_degenerate_fabric_is_representable_but_rejected():
    empty = fab([1], [])
    assert empty.degenerate
    with pytest.raises(EmptyFabricError):
        empty.dimension()
    with pytest.raises(EmptyFabricError):
        empty.closed_points()
    with pytest.raises(EmptyFabricError):
        pf.blowup(empty, (1,))


# -- dimension ----------------------------------------------------------------


def test_dimension_of_full_power_set():
    assert pf.local_fabric((1, 2)).dimension() == 2


def test_dimension_of_four_index_example(four_index_fabric):
    assert four_index_fabric.dimension() == 3


def test_dimension_of_point_fabric():
    assert fab([1], [()]).dimension() == 0


# -- closed points --------------------------------------------------------------


def test_closed_points_local():
    assert pf.local_fabric((1, 2)).closed_points() == ((1, 2),)


def test_closed_points_four_index(four_index_fabric):
    # Every other stratum has a proper superset inside the family.
    assert four_index_fabric.closed_points() == ((1, 2, 3), (2, 3, 4))


def test_closed_points_two_singletons():
    assert fab([1, 2], [(), (1,), (2,)]).closed_points() == ((1,), (2,))


# -- restrict -------------------------------------------------------------------


def test_restrict_to_power_set_of_singleton():
    out = pf.local_fabric((1, 2)).restrict([(), (1,)])
    assert out.indices == (1, 2)
    assert out.strata == frozenset({(), (1,)})


def test_restrict_identity():
    f = pf.local_fabric((1, 2))
    assert f.restrict(f.strata).strata == f.strata


def test_restrict_away_closed_points_drops_dimension(four_index_fabric):
    u = set(four_index_fabric.strata) - set(four_index_fabric.closed_points())
    out = four_index_fabric.restrict(u)
    assert out.dimension() == 2


def test_restrict_rejects_non_open():
    with pytest.raises(TopologyError):
        pf.local_fabric((1, 2)).restrict([(1,)])


def test_restrict_rejects_family_outside():
    with pytest.raises(DomainError):
        fab([1, 2], [(), (1,)]).restrict([(), (2,)])


# -- reduce ----------------------------------------------------------------------


def test_reduce_to_whole_closed_point():
    f = pf.local_fabric((1, 2))
    assert f.reduce([(1, 2)]).strata == f.strata


def test_reduce_four_index(four_index_fabric):
    out = four_index_fabric.reduce([(2, 3), (1, 2, 3), (2, 3, 4)])
    expected = set(power_set((1, 2, 3))) | set(power_set((2, 3, 4)))
    assert out.strata == frozenset(expected)


def test_reduce_empty_family_is_degenerate():
    out = pf.local_fabric((1, 2)).reduce([])
    assert out.degenerate
    assert out.indices == (1, 2)


def test_reduce_rejects_non_closed():
    with pytest.raises(TopologyError):
        pf.local_fabric((1, 2)).reduce([(1,)])  # {1,2} missing


# -- project ----------------------------------------------------------------------


def test_project_local_two():
    out = pf.local_fabric((1, 2)).project((1,))
    assert out.indices == (2,)
    assert out.strata == frozenset({(), (2,)})


def test_project_local_three():
    out = pf.local_fabric((1, 2, 3)).project((3,))
    assert out.strata == frozenset(power_set((1, 2)))


def test_project_four_index(four_index_fabric):
    out = four_index_fabric.project((2, 3))
    assert out.indices == (1, 4)
    assert out.strata == frozenset({(), (1,), (4,)})


def test_project_rejects_bad_center():
    with pytest.raises(DomainError):
        pf.local_fabric((1, 2)).project(())
    with pytest.raises(DomainError):
        fab([1, 2], [(), (1,)]).project((2,))


# -- blowup -----------------------------------------------------------------------


def test_blowup_at_top_stratum():
    res = pf.blowup(pf.local_fabric((1, 2)), (1, 2))
    assert res.new_index == 3
    assert res.fabric.strata == frozenset(
        {(), (1,), (2,), (3,), (1, 3), (2, 3)}
    )


def test_blowup_single_index_fabric():
    res = pf.blowup(pf.local_fabric((1,)), (1,))
    assert res.fabric.indices == (1, 2)
    assert res.fabric.strata == frozenset({(), (2,)})
    assert res.fabric.relevant_indices() == (2,)


def test_blowup_at_singleton():
    res = pf.blowup(pf.local_fabric((1, 2)), (1,))
    assert res.fabric.strata == frozenset({(), (2,), (3,), (2, 3)})


def test_blowup_map_sends_fibers_to_center_closure():
    res = pf.blowup(pf.local_fabric((1, 2)), (1,))
    assert res.stratum_map.apply((3,)) == (1,)
    assert res.stratum_map.apply((2, 3)) == (1, 2)
    assert res.stratum_map.apply((2,)) == (2,)


def test_blowup_rejects_bad_center():
    with pytest.raises(DomainError):
        pf.blowup(pf.local_fabric((1, 2)), ())
    with pytest.raises(DomainError):
        pf.blowup(fab([1, 2], [(), (1,)]), (1, 2))


@settings(deadline=None, max_examples=120)
@given(fabrics(), st.data())
def test_blowup_preserves_dimension_and_openness(f, data):
    centers = sorted(j for j in f.strata if j)
    if not centers:
        return
    center = data.draw(st.sampled_from(centers))
    res = pf.blowup(f, center)
    assert res.fabric.dimension() == f.dimension()
    # openness is checked by the constructor; spot-check fiber sizes
    above = [k for k in f.strata if set(center) <= set(k)]
    fibers = [j for j in res.fabric.strata if res.new_index in j]
    assert len(fibers) == len(above) * (2 ** len(center) - 1)


@settings(deadline=None, max_examples=120)
@given(fabrics(), st.data())
def test_stratum_map_continuity(f, data):
    centers = sorted(j for j in f.strata if j)
    if not centers:
        return
    center = data.draw(st.sampled_from(centers))
    res = pf.blowup(f, center)
    opens = data.draw(
        st.sets(st.sampled_from(sorted(f.strata)), min_size=0, max_size=4)
    )
    fam = set()
    for j in opens:
        fam.update(power_set(j))
    pre = res.stratum_map.preimage(fam)
    assert res.fabric.is_open_family(pre)


@settings(deadline=None, max_examples=100)
@given(fabrics(), st.data())
def test_restriction_blowup_commutation(f, data):
    centers = sorted(j for j in f.strata if j)
    if not centers:
        return
    center = data.draw(st.sampled_from(centers))
    seeds = data.draw(st.sets(st.sampled_from(sorted(f.strata)), max_size=3))
    fam = set(power_set(center))
    for j in seeds:
        fam.update(power_set(j))
    restricted_then_blown = pf.blowup(f.restrict(fam), center)
    blown = pf.blowup(f, center)
    blown_then_restricted = blown.fabric.restrict(blown.stratum_map.preimage(fam))
    assert restricted_then_blown.fabric.strata == blown_then_restricted.strata


# -- decompose_infinity_stratum ----------------------------------------------------


def test_decompose_basic():
    f = pf.local_fabric((1, 2))
    pf.blowup(f, (1, 2))
    assert pf.decompose_infinity_stratum(f, (1, 2), (1, 3)) == ((1, 2), (1,))


def test_decompose_singleton_center():
    f = pf.local_fabric((1, 2))
    assert pf.decompose_infinity_stratum(f, (1,), (2, 3)) == ((1, 2), ())


def test_decompose_bare_infinity():
    f = pf.local_fabric((1, 2))
    assert pf.decompose_infinity_stratum(f, (1, 2), (3,)) == ((1, 2), ())


def test_decompose_requires_new_id():
    f = pf.local_fabric((1, 2))
    with pytest.raises(DomainError):
        pf.decompose_infinity_stratum(f, (1, 2), (1, 2))


# -- connected components ------------------------------------------------------------


def test_components_of_connected_family(four_index_fabric):
    comps = pf.connected_components(
        four_index_fabric, [(2, 3), (1, 2, 3), (2, 3, 4)]
    )
    assert comps == (((2, 3), (1, 2, 3), (2, 3, 4)),)


def test_components_of_incomparable_singletons():
    f = fab([1, 2], [(), (1,), (2,)])
    assert pf.connected_components(f, [(1,), (2,)]) == (((1,),), ((2,),))


def test_components_of_empty_family():
    assert pf.connected_components(pf.local_fabric((1, 2)), []) == ()


def test_components_require_closed_family():
    with pytest.raises(TopologyError):
        pf.connected_components(pf.local_fabric((1, 2)), [(1,)])


# -- equivalence -----------------------------------------------------------------------


def test_equivalence_identity():
    f = pf.local_fabric((1, 2))
    eq = pf.equivalent(f, f)
    assert eq is not None
    assert eq.mapping == {1: 1, 2: 2}


def test_equivalence_relabeling():
    f1 = fab([1, 2], [(), (1,)])
    f2 = fab([5, 9], [(), (9,)])
    eq = pf.equivalent(f1, f2)
    assert eq is not None
    assert eq.mapping == {1: 9}


def test_equivalence_distinguishes_stratum_count():
    assert pf.equivalent(pf.local_fabric((1, 2)), fab([1, 2], [(), (1,), (2,)])) is None


@settings(deadline=None, max_examples=60)
@given(fabrics())
def test_equivalence_is_reflexive_and_symmetric(f):
    eq = pf.equivalent(f, f)
    assert eq is not None
    relabel = {i: i + 10 for i in f.indices}
    g = pf.SupportFabric(
        tuple(relabel[i] for i in f.indices),
        frozenset(tuple(relabel[i] for i in j) for j in f.strata),
    )
    fwd = pf.equivalent(f, g)
    back = pf.equivalent(g, f)
    assert fwd is not None and back is not None
    assert fwd.inverse().mapping == {v: k for k, v in fwd.mapping.items()}


@settings(deadline=None, max_examples=60)
@given(fabrics(), st.data())
def test_equivalence_commutes_with_blowup(f, data):
    centers = sorted(j for j in f.strata if j)
    if not centers:
        return
    center = data.draw(st.sampled_from(centers))
    relabel = {i: 2 * i + 1 for i in f.indices}
    g = pf.SupportFabric(
        tuple(sorted(relabel[i] for i in f.indices)),
        frozenset(stratum(relabel[i] for i in j) for j in f.strata),
    )
    eq = pf.equivalent(f, g)
    assert eq is not None
    bf = pf.blowup(f, center)
    bg = pf.blowup(g, eq.apply_stratum(center))
    assert pf.equivalent(bf.fabric, bg.fabric) is not None


def test_equivalence_search_is_deterministic():
    f = fab([1, 2], [(), (1,), (2,)])
    g = fab([7, 8], [(), (7,), (8,)])
    eq1 = pf.equivalent(f, g)
    eq2 = pf.equivalent(f, g)
    assert eq1.mapping == eq2.mapping == {1: 7, 2: 8}
