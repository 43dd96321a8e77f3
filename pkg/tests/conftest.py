"""Shared fixtures: the worked example systems and small builders."""

from fractions import Fraction

import pytest

import polyfab as pf
from polyfab.fabric import power_set


def ev(support, coords):
    return pf.vector(support, coords)


def poly(support, rows, d=1):
    return pf.make([ev(support, r) for r in rows], d)


def local(rows, d=1, support=None):
    support = support or tuple(range(1, len(rows[0]) + 1))
    return pf.local_system(poly(support, rows, d), d)


F = Fraction


@pytest.fixture
def four_index_fabric():
    """Four indices, power set minus the four families above {1,4}."""
    banned = {(1, 4), (1, 2, 4), (1, 3, 4), (1, 2, 3, 4)}
    strata = frozenset(s for s in power_set((1, 2, 3, 4)) if s not in banned)
    return pf.SupportFabric((1, 2, 3, 4), strata)


@pytest.fixture
def inconsistent_system(four_index_fabric):
    """The denominator-2 system over the four-index fabric with no maximal contact."""
    p123 = poly((1, 2, 3), [(0, 0, 1), (F(1, 2), 1, 0)], 2)
    p234 = poly((2, 3, 4), [(1, 0, 0), (0, 1, F(1, 2))], 2)
    return pf.from_closed_strata(
        four_index_fabric, {(1, 2, 3): p123, (2, 3, 4): p234}, 2
    )


def iter_random(start_seed, count=None, **bounds):
    """Deterministic stream of random systems from consecutive seeds."""
    seed = start_seed
    produced = 0
    while count is None or produced < count:
        spec = pf.RandomSpec(seed=seed, **bounds)
        yield pf.random_system(spec)
        seed += 1
        produced += 1


def sample_classified(classification, count, start_seed, **bounds):
    """First `count` random systems of the given classification."""
    out = []
    seed = start_seed
    while len(out) < count:
        spec = pf.RandomSpec(seed=seed, **bounds)
        seed += 1
        system = pf.random_system(spec)
        if pf.classify(system) is classification:
            out.append(system)
        if seed - start_seed > 200 * count:
            raise AssertionError(
                f"could not find {count} systems of class {classification} "
                f"after {seed - start_seed} seeds"
            )
    return out
