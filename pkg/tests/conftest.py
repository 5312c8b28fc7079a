"""Shared instance builders and package-independent brute-force oracles."""

from __future__ import annotations

import itertools
import sys

import pytest

from stochsub import (
    ConcaveOfSum,
    Coverage,
    DiscreteDistribution,
    Instance,
    StochasticElement,
)
from stochsub.experiments import small_suite


def coverage_instance(supports, universe=None, weights=None) -> Instance:
    """``supports[i]`` is a list of ``(items, prob)`` pairs."""
    elements = []
    for i, sup in enumerate(supports):
        pairs = [(frozenset(items), p) for items, p in sup]
        elements.append(StochasticElement(i, DiscreteDistribution.from_pairs(pairs)))
    if universe is None:
        universe = 1 + max((u for sup in supports for items, _ in sup for u in items), default=-1)
    return Instance(tuple(elements), Coverage(weights), universe)


def scalar_instance(supports, xs, us) -> Instance:
    elements = [StochasticElement(i, DiscreteDistribution.from_pairs(sup)) for i, sup in enumerate(supports)]
    return Instance(tuple(elements), ConcaveOfSum(tuple(xs), tuple(us)))


def bernoulli_pair() -> Instance:
    """Elements 0 and 1 cover distinct items with probabilities 0.7 and 0.3."""
    return coverage_instance([[({0}, 0.7), ((), 0.3)], [({1}, 0.3), ((), 0.7)]])


def deterministic_modular(weights) -> Instance:
    """Element i always covers its own item, worth ``weights[i]``."""
    return coverage_instance([[({i}, 1.0)] for i in range(len(weights))], weights=tuple(weights))


THREE = [
    [({0}, 0.5), ({1, 2}, 0.5)],
    [({1}, 0.6), ({0, 3}, 0.4)],
    [({2, 3}, 0.25), ((), 0.75)],
]


def brute_expected_coverage(supports, S, weights=None) -> float:
    """E[weighted |union|] over the outcomes of the elements in ``S``."""
    total = 0.0
    for outs in itertools.product(*[supports[i] for i in S]):
        p = 1.0
        covered = set()
        for items, q in outs:
            p *= q
            covered |= set(items)
        total += p * sum((weights[u] if weights else 1.0) for u in covered)
    return total


def brute_myopic_uniform(supports, k) -> float:
    """The myopic rule under a cardinality constraint, evaluated over every full realization."""
    n = len(supports)
    total = 0.0
    for outs in itertools.product(*supports):
        p = 1.0
        for _, q in outs:
            p *= q
        covered, remaining, taken = set(), set(range(n)), 0
        while remaining and taken < k:
            def gain(i):
                return sum(q * len(set(items) - covered) for items, q in supports[i])
            i = min(remaining, key=lambda i: (-gain(i), i))
            remaining.discard(i)
            taken += 1
            covered |= set(outs[i][0])
        total += p * len(covered)
    return total


@pytest.fixture(scope="session")
def suite():
    return small_suite(500, seed=1)


@pytest.fixture
def pair():
    return bernoulli_pair()


@pytest.fixture
def three():
    return coverage_instance(THREE)



def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(results):
        ok, detail = results[criterion]
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
