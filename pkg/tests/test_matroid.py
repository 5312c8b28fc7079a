import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochsub import ExplicitMatroid, PartitionMatroid, UniformMatroid
from stochsub.errors import InvalidArgumentError, InvalidInstanceError, InvalidPointError, UnsupportedMatroidError
from stochsub.experiments import random_matroid
from stochsub.matroid import check_point_in_base_polytope, matroid_from_json


def all_subsets(n):
    for r in range(n + 1):
        yield from itertools.combinations(range(n), r)


def test_uniform_independence():
    m = UniformMatroid(3, 2)
    assert m.is_independent([0, 1])
    assert not m.is_independent([0, 1, 2])


def test_partition_independence():
    m = PartitionMatroid((0, 0, 1), (1, 1))
    assert m.is_independent([0, 2])
    assert not m.is_independent([0, 1])


def test_ranks():
    assert UniformMatroid(5, 3).rank == 3
    assert PartitionMatroid((0, 0, 0, 1, 1), (1, 2)).rank == 3
    # capacity above part size is clipped
    assert PartitionMatroid((0, 1), (3, 1)).rank == 2


def test_explicit_agrees_with_uniform():
    n = 4
    u = UniformMatroid(n, 2)
    e = ExplicitMatroid(n, [S for S in all_subsets(n) if len(S) <= 2])
    assert e.rank == 2
    for S in all_subsets(n):
        assert e.is_independent(S) == u.is_independent(S)
        if u.is_independent(S):
            assert e.is_basis(S) == u.is_basis(S)
            for i in range(n):
                assert e.can_add(S, i) == u.can_add(S, i)


def test_can_add_and_basis_require_independent_input():
    m = UniformMatroid(3, 1)
    with pytest.raises(InvalidArgumentError):
        m.can_add([0, 1], 2)
    with pytest.raises(InvalidArgumentError):
        m.is_basis([0, 1])
    assert not m.can_add([0], 0)


def test_unknown_element():
    with pytest.raises(InvalidArgumentError):
        UniformMatroid(3, 1).is_independent([3])


def test_construction_errors():
    with pytest.raises(InvalidInstanceError):
        UniformMatroid(2, 3)
    with pytest.raises(InvalidInstanceError):
        PartitionMatroid((0, 2), (1, 1))
    with pytest.raises(InvalidInstanceError):
        PartitionMatroid((0,), (-1,))
    with pytest.raises(InvalidInstanceError, match="downward"):
        ExplicitMatroid(2, [[], [0, 1]])
    with pytest.raises(InvalidInstanceError, match="exchange"):
        # {0,1} and {2} are both maximal, so {2} cannot be extended from {0,1}
        ExplicitMatroid(3, [[], [0], [1], [2], [0, 1]])
    with pytest.raises(InvalidInstanceError, match="empty"):
        ExplicitMatroid(2, [[0]])


class TestMaxWeightBasis:
    def test_top_k(self):
        assert UniformMatroid(3, 2).max_weight_basis([3, 1, 2]) == {0, 2}

    def test_ties_lexicographic(self):
        assert UniformMatroid(4, 2).max_weight_basis([1, 1, 1, 1]) == {0, 1}
        assert PartitionMatroid((1, 0, 1, 0), (1, 1)).max_weight_basis([0, 0, 0, 0]) == {0, 1}

    def test_random_explicit_matches_brute_force(self):
        for seed in range(30):
            rng = np.random.default_rng(seed)
            m = random_matroid(6, "explicit", rng, rank=3)
            w = rng.integers(0, 5, size=6).astype(float)
            got = m.max_weight_basis(w)
            best = max(sum(w[list(B)]) for B in m.bases())
            assert m.is_basis(got)
            assert sum(w[list(got)]) == pytest.approx(best)

    def test_wrong_length(self):
        with pytest.raises(InvalidArgumentError):
            UniformMatroid(3, 1).max_weight_basis([1, 2])


class TestPolytope:
    def test_uniform_k1(self):
        poly = UniformMatroid(2, 1).base_polytope()
        P, q = poly.equality_matrices()
        np.testing.assert_array_equal(P, [[1, 1]])
        np.testing.assert_array_equal(q, [1])

    def test_partition_two_parts(self):
        P, q = PartitionMatroid((0, 1, 0), (1, 1)).base_polytope().equality_matrices()
        np.testing.assert_array_equal(P, [[1, 0, 1], [0, 1, 0]])
        np.testing.assert_array_equal(q, [1, 1])

    def test_membership(self):
        m = UniformMatroid(3, 2)
        poly = m.base_polytope()
        assert poly.contains(np.array([1.0, 1.0, 0.0]))
        # (0.5, 0.5, 1) = 0.5 * (1,0,1) + 0.5 * (0,1,1)
        assert poly.contains(np.array([0.5, 0.5, 1.0]))
        assert not poly.contains(np.array([0.5, 0.5, 0.5]))
        assert not poly.contains(np.array([1.5, 0.5, 0.0]))
        with pytest.raises(InvalidPointError):
            check_point_in_base_polytope(m, [1.0, 0.0, 0.0])

    def test_explicit_has_no_polytope(self):
        m = ExplicitMatroid(2, [[], [0], [1]])
        with pytest.raises(UnsupportedMatroidError):
            m.base_polytope()
        with pytest.raises(UnsupportedMatroidError):
            m.groups()


@pytest.mark.parametrize(
    "m",
    [UniformMatroid(4, 2), PartitionMatroid((0, 1, 1, 0), (1, 2)), ExplicitMatroid(3, [[], [0], [1], [2], [0, 2], [1, 2]])],
)
def test_json_round_trip(m):
    assert matroid_from_json(m.to_json(), m.n) == m


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.sampled_from(["uniform", "partition", "explicit"]), st.integers(0, 10**6))
def test_generated_matroids_satisfy_axioms(n, kind, seed):
    m = random_matroid(n, kind, np.random.default_rng(seed))
    ind = {frozenset(S) for S in all_subsets(n) if m.is_independent(S)}
    assert frozenset() in ind
    for S in ind:
        for i in S:
            assert S - {i} in ind
    for S, T in itertools.product(ind, ind):
        if len(T) > len(S):
            assert any(S | {x} in ind for x in T - S)
    assert m.rank == max(len(S) for S in ind) <= 3
    assert set(m.independent_sets()) == ind
