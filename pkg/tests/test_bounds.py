import itertools

import numpy as np
import pytest

from stochsub import (
    GAP,
    UniformMatroid,
    PartitionMatroid,
    ExplicitMatroid,
    adaptive_upper_bound,
    expected_value_exact,
    f_plus,
    multilinear_extension,
    optimal_adaptive_exact,
    verify_gap_chain,
)
from stochsub.errors import EnumerationTooLargeError, UnsupportedMatroidError
from stochsub.experiments import TightExampleSpec, gen_random_instance

from conftest import coverage_instance, deterministic_modular


def mixed_pair():
    return coverage_instance([[({0}, 0.5), ({1}, 0.5)], [({0}, 0.7), ({0, 1}, 0.3)]])


# f+ values of mixed_pair from enumerating every basic feasible solution of its LP
VERTEX_ENUMERATION = {(0.5, 0.5): 1.15, (1.0, 1.0): 1.8, (0.3, 0.9): 1.42}


class TestFPlus:
    def test_single_element_full(self):
        inst = coverage_instance([[({0}, 0.4), ({0, 1}, 0.6)]])
        assert f_plus(inst, [1.0]) == pytest.approx(expected_value_exact(inst, [0]), abs=1e-9)

    def test_zero_point(self):
        assert f_plus(mixed_pair(), [0.0, 0.0]) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("y", list(VERTEX_ENUMERATION))
    def test_matches_vertex_enumeration(self, y):
        assert f_plus(mixed_pair(), y) == pytest.approx(VERTEX_ENUMERATION[y], abs=1e-9)

    def test_alpha_is_distribution_with_right_marginals(self):
        inst = mixed_pair()
        y = np.array([0.3, 0.9])
        value, alpha = f_plus(inst, y, return_alpha=True)
        assert alpha.sum() == pytest.approx(1.0)
        assert alpha.min() >= -1e-12
        a = alpha.reshape(inst.radices)
        np.testing.assert_allclose(a.sum(axis=1)[1:], y[0] * inst.probs[0], atol=1e-9)
        np.testing.assert_allclose(a.sum(axis=0)[1:], y[1] * inst.probs[1], atol=1e-9)

    def test_bracket_on_generated_instances(self):
        rng = np.random.default_rng(3)
        for seed in range(40):
            inst, _ = gen_random_instance(4, 2, ("coverage", "concave_sum", "table")[seed % 3], "uniform", seed=seed)
            y = rng.random(inst.n)
            F, fp = multilinear_extension(inst, y), f_plus(inst, y)
            assert F - 1e-9 <= fp <= GAP * F + 1e-9

    def test_concave_along_segments(self):
        rng = np.random.default_rng(8)
        for seed in range(20):
            inst, _ = gen_random_instance(3, 2, "coverage", "uniform", seed=seed)
            y1, y2 = rng.random(inst.n), rng.random(inst.n)
            mid = f_plus(inst, (y1 + y2) / 2)
            assert mid >= (f_plus(inst, y1) + f_plus(inst, y2)) / 2 - 1e-9

    def test_cap(self):
        inst, _ = gen_random_instance(6, 3, "coverage", "uniform", seed=0)
        with pytest.raises(EnumerationTooLargeError):
            f_plus(inst, np.full(inst.n, 0.5), cap=100)


class TestAdaptiveUpperBound:
    def test_full_rank_pins_y(self):
        inst = mixed_pair()
        U, y = adaptive_upper_bound(inst, UniformMatroid(2, 2), return_point=True)
        np.testing.assert_allclose(y, [1.0, 1.0])
        assert U == pytest.approx(f_plus(inst, [1.0, 1.0]))
        assert U >= expected_value_exact(inst, [0, 1]) - 1e-9

    def test_bernoulli_pair(self, pair):
        # f+ is linear in y here: 0.7 y0 + 0.3 y1 on y0 + y1 = 1
        U, y = adaptive_upper_bound(pair, UniformMatroid(2, 1), return_point=True)
        assert U == pytest.approx(0.7)
        np.testing.assert_allclose(y, [1.0, 0.0], atol=1e-9)

    def test_mixed_pair_k1(self):
        # vertex enumeration along y0 + y1 = 1 peaks at y = (0, 1)
        assert adaptive_upper_bound(mixed_pair(), UniformMatroid(2, 1)) == pytest.approx(1.3)

    def test_matches_grid_over_polytope(self):
        for seed in range(6):
            inst, _ = gen_random_instance(3, 2, "coverage", "uniform", seed=seed)
            m = UniformMatroid(3, 1)
            U = adaptive_upper_bound(inst, m)
            grid = [np.array([a, b, 1 - a - b]) for a in np.linspace(0, 1, 11) for b in np.linspace(0, 1, 11) if a + b <= 1 + 1e-12]
            best = max(f_plus(inst, np.clip(y, 0, 1)) for y in grid)
            assert U >= best - 1e-9
            # the optimum is attained at a vertex of the region where f+ is linear; vertices of
            # the simplex are on the grid, so the grid maximum is within a coarse margin
            assert U <= best + 0.15

    def test_dominates_adaptive_optimum(self, suite):
        for case in suite[:120]:
            if case.matroid.kind == "explicit":
                continue
            A, _ = optimal_adaptive_exact(case.instance, case.matroid)
            assert adaptive_upper_bound(case.instance, case.matroid) >= A - 1e-9

    def test_explicit_unsupported(self, pair):
        with pytest.raises(UnsupportedMatroidError):
            adaptive_upper_bound(pair, ExplicitMatroid(2, [[], [0], [1]]))


class TestGapChain:
    def test_deterministic(self):
        inst = deterministic_modular([1.0, 4.0, 2.0])
        cert = verify_gap_chain(inst, UniformMatroid(3, 2))
        assert cert.ok
        assert cert.A == pytest.approx(cert.N) == pytest.approx(6.0)

    def test_capped_tight_example(self):
        inst, m = TightExampleSpec(4, copies=2, budget=5).materialize()
        cert = verify_gap_chain(inst, m)
        assert cert.ok, cert.violations()
        # independent symmetric dynamic program: A = 1279/1024; balanced allocation: N = 19/16
        assert cert.A == pytest.approx(1279 / 1024, abs=1e-12)
        assert cert.N == pytest.approx(19 / 16, abs=1e-12)
        assert cert.A / cert.N > 1.0

    def test_partition(self):
        inst = coverage_instance([[({0}, 0.5), ({1}, 0.5)], [({0}, 0.5), ((), 0.5)], [({1}, 0.9), ((), 0.1)], [({2}, 0.2), ({0}, 0.8)]])
        cert = verify_gap_chain(inst, PartitionMatroid((0, 0, 1, 1), (1, 1)))
        assert cert.ok
        d = cert.to_dict()
        assert set(d) == {"A", "U", "M", "N", "y_star", "links"}
        assert [l["name"] for l in d["links"]] == [
            "A <= U", "U <= e/(e-1) * M", "M <= F(rounded)", "F(rounded) <= N", "A <= e/(e-1) * N",
        ]

    def test_violation_report(self):
        from stochsub.bounds import GapCertificate, Link

        cert = GapCertificate(2.0, 1.0, 1.0, 1.0, [], [], 1.0, [Link("A <= U", 2.0, 1.0)])
        assert not cert.ok
        assert cert.violations() == [{"name": "A <= U", "excess": 1.0}]
