"""Exhaustive property suite over small seeded instances.

Every check compares exact quantities and records a violation when an
inequality fails by more than ``TOL``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .bounds import GAP, LP_CAP, f_plus, verify_gap_chain
from .evaluate import coverage_closed_form, expected_value_exact, multilinear_extension
from .experiments import SuiteCase, small_suite, substream
from .model import Coverage
from .policies import (
    evaluate_adaptive_exact,
    myopic_marginal_slacks,
    optimal_adaptive_exact,
    optimal_nonadaptive_exact,
)
from .oracles import ExactOracle

TOL = 1e-9

CHECKS = (
    "myopic_half",
    "myopic_uniform",
    "adaptivity_gap",
    "gap_chain",
    "f_plus_bracket",
    "evaluator_coherence",
    "marginal_decrease",
    "stopping_irrelevant",
)


def uniform_constant(k: int) -> float:
    """``1 - (1 - 1/k)^k``, the finite-rank myopic guarantee on uniform matroids."""
    return 1.0 - (1.0 - 1.0 / k) ** k if k >= 1 else 1.0


@dataclass
class SuiteResult:
    cases: int = 0
    counts: dict[str, int] = field(default_factory=lambda: {c: 0 for c in CHECKS})
    violations: list[dict] = field(default_factory=list)
    values: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def failures(self, check: str) -> list[dict]:
        return [v for v in self.violations if v["check"] == check]

    def to_dict(self) -> dict:
        return {"cases": self.cases, "checks": self.counts, "violations": self.violations, "ok": self.ok}

    def _le(self, check: str, case: SuiteCase, lhs: float, rhs: float, **info):
        self.counts[check] += 1
        if not lhs <= rhs + TOL:
            self.violations.append({"check": check, "case": case.index, "seed": case.seed,
                                    "lhs": lhs, "rhs": rhs, "excess": lhs - rhs, **info})


def check_case(case: SuiteCase, result: SuiteResult, y_samples: int = 1, lp_cap: int = LP_CAP) -> None:
    inst, m = case.instance, case.matroid
    oracle = ExactOracle(inst)
    A, _ = optimal_adaptive_exact(inst, m)
    A_forced, _ = optimal_adaptive_exact(inst, m, allow_stop=False)
    N, _ = optimal_nonadaptive_exact(inst, m, oracle=oracle)
    my = evaluate_adaptive_exact(inst, m)
    result.values.append({"case": case.index, "matroid": m.kind, "rank": m.rank, "A": A, "N": N, "myopic": my})

    result._le("myopic_half", case, 0.5 * A, my)
    if m.kind == "uniform":
        result._le("myopic_uniform", case, uniform_constant(m.rank) * A, my, k=m.rank)
    result._le("adaptivity_gap", case, A, GAP * N)
    result._le("stopping_irrelevant", case, abs(A - A_forced), 0.0)
    for slack in myopic_marginal_slacks(inst, m):
        result._le("marginal_decrease", case, -slack, 0.0)

    if m.kind in ("uniform", "partition") and inst.scenario_count <= lp_cap:
        cert = verify_gap_chain(inst, m, cap=lp_cap)
        result.counts["gap_chain"] += 1
        for link in cert.links:
            if not link.ok:
                result.violations.append({"check": "gap_chain", "case": case.index, "seed": case.seed,
                                          "link": link.name, "lhs": link.lhs, "rhs": link.rhs})

    if inst.scenario_count <= lp_cap:
        rng = substream(case.seed % 2**63, 7)
        for _ in range(y_samples):
            y = rng.random(inst.n)
            y[rng.random(inst.n) < 0.2] = 1.0
            F = multilinear_extension(inst, y)
            fp = f_plus(inst, y, cap=lp_cap)
            result._le("f_plus_bracket", case, F, fp, bound="lower")
            result._le("f_plus_bracket", case, fp, GAP * F, bound="upper")

    if isinstance(inst.objective, Coverage):
        for r in range(inst.n + 1):
            for S in itertools.combinations(range(inst.n), r):
                exact = expected_value_exact(inst, S)
                closed = coverage_closed_form(inst, S)
                ind = np.zeros(inst.n)
                ind[list(S)] = 1.0
                ml = multilinear_extension(inst, ind)
                spread = max(exact, closed, ml) - min(exact, closed, ml)
                result._le("evaluator_coherence", case, spread, 0.0, S=list(S))


def run_suite(count: int = 500, seed: int = 1, y_samples: int = 1) -> SuiteResult:
    result = SuiteResult()
    for case in small_suite(count, seed):
        check_case(case, result, y_samples=y_samples)
        result.cases += 1
    return result
