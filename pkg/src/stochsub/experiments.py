"""Instance generators, the stochastic max-k-cover tight example, and experiment reports."""

from __future__ import annotations

import csv
import io
import math
from itertools import combinations
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.stats import binom

from .errors import EnumerationTooLargeError, InvalidArgumentError, UnsupportedMatroidError
from .evaluate import DEFAULT_CAP, draw_digits, eval_f, expected_value_exact, mean_ci, scenario_table
from .matroid import ExplicitMatroid, Matroid, PartitionMatroid, UniformMatroid
from .model import (
    ConcaveOfSum,
    Coverage,
    DiscreteDistribution,
    ExplicitTable,
    Instance,
    StochasticElement,
)
from .oracles import make_oracle
from .policies import (
    continuous_greedy,
    evaluate_adaptive_exact,
    greedy_nonadaptive,
    optimal_adaptive_exact,
    optimal_nonadaptive_exact,
    pipage_round,
    run_myopic_adaptive,
)

MIN_REPLICATES = 30
CSV_COLUMNS = ("config_id", "n", "policy", "analytic_value", "mc_mean", "mc_ci95", "replicates", "seed", "ratio")
OBJECTIVE_KINDS = ("coverage", "concave_sum", "table")
MATROID_KINDS = ("uniform", "partition", "explicit")


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for ``(seed, *keys)``; identical keys give identical streams."""
    return np.random.default_rng([int(seed), *map(int, keys)])


# ------------------------------------------------------------- generators

def _probabilities(rng: np.random.Generator, k: int) -> tuple[float, ...]:
    p = rng.dirichlet(np.ones(k))
    p = np.round(p / p.sum(), 6)
    p[-1] = 0.0
    p[-1] = max(0.0, 1.0 - math.fsum(p))
    if p[-1] == 0.0 and k > 1:
        # keep every outcome possible
        p = np.full(k, 1.0 / k)
        p[-1] = 1.0 - math.fsum(p[:-1])
    return tuple(float(v) for v in p)


def _distinct_subsets(rng, universe: int, k: int, density: float) -> list[frozenset]:
    out: list[frozenset] = []
    while len(out) < k:
        s = frozenset(int(u) for u in np.flatnonzero(rng.random(universe) < density))
        if s not in out:
            out.append(s)
    return out


def _distinct_scalars(rng, k: int) -> list[float]:
    out: list[float] = []
    while len(out) < k:
        v = float(np.round(rng.uniform(0.0, 2.0), 3))
        if v not in out:
            out.append(v)
    return out


def _random_concave(rng, pieces: int = 3) -> ConcaveOfSum:
    slopes = np.sort(rng.uniform(0.0, 1.5, size=pieces))[::-1]
    widths = rng.uniform(0.3, 1.5, size=pieces)
    xs = np.concatenate([[0.0], np.cumsum(widths)])
    us = np.concatenate([[0.0], np.cumsum(slopes * widths)])
    return ConcaveOfSum(tuple(float(v) for v in xs), tuple(float(v) for v in us))


def _binary_matroid(rng, n: int, r: int) -> ExplicitMatroid:
    vectors = [int(v) for v in rng.integers(0, 1 << r, size=n)]

    def independent(combo) -> bool:
        basis: list[int] = []
        for i in combo:
            v = vectors[i]
            for b in basis:
                v = min(v, v ^ b)
            if v == 0:
                return False
            basis.append(v)
            basis.sort(reverse=True)
        return True

    sets = []
    for size in range(r + 1):
        sets.extend(c for c in combinations(range(n), size) if independent(c))
    return ExplicitMatroid(n, sets)


def random_matroid(n: int, kind: str, rng: np.random.Generator, max_rank: int = 3, rank: int | None = None) -> Matroid:
    top = min(max_rank, n)
    if kind == "uniform":
        return UniformMatroid(n, int(rank) if rank is not None else int(rng.integers(1, top + 1)) if n else 0)
    if kind == "partition":
        parts_n = int(rng.integers(1, max(n, 1) + 1))
        parts = tuple(int(p) for p in rng.integers(0, parts_n, size=n))
        caps = [int(c) for c in rng.integers(1, 3, size=parts_n)]
        m = PartitionMatroid(parts, tuple(caps))
        while m.rank > max_rank:
            caps[int(np.argmax(caps))] -= 1
            m = PartitionMatroid(parts, tuple(caps))
        return m
    if kind == "explicit":
        return _binary_matroid(rng, n, int(rng.integers(1, top + 1)) if n else 0)
    raise InvalidArgumentError(f"unknown matroid kind {kind!r}")


def gen_random_instance(
    n: int,
    support_size: int,
    objective_kind: str = "coverage",
    matroid_kind: str = "uniform",
    seed: int = 0,
    universe_size: int | None = None,
    rank: int | None = None,
    max_rank: int = 3,
    small: bool = True,
) -> tuple[Instance, Matroid]:
    """Seeded random instance and matroid; coverage uses a universe of 2n items by default."""
    if n < 1 or support_size < 1:
        raise InvalidArgumentError("need n >= 1 and support_size >= 1")
    if objective_kind not in OBJECTIVE_KINDS:
        raise InvalidArgumentError(f"unknown objective kind {objective_kind!r}")
    if small and (support_size + 1) ** n > DEFAULT_CAP:
        raise InvalidArgumentError(f"(support+1)^n = {(support_size + 1) ** n} exceeds the exact-solver cap")
    rng = np.random.default_rng(seed)
    universe = universe_size if universe_size is not None else 2 * n
    probs = [_probabilities(rng, support_size) for _ in range(n)]

    if objective_kind == "coverage":
        payloads = [_distinct_subsets(rng, universe, support_size, 0.3) for _ in range(n)]
        instance = _build(payloads, probs, Coverage(), universe)
    elif objective_kind == "concave_sum":
        payloads = [_distinct_scalars(rng, support_size) for _ in range(n)]
        instance = _build(payloads, probs, _random_concave(rng), 0)
    else:
        # table: weighted coverage by (element, outcome) sets plus a concave-of-sum term
        cover = [_distinct_subsets(rng, universe, support_size, 0.3) for _ in range(n)]
        weights = tuple(float(v) for v in np.round(rng.uniform(0.5, 2.0, size=universe), 3))
        scal = [_distinct_scalars(rng, support_size) for _ in range(n)]
        t1 = scenario_table(_build(cover, probs, Coverage(weights), universe)).ravel()
        t2 = scenario_table(_build(scal, probs, _random_concave(rng), 0)).ravel()
        labels = [list(range(support_size)) for _ in range(n)]
        instance = _build(labels, probs, ExplicitTable(tuple(float(v) for v in t1 + t2)), 0)
    matroid = random_matroid(n, matroid_kind, rng, max_rank=max_rank, rank=rank)
    return instance, matroid


def _build(payloads, probs, objective, universe) -> Instance:
    elements = tuple(
        StochasticElement(i, DiscreteDistribution(tuple(pl), tuple(pr))) for i, (pl, pr) in enumerate(zip(payloads, probs))
    )
    return Instance(elements, objective, universe)


@dataclass(frozen=True)
class SuiteCase:
    index: int
    seed: int
    objective_kind: str
    matroid_kind: str
    instance: Instance
    matroid: Matroid


def small_suite(count: int, seed: int = 0, max_n: int = 6, max_support: int = 3) -> list[SuiteCase]:
    """Deterministic mix of small instances covering every objective and matroid kind."""
    cases = []
    for idx in range(count):
        rng = substream(seed, idx)
        obj = OBJECTIVE_KINDS[idx % 3]
        mat = MATROID_KINDS[(idx // 3) % 3]
        n = int(rng.integers(2, max_n + 1))
        support = int(rng.integers(1, max_support + 1))
        inst_seed = int(rng.integers(0, 2**63 - 1))
        instance, matroid = gen_random_instance(n, support, obj, mat, seed=inst_seed)
        cases.append(SuiteCase(idx, inst_seed, obj, mat, instance, matroid))
    return cases


# ----------------------------------------------------------- tight example

@dataclass(frozen=True)
class TightExampleSpec:
    """n collections of i.i.d. copies; a copy of collection i covers item i w.p. 1/n.

    Elements are addressed as ``(collection, copy)``.  Defaults follow the
    classical construction (n^2 copies each, budget n^2); smaller ``copies``
    or ``budget`` give capped variants for exact solvers.
    """

    n: int
    copies: int | None = None
    budget: int | None = None

    def __post_init__(self):
        if self.n < 2:
            raise InvalidArgumentError("tight example needs n >= 2")

    @property
    def per_collection(self) -> int:
        return self.copies if self.copies is not None else self.n**2

    @property
    def k(self) -> int:
        return self.budget if self.budget is not None else self.n**2

    def element_id(self, collection: int, copy: int) -> int:
        return collection * self.per_collection + copy

    def materialize(self) -> tuple[Instance, UniformMatroid]:
        p = 1.0 / self.n
        elements = []
        for i in range(self.n):
            dist = DiscreteDistribution((frozenset(), frozenset({i})), (1.0 - p, p))
            for j in range(self.per_collection):
                elements.append(StochasticElement(self.element_id(i, j), dist))
        total = len(elements)
        return Instance(tuple(elements), Coverage(), self.n), UniformMatroid(total, min(self.k, total))


def tight_nonadaptive_value(n: int) -> float:
    """Optimal non-adaptive coverage of the tight example: n copies per collection."""
    if n < 2:
        raise InvalidArgumentError("n must be >= 2")
    return (1.0 - (1.0 - 1.0 / n) ** n) * n


def tight_adaptive_oracle(n: int) -> float:
    """``E[min(n, Binomial(n^2, 1/n))]``, the exact value of the scanning policy."""
    y = np.arange(n * n + 1)
    return float(np.minimum(y, n) @ binom.pmf(y, n * n, 1.0 / n))


def scan_policy(spec: TightExampleSpec, realized: Callable[[int, int], bool]) -> int:
    """Scan collection after collection until its item is covered or its copies run out."""
    covered, i, used = 0, 0, 0
    copy = 0
    while used < spec.k and i < spec.n:
        success = realized(i, copy)
        used += 1
        copy += 1
        if success:
            covered += 1
        if success or copy == spec.per_collection:
            i += 1
            copy = 0
    return covered


def run_tight_adaptive(n: int, replicates: int, seed: int) -> tuple[float, float]:
    """Mean and 95% CI of items covered by the scanning policy, simulated implicitly."""
    if replicates < MIN_REPLICATES:
        raise InvalidArgumentError(f"need at least {MIN_REPLICATES} replicates")
    spec = TightExampleSpec(n)
    p = 1.0 / n
    results = np.empty(replicates)
    for r in range(replicates):
        rng = substream(seed, r)
        draws = rng.random(spec.k) < p
        pos = iter(draws)
        results[r] = scan_policy(spec, lambda i, j: bool(next(pos)))
    return mean_ci(results)


# ----------------------------------------------------------------- reports

@dataclass
class Row:
    config_id: str
    n: int
    policy: str
    analytic_value: float | None
    mc_mean: float
    mc_ci95: float
    replicates: int
    seed: int
    ratio: float | None
    extra: dict = field(default_factory=dict)

    def cells(self) -> list[str]:
        def num(v):
            return "" if v is None else f"{v:.10g}"

        return [self.config_id, str(self.n), self.policy, num(self.analytic_value), num(self.mc_mean),
                num(self.mc_ci95), str(self.replicates), str(self.seed), num(self.ratio)]


@dataclass
class ExperimentReport:
    rows: list[Row] = field(default_factory=list)

    def sorted_rows(self) -> list[Row]:
        return sorted(self.rows, key=lambda r: r.config_id)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.sorted_rows():
            w.writerow(row.cells())
        return buf.getvalue()


def gap_experiment(n_list: Iterable[int], replicates: int, seed: int) -> ExperimentReport:
    """Per n: analytic non-adaptive optimum vs simulated scanning policy and their ratio.

    In each row ``analytic_value`` is the non-adaptive optimum, ``mc_mean`` the
    adaptive mean and ``ratio`` their quotient; the Binomial oracle value is
    kept in ``extra``.
    """
    report = ExperimentReport()
    for n in n_list:
        nonadaptive = tight_nonadaptive_value(n)
        mean, ci = run_tight_adaptive(n, replicates, seed)
        report.rows.append(Row(
            f"gap-n{n:06d}", n, "adaptive_scan", nonadaptive, mean, ci, replicates, seed, mean / nonadaptive,
            extra={"oracle": tight_adaptive_oracle(n)},
        ))
    return report


def replicate_realizations(instance: Instance, seed: int, replicates: int) -> list[dict[int, int]]:
    """Full realization for replicate ``r``, drawn from substream ``(seed, r)``."""
    return [
        {i: int(d) - 1 for i, d in enumerate(draw_digits(instance, substream(seed, r), 1)[0])}
        for r in range(replicates)
    ]


POLICIES = ("myopic", "greedy", "cgreedy", "opt_nonadaptive", "opt_adaptive")


def compare_policies(
    instance: Instance,
    matroid: Matroid,
    policies: Sequence[str],
    replicates: int,
    seed: int,
    steps: int = 100,
    samples: int = 200,
    cap: int = DEFAULT_CAP,
) -> ExperimentReport:
    """One row per policy, all replicates sharing the same realization stream."""
    if replicates < MIN_REPLICATES:
        raise InvalidArgumentError(f"need at least {MIN_REPLICATES} replicates")
    for p in policies:
        if p not in POLICIES:
            raise InvalidArgumentError(f"unknown policy {p!r}; choose from {', '.join(POLICIES)}")
        if p == "cgreedy":
            try:
                matroid.base_polytope()
            except UnsupportedMatroidError:
                raise UnsupportedMatroidError(f"cgreedy needs a uniform or partition matroid, not {matroid.kind}") from None
    realizations = replicate_realizations(instance, seed, replicates)
    oracle = make_oracle(instance, rng=substream(seed, 2**32))
    report = ExperimentReport()
    for pos, name in enumerate(policies):
        analytic = None
        if name == "myopic":
            vals = [run_myopic_adaptive(instance, matroid, realization=z).value for z in realizations]
            analytic = _maybe(lambda: evaluate_adaptive_exact(instance, matroid, cap=cap))
        elif name == "opt_adaptive":
            root, tree = optimal_adaptive_exact(instance, matroid, cap=cap)
            vals = [tree.run(z)[1] for z in realizations]
            analytic = root
        else:
            if name == "greedy":
                S = greedy_nonadaptive(instance, matroid, oracle=oracle)
            elif name == "cgreedy":
                y = continuous_greedy(instance, matroid, steps, samples, rng=substream(seed, 2**32 + 1), oracle=oracle)
                S = pipage_round(instance, matroid, y, oracle=oracle)
            else:
                _, S = optimal_nonadaptive_exact(instance, matroid, oracle=oracle, cap=cap)
            vals = [eval_f(instance, {i: z[i] for i in S}) for z in realizations]
            analytic = _maybe(lambda: expected_value_exact(instance, S, cap=cap))
        mean, ci = mean_ci(np.array(vals))
        ratio = mean / analytic if analytic else None
        report.rows.append(Row(f"cmp-{pos:02d}-{name}", instance.n, name, analytic, mean, ci, replicates, seed, ratio))
    return report


def _maybe(fn):
    try:
        return fn()
    except EnumerationTooLargeError:
        return None
