"""Adaptive and non-adaptive policies, plus exact optimal solvers used as oracles."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import EnumerationTooLargeError, InvalidArgumentError
from .evaluate import DEFAULT_CAP, _value_grid, draw_digits, eval_batch, eval_f, scenario_table
from .matroid import Matroid, check_point_in_base_polytope
from .model import Instance, Realization, check_realization, encode
from .oracles import ExactOracle, make_oracle

PIPAGE_TOL = 1e-9


# ------------------------------------------------------------------ myopic

@dataclass(frozen=True)
class TraceStep:
    element: int
    accepted: bool
    outcome: int | None
    marginal: float

    def to_dict(self) -> dict:
        return {"element": self.element, "accepted": self.accepted, "outcome": self.outcome, "marginal": self.marginal}


@dataclass
class PolicyTrace:
    steps: list[TraceStep] = field(default_factory=list)
    realization: dict[int, int] = field(default_factory=dict)
    value: float = 0.0

    @property
    def accepted(self) -> list[int]:
        return [s.element for s in self.steps if s.accepted]

    @property
    def discarded(self) -> list[int]:
        return [s.element for s in self.steps if not s.accepted]

    @property
    def deltas(self) -> list[float]:
        """Conditional marginals of the accepted elements, in order of acceptance."""
        return [s.marginal for s in self.steps if s.accepted]

    def to_jsonl(self, **extra) -> str:
        return "".join(json.dumps({**extra, "step": k, **s.to_dict()}) + "\n" for k, s in enumerate(self.steps))


def _independent_with(m: Matroid, chosen: list[int], i: int) -> bool:
    return m._independent(sorted(chosen + [i]))


def _myopic_choice(instance: Instance, m: Matroid, s: dict[int, int], remaining: set[int]):
    """One outer iteration: elements in descending marginal order until one fits.

    Returns ``(discarded, chosen)`` where ``discarded`` is a list of
    ``(element, marginal)`` and ``chosen`` is ``(element, marginal)`` or None.
    """
    base = float(_value_grid(instance, (), s, with_absent=False))
    gains = {}
    for i in remaining:
        grid = _value_grid(instance, (i,), s, with_absent=False)
        gains[i] = float(instance.probs[i] @ grid) - base
    chosen_ids = sorted(s)
    discarded = []
    for i in sorted(remaining, key=lambda i: (-gains[i], i)):
        if _independent_with(m, chosen_ids, i):
            return discarded, (i, gains[i])
        discarded.append((i, gains[i]))
    return discarded, None


def _check_pair(instance: Instance, m: Matroid):
    if m.n != instance.n:
        raise InvalidArgumentError(f"matroid ground set has {m.n} elements, instance has {instance.n}")


def run_myopic_adaptive(
    instance: Instance,
    m: Matroid,
    rng: np.random.Generator | None = None,
    realization: Realization | None = None,
) -> PolicyTrace:
    """Run the myopic adaptive policy once.

    Each accepted element's outcome is read from ``realization`` when given
    (common random numbers, exhaustive evaluation), otherwise drawn from ``rng``.
    """
    _check_pair(instance, m)
    if realization is None and rng is None:
        raise InvalidArgumentError("need an rng or a fixed realization")
    if realization is not None:
        check_realization(instance, realization)
    trace = PolicyTrace()
    s: dict[int, int] = {}
    remaining = set(range(instance.n))
    while remaining:
        discarded, chosen = _myopic_choice(instance, m, s, remaining)
        for i, g in discarded:
            remaining.discard(i)
            trace.steps.append(TraceStep(i, False, None, g))
        if chosen is None:
            break
        i, g = chosen
        remaining.discard(i)
        if realization is not None:
            if i not in realization:
                raise InvalidArgumentError(f"fixed realization has no outcome for element {i}")
            x = int(realization[i])
        else:
            x = int(rng.choice(instance.support_sizes[i], p=instance.probs[i]))
        s[i] = x
        trace.steps.append(TraceStep(i, True, x, g))
    trace.realization = s
    trace.value = eval_f(instance, s)
    return trace


def _walk_myopic(instance: Instance, m: Matroid, cap: int, slacks: list | None = None):
    nodes = 0

    def walk(s: dict[int, int], remaining: frozenset[int]):
        nonlocal nodes
        nodes += 1
        if nodes > cap:
            raise EnumerationTooLargeError(
                "myopic outcome tree", nodes, cap, "use Monte Carlo evaluation (run_myopic_adaptive with an rng)"
            )
        discarded, chosen = _myopic_choice(instance, m, s, set(remaining))
        if chosen is None:
            return eval_f(instance, s), None
        i, gain = chosen
        rest = remaining - {d for d, _ in discarded} - {i}
        total, next_gain = 0.0, 0.0
        for x, p in enumerate(instance.probs[i]):
            if p == 0:
                continue
            v, g = walk({**s, i: x}, rest)
            total += p * v
            next_gain += p * (g if g is not None else 0.0)
        if slacks is not None:
            slacks.append(gain - next_gain)
        return total, gain

    value, _ = walk({}, frozenset(range(instance.n)))
    return value


def evaluate_adaptive_exact(instance: Instance, m: Matroid, policy: str = "myopic", cap: int = DEFAULT_CAP) -> float:
    """Exact expected value of the myopic policy over its whole outcome tree."""
    if policy != "myopic":
        raise InvalidArgumentError(f"exact evaluation is implemented for the myopic policy, not {policy!r}")
    _check_pair(instance, m)
    return _walk_myopic(instance, m, cap)


def myopic_marginal_slacks(instance: Instance, m: Matroid, cap: int = DEFAULT_CAP) -> list[float]:
    """``E[Delta_j - Delta_{j+1} | s_{j-1}]`` at every reachable state of the myopic tree."""
    _check_pair(instance, m)
    slacks: list[float] = []
    _walk_myopic(instance, m, cap, slacks)
    return slacks


# ------------------------------------------------------------- non-adaptive

def greedy_nonadaptive(instance: Instance, m: Matroid, oracle=None) -> frozenset[int]:
    """Add the feasible element with the largest gain in F until a basis is reached."""
    _check_pair(instance, m)
    oracle = oracle or make_oracle(instance)
    chosen: list[int] = []
    current = oracle.value(chosen)
    while True:
        best, best_gain = None, -math.inf
        for i in range(instance.n):
            if i in chosen or not _independent_with(m, chosen, i):
                continue
            gain = oracle.value(chosen + [i]) - current
            if gain > best_gain:
                best, best_gain = i, gain
        if best is None:
            return frozenset(chosen)
        chosen.append(best)
        current = oracle.value(chosen)


def continuous_greedy(
    instance: Instance,
    m: Matroid,
    steps: int = 100,
    samples: int = 200,
    rng: np.random.Generator | None = None,
    oracle=None,
) -> np.ndarray:
    """Fractional point in B(M) built from ``steps`` moves of size 1/steps.

    Weights are the partial derivatives ``E[F(Y + i) - F(Y - i)]`` of the
    multilinear extension, estimated from ``samples`` fresh draws of ``Y``
    per step.  With a tabulated exact oracle F(Y) is read
    exactly; otherwise one realization is drawn alongside each ``Y``.  Each
    coordinate of the result is ``count / steps`` with an integer count.
    """
    _check_pair(instance, m)
    if steps < 1:
        raise InvalidArgumentError("steps must be >= 1")
    m.base_polytope()  # raises for matroids without an explicit description
    rng = rng if rng is not None else np.random.default_rng(0)
    if oracle is None:
        oracle = make_oracle(instance)
    n = instance.n
    counts = np.zeros(n, dtype=np.int64)
    bits = np.left_shift(np.int64(1), np.arange(n, dtype=np.int64))
    for _ in range(steps):
        y = counts / steps
        inc = rng.random((samples, n)) < y
        if getattr(oracle, "tabulated", False):
            masks = inc.astype(np.int64) @ bits
            w = np.array([(oracle.values(masks | bits[i]) - oracle.values(masks & ~bits[i])).mean() for i in range(n)])
        else:
            full = draw_digits(instance, rng, samples)
            d = np.where(inc, full, 0)
            w = np.empty(n)
            for i in range(n):
                with_i, without_i = d.copy(), d.copy()
                with_i[:, i] = full[:, i]
                without_i[:, i] = 0
                w[i] = (eval_batch(instance, with_i) - eval_batch(instance, without_i)).mean()
        for i in m.max_weight_basis(w):
            counts[i] += 1
    return counts / steps


def pipage_round(instance: Instance, m: Matroid, y, oracle=None, history: list | None = None) -> frozenset[int]:
    """Round a point of B(M) to a basis without lowering the multilinear extension.

    Two fractional coordinates in the same exchange group move along
    ``e_i - e_j`` to whichever endpoint scores higher.  A sampled oracle
    evaluates both endpoints on the same draws.
    """
    _check_pair(instance, m)
    groups = m.groups()
    y = check_point_in_base_polytope(m, y).copy()
    y = _snap(np.clip(y, 0.0, 1.0))
    oracle = oracle or make_oracle(instance)
    if history is not None:
        history.append((y.copy(), oracle.multilinear(y)))
    for group in groups:
        while True:
            frac = [i for i in group if PIPAGE_TOL < y[i] < 1 - PIPAGE_TOL]
            if len(frac) < 2:
                for i in frac:  # rounding residue of a group whose sum is integral
                    y[i] = float(round(y[i]))
                break
            i, j = frac[0], frac[1]
            up = min(1 - y[i], y[j])
            down = min(y[i], 1 - y[j])
            ya = y.copy()
            ya[i] += up
            ya[j] -= up
            yb = y.copy()
            yb[i] -= down
            yb[j] += down
            ya, yb = _snap(ya), _snap(yb)
            fa, fb = oracle.multilinear(ya), oracle.multilinear(yb)
            y = ya if fa >= fb else yb
            if history is not None:
                history.append((y.copy(), max(fa, fb)))
    return frozenset(int(i) for i in np.flatnonzero(y > 0.5))


def _snap(y: np.ndarray) -> np.ndarray:
    y = y.copy()
    y[np.abs(y) <= PIPAGE_TOL] = 0.0
    y[np.abs(y - 1) <= PIPAGE_TOL] = 1.0
    return y


# ----------------------------------------------------------- exact optima

@dataclass
class DecisionTreeValue:
    """Memoized optimal continuation values keyed by realization code."""

    instance: Instance
    values: dict[int, float]
    actions: dict[int, int | None]

    @property
    def root_value(self) -> float:
        return self.values[0]

    def value(self, s: Realization) -> float:
        return self.values[encode(self.instance, s)]

    def next_element(self, s: Realization) -> int | None:
        """Element the optimal policy adds after observing ``s`` (None = stop)."""
        return self.actions[encode(self.instance, s)]

    def run(self, realization: Mapping[int, int]) -> tuple[dict[int, int], float]:
        """Follow the tree against a full realization; returns the observed s and f(s)."""
        s: dict[int, int] = {}
        while True:
            i = self.next_element(s)
            if i is None:
                return s, eval_f(self.instance, s)
            s[i] = int(realization[i])


def optimal_adaptive_exact(
    instance: Instance, m: Matroid, allow_stop: bool = True, cap: int = DEFAULT_CAP
) -> tuple[float, DecisionTreeValue]:
    """Optimal adaptive value by memoized recursion over partial realizations."""
    _check_pair(instance, m)
    table = scenario_table(instance, cap).ravel()
    strides = instance.strides
    probs = [p.tolist() for p in instance.probs]
    values: dict[int, float] = {}
    actions: dict[int, int | None] = {}
    n = instance.n

    def V(code: int, chosen: tuple[int, ...]) -> float:
        hit = values.get(code)
        if hit is not None:
            return hit
        if len(values) >= cap:
            raise EnumerationTooLargeError("adaptive decision tree", len(values) + 1, cap)
        best, action = -math.inf, None
        for i in range(n):
            if i in chosen or not m._independent(sorted(chosen + (i,))):
                continue
            nxt = tuple(sorted(chosen + (i,)))
            v = 0.0
            for x, p in enumerate(probs[i]):
                if p:
                    v += p * V(code + (x + 1) * strides[i], nxt)
            if v > best:
                best, action = v, i
        stop = float(table[code])
        if action is None or (allow_stop and stop > best + 1e-12):
            best, action = stop, None
        values[code] = best
        actions[code] = action
        return best

    root = V(0, ())
    return root, DecisionTreeValue(instance, values, actions)


def optimal_nonadaptive_exact(
    instance: Instance, m: Matroid, oracle=None, cap: int = DEFAULT_CAP
) -> tuple[float, frozenset[int]]:
    """Best F(S) over independent sets; the best basis is returned."""
    _check_pair(instance, m)
    oracle = oracle or ExactOracle(instance, cap)
    best_any = -math.inf
    best_basis, best_set = -math.inf, frozenset()
    count = 0
    for S in m.independent_sets():
        count += 1
        if count > cap:
            raise EnumerationTooLargeError("independent set enumeration", count, cap)
        v = oracle.value(S)
        best_any = max(best_any, v)
        if len(S) == m.rank and v > best_basis:
            best_basis, best_set = v, S
    assert best_any <= best_basis + 1e-9, "a non-basis beat every basis under a monotone objective"
    return best_basis, best_set


def set_value_on(instance: Instance, S, realization: Mapping[int, int]) -> float:
    """f of a fixed set evaluated on a full realization (non-adaptive outcome)."""
    return eval_f(instance, {i: int(realization[i]) for i in S})

