"""Instances: independent stochastic elements plus a monotone submodular objective.

Outcome payloads are plain Python values whose type depends on the objective:

* ``Coverage``      -- ``frozenset`` of universe item ids
* ``ConcaveOfSum``  -- non-negative ``float``
* ``ExplicitTable`` -- opaque ``int`` label

A partial realization is a mapping ``element id -> support index``.  Elements
missing from the mapping were not chosen.  Full tables over realizations use a
mixed-radix code with one digit per element: digit 0 means absent and digit
``j + 1`` means support index ``j``.  Element 0 is the most significant digit
(C order), so ``code = ((d0 * r1 + d1) * r2 + d2) ...`` with ``r_i = |support_i| + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Mapping, Sequence, Union

import numpy as np

from .errors import InvalidInstanceError, InvalidRealizationError

PROB_TOL = 1e-12

Payload = Union[frozenset, float, int]
Realization = Mapping[int, int]


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite outcome distribution ``g_i`` of one element."""

    payloads: tuple
    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.payloads) == 0:
            raise InvalidInstanceError("distribution support must be non-empty")
        if len(self.payloads) != len(self.probs):
            raise InvalidInstanceError("payloads and probs differ in length")
        for p in self.probs:
            if not math.isfinite(p) or p < 0 or p > 1:
                raise InvalidInstanceError(f"invalid probability {p!r}")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > PROB_TOL:
            raise InvalidInstanceError(f"probabilities sum to {total!r}, not 1")
        if len(set(self.payloads)) != len(self.payloads):
            raise InvalidInstanceError("payloads must be pairwise distinct")

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[Any, float]]) -> "DiscreteDistribution":
        return cls(tuple(p for p, _ in pairs), tuple(float(q) for _, q in pairs))

    @classmethod
    def point(cls, payload) -> "DiscreteDistribution":
        return cls((payload,), (1.0,))

    @property
    def support(self) -> list[tuple[Any, float]]:
        return list(zip(self.payloads, self.probs))

    def __len__(self) -> int:
        return len(self.payloads)


@dataclass(frozen=True)
class StochasticElement:
    id: int
    dist: DiscreteDistribution


@dataclass(frozen=True)
class Coverage:
    """Weighted coverage of universe items; unit weights when ``weights`` is None."""

    weights: tuple[float, ...] | None = None
    kind = "coverage"


@dataclass(frozen=True)
class ConcaveOfSum:
    """``u(sum of present scalars)`` with ``u`` piecewise linear through the breakpoints.

    ``u`` is flat past the last breakpoint, e.g. ``min(x, 1)`` is
    ``ConcaveOfSum((0, 1), (0, 1))``.
    """

    xs: tuple[float, ...]
    us: tuple[float, ...]
    kind = "concave_sum"

    def __post_init__(self):
        xs, us = self.xs, self.us
        if len(xs) != len(us) or len(xs) < 1:
            raise InvalidInstanceError("breakpoint arrays must be non-empty and equal length")
        if xs[0] != 0 or us[0] != 0:
            raise InvalidInstanceError("u must start at the breakpoint (0, 0)")
        slopes = []
        for a, b, ua, ub in zip(xs, xs[1:], us, us[1:]):
            if not b > a:
                raise InvalidInstanceError("breakpoints must be strictly increasing")
            slopes.append((ub - ua) / (b - a))
        if any(s < 0 for s in slopes):
            raise InvalidInstanceError("u must be non-decreasing")
        if any(s2 > s1 + 1e-12 for s1, s2 in zip(slopes, slopes[1:])):
            raise InvalidInstanceError("slopes must be non-increasing (u concave)")

    def __call__(self, total):
        return np.interp(total, self.xs, self.us)


@dataclass(frozen=True)
class ExplicitTable:
    """Value of every realization, indexed by its mixed-radix code."""

    values: tuple[float, ...]
    kind = "table"

    def __post_init__(self):
        if any(not math.isfinite(v) or v < 0 for v in self.values):
            raise InvalidInstanceError("table values must be finite and non-negative")


Objective = Union[Coverage, ConcaveOfSum, ExplicitTable]


@dataclass(frozen=True)
class Instance:
    elements: tuple[StochasticElement, ...]
    objective: Objective
    universe_size: int = 0

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        for pos, el in enumerate(self.elements):
            if el.id != pos:
                raise InvalidInstanceError(f"element ids must be 0..n-1 in order; got {el.id} at {pos}")
        obj = self.objective
        if isinstance(obj, Coverage):
            if self.universe_size < 0:
                raise InvalidInstanceError("universe_size must be non-negative")
            if obj.weights is not None:
                if len(obj.weights) != self.universe_size:
                    raise InvalidInstanceError("need one weight per universe item")
                if any(not math.isfinite(w) or w < 0 for w in obj.weights):
                    raise InvalidInstanceError("coverage weights must be non-negative")
            for el in self.elements:
                for p in el.dist.payloads:
                    if not isinstance(p, frozenset):
                        raise InvalidInstanceError("coverage payloads must be frozensets")
                    if any(not isinstance(u, (int, np.integer)) or not 0 <= u < self.universe_size for u in p):
                        raise InvalidInstanceError(f"coverage item out of range in {sorted(p)}")
        elif isinstance(obj, ConcaveOfSum):
            for el in self.elements:
                for p in el.dist.payloads:
                    if isinstance(p, (frozenset, bool)) or not isinstance(p, (int, float)) or not p >= 0 or not math.isfinite(p):
                        raise InvalidInstanceError(f"concave_sum payloads must be finite non-negative reals, got {p!r}")
        elif isinstance(obj, ExplicitTable):
            for el in self.elements:
                for p in el.dist.payloads:
                    if not isinstance(p, (int, np.integer)) or isinstance(p, bool):
                        raise InvalidInstanceError("table payloads must be ints")
            size = math.prod(self.radices)
            if len(obj.values) != size:
                raise InvalidInstanceError(f"table needs {size} values, got {len(obj.values)}")
        else:
            raise InvalidInstanceError(f"unknown objective {obj!r}")

    @property
    def n(self) -> int:
        return len(self.elements)

    @property
    def kind(self) -> str:
        return self.objective.kind

    @cached_property
    def support_sizes(self) -> tuple[int, ...]:
        return tuple(len(el.dist) for el in self.elements)

    @cached_property
    def radices(self) -> tuple[int, ...]:
        return tuple(s + 1 for s in self.support_sizes)

    @cached_property
    def probs(self) -> tuple[np.ndarray, ...]:
        return tuple(np.asarray(el.dist.probs, dtype=float) for el in self.elements)

    @cached_property
    def item_weights(self) -> np.ndarray:
        if self.objective.weights is None:
            return np.ones(self.universe_size)
        return np.asarray(self.objective.weights, dtype=float)

    @cached_property
    def masks(self) -> tuple[tuple[int, ...], ...]:
        """Coverage payloads as integer bitmasks over the universe."""
        return tuple(tuple(sum(1 << u for u in p) for p in el.dist.payloads) for el in self.elements)

    @cached_property
    def scalars(self) -> tuple[np.ndarray, ...]:
        return tuple(np.asarray(el.dist.payloads, dtype=float) for el in self.elements)

    @cached_property
    def strides(self) -> tuple[int, ...]:
        out, acc = [], 1
        for r in reversed(self.radices):
            out.append(acc)
            acc *= r
        return tuple(reversed(out))

    @cached_property
    def scenario_count(self) -> int:
        return math.prod(self.radices)


def check_realization(instance: Instance, r: Realization) -> None:
    for i, x in r.items():
        if not isinstance(i, (int, np.integer)) or not 0 <= i < instance.n:
            raise InvalidRealizationError(f"unknown element id {i!r}")
        if not isinstance(x, (int, np.integer)) or not 0 <= x < instance.support_sizes[i]:
            raise InvalidRealizationError(f"support index {x!r} out of range for element {i}")


def encode(instance: Instance, r: Realization) -> int:
    """Mixed-radix code of a partial realization (absent = digit 0)."""
    return sum((x + 1) * instance.strides[i] for i, x in r.items())


def decode(instance: Instance, code: int) -> dict[int, int]:
    out = {}
    for i, (stride, radix) in enumerate(zip(instance.strides, instance.radices)):
        d = (code // stride) % radix
        if d:
            out[i] = d - 1
    return out


def sample_realization(instance: Instance, rng: np.random.Generator, elements=None) -> dict[int, int]:
    """Draw one outcome for each listed element (all elements by default)."""
    ids = range(instance.n) if elements is None else sorted(elements)
    return {i: int(rng.choice(instance.support_sizes[i], p=instance.probs[i])) for i in ids}
