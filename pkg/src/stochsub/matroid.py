"""Uniform, partition and explicit matroids over the ground set ``0..n-1``."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgumentError, InvalidInstanceError, InvalidPointError, UnsupportedMatroidError


def _mask(S: Iterable[int]) -> int:
    m = 0
    for i in S:
        m |= 1 << int(i)
    return m


def _members(mask: int) -> list[int]:
    out, i = [], 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


@dataclass(frozen=True)
class LinearConstraint:
    coeffs: np.ndarray
    relation: str  # "==", "<=" or ">="
    bound: float

    def holds(self, y: np.ndarray, tol: float = 1e-9) -> bool:
        lhs = float(self.coeffs @ y)
        if self.relation == "==":
            return abs(lhs - self.bound) <= tol
        if self.relation == "<=":
            return lhs <= self.bound + tol
        return lhs >= self.bound - tol


@dataclass(frozen=True)
class BasePolytopeDescription:
    """Linear description of B(M): ``constraints`` plus the box ``0 <= y <= 1``."""

    n: int
    constraints: tuple[LinearConstraint, ...]

    def contains(self, y, tol: float = 1e-9) -> bool:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.n,) or np.any(y < -tol) or np.any(y > 1 + tol):
            return False
        return all(c.holds(y, tol) for c in self.constraints)

    def equality_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        eq = [c for c in self.constraints if c.relation == "=="]
        if not eq:
            return np.zeros((0, self.n)), np.zeros(0)
        return np.vstack([c.coeffs for c in eq]), np.array([c.bound for c in eq], dtype=float)


class Matroid:
    """Independence oracle interface; subclasses implement ``_independent``."""

    n: int
    kind: str

    def _check(self, S: Iterable[int]) -> list[int]:
        ids = sorted(set(int(i) for i in S))
        for i in ids:
            if not 0 <= i < self.n:
                raise InvalidArgumentError(f"unknown element id {i}")
        return ids

    def is_independent(self, S: Iterable[int]) -> bool:
        return self._independent(self._check(S))

    def _independent(self, ids: list[int]) -> bool:
        raise NotImplementedError

    @property
    def rank(self) -> int:
        raise NotImplementedError

    def can_add(self, S: Iterable[int], i: int) -> bool:
        ids = self._check(S)
        if not self._independent(ids):
            raise InvalidArgumentError("S must be independent")
        if not 0 <= i < self.n:
            raise InvalidArgumentError(f"unknown element id {i}")
        if i in ids:
            return False
        return self._independent(sorted(ids + [i]))

    def is_basis(self, S: Iterable[int]) -> bool:
        ids = self._check(S)
        if not self._independent(ids):
            raise InvalidArgumentError("S must be independent")
        return len(ids) == self.rank

    def max_weight_basis(self, w: Sequence[float]) -> frozenset[int]:
        """Matroid greedy: heaviest first, ties to the lowest id.  Returns a basis."""
        w = np.asarray(w, dtype=float)
        if w.shape != (self.n,):
            raise InvalidArgumentError(f"need {self.n} weights")
        chosen: list[int] = []
        for i in sorted(range(self.n), key=lambda i: (-w[i], i)):
            if self._independent(sorted(chosen + [i])):
                chosen.append(i)
                if len(chosen) == self.rank:
                    break
        return frozenset(chosen)

    def independent_sets(self) -> Iterable[frozenset[int]]:
        for r in range(self.rank + 1):
            for combo in itertools.combinations(range(self.n), r):
                if self._independent(list(combo)):
                    yield frozenset(combo)

    def bases(self) -> Iterable[frozenset[int]]:
        for combo in itertools.combinations(range(self.n), self.rank):
            if self._independent(list(combo)):
                yield frozenset(combo)

    def base_polytope(self) -> BasePolytopeDescription:
        raise UnsupportedMatroidError(f"no explicit base polytope for {self.kind} matroids")

    def groups(self) -> list[list[int]]:
        """Element groups whose coordinate sums are fixed on B(M)."""
        raise UnsupportedMatroidError(f"no exchange groups for {self.kind} matroids")

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=True)
class UniformMatroid(Matroid):
    n: int
    k: int
    kind = "uniform"

    def __post_init__(self):
        if not 0 <= self.k <= self.n:
            raise InvalidInstanceError(f"uniform rank {self.k} outside 0..{self.n}")

    def _independent(self, ids):
        return len(ids) <= self.k

    @property
    def rank(self) -> int:
        return self.k

    def base_polytope(self) -> BasePolytopeDescription:
        return BasePolytopeDescription(self.n, (LinearConstraint(np.ones(self.n), "==", float(self.k)),))

    def groups(self):
        return [list(range(self.n))]

    def to_json(self):
        return {"kind": "uniform", "k": self.k}


@dataclass(frozen=True, eq=True)
class PartitionMatroid(Matroid):
    """At most ``capacities[p]`` elements from part ``p``; ``parts[i]`` is element i's part."""

    parts: tuple[int, ...]
    capacities: tuple[int, ...]
    kind = "partition"

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(int(p) for p in self.parts))
        object.__setattr__(self, "capacities", tuple(int(c) for c in self.capacities))
        for p in self.parts:
            if not 0 <= p < len(self.capacities):
                raise InvalidInstanceError(f"part id {p} has no capacity")
        if any(c < 0 for c in self.capacities):
            raise InvalidInstanceError("capacities must be non-negative")

    @property
    def n(self) -> int:
        return len(self.parts)

    @cached_property
    def members(self) -> list[list[int]]:
        out = [[] for _ in self.capacities]
        for i, p in enumerate(self.parts):
            out[p].append(i)
        return out

    @cached_property
    def effective_capacities(self) -> tuple[int, ...]:
        return tuple(min(c, len(m)) for c, m in zip(self.capacities, self.members))

    def _independent(self, ids):
        used = [0] * len(self.capacities)
        for i in ids:
            p = self.parts[i]
            used[p] += 1
            if used[p] > self.capacities[p]:
                return False
        return True

    @property
    def rank(self) -> int:
        return sum(self.effective_capacities)

    def base_polytope(self) -> BasePolytopeDescription:
        cons = []
        for members, cap in zip(self.members, self.effective_capacities):
            if not members:
                continue
            coeffs = np.zeros(self.n)
            coeffs[members] = 1.0
            cons.append(LinearConstraint(coeffs, "==", float(cap)))
        return BasePolytopeDescription(self.n, tuple(cons))

    def groups(self):
        return [m for m in self.members if m]

    def to_json(self):
        return {"kind": "partition", "parts": list(self.parts), "capacities": list(self.capacities)}


class ExplicitMatroid(Matroid):
    """Matroid given by its full family of independent sets (validated exhaustively)."""

    kind = "explicit"

    def __init__(self, n: int, independent_sets: Iterable[Iterable[int]]):
        self.n = int(n)
        family = set()
        for S in independent_sets:
            S = list(S)
            if any(not 0 <= i < self.n for i in S):
                raise InvalidInstanceError(f"independent set {S} mentions an unknown element")
            family.add(_mask(S))
        self._family = frozenset(family)
        self._validate()
        self._rank = max(m.bit_count() for m in self._family)

    def _validate(self):
        fam = self._family
        if 0 not in fam:
            raise InvalidInstanceError("the empty set must be independent")
        for m in fam:
            for i in _members(m):
                if m & ~(1 << i) not in fam:
                    raise InvalidInstanceError(f"not downward closed at {_members(m)}")
        by_size: dict[int, list[int]] = {}
        for m in fam:
            by_size.setdefault(m.bit_count(), []).append(m)
        # with downward closure, exchange for |T| = |S| + 1 implies the general axiom
        for size, small in by_size.items():
            for S in small:
                for T in by_size.get(size + 1, []):
                    diff = T & ~S
                    if not any((S | (1 << t)) in fam for t in _members(diff)):
                        raise InvalidInstanceError(
                            f"exchange axiom fails for S={_members(S)}, T={_members(T)}"
                        )

    @classmethod
    def from_matroid(cls, m: Matroid) -> "ExplicitMatroid":
        return cls(m.n, [sorted(S) for S in m.independent_sets()])

    def _independent(self, ids):
        return _mask(ids) in self._family

    @property
    def rank(self) -> int:
        return self._rank

    def independent_sets(self):
        for m in sorted(self._family, key=lambda m: (m.bit_count(), _members(m))):
            yield frozenset(_members(m))

    def __eq__(self, other):
        return isinstance(other, ExplicitMatroid) and (self.n, self._family) == (other.n, other._family)

    def __hash__(self):
        return hash((self.n, self._family))

    def __repr__(self):
        return f"ExplicitMatroid(n={self.n}, rank={self.rank}, sets={len(self._family)})"

    def to_json(self):
        return {"kind": "explicit", "independent_sets": [sorted(S) for S in self.independent_sets()]}


def matroid_from_json(data: dict, n: int) -> Matroid:
    kind = data.get("kind")
    if kind == "uniform":
        return UniformMatroid(n, int(data["k"]))
    if kind == "partition":
        parts = data["parts"]
        if len(parts) != n:
            raise InvalidInstanceError(f"partition needs {n} part ids, got {len(parts)}")
        return PartitionMatroid(tuple(parts), tuple(data["capacities"]))
    if kind == "explicit":
        return ExplicitMatroid(n, data["independent_sets"])
    raise InvalidInstanceError(f"unknown matroid kind {kind!r}")


def check_point_in_base_polytope(m: Matroid, y, tol: float = 1e-9) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if not m.base_polytope().contains(y, tol):
        raise InvalidPointError("point is not in the base polytope")
    return y
