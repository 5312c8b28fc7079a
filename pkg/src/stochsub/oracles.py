"""Set-function oracles for F(S) and its multilinear extension.

Policies that only need unconditioned expectations (greedy, continuous greedy,
pipage rounding, the non-adaptive optimum) talk to one of these.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import InvalidArgumentError
from .evaluate import (
    DEFAULT_CAP,
    _contract,
    draw_digits,
    eval_batch,
    expected_value_exact,
    multilinear_extension,
    scenario_table,
)
from .evaluate import item_probabilities
from .model import Coverage, Instance

MAX_SET_TABLE_BITS = 20


def to_mask(S) -> int:
    m = 0
    for i in S:
        m |= 1 << int(i)
    return m


class ExactOracle:
    """Exact F(S).  Small instances precompute F for all 2^n subsets at once."""

    exact = True

    def __init__(self, instance: Instance, cap: int = DEFAULT_CAP):
        self.instance = instance
        self.cap = cap
        self._tensor = None
        if instance.n <= MAX_SET_TABLE_BITS and instance.scenario_count <= cap:
            self._tensor = _collapse(instance, scenario_table(instance, cap))
            # reversed axes so that flat index == bitmask with bit i for element i
            self.set_values = self._tensor.transpose(tuple(reversed(range(instance.n)))).ravel()
        else:
            self.set_values = None
            self._cached = lru_cache(maxsize=None)(self._compute)

    @property
    def tabulated(self) -> bool:
        return self.set_values is not None

    def _compute(self, mask: int) -> float:
        S = [i for i in range(self.instance.n) if mask >> i & 1]
        return expected_value_exact(self.instance, S, cap=self.cap)

    def value(self, S) -> float:
        mask = to_mask(S)
        if self.set_values is not None:
            return float(self.set_values[mask])
        return self._cached(mask)

    def values(self, masks: np.ndarray) -> np.ndarray:
        if self.set_values is not None:
            return self.set_values[np.asarray(masks, dtype=np.int64)]
        return np.array([self._cached(int(m)) for m in masks])

    def multilinear(self, y) -> float:
        y = np.asarray(y, dtype=float)
        if self._tensor is None:
            return multilinear_extension(self.instance, y, cap=self.cap)
        if self.instance.n == 0:
            return float(self._tensor)
        return _contract(self._tensor, (np.array([1.0 - v, v]) for v in y))


def _collapse(instance: Instance, table: np.ndarray) -> np.ndarray:
    """Integrate each element's outcome out of the scenario table: shape (2,)*n."""
    T = table
    for i in range(instance.n):
        A = np.moveaxis(T, i, 0)
        present = np.tensordot(instance.probs[i], A[1:], axes=(0, 0))
        T = np.moveaxis(np.stack([A[0], present]), 0, i)
    return T


class CoverageOracle:
    """Exact coverage F(S) and F(y) through per-item miss probabilities; any n."""

    exact = True
    tabulated = False

    def __init__(self, instance: Instance):
        if not isinstance(instance.objective, Coverage):
            raise InvalidArgumentError("CoverageOracle needs a coverage objective")
        self.instance = instance
        self._hit = item_probabilities(instance)
        self._w = instance.item_weights

    def value(self, S) -> float:
        ids = sorted(set(int(i) for i in S))
        miss = np.prod(1.0 - self._hit[ids], axis=0)
        return float(self._w @ (1.0 - miss))

    def values(self, masks) -> np.ndarray:
        return np.array([self.value([i for i in range(self.instance.n) if int(m) >> i & 1]) for m in masks])

    def multilinear(self, y) -> float:
        y = np.asarray(y, dtype=float)
        miss = np.prod(1.0 - y[:, None] * self._hit, axis=0)
        return float(self._w @ (1.0 - miss))


class SampledOracle:
    """Monte Carlo F with common random numbers.

    One fixed sample of full realizations (and of inclusion uniforms) is drawn
    up front, so every query reuses it and comparisons between nearby sets or
    points are paired.
    """

    exact = False

    def __init__(self, instance: Instance, samples: int, rng: np.random.Generator):
        self.instance = instance
        self.samples = samples
        self.digits = draw_digits(instance, rng, samples)
        self.uniforms = rng.random((samples, instance.n))
        self._memo: dict[int, float] = {}

    @property
    def tabulated(self) -> bool:
        return False

    def value(self, S) -> float:
        mask = to_mask(S)
        if mask not in self._memo:
            keep = np.array([mask >> i & 1 for i in range(self.instance.n)], dtype=bool)
            d = self.digits.copy()
            d[:, ~keep] = 0
            self._memo[mask] = float(eval_batch(self.instance, d).mean())
        return self._memo[mask]

    def values(self, masks) -> np.ndarray:
        return np.array([self.value([i for i in range(self.instance.n) if int(m) >> i & 1]) for m in masks])

    def multilinear(self, y) -> float:
        d = self.digits.copy()
        d[self.uniforms >= np.asarray(y, dtype=float)] = 0
        return float(eval_batch(self.instance, d).mean())


def make_oracle(instance: Instance, mode: str = "auto", samples: int = 2000, rng=None, cap: int = DEFAULT_CAP):
    """``exact`` / ``mc`` / ``auto``.

    ``auto`` is exact when the set table fits or the objective is coverage,
    sampled otherwise.
    """
    if mode == "exact":
        return ExactOracle(instance, cap)
    if mode == "auto":
        if instance.n <= MAX_SET_TABLE_BITS and instance.scenario_count <= cap:
            return ExactOracle(instance, cap)
        if isinstance(instance.objective, Coverage):
            return CoverageOracle(instance)
        mode = "mc"
    if mode == "mc":
        if rng is None:
            rng = np.random.default_rng(0)
        return SampledOracle(instance, samples, rng)
    raise InvalidArgumentError(f"unknown evaluator mode {mode!r}")
