"""Exact and Monte Carlo evaluation of f, F(S), F(S, t) and the multilinear extension."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EnumerationTooLargeError,
    InvalidArgumentError,
    InvalidInstanceError,
    InvalidPointError,
)
from .model import ConcaveOfSum, Coverage, ExplicitTable, Instance, Realization, check_realization

DEFAULT_CAP = 10**6
Z95 = NormalDist().inv_cdf(0.975)

_WIDE = 63  # universes at least this large fall back to Python-int masks


def _coverage_values(instance: Instance, masks: np.ndarray) -> np.ndarray:
    w = instance.item_weights
    masks = np.asarray(masks)
    if masks.dtype == object:
        out = np.zeros(masks.shape)
        for u in np.flatnonzero(w):
            out += w[u] * ((masks >> int(u)) & 1).astype(float)
        return out
    if instance.objective.weights is None:
        return np.bitwise_count(masks).astype(float)
    out = np.zeros(masks.shape)
    for u in np.flatnonzero(w):
        out += w[u] * ((masks >> np.uint64(u)) & np.uint64(1)).astype(float)
    return out


def _mask_dtype(instance: Instance):
    return object if instance.universe_size >= _WIDE else np.uint64


def _value_grid(
    instance: Instance,
    axes: Sequence[int],
    fixed: Realization,
    with_absent: bool,
    cap: int = DEFAULT_CAP,
) -> np.ndarray:
    """f over the product of the listed elements' outcomes, other coordinates fixed.

    Axis ``k`` of the result ranges over element ``axes[k]``'s support, prefixed
    by an "absent" slot when ``with_absent`` is set.  Elements neither in
    ``axes`` nor ``fixed`` are absent.
    """
    size = math.prod(instance.support_sizes[i] + with_absent for i in axes)
    if size > cap:
        raise EnumerationTooLargeError("exact enumeration", size, cap)
    obj = instance.objective
    lead = [0] if with_absent else []

    def spread(grid, opts):
        return grid[..., None], np.asarray(opts).reshape((1,) * grid.ndim + (-1,))

    if isinstance(obj, Coverage):
        dt = _mask_dtype(instance)
        base = 0
        for i, x in fixed.items():
            base |= instance.masks[i][x]
        grid = np.array(base, dtype=dt)
        for i in axes:
            g, o = spread(grid, np.array(lead + list(instance.masks[i]), dtype=dt))
            grid = g | o
        return _coverage_values(instance, grid)
    if isinstance(obj, ConcaveOfSum):
        grid = np.array(sum(float(instance.scalars[i][x]) for i, x in sorted(fixed.items())))
        for i in axes:
            g, o = spread(grid, np.concatenate([[0.0] * len(lead), instance.scalars[i]]))
            grid = g + o
        return np.asarray(obj(grid), dtype=float)
    if isinstance(obj, ExplicitTable):
        strides = instance.strides
        grid = np.array(sum((x + 1) * strides[i] for i, x in fixed.items()), dtype=np.int64)
        for i in axes:
            digits = np.arange(0 if with_absent else 1, instance.radices[i], dtype=np.int64)
            g, o = spread(grid, digits * strides[i])
            grid = g + o
        return np.asarray(obj.values, dtype=float)[grid]
    raise InvalidInstanceError(f"unknown objective {obj!r}")


def _contract(grid: np.ndarray, weights: Iterable[np.ndarray]) -> float:
    for w in weights:
        grid = np.tensordot(w, grid, axes=(0, 0))
    return float(grid)


def scenario_table(instance: Instance, cap: int = DEFAULT_CAP) -> np.ndarray:
    """f for every realization of every subset, shaped by ``instance.radices``."""
    return _value_grid(instance, range(instance.n), {}, with_absent=True, cap=cap)


def eval_f(instance: Instance, r: Realization) -> float:
    check_realization(instance, r)
    return float(_value_grid(instance, (), r, with_absent=False))


def _check_ids(instance: Instance, S) -> list[int]:
    ids = sorted(set(int(i) for i in S))
    for i in ids:
        if not 0 <= i < instance.n:
            raise InvalidArgumentError(f"unknown element id {i}")
    return ids


def expected_value_exact(instance: Instance, S: Iterable[int], cap: int = DEFAULT_CAP) -> float:
    """F(S) by full enumeration of the outcomes of S."""
    ids = _check_ids(instance, S)
    grid = _value_grid(instance, ids, {}, with_absent=False, cap=cap)
    return _contract(grid, (instance.probs[i] for i in ids))


def conditional_expected_value(
    instance: Instance, S: Iterable[int], t: Realization, cap: int = DEFAULT_CAP
) -> float:
    """F(S, t): members of S observed in t are fixed, the rest of S is integrated out."""
    check_realization(instance, t)
    ids = _check_ids(instance, S)
    fixed = {i: t[i] for i in ids if i in t}
    free = [i for i in ids if i not in t]
    grid = _value_grid(instance, free, fixed, with_absent=False, cap=cap)
    return _contract(grid, (instance.probs[i] for i in free))


def marginal_conditional(instance: Instance, S_prev: Iterable[int], s_prev: Realization, i: int) -> float:
    """E[F(S_prev + i) | s_prev] - f(s_prev)."""
    check_realization(instance, s_prev)
    if set(S_prev) != set(s_prev):
        raise InvalidArgumentError("realization must cover exactly the chosen set")
    if not 0 <= i < instance.n:
        raise InvalidArgumentError(f"unknown element id {i}")
    if i in s_prev:
        raise InvalidArgumentError(f"element {i} already chosen")
    return _marginal(instance, s_prev, i)


def _marginal(instance: Instance, s: Realization, i: int) -> float:
    grid = _value_grid(instance, (i,), s, with_absent=False)
    base = float(_value_grid(instance, (), s, with_absent=False))
    return float(instance.probs[i] @ grid) - base


def _as_point(instance: Instance, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (instance.n,):
        raise InvalidPointError(f"point must have length {instance.n}")
    if not np.all(np.isfinite(y)) or np.any(y < 0) or np.any(y > 1):
        raise InvalidPointError("point must lie in [0, 1]^n")
    return y


def multilinear_extension(
    instance: Instance,
    y,
    mode: str = "exact",
    samples: int = 10_000,
    rng: np.random.Generator | None = None,
    cap: int = DEFAULT_CAP,
) -> float:
    """F(y) = E[F(Y)] where Y contains element i independently with probability y_i."""
    y = _as_point(instance, y)
    if mode == "exact":
        axes = [i for i in range(instance.n) if y[i] > 0]
        grid = _value_grid(instance, axes, {}, with_absent=True, cap=cap)
        weights = (np.concatenate([[1.0 - y[i]], y[i] * instance.probs[i]]) for i in axes)
        return _contract(grid, weights)
    if mode == "mc":
        if rng is None:
            raise InvalidArgumentError("Monte Carlo mode needs an rng")
        digits = draw_digits(instance, rng, samples, inclusion=y)
        return float(eval_batch(instance, digits).mean())
    raise InvalidArgumentError(f"unknown mode {mode!r}")


def coverage_closed_form(instance: Instance, S: Iterable[int] | None = None, y=None) -> float:
    """Coverage F(S) (or F(y)) via per-item independence products."""
    if not isinstance(instance.objective, Coverage):
        raise InvalidArgumentError("closed form applies to coverage objectives only")
    if (S is None) == (y is None):
        raise InvalidArgumentError("give exactly one of S or y")
    hit = item_probabilities(instance)
    if y is None:
        incl = np.zeros(instance.n)
        incl[_check_ids(instance, S)] = 1.0
    else:
        incl = _as_point(instance, y)
    miss = np.prod(1.0 - incl[:, None] * hit, axis=0) if instance.n else np.ones(instance.universe_size)
    return float(instance.item_weights @ (1.0 - miss))


def item_probabilities(instance: Instance) -> np.ndarray:
    """``P[u in X_i]`` as an ``n x universe_size`` matrix."""
    out = np.zeros((instance.n, instance.universe_size))
    for el in instance.elements:
        for payload, p in el.dist.support:
            for u in payload:
                out[el.id, u] += p
    return out


# ---------------------------------------------------------------- sampling

def draw_digits(
    instance: Instance,
    rng: np.random.Generator,
    samples: int,
    present: Iterable[int] | None = None,
    inclusion=None,
) -> np.ndarray:
    """Sampled realizations as a ``samples x n`` digit matrix (0 = absent).

    Only elements in ``present`` appear (all by default).  With an
    ``inclusion`` probability vector each element is kept independently.
    """
    n = instance.n
    u = rng.random((samples, n))
    digits = np.empty((samples, n), dtype=np.int64)
    for i in range(n):
        cdf = np.cumsum(instance.probs[i])
        digits[:, i] = np.minimum(np.searchsorted(cdf, u[:, i], side="right"), len(cdf) - 1) + 1
    if present is not None:
        keep = np.zeros(n, dtype=bool)
        keep[list(present)] = True
        digits[:, ~keep] = 0
    if inclusion is not None:
        inc = rng.random((samples, n)) < np.asarray(inclusion, dtype=float)
        digits[~inc] = 0
    return digits


def eval_batch(instance: Instance, digits: np.ndarray) -> np.ndarray:
    """f for each row of a digit matrix."""
    digits = np.asarray(digits, dtype=np.int64)
    m = digits.shape[0]
    obj = instance.objective
    if isinstance(obj, Coverage):
        dt = _mask_dtype(instance)
        acc = np.zeros(m, dtype=dt)
        for i in range(instance.n):
            table = np.array([0] + list(instance.masks[i]), dtype=dt)
            acc = acc | table[digits[:, i]]
        return _coverage_values(instance, acc)
    if isinstance(obj, ConcaveOfSum):
        acc = np.zeros(m)
        for i in range(instance.n):
            acc = acc + np.concatenate([[0.0], instance.scalars[i]])[digits[:, i]]
        return np.asarray(obj(acc), dtype=float)
    if isinstance(obj, ExplicitTable):
        codes = digits @ np.asarray(instance.strides, dtype=np.int64)
        return np.asarray(obj.values, dtype=float)[codes]
    raise InvalidInstanceError(f"unknown objective {obj!r}")


def mean_ci(values: np.ndarray) -> tuple[float, float]:
    """Sample mean and 95% normal-approximation half-width."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise InvalidArgumentError("need at least two samples")
    if np.ptp(values) == 0:
        return float(values[0]), 0.0
    return float(values.mean()), float(Z95 * values.std(ddof=1) / math.sqrt(values.size))


def expected_value_mc(
    instance: Instance, S: Iterable[int], samples: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Monte Carlo F(S) with a 95% confidence half-width."""
    if samples < 2:
        raise InvalidArgumentError("samples must be >= 2")
    ids = _check_ids(instance, S)
    digits = draw_digits(instance, rng, samples, present=ids)
    return mean_ci(eval_batch(instance, digits))


# -------------------------------------------------------------- validation

@dataclass
class ValidationReport:
    valid: bool
    partial: bool
    checked: int
    violation: dict | None = field(default=None)

    def to_dict(self) -> dict:
        return {"valid": self.valid, "partial": self.partial, "checked": self.checked, "violation": self.violation}


def validate_objective(
    instance: Instance, cap: int = DEFAULT_CAP, spot_checks: int = 20_000, seed: int = 0
) -> ValidationReport:
    """Check monotonicity and diminishing returns of f for every realization.

    Local inequalities over the full table (one or two added coordinates) are
    equivalent to the global ones.  Past the cap a seeded random spot check
    runs instead and the report is flagged partial.
    """
    if instance.scenario_count > cap:
        return _spot_check(instance, spot_checks, seed)
    V = scenario_table(instance, cap)
    n = instance.n
    tol = 1e-9 * (1.0 + float(np.abs(V).max(initial=0.0)))
    checked = 0
    for i in range(n):
        W = np.moveaxis(V, i, 0)
        drop = W[0][None] - W[1:]
        checked += drop.size
        bad = np.argwhere(drop > tol)
        if bad.size:
            x, *rest = bad[0]
            s = _rest_realization(rest, [a for a in range(n) if a != i])
            return ValidationReport(False, False, checked, {
                "kind": "monotonicity", "S": sorted(s), "T": sorted(set(s) | {i}), "j": None,
                "realization": {**s, i: int(x)}, "amount": float(drop[tuple(bad[0])]),
            })
    for i in range(n):
        for j in range(i + 1, n):
            W = np.moveaxis(V, (i, j), (0, 1))
            gap = (W[1:, 1:] + W[0, 0][None, None]) - (W[1:, :1] + W[:1, 1:])
            checked += gap.size
            bad = np.argwhere(gap > tol)
            if bad.size:
                xi, xj, *rest = bad[0]
                s = _rest_realization(rest, [a for a in range(n) if a not in (i, j)])
                return ValidationReport(False, False, checked, {
                    "kind": "submodularity", "S": sorted(s), "T": sorted(set(s) | {i}), "j": j,
                    "realization": {**s, i: int(xi), j: int(xj)}, "amount": float(gap[tuple(bad[0])]),
                })
    return ValidationReport(True, False, checked)


def _rest_realization(digits, axes) -> dict[int, int]:
    return {a: int(d) - 1 for a, d in zip(axes, digits) if d > 0}


def _spot_check(instance: Instance, count: int, seed: int) -> ValidationReport:
    n = instance.n
    if n == 0:
        return ValidationReport(True, True, 0)
    rng = np.random.default_rng(seed)
    base = draw_digits(instance, rng, count)
    base[rng.random((count, n)) < 0.5] = 0
    full = draw_digits(instance, rng, count)
    i = rng.integers(n, size=count)
    j = (i + 1 + rng.integers(max(n - 1, 1), size=count)) % n
    rows = np.arange(count)
    base[rows, i] = 0
    base[rows, j] = 0
    with_i = base.copy()
    with_i[rows, i] = full[rows, i]
    with_j = base.copy()
    with_j[rows, j] = full[rows, j]
    both = with_i.copy()
    both[rows, j] = full[rows, j]
    f0, fi, fj, fij = (eval_batch(instance, d) for d in (base, with_i, with_j, both))
    tol = 1e-9 * (1.0 + float(max(np.abs(fij).max(), np.abs(fi).max())))
    mono = np.flatnonzero(f0 - fi > tol)
    if mono.size:
        k = mono[0]
        s = _rest_realization(base[k], range(n))
        return ValidationReport(False, True, count, {
            "kind": "monotonicity", "S": sorted(s), "T": sorted(set(s) | {int(i[k])}), "j": None,
            "realization": _rest_realization(with_i[k], range(n)), "amount": float(f0[k] - fi[k]),
        })
    sub = np.flatnonzero((fij + f0) - (fi + fj) > tol) if n > 1 else np.array([], dtype=int)
    if sub.size:
        k = sub[0]
        s = _rest_realization(base[k], range(n))
        return ValidationReport(False, True, count, {
            "kind": "submodularity", "S": sorted(s), "T": sorted(set(s) | {int(i[k])}), "j": int(j[k]),
            "realization": _rest_realization(both[k], range(n)), "amount": float(fij[k] + f0[k] - fi[k] - fj[k]),
        })
    return ValidationReport(True, True, count)
