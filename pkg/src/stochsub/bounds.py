"""The scenario LP f+(y) and the LP upper bound on adaptive policies.

A scenario assigns every element either "absent" or one support index.  For a
point ``y`` the LP picks the best joint distribution ``alpha`` over scenarios
whose per-element marginals are ``P[s_i = x] = y_i * g_i(x)``.  Because the
inclusion set is unrestricted here, ``max_{y in B(M)} f+(y)`` can only be
looser than a bound over sequences of independent sets, so it stays an upper
bound on every adaptive policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import EnumerationTooLargeError, InvalidArgumentError, LPError
from .evaluate import _as_point, multilinear_extension, scenario_table
from .matroid import Matroid
from .model import Instance
from .policies import optimal_adaptive_exact, optimal_nonadaptive_exact, pipage_round
from .oracles import ExactOracle

LP_CAP = 10**5
GAP = math.e / (math.e - 1)
TOL = 1e-9

_HIGHS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
    "presolve": True,
}


def _marginal_rows(instance: Instance):
    """Sparse rows (element, outcome) -> scenarios with that coordinate, plus the normalization row."""
    radices = instance.radices
    total = instance.scenario_count
    codes = np.arange(total)
    rows, cols = [np.zeros(total, dtype=np.int64)], [codes]
    labels = []
    r = 1
    for i, (stride, radix) in enumerate(zip(instance.strides, radices)):
        digit = (codes // stride) % radix
        for x in range(radix - 1):
            hit = np.flatnonzero(digit == x + 1)
            rows.append(np.full(hit.size, r, dtype=np.int64))
            cols.append(hit)
            labels.append((i, x))
            r += 1
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    A = sparse.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(r, total))
    return A, labels


def _check_cap(instance: Instance, cap: int) -> None:
    if instance.scenario_count > cap:
        raise EnumerationTooLargeError("scenario LP", instance.scenario_count, cap, "reduce the instance")


def _solve(c, A_eq, b_eq, bounds):
    res = linprog(c, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs", options=_HIGHS)
    if res.status != 0:
        raise LPError(f"LP solver status {res.status}: {res.message}")
    return res


def f_plus(instance: Instance, y, cap: int = LP_CAP, return_alpha: bool = False):
    """Best expected f over joint scenario distributions with marginals ``y_i g_i``."""
    _check_cap(instance, cap)
    y = _as_point(instance, y)
    values = scenario_table(instance, cap).ravel()
    A, labels = _marginal_rows(instance)
    b = np.empty(A.shape[0])
    b[0] = 1.0
    for r, (i, x) in enumerate(labels, start=1):
        b[r] = y[i] * instance.probs[i][x]
    res = _solve(-values, A, b, (0, None))
    value = float(values @ res.x)
    return (value, res.x) if return_alpha else value


def adaptive_upper_bound(instance: Instance, m: Matroid, cap: int = LP_CAP, return_point: bool = False):
    """``max_{y in B(M)} f+(y)`` as one joint LP over ``(alpha, y)``."""
    _check_cap(instance, cap)
    if m.n != instance.n:
        raise InvalidArgumentError("matroid and instance sizes differ")
    poly = m.base_polytope()
    values = scenario_table(instance, cap).ravel()
    A, labels = _marginal_rows(instance)
    n, total = instance.n, instance.scenario_count
    coupling = sparse.lil_matrix((A.shape[0], n))
    for r, (i, x) in enumerate(labels, start=1):
        coupling[r, i] = -instance.probs[i][x]
    P, q = poly.equality_matrices()
    A_eq = sparse.vstack([
        sparse.hstack([A, coupling.tocsr()]),
        sparse.hstack([sparse.csr_matrix((P.shape[0], total)), sparse.csr_matrix(P)]),
    ]).tocsr()
    b_eq = np.concatenate([[1.0], np.zeros(len(labels)), q])
    c = np.concatenate([-values, np.zeros(n)])
    bounds = [(0, None)] * total + [(0, 1)] * n
    res = _solve(c, A_eq, b_eq, bounds)
    value = float(values @ res.x[:total])
    y = np.clip(res.x[total:], 0.0, 1.0) + 0.0
    return (value, y) if return_point else value


@dataclass
class Link:
    name: str
    lhs: float
    rhs: float

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs + TOL

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "ok": self.ok}


@dataclass
class GapCertificate:
    A: float
    U: float
    M: float
    N: float
    y_star: list[float]
    rounded_set: list[int]
    rounded_value: float
    links: list[Link] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(link.ok for link in self.links)

    def violations(self) -> list[dict]:
        return [{"name": l.name, "excess": l.lhs - l.rhs} for l in self.links if not l.ok]

    def to_dict(self) -> dict:
        return {
            "A": self.A, "U": self.U, "M": self.M, "N": self.N, "y_star": self.y_star,
            "links": [link.to_dict() for link in self.links],
        }


def verify_gap_chain(instance: Instance, m: Matroid, cap: int = LP_CAP) -> GapCertificate:
    """Compute every quantity in the adaptivity-gap bound chain and check each link.

    A: optimal adaptive value, U: LP bound with maximizer y*, M: F(y*),
    R: F of the pipage-rounded y*, N: optimal non-adaptive value.
    """
    A, _ = optimal_adaptive_exact(instance, m)
    U, y_star = adaptive_upper_bound(instance, m, cap, return_point=True)
    oracle = ExactOracle(instance)
    M = multilinear_extension(instance, y_star)
    S = pipage_round(instance, m, y_star, oracle=oracle)
    R = oracle.value(S)
    N, _ = optimal_nonadaptive_exact(instance, m, oracle=oracle)
    links = [
        Link("A <= U", A, U),
        Link("U <= e/(e-1) * M", U, GAP * M),
        Link("M <= F(rounded)", M, R),
        Link("F(rounded) <= N", R, N),
        Link("A <= e/(e-1) * N", A, GAP * N),
    ]
    return GapCertificate(A, U, M, N, [float(v) for v in y_star], sorted(S), R, links)
