"""JSON instance files.

Layout::

    {"universe_size": 4,
     "objective": {"kind": "coverage", "weights": [...]}        # weights optional
                | {"kind": "concave_sum", "xs": [...], "us": [...]}
                | {"kind": "table", "values": [...]},            # mixed-radix codes
     "elements": [{"id": 0, "support": [{"payload": [0, 2], "prob": 0.5}, ...]}, ...],
     "matroid": {"kind": "uniform", "k": 2}}                     # optional

Coverage payloads are sorted item arrays, concave_sum payloads are floats and
table payloads are ints.  Table values are indexed by the code documented in
:mod:`stochsub.model`.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .errors import InvalidInstanceError
from .evaluate import validate_objective
from .matroid import Matroid, matroid_from_json
from .model import ConcaveOfSum, Coverage, DiscreteDistribution, ExplicitTable, Instance, StochasticElement


def _reject_constant(name):
    raise InvalidInstanceError(f"non-finite number {name} in instance file")


def instance_to_json(instance: Instance, matroid: Matroid | None = None) -> dict:
    obj = instance.objective
    if isinstance(obj, Coverage):
        objective = {"kind": "coverage"}
        if obj.weights is not None:
            objective["weights"] = list(obj.weights)
    elif isinstance(obj, ConcaveOfSum):
        objective = {"kind": "concave_sum", "xs": list(obj.xs), "us": list(obj.us)}
    else:
        objective = {"kind": "table", "values": list(obj.values)}

    def payload(p):
        if isinstance(p, frozenset):
            return sorted(int(u) for u in p)
        if isinstance(obj, ConcaveOfSum):
            return float(p)
        return int(p)

    data = {
        "universe_size": instance.universe_size,
        "objective": objective,
        "elements": [
            {"id": el.id, "support": [{"payload": payload(p), "prob": q} for p, q in el.dist.support]}
            for el in instance.elements
        ],
    }
    if matroid is not None:
        data["matroid"] = matroid.to_json()
    return data


def dumps(instance: Instance, matroid: Matroid | None = None) -> str:
    return json.dumps(instance_to_json(instance, matroid), indent=1, allow_nan=False) + "\n"


def instance_from_json(data: dict, validate: bool = True) -> tuple[Instance, Matroid | None]:
    try:
        objective = data["objective"]
        kind = objective["kind"]
        raw_elements = data["elements"]
        universe = int(data.get("universe_size", 0))
    except (KeyError, TypeError) as exc:
        raise InvalidInstanceError(f"malformed instance document: {exc}") from None
    ids = [el.get("id") for el in raw_elements]
    if ids != list(range(len(ids))):
        raise InvalidInstanceError(f"element ids must be 0..n-1, sorted, without duplicates; got {ids}")

    if kind == "coverage":
        w = objective.get("weights")
        obj = Coverage(None if w is None else tuple(float(v) for v in w))
    elif kind == "concave_sum":
        obj = ConcaveOfSum(tuple(float(v) for v in objective["xs"]), tuple(float(v) for v in objective["us"]))
    elif kind == "table":
        obj = ExplicitTable(tuple(float(v) for v in objective["values"]))
    else:
        raise InvalidInstanceError(f"unknown objective kind {kind!r}")

    elements = []
    for el in raw_elements:
        pairs = []
        for entry in el["support"]:
            prob = entry["prob"]
            if not isinstance(prob, (int, float)) or isinstance(prob, bool) or not math.isfinite(prob) or prob < 0:
                raise InvalidInstanceError(f"bad probability {prob!r} for element {el['id']}")
            raw = entry["payload"]
            if kind == "coverage":
                if not isinstance(raw, list) or raw != sorted(set(raw)):
                    raise InvalidInstanceError(f"coverage payload {raw!r} must be a sorted array of distinct ints")
                payload = frozenset(int(u) for u in raw)
            elif kind == "concave_sum":
                payload = float(raw)
            else:
                if not isinstance(raw, int) or isinstance(raw, bool):
                    raise InvalidInstanceError(f"table payload {raw!r} must be an int")
                payload = raw
            pairs.append((payload, float(prob)))
        elements.append(StochasticElement(el["id"], DiscreteDistribution.from_pairs(pairs)))
    instance = Instance(tuple(elements), obj, universe)
    if validate and kind == "table":
        report = validate_objective(instance)
        if not report.valid:
            raise InvalidInstanceError(f"table objective is not monotone submodular: {report.violation}")
    matroid = matroid_from_json(data["matroid"], instance.n) if "matroid" in data else None
    return instance, matroid


def loads(text: str, validate: bool = True) -> tuple[Instance, Matroid | None]:
    try:
        data = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise InvalidInstanceError(f"invalid JSON: {exc}") from None
    return instance_from_json(data, validate)


def load(path, validate: bool = True) -> tuple[Instance, Matroid | None]:
    return loads(Path(path).read_text(encoding="utf-8"), validate)


def save(path, instance: Instance, matroid: Matroid | None = None) -> None:
    Path(path).write_text(dumps(instance, matroid), encoding="utf-8", newline="\n")
