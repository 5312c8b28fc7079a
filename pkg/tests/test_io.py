import json

import pytest

from stochsub import PartitionMatroid, UniformMatroid
from stochsub import io as instance_io
from stochsub.errors import InvalidInstanceError
from stochsub.experiments import TightExampleSpec, gen_random_instance


@pytest.mark.parametrize("objective", ["coverage", "concave_sum", "table"])
@pytest.mark.parametrize("matroid", ["uniform", "partition", "explicit"])
def test_round_trip(objective, matroid, tmp_path):
    inst, m = gen_random_instance(4, 2, objective, matroid, seed=11)
    path = tmp_path / "i.json"
    instance_io.save(path, inst, m)
    inst2, m2 = instance_io.load(path)
    assert inst2 == inst
    assert m2 == m
    assert instance_io.dumps(inst2, m2) == path.read_text()


def test_tight_loads_and_validates():
    inst, m = TightExampleSpec(4).materialize()
    inst2, m2 = instance_io.loads(instance_io.dumps(inst, m))
    assert inst2 == inst and m2 == UniformMatroid(64, 16)


def test_matroid_optional():
    inst, _ = gen_random_instance(3, 2, "coverage", "uniform", seed=0)
    assert instance_io.loads(instance_io.dumps(inst))[1] is None


def _doc():
    return {
        "universe_size": 2,
        "objective": {"kind": "coverage"},
        "elements": [{"id": 0, "support": [{"payload": [0], "prob": 0.5}, {"payload": [0, 1], "prob": 0.5}]}],
        "matroid": {"kind": "partition", "parts": [0], "capacities": [1]},
    }


def test_hand_written_document():
    inst, m = instance_io.instance_from_json(_doc())
    assert inst.elements[0].dist.payloads == (frozenset({0}), frozenset({0, 1}))
    assert m == PartitionMatroid((0,), (1,))


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d["elements"][0].update(id=1),
        lambda d: d["elements"][0]["support"][0].update(prob=-0.5),
        lambda d: d["elements"][0]["support"][0].update(prob="0.5"),
        lambda d: d["elements"][0]["support"][0].update(payload=[1, 0]),
        lambda d: d["objective"].update(kind="bogus"),
        lambda d: d.pop("objective"),
        lambda d: d["matroid"].update(parts=[0, 0]),
    ],
)
def test_rejects_malformed(mutate):
    doc = _doc()
    mutate(doc)
    with pytest.raises(InvalidInstanceError):
        instance_io.instance_from_json(doc)


def test_rejects_non_finite():
    text = json.dumps(_doc()).replace('"prob": 0.5}, {', '"prob": NaN}, {', 1)
    with pytest.raises(InvalidInstanceError):
        instance_io.loads(text)


def test_rejects_invalid_table():
    doc = {
        "objective": {"kind": "table", "values": [0.0, 1.0, 1.0, 3.0]},
        "elements": [{"id": i, "support": [{"payload": 0, "prob": 1.0}]} for i in range(2)],
    }
    with pytest.raises(InvalidInstanceError, match="submodular"):
        instance_io.instance_from_json(doc)
    inst, _ = instance_io.instance_from_json(doc, validate=False)
    assert inst.n == 2
