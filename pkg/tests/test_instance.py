"""Instance construction, validation verdicts, generators, and file round-trips."""

import json
import math

import numpy as np
import pytest
from conftest import linear_model, logistic_model

from priceflow import (
    DemandModel,
    TabulatedResponse,
    build_instance,
    generate_crowdsourcing,
    generate_ridehail,
    read_instance,
    validate_instance,
    write_instance,
)
from priceflow.errors import InputError, ParseError

GAMMA = 0.3 * math.sqrt(3.0) / math.pi


def test_validate_linear_passes():
    inst = build_instance({"u": 1}, {"v": linear_model(10.0)}, [("u", "v", -1.0)])
    report = validate_instance(inst)
    assert report.verdicts["v"].passed
    assert report.passed


def test_validate_logistic_passes():
    inst = build_instance({"u": 1}, {"v": logistic_model(10.0)}, [("u", "v", -1.0)])
    assert validate_instance(inst).verdicts["v"].passed


def test_validate_increasing_custom_fails():
    xs = np.linspace(0.0, 1.0, 30)
    ps = np.exp(xs) / math.e  # increasing, inside [0, 1]
    model = DemandModel(
        family="binomial", count=1, response=TabulatedResponse(tuple(xs), tuple(ps))
    )
    inst = build_instance({"u": 1}, {"v": model}, [("u", "v", 5.0)])
    verdict = validate_instance(inst).verdicts["v"]
    assert not verdict.passed
    assert not verdict.checks["monotone"]
    assert any("increasing" in r for r in verdict.reasons)


def test_validate_out_of_range_custom_fails():
    xs = (0.0, 0.5, 1.0)
    ps = (1.4, 0.7, 0.0)  # starts above 1
    model = DemandModel(family="binomial", count=1, response=TabulatedResponse(xs, ps))
    inst = build_instance({"u": 1}, {"v": model}, [("u", "v", 5.0)])
    verdict = validate_instance(inst).verdicts["v"]
    assert not verdict.checks["range"]


def test_construction_removes_isolated_and_unprofitable():
    models = {
        "ok": linear_model(10.0),
        "island": linear_model(10.0),
        "loss": linear_model(4.0),  # prices at most 6, edge weight -50
        "nodemand": DemandModel(family="binomial", count=0, response=linear_model(10.0).response),
    }
    inst = build_instance(
        {"u0": 1, "u1": 1, "lonely": 2},
        models,
        [("u0", "ok", -1.0), ("u1", "loss", -50.0), ("u1", "nodemand", 1.0)],
    )
    assert inst.groups == ["ok"]
    assert inst.resources == ["u0"]
    removed = {r[0] for r in inst.metadata["removals"]}
    assert removed == {"island", "loss", "nodemand", "lonely", "u1"}


def test_capacity_must_be_positive():
    with pytest.raises(InputError, match="capacity must be >= 1"):
        build_instance({"u": 0}, {"v": linear_model(10.0)}, [("u", "v", 1.0)])


def test_edge_names_unknown_node():
    with pytest.raises(InputError, match="ghost"):
        build_instance({"u": 1}, {"v": linear_model(10.0)}, [("u", "ghost", 1.0)])


def test_mean_demand_strictly_decreasing_on_grid():
    for inst in (
        generate_ridehail(5, 3, 3, response="linear"),
        generate_ridehail(6, 3, 3, response="logistic"),
        generate_crowdsourcing(7, 3, 3, response="sigmoid"),
    ):
        for v in inst.groups:
            model = inst.demand[v]
            dom = model.domain
            if dom.hi is not None:
                xs = np.linspace(dom.lo, dom.hi, 102)[1:-1]
            else:
                c, wdt = model.response.center, model.response.width
                xs = np.linspace(c - 10 * wdt, c + 10 * wdt, 100)
            xi = model.count * np.asarray(model.response.prob(xs))
            assert np.all(np.diff(xi) < 0.0)


# -- generators --------------------------------------------------------------


def test_ridehail_structure():
    inst = generate_ridehail(1, 2, 2)
    assert len(inst.edges) == 4
    assert all(e.w <= 0 for e in inst.edges)
    assert all(inst.capacities[u] == 1 for u in inst.resources)
    assert all(m.family == "binomial" and m.count == 1 for m in inst.demand.values())


def test_ridehail_deterministic(tmp_path):
    a, b = generate_ridehail(1, 3, 4), generate_ridehail(1, 3, 4)
    assert a == b
    pa, pb = tmp_path / "a.json", tmp_path / "b.json"
    write_instance(a, pa)
    write_instance(b, pb)
    assert pa.read_bytes() == pb.read_bytes()


def test_ridehail_infinite_speed_zeroes_weights():
    inst = generate_ridehail(2, 2, 2, speed_kmh=math.inf)
    assert all(e.w == 0.0 for e in inst.edges)


def test_crowdsourcing_recipe():
    inst = generate_crowdsourcing(3, 4, 4, response="linear", family="poisson")
    for v in inst.groups:
        q = inst.demand[v].response.q
        assert -0.4 <= q <= -0.1
        assert inst.demand[v].family == "poisson"
    assert all(0.0 <= e.w <= 1.0 for e in inst.edges)
    assert all(c >= 1 for c in inst.capacities.values())


def test_crowdsourcing_negative_q_linear_endpoints():
    inst = generate_crowdsourcing(3, 4, 4, response="linear")
    v = inst.groups[0]
    r = inst.demand[v].response
    assert float(r.prob(r.q)) == pytest.approx(0.0)
    assert float(r.prob(1.5 * r.q)) == pytest.approx(1.0)


def test_crowdsourcing_deterministic():
    assert generate_crowdsourcing(9, 3, 3) == generate_crowdsourcing(9, 3, 3)
    assert generate_crowdsourcing(9, 3, 3) != generate_crowdsourcing(10, 3, 3)


# -- file round-trips ---------------------------------------------------------


@pytest.mark.parametrize(
    "inst",
    [
        generate_ridehail(11, 3, 2, response="linear"),
        generate_ridehail(12, 2, 3, response="logistic"),
        generate_crowdsourcing(13, 3, 3, response="sigmoid", family="poisson"),
    ],
)
def test_roundtrip_identity(tmp_path, inst):
    path = tmp_path / "inst.json"
    write_instance(inst, path)
    assert read_instance(path) == inst


def test_roundtrip_custom_response(tmp_path):
    xs = tuple(np.linspace(1.0, 2.0, 9))
    ps = tuple(np.linspace(1.0, 0.0, 9) ** 1.5)
    model = DemandModel(family="binomial", count=2, response=TabulatedResponse(xs, ps))
    inst = build_instance({"u": 1}, {"v": model}, [("u", "v", -0.5)])
    path = tmp_path / "inst.json"
    write_instance(inst, path)
    assert read_instance(path) == inst


def test_read_rejects_zero_capacity(tmp_path):
    inst = generate_ridehail(1, 2, 2)
    path = tmp_path / "inst.json"
    write_instance(inst, path)
    doc = json.loads(path.read_text())
    doc["resources"][0]["capacity"] = 0
    path.write_text(json.dumps(doc))
    with pytest.raises(InputError, match="capacity must be >= 1"):
        read_instance(path)


def test_read_names_unknown_edge_node(tmp_path):
    inst = generate_ridehail(1, 2, 2)
    path = tmp_path / "inst.json"
    write_instance(inst, path)
    doc = json.loads(path.read_text())
    doc["edges"][0]["v"] = "nosuch"
    path.write_text(json.dumps(doc))
    with pytest.raises(InputError, match="nosuch"):
        read_instance(path)


def test_read_rejects_unknown_kind_and_bad_json(tmp_path):
    inst = generate_ridehail(1, 2, 2)
    path = tmp_path / "inst.json"
    write_instance(inst, path)
    doc = json.loads(path.read_text())
    doc["groups"][0]["response"]["kind"] = "quadratic"
    path.write_text(json.dumps(doc))
    with pytest.raises(ParseError, match="quadratic"):
        read_instance(path)
    path.write_text("{not json")
    with pytest.raises(ParseError, match="line 1"):
        read_instance(path)
