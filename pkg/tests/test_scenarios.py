"""Scenario layer: config validation, task dispatch, deterministic records."""

import dataclasses
import json

import pytest

from warptone.report import parse_record, to_csv, to_json
from warptone.scenarios import (
    ScenarioSpec, TaskSpec, ValidationError, build_model, builtin_names,
    builtin_scenario, run_scenario, scenario_from_dict,
)


# ---------------------------------------------------------------------------
# model construction from config
# ---------------------------------------------------------------------------

def test_build_model_defaults():
    model = build_model({})
    assert model.base.n == 2
    assert not model.has_fiber


def test_build_model_full():
    model = build_model({"n": 3, "f": "hyperbolic", "m": 2, "psi": 1.5,
                         "unit_fiber_volume": 4.0, "fiber_modes": [0, 2, 2]})
    assert model.base.n == 3
    assert model.fiber.m == 2
    assert model.fiber.unit_fiber_volume == 4.0
    assert model.fiber.fiber_mode_eigenvalues == (0.0, 2.0, 2.0)


def test_build_model_expression_profile():
    model = build_model({"f": "t*exp(t^2)"})
    assert model.base.f.value(1.0) == pytest.approx(2.718281828459045)


@pytest.mark.parametrize("cfg,path", [
    ({"n": 1}, "model.n"),
    ({"n": 2.5}, "model.n"),
    ({"f": "t +"}, "model.f"),
    ({"f": "cos(t)"}, "model.f"),                 # not pole-regular
    ({"m": 2}, "model.psi"),                      # fiber fields without psi
    ({"fiber_modes": [0, 1]}, "model.psi"),
    ({"psi": 1.0, "m": 0}, "model.m"),
    ({"psi": [1, 2]}, "model.psi"),
    ({"psi": 1.0, "fiber_modes": [1, 2]}, "model.psi"),
    ({"bogus": 1}, "model.bogus"),
])
def test_build_model_error_paths(cfg, path):
    with pytest.raises(ValidationError) as info:
        build_model(cfg)
    assert info.value.path == path


# ---------------------------------------------------------------------------
# scenario dicts
# ---------------------------------------------------------------------------

GOOD = {"name": "demo", "model": {"f": "hyperbolic"},
        "tasks": [{"kind": "tone", "params": {"b": 2.0}}]}


def test_scenario_round_trip():
    spec = scenario_from_dict(GOOD)
    assert spec.name == "demo"
    assert spec.tasks[0].kind == "tone"
    assert scenario_from_dict(spec.to_dict()) == spec


@pytest.mark.parametrize("mutate,path", [
    (lambda d: d.pop("name"), "name"),
    (lambda d: d.update(name=""), "name"),
    (lambda d: d.update(model="x"), "model"),
    (lambda d: d.update(tasks=[]), "tasks"),
    (lambda d: d.update(tasks=[{"params": {}}]), "tasks[0]"),
    (lambda d: d.update(tasks=[{"kind": "explode"}]), "tasks[0].kind"),
    (lambda d: d.update(tasks=[{"kind": "tone", "params": 7}]),
     "tasks[0].params"),
])
def test_scenario_error_paths(mutate, path):
    d = json.loads(json.dumps(GOOD))
    mutate(d)
    with pytest.raises(ValidationError) as info:
        scenario_from_dict(d)
    assert info.value.path == path


def test_unknown_task_params_rejected():
    spec = ScenarioSpec(name="x", model={"f": "hyperbolic"},
                        tasks=(TaskSpec("tone", {"b": 2.0, "nope": 1}),))
    with pytest.raises(ValidationError):
        run_scenario(spec)


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------

def test_run_single_tone_task():
    record = run_scenario(scenario_from_dict(GOOD))
    assert record.ok
    res = record.results[0]
    assert res["ok"] is True
    assert res["task"] == "tone"
    body = res["result"]
    assert body["lambda"] > 0
    assert len(body["profile_t"]) == len(body["profile_u"])
    assert record.versions["warptone"]


def test_task_failures_are_embedded_not_raised():
    # G = -1 with a horizon past pi hits a conjugate point at run time; the
    # record carries the failure and later tasks still run
    spec = ScenarioSpec(
        name="x", model={"f": "euclidean"},
        tasks=(TaskSpec("compare", {"g": "-1", "horizon": 4.0}),
               TaskSpec("tone", {"b": 2.0})))
    record = run_scenario(spec)
    assert not record.ok
    assert record.results[0]["ok"] is False
    assert "ConjugatePointError" in record.results[0]["error"]
    assert record.results[1]["ok"] is True     # later tasks still run


def test_config_errors_raise_instead_of_embedding():
    # a malformed task (missing required curvature bound) is a spec problem,
    # not a runtime result: it must raise with its field path
    spec = ScenarioSpec(
        name="x", model={"f": "hyperbolic"},
        tasks=(TaskSpec("certify", {"kind": "radial-curvature"}),))
    with pytest.raises(ValidationError) as info:
        run_scenario(spec)
    assert info.value.path == "tasks[0].g"


def test_builtin_names_stable():
    names = builtin_names()
    assert names == tuple(sorted(names))
    for expected in ("euclidean", "hyperbolic", "baider", "sl2r"):
        assert expected in names


def test_builtin_scenario_unknown_is_helpful():
    with pytest.raises(ValidationError) as info:
        builtin_scenario("no-such-thing")
    assert "euclidean" in str(info.value)


def test_wall_time_recorded_but_not_serialized():
    record = run_scenario(scenario_from_dict(GOOD))
    assert record.wall_time > 0.0
    assert '"wall_time": null' in to_json(record)


# ---------------------------------------------------------------------------
# determinism and round trips
# ---------------------------------------------------------------------------

def test_records_identical_across_runs():
    spec = builtin_scenario("baider_minimal")
    a, b = run_scenario(spec), run_scenario(spec)
    assert to_json(a) == to_json(b)
    assert to_csv(a) == to_csv(b)


def test_json_record_round_trip():
    record = run_scenario(builtin_scenario("baider_minimal"))
    back = parse_record(to_json(record))
    assert back == dataclasses.replace(record, wall_time=None)
    # and re-serialization is byte-identical
    assert to_json(back) == to_json(record)
