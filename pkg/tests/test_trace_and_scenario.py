"""Trace CSV round-tripping and scenario file validation."""

import dataclasses
import json

import pytest

from grid5g.engine import Simulation, run
from grid5g.errors import ScenarioError
from grid5g.scenario import (
    list_presets,
    load_scenario,
    parse_scenario,
    resolve_scenario_bytes,
)
from grid5g.trace import emit_trace, parse_trace, read_trace, write_trace


@pytest.fixture(scope="module")
def short_run():
    scenario, _, _ = load_scenario("cspm_staggered")
    scenario = dataclasses.replace(scenario, duration=0.05, events=[
        dataclasses.replace(scenario.events[0], t=0.01)])
    return scenario, run(scenario)


class TestTraceFormat:
    def test_round_trip_bytes(self, short_run, tmp_path):
        scenario, records = short_run
        path = tmp_path / "trace.csv"
        write_trace(path, records, [1, 2, 3], 2)
        original = path.read_bytes()
        parsed = read_trace(path)
        again = emit_trace(parsed.records, parsed.der_ids, parsed.carriers)
        assert again.encode() == original

    def test_parse_recovers_structure(self, short_run):
        scenario, records = short_run
        text = emit_trace(records, [1, 2, 3], 2)
        parsed = parse_trace(text)
        assert parsed.der_ids == (1, 2, 3)
        assert parsed.carriers == 2
        assert len(parsed.records) == len(records)
        assert parsed.records[0].queued == records[0].queued
        assert parsed.records[-1].cqi == records[-1].cqi

    def test_values_survive_9_digits(self, short_run):
        scenario, records = short_run
        parsed = parse_trace(emit_trace(records, [1, 2, 3], 2))
        for got, want in zip(parsed.records, records):
            assert got.t == pytest.approx(want.t, rel=1e-8, abs=1e-12)
            assert got.pcc == pytest.approx(want.pcc, rel=1e-8, abs=1e-12)

    def test_series_accessor(self, short_run):
        scenario, records = short_run
        parsed = parse_trace(emit_trace(records, [1, 2, 3], 2))
        assert parsed.series("pcc") == [r.pcc for r in parsed.records]
        assert parsed.series("x_2") == [r.x[1] for r in parsed.records]
        with pytest.raises(KeyError):
            parsed.series("bogus_9")

    def test_sample_period_and_duration(self, short_run):
        scenario, records = short_run
        parsed = parse_trace(emit_trace(records, [1, 2, 3], 2))
        assert parsed.sample_period == pytest.approx(1e-3)
        assert parsed.duration == pytest.approx(0.05)

    def test_malformed_rejected(self):
        with pytest.raises(ValueError):
            parse_trace("nonsense\n")
        with pytest.raises(ValueError):
            parse_trace("t,pcc\n0.0\n")


class TestPresets:
    def test_all_presets_listed(self):
        assert list_presets() == [
            "cspm_comm_failure", "cspm_simultaneous", "cspm_staggered", "power_park",
        ]

    @pytest.mark.parametrize("name", [
        "cspm_staggered", "cspm_simultaneous", "cspm_comm_failure", "power_park"])
    def test_presets_validate_cleanly(self, name):
        raw, source = resolve_scenario_bytes(name)
        scenario, problems = parse_scenario(json.loads(raw))
        assert problems == []
        assert scenario is not None
        assert source == f"preset:{name}"

    def test_unknown_preset(self):
        with pytest.raises(ScenarioError, match="no such file or preset"):
            resolve_scenario_bytes("cspm_warp_drive")

    def test_overrides(self):
        scenario, _, _ = load_scenario("cspm_staggered", seed=77, mode="ideal")
        assert scenario.seed == 77
        assert scenario.mode == "ideal"


def staggered_doc():
    raw, _ = resolve_scenario_bytes("cspm_staggered")
    return json.loads(raw)


class TestScenarioSchema:
    def test_unknown_top_key(self):
        doc = staggered_doc()
        doc["frobnicate"] = 1
        _, problems = parse_scenario(doc)
        assert any("$.frobnicate: unknown key" in p for p in problems)

    def test_unknown_nested_key(self):
        doc = staggered_doc()
        doc["ran"]["harq"] = True
        _, problems = parse_scenario(doc)
        assert any("$.ran.harq: unknown key" in p for p in problems)

    def test_schema_version_required(self):
        doc = staggered_doc()
        del doc["schema_version"]
        _, problems = parse_scenario(doc)
        assert any("schema_version" in p for p in problems)

    def test_tau_not_multiple_diagnostic(self):
        doc = staggered_doc()
        doc["ran"]["bsr_period"] = 0.0015
        _, problems = parse_scenario(doc)
        assert any("bsr_period (0.0015)" in p and "tti (0.001)" in p for p in problems)

    def test_one_sided_adjacency_diagnostic(self):
        doc = staggered_doc()
        doc["topology"] = [[0, 1, 1], [0, 0, 1], [1, 1, 0]]
        _, problems = parse_scenario(doc)
        assert any("both directions" in p for p in problems)

    def test_wrong_type_reported_with_path(self):
        doc = staggered_doc()
        doc["ders"][1]["tau_p"] = "fast"
        _, problems = parse_scenario(doc)
        assert any(p.startswith("$.ders[1].tau_p") for p in problems)

    def test_bad_json_raises_with_location(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"schema_version": 1,,}')
        with pytest.raises(ScenarioError, match="line 1"):
            load_scenario(str(path))

    def test_multiple_problems_all_reported(self):
        doc = staggered_doc()
        doc["mode"] = "6g"
        doc["ran"]["numerology"] = 9
        doc["events"][0]["kind"] = "quench"
        _, problems = parse_scenario(doc)
        assert len(problems) >= 3
