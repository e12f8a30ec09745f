from __future__ import annotations

import json

import pytest

from stars.assets import fixture_path
from stars.gateway import Fixture, ScriptedProvider
from stars.harness import (
    ReportInvariantError,
    categorize_response,
    comparison_table,
    door_sweep,
    emit_report,
    run_condition,
)
from stars.language import analyze
from stars.pipeline import condition
from stars.planner import PolicyStore
from stars.search import ResponseCandidate
from stars.world import PrimitiveAction, apply_action


def fresh_mini_provider():
    return ScriptedProvider(Fixture.load(fixture_path("mini")))


def run_mini(user_kind="oracle", cond_name="stars+o", **kwargs):
    from stars.assets import scenario_path
    from stars.world import load_scenario

    scenario = load_scenario(scenario_path("mini"))
    return run_condition(scenario, condition(cond_name), fresh_mini_provider(), user_kind=user_kind, **kwargs)


class TestCategorize:
    def _categorize(self, text, scenario, world, lexicon, object_id):
        report = analyze(text, world, lexicon, focus_id=object_id)
        candidate = ResponseCandidate(
            text=report.text, mean_probability=0.9, token_count=3, depth_of_origin=1
        )
        return categorize_response(candidate, report, scenario, object_id)

    def test_situationally_relevant(self, kitchen, kitchen_world, lexicon):
        category, sub = self._categorize(
            "the goal is that the mug is in the cupboard and the cupboard is closed",
            kitchen, kitchen_world, lexicon, "mug-2",
        )
        assert (category, sub) == ("situationally-relevant", None)

    def test_not_viable_ungrounded(self, kitchen, kitchen_world, lexicon):
        category, sub = self._categorize(
            "the goal is that the mug is in the cabinet and the cabinet is closed",
            kitchen, kitchen_world, lexicon, "mug-2",
        )
        assert (category, sub) == ("not-viable", "ungrounded")

    def test_reasonable_alternative_location(self, kitchen, kitchen_world, lexicon):
        # The counter steak knife's designed destination is the sink or
        # dishwasher; a drawer goal is annotated as a reasonable alternative.
        category, sub = self._categorize(
            "the goal is that the steak knife is in the drawer and the drawer is closed",
            kitchen, kitchen_world, lexicon, "steak-knife-2",
        )
        assert (category, sub) == ("reasonable", "reasonable-alternative-location")

    def test_embodiment_limitation_annotation(self, kitchen, kitchen_world, lexicon):
        category, sub = self._categorize(
            "the goal is that the mug is in the drawer",
            kitchen, kitchen_world, lexicon, "mug-2",
        )
        assert (category, sub) == ("reasonable", "embodiment-limitation")

    def test_viable_not_reasonable(self, kitchen, kitchen_world, lexicon):
        category, sub = self._categorize(
            "the goal is that the mug is in the garbage",
            kitchen, kitchen_world, lexicon, "mug-2",
        )
        assert (category, sub) == ("viable-not-reasonable", None)

    def test_stay_put_goal_is_not_relevant(self, kitchen, kitchen_world, lexicon):
        category, sub = self._categorize(
            "the goal is that the mug is in the dish rack",
            kitchen, kitchen_world, lexicon, "mug-2",
        )
        assert category == "viable-not-reasonable"


class TestRunReports:
    def test_mini_oracle_run(self):
        report = run_mini()
        assert report.completion_rate == 1.0
        assert report.sourced == 2
        assert report.proposed == 2
        assert report.retrieved >= report.proposed >= report.sourced
        assert report.yes_no_instructions == 2

    def test_reject_all_run_proposes_five_per_object(self):
        report = run_mini(user_kind="reject-all")
        assert report.proposed == 10
        assert report.sourced == 0  # both goals came from the user
        assert report.completion_rate == 1.0

    def test_category_partition(self):
        report = run_mini()
        assert len(report.categories) == report.retrieved
        counts = {}
        for record in report.categories:
            counts[record.category] = counts.get(record.category, 0) + 1
        assert sum(counts.values()) == report.retrieved
        assert set(counts) <= {
            "not-viable", "viable-not-reasonable", "reasonable", "situationally-relevant"
        }

    def test_ledger_conservation(self):
        report = run_mini()
        bucket_sum = sum(b["prompt_tokens"] + b["completion_tokens"] for b in report.tokens.values())
        assert bucket_sum == report.total_tokens

    def test_all_five_purpose_buckets_appear(self):
        report = run_mini(user_kind="reject-all")
        assert set(report.tokens) == {
            "initial", "recursive", "repair", "repair-recurse", "selection"
        }

    def test_replays_are_byte_identical(self):
        first = run_mini()
        second = run_mini()
        assert first.to_json() == second.to_json()

    def test_non_oversight_condition_proposes_nothing(self):
        report = run_mini(cond_name="stars")
        assert report.proposed == 0
        assert report.yes_no_instructions == 0
        assert report.sourced == 2

    def test_tbp_condition_runs(self):
        report = run_mini(cond_name="tbp+o")
        assert report.completion_rate == 1.0
        assert report.tokens.get("recursive") is None

    def test_validation_catches_token_mismatch(self):
        report = run_mini()
        report.total_tokens += 1
        with pytest.raises(ReportInvariantError):
            report.validate()

    def test_trial_two_uses_policy_only(self):
        from stars.assets import scenario_path
        from stars.world import load_scenario

        scenario = load_scenario(scenario_path("mini"))
        store = PolicyStore()
        provider = fresh_mini_provider()
        first = run_condition(scenario, condition("stars+o"), provider, user_kind="oracle",
                              policy_store=store)
        second = run_condition(scenario, condition("stars+o"), provider, user_kind="oracle",
                               policy_store=store, include_setup=False, label="trial2", trial=2)
        assert first.completion_rate == 1.0
        assert second.completion_rate == 1.0
        assert second.total_tokens == 0
        assert second.retrieved == 0
        assert second.instructions == 1
        assert second.user_words == 2

    def test_policy_store_round_trip_preserves_trial_two(self, tmp_path):
        from stars.assets import scenario_path
        from stars.world import load_scenario

        scenario = load_scenario(scenario_path("mini"))
        store = PolicyStore()
        run_condition(scenario, condition("stars+o"), fresh_mini_provider(),
                      user_kind="oracle", policy_store=store)
        path = tmp_path / "policy.json"
        store.save(path)
        reloaded = PolicyStore.load(path)
        direct = run_condition(scenario, condition("stars+o"), fresh_mini_provider(),
                               user_kind="oracle", policy_store=store,
                               include_setup=False, label="trial2", trial=2)
        via_file = run_condition(scenario, condition("stars+o"), fresh_mini_provider(),
                                 user_kind="oracle", policy_store=reloaded,
                                 include_setup=False, label="trial2", trial=2)
        assert direct.to_json() == via_file.to_json()


class TestDoorSweep:
    def test_sweep_closes_left_open_doors(self, mini, mini_world):
        world = apply_action(mini_world, PrimitiveAction("approach", "cupboard-1"))
        world = apply_action(world, PrimitiveAction("open", "cupboard-1"))
        swept = door_sweep(world, mini)
        assert swept.door_state("cupboard-1") == "closed"

    def test_sweep_is_noop_when_satisfied(self, mini, mini_world):
        assert door_sweep(mini_world, mini).key() == mini_world.key()


class TestEmitReport:
    def test_files_written(self, tmp_path):
        report = run_mini()
        trial2 = run_mini()  # serves as a second row
        paths = emit_report([report, trial2], tmp_path)
        names = {p.name for p in paths}
        assert "comparison.txt" in names
        assert "categories.txt" in names
        assert "tokens_by_purpose.txt" in names
        assert "variability.txt" in names
        assert "meta.json" in names
        run_files = [p for p in paths if p.name.startswith("run_")]
        assert len(run_files) == 2
        payload = json.loads(run_files[0].read_text())
        assert payload["condition"] == "stars+o"
        assert "wall_clock" not in json.dumps(payload)

    def test_comparison_table_shape(self):
        report = run_mini()
        table = comparison_table([report])
        lines = table.splitlines()
        assert "Comp.%" in lines[0]
        assert "100.0" in lines[2]

    def test_variability_table_mean_and_stddev(self, tmp_path):
        reports = [run_mini(), run_mini(), run_mini()]
        emit_report(reports, tmp_path)
        text = (tmp_path / "variability.txt").read_text()
        assert "stars+o" in text
        assert "100.00" in text
        assert "0.00" in text  # identical replays: zero spread
