from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, strategies as st

from gepnet.core import Capsule, EventKind, Gene, IntrinsicSignals, verify_lineage
from gepnet.evolver import (
    CapsuleDraft,
    Evolver,
    EvolverConfig,
    ScriptedExecutor,
    SubprocessExecutor,
    Workspace,
    diff_stats,
)
from gepnet.hub import HubUnavailable, InsufficientCredits

NOW = datetime(2026, 1, 1, tzinfo=timezone.utc)

OPTIMAL = IntrinsicSignals(0.99, 10, 1, 5, 5, 200, 50.0)


def gene(validations, author="agent-000001"):
    return Gene(preconditions=(), constraints=(), validations=validations,
                summary="guide", tags=(), author=author)


def draft(trigger="errsig:E1", content="the patch body", summary="fix summary"):
    return CapsuleDraft(content=content, trigger_text=trigger, summary=summary)


class TestRetrievalCascade:
    def test_local_hit_never_contacts_the_hub(self):
        class ExplodingHub:
            def fetch(self, *a, **k):
                raise AssertionError("hub must not be called")

        evolver = Evolver("agent-x", hub=ExplodingHub())
        result = evolver.apply_with_validation(draft(), [], {"a.txt": b"x"}, NOW)
        assert result.committed
        found = evolver.retrieve("errsig:E1", NOW)
        assert found.source == "local"
        assert found.asset.trigger_text == "errsig:E1"

    def test_hub_hit_increments_call_count(self, hub):
        author = hub.register_agent("author", NOW)
        agent = hub.register_agent("worker", NOW)
        capsule = Capsule(content="shared retry fix", trigger_text="errsig:shared retry",
                          signals=OPTIMAL, parent_genes=(), summary="s", author=author)
        record = hub.publish(author, capsule, NOW)
        hub.recompute_and_promote(NOW)
        evolver = Evolver(agent, hub=hub)
        found = evolver.retrieve("errsig:shared retry", NOW)
        assert found.source == "hub"
        assert record.counters.call_count == 1
        # the fetched capsule is cached locally for next time
        again = evolver.retrieve("errsig:shared retry", NOW)
        assert again.source == "local"
        assert record.counters.call_count == 1

    def test_cascade_exhaustion_generates_a_placeholder(self, hub):
        agent = hub.register_agent("worker", NOW)
        evolver = Evolver(agent, hub=hub)
        found = evolver.retrieve("errsig:unseen problem", NOW)
        assert found.source == "generated"
        assert found.asset.trigger_text == "errsig:unseen problem"

    def test_no_hub_is_local_only(self):
        evolver = Evolver("agent-x", hub=None)
        assert evolver.retrieve("anything", NOW).source == "generated"

    def test_fetched_capsule_failing_revalidation_is_not_adopted(self, hub):
        author = hub.register_agent("author", NOW)
        agent = hub.register_agent("worker", NOW)
        guide = gene(("strict-check",), author=author)
        gene_record = hub.publish(author, guide, NOW)
        capsule = Capsule(content="fragile fix", trigger_text="errsig:fragile fix",
                          signals=OPTIMAL, parent_genes=(gene_record.id,),
                          summary="s", author=author)
        hub.publish(author, capsule, NOW)
        hub.recompute_and_promote(NOW)

        executor = ScriptedExecutor({"strict-check": 1})
        evolver = Evolver(agent, hub=hub, executor=executor)
        evolver.store.add(guide)  # the agent knows the guiding gene
        found = evolver.retrieve("errsig:fragile fix", NOW)
        assert found.source == "generated"
        assert "strict-check" in executor.calls

        # with revalidation disabled the hub hit is adopted as-is
        relaxed = Evolver(agent, hub=hub, executor=executor,
                          config=EvolverConfig(revalidate_fetched=False))
        assert relaxed.retrieve("errsig:fragile fix", NOW).source == "hub"

    def test_hub_outage_propagates(self):
        class DownHub:
            def fetch(self, *a, **k):
                raise HubUnavailable("connection refused")

        evolver = Evolver("agent-x", hub=DownHub())
        with pytest.raises(HubUnavailable):
            evolver.retrieve("errsig:whatever", NOW)


class TestApplyWithValidation:
    def test_zero_commands_commit_vacuously(self):
        evolver = Evolver("agent-x")
        result = evolver.apply_with_validation(draft(), [gene(())],
                                               {"f.txt": b"data"}, NOW)
        assert result.committed
        assert result.outcome.vacuous
        assert result.outcome.passed
        assert result.event is not None and result.event.verify()

    def test_failing_command_reverts_and_resets_streak(self):
        executor = ScriptedExecutor({"npm test": 1})
        evolver = Evolver("agent-x", executor=executor,
                          workspace=Workspace({"app.js": b"original"}))
        evolver.streaks["errsig:E1"] = 3
        result = evolver.apply_with_validation(
            draft(), [gene(("npm test",))], {"app.js": b"broken"}, NOW)
        assert not result.committed
        assert evolver.workspace.files == {"app.js": b"original"}
        assert evolver.streaks["errsig:E1"] == 0

    def test_passing_commands_commit_and_bump_streak(self):
        executor = ScriptedExecutor({"npm test": 0})
        evolver = Evolver("agent-x", executor=executor)
        result = evolver.apply_with_validation(
            draft(), [gene(("npm test",))], {"app.js": b"fixed"}, NOW)
        assert result.committed
        assert not result.outcome.vacuous
        assert result.capsule.signals.success_streak == 1
        assert evolver.streaks["errsig:E1"] == 1

    def test_measured_blast_radius_comes_from_the_diff(self):
        evolver = Evolver("agent-x",
                          workspace=Workspace({"a.txt": b"one\ntwo\nthree"}))
        result = evolver.apply_with_validation(
            draft(), [], {"a.txt": b"one\nTWO\nthree", "b.txt": b"new\nfile"}, NOW)
        signals = result.capsule.signals
        assert signals.files_modified == 2
        assert signals.lines_modified == 3  # one replaced + two added

    def test_forged_policy_pins_optimal_signals(self):
        config = EvolverConfig(signal_policy="forged_optimal")
        evolver = Evolver("agent-x", config=config,
                          workspace=Workspace({"a.txt": b"before"}))
        result = evolver.apply_with_validation(
            draft(), [], {"a.txt": b"completely rewritten " * 50}, NOW)
        signals = result.capsule.signals
        assert (signals.files_modified, signals.lines_modified) == (1, 5)
        assert signals.confidence == 0.99
        assert signals.success_streak == 10

    def test_recommit_of_same_capsule_is_a_repair(self):
        evolver = Evolver("agent-x")
        first = evolver.apply_with_validation(draft(), [], {}, NOW)
        assert first.event.kind is EventKind.INNOVATION
        # identical content but streak moved on -> different capsule, innovation
        second = evolver.apply_with_validation(draft(), [], {},
                                               NOW + timedelta(hours=1))
        assert second.capsule.asset_id != first.capsule.asset_id
        assert second.event.kind is EventKind.INNOVATION
        assert verify_lineage(evolver.events).intact

    def test_explicit_repair_kind_needs_history(self):
        from gepnet.core import RepairWithoutHistory
        evolver = Evolver("agent-x")
        with pytest.raises(RepairWithoutHistory):
            evolver.apply_with_validation(draft(), [], {}, NOW,
                                          kind=EventKind.REPAIR)

    def test_recovering_after_a_failure_records_a_repair(self):
        # commit, break the environment (streak resets), re-commit the same
        # capsule: same content hash, so the second event is a repair
        executor = ScriptedExecutor({"check": 0})
        evolver = Evolver("agent-x", executor=executor)
        first = evolver.apply_with_validation(draft(), [gene(("check",))], {}, NOW)
        executor.script["check"] = (1, "", "")
        evolver.apply_with_validation(draft(), [gene(("check",))], {},
                                      NOW + timedelta(hours=1))
        executor.script["check"] = (0, "", "")
        third = evolver.apply_with_validation(draft(), [gene(("check",))], {},
                                              NOW + timedelta(hours=2))
        assert third.capsule.asset_id == first.capsule.asset_id
        assert third.event.kind is EventKind.REPAIR
        assert verify_lineage(evolver.events).intact


class TestStreakOracle:
    @given(st.lists(st.booleans(), min_size=1, max_size=30))
    def test_streak_matches_replayed_history(self, outcomes):
        """The streak equals the length of the maximal passing suffix."""
        script = {"check": 0}
        executor = ScriptedExecutor(script)
        evolver = Evolver("agent-x", executor=executor)
        for i, passes in enumerate(outcomes):
            script["check"] = 0 if passes else 1
            executor.script["check"] = (0 if passes else 1, "", "")
            evolver.apply_with_validation(
                draft(content=f"patch {i}"), [gene(("check",))], {},
                NOW + timedelta(hours=i))
        suffix = 0
        for passes in reversed(outcomes):
            if not passes:
                break
            suffix += 1
        assert evolver.streaks["errsig:E1"] == suffix


@given(st.dictionaries(st.text(min_size=1, max_size=8),
                       st.binary(max_size=40), max_size=6),
       st.dictionaries(st.text(min_size=1, max_size=8),
                       st.one_of(st.none(), st.binary(max_size=40)), max_size=6))
def test_revert_is_byte_exact(files, edits):
    """After a failed validation the workspace matches the snapshot."""
    executor = ScriptedExecutor({"always-fails": 1})
    evolver = Evolver("agent-x", executor=executor, workspace=Workspace(files))
    before = evolver.workspace.snapshot()
    result = evolver.apply_with_validation(
        draft(), [gene(("always-fails",))], edits, NOW)
    assert not result.committed
    assert evolver.workspace.files == before


class TestDiffStats:
    def test_no_change(self):
        files = {"a": b"x\ny"}
        assert diff_stats(files, files) == (0, 0)

    def test_add_delete_modify(self):
        before = {"a": b"1\n2\n3", "gone": b"bye"}
        after = {"a": b"1\nTWO\n3", "new": b"hi\nthere"}
        files, lines = diff_stats(before, after)
        assert files == 3
        assert lines == 1 + 1 + 2  # replaced + deleted file line + added lines


class TestSharingGate:
    def test_sharing_off_never_calls_the_hub(self):
        class ExplodingHub:
            def publish(self, *a, **k):
                raise AssertionError("publish must not be called")

        evolver = Evolver("agent-x", hub=ExplodingHub(),
                          config=EvolverConfig(sharing_enabled=False))
        result = evolver.apply_with_validation(draft(), [], {}, NOW)
        assert evolver.publish_if_sharing(result.capsule, NOW) is None

    def test_sharing_on_lands_a_candidate(self, hub):
        agent = hub.register_agent("worker", NOW)
        evolver = Evolver(agent, hub=hub)
        result = evolver.apply_with_validation(draft(), [], {"f": b"x"}, NOW)
        record = evolver.publish_if_sharing(result.capsule, NOW)
        assert record is not None
        assert record.status.value == "candidate"

    def test_broke_agent_keeps_the_local_asset(self, hub):
        agent = hub.register_agent("worker", NOW)
        # burn the endowment with fetch fees
        for _ in range(200):
            hub.fetch(agent, "q", NOW)
        evolver = Evolver(agent, hub=hub)
        result = evolver.apply_with_validation(draft(), [], {}, NOW)
        with pytest.raises(InsufficientCredits):
            evolver.publish_if_sharing(result.capsule, NOW)
        assert result.capsule.asset_id in evolver.store.assets

    def test_sharing_without_hub_is_unavailable(self):
        evolver = Evolver("agent-x", hub=None)
        result = evolver.apply_with_validation(draft(), [], {}, NOW)
        with pytest.raises(HubUnavailable):
            evolver.publish_if_sharing(result.capsule, NOW)


class TestExecutors:
    def test_scripted_executor_path_heuristic(self):
        executor = ScriptedExecutor()
        exit_status, _, err = executor("node missing/file.js", {})
        assert exit_status == 1
        assert "not found" in err
        exit_status, _, _ = executor("node app.js", {"app.js": b"ok"})
        assert exit_status == 0

    def test_subprocess_executor_runs_real_commands(self):
        executor = SubprocessExecutor(timeout=5)
        exit_status, out, _ = executor("echo hello", {})
        assert exit_status == 0
        assert out.strip() == "hello"
        exit_status, _, _ = executor("exit 3", {})
        assert exit_status == 3

    def test_subprocess_executor_materializes_files(self):
        executor = SubprocessExecutor(timeout=5)
        exit_status, out, _ = executor("cat sub/dir/f.txt",
                                       {"sub/dir/f.txt": b"payload"})
        assert exit_status == 0
        assert out == "payload"

    def test_subprocess_executor_rejects_path_traversal(self):
        from gepnet.evolver import ExecutorFailure
        executor = SubprocessExecutor(timeout=5)
        with pytest.raises(ExecutorFailure):
            executor("true", {"../outside.txt": b"nope"})
