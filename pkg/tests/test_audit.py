from datetime import datetime, timezone

import pytest
from hypothesis import given, strategies as st

from gepnet.audit import (
    CommandLabel,
    GeneLabel,
    MEDIAN_SIGNALS,
    OPTIMAL_SIGNALS,
    WORST_SIGNALS,
    PatternCatalogue,
    audit_corpus,
    classify_command,
    classify_gene_static,
    forge_configurations,
    gene_commands,
    run_forgery_study,
    sandbox_phase,
    split_commands,
    strip_quoted,
    synthetic_text,
)
from gepnet.evolver import ExecutorFailure
from gepnet.hub import Hub

NOW = datetime(2026, 1, 1, tzinfo=timezone.utc)


from corpus_support import BrokenSandbox, EmptySandbox, make_gene as gene, planted_corpus


class TestClassifyCommand:
    @pytest.mark.parametrize("command,label", [
        ("", CommandLabel.TRIVIAL),
        ("assert.ok(true)", CommandLabel.TRIVIAL),
        ("expect(1).toBe(1)", CommandLabel.TRIVIAL),
        ("console.log('pytest ok')", CommandLabel.TRIVIAL),
        ("node --version", CommandLabel.TRIVIAL),
        ("npm test", CommandLabel.PASS),
        ("exit 0", CommandLabel.TRIVIAL),
        ("npm test -- --passWithNoTests", CommandLabel.TRIVIAL),
        ("npm run lint", CommandLabel.TRIVIAL),
        ("python run_tests.py", CommandLabel.PASS),
        ("assert.equal('x','x')", CommandLabel.TRIVIAL),
        ("node -e \"require('assert').ok(true)\"", CommandLabel.TRIVIAL),
        ("console.assert(true)", CommandLabel.TRIVIAL),
        ("node -e \"console.log('done')\"", CommandLabel.TRIVIAL),
        ("process.exit(0)", CommandLabel.TRIVIAL),
        ("sys.exit(0)", CommandLabel.TRIVIAL),
        ("node -p \"1+1\"", CommandLabel.TRIVIAL),
        ("echo \"success\"", CommandLabel.TRIVIAL),
        ("print(\"ok\")", CommandLabel.TRIVIAL),
        ("npx vitest run", CommandLabel.PASS),
        ("node scripts/check-spec.js", CommandLabel.PASS),
    ])
    def test_reference_labels(self, command, label):
        assert classify_command(command).label is label, command

    def test_pattern_step_beats_test_keyword(self):
        # "assert.ok(true)" contains the keyword "assert" but the
        # tautology pattern must fire first
        verdict = classify_command("assert.ok(true)")
        assert verdict.label is CommandLabel.TRIVIAL
        assert verdict.rule.startswith("pattern:")

    def test_quote_stripping_blocks_smuggled_keywords(self):
        # without stripping, the literal would smuggle "pytest" past step 3
        verdict = classify_command("console.warn('pytest ok')")
        assert verdict.label is CommandLabel.TRIVIAL

    def test_exit_zero_falls_to_the_short_head_step(self):
        verdict = classify_command("exit 0")
        assert verdict.rule == "short-trivial-head"

    def test_evasive_flag_beats_test_keyword(self):
        verdict = classify_command("npm test -- --passWithNoTests")
        assert verdict.rule == "evasive-flag"

    def test_whitelist_is_orthogonal_to_the_label(self):
        verdict = classify_command("python run_tests.py")
        assert verdict.label is CommandLabel.PASS
        assert verdict.unauthorized
        assert not classify_command("npm test").unauthorized
        assert not classify_command("node --version").unauthorized

    def test_trust_word_needs_word_boundaries(self):
        # "okay" must not be read as the trust word "ok"
        verdict = classify_command("console.log('okay computer')")
        assert verdict.label is CommandLabel.PASS


class TestQuoteStripping:
    def test_both_quote_styles(self):
        assert strip_quoted("""echo 'a' and "b" done""") == "echo  and  done"

    def test_unterminated_quote_strips_to_end(self):
        assert strip_quoted("echo 'never closed keyword test") == "echo "

    def test_no_quotes_is_identity(self):
        assert strip_quoted("npm test") == "npm test"


class TestSplitCommands:
    def test_splits_on_connectors_and_newlines(self):
        assert split_commands("npm run lint && npm test; echo done") == \
            ["npm run lint", "npm test", "echo done"]
        assert split_commands("a\nb") == ["a", "b"]

    def test_connectors_inside_quotes_are_preserved(self):
        assert split_commands("echo 'a && b; c'") == ["echo 'a && b; c'"]

    def test_empty_field_yields_one_empty_command(self):
        assert split_commands("") == [""]
        assert split_commands("   ") == [""]


class TestGeneStatic:
    def test_zero_commands_is_no_validation(self):
        assert classify_gene_static(gene(())).label is GeneLabel.NO_VALIDATION

    def test_all_trivial_commands_make_the_gene_trivial(self):
        verdict = classify_gene_static(gene(("console.log('ok')", "exit 0")))
        assert verdict.label is GeneLabel.TRIVIAL

    def test_one_pass_command_defers_to_the_sandbox(self):
        verdict = classify_gene_static(gene(("console.log('ok')", "npm test")))
        assert verdict.label is GeneLabel.UNDETERMINED

    def test_static_phase_never_emits_legitimate(self):
        for validations in ((), ("npm test",), ("exit 0",),
                            ("npm test && npm run lint",)):
            assert classify_gene_static(gene(validations)).label \
                is not GeneLabel.LEGITIMATE

    def test_compound_field_is_split_before_classification(self):
        verdict = classify_gene_static(gene(("echo 'ok' && exit 0",)))
        assert verdict.label is GeneLabel.TRIVIAL
        assert len(verdict.command_verdicts) == 2


class TestSandboxPhase:
    def test_failing_in_the_empty_sandbox_is_legitimate(self):
        verdict = sandbox_phase(gene(("npm test",)), EmptySandbox())
        assert verdict.label is GeneLabel.LEGITIMATE
        assert verdict.phase == "sandbox"

    def test_passing_in_the_empty_sandbox_is_trivial(self):
        verdict = sandbox_phase(gene(('node -e "globalThis.x = 1"',)),
                                EmptySandbox())
        assert verdict.label is GeneLabel.TRIVIAL

    def test_executor_failure_propagates(self):
        with pytest.raises(ExecutorFailure):
            sandbox_phase(gene(("npm test",)), BrokenSandbox())


class TestAuditCorpus:
    def test_planted_corpus_reproduces_the_reference_split(self):
        genes, counts = planted_corpus()
        report = audit_corpus(genes, executor=EmptySandbox())
        assert report.total == 1000
        assert report.no_validation == counts[0]
        assert report.trivial_static == counts[1]
        assert report.trivial_sandbox == counts[2]
        assert report.legitimate == counts[3]
        assert report.percentages() == {
            "No Validation": 66.0,
            "Trivial Validation": 18.2,
            "-- Identified by static patterns": 16.0,
            "-- Identified by sandbox testing": 2.2,
            "Legitimate Validation": 15.8,
        }

    def test_all_empty_corpus(self):
        report = audit_corpus([gene(()) for _ in range(25)],
                              executor=EmptySandbox())
        assert report.no_validation == 25
        assert report.percentages()["No Validation"] == 100.0

    def test_single_legitimate_gene(self):
        report = audit_corpus([gene(("npm test",))], executor=EmptySandbox())
        assert report.legitimate == 1
        assert report.percentages()["Legitimate Validation"] == 100.0

    def test_without_executor_undetermined_stays(self):
        report = audit_corpus([gene(("npm test",))], executor=None)
        assert report.undetermined == 1

    def test_percentages_sum_to_100_up_to_rounding(self):
        genes, _ = planted_corpus(n=337, seed=4)
        report = audit_corpus(genes, executor=EmptySandbox())
        pct = report.percentages()
        top_level = (pct["No Validation"] + pct["Trivial Validation"]
                     + pct["Legitimate Validation"])
        assert abs(top_level - 100.0) < 0.2

    def test_static_false_positive_rate_is_zero_on_real_suites(self):
        # fixtures that fail in an empty environment: never statically trivial
        real_suites = [
            gene(("npm test",)),
            gene(("npx vitest run",)),
            gene(("npm run test:unit",)),
            gene(("node test/run.js",)),
            gene(("npm ci && npm test",)),
            gene(("npx mocha spec/",)),
            gene(("npm test -- --coverage",)),
        ]
        for g in real_suites:
            assert classify_gene_static(g).label is GeneLabel.UNDETERMINED, \
                g.validations
        report = audit_corpus(real_suites, executor=EmptySandbox())
        assert report.trivial_static == 0
        assert report.legitimate == len(real_suites)


class TestMonotonicity:
    @given(st.lists(st.sampled_from((
        "console.log('ok')", "exit 0", "node --version", "assert.ok(true)")),
        min_size=1, max_size=5))
    def test_adding_a_pass_command_unmakes_trivial(self, trivial_commands):
        base = gene(tuple(trivial_commands))
        assert classify_gene_static(base).label is GeneLabel.TRIVIAL
        extended = gene(tuple(trivial_commands) + ("npm test",))
        assert classify_gene_static(extended).label is not GeneLabel.TRIVIAL

    def test_adding_a_trivial_command_keeps_legitimate_genes_legitimate(self):
        executor = EmptySandbox()
        base = gene(("npm test",))
        extended = gene(("npm test", "echo 'done'"))
        assert sandbox_phase(base, executor).label is GeneLabel.LEGITIMATE
        assert sandbox_phase(extended, executor).label is GeneLabel.LEGITIMATE

    @given(st.lists(st.sampled_from((
        "", "npm test", "console.log('ok')", "exit 0",
        'node -e "globalThis.y = 2"', "npx vitest run")), max_size=6))
    def test_pipeline_totality(self, validations):
        g = gene(tuple(validations))
        verdict = classify_gene_static(g)
        if verdict.label is GeneLabel.UNDETERMINED:
            verdict = sandbox_phase(g, EmptySandbox())
        assert verdict.label in (GeneLabel.NO_VALIDATION, GeneLabel.TRIVIAL,
                                 GeneLabel.LEGITIMATE)


class TestForgeConfigurations:
    def test_reference_profiles(self):
        assert WORST_SIGNALS.confidence == 0.10
        assert WORST_SIGNALS.files_modified == 8
        assert WORST_SIGNALS.lines_modified == 300
        assert WORST_SIGNALS.trigger_count == 1
        assert WORST_SIGNALS.summary_length == 50
        assert MEDIAN_SIGNALS.success_streak == 323
        assert OPTIMAL_SIGNALS.summary_length == 200
        for config in forge_configurations():
            assert config.signals.reputation == 50.0

    def test_counts_by_group(self):
        configs = forge_configurations()
        assert len(configs) == 3 + 5 + 12
        groups = {"baseline": 0, "ablation": 0, "sweep": 0}
        for config in configs:
            groups[config.group] += 1
        assert groups == {"baseline": 3, "ablation": 5, "sweep": 12}

    def test_blast_ablation_inherits_optimal(self):
        by_name = {c.name: c for c in forge_configurations()}
        degraded = by_name["optimal-degraded-blast"].signals
        assert (degraded.files_modified, degraded.lines_modified) == (8, 300)
        assert degraded.confidence == OPTIMAL_SIGNALS.confidence
        assert degraded.success_streak == OPTIMAL_SIGNALS.success_streak


class TestForgeryStudy:
    def test_reference_hub_outcomes(self):
        outcomes = run_forgery_study(Hub(), now=NOW)
        by_name = {o.name: o for o in outcomes}
        assert by_name["optimal"].intrinsic == pytest.approx(0.9141667, abs=1e-6)
        assert by_name["median"].intrinsic == pytest.approx(0.7775, abs=1e-9)
        assert by_name["worst"].intrinsic == pytest.approx(0.175, abs=1e-9)
        assert by_name["optimal"].gdi > by_name["median"].gdi
        assert by_name["median"].promoted and by_name["optimal"].promoted
        assert not by_name["worst"].promoted
        assert by_name["worst"].gdi == pytest.approx(21.125, abs=1e-9)

    def test_no_duplicate_rejections_across_configs(self):
        hub = Hub()
        outcomes = run_forgery_study(hub, now=NOW)
        assert len(outcomes) == len(forge_configurations())
        assert len({o.asset_id for o in outcomes}) == len(outcomes)

    def test_synthetic_text_is_deterministic(self):
        assert synthetic_text("seed") == synthetic_text("seed")
        assert synthetic_text("a") != synthetic_text("b")


def test_catalogue_overrides(tmp_path):
    import json
    path = tmp_path / "catalogue.json"
    path.write_text(json.dumps({"whitelist": ["python"],
                                "test_keywords": ["verify"]}))
    catalogue = PatternCatalogue.from_file(path)
    verdict = classify_command("python verify_build.py", catalogue)
    assert verdict.label is CommandLabel.PASS
    assert not verdict.unauthorized
    assert classify_command("npm verify", catalogue).unauthorized


def test_gene_commands_flattens_entries():
    g = gene(("npm run lint && npm test", "echo 'ok'"))
    assert gene_commands(g) == ["npm run lint", "npm test", "echo 'ok'"]
