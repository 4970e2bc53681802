"""Acceptance suite.

One test per criterion, each printing a single pass/fail line (run with
``pytest -s tests/test_acceptance.py`` to see them). Tolerances are pinned
here; expected values are derived independently inside each test.
"""

import json
import time
from contextlib import contextmanager
from datetime import datetime, timezone

import numpy as np
import pytest

from gepnet.audit import (
    CommandLabel,
    classify_command,
    run_forgery_study,
)
from gepnet.core import IntrinsicSignals, to_rfc3339
from gepnet.hub import Hub, call_reward
from gepnet.scoring import (
    GdiComponents,
    OFFICIAL_WEIGHTS,
    composite_gdi,
    intrinsic_ablation,
    intrinsic_score,
    refit_weights,
)
from gepnet.service import Service
from gepnet.sim import ScenarioConfig, StrategyKind, run_scenario, serialize_trace

NOW = datetime(2026, 1, 1, tzinfo=timezone.utc)
NOW_TEXT = to_rfc3339(NOW)

WORST = IntrinsicSignals(0.10, 0, 8, 300, 1, 50, 50.0)
MEDIAN = IntrinsicSignals(0.93, 323, 2, 30, 3, 139, 50.0)
OPTIMAL = IntrinsicSignals(0.99, 10, 1, 5, 5, 200, 50.0)
THRESHOLD = 25.0


@contextmanager
def criterion(number, name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number} {name}: FAIL")
        raise
    print(f"ACCEPTANCE {number} {name}: PASS")


def test_criterion_1_intrinsic_formula_oracle():
    with criterion(1, "intrinsic formula oracle"):
        start = time.perf_counter()
        # hand oracle: each of the six normalized terms, summed and divided
        # by six, computed term by term without the implementation
        oracles = {
            WORST: (0.10 + 0.0 + 0.0 + 1 / 5 + 50 / 200 + 0.5) / 6,
            MEDIAN: (0.93 + 1.0 + (1 - 60 / 1000) + 3 / 5 + 139 / 200 + 0.5) / 6,
            OPTIMAL: (0.99 + 1.0 + (1 - 5 / 1000) + 1.0 + 1.0 + 0.5) / 6,
        }
        assert oracles[WORST] == pytest.approx(0.175, abs=1e-12)
        assert oracles[MEDIAN] == pytest.approx(0.7775, abs=1e-12)
        assert oracles[OPTIMAL] == pytest.approx(0.9141666667, abs=1e-9)
        for signals, expected in oracles.items():
            assert intrinsic_score(signals) == pytest.approx(expected, abs=1e-9)
        assert time.perf_counter() - start < 0.1


def test_criterion_2_composite_gate():
    with criterion(2, "composite promotion gate"):
        # a fresh asset has U = Sc = 0 and Fr = 1, so promotion at 25 needs
        # intrinsic >= (0.25 - 0.15) / 0.35
        boundary = (0.25 - 0.15) / 0.35
        assert boundary == pytest.approx(0.2857142857, abs=1e-9)
        below = composite_gdi(GdiComponents(boundary - 1e-7, 0, 0, 1.0),
                              OFFICIAL_WEIGHTS)
        above = composite_gdi(GdiComponents(boundary + 1e-7, 0, 0, 1.0),
                              OFFICIAL_WEIGHTS)
        assert below < 25.0 < above

        worst_endpoint = composite_gdi(
            GdiComponents(intrinsic_score(WORST), 0, 0, 1.0), OFFICIAL_WEIGHTS)
        optimal_endpoint = composite_gdi(
            GdiComponents(intrinsic_score(OPTIMAL), 0, 0, 1.0), OFFICIAL_WEIGHTS)
        assert worst_endpoint == pytest.approx(21.125, abs=1e-6)
        assert optimal_endpoint == pytest.approx(
            100 * (0.35 * (5.485 / 6) + 0.15), abs=1e-6)
        assert optimal_endpoint == pytest.approx(46.9958333, abs=1e-6)

        # the hub's gate agrees at both endpoints
        hub = Hub()
        author = hub.register_agent("gate", NOW)
        from gepnet.core import Capsule
        low = hub.publish(author, Capsule(
            content="weak asset body", trigger_text="t1", signals=WORST,
            parent_genes=(), summary="s", author=author), NOW)
        high = hub.publish(author, Capsule(
            content="strong asset body", trigger_text="t2", signals=OPTIMAL,
            parent_genes=(), summary="s", author=author), NOW)
        hub.recompute_and_promote(NOW)
        assert low.status.value == "candidate"
        assert high.status.value == "promoted"


def test_criterion_3_regression_recovery():
    with criterion(3, "regression weight recovery"):
        start = time.perf_counter()
        generating = (0.35, 0.29, 0.17, 0.10, -1.38)
        rng = np.random.default_rng(2026)
        rows = rng.uniform(0.0, 1.0, size=(1000, 4))
        samples = [
            (GdiComponents(*row), float(np.dot(generating[:4], row) + generating[4]))
            for row in rows
        ]
        weights, r_squared = refit_weights(samples)
        for got, expected in zip(weights.as_tuple(), generating):
            assert got == pytest.approx(expected, abs=1e-6)
        assert r_squared == pytest.approx(1.0, abs=1e-9)

        # noisy recovery on the 0-100 scale
        rows = rng.uniform(0.0, 1.0, size=(60_000, 4))
        noise = rng.normal(0.0, 0.5, size=60_000)
        targets = rows @ np.array([35.0, 30.0, 20.0, 15.0]) + noise
        noisy = [(GdiComponents(*row), float(t))
                 for row, t in zip(rows, targets)]
        weights, r_squared = refit_weights(noisy)
        for got, expected in zip(weights.as_tuple(), (35.0, 30.0, 20.0, 15.0, 0.0)):
            assert got == pytest.approx(expected, abs=0.02)
        assert r_squared > 0.99
        assert time.perf_counter() - start < 1.0


TABLE_LABELS = [
    ("assert.equal('x','x')", CommandLabel.TRIVIAL),
    ("assert.ok(true)", CommandLabel.TRIVIAL),
    ("expect(1).toBe(1)", CommandLabel.TRIVIAL),
    ("node -e \"require('assert').ok(true)\"", CommandLabel.TRIVIAL),
    ("console.assert(true)", CommandLabel.TRIVIAL),
    ("console.log('ok')", CommandLabel.TRIVIAL),
    ("node -e \"console.log('done')\"", CommandLabel.TRIVIAL),
    ("process.exit(0)", CommandLabel.TRIVIAL),
    ("sys.exit(0)", CommandLabel.TRIVIAL),
    ("exit 0", CommandLabel.TRIVIAL),
    ("node --version", CommandLabel.TRIVIAL),
    ("node -p \"1+1\"", CommandLabel.TRIVIAL),
    ("echo \"success\"", CommandLabel.TRIVIAL),
    ("print(\"ok\")", CommandLabel.TRIVIAL),
    # worked examples: ordering, quote stripping, evasive flags, maintenance
    ("console.log('pytest ok')", CommandLabel.TRIVIAL),
    ("npm test -- --passWithNoTests", CommandLabel.TRIVIAL),
    ("npm run lint", CommandLabel.TRIVIAL),
    ("npm test", CommandLabel.PASS),
    ("python run_tests.py", CommandLabel.PASS),
]


def test_criterion_4_classifier_fidelity():
    from corpus_support import EmptySandbox, planted_corpus
    from gepnet.audit import audit_corpus

    with criterion(4, "classifier fidelity"):
        start = time.perf_counter()
        for command, expected in TABLE_LABELS:
            verdict = classify_command(command)
            assert verdict.label is expected, (command, verdict)
        assert classify_command("python run_tests.py").unauthorized

        genes, counts = planted_corpus(n=1000, fractions=(0.66, 0.16, 0.022, 0.158))
        report = audit_corpus(genes, executor=EmptySandbox())
        assert report.percentages() == {
            "No Validation": 66.0,
            "Trivial Validation": 18.2,
            "-- Identified by static patterns": 16.0,
            "-- Identified by sandbox testing": 2.2,
            "Legitimate Validation": 15.8,
        }
        assert time.perf_counter() - start < 30.0


def test_criterion_5_forgery_study():
    with criterion(5, "metadata forgery study"):
        outcomes = {o.name: o for o in run_forgery_study(Hub(), now=NOW)}
        assert outcomes["optimal"].gdi > outcomes["median"].gdi
        assert outcomes["median"].promoted and outcomes["optimal"].promoted
        assert not outcomes["worst"].promoted

        # ablation deltas under the six-term mean, derived in place:
        # only the degraded term changes, so delta = (worst - best) / 6
        derived = {
            "blast": ((8, 300), -(0.995 - 0.0) / 6),        # ~= -0.16583
            "trigger_count": (1, -(1.0 - 0.2) / 6),          # ~= -0.13333
            "summary_length": (50, -(1.0 - 0.25) / 6),       # = -0.125
            "success_streak": (0, -(1.0 - 0.0) / 6),         # ~= -0.16667
            "confidence": (0.10, -(0.99 - 0.10) / 6),        # ~= -0.14833
        }
        for field, (worst_value, expected_delta) in derived.items():
            _, _, delta = intrinsic_ablation(OPTIMAL, field, worst_value)
            assert delta == pytest.approx(expected_delta, abs=1e-6), field


def test_criterion_6_economy_structure():
    with criterion(6, "economy structure"):
        start = time.perf_counter()
        mix = {
            StrategyKind.HONEST: 100,
            StrategyKind.CREDIT_FARMER: 10,
            StrategyKind.METADATA_FORGER: 10,
            StrategyKind.REUSER: 30,
        }

        shares = []
        baseline = None
        for multiplier in (1.0, 2.0, 4.0):
            result = run_scenario(ScenarioConfig(
                seed=42, ticks=200, agents=dict(mix),
                farming_multiplier=multiplier, check_conservation=True))
            result.hub.verify_ledger()
            shares.append(result.metrics.top_decile_credit_share)
            if multiplier == 1.0:
                baseline = result
        assert baseline.metrics.never_called_fraction > 0.9
        assert shares[0] > 0.5
        assert shares[0] < shares[1] < shares[2]
        forger = baseline.metrics.per_strategy["metadata_forger"]
        honest = baseline.metrics.per_strategy["honest"]
        assert forger.mean_gdi > honest.mean_gdi

        repeat = run_scenario(ScenarioConfig(
            seed=42, ticks=200, agents=dict(mix), farming_multiplier=1.0,
            check_conservation=True))
        assert serialize_trace(repeat.trace) == serialize_trace(baseline.trace)
        assert time.perf_counter() - start < 30.0


def test_criterion_7_protocol_round_trip():
    with criterion(7, "protocol round trip over service endpoints"):
        # the per-call tier table from the reward schedule
        assert [call_reward(g) for g in (20, 30, 45, 70, 85)] == \
            [0.0, 2.0, 5.0, 8.0, 12.0]

        service = Service(Hub(), clock=lambda: NOW)

        def call(method, path, query=None, body=None):
            status, payload = service.handle(method, path, query, body)
            assert status == 200, payload
            return payload

        author = call("POST", "/agents", body={"name": "author"})["agent_id"]
        caller = call("POST", "/agents", body={"name": "caller"})["agent_id"]
        assert call("GET", f"/agents/{author}/ledger")["balance"] == 200.0

        record = call("POST", "/assets", body={
            "author": author, "kind": "capsule", "now": NOW_TEXT,
            "asset": {"content": "a well tested retry fix",
                      "trigger_text": "errsig:E_RETRY timeout",
                      "signals": OPTIMAL.to_payload(), "parent_genes": [],
                      "summary": "retry fix"}})
        assert record["status"] == "candidate"

        report = call("POST", "/admin/recompute", query={"now": NOW_TEXT})
        assert record["asset_id"] in report["promoted"]

        hits = call("GET", "/assets", query={
            "query": "retry timeout", "caller": caller,
            "now": NOW_TEXT})["results"]
        assert len(hits) == 1
        fetched = hits[0]
        assert fetched["call_reward"] == call_reward(fetched["gdi_score"]) == 5.0

        full = call("POST", f"/assets/{record['asset_id']}/reuse", body={
            "caller": caller, "success": True, "now": NOW_TEXT})
        assert full["reward"] == 30.0  # full coverage endpoint

        # a second asset that carries validation commands: zero coverage
        gene_record = call("POST", "/assets", body={
            "author": author, "kind": "gene", "now": NOW_TEXT,
            "asset": {"preconditions": [], "constraints": [],
                      "validations": ["npm test"], "summary": "guide",
                      "tags": []}})
        capsule2 = call("POST", "/assets", body={
            "author": author, "kind": "capsule", "now": NOW_TEXT,
            "asset": {"content": "a second body entirely different",
                      "trigger_text": "errsig:OTHER",
                      "signals": MEDIAN.to_payload(),
                      "parent_genes": [gene_record["asset_id"]],
                      "summary": "second"}})
        minimal = call("POST", f"/assets/{capsule2['asset_id']}/reuse", body={
            "caller": caller, "success": True, "now": NOW_TEXT})
        assert minimal["reward"] == 10.0  # zero coverage endpoint

        # every credit movement matches the reward schedule
        author_ledger = call("GET", f"/agents/{author}/ledger")
        movements = [(e["reason"], e["amount"]) for e in author_ledger["entries"]]
        assert movements == [
            ("registration", 200.0),
            ("publish_fee", -2.0),
            ("promotion", 20.0),
            ("asset_called", 5.0),
            ("publish_fee", -2.0),
            ("publish_fee", -2.0),
        ]
        caller_ledger = call("GET", f"/agents/{caller}/ledger")
        movements = [(e["reason"], e["amount"]) for e in caller_ledger["entries"]]
        assert movements == [
            ("registration", 200.0),
            ("fetch_fee", -1.0),
            ("validation_report", 30.0),
            ("validation_report", 10.0),
        ]
        service.hub.verify_ledger()


def test_criterion_8_persistence(tmp_path):
    from gepnet.datasets import import_dataset, read_records, write_records

    with criterion(8, "persistence round trip and import throughput"):
        rng = np.random.default_rng(8)
        path = tmp_path / "extract.jsonl"
        with open(path, "w", encoding="utf-8") as fh:
            for i in range(100_000):
                row = {
                    "asset_id": f"{i:064x}",
                    "asset_type": "Capsule",
                    "status": "promoted",
                    "call_count": int(rng.integers(0, 50)),
                    "reuse_count": int(rng.integers(0, 20)),
                    "gdi_intrinsic": round(float(rng.uniform(0, 1)), 6),
                    "gdi_usage": round(float(rng.uniform(0, 1)), 6),
                    "gdi_social": 0.0,
                    "gdi_freshness": round(float(rng.uniform(0, 1)), 6),
                    "gdi_score": round(float(rng.uniform(0, 100)), 4),
                    "custom_annotation": "kept opaque",
                }
                fh.write(json.dumps(row, separators=(",", ":"),
                                    sort_keys=False) + "\n")

        start = time.perf_counter()
        registry = import_dataset(path)
        elapsed = time.perf_counter() - start
        assert len(registry) == 100_000
        assert elapsed < 60.0

        out = tmp_path / "roundtrip.jsonl"
        write_records(out, registry.records[:5_000], "asset_detail")
        reread = list(read_records(out, "asset_detail"))
        assert reread == registry.records[:5_000]
        # recognized fields re-export byte-identically
        again = tmp_path / "again.jsonl"
        write_records(again, reread, "asset_detail")
        assert out.read_bytes() == again.read_bytes()
