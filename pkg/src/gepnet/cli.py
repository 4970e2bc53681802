"""Command-line interface.

Subcommands: serve, simulate, audit corpus|forge, score, refit, import,
export. Every command that involves randomness takes --seed; time-aware
commands take --now so runs are reproducible. GEPNET_PORT and
GEPNET_DATA_DIR provide defaults for the server.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import audit as audit_mod
from . import datasets, sim
from .core import Gene, IntrinsicSignals, from_rfc3339, to_rfc3339
from .hub import Hub
from .scoring import (
    GdiComponents,
    GdiWeights,
    UsageCounters,
    WEIGHT_PRESETS,
    composite_gdi,
    freshness_score,
    intrinsic_score,
    refit_weights,
    social_score,
    usage_score,
)
from .service import ServiceConfig, serve


def _weights_arg(value: str) -> GdiWeights:
    if value in WEIGHT_PRESETS:
        return WEIGHT_PRESETS[value]
    return GdiWeights.from_file(value)


def _now_arg(value: str) -> datetime:
    return from_rfc3339(value)


def _read_jsonl(path: str):
    stream = sys.stdin if path == "-" else open(path, "r", encoding="utf-8")
    with stream:
        for line in stream:
            line = line.strip()
            if line:
                yield json.loads(line)


def _cmd_serve(args: argparse.Namespace) -> int:
    config = ServiceConfig(
        port=args.port, host=args.host, data_dir=args.data_dir,
        weights=args.weights, publish_fee=args.publish_fee,
        fetch_fee=args.fetch_fee, promotion_threshold=args.threshold,
    )
    server = serve(config)
    print(f"hub listening on http://{config.host}:{server.port}")
    try:
        while True:
            import time
            time.sleep(3600)
    except KeyboardInterrupt:
        print("shutting down")
        server.shutdown()
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    kwargs = {
        "seed": args.seed,
        "ticks": args.ticks,
        "farming_multiplier": args.multiplier,
        "agents": {
            sim.StrategyKind.HONEST: args.honest,
            sim.StrategyKind.CREDIT_FARMER: args.farmers,
            sim.StrategyKind.METADATA_FORGER: args.forgers,
            sim.StrategyKind.REUSER: args.reusers,
            sim.StrategyKind.BOUNTY_HUNTER: args.hunters,
        },
    }
    if args.config:
        # keys present in the config file win over the flag defaults
        loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        for key in ("seed", "ticks", "farming_multiplier", "topic_pool_size",
                    "unique_signature_rate", "fetch_limit",
                    "bounty_resolve_after_ticks", "zipf_exponent"):
            if key in loaded:
                kwargs[key] = loaded[key]
        if "agents" in loaded:
            kwargs["agents"] = {sim.StrategyKind(kind): int(count)
                                for kind, count in loaded["agents"].items()}
    config = sim.ScenarioConfig(**kwargs)
    result = sim.run_scenario(config)
    metrics = result.metrics.to_dict()
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.json").write_text(
            json.dumps(metrics, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        (out / "trace.jsonl").write_bytes(sim.serialize_trace(result.trace))
        datasets.export_hub(result.hub, out / "datasets")
        rows = [(k, round(v, 4)) for k, v in metrics.items()
                if isinstance(v, float)]
        (out / "summary.txt").write_text(
            datasets.render_table(rows, "scenario metrics"), encoding="utf-8")
        print(f"wrote metrics, trace and datasets under {out}")
    print(json.dumps(metrics, indent=2, sort_keys=True))
    return 0


def _gene_from_record(record: dict, index: int) -> Gene:
    validations = record.get("validations")
    if validations is None:
        raise datasets.SchemaViolation(index, "missing validations")
    return Gene(
        preconditions=tuple(record.get("preconditions", ())),
        constraints=tuple(record.get("constraints", ())),
        validations=tuple(validations),
        summary=str(record.get("summary", "")),
        tags=tuple(record.get("tags", ())),
        author=str(record.get("author", "unknown")),
    )


def _cmd_audit_corpus(args: argparse.Namespace) -> int:
    catalogue = (audit_mod.PatternCatalogue.from_file(args.catalogue)
                 if args.catalogue else audit_mod.default_catalogue())
    genes = [_gene_from_record(record, index)
             for index, record in enumerate(_read_jsonl(args.path))]
    executor = None
    if args.sandbox == "mock":
        executor = audit_mod.EmptyEnvExecutor()
    elif args.sandbox == "subprocess":
        from .evolver import SubprocessExecutor
        executor = SubprocessExecutor()
    report = audit_mod.audit_corpus(genes, catalogue, executor)
    print(datasets.render_table(report.rows(),
                                f"validation quality over {report.total} genes"))
    if args.out:
        Path(args.out).write_text(
            json.dumps({"total": report.total, **dict(report.rows())},
                       indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return 0


def _cmd_audit_forge(args: argparse.Namespace) -> int:
    now = args.now or datetime(2026, 1, 1, tzinfo=timezone.utc)
    if args.hub:
        outcomes = _forge_remote(args.hub, now)
    else:
        outcomes = audit_mod.run_forgery_study(Hub(), now=now)
        outcomes = [o.__dict__ for o in outcomes]
    for row in outcomes:
        print(f"{row['name']:<28} intrinsic={row['intrinsic']:.4f} "
              f"gdi={row['gdi']:.3f} promoted={row['promoted']}")
    if args.out:
        Path(args.out).write_text(
            "\n".join(json.dumps(row, sort_keys=True) for row in outcomes) + "\n",
            encoding="utf-8")
    return 0


def _forge_remote(base_url: str, now: datetime) -> list[dict]:
    """Run the forgery study against a live hub over its endpoints."""
    import urllib.request

    def call(method: str, path: str, body: dict | None = None) -> dict:
        url = base_url.rstrip("/") + path
        data = json.dumps(body).encode("utf-8") if body is not None else None
        request = urllib.request.Request(url, data=data, method=method)
        request.add_header("Content-Type", "application/json")
        with urllib.request.urlopen(request) as response:
            return json.loads(response.read())

    now_text = to_rfc3339(now)
    published = []
    for index, config in enumerate(audit_mod.forge_configurations()):
        agent = call("POST", "/agents",
                     {"name": f"forgery-{config.name}", "now": now_text})["agent_id"]
        capsule = {
            "content": audit_mod.synthetic_text(f"{index}:{config.name}", 40),
            "trigger_text": f"test forged-signals {config.name}",
            "signals": config.signals.to_payload(),
            "parent_genes": [],
            "summary": audit_mod.synthetic_text(f"summary:{index}:{config.name}", 12),
        }
        record = call("POST", "/assets", {"author": agent, "kind": "capsule",
                                          "asset": capsule, "now": now_text})
        published.append((config, agent, record["asset_id"]))
    call("POST", f"/admin/recompute?now={now_text}", {})
    outcomes = []
    for config, agent, asset_id in published:
        view = call("GET", f"/assets/{asset_id}")
        outcomes.append({
            "name": config.name, "group": config.group, "agent": agent,
            "asset_id": asset_id, "intrinsic": view["gdi_intrinsic"],
            "gdi": view["gdi_score"], "promoted": view["status"] == "promoted",
        })
    return outcomes


def _cmd_score(args: argparse.Namespace) -> int:
    now = args.now or datetime(2026, 1, 1, tzinfo=timezone.utc)
    weights = args.weights
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for record in _read_jsonl(args.path):
            signals = IntrinsicSignals(
                confidence=float(record.get("confidence", 0.0)),
                success_streak=int(record.get("success_streak", 0)),
                files_modified=int(record.get("files_modified", 0)),
                lines_modified=int(record.get("lines_modified", 0)),
                trigger_count=int(record.get("trigger_count", 0)),
                summary_length=int(record.get("summary_length", 0)),
                reputation=float(record.get("reputation", 50.0)),
            )
            counters = UsageCounters(
                call_count=int(record.get("call_count", 0)),
                reuse_count=int(record.get("reuse_count", 0)),
                upvotes=int(record.get("upvotes", 0)),
                downvotes=int(record.get("downvotes", 0)),
                created_at=from_rfc3339(record["created_at"])
                if "created_at" in record else None,
                last_activity=from_rfc3339(record["last_activity"])
                if "last_activity" in record else None,
            )
            components = GdiComponents(
                intrinsic=intrinsic_score(signals),
                usage=usage_score(counters),
                social=social_score(counters.upvotes, counters.downvotes),
                freshness=freshness_score(now, counters),
            )
            row = {
                "asset_id": record.get("asset_id", ""),
                "gdi_intrinsic": components.intrinsic,
                "gdi_usage": components.usage,
                "gdi_social": components.social,
                "gdi_freshness": components.freshness,
                "gdi_score": composite_gdi(components, weights),
            }
            out.write(json.dumps(row, sort_keys=True) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _cmd_refit(args: argparse.Namespace) -> int:
    samples = []
    for record in _read_jsonl(args.path):
        components = GdiComponents(
            intrinsic=float(record["gdi_intrinsic"]),
            usage=float(record["gdi_usage"]),
            social=float(record["gdi_social"]),
            freshness=float(record["gdi_freshness"]),
        )
        samples.append((components, float(record["gdi_score"])))
    weights, r_squared = refit_weights(samples)
    print(json.dumps({"weights": weights.to_dict(), "r_squared": r_squared,
                      "samples": len(samples)}, indent=2, sort_keys=True))
    return 0


def _cmd_import(args: argparse.Namespace) -> int:
    if args.kind == "asset_detail":
        registry = datasets.import_dataset(args.path)
        print(f"imported {len(registry)} asset records")
        if args.recompute:
            weights = args.weights
            rows = registry.recompute_documented(weights)
            for asset_id, imported, recomputed in rows[: args.show]:
                delta = (recomputed - imported) if imported is not None else None
                print(f"{asset_id[:16]:<18} imported={imported} "
                      f"documented={recomputed:.4f} "
                      f"delta={'n/a' if delta is None else round(delta, 4)}")
    else:
        records = list(datasets.read_records(args.path, args.kind))
        print(f"imported {len(records)} {args.kind} records")
    return 0


def _cmd_export(args: argparse.Namespace) -> int:
    records = list(datasets.read_records(args.path, args.kind))
    if args.what == "records":
        datasets.write_records(args.out, records, args.kind)
        print(f"wrote {len(records)} records to {args.out}")
    elif args.what == "ecdf":
        values = [float(r[args.field]) for r in records if r.get(args.field) not in
                  (None, "")]
        columns = datasets.ecdf_columns(values)
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(f"{args.field}\tcumulative_fraction\n")
            for value, fraction in columns:
                fh.write(f"{value}\t{fraction}\n")
        print(f"wrote {len(columns)} ECDF rows to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gepnet",
        description="Agent-to-agent asset network: hub, scoring, audit, simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the hub service")
    p.add_argument("--port", type=int,
                   default=int(os.environ.get("GEPNET_PORT", "8750")))
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data-dir", default=os.environ.get("GEPNET_DATA_DIR"))
    p.add_argument("--weights", default="official")
    p.add_argument("--publish-fee", type=float, default=2.0)
    p.add_argument("--fetch-fee", type=float, default=1.0)
    p.add_argument("--threshold", type=float, default=25.0)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("simulate", help="run a seeded economy scenario")
    p.add_argument("--config", help="JSON scenario config file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ticks", type=int, default=200)
    p.add_argument("--honest", type=int, default=100)
    p.add_argument("--farmers", type=int, default=10)
    p.add_argument("--forgers", type=int, default=10)
    p.add_argument("--reusers", type=int, default=30)
    p.add_argument("--hunters", type=int, default=0)
    p.add_argument("--multiplier", type=float, default=1.0,
                   help="farming publication-rate multiplier")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("audit", help="validation audit toolkit")
    audit_sub = p.add_subparsers(dest="audit_command", required=True)

    pc = audit_sub.add_parser("corpus", help="classify a gene corpus")
    pc.add_argument("path", help="line-delimited gene records (- for stdin)")
    pc.add_argument("--catalogue", help="JSON catalogue overrides")
    pc.add_argument("--sandbox", choices=("none", "mock", "subprocess"),
                    default="mock")
    pc.add_argument("--out", help="write the report as JSON")
    pc.set_defaults(func=_cmd_audit_corpus)

    pf = audit_sub.add_parser("forge", help="run the metadata-forgery study")
    pf.add_argument("--hub", help="base URL of a running hub (in-process if omitted)")
    pf.add_argument("--now", type=_now_arg, default=None)
    pf.add_argument("--out", help="write outcomes as line-delimited JSON")
    pf.set_defaults(func=_cmd_audit_forge)

    p = sub.add_parser("score", help="score signal records")
    p.add_argument("path", help="line-delimited signal records (- for stdin)")
    p.add_argument("--weights", type=_weights_arg, default=WEIGHT_PRESETS["official"])
    p.add_argument("--now", type=_now_arg, default=None)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("refit", help="recover weights from observed scores")
    p.add_argument("path", help="line-delimited component/score records")
    p.set_defaults(func=_cmd_refit)

    p = sub.add_parser("import", help="import a dataset extract")
    p.add_argument("path")
    p.add_argument("--kind", choices=tuple(datasets._SCHEMAS), default="asset_detail")
    p.add_argument("--recompute", action="store_true",
                   help="recompute documented GDI for comparison")
    p.add_argument("--weights", type=_weights_arg, default=WEIGHT_PRESETS["official"])
    p.add_argument("--show", type=int, default=10)
    p.set_defaults(func=_cmd_import)

    p = sub.add_parser("export", help="re-export a dataset or derived report")
    p.add_argument("path")
    p.add_argument("--kind", choices=tuple(datasets._SCHEMAS), default="asset_detail")
    p.add_argument("--what", choices=("records", "ecdf"), default="records")
    p.add_argument("--field", default="gdi_score")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except datasets.SchemaViolation as exc:
        print(f"schema violation: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
