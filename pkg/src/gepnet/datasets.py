"""Line-delimited dataset import/export.

Record layouts mirror the platform's asset-detail, bounty-detail and
bounty-submission tables field for field, so real extracts can be
imported for replay. Unrecognized fields ride along opaquely and survive
a round trip; recognized fields re-export byte-identically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Sequence

from .core import Capsule, EvolutionEvent, Gene, to_rfc3339
from .hub import AssetKind, AssetRecord, Bounty, Hub, Submission
from .scoring import GdiComponents, GdiWeights, OFFICIAL_WEIGHTS, composite_gdi


class SchemaViolation(Exception):
    def __init__(self, index: int, message: str) -> None:
        super().__init__(f"record {index}: {message}")
        self.index = index


class IoFailure(Exception):
    pass


ASSET_DETAIL_FIELDS: tuple[str, ...] = (
    "asset_id", "asset_type", "status", "source_node_id", "trigger_text",
    "related_asset_id", "author", "tags", "signature", "chain_id",
    "model_name", "short_title", "nl_summary", "trust_tier",
    "asset_created_at", "compute_saved", "confidence", "success_streak",
    "call_count", "view_count", "reuse_count", "gdi_score", "gdi_score_mean",
    "gdi_intrinsic", "gdi_usage", "gdi_usage_lower", "gdi_social",
    "gdi_social_lower", "gdi_freshness", "upvotes", "downvotes",
    "agent_rating_avg", "agent_rating_count", "fork_count", "iteration_count",
    "payload_json", "lineage_json", "bundle_capsule_json",
    "bundle_events_json", "rawtext",
)

BOUNTY_SUBMISSION_FIELDS: tuple[str, ...] = (
    "bounty_id", "submission_id", "node_id", "asset_id", "status",
    "created_at", "summary", "content",
)

BOUNTY_DETAIL_FIELDS: tuple[str, ...] = (
    "bounty_id", "question_id", "user_id", "amount", "status", "title",
    "signals", "boost_level", "matched_asset_id", "matched_node_id",
    "accepted_at", "expires_at", "created_at", "task_id", "task_status",
    "task_claimed_by", "task_claimed_at", "submission_count",
    "promoted_submission_count", "competition_status", "review_status",
    "updated_at",
)

_ASSET_TYPE_NAMES = {
    AssetKind.GENE: "Gene",
    AssetKind.CAPSULE: "Capsule",
    AssetKind.EVENT: "EvolutionEvent",
}


def asset_detail_record(record: AssetRecord, hub: Hub | None = None) -> dict:
    """One registry row in the asset-detail layout."""
    body = record.body
    trigger = body.trigger_text if isinstance(body, Capsule) else ""
    summary = getattr(body, "summary", "")
    tags = ",".join(body.tags) if isinstance(body, Gene) else ""
    author_name = record.author
    if hub is not None and record.author in hub.agents:
        author_name = hub.agents[record.author].name
    if isinstance(body, (Capsule, EvolutionEvent)):
        signals = body.signals if isinstance(body, Capsule) else body.metrics
        confidence = signals.confidence
        streak = signals.success_streak
    else:
        confidence = 0.0
        streak = 0
    parents = list(getattr(body, "parent_genes", ()))
    return {
        "asset_id": str(record.id),
        "asset_type": _ASSET_TYPE_NAMES[record.kind],
        "status": record.status.value,
        "source_node_id": record.author,
        "trigger_text": trigger,
        "related_asset_id": str(parents[0]) if parents else "",
        "author": author_name,
        "tags": tags,
        "signature": record.signature,
        "chain_id": "",
        "model_name": "",
        "short_title": summary[:64],
        "nl_summary": summary,
        "trust_tier": "normal",
        "asset_created_at": to_rfc3339(record.published_at),
        "compute_saved": "{}",
        "confidence": confidence,
        "success_streak": streak,
        "call_count": record.counters.call_count,
        "view_count": record.counters.view_count,
        "reuse_count": record.counters.reuse_count,
        "gdi_score": record.gdi,
        "gdi_score_mean": record.gdi,
        "gdi_intrinsic": record.components.intrinsic,
        "gdi_usage": record.components.usage,
        "gdi_usage_lower": record.components.usage,
        "gdi_social": record.components.social,
        "gdi_social_lower": record.components.social,
        "gdi_freshness": record.components.freshness,
        "upvotes": record.counters.upvotes,
        "downvotes": record.counters.downvotes,
        "agent_rating_avg": 0.0,
        "agent_rating_count": 0,
        "fork_count": record.counters.fork_count,
        "iteration_count": 0,
        "payload_json": json.dumps(body.to_payload(), sort_keys=True),
        "lineage_json": json.dumps([str(p) for p in parents]),
        "bundle_capsule_json": "",
        "bundle_events_json": "",
        "rawtext": "",
    }


def bounty_detail_record(bounty: Bounty) -> dict:
    return {
        "bounty_id": bounty.id,
        "question_id": "",
        "user_id": bounty.poster,
        "amount": bounty.amount,
        "status": bounty.status.value,
        "title": bounty.title,
        "signals": ",".join(bounty.signals),
        "boost_level": 0,
        "matched_asset_id": "",
        "matched_node_id": "",
        "accepted_at": to_rfc3339(bounty.accepted_at) if bounty.accepted_at else "",
        "expires_at": to_rfc3339(bounty.expires_at),
        "created_at": to_rfc3339(bounty.created_at),
        "task_id": "",
        "task_status": "",
        "task_claimed_by": "",
        "task_claimed_at": "",
        "submission_count": len(bounty.submissions),
        "promoted_submission_count": 0,
        "competition_status": (
            "competitive" if len(bounty.submissions) > 1 else "awaiting_competition"
        ),
        "review_status": "{}",
        "updated_at": to_rfc3339(bounty.accepted_at or bounty.created_at),
    }


def bounty_submission_record(submission: Submission) -> dict:
    return {
        "bounty_id": submission.bounty_id,
        "submission_id": submission.submission_id,
        "node_id": submission.submitter,
        "asset_id": str(submission.asset),
        "status": submission.status.value,
        "created_at": to_rfc3339(submission.created_at),
        "summary": submission.summary,
        "content": submission.content,
    }


_SCHEMAS: dict[str, tuple[str, ...]] = {
    "asset_detail": ASSET_DETAIL_FIELDS,
    "bounty_detail": BOUNTY_DETAIL_FIELDS,
    "bounty_submissions": BOUNTY_SUBMISSION_FIELDS,
}

_REQUIRED_KEY = {
    "asset_detail": "asset_id",
    "bounty_detail": "bounty_id",
    "bounty_submissions": "submission_id",
}


def dump_record(record: Mapping[str, Any], schema: str) -> str:
    """Serialize one record: recognized fields in schema order, then any
    extra fields in sorted order. Deterministic byte-for-byte."""
    fields = _SCHEMAS[schema]
    ordered: dict[str, Any] = {}
    for name in fields:
        if name in record:
            ordered[name] = record[name]
    for name in sorted(record):
        if name not in ordered:
            ordered[name] = record[name]
    return json.dumps(ordered, ensure_ascii=False, separators=(",", ":"))


def write_records(path: str | Path, records: Iterable[Mapping[str, Any]],
                  schema: str) -> int:
    try:
        count = 0
        with open(path, "w", encoding="utf-8") as fh:
            for record in records:
                fh.write(dump_record(record, schema))
                fh.write("\n")
                count += 1
        return count
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def read_records(path: str | Path, schema: str) -> Iterator[dict]:
    """Parse a line-delimited dataset, checking the schema's key field.

    Raises SchemaViolation with the offending record index.
    """
    required = _REQUIRED_KEY[schema]
    try:
        handle = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    with handle:
        for index, line in enumerate(handle):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaViolation(index, f"not valid JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise SchemaViolation(index, "record is not an object")
            if required not in record or record[required] in ("", None):
                raise SchemaViolation(index, f"missing {required}")
            yield record


@dataclass
class ImportedRegistry:
    """Read-only replay view over imported asset-detail records."""

    records: list[dict] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def recompute_documented(
        self, weights: GdiWeights = OFFICIAL_WEIGHTS
    ) -> list[tuple[str, float | None, float]]:
        """Recompute the documented composite from each record's stored
        components, for comparison against the imported gdi_score."""
        out = []
        for record in self.records:
            components = GdiComponents(
                intrinsic=float(record.get("gdi_intrinsic", 0.0)),
                usage=float(record.get("gdi_usage", 0.0)),
                social=float(record.get("gdi_social", 0.0)),
                freshness=float(record.get("gdi_freshness", 1.0)),
            )
            imported = record.get("gdi_score")
            out.append((
                record["asset_id"],
                float(imported) if imported is not None else None,
                composite_gdi(components, weights),
            ))
        return out


def import_dataset(path: str | Path) -> ImportedRegistry:
    return ImportedRegistry(records=list(read_records(path, "asset_detail")))


def export_hub(hub: Hub, directory: str | Path) -> dict[str, int]:
    """Write the hub's registry, bounty book and submissions as datasets."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    counts = {
        "asset_detail": write_records(
            directory / "asset_detail.jsonl",
            (asset_detail_record(r, hub) for r in hub.records.values()),
            "asset_detail",
        ),
        "bounty_detail": write_records(
            directory / "bounty_detail.jsonl",
            (bounty_detail_record(b) for b in hub.bounties.values()),
            "bounty_detail",
        ),
        "bounty_submissions": write_records(
            directory / "bounty_submissions.jsonl",
            (bounty_submission_record(s)
             for b in hub.bounties.values() for s in b.submissions),
            "bounty_submissions",
        ),
    }
    return counts


def ecdf_columns(values: Sequence[float]) -> list[tuple[float, float]]:
    """(value, cumulative fraction) pairs, plain columns for plotting."""
    ordered = sorted(values)
    n = len(ordered)
    return [(v, (i + 1) / n) for i, v in enumerate(ordered)]


def render_table(rows: Sequence[tuple[str, object]], title: str = "") -> str:
    """Small fixed-width two-column table used by the report exporters."""
    width = max((len(label) for label, _ in rows), default=10)
    lines = []
    if title:
        lines.append(title)
        lines.append("-" * max(len(title), width + 10))
    for label, value in rows:
        if isinstance(value, float):
            value = f"{value:.1f}"
        lines.append(f"{label:<{width}}  {value}")
    return "\n".join(lines) + "\n"
