"""Asset model of the Genome Evolution Protocol.

Genes describe a task category (preconditions, constraints, validation
commands), Capsules carry a concrete solution keyed by a trigger signature,
and EvolutionEvents bind a committed Capsule to the Genes that guided it.
All three are immutable value objects with content-addressed identity:
the id of an asset is the SHA-256 digest of its canonical serialization.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import math
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

AgentId = str

_HEX_DIGITS = set("0123456789abcdef")


class LineageError(Exception):
    """Base class for asset construction and lineage errors."""


class RepairWithoutHistory(LineageError):
    """A repair event was requested for a capsule with no committed version."""


class AssetId(str):
    """64-character lowercase hex SHA-256 digest of a canonical payload."""

    def __new__(cls, digest: str) -> "AssetId":
        normalized = str(digest).lower()
        if len(normalized) != 64 or not set(normalized) <= _HEX_DIGITS:
            raise ValueError(f"not a 64-character hex digest: {digest!r}")
        return super().__new__(cls, normalized)

    @property
    def hex(self) -> str:
        return str(self)


def canonical_bytes(payload: Any) -> bytes:
    """Canonical serialization: UTF-8 JSON, lexicographically sorted keys,
    no insignificant whitespace. Floats use Python's shortest round-trip
    repr, so the encoding is locale- and platform-independent."""
    return json.dumps(
        payload, sort_keys=True, ensure_ascii=False, separators=(",", ":")
    ).encode("utf-8")


def hash_asset(payload: bytes) -> AssetId:
    """SHA-256 of canonical payload bytes. Pure and total on byte strings."""
    return AssetId(hashlib.sha256(payload).hexdigest())


def to_rfc3339(instant: datetime) -> str:
    """UTC instant as an RFC 3339 string with a trailing Z."""
    if instant.tzinfo is None:
        instant = instant.replace(tzinfo=timezone.utc)
    text = instant.astimezone(timezone.utc).isoformat()
    return text.replace("+00:00", "Z")


def from_rfc3339(text: str) -> datetime:
    """Parse an RFC 3339 UTC string back into an aware datetime."""
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    instant = datetime.fromisoformat(text)
    if instant.tzinfo is None:
        instant = instant.replace(tzinfo=timezone.utc)
    return instant.astimezone(timezone.utc)


def _require_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


def _require_non_negative_int(name: str, value: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise ValueError(f"{name} must be a non-negative integer, got {value!r}")


@dataclass(frozen=True)
class IntrinsicSignals:
    """The six self-reported metadata fields scored at publication time.

    ``reputation`` is the only agent-level field; a freshly registered
    agent defaults to 50.
    """

    confidence: float
    success_streak: int
    files_modified: int
    lines_modified: int
    trigger_count: int
    summary_length: int
    reputation: float = 50.0

    def __post_init__(self) -> None:
        _require_finite("confidence", self.confidence)
        _require_finite("reputation", self.reputation)
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must lie in [0, 1], got {self.confidence!r}")
        if not 0.0 <= self.reputation <= 100.0:
            raise ValueError(f"reputation must lie in [0, 100], got {self.reputation!r}")
        for name in ("success_streak", "files_modified", "lines_modified",
                     "trigger_count", "summary_length"):
            _require_non_negative_int(name, getattr(self, name))

    def to_payload(self) -> dict:
        return {
            "confidence": self.confidence,
            "success_streak": self.success_streak,
            "files_modified": self.files_modified,
            "lines_modified": self.lines_modified,
            "trigger_count": self.trigger_count,
            "summary_length": self.summary_length,
            "reputation": self.reputation,
        }

    @classmethod
    def from_payload(cls, payload: Mapping[str, Any]) -> "IntrinsicSignals":
        return cls(
            confidence=float(payload["confidence"]),
            success_streak=int(payload["success_streak"]),
            files_modified=int(payload["files_modified"]),
            lines_modified=int(payload["lines_modified"]),
            trigger_count=int(payload["trigger_count"]),
            summary_length=int(payload["summary_length"]),
            reputation=float(payload.get("reputation", 50.0)),
        )


def _as_str_tuple(values: Iterable[str]) -> tuple[str, ...]:
    return tuple(str(v) for v in values)


def _as_id_tuple(values: Iterable[str]) -> tuple[AssetId, ...]:
    return tuple(v if isinstance(v, AssetId) else AssetId(v) for v in values)


@dataclass(frozen=True)
class Gene:
    """Behavioral blueprint for a task category.

    Lists may be empty; a Gene with zero validation commands is legal
    (and is exactly what the audit toolkit measures). Command strings are
    stored verbatim, byte-exact.
    """

    preconditions: tuple[str, ...]
    constraints: tuple[str, ...]
    validations: tuple[str, ...]
    summary: str
    tags: tuple[str, ...]
    author: AgentId

    def __post_init__(self) -> None:
        object.__setattr__(self, "preconditions", _as_str_tuple(self.preconditions))
        object.__setattr__(self, "constraints", _as_str_tuple(self.constraints))
        object.__setattr__(self, "validations", _as_str_tuple(self.validations))
        object.__setattr__(self, "tags", _as_str_tuple(self.tags))

    def to_payload(self) -> dict:
        return {
            "kind": "gene",
            "preconditions": list(self.preconditions),
            "constraints": list(self.constraints),
            "validations": list(self.validations),
            "summary": self.summary,
            "tags": list(self.tags),
            "author": self.author,
        }

    @property
    def asset_id(self) -> AssetId:
        return hash_asset(canonical_bytes(self.to_payload()))


@dataclass(frozen=True)
class Capsule:
    """Concrete implementation for a specific scenario.

    ``trigger_text`` is the retrieval key; it must be non-empty before the
    capsule can be published. ``parent_genes`` may be empty: innovation
    without a guiding Gene is permitted, but recorded as such.
    """

    content: str
    trigger_text: str
    signals: IntrinsicSignals
    parent_genes: tuple[AssetId, ...]
    summary: str
    author: AgentId

    def __post_init__(self) -> None:
        object.__setattr__(self, "parent_genes", _as_id_tuple(self.parent_genes))

    def to_payload(self) -> dict:
        return {
            "kind": "capsule",
            "content": self.content,
            "trigger_text": self.trigger_text,
            "signals": self.signals.to_payload(),
            "parent_genes": [str(g) for g in self.parent_genes],
            "summary": self.summary,
            "author": self.author,
        }

    @property
    def asset_id(self) -> AssetId:
        return hash_asset(canonical_bytes(self.to_payload()))


class EventKind(str, Enum):
    INNOVATION = "innovation"
    REPAIR = "repair"


@dataclass(frozen=True)
class EvolutionEvent:
    """Hash-linked record binding a committed Capsule to its guiding Genes.

    The digest covers every other field; mutating any of them invalidates
    the event. Events reference asset hashes, never asset bodies.
    """

    capsule: AssetId
    parent_genes: tuple[AssetId, ...]
    metrics: IntrinsicSignals
    kind: EventKind
    timestamp: datetime
    digest: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "parent_genes", _as_id_tuple(self.parent_genes))

    def core_payload(self) -> dict:
        return {
            "kind": "event",
            "capsule": str(self.capsule),
            "parent_genes": [str(g) for g in self.parent_genes],
            "metrics": self.metrics.to_payload(),
            "event_kind": self.kind.value,
            "timestamp": to_rfc3339(self.timestamp),
        }

    def compute_digest(self) -> str:
        return str(hash_asset(canonical_bytes(self.core_payload())))

    def verify(self) -> bool:
        return self.digest == self.compute_digest()

    def to_payload(self) -> dict:
        payload = self.core_payload()
        payload["digest"] = self.digest
        return payload

    @property
    def asset_id(self) -> AssetId:
        return AssetId(self.digest)


def link_event(
    capsule: Capsule,
    genes: Sequence[Gene],
    kind: EventKind | str,
    timestamp: datetime,
    history: Sequence[EvolutionEvent] = (),
) -> EvolutionEvent:
    """Record an EvolutionEvent for a committed capsule.

    The event references the hashes of the capsule and genes, not their
    bodies, and its digest covers all fields. A repair is only legal when
    the capsule already appears in an earlier event of ``history``.
    """
    kind = EventKind(kind)
    capsule_id = capsule.asset_id
    if kind is EventKind.REPAIR:
        prior = {event.capsule for event in history}
        if capsule_id not in prior:
            raise RepairWithoutHistory(
                f"repair of {capsule_id[:12]}.. has no prior committed version"
            )
    event = EvolutionEvent(
        capsule=capsule_id,
        parent_genes=tuple(g.asset_id for g in genes),
        metrics=capsule.signals,
        kind=kind,
        timestamp=timestamp,
        digest="0" * 64,
    )
    return replace(event, digest=event.compute_digest())


@dataclass(frozen=True)
class LineageVerdict:
    intact: bool
    broken_at: int | None = None

    def __bool__(self) -> bool:
        return self.intact


def verify_lineage(events: Sequence[EvolutionEvent]) -> LineageVerdict:
    """Check an event list ordered by timestamp.

    Intact iff every digest recomputes from its stored fields and every
    repair's capsule appears as the capsule of an earlier event.
    """
    seen: set[AssetId] = set()
    for index, event in enumerate(events):
        if not event.verify():
            return LineageVerdict(False, index)
        if event.kind is EventKind.REPAIR and event.capsule not in seen:
            return LineageVerdict(False, index)
        seen.add(event.capsule)
    return LineageVerdict(True, None)


class Signer:
    """Detached authenticator over asset digests. Pluggable; the default
    is a keyed hash with a per-agent secret derived from a master key."""

    def sign(self, agent: AgentId, digest: str) -> str:
        raise NotImplementedError

    def verify(self, agent: AgentId, digest: str, signature: str) -> bool:
        raise NotImplementedError


class KeyedHashSigner(Signer):
    def __init__(self, master_secret: bytes = b"gepnet-default-secret") -> None:
        self._master = master_secret

    def _agent_key(self, agent: AgentId) -> bytes:
        return hmac.new(self._master, agent.encode("utf-8"), hashlib.sha256).digest()

    def sign(self, agent: AgentId, digest: str) -> str:
        key = self._agent_key(agent)
        return hmac.new(key, digest.encode("ascii"), hashlib.sha256).hexdigest()

    def verify(self, agent: AgentId, digest: str, signature: str) -> bool:
        return hmac.compare_digest(self.sign(agent, digest), signature)
