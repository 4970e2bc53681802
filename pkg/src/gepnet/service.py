"""Hub service endpoints.

The router maps (method, path, query, body) requests onto hub operations
and returns (status, body) pairs with machine-readable error codes, so
responses are a pure function of hub state, the request, and the injected
clock. A thin stdlib HTTP adapter exposes the same router over a real
socket; shutdown flushes the registry to the data directory.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any, Callable, Mapping
from urllib.parse import parse_qsl, urlsplit

from . import datasets
from .core import AssetId, Capsule, EvolutionEvent, EventKind, Gene, IntrinsicSignals
from .core import from_rfc3339, to_rfc3339
from .hub import (
    AlreadySettled,
    DuplicateAsset,
    Expired,
    Hub,
    HubConfig,
    HubError,
    IllegalTransition,
    InsufficientCredits,
    InvalidAsset,
    NoSubmissions,
    SelfVote,
    UnknownAgent,
    UnknownAsset,
    UnknownBounty,
)
from .scoring import WEIGHT_PRESETS, GdiWeights


class BindFailure(Exception):
    pass


class ConfigInvalid(Exception):
    pass


_ERROR_STATUS: tuple[tuple[type, int], ...] = (
    (UnknownAgent, 404),
    (UnknownAsset, 404),
    (UnknownBounty, 404),
    (InsufficientCredits, 402),
    (DuplicateAsset, 409),
    (InvalidAsset, 400),
    (SelfVote, 400),
    (NoSubmissions, 400),
    (AlreadySettled, 409),
    (Expired, 410),
    (IllegalTransition, 409),
)


def _error_code(exc: Exception) -> str:
    name = type(exc).__name__
    return re.sub(r"(?<!^)(?=[A-Z])", "_", name).lower()


class BadRequest(Exception):
    pass


def _parse_signals(payload: Mapping[str, Any]) -> IntrinsicSignals:
    try:
        return IntrinsicSignals.from_payload(payload)
    except (KeyError, TypeError, ValueError) as exc:
        raise BadRequest(f"bad signals: {exc}") from exc


def _parse_asset(kind: str, payload: Mapping[str, Any], author: str):
    if kind == "gene":
        return Gene(
            preconditions=tuple(payload.get("preconditions", ())),
            constraints=tuple(payload.get("constraints", ())),
            validations=tuple(payload.get("validations", ())),
            summary=str(payload.get("summary", "")),
            tags=tuple(payload.get("tags", ())),
            author=author,
        )
    if kind == "capsule":
        return Capsule(
            content=str(payload.get("content", "")),
            trigger_text=str(payload.get("trigger_text", "")),
            signals=_parse_signals(payload.get("signals", {})),
            parent_genes=tuple(payload.get("parent_genes", ())),
            summary=str(payload.get("summary", "")),
            author=author,
        )
    if kind == "event":
        return EvolutionEvent(
            capsule=AssetId(payload["capsule"]),
            parent_genes=tuple(payload.get("parent_genes", ())),
            metrics=_parse_signals(payload.get("metrics", {})),
            kind=EventKind(payload.get("event_kind", "innovation")),
            timestamp=from_rfc3339(payload["timestamp"]),
            digest=str(payload.get("digest", "")),
        )
    raise BadRequest(f"unknown asset kind {kind!r}")


def _record_view(record) -> dict:
    return {
        "asset_id": str(record.id),
        "asset_type": record.kind.value,
        "status": record.status.value,
        "author": record.author,
        "gdi_score": record.gdi,
        "gdi_intrinsic": record.components.intrinsic,
        "gdi_usage": record.components.usage,
        "gdi_social": record.components.social,
        "gdi_freshness": record.components.freshness,
        "call_count": record.counters.call_count,
        "reuse_count": record.counters.reuse_count,
        "upvotes": record.counters.upvotes,
        "downvotes": record.counters.downvotes,
        "published_at": to_rfc3339(record.published_at),
    }


def _bounty_view(bounty) -> dict:
    return {
        "bounty_id": bounty.id,
        "poster": bounty.poster,
        "title": bounty.title,
        "signals": list(bounty.signals),
        "amount": bounty.amount,
        "status": bounty.status.value,
        "expires_at": to_rfc3339(bounty.expires_at),
        "created_at": to_rfc3339(bounty.created_at),
        "submissions": [
            {
                "submission_id": s.submission_id,
                "submitter": s.submitter,
                "asset_id": str(s.asset),
                "status": s.status.value,
                "created_at": to_rfc3339(s.created_at),
            }
            for s in bounty.submissions
        ],
    }


class Service:
    """Transport-agnostic request router over one hub instance."""

    def __init__(self, hub: Hub | None = None,
                 clock: Callable[[], datetime] | None = None) -> None:
        self.hub = hub or Hub()
        self.clock = clock or (lambda: datetime.now(timezone.utc))

    def _now(self, query: Mapping[str, str], body: Mapping[str, Any] | None) -> datetime:
        raw = (body or {}).get("now") or query.get("now")
        if raw:
            try:
                return from_rfc3339(str(raw))
            except ValueError as exc:
                raise BadRequest(f"bad now timestamp: {raw!r}") from exc
        return self.clock()

    def handle(self, method: str, path: str,
               query: Mapping[str, str] | None = None,
               body: Mapping[str, Any] | None = None) -> tuple[int, dict]:
        query = dict(query or {})
        try:
            return self._route(method.upper(), path.rstrip("/") or "/", query, body)
        except BadRequest as exc:
            return 400, {"error": "bad_request", "detail": str(exc)}
        except (KeyError, TypeError, ValueError) as exc:
            return 400, {"error": "bad_request", "detail": str(exc)}
        except HubError as exc:
            for klass, status in _ERROR_STATUS:
                if isinstance(exc, klass):
                    return status, {"error": _error_code(exc), "detail": str(exc)}
            return 500, {"error": "hub_error", "detail": str(exc)}

    def _route(self, method: str, path: str, query: dict,
               body: Mapping[str, Any] | None) -> tuple[int, dict]:
        hub = self.hub
        body = body or {}
        parts = [p for p in path.split("/") if p]

        if method == "POST" and parts == ["agents"]:
            now = self._now(query, body)
            agent = hub.register_agent(str(body["name"]), now)
            return 200, {"agent_id": agent, "balance": hub.balance(agent),
                         "reputation": hub.reputation(agent)}

        if method == "POST" and parts == ["assets"]:
            now = self._now(query, body)
            author = str(body["author"])
            asset = _parse_asset(str(body.get("kind", "capsule")),
                                 body.get("asset", {}), author)
            fee = body.get("fee")
            record = hub.publish(author, asset, now,
                                 fee=float(fee) if fee is not None else None)
            return 200, _record_view(record)

        if method == "GET" and parts == ["assets"]:
            now = self._now(query, body)
            caller = query.get("caller") or body.get("caller")
            if not caller:
                raise BadRequest("caller is required")
            fee = query.get("fee")
            limit = query.get("limit")
            hits = hub.fetch(
                str(caller), str(query.get("query", "")), now,
                fee=float(fee) if fee is not None else None,
                limit=int(limit) if limit is not None else None,
            )
            return 200, {"results": [
                dict(_record_view(h.record), similarity=h.similarity,
                     call_reward=h.reward)
                for h in hits
            ]}

        if method == "GET" and len(parts) == 2 and parts[0] == "assets":
            record = hub.records.get(AssetId(parts[1]))
            if record is None:
                return 404, {"error": "unknown_asset", "detail": parts[1]}
            return 200, _record_view(record)

        if method == "POST" and len(parts) == 3 and parts[0] == "assets":
            asset_id = AssetId(parts[1])
            if parts[2] == "reuse":
                now = self._now(query, body)
                ack = hub.report_reuse(
                    str(body["caller"]), asset_id, bool(body.get("success", True)),
                    now, command_results=body.get("command_results"),
                )
                return 200, {"asset_id": str(ack.asset), "success": ack.success,
                             "coverage": ack.coverage, "reward": ack.reward}
            if parts[2] == "vote":
                hub.vote(str(body["voter"]), asset_id,
                         str(body.get("direction", "up")))
                record = hub.records[asset_id]
                return 200, {"asset_id": str(asset_id),
                             "upvotes": record.counters.upvotes,
                             "downvotes": record.counters.downvotes}

        if method == "POST" and parts == ["bounties"]:
            now = self._now(query, body)
            bounty = hub.post_bounty(
                str(body["poster"]), str(body.get("title", "")),
                [str(s) for s in body.get("signals", ())],
                float(body.get("amount", 0.0)),
                from_rfc3339(str(body["expires_at"])), now,
            )
            return 200, _bounty_view(bounty)

        if method == "GET" and len(parts) == 2 and parts[0] == "bounties":
            bounty = hub.bounties.get(parts[1])
            if bounty is None:
                return 404, {"error": "unknown_bounty", "detail": parts[1]}
            return 200, _bounty_view(bounty)

        if method == "POST" and len(parts) == 3 and parts[0] == "bounties":
            bounty_id = parts[1]
            if parts[2] == "submissions":
                now = self._now(query, body)
                submission = hub.submit(
                    bounty_id, str(body["submitter"]), AssetId(body["asset_id"]),
                    now, summary=str(body.get("summary", "")),
                    content=str(body.get("content", "")),
                )
                return 200, {"submission_id": submission.submission_id,
                             "bounty_id": bounty_id,
                             "status": submission.status.value}
            if parts[2] == "resolve":
                now = self._now(query, body)
                winner = hub.resolve_bounty(bounty_id, now)
                return 200, {"bounty_id": bounty_id,
                             "winner": winner.submitter,
                             "winning_submission": winner.submission_id,
                             "winning_asset": str(winner.asset),
                             "amount": hub.bounties[bounty_id].amount}

        if method == "POST" and parts == ["admin", "recompute"]:
            now = self._now(query, body)
            report = hub.recompute_and_promote(now)
            return 200, {"promoted": [str(a) for a in report.promoted],
                         "demoted": [str(a) for a in report.demoted],
                         "recomputed": report.recomputed,
                         "now": to_rfc3339(now)}

        if method == "GET" and len(parts) == 3 and parts[0] == "agents" \
                and parts[2] == "ledger":
            agent = parts[1]
            entries = hub.ledger.entries_for(agent)
            if agent not in hub.agents:
                return 404, {"error": "unknown_agent", "detail": agent}
            return 200, {
                "agent_id": agent,
                "balance": hub.balance(agent),
                "entries": [
                    {"amount": e.amount, "reason": e.reason.value,
                     "ref": e.ref, "timestamp": to_rfc3339(e.timestamp)}
                    for e in entries
                ],
            }

        return 404, {"error": "no_such_route", "detail": f"{method} {path}"}


@dataclass
class ServiceConfig:
    port: int = 8750
    host: str = "127.0.0.1"
    data_dir: str | None = None
    weights: str | GdiWeights = "official"
    publish_fee: float = 2.0
    fetch_fee: float = 1.0
    promotion_threshold: float = 25.0

    def hub_config(self) -> HubConfig:
        if self.publish_fee < 0 or self.fetch_fee < 0:
            raise ConfigInvalid("fees must be non-negative")
        if isinstance(self.weights, GdiWeights):
            weights = self.weights
        elif self.weights in WEIGHT_PRESETS:
            weights = WEIGHT_PRESETS[self.weights]
        else:
            try:
                weights = GdiWeights.from_file(self.weights)
            except OSError as exc:
                raise ConfigInvalid(f"cannot load weights: {exc}") from exc
        return HubConfig(
            publish_fee=self.publish_fee, fetch_fee=self.fetch_fee,
            promotion_threshold=self.promotion_threshold, weights=weights,
        )


class _Handler(BaseHTTPRequestHandler):
    service: Service  # set on the server class

    def _dispatch(self, method: str) -> None:
        split = urlsplit(self.path)
        query = dict(parse_qsl(split.query))
        body: dict | None = None
        length = int(self.headers.get("Content-Length") or 0)
        if length:
            raw = self.rfile.read(length)
            try:
                body = json.loads(raw)
            except json.JSONDecodeError:
                self._reply(400, {"error": "bad_request",
                                  "detail": "body is not valid JSON"})
                return
        status, payload = self.server.service.handle(method, split.path, query, body)
        self._reply(status, payload)

    def _reply(self, status: int, payload: dict) -> None:
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self) -> None:  # noqa: N802 (stdlib naming)
        self._dispatch("GET")

    def do_POST(self) -> None:  # noqa: N802
        self._dispatch("POST")

    def log_message(self, *args) -> None:  # silence default stderr logging
        pass


class HubServer:
    """stdlib HTTP adapter around a Service."""

    def __init__(self, config: ServiceConfig, hub: Hub | None = None) -> None:
        self.config = config
        hub = hub or Hub(config.hub_config())
        self.service = Service(hub)
        try:
            self._httpd = ThreadingHTTPServer((config.host, config.port), _Handler)
        except OSError as exc:
            raise BindFailure(f"cannot bind {config.host}:{config.port}: {exc}") from exc
        self._httpd.service = self.service  # type: ignore[attr-defined]
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    def start(self) -> None:
        self._thread = threading.Thread(target=self._httpd.serve_forever,
                                        daemon=True)
        self._thread.start()

    def shutdown(self) -> None:
        """Stop serving and flush persistence to the data directory."""
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
        if self.config.data_dir:
            datasets.export_hub(self.service.hub, Path(self.config.data_dir))


def serve(config: ServiceConfig, hub: Hub | None = None) -> HubServer:
    server = HubServer(config, hub)
    server.start()
    return server
