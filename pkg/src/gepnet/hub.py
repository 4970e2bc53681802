"""The central registry.

Publication runs two-stage filtering (near-duplicate rejection, then a
hidden-candidate period gated by GDI >= 25). Scores are recomputed on an
explicit injected clock, never wall time. All credit movements go through
an append-only double-entry ledger; operations that would overdraw an
agent are rejected atomically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from datetime import datetime
from enum import Enum
from typing import Callable, Mapping, Sequence

from .core import (
    AgentId,
    AssetId,
    Capsule,
    EvolutionEvent,
    Gene,
    IntrinsicSignals,
    Signer,
)
from .scoring import (
    GdiComponents,
    GdiWeights,
    OFFICIAL_WEIGHTS,
    UsageCounters,
    composite_gdi,
    intrinsic_score,
    social_score,
)
from .similarity import (
    FeatureHashingEmbedder,
    ShingleIndex,
    cosine,
    keyword_overlap,
    tokenize,
)


class HubError(Exception):
    """Base class for hub operation errors."""


class UnknownAgent(HubError):
    pass


class UnknownAsset(HubError):
    pass


class UnknownBounty(HubError):
    pass


class InsufficientCredits(HubError):
    pass


class DuplicateAsset(HubError):
    pass


class InvalidAsset(HubError):
    pass


class SelfVote(HubError):
    pass


class NoSubmissions(HubError):
    pass


class AlreadySettled(HubError):
    pass


class Expired(HubError):
    pass


class IllegalTransition(HubError):
    pass


class HubUnavailable(HubError):
    """Raised by transports when the hub cannot be reached."""


class AssetStatus(str, Enum):
    CANDIDATE = "candidate"
    PROMOTED = "promoted"
    REVOKED = "revoked"
    ARCHIVED = "archived"
    FLAGGED = "flagged"
    STALE = "stale"


class AssetKind(str, Enum):
    GENE = "gene"
    CAPSULE = "capsule"
    EVENT = "event"


class LedgerReason(str, Enum):
    REGISTRATION = "registration"
    VALIDATION_REPORT = "validation_report"
    PROMOTION = "promotion"
    ASSET_CALLED = "asset_called"
    BOUNTY_PAYOUT = "bounty_payout"
    PUBLISH_FEE = "publish_fee"
    FETCH_FEE = "fetch_fee"
    # Escrow movements for posted bounties (debit on post, credit back on
    # expiry). Kept as its own reason so payouts stay exactly one-per-bounty.
    BOUNTY_ESCROW = "bounty_escrow"


@dataclass(frozen=True)
class LedgerEntry:
    agent: AgentId
    amount: float
    reason: LedgerReason
    ref: str | None
    timestamp: datetime


class CreditLedger:
    """Append-only record of all credit movements with O(1) balances."""

    def __init__(self) -> None:
        self.entries: list[LedgerEntry] = []
        self.net = 0.0
        self._balances: dict[AgentId, float] = {}

    def append(self, entry: LedgerEntry) -> None:
        balance = self._balances.get(entry.agent, 0.0) + entry.amount
        if balance < 0:
            raise InsufficientCredits(
                f"{entry.agent} cannot afford {-entry.amount} for {entry.reason.value}"
            )
        self.entries.append(entry)
        self.net += entry.amount
        self._balances[entry.agent] = balance

    def balance(self, agent: AgentId) -> float:
        return self._balances.get(agent, 0.0)

    def balances(self) -> dict[AgentId, float]:
        return dict(self._balances)

    def entries_for(self, agent: AgentId) -> list[LedgerEntry]:
        return [e for e in self.entries if e.agent == agent]

    def totals_by_reason(self) -> dict[str, float]:
        totals: dict[str, float] = {}
        for entry in self.entries:
            totals[entry.reason.value] = totals.get(entry.reason.value, 0.0) + entry.amount
        return totals

    def verify(self) -> dict:
        """Recompute every balance from scratch and check conservation.

        Returns a report with minted (sum of credits), burned (sum of
        debits) and net; raises AssertionError when the incremental
        balances drifted or any balance is negative.
        """
        recomputed: dict[AgentId, float] = {}
        minted = 0.0
        burned = 0.0
        for entry in self.entries:
            recomputed[entry.agent] = recomputed.get(entry.agent, 0.0) + entry.amount
            if entry.amount >= 0:
                minted += entry.amount
            else:
                burned -= entry.amount
        assert recomputed == self._balances, "incremental balances drifted"
        negative = [a for a, b in recomputed.items() if b < 0]
        assert not negative, f"negative balances: {negative}"
        net = sum(recomputed.values())
        assert abs(net - (minted - burned)) < 1e-9, "mint/burn accounting broke"
        return {"minted": minted, "burned": burned, "net": net}


@dataclass
class AgentProfile:
    agent_id: AgentId
    name: str
    registered_at: datetime
    reports_total: int = 0
    reports_successful: int = 0

    @property
    def reputation(self) -> float:
        """Fraction of reuse reports on this agent's assets that succeeded,
        on a 0-100 scale; 50 before any report exists."""
        if self.reports_total == 0:
            return 50.0
        return 100.0 * self.reports_successful / self.reports_total

    @property
    def exec_history(self) -> float:
        if self.reports_total == 0:
            return 0.5
        return self.reports_successful / self.reports_total


@dataclass
class AssetRecord:
    """One registry row. The registry is append-only: records are never
    deleted, only their status changes.

    The four sub-scores live as plain floats (the recompute loop rewrites
    them every tick); ``components`` assembles the value object on demand.
    The intrinsic score is frozen at publication.
    """

    id: AssetId
    kind: AssetKind
    body: Gene | Capsule | EvolutionEvent
    status: AssetStatus
    counters: UsageCounters
    intrinsic: float
    gdi: float
    author: AgentId
    published_at: datetime
    usage: float = 0.0
    social: float = 0.0
    freshness: float = 1.0
    promotion_paid: bool = False
    signature: str = ""
    votes: dict[AgentId, str] = field(default_factory=dict)

    @property
    def components(self) -> GdiComponents:
        return GdiComponents._unchecked(self.intrinsic, self.usage,
                                        self.social, self.freshness)


# candidate never comes back; stale assets may recover.
_LEGAL_TRANSITIONS = {
    (AssetStatus.CANDIDATE, AssetStatus.PROMOTED),
    (AssetStatus.PROMOTED, AssetStatus.STALE),
    (AssetStatus.PROMOTED, AssetStatus.FLAGGED),
    (AssetStatus.STALE, AssetStatus.PROMOTED),
}
_ADMIN_TARGETS = {AssetStatus.ARCHIVED, AssetStatus.REVOKED}


class BountyStatus(str, Enum):
    OPEN = "open"
    MATCHED = "matched"
    EXPIRED = "expired"
    ACCEPTED = "accepted"
    SETTLED = "settled"


class SubmissionStatus(str, Enum):
    PENDING = "pending"
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    RUNNER_UP = "runner_up"


@dataclass
class Submission:
    submission_id: str
    bounty_id: str
    submitter: AgentId
    asset: AssetId
    status: SubmissionStatus
    created_at: datetime
    summary: str = ""
    content: str = ""


@dataclass
class Bounty:
    id: str
    poster: AgentId
    title: str
    signals: tuple[str, ...]
    amount: float
    status: BountyStatus
    expires_at: datetime
    created_at: datetime
    submissions: list[Submission] = field(default_factory=list)
    accepted_at: datetime | None = None


@dataclass
class HubConfig:
    publish_fee: float = 2.0
    fetch_fee: float = 1.0
    promotion_threshold: float = 25.0
    weights: GdiWeights = field(default_factory=lambda: OFFICIAL_WEIGHTS)
    registration_credits: float = 200.0
    promotion_reward: float = 20.0
    report_reward_base: float = 10.0
    report_reward_span: float = 20.0
    duplicate_threshold: float = 0.9
    # "shingle" is the fast order-sensitive default; "embedding" compares
    # cosine similarity under the pluggable embedder instead (O(N) publish).
    duplicate_check: str = "shingle"
    shingle_size: int = 3
    fetch_limit: int = 10
    min_query_similarity: float = 0.05


def call_reward(gdi: float) -> float:
    """Per-call author reward, tiered by the asset's GDI."""
    if gdi <= 20:
        return 0.0
    if gdi <= 40:
        return 2.0
    if gdi <= 60:
        return 5.0
    if gdi <= 80:
        return 8.0
    return 12.0


@dataclass(frozen=True)
class FetchHit:
    record: AssetRecord
    similarity: float
    reward: float


@dataclass(frozen=True)
class ReuseAck:
    asset: AssetId
    success: bool
    coverage: float
    reward: float


@dataclass(frozen=True)
class PromotionReport:
    promoted: tuple[AssetId, ...]
    demoted: tuple[AssetId, ...]
    recomputed: int


# evaluator(bounty, submission, record) -> score in [0, 1]
BountyEvaluator = Callable[[Bounty, Submission, AssetRecord], float]


def default_evaluator(bounty: Bounty, submission: Submission,
                      record: AssetRecord) -> float:
    """Deterministic stand-in for an external judge: keyword overlap
    between the bounty's signals and the submitted asset's text."""
    return keyword_overlap(bounty.signals, _retrieval_text(record.body))


def _retrieval_text(body: Gene | Capsule | EvolutionEvent) -> str:
    if isinstance(body, Capsule):
        return f"{body.trigger_text} {body.summary} {body.content}"
    if isinstance(body, Gene):
        return " ".join((body.summary, *body.tags, *body.preconditions))
    return body.capsule  # events are keyed by the capsule they commit


def _dedup_text(body: Gene | Capsule | EvolutionEvent) -> str:
    if isinstance(body, Capsule):
        return f"{body.content} {body.summary}"
    if isinstance(body, Gene):
        return " ".join((*body.preconditions, *body.constraints,
                         *body.validations, body.summary))
    return body.digest


class Hub:
    """Single logical writer over the registry, ledger and bounty book.

    Every time-dependent operation takes an explicit ``now``; the hub never
    reads a wall clock, which keeps simulations and tests deterministic.
    """

    def __init__(self, config: HubConfig | None = None,
                 embedder: FeatureHashingEmbedder | None = None,
                 signer: Signer | None = None) -> None:
        self.config = config or HubConfig()
        self.embedder = embedder or FeatureHashingEmbedder()
        self.signer = signer
        self.agents: dict[AgentId, AgentProfile] = {}
        self.ledger = CreditLedger()
        self.records: dict[AssetId, AssetRecord] = {}
        self.bounties: dict[str, Bounty] = {}
        self._dup_index: dict[AssetKind, ShingleIndex] = {
            kind: ShingleIndex(self.config.shingle_size) for kind in AssetKind
        }
        self._dedup_embeddings: dict[AssetKind, list[dict[int, float]]] = {
            kind: [] for kind in AssetKind
        }
        self._embeddings: dict[AssetId, dict[int, float]] = {}
        self._token_index: dict[str, list[AssetId]] = {}
        self._order: dict[AssetId, int] = {}
        self._agent_seq = 0
        self._bounty_seq = 0
        self._submission_seq = 0

    # -- agents ---------------------------------------------------------

    def register_agent(self, name: str, now: datetime) -> AgentId:
        if not name:
            raise ValueError("agent name must be non-empty")
        self._agent_seq += 1
        agent_id = AgentId(f"agent-{self._agent_seq:06d}")
        self.agents[agent_id] = AgentProfile(agent_id, name, now)
        self.ledger.append(LedgerEntry(
            agent_id, self.config.registration_credits,
            LedgerReason.REGISTRATION, None, now,
        ))
        return agent_id

    def _require_agent(self, agent: AgentId) -> AgentProfile:
        profile = self.agents.get(agent)
        if profile is None:
            raise UnknownAgent(f"unknown agent {agent!r}")
        return profile

    def balance(self, agent: AgentId) -> float:
        self._require_agent(agent)
        return self.ledger.balance(agent)

    def reputation(self, agent: AgentId) -> float:
        return self._require_agent(agent).reputation

    # -- publication ----------------------------------------------------

    def publish(self, author: AgentId, asset: Gene | Capsule | EvolutionEvent,
                now: datetime, fee: float | None = None) -> AssetRecord:
        profile = self._require_agent(author)
        fee = self.config.publish_fee if fee is None else fee
        if self.ledger.balance(author) < fee:
            raise InsufficientCredits(f"{author} cannot pay the publish fee")

        if isinstance(asset, Gene):
            kind = AssetKind.GENE
        elif isinstance(asset, Capsule):
            kind = AssetKind.CAPSULE
            if not asset.trigger_text:
                raise InvalidAsset("a publishable capsule needs a trigger_text")
        elif isinstance(asset, EvolutionEvent):
            kind = AssetKind.EVENT
        else:
            raise InvalidAsset(f"cannot publish {type(asset).__name__}")

        asset_id = asset.asset_id
        if asset_id in self.records:
            raise DuplicateAsset(f"{asset_id[:12]}.. is already registered")
        dedup_text = _dedup_text(asset)
        if self._is_duplicate(kind, dedup_text):
            raise DuplicateAsset(f"{asset_id[:12]}.. is too similar to a stored asset")

        # The intrinsic component is frozen here; the reputation term comes
        # from the hub's own tracking, not the self-reported field.
        signals = self._effective_signals(asset, profile)
        intrinsic = intrinsic_score(signals) if signals is not None else 0.0
        counters = UsageCounters(created_at=now, last_activity=now)
        record = AssetRecord(
            id=asset_id, kind=kind, body=asset, status=AssetStatus.CANDIDATE,
            counters=counters, intrinsic=intrinsic,
            gdi=composite_gdi(
                GdiComponents(intrinsic, 0.0, 0.0, 1.0), self.config.weights),
            author=author, published_at=now,
            signature=(self.signer.sign(author, str(asset_id))
                       if self.signer else ""),
        )

        if fee > 0:
            self.ledger.append(LedgerEntry(
                author, -fee, LedgerReason.PUBLISH_FEE, str(asset_id), now,
            ))
        self.records[asset_id] = record
        self._order[asset_id] = len(self._order)
        if self.config.duplicate_check == "embedding":
            self._dedup_embeddings[kind].append(self.embedder.embed(dedup_text))
        else:
            self._dup_index[kind].add(str(asset_id), dedup_text)
        retrieval_text = _retrieval_text(asset)
        self._embeddings[asset_id] = self.embedder.embed(retrieval_text)
        for token in sorted(set(tokenize(retrieval_text))):
            self._token_index.setdefault(token, []).append(asset_id)
        return record

    def _is_duplicate(self, kind: AssetKind, dedup_text: str) -> bool:
        threshold = self.config.duplicate_threshold
        if self.config.duplicate_check == "embedding":
            probe = self.embedder.embed(dedup_text)
            return any(cosine(probe, stored) >= threshold
                       for stored in self._dedup_embeddings[kind])
        return self._dup_index[kind].has_similar(dedup_text, threshold)

    @staticmethod
    def _effective_signals(asset, profile: AgentProfile) -> IntrinsicSignals | None:
        if isinstance(asset, Capsule):
            signals = asset.signals
        elif isinstance(asset, EvolutionEvent):
            signals = asset.metrics
        else:
            return None
        return replace(signals, reputation=profile.reputation)

    # -- scoring lifecycle ------------------------------------------------

    def _recompute_record(self, record: AssetRecord, now_ts: float,
                          weights: tuple[float, float, float, float, float] | None = None,
                          _exp=math.exp, _ln2=math.log(2.0)) -> None:
        # Inlined usage/social/freshness math: this runs once per record
        # per hourly tick and dominates large simulations.
        if weights is None:
            weights = self.config.weights.as_tuple()
        w_intrinsic, w_usage, w_social, w_freshness, intercept = weights
        counters = record.counters
        record.usage = 1.0 - _exp(
            -(counters.call_count + 2 * counters.reuse_count) / 20.0)
        if counters.upvotes or counters.downvotes:
            record.social = social_score(counters.upvotes, counters.downvotes)
        else:
            record.social = 0.0
        if counters.activity_ts is None:
            record.freshness = 1.0
        else:
            days = (now_ts - counters.activity_ts) / 86400.0
            record.freshness = _exp(-_ln2 * days / 30.0)
        record.gdi = 100.0 * (
            w_intrinsic * record.intrinsic
            + w_usage * record.usage
            + w_social * record.social
            + w_freshness * record.freshness
        ) + intercept

    def recompute_and_promote(self, now: datetime) -> PromotionReport:
        """The hourly pass: refresh usage/social/freshness for every live
        record, promote candidates crossing the threshold, demote promoted
        records that fell below it, expire due bounties."""
        promoted: list[AssetId] = []
        demoted: list[AssetId] = []
        recomputed = 0
        threshold = self.config.promotion_threshold
        now_ts = now.timestamp()
        weights = self.config.weights.as_tuple()
        for record in self.records.values():
            if record.status in (AssetStatus.ARCHIVED, AssetStatus.REVOKED):
                continue
            self._recompute_record(record, now_ts, weights)
            recomputed += 1
            if record.status in (AssetStatus.CANDIDATE, AssetStatus.STALE):
                if record.gdi >= threshold:
                    self._transition(record, AssetStatus.PROMOTED)
                    promoted.append(record.id)
                    if not record.promotion_paid:
                        record.promotion_paid = True
                        self.ledger.append(LedgerEntry(
                            record.author, self.config.promotion_reward,
                            LedgerReason.PROMOTION, str(record.id), now,
                        ))
            elif record.status is AssetStatus.PROMOTED and record.gdi < threshold:
                self._transition(record, AssetStatus.STALE)
                demoted.append(record.id)
        self.expire_due_bounties(now)
        return PromotionReport(tuple(promoted), tuple(demoted), recomputed)

    def _transition(self, record: AssetRecord, new_status: AssetStatus) -> None:
        if new_status in _ADMIN_TARGETS:
            record.status = new_status
            return
        if (record.status, new_status) not in _LEGAL_TRANSITIONS:
            raise IllegalTransition(
                f"{record.status.value} -> {new_status.value} is not allowed"
            )
        record.status = new_status

    def set_status(self, asset_id: AssetId, new_status: AssetStatus) -> None:
        """Administrative transition (archive/revoke/flag)."""
        record = self._require_record(asset_id)
        self._transition(record, new_status)

    def _require_record(self, asset_id: AssetId) -> AssetRecord:
        record = self.records.get(asset_id)
        if record is None:
            raise UnknownAsset(f"unknown asset {str(asset_id)[:12]}..")
        return record

    # -- retrieval --------------------------------------------------------

    def fetch(self, caller: AgentId, query: str, now: datetime,
              fee: float | None = None, limit: int | None = None) -> list[FetchHit]:
        """Ranked promoted assets matching the query. The fee is debited
        even when nothing matches; every returned asset's call counter
        increments and its author earns the per-call tier reward."""
        self._require_agent(caller)
        fee = self.config.fetch_fee if fee is None else fee
        if self.ledger.balance(caller) < fee:
            raise InsufficientCredits(f"{caller} cannot pay the fetch fee")
        if fee > 0:
            self.ledger.append(LedgerEntry(
                caller, -fee, LedgerReason.FETCH_FEE, None, now,
            ))
        limit = self.config.fetch_limit if limit is None else limit
        query_vec = self.embedder.embed(query)
        # Candidates share at least one token with the query; anything else
        # has similarity 0 under the bag-of-tokens embedder anyway.
        candidates: dict[AssetId, None] = {}
        for token in tokenize(query):
            for asset_id in self._token_index.get(token, ()):
                candidates[asset_id] = None
        scored: list[tuple[float, float, datetime, int, AssetRecord]] = []
        for asset_id in candidates:
            record = self.records[asset_id]
            if record.status is not AssetStatus.PROMOTED:
                continue
            sim = cosine(query_vec, self._embeddings[record.id])
            if sim < self.config.min_query_similarity:
                continue
            scored.append((sim, record.gdi, record.published_at,
                           self._order[record.id], record))
        scored.sort(key=lambda row: (-row[0], -row[1], row[2], row[3]))
        hits: list[FetchHit] = []
        for sim, _, _, _, record in scored[:limit]:
            record.counters.call_count += 1
            record.counters.touch(now)
            reward = call_reward(record.gdi)
            if reward > 0:
                self.ledger.append(LedgerEntry(
                    record.author, reward, LedgerReason.ASSET_CALLED,
                    str(record.id), now,
                ))
            hits.append(FetchHit(record, sim, reward))
        return hits

    def validation_commands(self, asset_id: AssetId) -> list[str]:
        """The validation command list backing a record: a gene's own
        commands, or the union of a capsule's parent genes' commands."""
        record = self._require_record(asset_id)
        body = record.body
        if isinstance(body, Gene):
            return list(body.validations)
        if isinstance(body, Capsule):
            commands: list[str] = []
            for gene_id in body.parent_genes:
                parent = self.records.get(gene_id)
                if parent is not None and isinstance(parent.body, Gene):
                    for command in parent.body.validations:
                        if command not in commands:
                            commands.append(command)
            return commands
        return []

    def report_reuse(self, caller: AgentId, asset_id: AssetId, success: bool,
                     now: datetime,
                     command_results: Mapping[str, int] | None = None) -> ReuseAck:
        """Record a validation report. Success bumps the reuse counter;
        the reporter is rewarded for coverage either way."""
        self._require_agent(caller)
        record = self._require_record(asset_id)
        if success:
            record.counters.reuse_count += 1
        record.counters.touch(now)

        commands = self.validation_commands(asset_id)
        if not commands:
            coverage = 1.0
        else:
            reported = set(command_results or ())
            coverage = len(reported & set(commands)) / len(set(commands))
        reward = self.config.report_reward_base + round(
            self.config.report_reward_span * coverage
        )
        self.ledger.append(LedgerEntry(
            caller, reward, LedgerReason.VALIDATION_REPORT, str(asset_id), now,
        ))

        author = self.agents.get(record.author)
        if author is not None:
            author.reports_total += 1
            if success:
                author.reports_successful += 1
        return ReuseAck(asset_id, success, coverage, reward)

    def vote(self, voter: AgentId, asset_id: AssetId, direction: str) -> None:
        """One vote per (voter, asset); casting again overwrites."""
        self._require_agent(voter)
        record = self._require_record(asset_id)
        if voter == record.author:
            raise SelfVote("authors cannot vote on their own assets")
        if direction not in ("up", "down"):
            raise ValueError(f"direction must be 'up' or 'down', got {direction!r}")
        record.votes[voter] = direction
        record.counters.upvotes = sum(1 for d in record.votes.values() if d == "up")
        record.counters.downvotes = sum(1 for d in record.votes.values() if d == "down")

    # -- bounty market ----------------------------------------------------

    def post_bounty(self, poster: AgentId, title: str, signals: Sequence[str],
                    amount: float, expires_at: datetime, now: datetime) -> Bounty:
        self._require_agent(poster)
        if amount < 0:
            raise ValueError("bounty amount must be non-negative")
        self._bounty_seq += 1
        bounty_id = f"bounty-{self._bounty_seq:06d}"
        if expires_at <= now:
            bounty = Bounty(bounty_id, poster, title, tuple(signals), amount,
                            BountyStatus.EXPIRED, expires_at, now)
            self.bounties[bounty_id] = bounty
            return bounty
        if amount > 0:
            if self.ledger.balance(poster) < amount:
                raise InsufficientCredits(f"{poster} cannot escrow {amount}")
            self.ledger.append(LedgerEntry(
                poster, -amount, LedgerReason.BOUNTY_ESCROW, bounty_id, now,
            ))
        bounty = Bounty(bounty_id, poster, title, tuple(signals), amount,
                        BountyStatus.OPEN, expires_at, now)
        self.bounties[bounty_id] = bounty
        return bounty

    def _require_bounty(self, bounty_id: str) -> Bounty:
        bounty = self.bounties.get(bounty_id)
        if bounty is None:
            raise UnknownBounty(f"unknown bounty {bounty_id!r}")
        return bounty

    def _expire(self, bounty: Bounty, now: datetime) -> None:
        bounty.status = BountyStatus.EXPIRED
        if bounty.amount > 0:
            self.ledger.append(LedgerEntry(
                bounty.poster, bounty.amount, LedgerReason.BOUNTY_ESCROW,
                bounty.id, now,
            ))

    def expire_due_bounties(self, now: datetime) -> list[str]:
        expired = []
        for bounty in self.bounties.values():
            if (bounty.status in (BountyStatus.OPEN, BountyStatus.MATCHED)
                    and bounty.expires_at <= now):
                self._expire(bounty, now)
                expired.append(bounty.id)
        return expired

    def submit(self, bounty_id: str, submitter: AgentId, asset_id: AssetId,
               now: datetime, summary: str = "", content: str = "") -> Submission:
        self._require_agent(submitter)
        bounty = self._require_bounty(bounty_id)
        if bounty.status in (BountyStatus.SETTLED, BountyStatus.ACCEPTED):
            raise AlreadySettled(f"{bounty_id} already has a winner")
        if bounty.status is BountyStatus.EXPIRED or bounty.expires_at <= now:
            if bounty.status is not BountyStatus.EXPIRED:
                self._expire(bounty, now)
            raise Expired(f"{bounty_id} has expired")
        self._require_record(asset_id)
        self._submission_seq += 1
        submission = Submission(
            submission_id=f"submission-{self._submission_seq:06d}",
            bounty_id=bounty_id, submitter=submitter, asset=asset_id,
            status=SubmissionStatus.PENDING, created_at=now,
            summary=summary, content=content,
        )
        bounty.submissions.append(submission)
        if bounty.status is BountyStatus.OPEN:
            bounty.status = BountyStatus.MATCHED
        return submission

    def resolve_bounty(self, bounty_id: str, now: datetime,
                       evaluator: BountyEvaluator | None = None) -> Submission:
        """Pick the single winner: 0.4 evaluator + 0.3 GDI + 0.2 execution
        history + 0.1 social, ties broken by earliest submission. The
        escrow is paid out and the bounty settles."""
        bounty = self._require_bounty(bounty_id)
        if bounty.status in (BountyStatus.SETTLED, BountyStatus.ACCEPTED):
            raise AlreadySettled(f"{bounty_id} is already settled")
        if bounty.status is BountyStatus.EXPIRED:
            raise Expired(f"{bounty_id} has expired")
        if bounty.expires_at <= now:
            self._expire(bounty, now)
            raise Expired(f"{bounty_id} has expired")
        if not bounty.submissions:
            raise NoSubmissions(f"{bounty_id} has no submissions")
        evaluator = evaluator or default_evaluator

        def unit(value: float) -> float:
            return min(1.0, max(0.0, value))

        best: Submission | None = None
        best_key: tuple | None = None
        for index, submission in enumerate(bounty.submissions):
            record = self._require_record(submission.asset)
            profile = self._require_agent(submission.submitter)
            score = (
                0.4 * unit(evaluator(bounty, submission, record))
                + 0.3 * unit(record.gdi / 100.0)
                + 0.2 * unit(profile.exec_history)
                + 0.1 * unit(record.social)
            )
            key = (-score, submission.created_at, index)
            if best_key is None or key < best_key:
                best_key = key
                best = submission
        assert best is not None
        for submission in bounty.submissions:
            submission.status = (
                SubmissionStatus.ACCEPTED if submission is best
                else SubmissionStatus.RUNNER_UP
            )
        if bounty.amount > 0:
            self.ledger.append(LedgerEntry(
                best.submitter, bounty.amount, LedgerReason.BOUNTY_PAYOUT,
                bounty.id, now,
            ))
        bounty.status = BountyStatus.SETTLED
        bounty.accepted_at = now
        return best

    # -- invariants -------------------------------------------------------

    def verify_ledger(self) -> dict:
        """Conservation and bounty bookkeeping checks; raises on breach."""
        report = self.ledger.verify()
        payouts: dict[str, int] = {}
        for entry in self.ledger.entries:
            if entry.reason is LedgerReason.BOUNTY_PAYOUT:
                payouts[entry.ref] = payouts.get(entry.ref, 0) + 1
        for bounty in self.bounties.values():
            accepted = [s for s in bounty.submissions
                        if s.status is SubmissionStatus.ACCEPTED]
            if bounty.status is BountyStatus.SETTLED:
                assert len(accepted) == 1, f"{bounty.id}: {len(accepted)} winners"
                expected = 1 if bounty.amount > 0 else 0
                assert payouts.get(bounty.id, 0) == expected, (
                    f"{bounty.id}: payout entries != {expected}"
                )
            else:
                assert not accepted, f"{bounty.id}: winner without settlement"
        return report
