"""Deterministic multi-agent economy simulator.

Agents with different strategies (honest publishers, credit farmers,
metadata forgers, reusers, bounty hunters) drive one hub for a fixed
number of ticks. Each tick is one action round per agent in a seeded
shuffle order followed by the hub's hourly recompute. Everything flows
from the scenario seed: the same config produces byte-identical traces.

Task demand follows a Zipf distribution over a topic pool with a heavy
singleton tail (by default half of all drawn task signatures are unique),
which is what starves most assets of calls.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Mapping, Sequence

from .audit import OPTIMAL_SIGNALS
from .core import AgentId, AssetId, Capsule, IntrinsicSignals
from .hub import (
    Bounty,
    BountyStatus,
    DuplicateAsset,
    Hub,
    HubConfig,
    InsufficientCredits,
    SelfVote,
)


class SimError(Exception):
    pass


class ConfigInvalid(SimError):
    pass


class AllZero(SimError):
    pass


class EmptyPopulation(SimError):
    pass


def gini(balances: Sequence[float]) -> float:
    """Mean absolute difference normalized by 2 n^2 mean."""
    values = sorted(float(b) for b in balances)
    if any(v < 0 for v in values):
        raise ValueError("balances must be non-negative")
    if not values or not any(v > 0 for v in values):
        raise AllZero("need at least one positive balance")
    n = len(values)
    total = sum(values)
    abs_diff_sum = 2.0 * sum((2 * (i + 1) - n - 1) * v for i, v in enumerate(values))
    return abs_diff_sum / (2.0 * n * n * (total / n))


def top_share(balances: Sequence[float], fraction: float) -> float:
    """Share of the total held by the ceil(fraction * n) largest balances."""
    if not balances:
        raise EmptyPopulation("no balances")
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction!r}")
    values = sorted((float(b) for b in balances), reverse=True)
    total = sum(values)
    if total <= 0:
        return 0.0
    k = math.ceil(fraction * len(values))
    return sum(values[:k]) / total


class StrategyKind(str, Enum):
    HONEST = "honest"
    CREDIT_FARMER = "credit_farmer"
    METADATA_FORGER = "metadata_forger"
    REUSER = "reuser"
    BOUNTY_HUNTER = "bounty_hunter"


@dataclass(frozen=True)
class StrategyParams:
    publication_rate: float  # expected publications per tick
    signal_policy: str  # measured | forged_optimal
    fetch_propensity: float
    bounty_rate: float
    report_probability: float = 0.0
    vote_probability: float = 0.0
    submits_to_bounties: bool = False


DEFAULT_PARAMS: dict[StrategyKind, StrategyParams] = {
    StrategyKind.HONEST: StrategyParams(
        publication_rate=0.02, signal_policy="measured", fetch_propensity=0.10,
        bounty_rate=0.01, report_probability=0.2, vote_probability=0.15,
        submits_to_bounties=True,
    ),
    StrategyKind.CREDIT_FARMER: StrategyParams(
        publication_rate=2.2, signal_policy="measured", fetch_propensity=0.0,
        bounty_rate=0.0,
    ),
    StrategyKind.METADATA_FORGER: StrategyParams(
        publication_rate=0.5, signal_policy="forged_optimal",
        fetch_propensity=0.0, bounty_rate=0.0,
    ),
    StrategyKind.REUSER: StrategyParams(
        publication_rate=0.01, signal_policy="measured", fetch_propensity=0.3,
        bounty_rate=0.02, report_probability=0.25, vote_probability=0.25,
    ),
    StrategyKind.BOUNTY_HUNTER: StrategyParams(
        publication_rate=0.1, signal_policy="measured", fetch_propensity=0.1,
        bounty_rate=0.0, report_probability=0.2, submits_to_bounties=True,
    ),
}

DEFAULT_AGENT_MIX: dict[StrategyKind, int] = {
    StrategyKind.HONEST: 100,
    StrategyKind.CREDIT_FARMER: 10,
    StrategyKind.METADATA_FORGER: 10,
    StrategyKind.REUSER: 30,
}


@dataclass
class ScenarioConfig:
    seed: int = 0
    ticks: int = 200
    agents: Mapping[StrategyKind, int] = field(
        default_factory=lambda: dict(DEFAULT_AGENT_MIX))
    farming_multiplier: float = 1.0
    topic_pool_size: int = 40
    zipf_exponent: float = 1.1
    unique_signature_rate: float = 0.5
    fetch_limit: int = 3
    bounty_resolve_after_ticks: int = 3
    start: datetime = field(
        default_factory=lambda: datetime(2026, 1, 1, tzinfo=timezone.utc))
    hub_config: HubConfig | None = None
    params: Mapping[StrategyKind, StrategyParams] | None = None
    check_conservation: bool = True

    def validate(self) -> None:
        if self.ticks < 0:
            raise ConfigInvalid("ticks must be non-negative")
        if self.topic_pool_size < 1:
            raise ConfigInvalid("topic_pool_size must be positive")
        if not 0.0 <= self.unique_signature_rate <= 1.0:
            raise ConfigInvalid("unique_signature_rate must lie in [0, 1]")
        if self.farming_multiplier <= 0:
            raise ConfigInvalid("farming_multiplier must be positive")
        for kind, count in self.agents.items():
            StrategyKind(kind)
            if count < 0:
                raise ConfigInvalid(f"negative agent count for {kind}")
        if self.ticks > 0 and sum(self.agents.values()) == 0:
            raise ConfigInvalid("scenario has ticks but no agents")


@dataclass(frozen=True)
class StrategySummary:
    agents: int
    assets: int
    mean_gdi: float
    mean_intrinsic: float
    mean_balance: float


@dataclass
class SimMetrics:
    never_called_fraction: float
    promotion_rate: float
    top_decile_credit_share: float
    gini: float
    bounty_resolution_rate: float
    per_strategy: dict[str, StrategySummary]

    def to_dict(self) -> dict:
        return {
            "never_called_fraction": self.never_called_fraction,
            "promotion_rate": self.promotion_rate,
            "top_decile_credit_share": self.top_decile_credit_share,
            "gini": self.gini,
            "bounty_resolution_rate": self.bounty_resolution_rate,
            "per_strategy": {
                kind: {
                    "agents": s.agents,
                    "assets": s.assets,
                    "mean_gdi": s.mean_gdi,
                    "mean_intrinsic": s.mean_intrinsic,
                    "mean_balance": s.mean_balance,
                }
                for kind, s in self.per_strategy.items()
            },
        }


@dataclass
class ScenarioResult:
    metrics: SimMetrics
    trace: list[dict]
    hub: Hub


def serialize_trace(trace: Sequence[Mapping]) -> bytes:
    lines = [json.dumps(event, sort_keys=True, separators=(",", ":"))
             for event in trace]
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


_FILLER_WORDS = (
    "async retry queue cache schema index worker shard token parser stream "
    "buffer metric probe router batch merge filter socket branch commit "
    "vector handler adapter cursor packet triage lattice kernel monitor "
    "replica quorum ledger digest anchor beacon circuit payload manifest "
    "snapshot rollback timeout backoff throttle mutex signal daemon broker "
    "channel consumer producer offset segment compact flush journal epoch "
    "leader follower gossip probejob heartbeat watchdog sweeper planner "
    "resolver binder loader linker bundler chunk caching eviction warmup "
    "failover fallback retryable idempotent checksum integrity replay "
    "ordering dedupe backlog drain spill overflow underrun saturate "
    "quiesce barrier latch fence slot bucket page frame arena pool heap "
    "stack trace span scope context tenant session cookie header route "
    "gateway ingress egress mesh proxy sidecar probeagent registrar "
    "catalog schema2 vault locker cipher nonce salt pepper shard2 region "
    "zone rack node cluster fleet quota budget meter gauge counter timer "
    "histogram percentile quantile window bucket2 decay boost damping"
).split()


@dataclass
class _SimAgent:
    agent_id: AgentId
    kind: StrategyKind
    params: StrategyParams
    published: list[AssetId] = field(default_factory=list)


class _Scenario:
    def __init__(self, config: ScenarioConfig) -> None:
        config.validate()
        self.config = config
        self.rng = random.Random(config.seed)
        hub_config = config.hub_config or HubConfig(fetch_limit=config.fetch_limit)
        self.hub = Hub(hub_config)
        self.trace: list[dict] = []
        self.agents: list[_SimAgent] = []
        self.unique_counter = 0
        # topic i is a namespaced three-token phrase; namespacing keeps
        # random filler from colliding with topic queries.
        self.topics = [f"err{i:03d} mod{i:03d} op{i:03d}"
                       for i in range(config.topic_pool_size)]
        weights = [1.0 / (rank + 1) ** config.zipf_exponent
                   for rank in range(config.topic_pool_size)]
        total = sum(weights)
        self.topic_weights = [w / total for w in weights]

    # -- demand model ---------------------------------------------------

    def draw_signature(self) -> tuple[str, bool]:
        """(signature, is_unique). Half the signatures are singletons."""
        if self.rng.random() < self.config.unique_signature_rate:
            self.unique_counter += 1
            return f"uniq{self.unique_counter:06d}", True
        index = self.rng.choices(range(len(self.topics)),
                                 weights=self.topic_weights)[0]
        return self.topics[index], False

    def filler(self, words: int) -> str:
        return " ".join(self.rng.choice(_FILLER_WORDS) for _ in range(words))

    # -- setup ------------------------------------------------------------

    def register_agents(self, now: datetime) -> None:
        params = dict(DEFAULT_PARAMS)
        if self.config.params:
            params.update(self.config.params)
        for kind, count in self.config.agents.items():
            kind = StrategyKind(kind)
            p = params[kind]
            if kind is StrategyKind.CREDIT_FARMER:
                p = replace(p, publication_rate=(
                    p.publication_rate * self.config.farming_multiplier))
            for i in range(count):
                agent_id = self.hub.register_agent(f"{kind.value}-{i:03d}", now)
                self.agents.append(_SimAgent(agent_id=agent_id, kind=kind, params=p))

    # -- actions ----------------------------------------------------------

    def _publish_capsule(self, agent: _SimAgent, now: datetime) -> None:
        if agent.kind is StrategyKind.CREDIT_FARMER:
            # volume play: fresh word salad every time evades the
            # near-duplicate filter while costing nothing to produce
            content = self.filler(20)
            trigger = f"farm {agent.agent_id} {self.filler(2)} n{len(agent.published)}"
            summary = self.filler(16)
            signals = IntrinsicSignals(
                confidence=0.9, success_streak=3, files_modified=1,
                lines_modified=10, trigger_count=2,
                summary_length=len(summary), reputation=50.0,
            )
        elif agent.kind is StrategyKind.METADATA_FORGER:
            # forgers keep discoverable content but pin every
            # self-reported field to its score-maximizing value
            signature = self.topics[self.rng.choices(
                range(len(self.topics)), weights=self.topic_weights)[0]]
            content = f"{signature} {self.filler(12)}"
            summary = self.filler(14)
            signals = OPTIMAL_SIGNALS
            trigger = f"errsig:{signature} {agent.agent_id[-4:]} n{len(agent.published)}"
        else:
            signature, _ = self.draw_signature()
            content = f"{signature} {self.filler(12)}"
            summary = self.filler(self.rng.randint(8, 18))
            signals = IntrinsicSignals(
                confidence=round(self.rng.uniform(0.55, 0.95), 3),
                success_streak=self.rng.randint(0, 6),
                files_modified=self.rng.randint(1, 4),
                lines_modified=self.rng.randint(5, 120),
                trigger_count=self.rng.randint(1, 3),
                summary_length=len(summary),
                reputation=50.0,
            )
            trigger = f"errsig:{signature} {agent.agent_id[-4:]} n{len(agent.published)}"
        capsule = Capsule(
            content=content, trigger_text=trigger, signals=signals,
            parent_genes=(), summary=summary, author=agent.agent_id,
        )
        try:
            record = self.hub.publish(agent.agent_id, capsule, now)
        except DuplicateAsset:
            self.trace.append({"agent": agent.agent_id, "action": "publish_rejected",
                               "reason": "duplicate"})
            return
        except InsufficientCredits:
            self.trace.append({"agent": agent.agent_id, "action": "publish_rejected",
                               "reason": "broke"})
            return
        agent.published.append(record.id)
        self.trace.append({"agent": agent.agent_id, "action": "publish",
                           "asset": str(record.id)[:16], "intrinsic":
                           round(record.components.intrinsic, 6)})

    def _fetch_and_use(self, agent: _SimAgent, now: datetime) -> None:
        query, _ = self.draw_signature()
        try:
            hits = self.hub.fetch(agent.agent_id, query, now)
        except InsufficientCredits:
            self.trace.append({"agent": agent.agent_id, "action": "fetch_rejected"})
            return
        self.trace.append({"agent": agent.agent_id, "action": "fetch",
                           "query": query.split()[0], "hits": len(hits)})
        if not hits:
            return
        top = hits[0].record
        if self.rng.random() < agent.params.report_probability:
            success = self.rng.random() < 0.95
            ack = self.hub.report_reuse(agent.agent_id, top.id, success, now)
            self.trace.append({"agent": agent.agent_id, "action": "report",
                               "asset": str(top.id)[:16], "success": success,
                               "reward": ack.reward})
        if self.rng.random() < agent.params.vote_probability:
            direction = "up" if self.rng.random() < 0.9 else "down"
            try:
                self.hub.vote(agent.agent_id, top.id, direction)
                self.trace.append({"agent": agent.agent_id, "action": "vote",
                                   "asset": str(top.id)[:16], "dir": direction})
            except SelfVote:
                pass

    def _maybe_post_bounty(self, agent: _SimAgent, now: datetime) -> None:
        if self.rng.random() >= agent.params.bounty_rate:
            return
        topic = self.topics[self.rng.choices(
            range(len(self.topics)), weights=self.topic_weights)[0]]
        amount = float(self.rng.choice((0, 20, 50, 80)))
        expires = now + timedelta(hours=self.rng.randint(5, 20))
        try:
            bounty = self.hub.post_bounty(
                agent.agent_id, f"solve {topic}", topic.split(), amount,
                expires, now)
        except InsufficientCredits:
            return
        self.trace.append({"agent": agent.agent_id, "action": "post_bounty",
                           "bounty": bounty.id, "amount": amount})

    def _maybe_submit(self, agent: _SimAgent, now: datetime) -> None:
        if not agent.params.submits_to_bounties or not agent.published:
            return
        if self.rng.random() >= 0.1:
            return
        target: Bounty | None = None
        for bounty in self.hub.bounties.values():
            if (bounty.status in (BountyStatus.OPEN, BountyStatus.MATCHED)
                    and bounty.poster != agent.agent_id
                    and bounty.expires_at > now
                    and not any(s.submitter == agent.agent_id
                                for s in bounty.submissions)):
                target = bounty
                break
        if target is None:
            return
        best = max(agent.published,
                   key=lambda aid: self.hub.records[aid].gdi)
        submission = self.hub.submit(target.id, agent.agent_id, best, now)
        self.trace.append({"agent": agent.agent_id, "action": "submit",
                           "bounty": target.id,
                           "submission": submission.submission_id})

    def _resolve_due_bounties(self, now: datetime) -> None:
        horizon = timedelta(hours=self.config.bounty_resolve_after_ticks)
        for bounty in list(self.hub.bounties.values()):
            if (bounty.status is BountyStatus.MATCHED
                    and now - bounty.created_at >= horizon
                    and bounty.expires_at > now):
                winner = self.hub.resolve_bounty(bounty.id, now)
                self.trace.append({"action": "resolve_bounty",
                                   "bounty": bounty.id,
                                   "winner": winner.submitter})

    def _act(self, agent: _SimAgent, now: datetime) -> None:
        rate = agent.params.publication_rate
        publishes = int(rate)
        if self.rng.random() < rate - publishes:
            publishes += 1
        for _ in range(publishes):
            self._publish_capsule(agent, now)
        if self.rng.random() < agent.params.fetch_propensity:
            self._fetch_and_use(agent, now)
        self._maybe_post_bounty(agent, now)
        self._maybe_submit(agent, now)

    # -- driver -----------------------------------------------------------

    def run(self) -> ScenarioResult:
        config = self.config
        if config.ticks == 0:
            return ScenarioResult(self._empty_metrics(), [], self.hub)
        self.register_agents(config.start)
        for tick in range(config.ticks):
            now = config.start + timedelta(hours=tick + 1)
            order = list(range(len(self.agents)))
            self.rng.shuffle(order)
            self.trace.append({"action": "tick", "tick": tick})
            for index in order:
                self._act(self.agents[index], now)
            self._resolve_due_bounties(now)
            report = self.hub.recompute_and_promote(now)
            self.trace.append({"action": "recompute", "tick": tick,
                               "promoted": len(report.promoted),
                               "demoted": len(report.demoted)})
            if config.check_conservation:
                self._assert_conservation()
        self.hub.verify_ledger()
        return ScenarioResult(self._metrics(), self.trace, self.hub)

    def _assert_conservation(self) -> None:
        ledger = self.hub.ledger
        balances = ledger.balances()
        total = sum(balances.values())
        if abs(total - ledger.net) > 1e-9:
            raise AssertionError("ledger conservation violated")
        if balances and min(balances.values()) < 0:
            raise AssertionError("negative balance")

    def _empty_metrics(self) -> SimMetrics:
        return SimMetrics(0.0, 0.0, 0.0, 0.0, 0.0, {})

    def _metrics(self) -> SimMetrics:
        records = list(self.hub.records.values())
        total_assets = len(records)
        never_called = sum(1 for r in records if r.counters.call_count == 0)
        promoted_ever = sum(1 for r in records if r.promotion_paid)
        balances = self.hub.ledger.balances()
        bounties = list(self.hub.bounties.values())
        settled = sum(1 for b in bounties if b.status is BountyStatus.SETTLED)

        kind_of = {a.agent_id: a.kind for a in self.agents}
        per: dict[str, dict] = {}
        for agent in self.agents:
            bucket = per.setdefault(agent.kind.value, {
                "agents": 0, "balance": 0.0, "gdi": [], "intrinsic": []})
            bucket["agents"] += 1
            bucket["balance"] += balances.get(agent.agent_id, 0.0)
        for record in records:
            kind = kind_of.get(record.author)
            if kind is None:
                continue
            bucket = per[kind.value]
            bucket["gdi"].append(record.gdi)
            bucket["intrinsic"].append(record.components.intrinsic)

        def mean(xs: list[float]) -> float:
            return sum(xs) / len(xs) if xs else 0.0

        per_strategy = {
            kind: StrategySummary(
                agents=data["agents"],
                assets=len(data["gdi"]),
                mean_gdi=mean(data["gdi"]),
                mean_intrinsic=mean(data["intrinsic"]),
                mean_balance=data["balance"] / data["agents"],
            )
            for kind, data in per.items()
        }
        values = list(balances.values())
        return SimMetrics(
            never_called_fraction=(never_called / total_assets
                                   if total_assets else 0.0),
            promotion_rate=(promoted_ever / total_assets if total_assets else 0.0),
            top_decile_credit_share=(top_share(values, 0.1) if values else 0.0),
            gini=(gini(values) if values and any(v > 0 for v in values) else 0.0),
            bounty_resolution_rate=(settled / len(bounties) if bounties else 0.0),
            per_strategy=per_strategy,
        )


def run_scenario(config: ScenarioConfig) -> ScenarioResult:
    """Run one scenario; fully deterministic given the config's seed."""
    return _Scenario(config).run()


def population_mean_intrinsic(result: ScenarioResult) -> float:
    records = list(result.hub.records.values())
    if not records:
        return 0.0
    return sum(r.components.intrinsic for r in records) / len(records)
