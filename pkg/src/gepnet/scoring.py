"""Genetic Desirability Index scoring.

The composite GDI is a weighted sum of four sub-scores, each in [0, 1]:
intrinsic (frozen at publication from self-reported signals), usage,
social and freshness. The weighted sum is multiplied by 100 so the
promotion threshold of 25 and typical scores in the 20-50 range live on
the conventional 0-100 scale. ``refit_weights`` recovers a weight vector
from observed (components, score) samples by ordinary least squares.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from datetime import datetime
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .core import IntrinsicSignals

SECONDS_PER_DAY = 86400.0


class ScoringError(Exception):
    """Base class for scoring errors."""


class UnknownField(ScoringError):
    pass


class DomainViolation(ScoringError):
    pass


class RankDeficient(ScoringError):
    pass


class InsufficientSamples(ScoringError):
    pass


def _check_unit(name: str, value: float) -> float:
    if not math.isfinite(value) or not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return float(value)


@dataclass(frozen=True)
class GdiComponents:
    """The four sub-scores. Out-of-range inputs are errors, never clamped."""

    intrinsic: float
    usage: float
    social: float
    freshness: float

    def __post_init__(self) -> None:
        for name in ("intrinsic", "usage", "social", "freshness"):
            _check_unit(name, getattr(self, name))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.intrinsic, self.usage, self.social, self.freshness)

    @classmethod
    def _unchecked(cls, intrinsic: float, usage: float, social: float,
                   freshness: float) -> "GdiComponents":
        # Hot-path constructor for the hub's hourly recompute loop, where
        # every input is produced by a scoring function already bounded
        # to [0, 1].
        self = object.__new__(cls)
        object.__setattr__(self, "intrinsic", intrinsic)
        object.__setattr__(self, "usage", usage)
        object.__setattr__(self, "social", social)
        object.__setattr__(self, "freshness", freshness)
        return self


@dataclass(frozen=True)
class GdiWeights:
    w_intrinsic: float
    w_usage: float
    w_social: float
    w_freshness: float
    intercept: float = 0.0

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.w_intrinsic, self.w_usage, self.w_social,
                self.w_freshness, self.intercept)

    def to_dict(self) -> dict:
        return {
            "w_intrinsic": self.w_intrinsic,
            "w_usage": self.w_usage,
            "w_social": self.w_social,
            "w_freshness": self.w_freshness,
            "intercept": self.intercept,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, float]) -> "GdiWeights":
        return cls(
            w_intrinsic=float(data["w_intrinsic"]),
            w_usage=float(data["w_usage"]),
            w_social=float(data["w_social"]),
            w_freshness=float(data["w_freshness"]),
            intercept=float(data.get("intercept", 0.0)),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "GdiWeights":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


#: The platform's published weight vector.
OFFICIAL_WEIGHTS = GdiWeights(0.35, 0.30, 0.20, 0.15, 0.0)
#: Weights recovered by regression against observed scores.
REFITTED_WEIGHTS = GdiWeights(0.35, 0.29, 0.17, 0.10, -1.38)

WEIGHT_PRESETS: dict[str, GdiWeights] = {
    "official": OFFICIAL_WEIGHTS,
    "refitted": REFITTED_WEIGHTS,
}


@dataclass
class UsageCounters:
    """Hub-side activity counters for one asset.

    ``reuse_count`` is tracked independently of ``call_count``; the two are
    separate event streams and no ordering between them is enforced.
    """

    call_count: int = 0
    view_count: int = 0
    reuse_count: int = 0
    upvotes: int = 0
    downvotes: int = 0
    fork_count: int = 0
    created_at: datetime | None = None
    last_activity: datetime | None = None

    def __post_init__(self) -> None:
        for name in ("call_count", "view_count", "reuse_count",
                     "upvotes", "downvotes", "fork_count"):
            value = getattr(self, name)
            if value < 0:
                raise ValueError(f"{name} must be non-negative, got {value!r}")
        if (self.created_at is not None and self.last_activity is not None
                and self.last_activity < self.created_at):
            raise ValueError("last_activity precedes created_at")
        last = self.last_activity or self.created_at
        # POSIX-seconds mirror of last_activity, kept so the hub's hourly
        # recompute avoids datetime arithmetic per record.
        self.activity_ts: float | None = last.timestamp() if last else None

    def touch(self, now: datetime) -> None:
        """Record activity (creation, call or reuse) at ``now``."""
        if self.last_activity is None or now > self.last_activity:
            self.last_activity = now
            self.activity_ts = now.timestamp()


def intrinsic_terms(signals: IntrinsicSignals) -> dict[str, float]:
    """The six normalized terms averaged by ``intrinsic_score``."""
    blast = signals.files_modified * signals.lines_modified
    return {
        "confidence": min(max(signals.confidence, 0.0), 1.0),
        "streak": min(signals.success_streak / 10.0, 1.0),
        "blast": max(0.0, 1.0 - blast / 1000.0),
        "trigger": min(signals.trigger_count / 5.0, 1.0),
        "summary": min(signals.summary_length / 200.0, 1.0),
        "reputation": min(max(signals.reputation / 100.0, 0.0), 1.0),
    }


def intrinsic_score(signals: IntrinsicSignals) -> float:
    """Arithmetic mean of the six normalized signal terms; always in [0, 1]."""
    terms = intrinsic_terms(signals)
    return sum(terms.values()) / 6.0


def usage_score(counters: UsageCounters) -> float:
    """Saturating exponential in calls and reuses, reuse weighted double.

    Zero at no activity, strictly increasing in both counters, approaches
    1 for hot assets.
    """
    activity = counters.call_count + 2 * counters.reuse_count
    return 1.0 - math.exp(-activity / 20.0)


def social_score(upvotes: int, downvotes: int, z: float = 1.96) -> float:
    """Wilson score lower bound on the upvote proportion; 0 with no votes."""
    total = upvotes + downvotes
    if total == 0:
        return 0.0
    p = upvotes / total
    z2 = z * z
    center = p + z2 / (2 * total)
    margin = z * math.sqrt((p * (1 - p) + z2 / (4 * total)) / total)
    bound = (center - margin) / (1 + z2 / total)
    return max(0.0, bound)


def freshness_score(now: datetime, counters: UsageCounters,
                    half_life_days: float = 30.0) -> float:
    """Exponential decay since the last activity, 30-day half-life."""
    last = counters.last_activity or counters.created_at
    if last is None:
        return 1.0
    if now < last:
        raise ValueError("now precedes last_activity")
    days = (now - last).total_seconds() / SECONDS_PER_DAY
    return math.exp(-math.log(2.0) * days / half_life_days)


def composite_gdi(components: GdiComponents, weights: GdiWeights) -> float:
    """100 times the weighted component sum, plus the intercept."""
    weighted = (
        weights.w_intrinsic * components.intrinsic
        + weights.w_usage * components.usage
        + weights.w_social * components.social
        + weights.w_freshness * components.freshness
    )
    return 100.0 * weighted + weights.intercept


def refit_weights(
    samples: Sequence[tuple[GdiComponents, float]],
) -> tuple[GdiWeights, float]:
    """Recover weights from (components, observed score) samples by OLS.

    The regression is scale-agnostic: the fitted weights live on whatever
    scale the observed scores use. Raises ``InsufficientSamples`` below 5
    samples and ``RankDeficient`` when the design matrix (components plus
    intercept column) is singular.
    """
    if len(samples) < 5:
        raise InsufficientSamples(f"need at least 5 samples, got {len(samples)}")
    design = np.array(
        [[*components.as_tuple(), 1.0] for components, _ in samples], dtype=float
    )
    observed = np.array([score for _, score in samples], dtype=float)
    if np.linalg.matrix_rank(design) < 5:
        raise RankDeficient("component matrix is rank deficient")
    solution, _, _, _ = np.linalg.lstsq(design, observed, rcond=None)
    predicted = design @ solution
    ss_res = float(np.sum((observed - predicted) ** 2))
    ss_tot = float(np.sum((observed - observed.mean()) ** 2))
    if ss_tot == 0.0:
        r_squared = 1.0 if ss_res < 1e-12 else 0.0
    else:
        r_squared = 1.0 - ss_res / ss_tot
    weights = GdiWeights(*(float(v) for v in solution))
    return weights, r_squared


_ABLATION_FIELDS = {
    "confidence": ("confidence",),
    "success_streak": ("success_streak",),
    "blast": ("files_modified", "lines_modified"),
    "trigger_count": ("trigger_count",),
    "summary_length": ("summary_length",),
}


def intrinsic_ablation(
    base: IntrinsicSignals, degrade: str, worst_value
) -> tuple[float, float, float]:
    """Degrade one signal and report (base score, degraded score, delta).

    ``degrade`` names one of confidence, success_streak, blast (which takes
    a (files, lines) pair), trigger_count or summary_length.
    """
    if degrade not in _ABLATION_FIELDS:
        raise UnknownField(f"cannot ablate {degrade!r}")
    fields = _ABLATION_FIELDS[degrade]
    if degrade == "blast":
        try:
            files, lines = worst_value
        except (TypeError, ValueError) as exc:
            raise DomainViolation("blast ablation takes a (files, lines) pair") from exc
        values = {"files_modified": int(files), "lines_modified": int(lines)}
    else:
        values = {fields[0]: worst_value}
    try:
        degraded = replace(base, **values)
    except (ValueError, TypeError) as exc:
        raise DomainViolation(str(exc)) from exc
    score_base = intrinsic_score(base)
    score_degraded = intrinsic_score(degraded)
    return score_base, score_degraded, score_degraded - score_base


_SIGNAL_FIELDS = ("confidence", "success_streak", "files_modified",
                  "lines_modified", "trigger_count", "summary_length",
                  "reputation")


def sensitivity_sweep(
    base: IntrinsicSignals, field: str, values: Sequence
) -> list[tuple[object, float]]:
    """Intrinsic score with only ``field`` replaced, one entry per value."""
    if field not in _SIGNAL_FIELDS:
        raise UnknownField(f"unknown signal field {field!r}")
    out = []
    for value in values:
        try:
            varied = replace(base, **{field: value})
        except (ValueError, TypeError) as exc:
            raise DomainViolation(str(exc)) from exc
        out.append((value, intrinsic_score(varied)))
    return out
