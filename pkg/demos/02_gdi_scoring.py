"""The Genetic Desirability Index, piece by piece.

Four sub-scores in [0, 1] (intrinsic, usage, social, freshness) are
combined as 100 * (0.35 I + 0.30 U + 0.20 S + 0.15 F). Promotion needs
25. The intrinsic score is the mean of six normalized self-reported
signals, which is exactly what makes it forgeable; the ablation and
sweep below show where the leverage is.
"""

from datetime import datetime, timedelta, timezone

import numpy as np

from gepnet import (
    GdiComponents,
    IntrinsicSignals,
    OFFICIAL_WEIGHTS,
    REFITTED_WEIGHTS,
    UsageCounters,
    composite_gdi,
    freshness_score,
    intrinsic_ablation,
    intrinsic_score,
    refit_weights,
    sensitivity_sweep,
    social_score,
    usage_score,
)

now = datetime(2026, 1, 1, tzinfo=timezone.utc)

# -- the three reference signal profiles --------------------------------------

worst = IntrinsicSignals(0.10, 0, 8, 300, 1, 50)
median = IntrinsicSignals(0.93, 323, 2, 30, 3, 139)
optimal = IntrinsicSignals(0.99, 10, 1, 5, 5, 200)

for name, signals in (("worst", worst), ("median", median), ("optimal", optimal)):
    print(f"intrinsic({name:<7}) = {intrinsic_score(signals):.6f}")

# -- usage, social and freshness react to hub activity ------------------------

counters = UsageCounters(call_count=20, reuse_count=4, created_at=now,
                         last_activity=now)
print("\nusage(20 calls, 4 reuses) =", round(usage_score(counters), 5))
print("social(10 up, 0 down)     =", round(social_score(10, 0), 5))
print("social(0 votes)           =", social_score(0, 0))
for days in (0, 30, 60):
    fr = freshness_score(now + timedelta(days=days), counters)
    print(f"freshness after {days:>2} idle days = {fr:.3f}")

# -- the composite and the promotion gate --------------------------------------

for name, signals in (("worst", worst), ("median", median), ("optimal", optimal)):
    fresh = GdiComponents(intrinsic_score(signals), 0.0, 0.0, 1.0)
    gdi = composite_gdi(fresh, OFFICIAL_WEIGHTS)
    print(f"fresh {name:<7} GDI = {gdi:7.3f}  promoted at 25: {gdi >= 25}")

# -- which signal buys the most score? -----------------------------------------

print("\nleave-one-out ablation from the optimal profile:")
for field, worst_value in (("blast", (8, 300)), ("trigger_count", 1),
                           ("summary_length", 50), ("success_streak", 0),
                           ("confidence", 0.10)):
    _, _, delta = intrinsic_ablation(optimal, field, worst_value)
    print(f"  degrade {field:<15} delta = {delta:+.5f}")

print("\nstreak sweep off the median profile:")
for value, score in sensitivity_sweep(median, "success_streak", [1, 4, 13]):
    print(f"  streak={value:<3} intrinsic={score:.4f}")

# -- recovering the weights from observed scores -------------------------------

rng = np.random.default_rng(0)
rows = rng.uniform(0, 1, size=(1000, 4))
samples = [
    (GdiComponents(*row),
     float(np.dot(REFITTED_WEIGHTS.as_tuple()[:4], row)
           + REFITTED_WEIGHTS.intercept))
    for row in rows
]
weights, r_squared = refit_weights(samples)
print("\nrefit from noise-free observations:")
print("  recovered:", tuple(round(w, 4) for w in weights.as_tuple()))
print("  r_squared:", round(r_squared, 6))
