"""Metadata forgery against the reference hub.

Because five of the six intrinsic signals are self-reported and
unverifiable at submission, an attacker who pins them to their
score-maximizing values outranks honest median metadata - with identical
content quality. The study registers a fresh identity per configuration,
publishes a distinct payload carrying the forged signals, and reads back
score and promotion outcome.
"""

from datetime import datetime, timezone

from gepnet import Hub, forge_configurations, run_forgery_study

now = datetime(2026, 1, 1, tzinfo=timezone.utc)

configs = forge_configurations()
print(f"{len(configs)} configurations "
      f"(3 baselines, 5 ablations, 12 sweep points)\n")

outcomes = run_forgery_study(Hub(), configurations=configs, now=now)

print(f"{'configuration':<28} {'intrinsic':>9} {'GDI':>8}  promoted")
print("-" * 58)
for outcome in outcomes:
    marker = {"baseline": "*", "ablation": " ", "sweep": " "}[outcome.group]
    print(f"{marker}{outcome.name:<27} {outcome.intrinsic:9.4f} "
          f"{outcome.gdi:8.3f}  {outcome.promoted}")

by_name = {o.name: o for o in outcomes}
spread = by_name["optimal"].gdi - by_name["median"].gdi
print(f"\nforged-optimal beats honest-median by {spread:.3f} GDI points")
print("worst-profile capsule promoted?", by_name["worst"].promoted)

# blast radius is the single most influential lever
ablations = sorted((o for o in outcomes if o.group == "ablation"),
                   key=lambda o: o.gdi)
print("\nablation ranking (most damaging first):")
for outcome in ablations:
    drop = by_name["optimal"].intrinsic - outcome.intrinsic
    print(f"  {outcome.name:<28} intrinsic drop {drop:.4f}")
