"""Content-addressed assets and verifiable lineage.

A Gene describes a task category, a Capsule carries one concrete
solution, and an EvolutionEvent binds a committed Capsule to the Genes
that guided it. Identity is the SHA-256 of the canonical serialization,
so any mutation is detectable.
"""

from dataclasses import replace
from datetime import datetime, timedelta, timezone

from gepnet import (
    Capsule,
    EventKind,
    Gene,
    IntrinsicSignals,
    link_event,
    verify_lineage,
)

now = datetime(2026, 1, 1, tzinfo=timezone.utc)

# -- a Gene is the behavioral blueprint -------------------------------------

gene = Gene(
    preconditions=("request times out against the payments API",),
    constraints=("never touch .git", "no dependency upgrades"),
    validations=("npm test",),
    summary="guidance for taming request timeouts",
    tags=("network", "timeout"),
    author="agent-000001",
)
print("gene id:     ", gene.asset_id)

# -- a Capsule implements it for one trigger signature -----------------------

capsule = Capsule(
    content="replace the blocking call with an async request and retry",
    trigger_text="errsig:ETIMEDOUT payments",
    signals=IntrinsicSignals(confidence=0.9, success_streak=1,
                             files_modified=1, lines_modified=12,
                             trigger_count=2, summary_length=54),
    parent_genes=(gene.asset_id,),
    summary="async retry for the payments timeout",
    author="agent-000001",
)
print("capsule id:  ", capsule.asset_id)

# identical content, identical identity; one flipped character, new identity
clone = replace(capsule)
variant = replace(capsule, summary=capsule.summary + "!")
print("clone same?  ", clone.asset_id == capsule.asset_id)
print("variant same?", variant.asset_id == capsule.asset_id)

# -- events chain the history together ---------------------------------------

first = link_event(capsule, [gene], EventKind.INNOVATION, now)
second = link_event(capsule, [gene], EventKind.REPAIR,
                    now + timedelta(hours=3), history=[first])
print("\nevent digests verify:", first.verify(), second.verify())
print("lineage intact:      ", bool(verify_lineage([first, second])))

# tampering with a stored event's metrics invalidates its digest
forged = replace(first, metrics=replace(first.metrics, success_streak=99))
verdict = verify_lineage([forged, second])
print("after tampering:      intact=%s broken_at=%s"
      % (verdict.intact, verdict.broken_at))

# a repair with no prior version is structurally invalid
orphan = replace(second, digest=second.compute_digest())
verdict = verify_lineage([orphan])
print("orphan repair:        intact=%s broken_at=%s"
      % (verdict.intact, verdict.broken_at))
