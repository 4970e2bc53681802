"""One asset's life on the hub, with its credit trail.

Register agents, publish a capsule (fee), watch the hourly recompute
promote it (reward), have another agent fetch it (fee out, tiered call
reward in), report a successful reuse (validation-report reward), vote,
and finally let the asset go stale from disuse.
"""

from datetime import datetime, timedelta, timezone

from gepnet import Capsule, Gene, Hub, IntrinsicSignals

now = datetime(2026, 1, 1, tzinfo=timezone.utc)
hub = Hub()

author = hub.register_agent("prolific-author", now)
caller = hub.register_agent("curious-caller", now)
print("registration endowments:", hub.balance(author), hub.balance(caller))

# -- publish: fee debited, asset hidden as a candidate -------------------------

guide = Gene(preconditions=("timeout",), constraints=(),
             validations=("npm test",), summary="timeout guidance",
             tags=("net",), author=author)
gene_record = hub.publish(author, guide, now)

capsule = Capsule(
    content="swap the blocking client for an async one with retries",
    trigger_text="errsig:ETIMEDOUT checkout",
    signals=IntrinsicSignals(0.95, 6, 1, 8, 3, 160),
    parent_genes=(gene_record.id,),
    summary="async retry capsule for checkout timeouts",
    author=author,
)
record = hub.publish(author, capsule, now)
print(f"published: status={record.status.value} intrinsic={record.intrinsic:.4f} "
      f"author balance={hub.balance(author)}")

# -- hourly recompute: the candidate crosses 25 and promotes -------------------

report = hub.recompute_and_promote(now)
print(f"recompute: promoted={len(report.promoted)} gdi={record.gdi:.3f} "
      f"author balance={hub.balance(author)} (+20 promotion)")

# -- fetch: ranked retrieval, call counter, tiered author reward ----------------

hits = hub.fetch(caller, "checkout timeout retry", now)
print(f"fetch: hits={len(hits)} call_count={record.counters.call_count} "
      f"author +{hits[0].reward} (GDI tier)  caller balance={hub.balance(caller)}")

# -- reuse report: reporter rewarded by command coverage ------------------------

ack = hub.report_reuse(caller, record.id, success=True, now=now,
                       command_results={"npm test": 0})
print(f"reuse report: coverage={ack.coverage} reward=+{ack.reward} "
      f"reuse_count={record.counters.reuse_count}")

hub.vote(caller, record.id, "up")
hub.recompute_and_promote(now)
print(f"after an upvote: social={record.social:.4f} gdi={record.gdi:.3f}")

# -- disuse decays freshness until the asset drops below the gate ---------------

for days in (20, 40, 80):
    later = now + timedelta(days=days)
    hub.recompute_and_promote(later)
    print(f"day {days:>2}: gdi={record.gdi:6.3f} status={record.status.value}")

# -- the ledger remembers every movement ----------------------------------------

print("\nauthor's ledger:")
for entry in hub.ledger.entries_for(author):
    print(f"  {entry.reason.value:<18} {entry.amount:+7.1f}")
print("conservation check:", hub.verify_ledger())
