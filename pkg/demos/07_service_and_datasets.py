"""The service surface and the persistence formats.

Every hub operation is reachable over HTTP-style endpoints whose
responses depend only on (state, request, injected clock). Registry
state round-trips through line-delimited records whose field names match
the platform's table layouts, so real extracts can be replayed.
"""

import json
import tempfile
from datetime import datetime, timedelta, timezone
from pathlib import Path

from gepnet import Hub, IntrinsicSignals, Service
from gepnet.core import to_rfc3339
from gepnet.datasets import ecdf_columns, export_hub, import_dataset, read_records

now = datetime(2026, 1, 1, tzinfo=timezone.utc)
now_text = to_rfc3339(now)
service = Service(Hub(), clock=lambda: now)


def call(method, path, query=None, body=None):
    status, payload = service.handle(method, path, query, body)
    print(f"{method} {path} -> {status}")
    return payload


# -- drive the protocol end to end over the endpoints ---------------------------

author = call("POST", "/agents", body={"name": "endpoint-author"})["agent_id"]
caller = call("POST", "/agents", body={"name": "endpoint-caller"})["agent_id"]

record = call("POST", "/assets", body={
    "author": author, "kind": "capsule", "now": now_text,
    "asset": {
        "content": "normalize retry jitter before the second attempt",
        "trigger_text": "errsig:ETIMEDOUT jitter",
        "signals": IntrinsicSignals(0.97, 8, 1, 6, 4, 190).to_payload(),
        "parent_genes": [],
        "summary": "jittered retry capsule",
    }})

call("POST", "/admin/recompute", query={"now": now_text})
hits = call("GET", "/assets", query={"query": "retry jitter",
                                     "caller": caller, "now": now_text})
call("POST", f"/assets/{record['asset_id']}/reuse",
     body={"caller": caller, "success": True, "now": now_text})

bounty = call("POST", "/bounties", body={
    "poster": caller, "title": "need a jitter fix", "signals": ["jitter"],
    "amount": 40.0, "expires_at": to_rfc3339(now + timedelta(days=1)),
    "now": now_text})
call("POST", f"/bounties/{bounty['bounty_id']}/submissions",
     body={"submitter": author, "asset_id": record["asset_id"], "now": now_text})
winner = call("POST", f"/bounties/{bounty['bounty_id']}/resolve",
              body={"now": to_rfc3339(now + timedelta(hours=1))})
print("bounty winner:", winner["winner"], "payout:", winner["amount"])

ledger = call("GET", f"/agents/{author}/ledger")
print("\nauthor ledger:")
for entry in ledger["entries"]:
    print(f"  {entry['reason']:<18} {entry['amount']:+7.1f}")

# -- registry state round-trips through the dataset files ------------------------

with tempfile.TemporaryDirectory() as scratch:
    out = Path(scratch)
    counts = export_hub(service.hub, out)
    print("\nexported:", counts)

    line = (out / "asset_detail.jsonl").read_text().splitlines()[0]
    row = json.loads(line)
    print("asset_detail fields (first 12):", list(row)[:12])

    registry = import_dataset(out / "asset_detail.jsonl")
    for asset_id, imported, documented in registry.recompute_documented():
        print(f"imported gdi={imported:.3f}  documented recompute={documented:.3f}")

    submissions = list(read_records(out / "bounty_submissions.jsonl",
                                    "bounty_submissions"))
    print("submission record:", {k: submissions[0][k]
                                 for k in ("bounty_id", "status")})

    scores = [r[2] for r in registry.recompute_documented()]
    print("ecdf columns:", ecdf_columns(scores))
