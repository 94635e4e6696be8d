"""The debiased two-stage annotation protocol, end to end in process:
score-bin task sampling, the HTTP service, judgment validation, the
append-only event log, and export back into the corpus format.
"""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from softattr.corpus import Review, ReviewStore, Item, ItemCatalog, SoftAttribute
from softattr.service import ServiceState, build_app
from softattr.textrank import (IndexMode, build_index, score_item_centric,
                               score_review_centric)

# --- a small world: 14 items, reviews mentioning two soft attributes --------
items = [Item(id=f"m{k:02d}", title=f"Movie {k:02d}", seen_count=5 + 3 * (k % 5),
              rating_count=50) for k in range(14)]
catalog = ItemCatalog(items)
texts = ["scary and tense", "funny, light", "scary chase", "warm and funny",
         "a scary house", "quiet romance", "scary storm", "deadpan funny",
         "gentle", "scary docks", "slapstick funny", "bleak", "funny heist",
         "scary tunnels"]
reviews = ReviewStore([Review(id=f"r{k}", item_id=f"m{k:02d}", text=texts[k])
                       for k in range(14)])
attributes = [SoftAttribute("scary", "scary"), SoftAttribute("funny", "funny")]

index_ic = build_index(reviews, IndexMode.ITEM_DOCS)
index_rc = build_index(reviews, IndexMode.REVIEW_DOCS)
rankings = {a.id: {"tb-ic": score_item_centric(a, index_ic, catalog.ids()),
                   "tb-rc": score_review_centric(a, index_rc, catalog.ids())}
            for a in attributes}

log_path = Path(tempfile.mkdtemp(prefix="softattr-demo-")) / "events.jsonl"
state = ServiceState(catalog, attributes, rankings, log_path=log_path,
                     min_seen=11, seed=0)
client = TestClient(build_app(state))

# --- stage 1: a rater marks seen items --------------------------------------
session = client.post("/sessions", json={"rater_id": "worker-7"}).json()
sid = session["session_id"]
print(f"created session {sid[:8]}... in stage {session['stage']}")

few = client.post(f"/sessions/{sid}/seen",
                  json={"item_ids": [f"m{k:02d}" for k in range(5)]}).json()
print(f"after 5 seen items: status={few['status']} stage={few['stage']}")

rest = client.post(f"/sessions/{sid}/seen",
                   json={"item_ids": [f"m{k:02d}" for k in range(14)]}).json()
print(f"after all 14:       status={rest['status']} stage={rest['stage']}")

# --- stage 2: serve a task, try to cheat, then submit properly --------------
task = client.get(f"/sessions/{sid}/task").json()
print(f"\ntask {task['task_id']}: attribute '{task['attribute']}', "
      f"anchor {task['anchor']['id']}, {len(task['candidates'])} candidates")

ids = [c["id"] for c in task["candidates"]]
bad = client.post(f"/sessions/{sid}/judgments", json={
    "task_id": task["task_id"], "less": ids[:-1], "same": [], "more": []})
print(f"dropping a candidate -> {bad.status_code} {bad.json()['code']} "
      f"{bad.json()['details']}")

ok = client.post(f"/sessions/{sid}/judgments", json={
    "task_id": task["task_id"], "less": ids[:3], "same": ids[3:6],
    "more": ids[6:]})
print(f"valid partition     -> {ok.status_code} seq={ok.json()['seq']}")

# --- the event log is the source of truth -----------------------------------
print(f"\nevent log at {log_path}:")
for line in log_path.read_text().splitlines():
    event = json.loads(line)
    print(f"  #{event['seq']} {event['type']}")

replayed = ServiceState(catalog, attributes, rankings, log_path=log_path,
                        min_seen=11, seed=0)
print("replay reconstructs the state exactly:",
      replayed.snapshot() == state.snapshot())

print("\nexported judgment stream (corpus judgments.jsonl format):")
print(client.get("/export/judgments").text.strip())
