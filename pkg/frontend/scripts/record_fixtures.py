#!/usr/bin/env python3
"""Record client-test fixtures from a real backend server.

Boots the API server in-process (same harness the backend tests use), drives
a scripted story over plain HTTP, and captures:

  events.json          every mutation event as delivered on the wire
  delivery_dedup.json  the same stream with periodic re-deliveries
  delivery_gap.json    the same stream with one event dropped
  checkpoints.json     board+trash+team snapshots at chosen sequence numbers
  dashboard.json       the four dashboard payloads at the final state
  accounts.json        one admin and one plain-user account document

Run from anywhere:  python3 scripts/record_fixtures.py
"""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

FRONTEND = Path(__file__).resolve().parents[1]
REPO = FRONTEND.parent
sys.path.insert(0, str(REPO / "tests"))

from harness import ADMIN_EMAIL, USER_EMAIL, EventStream, start_server  # noqa: E402

FIXTURES = FRONTEND / "tests" / "fixtures"


def checkpoint(live) -> dict:
    api = live.api()
    seq = api.get("/api/health").json()["last_event_seq"]
    board = api.get("/api/tasks?limit=500").json()["tasks"]
    trash = api.get("/api/trash").json()["tasks"]
    users = api.get("/api/team").json()["users"]
    return {"seq": seq, "tasks": board + trash, "users": users}


def run_story(live) -> dict:
    admin = live.api()
    user = live.api(token=live.user_token)
    uma_id = user.get("/api/me").json()["id"]
    admin_id = admin.get("/api/me").json()["id"]

    def create(api, title, priority, **extra):
        resp = api.post("/api/tasks", json={"title": title, "priority": priority, **extra})
        assert resp.status_code == 201, resp.text
        return resp.json()

    def patch(api, task, fields):
        resp = api.patch(
            f"/api/tasks/{task['id']}",
            json=fields,
            headers={"If-Match": str(task["revision"])},
        )
        assert resp.status_code == 200, resp.text
        return resp.json()

    t1 = create(admin, "Draft landing copy", "high")
    t2 = create(admin, "Wire payment flow", "medium", assignee_ids=[uma_id])
    t3 = create(admin, "Fix login crash", "high", assignee_ids=[admin_id, uma_id])
    t4 = create(admin, "Refresh brand palette", "low")
    t5 = create(user, "Ship weekly digest", "medium")
    t6 = create(user, "Tune cache TTLs", "low", assignee_ids=[uma_id])
    checkpoints = [checkpoint(live)]

    t2 = patch(user, t2, {"status": "in_progress"})
    t3 = patch(admin, t3, {"status": "in_progress"})
    t3 = patch(admin, t3, {"status": "done"})
    t1 = patch(admin, t1, {"title": "Draft landing copy v2", "due_date": "2025-04-01"})
    t5 = patch(admin, t5, {"status": "done"})

    resp = admin.post(
        "/api/team",
        json={
            "name": "Noor Vega",
            "email": "noor@example.com",
            "password": "noor-pass-01",
            "role": "user",
        },
    )
    assert resp.status_code == 201, resp.text
    noor = resp.json()
    assert admin.patch(f"/api/team/{noor['id']}", json={"role": "admin"}).status_code == 200
    assert admin.patch(f"/api/team/{noor['id']}", json={"active": False}).status_code == 200
    checkpoints.append(checkpoint(live))

    assert user.delete(f"/api/tasks/{t4['id']}").status_code == 200
    assert user.delete(f"/api/tasks/{t5['id']}").status_code == 200
    assert user.post(f"/api/trash/{t5['id']}/restore").status_code == 200
    assert admin.delete(f"/api/trash/{t4['id']}").status_code == 200
    assert user.delete(f"/api/tasks/{t2['id']}").status_code == 200  # stays trashed
    resp = user.post(
        f"/api/tasks/{t6['id']}/assets",
        files={"file": ("cache-notes.txt", b"ttl sweep results\n", "text/plain")},
    )
    assert resp.status_code == 201, resp.text
    checkpoints.append(checkpoint(live))

    final = checkpoints[-1]
    dashboard = {
        "summary": admin.get("/api/dashboard/summary").json(),
        "workload": admin.get("/api/dashboard/workload").json(),
        "priority": admin.get("/api/dashboard/priority").json(),
        "activity": admin.get("/api/dashboard/activity?n=20").json(),
    }
    accounts = {
        "admin": admin.get("/api/me").json(),
        "user": user.get("/api/me").json(),
    }
    assert accounts["admin"]["email"] == ADMIN_EMAIL
    assert accounts["user"]["email"] == USER_EMAIL

    stream = EventStream(live.base_url, live.admin_token, after_seq=0)
    events = [stream.next_event() for _ in range(final["seq"])]
    stream.close()
    assert [e["seq"] for e in events] == list(range(1, final["seq"] + 1))

    # Delivery variants for the reducer's dedup and gap handling.
    dedup = []
    for event in events:
        dedup.append(event)
        if event["seq"] % 5 == 0:
            dedup.append(event)
    dropped = final["seq"] // 2
    gap = [e for e in events if e["seq"] != dropped]

    return {
        "events.json": events,
        "delivery_dedup.json": dedup,
        "delivery_gap.json": {"dropped_seq": dropped, "events": gap},
        "checkpoints.json": checkpoints,
        "dashboard.json": dashboard,
        "accounts.json": accounts,
    }


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        live = start_server(Path(tmp) / "data")
        try:
            fixtures = run_story(live)
        finally:
            live.stop()
    FIXTURES.mkdir(parents=True, exist_ok=True)
    for name, doc in fixtures.items():
        path = FIXTURES / name
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {path.relative_to(FRONTEND)}")


if __name__ == "__main__":
    main()
