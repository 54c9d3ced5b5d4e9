"""Hand-rolled recounts of the dashboard numbers, used to cross-check the
real aggregation code.

Everything here works on serialized task/account dicts and is written as
plain loops (including an O(n^2) selection pass for the activity feed), on
purpose: the point is a second, independent derivation of the same answers,
not speed or elegance.
"""

from __future__ import annotations

import random
from datetime import date, datetime, timedelta, timezone

from wms.domain import (
    ActivityEntry,
    ActivityKind,
    Priority,
    Role,
    Task,
    TaskStatus,
    UserAccount,
)

UNASSIGNED = "unassigned"


def brute_summary(task_docs: list[dict]) -> dict:
    total = 0
    todo = 0
    doing = 0
    done = 0
    for t in task_docs:
        if t["trashed"]:
            continue
        total = total + 1
        if t["status"] == "todo":
            todo = todo + 1
        if t["status"] == "in_progress":
            doing = doing + 1
        if t["status"] == "done":
            done = done + 1
    if total == 0:
        ratio = 0.0
    else:
        ratio = done / total
    return {
        "total_tasks": total,
        "todo_count": todo,
        "in_progress_count": doing,
        "done_count": done,
        "completion_ratio": ratio,
    }


def brute_priority(task_docs: list[dict]) -> dict:
    high = 0
    medium = 0
    low = 0
    for t in task_docs:
        if t["trashed"]:
            continue
        if t["priority"] == "high":
            high = high + 1
        if t["priority"] == "medium":
            medium = medium + 1
        if t["priority"] == "low":
            low = low + 1
    return {"high_count": high, "medium_count": medium, "low_count": low}


def brute_workload(task_docs: list[dict], account_docs: list[dict]) -> list[dict]:
    counts: dict[str, dict[str, int]] = {}

    def row_for(key: str) -> dict[str, int]:
        if key not in counts:
            counts[key] = {"todo": 0, "in_progress": 0, "done": 0}
        return counts[key]

    for acct in account_docs:
        if acct["active"]:
            row_for(acct["id"])
    for t in task_docs:
        if t["trashed"]:
            continue
        if len(t["assignee_ids"]) == 0:
            row_for(UNASSIGNED)[t["status"]] += 1
        else:
            for assignee in t["assignee_ids"]:
                row_for(assignee)[t["status"]] += 1

    names = {}
    for acct in account_docs:
        names[acct["id"]] = acct["name"]

    rows = []
    for key, c in counts.items():
        if key == UNASSIGNED:
            name = "(unassigned)"
        elif key in names:
            name = names[key]
        else:
            name = "(unknown)"
        rows.append(
            {
                "assignee_id": key,
                "assignee_name": name,
                "todo_count": c["todo"],
                "in_progress_count": c["in_progress"],
                "done_count": c["done"],
                "total": c["todo"] + c["in_progress"] + c["done"],
            }
        )
    rows.sort(key=lambda r: (-r["total"], r["assignee_name"], r["assignee_id"]))
    return rows


def brute_activity(task_docs: list[dict], n: int) -> list[dict]:
    """Top-n activity entries, newest first, found by repeated selection.

    The serialized timestamp format is fixed-width UTC, so plain string
    comparison on ``at`` agrees with chronological order.
    """
    pool = []
    for t in task_docs:
        if t["trashed"]:
            continue
        for position, entry in enumerate(t["activity"]):
            pool.append(
                {
                    "at": entry["at"],
                    "actor_id": entry["actor_id"],
                    "kind": entry["kind"],
                    "detail": entry["detail"],
                    "task_id": t["id"],
                    "task_title": t["title"],
                    "_position": position,
                }
            )

    picked = []
    while pool and len(picked) < n:
        best = pool[0]
        for candidate in pool[1:]:
            if candidate["at"] > best["at"]:
                best = candidate
            elif candidate["at"] == best["at"]:
                if candidate["task_id"] < best["task_id"]:
                    best = candidate
                elif (
                    candidate["task_id"] == best["task_id"]
                    and candidate["_position"] > best["_position"]
                ):
                    best = candidate
        pool.remove(best)
        item = dict(best)
        del item["_position"]
        picked.append(item)
    return picked


# --- randomized fixtures ----------------------------------------------------

_BASE = datetime(2025, 3, 3, 12, 0, 0, tzinfo=timezone.utc)

# Small pools on purpose: collisions in names and timestamps are exactly the
# tie-break cases worth exercising.
_NAMES = ["Alex Kim", "Alex Kim", "Bea Costa", "Dana Flores", "Eli Novak"]
_TITLES = ["Refine backlog", "Fix flaky build", "Draft release notes", "Update deps"]
_TICKS = [0, 0, 60, 60, 3600, 86400]


def random_accounts(rng: random.Random, count: int = 8) -> list[UserAccount]:
    accounts = []
    for i in range(count):
        accounts.append(
            UserAccount(
                id=f"U{i:025d}",
                name=rng.choice(_NAMES),
                email=f"member{i}@example.com",
                role=Role.ADMIN if i == 0 else Role.USER,
                password_hash="$scrypt$ln=4,r=8,p=1$c2FsdHNhbHRzYWx0c2FsdA$aGFzaA",
                active=rng.random() > 0.25,
                created_at=_BASE,
                revision=1,
            )
        )
    return accounts


def random_tasks(
    rng: random.Random, accounts: list[UserAccount], count: int = 200
) -> list[Task]:
    ids = [a.id for a in accounts] + ["GHOST" + "0" * 21, "GHOST" + "1" * 21]
    tasks = []
    for i in range(count):
        created = _BASE + timedelta(seconds=rng.choice(_TICKS))
        n_entries = rng.randint(1, 4)
        at = created
        entries = [
            ActivityEntry(
                at=at, actor_id=ids[0], kind=ActivityKind.CREATED, detail="made"
            )
        ]
        for _ in range(n_entries - 1):
            at = at + timedelta(seconds=rng.choice(_TICKS))
            entries.append(
                ActivityEntry(
                    at=at,
                    actor_id=rng.choice(ids),
                    kind=rng.choice(list(ActivityKind)),
                    detail=f"step {rng.randrange(100)}",
                )
            )
        assignees = frozenset(rng.sample(ids, k=rng.randint(0, 3)))
        tasks.append(
            Task(
                id=f"T{i:025d}",
                title=rng.choice(_TITLES),
                description="",
                status=rng.choice(list(TaskStatus)),
                priority=rng.choice(list(Priority)),
                assignee_ids=assignees,
                due_date=date(2025, 4, 1) if rng.random() < 0.3 else None,
                asset_refs=(),
                activity=tuple(entries),
                trashed=rng.random() < 0.12,
                created_at=created,
                updated_at=entries[-1].at,
                created_by=ids[0],
                revision=len(entries),
            )
        )
    return tasks
