"""Store population helpers: account registration (shared by the HTTP API
and the CLI) and deterministic seed fixtures.

Seeding is fully reproducible: a fixed base timestamp advanced in 60-second
steps plus a seeded RNG feed every id, timestamp, and password salt, so two
seed runs of the same fixture produce byte-identical data directories.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

from . import events
from .auth import DEFAULT_HASH_PARAMS, HashParams, hash_password
from .canonical import epoch_ms, parse_date
from .domain import (
    Priority,
    Role,
    TaskStatus,
    UserAccount,
    account_to_doc,
    create_task,
    new_account,
    normalize_email,
    set_priority,
    soft_delete,
    task_to_doc,
    transition_status,
    update_task,
)
from .ids import new_id
from .store import SYSTEM_ACTOR, StoreHandle

SEED_BASE = datetime(2025, 1, 6, 9, 0, 0, tzinfo=timezone.utc)
SEED_STEP_SECONDS = 60
SEED_RNG_SEED = 20250106


class FixtureError(Exception):
    pass


class DuplicateEmail(FixtureError):
    pass


class BootstrapAdminRequired(FixtureError):
    pass


class StoreNotEmpty(FixtureError):
    pass


@dataclass
class SeedClock:
    """Monotonic fake clock: every tick is one fixed step later."""

    current: datetime = field(default_factory=lambda: SEED_BASE)
    step_seconds: int = SEED_STEP_SECONDS

    def next(self) -> datetime:
        t = self.current
        self.current = t + timedelta(seconds=self.step_seconds)
        return t


def find_account_by_email(store: StoreHandle, email: str) -> dict | None:
    norm = normalize_email(email)
    for doc in store.scan("users"):
        if doc["email"] == norm:
            return doc
    return None


def register_account(
    store: StoreHandle,
    *,
    name: str,
    email: str,
    password: str,
    role: Role,
    hash_params: HashParams = DEFAULT_HASH_PARAMS,
    now: datetime | None = None,
    rng: random.Random | None = None,
    actor_id: str = SYSTEM_ACTOR,
) -> UserAccount:
    """Create an account, persist it, and append its event.

    The very first account in a store must be an admin — otherwise nobody
    could ever administer the team.
    """
    if find_account_by_email(store, email) is not None:
        raise DuplicateEmail(f"email already in use: {normalize_email(email)}")
    if not store.scan("users") and role is not Role.ADMIN:
        raise BootstrapAdminRequired("the first account must have the admin role")
    now = now or datetime.now(timezone.utc)
    if rng is not None:
        account_id = new_id(timestamp_ms=epoch_ms(now), randbytes=rng.randbytes)
        salt = rng.randbytes(hash_params.salt_len)
    else:
        account_id = new_id()
        salt = None
    record = hash_password(password, hash_params, salt=salt)
    account = new_account(account_id, name, email, role, record, now)
    doc = account_to_doc(account)
    events.commit_with_event(
        store, "users", doc, None, at=doc["created_at"], actor_id=actor_id
    )
    return account


# --- fixtures -----------------------------------------------------------


def demo_fixture() -> dict:
    """A small team mid-project: 3 accounts, 12 tasks split 4/4/4 across the
    three statuses and 4/4/4 across the three priorities, nothing trashed."""
    return {
        "users": [
            {
                "name": "Asli Demir",
                "email": "asli@example.com",
                "password": "wms-admin-demo",
                "role": "admin",
            },
            {
                "name": "Burak Kaya",
                "email": "burak@example.com",
                "password": "wms-burak-demo",
                "role": "user",
            },
            {
                "name": "Cem Yilmaz",
                "email": "cem@example.com",
                "password": "wms-cem-demo",
                "role": "user",
            },
        ],
        "tasks": [
            {
                "title": "Draft project charter",
                "description": "Scope, stakeholders, and success criteria for the rollout.",
                "status": "todo",
                "priority": "high",
                "assignees": ["asli@example.com"],
                "due_date": "2025-01-20",
            },
            {
                "title": "Set up CI pipeline",
                "description": "Lint, tests, and artifact build on every push.",
                "status": "in_progress",
                "priority": "high",
                "assignees": ["burak@example.com"],
                "due_date": "2025-01-10",
            },
            {
                "title": "Write onboarding guide",
                "description": "First-week checklist for new team members.",
                "status": "done",
                "priority": "medium",
                "assignees": ["cem@example.com"],
            },
            {
                "title": "Order team hardware",
                "description": "Two laptops and a monitor for the new hires.",
                "status": "todo",
                "priority": "low",
                "assignees": [],
            },
            {
                "title": "Design board UI",
                "description": "Column layout, card fields, and color accents.",
                "status": "in_progress",
                "priority": "medium",
                "assignees": ["burak@example.com", "cem@example.com"],
            },
            {
                "title": "Implement login flow",
                "description": "Session issuance and the account menu.",
                "status": "in_progress",
                "priority": "high",
                "assignees": ["asli@example.com", "burak@example.com"],
                "due_date": "2025-01-08",
            },
            {
                "title": "Plan sprint retrospective",
                "description": "Agenda and a shared notes page.",
                "status": "todo",
                "priority": "medium",
                "assignees": ["cem@example.com"],
                "due_date": "2025-01-17",
            },
            {
                "title": "Archive legacy tracker",
                "description": "Freeze the old spreadsheet and export its history.",
                "status": "done",
                "priority": "low",
                "assignees": ["asli@example.com"],
            },
            {
                "title": "Collect feedback survey",
                "description": "Short questionnaire for the pilot group.",
                "status": "todo",
                "priority": "low",
                "assignees": [],
                "due_date": "2025-01-31",
            },
            {
                "title": "Fix dashboard chart colors",
                "description": "Align chart palette with the priority labels.",
                "status": "done",
                "priority": "medium",
                "initial_priority": "high",
                "assignees": ["burak@example.com"],
            },
            {
                "title": "Prepare stakeholder demo",
                "description": "Walkthrough script and seeded sample data.",
                "status": "done",
                "priority": "high",
                "assignees": ["asli@example.com", "cem@example.com"],
                "due_date": "2025-01-05",
            },
            {
                "title": "Migrate file storage",
                "description": "Move shared attachments to the new volume.",
                "status": "in_progress",
                "priority": "low",
                "assignees": ["cem@example.com"],
                "due_date": "2025-02-01",
            },
        ],
    }


def load_fixture_file(path: Path | str) -> dict:
    try:
        fixture = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FixtureError(f"cannot read fixture: {exc}") from exc
    if not isinstance(fixture, dict) or not isinstance(fixture.get("users"), list):
        raise FixtureError("fixture must be an object with a 'users' list")
    fixture.setdefault("tasks", [])
    return fixture


_STATUS_LADDER = {
    TaskStatus.TODO: [],
    TaskStatus.IN_PROGRESS: [TaskStatus.IN_PROGRESS],
    TaskStatus.DONE: [TaskStatus.IN_PROGRESS, TaskStatus.DONE],
}


def apply_fixture(store: StoreHandle, fixture: dict) -> dict:
    """Populate an empty store from a fixture description.

    Tasks are built through the normal domain operations (create, assign,
    reprioritize, advance status, trash) with one clock tick per operation,
    so the activity log and event log look like real usage. Returns counts.
    """
    if store.scan("users") or store.scan("tasks") or store.manifest["last_event_seq"]:
        raise StoreNotEmpty("refusing to seed a non-empty store")
    clock = SeedClock()
    rng = random.Random(SEED_RNG_SEED)

    accounts: dict[str, UserAccount] = {}
    admin: UserAccount | None = None
    for entry in fixture["users"]:
        account = register_account(
            store,
            name=entry["name"],
            email=entry["email"],
            password=entry["password"],
            role=Role(entry["role"]),
            now=clock.next(),
            rng=rng,
        )
        accounts[account.email] = account
        if admin is None and account.role is Role.ADMIN:
            admin = account
    if admin is None:
        raise FixtureError("fixture must include an admin account")

    def commit(expected_revision: int | None, task, by: UserAccount) -> None:
        doc = task_to_doc(task)
        events.commit_with_event(
            store, "tasks", doc, expected_revision, at=doc["updated_at"], actor_id=by.id
        )

    task_count = 0
    for entry in fixture["tasks"]:
        actor = accounts[normalize_email(entry["actor"])] if "actor" in entry else admin
        assignees = [accounts[normalize_email(e)] for e in entry.get("assignees", [])]
        target_priority = Priority(entry["priority"])
        initial_priority = Priority(entry.get("initial_priority", entry["priority"]))
        due = parse_date(entry["due_date"]) if entry.get("due_date") else None

        created_at = clock.next()
        task = create_task(
            entry["title"],
            entry.get("description", ""),
            initial_priority,
            frozenset(a.id for a in assignees[:1]),
            due,
            actor,
            created_at,
            new_id(timestamp_ms=epoch_ms(created_at), randbytes=rng.randbytes),
        )
        commit(None, task, actor)

        if len(assignees) > 1:
            task_next = update_task(
                task, actor, clock.next(), assignee_ids=frozenset(a.id for a in assignees)
            )
            commit(task.revision, task_next, actor)
            task = task_next
        if initial_priority is not target_priority:
            task_next = set_priority(task, target_priority, actor, clock.next())
            commit(task.revision, task_next, actor)
            task = task_next
        mover = assignees[0] if assignees else actor
        for step in _STATUS_LADDER[TaskStatus(entry["status"])]:
            task_next = transition_status(task, step, mover, clock.next())
            commit(task.revision, task_next, mover)
            task = task_next
        if entry.get("trashed"):
            task_next = soft_delete(task, actor, clock.next())
            commit(task.revision, task_next, actor)
            task = task_next
        task_count += 1

    return {
        "users": len(accounts),
        "tasks": task_count,
        "events": store.manifest["last_event_seq"],
    }
