"""Business entities and the pure rules that govern them.

Tasks move through a three-column board (todo / in_progress / done), carry a
priority, an assignee set, attachments, and an append-only activity trail.
Every operation here is pure: it takes the acting account and a clock value
and returns a new immutable value. No I/O, no global state.

All nine status transitions are allowed (the board permits free dragging);
identity mutations are no-ops that return the input unchanged so idle saves
never bump revisions or pollute the event log.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from datetime import date, datetime
from enum import Enum

from .canonical import format_date, format_ts, parse_date, parse_ts, truncate_ms

TITLE_MAX_LEN = 200
DESCRIPTION_MAX_LEN = 10_000
DEFAULT_ASSET_SIZE_LIMIT = 10 * 1024 * 1024


class TaskStatus(str, Enum):
    TODO = "todo"
    IN_PROGRESS = "in_progress"
    DONE = "done"


class Priority(str, Enum):
    HIGH = "high"
    MEDIUM = "medium"
    LOW = "low"


# Fixed display colors, red/amber/green convention.
PRIORITY_COLORS: dict[Priority, str] = {
    Priority.HIGH: "#D32F2F",
    Priority.MEDIUM: "#F9A825",
    Priority.LOW: "#388E3C",
}


class Role(str, Enum):
    ADMIN = "admin"
    USER = "user"


class ActivityKind(str, Enum):
    CREATED = "created"
    STATUS_CHANGED = "status_changed"
    PRIORITY_CHANGED = "priority_changed"
    ASSIGNED = "assigned"
    ASSET_ADDED = "asset_added"
    TRASHED = "trashed"
    RESTORED = "restored"
    EDITED = "edited"


class DomainError(Exception):
    """Base for rule violations; message is safe to surface to clients."""


class EmptyTitle(DomainError):
    pass


class TitleTooLong(DomainError):
    pass


class DescriptionTooLong(DomainError):
    pass


class TaskTrashed(DomainError):
    pass


class AlreadyTrashed(DomainError):
    pass


class NotTrashed(DomainError):
    pass


class AssetTooLarge(DomainError):
    pass


@dataclass(frozen=True)
class ActivityEntry:
    at: datetime
    actor_id: str
    kind: ActivityKind
    detail: str


@dataclass(frozen=True)
class AssetRef:
    """Content-addressed reference to an uploaded attachment. Two uploads of
    the same bytes share content_hash but keep distinct ids."""

    id: str
    content_hash: str
    filename: str
    media_type: str
    size_bytes: int
    uploaded_at: datetime
    uploaded_by: str


@dataclass(frozen=True)
class Task:
    id: str
    title: str
    description: str
    status: TaskStatus
    priority: Priority
    assignee_ids: frozenset[str]
    due_date: date | None
    asset_refs: tuple[AssetRef, ...]
    activity: tuple[ActivityEntry, ...]
    trashed: bool
    created_at: datetime
    updated_at: datetime
    created_by: str
    revision: int


@dataclass(frozen=True)
class UserAccount:
    id: str
    name: str
    email: str
    role: Role
    password_hash: str
    active: bool
    created_at: datetime
    revision: int


class _Unset:
    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return "UNSET"


#: Sentinel distinguishing "leave due_date alone" from "clear it" (None).
UNSET = _Unset()


def _clean_title(title: str) -> str:
    cleaned = title.strip()
    if not cleaned:
        raise EmptyTitle("title must be non-empty")
    if len(cleaned) > TITLE_MAX_LEN:
        raise TitleTooLong(f"title exceeds {TITLE_MAX_LEN} characters")
    return cleaned


def _check_description(description: str) -> str:
    if len(description) > DESCRIPTION_MAX_LEN:
        raise DescriptionTooLong(f"description exceeds {DESCRIPTION_MAX_LEN} characters")
    return description


def _stamp(task: Task, now: datetime) -> datetime:
    """Mutation timestamp, clamped so activity stays monotonically
    non-decreasing even under clock skew."""
    ts = truncate_ms(now)
    if task.activity and ts < task.activity[-1].at:
        ts = task.activity[-1].at
    if ts < task.created_at:
        ts = task.created_at
    return ts


def create_task(
    title: str,
    description: str,
    priority: Priority,
    assignee_ids: frozenset[str] | set[str],
    due_date: date | None,
    actor: UserAccount,
    now: datetime,
    task_id: str,
) -> Task:
    cleaned = _clean_title(title)
    _check_description(description)
    ts = truncate_ms(now)
    entry = ActivityEntry(at=ts, actor_id=actor.id, kind=ActivityKind.CREATED, detail=cleaned)
    return Task(
        id=task_id,
        title=cleaned,
        description=description,
        status=TaskStatus.TODO,
        priority=priority,
        assignee_ids=frozenset(assignee_ids),
        due_date=due_date,
        asset_refs=(),
        activity=(entry,),
        trashed=False,
        created_at=ts,
        updated_at=ts,
        created_by=actor.id,
        revision=1,
    )


def update_task(
    task: Task,
    actor: UserAccount,
    now: datetime,
    *,
    title: str | None = None,
    description: str | None = None,
    status: TaskStatus | None = None,
    priority: Priority | None = None,
    assignee_ids: frozenset[str] | set[str] | None = None,
    due_date: date | None | _Unset = UNSET,
) -> Task:
    """Apply any combination of field changes as one mutation.

    Exactly one revision bump for the whole batch, one activity entry per
    changed aspect. Requesting values identical to the current state is a
    no-op that returns the task unchanged.
    """
    if task.trashed:
        raise TaskTrashed("task is in the trash")

    changes: dict = {}
    entries: list[tuple[ActivityKind, str]] = []
    edited_fields: list[str] = []

    if title is not None:
        cleaned = _clean_title(title)
        if cleaned != task.title:
            changes["title"] = cleaned
            edited_fields.append("title")
    if description is not None:
        _check_description(description)
        if description != task.description:
            changes["description"] = description
            edited_fields.append("description")
    if not isinstance(due_date, _Unset) and due_date != task.due_date:
        changes["due_date"] = due_date
        edited_fields.append("due_date")
    if edited_fields:
        entries.append((ActivityKind.EDITED, ", ".join(sorted(edited_fields))))

    if status is not None and status != task.status:
        changes["status"] = status
        entries.append(
            (ActivityKind.STATUS_CHANGED, f"{task.status.value} -> {status.value}")
        )
    if priority is not None and priority != task.priority:
        changes["priority"] = priority
        entries.append(
            (ActivityKind.PRIORITY_CHANGED, f"{task.priority.value} -> {priority.value}")
        )
    if assignee_ids is not None:
        target = frozenset(assignee_ids)
        if target != task.assignee_ids:
            added = sorted(target - task.assignee_ids)
            removed = sorted(task.assignee_ids - target)
            parts = []
            if added:
                parts.append("added " + ", ".join(added))
            if removed:
                parts.append("removed " + ", ".join(removed))
            changes["assignee_ids"] = target
            entries.append((ActivityKind.ASSIGNED, "; ".join(parts)))

    if not changes:
        return task
    return _commit(task, changes, entries, actor, now)


def transition_status(task: Task, new_status: TaskStatus, actor: UserAccount, now: datetime) -> Task:
    return update_task(task, actor, now, status=new_status)


def set_priority(task: Task, priority: Priority, actor: UserAccount, now: datetime) -> Task:
    return update_task(task, actor, now, priority=priority)


def assign(task: Task, assignee_ids: frozenset[str] | set[str], actor: UserAccount, now: datetime) -> Task:
    return update_task(task, actor, now, assignee_ids=assignee_ids)


def edit_details(
    task: Task,
    actor: UserAccount,
    now: datetime,
    *,
    title: str | None = None,
    description: str | None = None,
    due_date: date | None | _Unset = UNSET,
) -> Task:
    return update_task(task, actor, now, title=title, description=description, due_date=due_date)


def soft_delete(task: Task, actor: UserAccount, now: datetime) -> Task:
    if task.trashed:
        raise AlreadyTrashed("task is already in the trash")
    return _commit(task, {"trashed": True}, [(ActivityKind.TRASHED, "")], actor, now)


def restore(task: Task, actor: UserAccount, now: datetime) -> Task:
    if not task.trashed:
        raise NotTrashed("task is not in the trash")
    return _commit(task, {"trashed": False}, [(ActivityKind.RESTORED, "")], actor, now)


def attach_asset(
    task: Task,
    ref: AssetRef,
    actor: UserAccount,
    now: datetime,
    size_limit: int = DEFAULT_ASSET_SIZE_LIMIT,
) -> Task:
    if task.trashed:
        raise TaskTrashed("task is in the trash")
    if ref.size_bytes < 1:
        raise ValueError("asset must not be empty")
    if ref.size_bytes > size_limit:
        raise AssetTooLarge(f"asset exceeds the {size_limit}-byte limit")
    return _commit(
        task,
        {"asset_refs": task.asset_refs + (ref,)},
        [(ActivityKind.ASSET_ADDED, ref.filename)],
        actor,
        now,
    )


def _commit(
    task: Task,
    changes: dict,
    entries: list[tuple[ActivityKind, str]],
    actor: UserAccount,
    now: datetime,
) -> Task:
    ts = _stamp(task, now)
    new_entries = tuple(
        ActivityEntry(at=ts, actor_id=actor.id, kind=kind, detail=detail)
        for kind, detail in entries
    )
    return replace(
        task,
        **changes,
        activity=task.activity + new_entries,
        updated_at=ts,
        revision=task.revision + 1,
    )


# --- accounts -----------------------------------------------------------

_EMAIL_OK = re.compile(r"^[^@\s]+@[^@\s]+\.[^@\s]+$")


def normalize_email(email: str) -> str:
    """Lowercased canonical form; uniqueness is checked on this form."""
    cleaned = email.strip().lower()
    if not _EMAIL_OK.match(cleaned):
        raise ValueError(f"not a valid email address: {email!r}")
    return cleaned


def new_account(
    account_id: str,
    name: str,
    email: str,
    role: Role,
    password_hash: str,
    now: datetime,
) -> UserAccount:
    if not name.strip():
        raise ValueError("name must be non-empty")
    return UserAccount(
        id=account_id,
        name=name.strip(),
        email=normalize_email(email),
        role=role,
        password_hash=password_hash,
        active=True,
        created_at=truncate_ms(now),
        revision=1,
    )


# --- canonical documents ------------------------------------------------
#
# Field names below are the wire/storage contract shared by the document
# store, the HTTP API, and the event log.


def activity_to_doc(e: ActivityEntry) -> dict:
    return {
        "at": format_ts(e.at),
        "actor_id": e.actor_id,
        "kind": e.kind.value,
        "detail": e.detail,
    }


def activity_from_doc(d: dict) -> ActivityEntry:
    return ActivityEntry(
        at=parse_ts(d["at"]),
        actor_id=d["actor_id"],
        kind=ActivityKind(d["kind"]),
        detail=d["detail"],
    )


def asset_to_doc(a: AssetRef) -> dict:
    return {
        "id": a.id,
        "content_hash": a.content_hash,
        "filename": a.filename,
        "media_type": a.media_type,
        "size_bytes": a.size_bytes,
        "uploaded_at": format_ts(a.uploaded_at),
        "uploaded_by": a.uploaded_by,
    }


def asset_from_doc(d: dict) -> AssetRef:
    return AssetRef(
        id=d["id"],
        content_hash=d["content_hash"],
        filename=d["filename"],
        media_type=d["media_type"],
        size_bytes=d["size_bytes"],
        uploaded_at=parse_ts(d["uploaded_at"]),
        uploaded_by=d["uploaded_by"],
    )


def task_to_doc(t: Task) -> dict:
    return {
        "id": t.id,
        "title": t.title,
        "description": t.description,
        "status": t.status.value,
        "priority": t.priority.value,
        "assignee_ids": sorted(t.assignee_ids),
        "due_date": format_date(t.due_date) if t.due_date is not None else None,
        "asset_refs": [asset_to_doc(a) for a in t.asset_refs],
        "activity": [activity_to_doc(e) for e in t.activity],
        "trashed": t.trashed,
        "created_at": format_ts(t.created_at),
        "updated_at": format_ts(t.updated_at),
        "created_by": t.created_by,
        "revision": t.revision,
    }


def task_from_doc(d: dict) -> Task:
    return Task(
        id=d["id"],
        title=d["title"],
        description=d["description"],
        status=TaskStatus(d["status"]),
        priority=Priority(d["priority"]),
        assignee_ids=frozenset(d["assignee_ids"]),
        due_date=parse_date(d["due_date"]) if d["due_date"] is not None else None,
        asset_refs=tuple(asset_from_doc(a) for a in d["asset_refs"]),
        activity=tuple(activity_from_doc(e) for e in d["activity"]),
        trashed=d["trashed"],
        created_at=parse_ts(d["created_at"]),
        updated_at=parse_ts(d["updated_at"]),
        created_by=d["created_by"],
        revision=d["revision"],
    )


def account_to_doc(a: UserAccount) -> dict:
    return {
        "id": a.id,
        "name": a.name,
        "email": a.email,
        "role": a.role.value,
        "password_hash": a.password_hash,
        "active": a.active,
        "created_at": format_ts(a.created_at),
        "revision": a.revision,
    }


def account_from_doc(d: dict) -> UserAccount:
    return UserAccount(
        id=d["id"],
        name=d["name"],
        email=d["email"],
        role=Role(d["role"]),
        password_hash=d["password_hash"],
        active=d["active"],
        created_at=parse_ts(d["created_at"]),
        revision=d["revision"],
    )


def account_public_doc(source: UserAccount | dict) -> dict:
    """Account view safe for any response body: everything but the
    credential record."""
    doc = account_to_doc(source) if isinstance(source, UserAccount) else dict(source)
    doc.pop("password_hash", None)
    return doc
