"""Pure aggregation over task snapshots: the numbers behind the dashboard.

All four operations ignore trashed tasks. Workload intentionally counts a
task once per assignee (per-person load), so workload totals may exceed
``summary(...).total_tasks``; the summary counts each task once.
"""

from __future__ import annotations

from dataclasses import dataclass

from .canonical import format_ts
from .domain import Priority, Task, TaskStatus, UserAccount

UNASSIGNED_ID = "unassigned"
UNASSIGNED_NAME = "(unassigned)"
UNKNOWN_NAME = "(unknown)"

RECENT_ACTIVITY_MAX = 100


@dataclass(frozen=True)
class DashboardSummary:
    total_tasks: int
    todo_count: int
    in_progress_count: int
    done_count: int
    completion_ratio: float

    def to_doc(self) -> dict:
        return {
            "total_tasks": self.total_tasks,
            "todo_count": self.todo_count,
            "in_progress_count": self.in_progress_count,
            "done_count": self.done_count,
            "completion_ratio": self.completion_ratio,
        }


@dataclass(frozen=True)
class WorkloadRow:
    assignee_id: str
    assignee_name: str
    todo_count: int
    in_progress_count: int
    done_count: int
    total: int

    def to_doc(self) -> dict:
        return {
            "assignee_id": self.assignee_id,
            "assignee_name": self.assignee_name,
            "todo_count": self.todo_count,
            "in_progress_count": self.in_progress_count,
            "done_count": self.done_count,
            "total": self.total,
        }


@dataclass(frozen=True)
class PriorityBreakdown:
    high_count: int
    medium_count: int
    low_count: int

    def to_doc(self) -> dict:
        return {
            "high_count": self.high_count,
            "medium_count": self.medium_count,
            "low_count": self.low_count,
        }


@dataclass(frozen=True)
class ActivityItem:
    """One activity entry lifted out of its task, feed-ready."""

    at: str
    actor_id: str
    kind: str
    detail: str
    task_id: str
    task_title: str

    def to_doc(self) -> dict:
        return {
            "at": self.at,
            "actor_id": self.actor_id,
            "kind": self.kind,
            "detail": self.detail,
            "task_id": self.task_id,
            "task_title": self.task_title,
        }


def _live(tasks: list[Task]) -> list[Task]:
    return [t for t in tasks if not t.trashed]


def summary(tasks: list[Task]) -> DashboardSummary:
    live = _live(tasks)
    todo = sum(1 for t in live if t.status is TaskStatus.TODO)
    doing = sum(1 for t in live if t.status is TaskStatus.IN_PROGRESS)
    done = sum(1 for t in live if t.status is TaskStatus.DONE)
    total = len(live)
    ratio = done / total if total else 0.0
    return DashboardSummary(
        total_tasks=total,
        todo_count=todo,
        in_progress_count=doing,
        done_count=done,
        completion_ratio=ratio,
    )


def workload_by_assignee(tasks: list[Task], accounts: list[UserAccount]) -> list[WorkloadRow]:
    """Per-person load table.

    Row rules:
    - every active account gets a row, even with zero tasks;
    - any assignee id seen on a live task gets a row; ids with no matching
      account are shown as "(unknown)";
    - tasks with no assignee aggregate into one ``unassigned`` row, present
      only when it is non-empty.
    Rows are ordered by total descending, then name ascending, then id.
    """
    names = {a.id: a.name for a in accounts}
    counts: dict[str, dict[TaskStatus, int]] = {}

    def bump(key: str, status: TaskStatus) -> None:
        row = counts.setdefault(key, {s: 0 for s in TaskStatus})
        row[status] += 1

    for account in accounts:
        if account.active:
            counts.setdefault(account.id, {s: 0 for s in TaskStatus})
    for task in _live(tasks):
        if task.assignee_ids:
            for assignee_id in task.assignee_ids:
                bump(assignee_id, task.status)
        else:
            bump(UNASSIGNED_ID, task.status)

    rows = []
    for key, by_status in counts.items():
        if key == UNASSIGNED_ID:
            name = UNASSIGNED_NAME
        else:
            name = names.get(key, UNKNOWN_NAME)
        rows.append(
            WorkloadRow(
                assignee_id=key,
                assignee_name=name,
                todo_count=by_status[TaskStatus.TODO],
                in_progress_count=by_status[TaskStatus.IN_PROGRESS],
                done_count=by_status[TaskStatus.DONE],
                total=sum(by_status.values()),
            )
        )
    rows.sort(key=lambda r: (-r.total, r.assignee_name, r.assignee_id))
    return rows


def priority_breakdown(tasks: list[Task]) -> PriorityBreakdown:
    live = _live(tasks)
    return PriorityBreakdown(
        high_count=sum(1 for t in live if t.priority is Priority.HIGH),
        medium_count=sum(1 for t in live if t.priority is Priority.MEDIUM),
        low_count=sum(1 for t in live if t.priority is Priority.LOW),
    )


def recent_activity(tasks: list[Task], n: int) -> list[ActivityItem]:
    """The n most recent activity entries across live tasks.

    Ties on timestamp break by task id ascending, then by position within
    the task's activity list, later entries first.
    """
    if not 1 <= n <= RECENT_ACTIVITY_MAX:
        raise ValueError(f"n must be in [1, {RECENT_ACTIVITY_MAX}]")
    items: list[tuple[tuple, ActivityItem]] = []
    for task in _live(tasks):
        for idx, entry in enumerate(task.activity):
            key = (-entry.at.timestamp(), task.id, -idx)
            items.append(
                (
                    key,
                    ActivityItem(
                        at=format_ts(entry.at),
                        actor_id=entry.actor_id,
                        kind=entry.kind.value,
                        detail=entry.detail,
                        task_id=task.id,
                        task_title=task.title,
                    ),
                )
            )
    items.sort(key=lambda pair: pair[0])
    return [item for _, item in items[:n]]
