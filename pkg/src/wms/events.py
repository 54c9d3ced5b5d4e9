"""Sequence-numbered mutation events and the replay oracle.

Every successful mutation appends exactly one event carrying the full
post-mutation document snapshot (upserts) or a tombstone (hard deletes).
Folding the log from the start must rebuild the live document tree exactly;
`replay` is that fold and doubles as the store's correctness oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .store import Subscription  # noqa: F401  (re-exported for consumers)
from .store import StoreHandle

ENTITY_KINDS = ("task", "user")
OP_KINDS = ("upsert", "hard_delete")

_COLLECTION_FOR = {"task": "tasks", "user": "users"}
_KIND_FOR = {v: k for k, v in _COLLECTION_FOR.items()}


class EventError(Exception):
    pass


class GapDetected(EventError):
    pass


class OutOfOrder(EventError):
    pass


@dataclass(frozen=True)
class MutationEvent:
    seq: int
    at: str
    actor_id: str
    entity_kind: str
    entity_id: str
    op_kind: str
    snapshot: dict | None = None

    def __post_init__(self):
        if self.entity_kind not in ENTITY_KINDS:
            raise ValueError(f"bad entity_kind: {self.entity_kind}")
        if self.op_kind not in OP_KINDS:
            raise ValueError(f"bad op_kind: {self.op_kind}")
        if self.op_kind == "upsert" and self.snapshot is None:
            raise ValueError("upsert events must carry a snapshot")
        if self.op_kind == "hard_delete" and self.snapshot is not None:
            raise ValueError("hard_delete events must not carry a snapshot")


def event_to_doc(ev: MutationEvent) -> dict:
    doc = {
        "seq": ev.seq,
        "at": ev.at,
        "actor_id": ev.actor_id,
        "entity_kind": ev.entity_kind,
        "entity_id": ev.entity_id,
        "op_kind": ev.op_kind,
    }
    if ev.op_kind == "upsert":
        doc["snapshot"] = ev.snapshot
    return doc


def event_from_doc(doc: dict) -> MutationEvent:
    return MutationEvent(
        seq=doc["seq"],
        at=doc["at"],
        actor_id=doc["actor_id"],
        entity_kind=doc["entity_kind"],
        entity_id=doc["entity_id"],
        op_kind=doc["op_kind"],
        snapshot=doc.get("snapshot"),
    )


def append(
    store: StoreHandle,
    *,
    at: str,
    actor_id: str,
    entity_kind: str,
    entity_id: str,
    op_kind: str,
    snapshot: dict | None = None,
) -> MutationEvent:
    """Append one event; the store assigns the next sequence number and
    durably writes the line before this returns."""
    partial = {
        "at": at,
        "actor_id": actor_id,
        "entity_kind": entity_kind,
        "entity_id": entity_id,
        "op_kind": op_kind,
    }
    if op_kind == "upsert":
        if snapshot is None:
            raise ValueError("upsert events must carry a snapshot")
        partial["snapshot"] = snapshot
    elif snapshot is not None:
        raise ValueError("hard_delete events must not carry a snapshot")
    return event_from_doc(store.append_event_doc(partial))


def read_since(store: StoreHandle, after_seq: int = 0, limit: int | None = None) -> list[MutationEvent]:
    return [event_from_doc(d) for d in store.read_event_docs(after_seq, limit)]


def commit_with_event(
    store: StoreHandle,
    collection: str,
    doc: dict,
    expected_revision: int | None,
    *,
    at: str,
    actor_id: str,
) -> MutationEvent:
    """compare_and_put plus its event, atomically with respect to other
    writers of the same document (so snapshot order matches commit order)."""
    kind = _KIND_FOR[collection]
    with store.entity_lock(collection, doc["id"]):
        store.compare_and_put(collection, doc, expected_revision)
        return append(
            store,
            at=at,
            actor_id=actor_id,
            entity_kind=kind,
            entity_id=doc["id"],
            op_kind="upsert",
            snapshot=doc,
        )


def delete_with_event(
    store: StoreHandle,
    collection: str,
    doc_id: str,
    *,
    at: str,
    actor_id: str,
) -> MutationEvent:
    kind = _KIND_FOR[collection]
    with store.entity_lock(collection, doc_id):
        store.hard_delete(collection, doc_id)
        return append(
            store,
            at=at,
            actor_id=actor_id,
            entity_kind=kind,
            entity_id=doc_id,
            op_kind="hard_delete",
        )


def replay(events: Iterator[MutationEvent] | list[MutationEvent]) -> dict[str, dict[str, dict]]:
    """Fold events into the document tree they describe.

    Returns {"tasks": {id: doc}, "users": {id: doc}}. The input must be the
    contiguous history from the beginning: the first event has seq 1, each
    successor increments by exactly one. A larger jump is a GapDetected; a
    repeat or regression is OutOfOrder.
    """
    state: dict[str, dict[str, dict]] = {"tasks": {}, "users": {}}
    prev = 0
    for ev in events:
        if ev.seq <= prev:
            raise OutOfOrder(f"seq {ev.seq} after {prev}")
        if ev.seq != prev + 1:
            raise GapDetected(f"seq jumped from {prev} to {ev.seq}")
        prev = ev.seq
        collection = _COLLECTION_FOR[ev.entity_kind]
        if ev.op_kind == "upsert":
            state[collection][ev.entity_id] = ev.snapshot
        else:
            state[collection].pop(ev.entity_id, None)
    return state


def store_state(store: StoreHandle) -> dict[str, dict[str, dict]]:
    """Live document tree in the same shape replay() produces."""
    return {
        "tasks": {d["id"]: d for d in store.scan("tasks")},
        "users": {d["id"]: d for d in store.scan("users")},
    }
