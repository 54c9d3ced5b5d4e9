import json
import queue
import threading

import pytest

from wms import events as ev
from wms.canonical import canonical_dumps


def make(seq, kind="task", op="upsert", entity_id="T1", snap=None):
    if op == "upsert" and snap is None:
        snap = {"id": entity_id, "revision": seq}
    return ev.MutationEvent(
        seq=seq,
        at="2025-01-01T00:00:00.000Z",
        actor_id="A",
        entity_kind=kind,
        entity_id=entity_id,
        op_kind=op,
        snapshot=snap,
    )


class TestEventShape:
    def test_upsert_requires_snapshot(self):
        with pytest.raises(ValueError):
            ev.MutationEvent(1, "t", "a", "task", "T1", "upsert", None)

    def test_delete_forbids_snapshot(self):
        with pytest.raises(ValueError):
            make(1, op="hard_delete", snap={"id": "T1"})

    def test_bad_kinds(self):
        with pytest.raises(ValueError):
            ev.MutationEvent(1, "t", "a", "widget", "W1", "upsert", {"id": "W1"})
        with pytest.raises(ValueError):
            ev.MutationEvent(1, "t", "a", "task", "T1", "merge", {"id": "T1"})

    def test_doc_roundtrip(self):
        e = make(7)
        assert ev.event_from_doc(ev.event_to_doc(e)) == e
        d = make(3, op="hard_delete", snap=None)
        assert "snapshot" not in ev.event_to_doc(d)
        assert ev.event_from_doc(ev.event_to_doc(d)) == d


class TestAppend:
    def test_sequential_seq_and_durable_lines(self, store):
        first = ev.append(store, at="2025-01-01T00:00:00.000Z", actor_id="A",
                          entity_kind="task", entity_id="T1", op_kind="upsert",
                          snapshot={"id": "T1", "revision": 1})
        second = ev.append(store, at="2025-01-01T00:00:01.000Z", actor_id="A",
                           entity_kind="task", entity_id="T1", op_kind="hard_delete")
        assert (first.seq, second.seq) == (1, 2)
        assert store.manifest["last_event_seq"] == 2
        lines = store.events_path.read_bytes().decode().splitlines()
        assert len(lines) == 2
        # each line is itself canonical JSON
        for line in lines:
            assert canonical_dumps(json.loads(line)) == line

    def test_append_validates_shape(self, store):
        with pytest.raises(ValueError):
            ev.append(store, at="t", actor_id="a", entity_kind="task",
                      entity_id="T1", op_kind="upsert", snapshot=None)
        with pytest.raises(ValueError):
            ev.append(store, at="t", actor_id="a", entity_kind="task",
                      entity_id="T1", op_kind="hard_delete", snapshot={"id": "T1"})

    def test_read_since(self, store):
        for i in range(1, 6):
            ev.append(store, at="t", actor_id="a", entity_kind="task",
                      entity_id=f"T{i}", op_kind="upsert", snapshot={"id": f"T{i}", "revision": 1})
        tail = ev.read_since(store, after_seq=3)
        assert [e.seq for e in tail] == [4, 5]
        window = ev.read_since(store, after_seq=1, limit=2)
        assert [e.seq for e in window] == [2, 3]
        assert ev.read_since(store, after_seq=99) == []

    def test_concurrent_appends_stay_gap_free(self, store):
        n_threads, per_thread = 8, 25
        barrier = threading.Barrier(n_threads)

        def writer(tag):
            barrier.wait()
            for i in range(per_thread):
                ev.append(store, at="t", actor_id=f"w{tag}", entity_kind="task",
                          entity_id=f"T{tag}-{i}", op_kind="upsert",
                          snapshot={"id": f"T{tag}-{i}", "revision": 1})

        threads = [threading.Thread(target=writer, args=(t,)) for t in range(n_threads)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        all_events = ev.read_since(store, 0)
        assert [e.seq for e in all_events] == list(range(1, n_threads * per_thread + 1))
        assert store.manifest["last_event_seq"] == n_threads * per_thread


class TestReplay:
    def test_fold_upserts_and_deletes(self):
        history = [
            make(1, entity_id="T1"),
            make(2, entity_id="T2"),
            make(3, kind="user", entity_id="U1", snap={"id": "U1", "revision": 1}),
            make(4, entity_id="T1", snap={"id": "T1", "revision": 2}),
            make(5, entity_id="T2", op="hard_delete", snap=None),
        ]
        state = ev.replay(history)
        assert state["tasks"] == {"T1": {"id": "T1", "revision": 2}}
        assert state["users"] == {"U1": {"id": "U1", "revision": 1}}

    def test_empty_history(self):
        assert ev.replay([]) == {"tasks": {}, "users": {}}

    def test_gap_detected(self):
        with pytest.raises(ev.GapDetected):
            ev.replay([make(1), make(3)])
        with pytest.raises(ev.GapDetected):
            ev.replay([make(2)])

    def test_out_of_order(self):
        with pytest.raises(ev.OutOfOrder):
            ev.replay([make(1), make(1)])
        with pytest.raises(ev.OutOfOrder):
            ev.replay([make(1, entity_id="T1"), make(2), make(1)])

    def test_delete_of_absent_id_is_noop(self):
        state = ev.replay([make(1, op="hard_delete", entity_id="ghost", snap=None)])
        assert state == {"tasks": {}, "users": {}}


class TestCommitHelpers:
    def test_commit_with_event_matches_store(self, store):
        doc = {"id": "T1", "revision": 1, "created_at": "2025-01-01T00:00:00.000Z",
               "status": "todo", "priority": "low", "assignee_ids": [], "trashed": False}
        e = ev.commit_with_event(store, "tasks", doc, None,
                                 at=doc["created_at"], actor_id="A")
        assert e.seq == 1 and e.snapshot == doc
        assert ev.replay(ev.read_since(store)) == ev.store_state(store)

    def test_delete_with_event(self, store):
        doc = {"id": "T1", "revision": 1, "created_at": "2025-01-01T00:00:00.000Z"}
        ev.commit_with_event(store, "tasks", doc, None, at="t", actor_id="A")
        e = ev.delete_with_event(store, "tasks", "T1", at="t2", actor_id="A")
        assert e.op_kind == "hard_delete" and e.snapshot is None
        assert ev.store_state(store)["tasks"] == {}
        assert ev.replay(ev.read_since(store)) == ev.store_state(store)

    def test_failed_cas_appends_nothing(self, store):
        doc = {"id": "T1", "revision": 1}
        ev.commit_with_event(store, "tasks", doc, None, at="t", actor_id="A")
        from wms.store import StaleRevision

        with pytest.raises(StaleRevision):
            ev.commit_with_event(store, "tasks", dict(doc, revision=2), 5,
                                 at="t", actor_id="A")
        assert store.manifest["last_event_seq"] == 1

    def test_interleaved_writers_snapshot_order_matches_log(self, store):
        base = {"id": "T1", "revision": 1, "n": 0}
        ev.commit_with_event(store, "tasks", base, None, at="t", actor_id="A")
        stop = 40

        def bump(tag):
            for _ in range(stop):
                while True:
                    cur = store.get("tasks", "T1")
                    new = dict(cur, revision=cur["revision"] + 1, n=cur["n"] + 1)
                    try:
                        ev.commit_with_event(store, "tasks", new, cur["revision"],
                                             at="t", actor_id=tag)
                        break
                    except Exception:
                        continue

        threads = [threading.Thread(target=bump, args=(t,)) for t in ("x", "y")]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        history = ev.read_since(store)
        revisions = [e.snapshot["revision"] for e in history]
        assert revisions == list(range(1, 2 * stop + 2))
        assert ev.replay(history) == ev.store_state(store)


class TestSubscriptions:
    def test_fanout_delivers_in_order(self, store):
        sub_a = store.subscribe()
        sub_b = store.subscribe()
        for i in range(3):
            ev.append(store, at="t", actor_id="a", entity_kind="task",
                      entity_id=f"T{i}", op_kind="upsert", snapshot={"id": f"T{i}", "revision": 1})
        for sub in (sub_a, sub_b):
            got = [sub.events.get(timeout=1)["seq"] for _ in range(3)]
            assert got == [1, 2, 3]
        store.unsubscribe(sub_a)
        ev.append(store, at="t", actor_id="a", entity_kind="task",
                  entity_id="T9", op_kind="upsert", snapshot={"id": "T9", "revision": 1})
        assert sub_b.events.get(timeout=1)["seq"] == 4
        with pytest.raises(queue.Empty):
            sub_a.events.get_nowait()

    def test_slow_subscriber_marked_broken(self, store, monkeypatch):
        monkeypatch.setattr("wms.store.SUBSCRIBER_BUFFER", 5)
        sub = store.subscribe()
        assert sub.events.maxsize == 5
        overflow = sub.events.maxsize + 3
        for i in range(overflow):
            ev.append(store, at="t", actor_id="a", entity_kind="task",
                      entity_id=f"T{i}", op_kind="upsert", snapshot={"id": f"T{i}", "revision": 1})
        assert sub.broken
        # a broken subscription is detached: later events don't reach it
        depth = sub.events.qsize()
        ev.append(store, at="t", actor_id="a", entity_kind="task",
                  entity_id="TX", op_kind="upsert", snapshot={"id": "TX", "revision": 1})
        assert sub.events.qsize() == depth
        # healthy writers were unaffected
        assert store.manifest["last_event_seq"] == overflow + 1
