"""File-backed JSON document store with per-document optimistic concurrency,
a content-addressed blob store, and the append-only event log file.

Layout (bit-exact contract):

    <data_dir>/manifest.json
    <data_dir>/tasks/<id>.json
    <data_dir>/users/<id>.json
    <data_dir>/blobs/<hh>/<64-hex>
    <data_dir>/events.jsonl

One file per document; every write goes to `<id>.json.tmp`, is flushed, then
renamed over the target, so a reader never observes a partial document and a
crash leaves at worst a stray tmp file that open() removes. Writes are
serialized per document id; event appends are serialized globally (the single
sequence-assignment point). Content addressing uses SHA-256 (64 hex chars).
"""

from __future__ import annotations

import gzip
import hashlib
import json
import os
import queue
import tarfile
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .canonical import canonical_dump_bytes, format_ts

COLLECTIONS = ("tasks", "users")
FORMAT_VERSION = 1
DEFAULT_BLOB_SIZE_LIMIT = 10 * 1024 * 1024
MAX_PAGE_LIMIT = 500
SUBSCRIBER_BUFFER = 1000

#: actor_id stamped on reconciliation events appended during open(); not a
#: valid account id, so it can never collide with a real actor.
SYSTEM_ACTOR = "system"


class StoreError(Exception):
    pass


class NotFound(StoreError):
    pass


class AlreadyExists(StoreError):
    pass


class StaleRevision(StoreError):
    def __init__(self, current_revision: int):
        super().__init__(f"document is at revision {current_revision}")
        self.current_revision = current_revision


class CorruptManifest(StoreError):
    pass


class SeqMismatch(StoreError):
    pass


class CorruptDocument(StoreError):
    pass


class BadPage(StoreError):
    pass


class BlobTooLarge(StoreError):
    pass


class BlobNotFound(StoreError):
    pass


class HashMismatch(StoreError):
    pass


class NotEmpty(StoreError):
    pass


class BadArchive(StoreError):
    pass


class LogWriteFailed(StoreError):
    pass


@dataclass
class ListFilter:
    """Conjunction of optional document filters; None means "don't care"."""

    status: str | None = None
    priority: str | None = None
    assignee: str | None = None
    trashed: bool | None = None

    def matches(self, doc: dict) -> bool:
        if self.status is not None and doc.get("status") != self.status:
            return False
        if self.priority is not None and doc.get("priority") != self.priority:
            return False
        if self.assignee is not None and self.assignee not in doc.get("assignee_ids", []):
            return False
        if self.trashed is not None and doc.get("trashed") is not self.trashed:
            return False
        return True


@dataclass
class Page:
    offset: int = 0
    limit: int = 100


@dataclass(frozen=True)
class BlobRef:
    content_hash: str


@dataclass
class Subscription:
    """Live event feed endpoint. The appender never blocks on a subscriber:
    when the buffer overflows the subscription is marked broken and the
    consumer must reconnect and resume by sequence number."""

    events: queue.Queue = field(default_factory=lambda: queue.Queue(maxsize=SUBSCRIBER_BUFFER))
    broken: bool = False


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as f:
        f.write(data)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)


def _fold_log(event_docs: list[dict]) -> dict[tuple[str, str], dict | None]:
    """Final per-entity outcome of a log: latest upsert snapshot, or None if
    the last event hard-deleted the entity."""
    state: dict[tuple[str, str], dict | None] = {}
    for ev in event_docs:
        key = (ev["entity_kind"], ev["entity_id"])
        if ev["op_kind"] == "upsert":
            state[key] = ev["snapshot"]
        else:
            state[key] = None
    return state


class StoreHandle:
    """Shared runtime handle for one data directory.

    Safe to share across concurrent request handlers: document writes take a
    per-id lock, event appends take the single log lock, reads are lock-free.
    """

    def __init__(self, data_dir: Path, blob_size_limit: int = DEFAULT_BLOB_SIZE_LIMIT):
        self.data_dir = Path(data_dir)
        self.blob_size_limit = blob_size_limit
        self.manifest: dict = {}
        self._doc_locks: dict[tuple[str, str], threading.RLock] = {}
        self._locks_guard = threading.Lock()
        self._log_lock = threading.RLock()
        self._subscribers: list[Subscription] = []
        self._subs_guard = threading.Lock()

    # -- paths ---------------------------------------------------------

    @property
    def manifest_path(self) -> Path:
        return self.data_dir / "manifest.json"

    @property
    def events_path(self) -> Path:
        return self.data_dir / "events.jsonl"

    def _doc_path(self, collection: str, doc_id: str) -> Path:
        if collection not in COLLECTIONS:
            raise ValueError(f"unknown collection: {collection}")
        return self.data_dir / collection / f"{doc_id}.json"

    def _blob_path(self, content_hash: str) -> Path:
        return self.data_dir / "blobs" / content_hash[:2] / content_hash

    def entity_lock(self, collection: str, doc_id: str) -> threading.RLock:
        """Per-document mutual exclusion; reentrant so a caller can hold it
        across a compare_and_put plus the matching event append."""
        with self._locks_guard:
            return self._doc_locks.setdefault((collection, doc_id), threading.RLock())

    # -- documents -----------------------------------------------------

    def get(self, collection: str, doc_id: str) -> dict:
        path = self._doc_path(collection, doc_id)
        try:
            raw = path.read_bytes()
        except FileNotFoundError:
            raise NotFound(f"{collection}/{doc_id}") from None
        try:
            return json.loads(raw)
        except json.JSONDecodeError as exc:
            raise CorruptDocument(f"{collection}/{doc_id}: {exc}") from exc

    def compare_and_put(self, collection: str, doc: dict, expected_revision: int | None) -> int:
        doc_id = doc.get("id")
        if not isinstance(doc_id, str) or not doc_id:
            raise ValueError("document must carry a string id")
        revision = doc.get("revision")
        if not isinstance(revision, int) or revision < 1:
            raise ValueError("document must carry a positive integer revision")
        path = self._doc_path(collection, doc_id)
        with self.entity_lock(collection, doc_id):
            if expected_revision is None:
                if path.exists():
                    raise AlreadyExists(f"{collection}/{doc_id}")
                if revision != 1:
                    raise ValueError("newly created documents must start at revision 1")
            else:
                if not path.exists():
                    raise NotFound(f"{collection}/{doc_id}")
                current = self.get(collection, doc_id)
                if current["revision"] != expected_revision:
                    raise StaleRevision(current["revision"])
                if revision != expected_revision + 1:
                    raise ValueError(
                        f"replacement must be at revision {expected_revision + 1}, got {revision}"
                    )
            _atomic_write(path, canonical_dump_bytes(doc))
            return revision

    def hard_delete(self, collection: str, doc_id: str) -> None:
        path = self._doc_path(collection, doc_id)
        with self.entity_lock(collection, doc_id):
            try:
                os.remove(path)
            except FileNotFoundError:
                raise NotFound(f"{collection}/{doc_id}") from None

    def list(self, collection: str, flt: ListFilter | None = None, page: Page | None = None) -> tuple[list[dict], int]:
        flt = flt or ListFilter()
        page = page or Page()
        if not 1 <= page.limit <= MAX_PAGE_LIMIT:
            raise BadPage(f"limit must be in [1, {MAX_PAGE_LIMIT}]")
        if page.offset < 0:
            raise BadPage("offset must be non-negative")
        docs = [d for d in self.scan(collection) if flt.matches(d)]
        docs.sort(key=lambda d: (d.get("created_at", ""), d["id"]))
        return docs[page.offset : page.offset + page.limit], len(docs)

    def scan(self, collection: str) -> list[dict]:
        """Every committed document in the collection, unordered."""
        if collection not in COLLECTIONS:
            raise ValueError(f"unknown collection: {collection}")
        out = []
        directory = self.data_dir / collection
        for path in directory.glob("*.json"):
            try:
                out.append(json.loads(path.read_bytes()))
            except json.JSONDecodeError as exc:
                raise CorruptDocument(f"{collection}/{path.stem}: {exc}") from exc
        return out

    # -- blobs ---------------------------------------------------------

    def put_blob(self, data: bytes) -> BlobRef:
        if len(data) < 1:
            raise ValueError("blob must not be empty")
        if len(data) > self.blob_size_limit:
            raise BlobTooLarge(f"blob exceeds the {self.blob_size_limit}-byte limit")
        content_hash = hashlib.sha256(data).hexdigest()
        path = self._blob_path(content_hash)
        if not path.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
            _atomic_write(path, data)
        return BlobRef(content_hash=content_hash)

    def get_blob(self, content_hash: str) -> bytes:
        path = self._blob_path(content_hash)
        try:
            data = path.read_bytes()
        except FileNotFoundError:
            raise BlobNotFound(content_hash) from None
        actual = hashlib.sha256(data).hexdigest()
        if actual != content_hash:
            raise HashMismatch(f"blob {content_hash} re-hashes to {actual}")
        return data

    def check_blobs(self) -> int:
        """Full-scan integrity check; returns the number of verified blobs."""
        count = 0
        for path in sorted((self.data_dir / "blobs").glob("*/*")):
            self.get_blob(path.name)
            count += 1
        return count

    # -- event log primitives (the event API lives in events.py) -------

    def append_event_doc(self, partial: dict) -> dict:
        """Assign the next sequence number, durably append one log line,
        update the manifest, and fan the event out to live subscribers.
        The whole step runs under the single log serialization point."""
        with self._log_lock:
            seq = self.manifest["last_event_seq"] + 1
            doc = {"seq": seq, **partial}
            line = canonical_dump_bytes(doc) + b"\n"
            try:
                with open(self.events_path, "ab") as f:
                    f.write(line)
                    f.flush()
                    os.fsync(f.fileno())
            except OSError as exc:
                raise LogWriteFailed(str(exc)) from exc
            self.manifest["last_event_seq"] = seq
            self._write_manifest()
            self._publish(doc)
            return doc

    def read_event_docs(self, after_seq: int = 0, limit: int | None = None) -> list[dict]:
        if after_seq < 0:
            raise ValueError("after_seq must be non-negative")
        out: list[dict] = []
        try:
            raw = self.events_path.read_bytes()
        except FileNotFoundError:
            return out
        for line in raw.split(b"\n"):
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError:
                break  # in-progress tail write; complete lines only
            if doc["seq"] > after_seq:
                out.append(doc)
                if limit is not None and len(out) >= limit:
                    break
        return out

    def subscribe(self) -> Subscription:
        sub = Subscription()
        with self._subs_guard:
            self._subscribers.append(sub)
        return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._subs_guard:
            if sub in self._subscribers:
                self._subscribers.remove(sub)

    def _publish(self, doc: dict) -> None:
        dropped = []
        with self._subs_guard:
            for sub in self._subscribers:
                try:
                    sub.events.put_nowait(doc)
                except queue.Full:
                    sub.broken = True
                    dropped.append(sub)
            for sub in dropped:
                self._subscribers.remove(sub)

    def _write_manifest(self) -> None:
        _atomic_write(self.manifest_path, canonical_dump_bytes(self.manifest))

    # -- snapshots -----------------------------------------------------

    def _has_data(self) -> bool:
        if self.manifest.get("last_event_seq", 0) != 0:
            return True
        for collection in COLLECTIONS:
            if any((self.data_dir / collection).glob("*.json")):
                return True
        if any((self.data_dir / "blobs").glob("*/*")):
            return True
        return False

    def export_snapshot(self, out_path: Path | str) -> None:
        """Write the whole tree as a deterministic gzip tar: members sorted
        by path, metadata zeroed, so equal stores produce equal archives."""
        out_path = Path(out_path)
        entries = []
        for path in sorted(self.data_dir.rglob("*")):
            rel = path.relative_to(self.data_dir).as_posix()
            if rel.endswith(".tmp"):
                continue
            entries.append((rel, path))
        with open(out_path, "wb") as raw:
            with gzip.GzipFile(filename="", fileobj=raw, mode="wb", mtime=0) as gz:
                with tarfile.open(fileobj=gz, mode="w", format=tarfile.USTAR_FORMAT) as tar:
                    for rel, path in entries:
                        info = tarfile.TarInfo(name=rel)
                        info.mtime = 0
                        info.uid = info.gid = 0
                        info.uname = info.gname = ""
                        if path.is_dir():
                            info.type = tarfile.DIRTYPE
                            info.mode = 0o755
                            tar.addfile(info)
                        else:
                            data = path.read_bytes()
                            info.size = len(data)
                            info.mode = 0o644
                            with open(path, "rb") as f:
                                tar.addfile(info, f)

    def import_snapshot(self, in_path: Path | str) -> None:
        if self._has_data():
            raise NotEmpty("import target already holds data")
        in_path = Path(in_path)
        try:
            tar = tarfile.open(in_path, mode="r:gz")
        except (tarfile.TarError, OSError, EOFError) as exc:
            raise BadArchive(f"cannot read archive: {exc}") from exc
        with tar:
            members = tar.getmembers()
            for m in members:
                name = Path(m.name)
                if name.is_absolute() or ".." in name.parts:
                    raise BadArchive(f"unsafe member path: {m.name}")
                if not (m.isreg() or m.isdir()):
                    raise BadArchive(f"unsupported member type: {m.name}")
            for m in members:
                target = self.data_dir / m.name
                if m.isdir():
                    target.mkdir(parents=True, exist_ok=True)
                else:
                    target.parent.mkdir(parents=True, exist_ok=True)
                    f = tar.extractfile(m)
                    assert f is not None
                    target.write_bytes(f.read())
        # The imported tree must satisfy the same invariants as any open.
        self._load_and_validate()

    # -- open-time validation ------------------------------------------

    def _load_and_validate(self) -> None:
        try:
            manifest = json.loads(self.manifest_path.read_bytes())
        except (OSError, json.JSONDecodeError) as exc:
            raise CorruptManifest(f"cannot read manifest: {exc}") from exc
        if manifest.get("format_version") != FORMAT_VERSION:
            raise CorruptManifest(
                f"unknown format_version: {manifest.get('format_version')!r}"
            )
        if not isinstance(manifest.get("last_event_seq"), int) or manifest["last_event_seq"] < 0:
            raise CorruptManifest("last_event_seq must be a non-negative integer")
        self.manifest = manifest

        event_docs = self._validate_log()
        tail = event_docs[-1]["seq"] if event_docs else 0
        if self.manifest["last_event_seq"] > tail:
            raise SeqMismatch(
                f"manifest says seq {self.manifest['last_event_seq']} but log ends at {tail}"
            )
        if self.manifest["last_event_seq"] < tail:
            # Crash window between log append and manifest rewrite: the
            # flushed log line was the ack point, so the log wins.
            self.manifest["last_event_seq"] = tail
            self._write_manifest()
        self._reconcile(event_docs)

    def _validate_log(self) -> list[dict]:
        """Parse the log, dropping a torn final line (crash mid-append) and
        rejecting gaps, duplicates, or corruption anywhere else."""
        try:
            raw = self.events_path.read_bytes()
        except FileNotFoundError:
            return []
        lines = raw.split(b"\n")
        if lines and lines[-1] == b"":
            lines.pop()
        docs: list[dict] = []
        good_bytes = 0
        for i, line in enumerate(lines):
            doc = None
            try:
                doc = json.loads(line)
            except json.JSONDecodeError:
                pass
            if not isinstance(doc, dict) or "seq" not in doc:
                if i == len(lines) - 1:
                    # Unacked tail from an interrupted append: discard.
                    self.events_path.write_bytes(raw[:good_bytes])
                    break
                raise SeqMismatch(f"event log corrupt at line {i + 1}")
            expected = docs[-1]["seq"] + 1 if docs else 1
            if doc["seq"] != expected:
                raise SeqMismatch(
                    f"event log line {i + 1} has seq {doc['seq']}, expected {expected}"
                )
            docs.append(doc)
            good_bytes += len(line) + 1
        else:
            if raw and not raw.endswith(b"\n"):
                # Complete final line that lost only its newline: restore it
                # so the next append starts on a fresh line.
                with open(self.events_path, "ab") as f:
                    f.write(b"\n")
        return docs

    def _reconcile(self, event_docs: list[dict]) -> None:
        """Repair the commit-then-log crash window: any document state the
        log missed gets a reconciliation event so replay equals the store."""
        logged = _fold_log(event_docs)
        now = format_ts(datetime.now(timezone.utc))
        kinds = {"tasks": "task", "users": "user"}
        seen: set[tuple[str, str]] = set()
        for collection, kind in kinds.items():
            for doc in sorted(self.scan(collection), key=lambda d: d["id"]):
                key = (kind, doc["id"])
                seen.add(key)
                snapshot = logged.get(key)
                logged_rev = snapshot["revision"] if snapshot else 0
                if doc["revision"] > logged_rev:
                    self.append_event_doc(
                        {
                            "at": now,
                            "actor_id": SYSTEM_ACTOR,
                            "entity_kind": kind,
                            "entity_id": doc["id"],
                            "op_kind": "upsert",
                            "snapshot": doc,
                        }
                    )
                elif doc["revision"] < logged_rev:
                    raise SeqMismatch(
                        f"log is ahead of store for {collection}/{doc['id']} "
                        f"(log rev {logged_rev}, store rev {doc['revision']})"
                    )
        for key, snapshot in sorted(logged.items()):
            if snapshot is not None and key not in seen:
                kind, entity_id = key
                self.append_event_doc(
                    {
                        "at": now,
                        "actor_id": SYSTEM_ACTOR,
                        "entity_kind": kind,
                        "entity_id": entity_id,
                        "op_kind": "hard_delete",
                    }
                )


def open_store(data_dir: Path | str, blob_size_limit: int = DEFAULT_BLOB_SIZE_LIMIT) -> StoreHandle:
    """Open (initializing if needed) a data directory and return a handle.

    Recovery steps, in order: initialize missing layout, sweep orphaned tmp
    files from interrupted writes, validate the manifest and event log, heal
    the manifest forward if a flushed log line outran it, then append
    reconciliation events for any committed state the log missed.
    """
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    for sub in (*COLLECTIONS, "blobs"):
        (data_dir / sub).mkdir(exist_ok=True)
    handle = StoreHandle(data_dir, blob_size_limit=blob_size_limit)
    if not handle.manifest_path.exists():
        handle.manifest = {"format_version": FORMAT_VERSION, "last_event_seq": 0}
        handle._write_manifest()
    if not handle.events_path.exists():
        handle.events_path.touch()
    for tmp in data_dir.rglob("*.tmp"):
        tmp.unlink()
    handle._load_and_validate()
    return handle
