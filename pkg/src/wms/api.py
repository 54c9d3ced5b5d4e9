"""HTTP service: REST routes over the store, domain rules, auth, metrics,
and the live event stream.

Error contract: every error body is exactly ``{"error": {"code", "message",
"details"?}}`` with a fixed code↔status table (`unauthorized` 401,
`forbidden` 403, `not_found` 404, `stale_revision` 409, `validation`
409/415/422, `payload_too_large` 413, `internal` 500). All success bodies
are canonical JSON: sorted keys, compact separators — repeated reads are
byte-identical.
"""

from __future__ import annotations

import queue
import re
import threading
import time
from dataclasses import dataclass, replace
from datetime import datetime, timezone

from fastapi import Depends, FastAPI, File, Header, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import Response, StreamingResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import auth as auth_mod
from . import domain, events, fixtures, metrics
from .auth import Action, TokenClaims, authorize, verify_password, verify_token
from .canonical import canonical_dumps, format_ts, parse_date, truncate_ms
from .domain import (
    Priority,
    Role,
    TaskStatus,
    UserAccount,
    account_from_doc,
    account_public_doc,
    task_from_doc,
    task_to_doc,
)
from .ids import new_id
from .store import (
    BadPage,
    BlobNotFound,
    ListFilter,
    NotFound,
    Page,
    StaleRevision,
    StoreHandle,
)

DEFAULT_TOKEN_TTL_SECONDS = 8 * 60 * 60
DEFAULT_ORIGINS = [
    "http://localhost:5173",
    "http://127.0.0.1:5173",
    "http://localhost:3000",
    "http://127.0.0.1:3000",
]
DEFAULT_ACTIVITY_N = 20


class ApiError(Exception):
    def __init__(self, http_status: int, code: str, message: str, details: dict | None = None):
        super().__init__(message)
        self.http_status = http_status
        self.code = code
        self.message = message
        self.details = details

    def body(self) -> dict:
        err: dict = {"code": self.code, "message": self.message}
        if self.details is not None:
            err["details"] = self.details
        return {"error": err}


def _unauthorized(message: str = "invalid credentials") -> ApiError:
    return ApiError(401, "unauthorized", message)


def _forbidden() -> ApiError:
    return ApiError(403, "forbidden", "role does not permit this action")


def _not_found(what: str) -> ApiError:
    return ApiError(404, "not_found", f"{what} not found")


def _validation(message: str, details: dict | None = None, http_status: int = 422) -> ApiError:
    return ApiError(http_status, "validation", message, details)


def jresp(data, status_code: int = 200) -> Response:
    return Response(
        content=canonical_dumps(data),
        status_code=status_code,
        media_type="application/json",
    )


@dataclass
class Actor:
    """The authenticated caller; role is the account's *current* role, read
    from the store on every request (a stale token cannot outlive a
    demotion or deactivation)."""

    account: UserAccount
    claims: TokenClaims

    @property
    def id(self) -> str:
        return self.account.id

    @property
    def role(self) -> Role:
        return self.account.role


_IF_MATCH_RE = re.compile(r'^"?(\d+)"?$')


def parse_if_match(value: str | None) -> int:
    if value is None:
        raise _validation("If-Match header with the task revision is required")
    m = _IF_MATCH_RE.match(value.strip())
    if not m:
        raise _validation("If-Match must be an integer revision")
    return int(m.group(1))


def _field(payload: dict, name: str, kind: type, required: bool = False):
    if name not in payload:
        if required:
            raise _validation(f"missing field: {name}", {name: "required"})
        return None
    value = payload[name]
    if not isinstance(value, kind) or (kind is not bool and isinstance(value, bool)):
        raise _validation(f"field {name} must be {kind.__name__}", {name: f"expected {kind.__name__}"})
    return value


def _enum_field(payload: dict, name: str, enum_cls):
    raw = _field(payload, name, str)
    if raw is None:
        return None
    try:
        return enum_cls(raw)
    except ValueError:
        allowed = ", ".join(m.value for m in enum_cls)
        raise _validation(f"field {name} must be one of: {allowed}", {name: raw}) from None


def _assignee_list(payload: dict) -> frozenset[str] | None:
    if "assignee_ids" not in payload:
        return None
    raw = payload["assignee_ids"]
    if not isinstance(raw, list) or not all(isinstance(x, str) and x for x in raw):
        raise _validation("assignee_ids must be a list of non-empty strings")
    return frozenset(raw)


def _reject_unknown(payload: dict, allowed: set[str]) -> None:
    unknown = sorted(set(payload) - allowed)
    if unknown:
        raise _validation(
            "unknown fields: " + ", ".join(unknown), {f: "unknown field" for f in unknown}
        )


_FILENAME_SAFE = re.compile(r"[^A-Za-z0-9._ -]")


def redact_event_doc(doc: dict) -> dict:
    """Event as sent over the wire: account snapshots lose the credential
    record (it must round-trip in storage but never leave the server)."""
    if doc.get("entity_kind") == "user" and doc.get("snapshot"):
        snapshot = dict(doc["snapshot"])
        snapshot.pop("password_hash", None)
        return {**doc, "snapshot": snapshot}
    return doc


def sse_frame(doc: dict) -> bytes:
    redacted = redact_event_doc(doc)
    return f"id: {doc['seq']}\ndata: {canonical_dumps(redacted)}\n\n".encode("utf-8")


def create_app(
    store: StoreHandle,
    *,
    token_key: bytes,
    token_ttl_seconds: int = DEFAULT_TOKEN_TTL_SECONDS,
    allowed_origins: list[str] | None = None,
    heartbeat_seconds: float = 15.0,
    hash_params: auth_mod.HashParams = auth_mod.DEFAULT_HASH_PARAMS,
) -> FastAPI:
    if len(token_key) < auth_mod.MIN_KEY_BYTES:
        raise ValueError(f"token key must be at least {auth_mod.MIN_KEY_BYTES} bytes")

    app = FastAPI(title="wms", docs_url=None, redoc_url=None, openapi_url=None)
    app.state.store = store
    register_lock = threading.Lock()

    app.add_middleware(
        CORSMiddleware,
        allow_origins=allowed_origins if allowed_origins is not None else DEFAULT_ORIGINS,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    # -- error shaping -------------------------------------------------

    @app.exception_handler(ApiError)
    async def on_api_error(request: Request, exc: ApiError):
        return jresp(exc.body(), exc.http_status)

    @app.exception_handler(RequestValidationError)
    async def on_request_validation(request: Request, exc: RequestValidationError):
        if request.method == "POST" and re.fullmatch(r"/api/tasks/[^/]+/assets", request.url.path):
            return jresp(
                _validation(
                    "multipart form with a 'file' part is required", http_status=415
                ).body(),
                415,
            )
        first = exc.errors()[0] if exc.errors() else {}
        where = ".".join(str(p) for p in first.get("loc", ())) or "body"
        return jresp(_validation(f"invalid request: {where}: {first.get('msg', 'invalid')}").body(), 422)

    @app.exception_handler(StarletteHTTPException)
    async def on_http_error(request: Request, exc: StarletteHTTPException):
        table = {401: "unauthorized", 403: "forbidden", 404: "not_found", 413: "payload_too_large"}
        code = table.get(exc.status_code, "validation")
        return jresp({"error": {"code": code, "message": str(exc.detail)}}, exc.status_code)

    @app.exception_handler(Exception)
    async def on_unhandled(request: Request, exc: Exception):
        return jresp({"error": {"code": "internal", "message": "internal error"}}, 500)

    # -- auth plumbing -------------------------------------------------

    def current_actor(authorization: str | None = Header(default=None)) -> Actor:
        if not authorization or not authorization.startswith("Bearer "):
            raise _unauthorized("bearer token required")
        token = authorization[len("Bearer ") :].strip()
        try:
            claims = verify_token(token, token_key, now=int(time.time()))
        except auth_mod.TokenError as exc:
            raise _unauthorized(f"token rejected: {exc.__class__.__name__.lower()}") from None
        try:
            doc = store.get("users", claims.sub)
        except NotFound:
            raise _unauthorized("account no longer exists") from None
        account = account_from_doc(doc)
        if not account.active:
            raise _unauthorized("account is deactivated")
        return Actor(account=account, claims=claims)

    def need(actor: Actor, action: Action) -> None:
        if not authorize(actor.role, action):
            raise _forbidden()

    # -- task mutation plumbing ----------------------------------------

    def get_task_doc(task_id: str) -> dict:
        try:
            return store.get("tasks", task_id)
        except NotFound:
            raise _not_found("task") from None

    def run_domain(fn):
        """Translate domain/store failures into wire errors."""
        try:
            return fn()
        except (domain.EmptyTitle, domain.TitleTooLong, domain.DescriptionTooLong) as exc:
            raise _validation(str(exc)) from None
        except (domain.TaskTrashed, domain.AlreadyTrashed, domain.NotTrashed) as exc:
            raise _validation(str(exc), http_status=409) from None
        except domain.AssetTooLarge as exc:
            raise ApiError(413, "payload_too_large", str(exc)) from None
        except StaleRevision as exc:
            raise ApiError(
                409,
                "stale_revision",
                "task was modified by someone else",
                {"current_revision": exc.current_revision},
            ) from None
        except BadPage as exc:
            raise _validation(str(exc)) from None
        except ValueError as exc:
            raise _validation(str(exc)) from None

    def commit_task(task, expected_revision: int | None, actor: Actor) -> dict:
        doc = task_to_doc(task)
        events.commit_with_event(
            store, "tasks", doc, expected_revision, at=doc["updated_at"], actor_id=actor.id
        )
        return doc

    # -- routes: auth --------------------------------------------------

    @app.post("/api/auth/login")
    def login(payload: dict):
        email = _field(payload, "email", str, required=True)
        password = _field(payload, "password", str, required=True)
        try:
            doc = fixtures.find_account_by_email(store, email)
        except ValueError:
            doc = None
        if doc is None:
            raise _unauthorized()
        account = account_from_doc(doc)
        if not account.active or not verify_password(password, account.password_hash):
            raise _unauthorized()
        now = int(time.time())
        claims = TokenClaims(
            sub=account.id,
            role=account.role,
            iat=now,
            exp=now + token_ttl_seconds,
            jti=new_id(),
        )
        token = auth_mod.issue_token(claims, token_key)
        return jresp({"token": token, "account": account_public_doc(account)})

    @app.get("/api/me")
    def me(actor: Actor = Depends(current_actor)):
        return jresp(account_public_doc(actor.account))

    # -- routes: tasks -------------------------------------------------

    @app.get("/api/tasks")
    def list_tasks(
        status: str | None = None,
        priority: str | None = None,
        assignee: str | None = None,
        offset: int = 0,
        limit: int = 100,
        actor: Actor = Depends(current_actor),
    ):
        need(actor, Action.TASK_READ)
        if status is not None and status not in {s.value for s in TaskStatus}:
            raise _validation(f"unknown status: {status}", {"status": status})
        if priority is not None and priority not in {p.value for p in Priority}:
            raise _validation(f"unknown priority: {priority}", {"priority": priority})
        flt = ListFilter(status=status, priority=priority, assignee=assignee, trashed=False)
        docs, total = run_domain(lambda: store.list("tasks", flt, Page(offset=offset, limit=limit)))
        return jresp({"tasks": docs, "total_count": total, "offset": offset, "limit": limit})

    @app.post("/api/tasks")
    def create_task_route(payload: dict, actor: Actor = Depends(current_actor)):
        need(actor, Action.TASK_CREATE)
        _reject_unknown(payload, {"title", "description", "priority", "assignee_ids", "due_date"})
        title = _field(payload, "title", str, required=True)
        description = _field(payload, "description", str) or ""
        priority = _enum_field(payload, "priority", Priority) or Priority.MEDIUM
        assignees = _assignee_list(payload) or frozenset()
        due = None
        if payload.get("due_date") is not None:
            raw_due = _field(payload, "due_date", str)
            due = run_domain(lambda: parse_date(raw_due))
        task_id = new_id()
        now = datetime.now(timezone.utc)
        task = run_domain(
            lambda: domain.create_task(title, description, priority, assignees, due, actor.account, now, task_id)
        )
        with store.entity_lock("tasks", task_id):
            doc = commit_task(task, None, actor)
        return jresp(doc, 201)

    @app.get("/api/tasks/{task_id}")
    def get_task(task_id: str, actor: Actor = Depends(current_actor)):
        need(actor, Action.TASK_READ)
        return jresp(get_task_doc(task_id))

    @app.patch("/api/tasks/{task_id}")
    def patch_task(
        task_id: str,
        payload: dict,
        actor: Actor = Depends(current_actor),
        if_match: str | None = Header(default=None, alias="If-Match"),
    ):
        need(actor, Action.TASK_EDIT)
        expected = parse_if_match(if_match)
        allowed = {"title", "description", "status", "priority", "assignee_ids", "due_date"}
        _reject_unknown(payload, allowed)
        title = _field(payload, "title", str)
        description = _field(payload, "description", str)
        status = _enum_field(payload, "status", TaskStatus)
        priority = _enum_field(payload, "priority", Priority)
        assignees = _assignee_list(payload)
        due = domain.UNSET
        if "due_date" in payload:
            if payload["due_date"] is None:
                due = None
            else:
                raw_due = _field(payload, "due_date", str)
                due = run_domain(lambda: parse_date(raw_due))
        with store.entity_lock("tasks", task_id):
            current = get_task_doc(task_id)
            if current["revision"] != expected:
                raise ApiError(
                    409,
                    "stale_revision",
                    "task was modified by someone else",
                    {"current_revision": current["revision"]},
                )
            task = task_from_doc(current)
            updated = run_domain(
                lambda: domain.update_task(
                    task,
                    actor.account,
                    datetime.now(timezone.utc),
                    title=title,
                    description=description,
                    status=status,
                    priority=priority,
                    assignee_ids=assignees,
                    due_date=due,
                )
            )
            if updated is task:
                return jresp(current)  # no-op: nothing stored, no event
            doc = commit_task(updated, expected, actor)
        return jresp(doc)

    @app.delete("/api/tasks/{task_id}")
    def trash_task(task_id: str, actor: Actor = Depends(current_actor)):
        need(actor, Action.TASK_TRASH)
        with store.entity_lock("tasks", task_id):
            task = task_from_doc(get_task_doc(task_id))
            updated = run_domain(
                lambda: domain.soft_delete(task, actor.account, datetime.now(timezone.utc))
            )
            doc = commit_task(updated, task.revision, actor)
        return jresp(doc)

    @app.get("/api/tasks/{task_id}/activity")
    def task_activity(task_id: str, actor: Actor = Depends(current_actor)):
        need(actor, Action.TASK_READ)
        doc = get_task_doc(task_id)
        return jresp({"task_id": task_id, "activity": doc["activity"]})

    # -- routes: assets ------------------------------------------------

    @app.post("/api/tasks/{task_id}/assets")
    def upload_asset(
        task_id: str,
        file: UploadFile | None = File(default=None),
        actor: Actor = Depends(current_actor),
    ):
        need(actor, Action.ASSET_UPLOAD)
        if file is None:
            raise _validation("multipart form with a 'file' part is required", http_status=415)
        data = file.file.read()
        if not data:
            raise _validation("uploaded file is empty", {"file": "empty"})
        if len(data) > store.blob_size_limit:
            raise ApiError(
                413,
                "payload_too_large",
                f"file exceeds the {store.blob_size_limit}-byte limit",
            )
        with store.entity_lock("tasks", task_id):
            task = task_from_doc(get_task_doc(task_id))
            now = datetime.now(timezone.utc)
            blob = run_domain(lambda: store.put_blob(data))
            ref = domain.AssetRef(
                id=new_id(),
                content_hash=blob.content_hash,
                filename=file.filename or "unnamed",
                media_type=file.content_type or "application/octet-stream",
                size_bytes=len(data),
                uploaded_at=truncate_ms(now),
                uploaded_by=actor.id,
            )
            updated = run_domain(
                lambda: domain.attach_asset(task, ref, actor.account, now, store.blob_size_limit)
            )
            doc = commit_task(updated, task.revision, actor)
        return jresp(
            {
                "asset": domain.asset_to_doc(ref),
                "download_path": f"/api/assets/{ref.id}",
                "task": doc,
            },
            201,
        )

    @app.get("/api/assets/{asset_id}")
    def download_asset(asset_id: str, actor: Actor = Depends(current_actor)):
        need(actor, Action.TASK_READ)
        for task_doc in store.scan("tasks"):
            for ref in task_doc["asset_refs"]:
                if ref["id"] == asset_id:
                    try:
                        data = store.get_blob(ref["content_hash"])
                    except BlobNotFound:
                        raise _not_found("asset content") from None
                    safe_name = _FILENAME_SAFE.sub("_", ref["filename"]) or "download"
                    return Response(
                        content=data,
                        media_type=ref["media_type"],
                        headers={
                            "Content-Disposition": f'attachment; filename="{safe_name}"'
                        },
                    )
        raise _not_found("asset")

    # -- routes: trash -------------------------------------------------

    @app.get("/api/trash")
    def list_trash(actor: Actor = Depends(current_actor)):
        need(actor, Action.TASK_READ)
        docs, total = store.list("tasks", ListFilter(trashed=True), Page(offset=0, limit=500))
        return jresp({"tasks": docs, "total_count": total})

    @app.post("/api/trash/{task_id}/restore")
    def restore_task(task_id: str, actor: Actor = Depends(current_actor)):
        need(actor, Action.TASK_RESTORE)
        with store.entity_lock("tasks", task_id):
            task = task_from_doc(get_task_doc(task_id))
            updated = run_domain(
                lambda: domain.restore(task, actor.account, datetime.now(timezone.utc))
            )
            doc = commit_task(updated, task.revision, actor)
        return jresp(doc)

    @app.delete("/api/trash/{task_id}")
    def purge_task(task_id: str, actor: Actor = Depends(current_actor)):
        need(actor, Action.TRASH_PURGE)
        with store.entity_lock("tasks", task_id):
            doc = get_task_doc(task_id)
            if not doc["trashed"]:
                raise _validation("task is not in the trash", http_status=409)
            events.delete_with_event(
                store,
                "tasks",
                task_id,
                at=format_ts(datetime.now(timezone.utc)),
                actor_id=actor.id,
            )
        return jresp({"ok": True, "id": task_id})

    # -- routes: dashboard ---------------------------------------------

    def _all_tasks():
        return [task_from_doc(d) for d in store.scan("tasks")]

    @app.get("/api/dashboard/summary")
    def dashboard_summary(actor: Actor = Depends(current_actor)):
        need(actor, Action.DASHBOARD_READ)
        return jresp(metrics.summary(_all_tasks()).to_doc())

    @app.get("/api/dashboard/workload")
    def dashboard_workload(actor: Actor = Depends(current_actor)):
        need(actor, Action.DASHBOARD_READ)
        accounts = [account_from_doc(d) for d in store.scan("users")]
        rows = metrics.workload_by_assignee(_all_tasks(), accounts)
        return jresp({"rows": [r.to_doc() for r in rows]})

    @app.get("/api/dashboard/priority")
    def dashboard_priority(actor: Actor = Depends(current_actor)):
        need(actor, Action.DASHBOARD_READ)
        return jresp(metrics.priority_breakdown(_all_tasks()).to_doc())

    @app.get("/api/dashboard/activity")
    def dashboard_activity(n: int = DEFAULT_ACTIVITY_N, actor: Actor = Depends(current_actor)):
        need(actor, Action.DASHBOARD_READ)
        items = run_domain(lambda: metrics.recent_activity(_all_tasks(), n))
        return jresp({"items": [i.to_doc() for i in items]})

    # -- routes: team --------------------------------------------------

    @app.get("/api/team")
    def list_team(actor: Actor = Depends(current_actor)):
        need(actor, Action.USER_LIST)
        docs, total = store.list("users", None, Page(offset=0, limit=500))
        return jresp({"users": [account_public_doc(d) for d in docs], "total_count": total})

    @app.post("/api/team")
    def create_team_member(payload: dict, actor: Actor = Depends(current_actor)):
        need(actor, Action.USER_CREATE)
        _reject_unknown(payload, {"name", "email", "password", "role"})
        name = _field(payload, "name", str, required=True)
        email = _field(payload, "email", str, required=True)
        password = _field(payload, "password", str, required=True)
        role = _enum_field(payload, "role", Role)
        if role is None:
            raise _validation("missing field: role", {"role": "required"})
        try:
            with register_lock:
                account = fixtures.register_account(
                    store,
                    name=name,
                    email=email,
                    password=password,
                    role=role,
                    hash_params=hash_params,
                    actor_id=actor.id,
                )
        except fixtures.DuplicateEmail as exc:
            raise _validation(str(exc), {"email": "already in use"}, http_status=409) from None
        except (auth_mod.PasswordTooShort, auth_mod.PasswordTooLong, ValueError) as exc:
            raise _validation(str(exc)) from None
        return jresp(account_public_doc(account), 201)

    @app.patch("/api/team/{account_id}")
    def patch_team_member(
        account_id: str, payload: dict, actor: Actor = Depends(current_actor)
    ):
        _reject_unknown(payload, {"role", "active"})
        if not payload:
            raise _validation("provide role and/or active")
        role = _enum_field(payload, "role", Role)
        active = _field(payload, "active", bool) if "active" in payload else None
        if role is not None:
            need(actor, Action.USER_EDIT_ROLE)
        if active is not None:
            need(actor, Action.USER_DEACTIVATE)
        if role is None and active is None:
            raise _validation("provide role and/or active")
        with store.entity_lock("users", account_id):
            try:
                doc = store.get("users", account_id)
            except NotFound:
                raise _not_found("account") from None
            account = account_from_doc(doc)
            changed = {}
            if role is not None and role is not account.role:
                changed["role"] = role
            if active is not None and active is not account.active:
                changed["active"] = active
            if not changed:
                return jresp(account_public_doc(account))
            updated = replace(account, revision=account.revision + 1, **changed)
            new_doc = domain.account_to_doc(updated)
            events.commit_with_event(
                store,
                "users",
                new_doc,
                account.revision,
                at=format_ts(datetime.now(timezone.utc)),
                actor_id=actor.id,
            )
        return jresp(account_public_doc(new_doc))

    # -- routes: events ------------------------------------------------

    @app.get("/api/events")
    def event_stream(after_seq: int = 0, actor: Actor = Depends(current_actor)):
        need(actor, Action.TASK_READ)
        if after_seq < 0:
            raise _validation("after_seq must be non-negative")
        # Subscribe before reading the backlog so nothing can fall between
        # replay and live delivery; duplicates are dropped by seq.
        sub = store.subscribe()

        def stream():
            last = after_seq
            try:
                for doc in store.read_event_docs(after_seq):
                    if doc["seq"] > last:
                        yield sse_frame(doc)
                        last = doc["seq"]
                while True:
                    try:
                        doc = sub.events.get(timeout=heartbeat_seconds)
                    except queue.Empty:
                        if sub.broken:
                            return
                        yield b": heartbeat\n\n"
                        continue
                    if doc["seq"] > last:
                        yield sse_frame(doc)
                        last = doc["seq"]
            finally:
                store.unsubscribe(sub)

        return StreamingResponse(
            stream(),
            media_type="text/event-stream",
            headers={
                "Cache-Control": "no-cache",
                "X-Accel-Buffering": "no",
            },
        )

    # -- routes: health ------------------------------------------------

    @app.get("/api/health")
    def health():
        return jresp({"status": "ok", "last_event_seq": store.manifest["last_event_seq"]})

    return app
