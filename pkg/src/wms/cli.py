"""Operator command line: run the server, bootstrap accounts, seed demo
data, and move snapshots around.

Conventions: diagnostics go to stderr, results to stdout, `--json` switches
stdout to canonical JSON, exit status is 0 only on success. Options fall
back to `WMS_*` environment variables, then to built-in defaults.
"""

from __future__ import annotations

import socket
from dataclasses import dataclass, field
from pathlib import Path

import click
import uvicorn

from .api import DEFAULT_ORIGINS, create_app
from .auth import MIN_KEY_BYTES, AuthError
from .canonical import canonical_dumps
from .domain import Role, account_public_doc
from .fixtures import (
    FixtureError,
    apply_fixture,
    demo_fixture,
    load_fixture_file,
    register_account,
)
from .store import DEFAULT_BLOB_SIZE_LIMIT, StoreError, open_store

DEFAULT_PORT = 8080
DEFAULT_TOKEN_TTL = 28_800


@dataclass
class Config:
    """Effective server settings after flag/env/default resolution."""

    port: int = DEFAULT_PORT
    data_dir: Path = Path("./data")
    secret_file: Path | None = None
    asset_size_limit_bytes: int = DEFAULT_BLOB_SIZE_LIMIT
    token_ttl_seconds: int = DEFAULT_TOKEN_TTL
    allowed_origins: list[str] = field(default_factory=lambda: list(DEFAULT_ORIGINS))


def load_secret(path: Path) -> bytes:
    """The token signing key is the raw file content; short keys are refused
    outright rather than stretched."""
    try:
        key = Path(path).read_bytes()
    except OSError as exc:
        raise click.ClickException(f"cannot read secret file: {exc}")
    if len(key) < MIN_KEY_BYTES:
        raise click.ClickException(
            f"secret file must hold at least {MIN_KEY_BYTES} bytes (has {len(key)})"
        )
    return key


def _open(data_dir: Path, asset_limit: int = DEFAULT_BLOB_SIZE_LIMIT):
    try:
        return open_store(data_dir, blob_size_limit=asset_limit)
    except StoreError as exc:
        raise click.ClickException(f"cannot open store at {data_dir}: {exc}")


def data_dir_option(f):
    return click.option(
        "--data-dir",
        envvar="WMS_DATA_DIR",
        default="./data",
        show_default=True,
        type=click.Path(path_type=Path),
        help="store directory",
    )(f)


def json_option(f):
    return click.option("--json", "as_json", is_flag=True, help="canonical JSON on stdout")(f)


@click.group()
@click.version_option(package_name="wms")
def main():
    """Team workflow service: tasks, boards, and the people behind them."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", envvar="WMS_PORT", default=DEFAULT_PORT, show_default=True, type=int)
@data_dir_option
@click.option(
    "--secret-file",
    envvar="WMS_SECRET_FILE",
    required=True,
    type=click.Path(path_type=Path),
    help="file holding the ≥32-byte token signing key",
)
@click.option(
    "--asset-limit",
    envvar="WMS_ASSET_LIMIT",
    default=DEFAULT_BLOB_SIZE_LIMIT,
    show_default=True,
    type=int,
    help="max upload size in bytes",
)
@click.option(
    "--token-ttl",
    envvar="WMS_TOKEN_TTL",
    default=DEFAULT_TOKEN_TTL,
    show_default=True,
    type=int,
    help="token lifetime in seconds",
)
@click.option(
    "--origins",
    envvar="WMS_ORIGINS",
    default=None,
    help="comma-separated allowed CORS origins",
)
def serve(host, port, data_dir, secret_file, asset_limit, token_ttl, origins):
    """Run the HTTP service until interrupted."""
    config = Config(
        port=port,
        data_dir=data_dir,
        secret_file=secret_file,
        asset_size_limit_bytes=asset_limit,
        token_ttl_seconds=token_ttl,
        allowed_origins=(
            [o.strip() for o in origins.split(",") if o.strip()]
            if origins
            else list(DEFAULT_ORIGINS)
        ),
    )
    key = load_secret(config.secret_file)
    store = _open(config.data_dir, config.asset_size_limit_bytes)
    app = create_app(
        store,
        token_key=key,
        token_ttl_seconds=config.token_ttl_seconds,
        allowed_origins=config.allowed_origins,
    )
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((host, config.port))
    except OSError as exc:
        sock.close()
        raise click.ClickException(f"cannot bind {host}:{config.port}: {exc}")
    sock.listen(2048)
    click.echo(
        f"serving on http://{host}:{config.port} "
        f"data_dir={config.data_dir} last_event_seq={store.manifest['last_event_seq']}",
        err=True,
    )
    server = uvicorn.Server(
        uvicorn.Config(app, log_level="warning", timeout_graceful_shutdown=2)
    )
    try:
        server.run(sockets=[sock])
    except KeyboardInterrupt:
        # uvicorn replays the interrupt after finishing its graceful
        # shutdown; by this point every in-flight request has completed.
        pass
    click.echo("shutdown complete", err=True)


@main.command()
@click.argument("fixture", default="demo")
@data_dir_option
@json_option
def seed(fixture, data_dir, as_json):
    """Populate an empty store from FIXTURE ("demo" or a fixture file)."""
    store = _open(data_dir)
    try:
        doc = demo_fixture() if fixture == "demo" else load_fixture_file(fixture)
        counts = apply_fixture(store, doc)
    except FixtureError as exc:
        raise click.ClickException(str(exc))
    if as_json:
        click.echo(canonical_dumps(counts))
    else:
        click.echo(
            f"seeded {counts['users']} users, {counts['tasks']} tasks "
            f"({counts['events']} events)"
        )


@main.command("user-create")
@click.option("--name", required=True)
@click.option("--email", required=True)
@click.option("--password", required=True)
@click.option(
    "--role",
    required=True,
    type=click.Choice([r.value for r in Role]),
)
@data_dir_option
@json_option
def user_create(name, email, password, role, data_dir, as_json):
    """Create an account (the first one must be an admin)."""
    store = _open(data_dir)
    try:
        account = register_account(
            store, name=name, email=email, password=password, role=Role(role)
        )
    except (FixtureError, AuthError, ValueError) as exc:
        raise click.ClickException(str(exc))
    if as_json:
        click.echo(canonical_dumps(account_public_doc(account)))
    else:
        click.echo(f"created {account.id} ({account.email}, {account.role.value})")


@main.command()
@click.argument("out", type=click.Path(path_type=Path))
@data_dir_option
@json_option
def export(out, data_dir, as_json):
    """Write the whole store as a gzip tar snapshot at OUT."""
    store = _open(data_dir)
    try:
        store.export_snapshot(out)
    except OSError as exc:
        raise click.ClickException(f"export failed: {exc}")
    size = out.stat().st_size
    if as_json:
        click.echo(canonical_dumps({"path": str(out), "bytes": size}))
    else:
        click.echo(f"exported {out} ({size} bytes)")


@main.command("import")
@click.argument("src", type=click.Path(path_type=Path))
@data_dir_option
@json_option
def import_cmd(src, data_dir, as_json):
    """Restore a snapshot archive into an empty store."""
    store = _open(data_dir)
    try:
        store.import_snapshot(src)
    except StoreError as exc:
        raise click.ClickException(f"import failed: {exc}")
    counts = {
        "tasks": len(store.scan("tasks")),
        "users": len(store.scan("users")),
        "events": store.manifest["last_event_seq"],
    }
    if as_json:
        click.echo(canonical_dumps(counts))
    else:
        click.echo(
            f"imported {counts['tasks']} tasks, {counts['users']} users "
            f"({counts['events']} events)"
        )


if __name__ == "__main__":
    main()
