"""Credential hashing, signed bearer tokens, and the role policy matrix.

Passwords are hashed with scrypt (memory-hard, per-record random salt) into a
self-describing record string. Tokens are RFC 7519 compact serializations
signed with HMAC-SHA-256; they are signed, not encrypted — claims are not
secret, integrity and authenticity are the point. Verification rejects every
algorithm other than HS256, including `none`.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import json
import secrets
from dataclasses import dataclass
from enum import Enum

from .canonical import canonical_dump_bytes
from .domain import Role

MIN_KEY_BYTES = 32
MIN_PASSWORD_LEN = 8
MAX_PASSWORD_LEN = 128

_HASH_ALG = "scrypt"
_JWT_HEADER = b'{"alg":"HS256","typ":"JWT"}'


class AuthError(Exception):
    pass


class PasswordTooShort(AuthError):
    pass


class PasswordTooLong(AuthError):
    pass


class WeakKey(AuthError):
    pass


class TokenError(AuthError):
    pass


class Malformed(TokenError):
    pass


class BadSignature(TokenError):
    pass


class Expired(TokenError):
    pass


class AlgRejected(TokenError):
    pass


# --- password hashing ---------------------------------------------------


@dataclass(frozen=True)
class HashParams:
    """scrypt cost settings. log2_n=14 (n=16384) is the interactive-login
    default; tests use cheaper settings via the params argument."""

    log2_n: int = 14
    r: int = 8
    p: int = 1
    salt_len: int = 16
    digest_len: int = 32


DEFAULT_HASH_PARAMS = HashParams()


def _b64(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).rstrip(b"=").decode("ascii")


def _unb64(s: str) -> bytes:
    pad = "=" * (-len(s) % 4)
    return base64.urlsafe_b64decode(s + pad)


def _derive(plaintext: str, salt: bytes, params: HashParams) -> bytes:
    n = 1 << params.log2_n
    return hashlib.scrypt(
        plaintext.encode("utf-8"),
        salt=salt,
        n=n,
        r=params.r,
        p=params.p,
        dklen=params.digest_len,
        maxmem=256 * params.r * n + (1 << 21),
    )


def hash_password(
    plaintext: str,
    params: HashParams = DEFAULT_HASH_PARAMS,
    salt: bytes | None = None,
) -> str:
    """Returns `$scrypt$ln=..,r=..,p=..$<salt>$<digest>` (base64url fields).

    salt is injectable only so the deterministic seed fixtures can reproduce
    byte-identical stores; every normal caller leaves it None.
    """
    if len(plaintext) < MIN_PASSWORD_LEN:
        raise PasswordTooShort(f"password must be at least {MIN_PASSWORD_LEN} characters")
    if len(plaintext) > MAX_PASSWORD_LEN:
        raise PasswordTooLong(f"password must be at most {MAX_PASSWORD_LEN} characters")
    if salt is None:
        salt = secrets.token_bytes(params.salt_len)
    if len(salt) < 16:
        raise ValueError("salt must be at least 16 bytes")
    digest = _derive(plaintext, salt, params)
    cost = f"ln={params.log2_n},r={params.r},p={params.p}"
    return f"${_HASH_ALG}${cost}${_b64(salt)}${_b64(digest)}"


def verify_password(plaintext: str, record: str) -> bool:
    """True iff plaintext is the original; digest comparison is constant-time."""
    parts = record.split("$")
    if len(parts) != 5 or parts[0] != "" or parts[1] != _HASH_ALG:
        raise ValueError("not a recognized password hash record")
    try:
        cost = dict(kv.split("=", 1) for kv in parts[2].split(","))
        params = HashParams(
            log2_n=int(cost["ln"]),
            r=int(cost["r"]),
            p=int(cost["p"]),
        )
        salt = _unb64(parts[3])
        expected = _unb64(parts[4])
    except (KeyError, ValueError) as exc:
        raise ValueError(f"corrupt password hash record: {exc}") from exc
    params = HashParams(
        log2_n=params.log2_n, r=params.r, p=params.p,
        salt_len=len(salt), digest_len=len(expected),
    )
    actual = _derive(plaintext, salt, params)
    return hmac.compare_digest(actual, expected)


# --- bearer tokens ------------------------------------------------------


@dataclass(frozen=True)
class TokenClaims:
    sub: str
    role: Role
    iat: int
    exp: int
    jti: str

    def __post_init__(self) -> None:
        if self.exp <= self.iat:
            raise ValueError("exp must be after iat")


def _claims_bytes(claims: TokenClaims) -> bytes:
    # Sorted-key compact JSON keeps issuance deterministic for a given
    # (claims, key) pair.
    return canonical_dump_bytes(
        {
            "exp": claims.exp,
            "iat": claims.iat,
            "jti": claims.jti,
            "role": claims.role.value,
            "sub": claims.sub,
        }
    )


def issue_token(claims: TokenClaims, key: bytes) -> str:
    if len(key) < MIN_KEY_BYTES:
        raise WeakKey(f"signing key must be at least {MIN_KEY_BYTES} bytes")
    signing_input = _b64(_JWT_HEADER) + "." + _b64(_claims_bytes(claims))
    sig = hmac.new(key, signing_input.encode("ascii"), hashlib.sha256).digest()
    return signing_input + "." + _b64(sig)


def verify_token(token: str, key: bytes, now: int) -> TokenClaims:
    """Claims iff the HS256 signature is valid under key and now < exp.

    The header algorithm must be exactly HS256; anything else — including
    `none` with an empty signature — is rejected before any signature check.
    """
    parts = token.split(".")
    if len(parts) != 3:
        raise Malformed("token must have three segments")
    header_b64, payload_b64, sig_b64 = parts
    try:
        header = json.loads(_unb64(header_b64))
    except (ValueError, json.JSONDecodeError) as exc:
        raise Malformed(f"bad header: {exc}") from exc
    if not isinstance(header, dict) or header.get("alg") != "HS256":
        raise AlgRejected(f"algorithm not allowed: {header.get('alg') if isinstance(header, dict) else header!r}")
    try:
        signing_input = (header_b64 + "." + payload_b64).encode("ascii")
    except UnicodeEncodeError as exc:
        raise Malformed("token must be ASCII") from exc
    expected = hmac.new(key, signing_input, hashlib.sha256).digest()
    try:
        provided = _unb64(sig_b64)
    except ValueError as exc:
        raise Malformed(f"bad signature encoding: {exc}") from exc
    if not hmac.compare_digest(expected, provided):
        raise BadSignature("signature mismatch")
    try:
        payload = json.loads(_unb64(payload_b64))
        claims = TokenClaims(
            sub=payload["sub"],
            role=Role(payload["role"]),
            iat=payload["iat"],
            exp=payload["exp"],
            jti=payload["jti"],
        )
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise Malformed(f"bad claims: {exc}") from exc
    if not isinstance(claims.iat, int) or not isinstance(claims.exp, int):
        raise Malformed("iat/exp must be integers")
    if now >= claims.exp:
        raise Expired("token has expired")
    return claims


# --- authorization ------------------------------------------------------


class Action(str, Enum):
    TASK_READ = "task_read"
    TASK_CREATE = "task_create"
    TASK_EDIT = "task_edit"
    TASK_TRASH = "task_trash"
    TASK_RESTORE = "task_restore"
    TRASH_PURGE = "trash_purge"
    ASSET_UPLOAD = "asset_upload"
    DASHBOARD_READ = "dashboard_read"
    USER_LIST = "user_list"
    USER_CREATE = "user_create"
    USER_EDIT_ROLE = "user_edit_role"
    USER_DEACTIVATE = "user_deactivate"
    EXPORT_IMPORT = "export_import"


_USER_ALLOWED: frozenset[Action] = frozenset(
    {
        Action.TASK_READ,
        Action.TASK_CREATE,
        Action.TASK_EDIT,
        Action.TASK_TRASH,
        Action.TASK_RESTORE,
        Action.ASSET_UPLOAD,
        Action.DASHBOARD_READ,
        Action.USER_LIST,
    }
)

#: Total mapping (role, action) -> allow. Admin allows everything, so the
#: admin-dominance invariant holds by construction.
POLICY_MATRIX: dict[tuple[Role, Action], bool] = {
    (role, action): (role is Role.ADMIN or action in _USER_ALLOWED)
    for role in Role
    for action in Action
}


def authorize(role: Role, action: Action) -> bool:
    return POLICY_MATRIX[(role, action)]
