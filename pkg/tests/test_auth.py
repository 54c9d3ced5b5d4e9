import base64
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wms import auth
from wms.auth import (
    DEFAULT_HASH_PARAMS,
    POLICY_MATRIX,
    Action,
    AlgRejected,
    BadSignature,
    Expired,
    HashParams,
    Malformed,
    TokenClaims,
    WeakKey,
    authorize,
    hash_password,
    issue_token,
    verify_password,
    verify_token,
)
from wms.domain import Role

FAST = HashParams(log2_n=4)
KEY = b"0123456789abcdef0123456789abcdef"

# Precomputed with an independent HMAC implementation; the exact string is
# part of the compatibility contract for RFC 7519 compact serialization.
GOLDEN_CLAIMS = TokenClaims(
    sub="01HZY3V5M8Q4R9T2W7X6C5B4A3",
    role=Role.ADMIN,
    iat=1700000000,
    exp=1700028800,
    jti="01HZY3V5M8XJ2K6G9DQC0NFTWB",
)
GOLDEN_TOKEN = (
    "eyJhbGciOiJIUzI1NiIsInR5cCI6IkpXVCJ9."
    "eyJleHAiOjE3MDAwMjg4MDAsImlhdCI6MTcwMDAwMDAwMCwianRpIjoiMDFIWlkzVjVNOFhKMks2"
    "RzlEUUMwTkZUV0IiLCJyb2xlIjoiYWRtaW4iLCJzdWIiOiIwMUhaWTNWNU04UTRSOVQyVzdYNkM1"
    "QjRBMyJ9."
    "RwI-2kmonoUFMvlr7zeMsAfgxGJPWvOTS__Az5JKQ3c"
)


def b64url(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).rstrip(b"=").decode()


def forge(header: dict, claims: dict, sig: bytes = b"") -> str:
    head = b64url(json.dumps(header, separators=(",", ":")).encode())
    body = b64url(json.dumps(claims, sort_keys=True, separators=(",", ":")).encode())
    return f"{head}.{body}.{b64url(sig)}"


class TestPasswords:
    def test_roundtrip(self):
        record = hash_password("correct horse", FAST)
        assert verify_password("correct horse", record)
        assert not verify_password("wrong horse", record)

    def test_record_format(self):
        record = hash_password("some password", FAST)
        empty, alg, cost, salt, digest = record.split("$")
        assert (empty, alg) == ("", "scrypt")
        assert cost == "ln=4,r=8,p=1"
        assert salt and digest

    def test_salts_differ(self):
        a = hash_password("same password", FAST)
        b = hash_password("same password", FAST)
        assert a != b
        assert verify_password("same password", a) and verify_password("same password", b)

    def test_injected_salt_is_deterministic(self):
        salt = bytes(range(16))
        assert hash_password("pw-12345678", FAST, salt=salt) == hash_password(
            "pw-12345678", FAST, salt=salt
        )

    def test_short_salt_refused(self):
        with pytest.raises(ValueError):
            hash_password("pw-12345678", FAST, salt=b"short")

    def test_length_rules(self):
        with pytest.raises(auth.PasswordTooShort):
            hash_password("seven..", FAST)
        with pytest.raises(auth.PasswordTooLong):
            hash_password("x" * 129, FAST)
        hash_password("x" * 128, FAST)

    def test_malformed_records(self):
        for record in ["", "plain", "$md5$a$b$c", "$scrypt$ln=4,r=8,p=1$onlyone"]:
            with pytest.raises(ValueError):
                verify_password("whatever", record)

    def test_derivation_known_answer(self):
        # RFC 7914 §12, third vector (N=2^14, r=8, p=1).
        params = HashParams(log2_n=14, r=8, p=1, digest_len=64)
        out = auth._derive("pleaseletmein", b"SodiumChloride", params)
        assert out.hex() == (
            "7023bdcb3afd7348461c06cd81fd38ebfda8fbba904f8e3ea9b543f6545da1f2"
            "d5432955613f0fcf62d49705242a9af9e61e85dc0d651e40dfcf017b45575887"
        )

    def test_default_params_are_memory_hard(self):
        assert DEFAULT_HASH_PARAMS.log2_n >= 14


class TestTokens:
    def test_golden_vector_byte_exact(self):
        assert issue_token(GOLDEN_CLAIMS, KEY) == GOLDEN_TOKEN
        claims = verify_token(GOLDEN_TOKEN, KEY, now=1700000100)
        assert claims == GOLDEN_CLAIMS

    def test_issue_is_deterministic(self):
        assert issue_token(GOLDEN_CLAIMS, KEY) == issue_token(GOLDEN_CLAIMS, KEY)

    def test_expiry_boundary(self):
        verify_token(GOLDEN_TOKEN, KEY, now=GOLDEN_CLAIMS.exp - 1)
        with pytest.raises(Expired):
            verify_token(GOLDEN_TOKEN, KEY, now=GOLDEN_CLAIMS.exp)

    def test_weak_key_refused(self):
        with pytest.raises(WeakKey):
            issue_token(GOLDEN_CLAIMS, b"k" * 31)

    def test_malformed_shapes(self):
        for bad in ["", "a.b", "a.b.c.d", "!!.!!.!!", "ยงยง.x.y"]:
            with pytest.raises(Malformed):
                verify_token(bad, KEY, now=0)

    def test_alg_none_rejected(self):
        token = forge({"alg": "none", "typ": "JWT"}, {"sub": "x", "exp": 9999999999})
        with pytest.raises(AlgRejected):
            verify_token(token, KEY, now=0)

    def test_other_algs_rejected(self):
        for alg in ["HS384", "RS256", "hs256", ""]:
            token = forge({"alg": alg, "typ": "JWT"}, {"sub": "x"}, b"sig")
            with pytest.raises(AlgRejected):
                verify_token(token, KEY, now=0)

    def test_tampered_payload(self):
        head, body, sig = GOLDEN_TOKEN.split(".")
        other = b64url(
            json.dumps(
                {"exp": 1700028800, "iat": 1700000000, "jti": GOLDEN_CLAIMS.jti,
                 "role": "admin", "sub": "01HZY3V5M8Q4R9T2W7X6C5B400"},
                sort_keys=True, separators=(",", ":"),
            ).encode()
        )
        with pytest.raises(BadSignature):
            verify_token(f"{head}.{other}.{sig}", KEY, now=1700000100)

    def test_wrong_key(self):
        with pytest.raises(BadSignature):
            verify_token(GOLDEN_TOKEN, b"f" * 32, now=1700000100)

    def test_exp_must_follow_iat(self):
        with pytest.raises(ValueError):
            TokenClaims(sub="x", role=Role.USER, iat=100, exp=100, jti="j")

    @settings(max_examples=150, deadline=None)
    @given(
        sub=st.text(st.characters(min_codepoint=33, max_codepoint=126), min_size=1, max_size=30),
        role=st.sampled_from(list(Role)),
        iat=st.integers(min_value=0, max_value=2**31),
        ttl=st.integers(min_value=1, max_value=10**6),
        jti=st.text(st.characters(min_codepoint=48, max_codepoint=122), min_size=1, max_size=26),
    )
    def test_roundtrip_property(self, sub, role, iat, ttl, jti):
        claims = TokenClaims(sub=sub, role=role, iat=iat, exp=iat + ttl, jti=jti)
        token = issue_token(claims, KEY)
        assert verify_token(token, KEY, now=iat) == claims
        with pytest.raises(Expired):
            verify_token(token, KEY, now=iat + ttl)


class TestPolicy:
    def test_matrix_is_total(self):
        assert set(POLICY_MATRIX) == {(r, a) for r in Role for a in Action}
        assert len(POLICY_MATRIX) == 2 * 13

    def test_admin_allows_everything(self):
        assert all(authorize(Role.ADMIN, a) for a in Action)

    def test_user_allowed_set_exact(self):
        allowed = {a for a in Action if authorize(Role.USER, a)}
        assert allowed == {
            Action.TASK_READ,
            Action.TASK_CREATE,
            Action.TASK_EDIT,
            Action.TASK_TRASH,
            Action.TASK_RESTORE,
            Action.ASSET_UPLOAD,
            Action.DASHBOARD_READ,
            Action.USER_LIST,
        }

    def test_admin_dominates_user(self):
        for action in Action:
            if authorize(Role.USER, action):
                assert authorize(Role.ADMIN, action)

    def test_authorize_matches_matrix(self):
        for (role, action), allowed in POLICY_MATRIX.items():
            assert authorize(role, action) is allowed
