"""Key generation, multicast key pools, issuance ledger and key wrapping.

A key assigns one map mode (digit 1..8) to each of the first M message
positions; positions beyond M use a fixed public tail mode. For a given
plaintext, swapping any position's digit for its twin leaves decoding
unchanged, so the 2^M member pool spanned by {digit, twin} per position
all decode one ciphertext. Distinct pool members can be issued to
distinct users and later traced back through the ledger.

Pool derivation depends on the plaintext prefix, so a fresh set of user
keys exists per encoded message. Derivation and membership checks are
pure functions; ledger mutation is single-writer.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .bits import pack_int, unpack_int, validate_bits
from .errors import CapacityError, FormatError, KeyMaterialError, ModelError, WrapError
from .maps import MODES, twin_mode, validate_mode

DEFAULT_TAIL_MODE = 1
BITS_PER_DIGIT = 3


@dataclass(frozen=True)
class EncryptionKey:
    """Per-position mode digits for the keyed prefix, plus the public tail mode."""

    modes: tuple[int, ...]
    tail_mode: int = DEFAULT_TAIL_MODE

    def __post_init__(self):
        for d in self.modes:
            validate_mode(d)
        validate_mode(self.tail_mode)

    @classmethod
    def from_string(cls, digits: str, tail_mode: int = DEFAULT_TAIL_MODE) -> "EncryptionKey":
        try:
            modes = tuple(int(ch) for ch in digits.strip())
        except ValueError:
            raise KeyMaterialError(f"key digits must be 1..8, got {digits!r}") from None
        return cls(modes, tail_mode)

    def __str__(self) -> str:
        return "".join(str(d) for d in self.modes)

    def __len__(self) -> int:
        return len(self.modes)

    def mode_at(self, position: int) -> int:
        return self.modes[position] if position < len(self.modes) else self.tail_mode

    def to_bytes(self) -> bytes:
        """Pack digits at 3 bits each (digit-1 in binary), MSB-first."""
        value = 0
        for d in self.modes:
            value = (value << BITS_PER_DIGIT) | (d - 1)
        return pack_int(value, BITS_PER_DIGIT * len(self.modes))

    @classmethod
    def from_bytes(cls, data: bytes, m: int,
                   tail_mode: int = DEFAULT_TAIL_MODE) -> "EncryptionKey":
        value = unpack_int(data, BITS_PER_DIGIT * m)
        modes = []
        for i in range(m):
            shift = BITS_PER_DIGIT * (m - 1 - i)
            modes.append(((value >> shift) & 7) + 1)
        return cls(tuple(modes), tail_mode)


def _digest_stream(seed: bytes, label: bytes):
    """Infinite deterministic byte stream: sha256(seed || label || counter)."""
    counter = 0
    while True:
        block = hashlib.sha256(seed + label + counter.to_bytes(8, "big")).digest()
        yield from block
        counter += 1


def normalize_seed(seed) -> bytes:
    """Accept bytes, int, or hex text as seed material; canonicalize to 32 bytes."""
    if isinstance(seed, bytes):
        raw = seed
    elif isinstance(seed, int):
        raw = seed.to_bytes(max(1, (seed.bit_length() + 7) // 8), "big", signed=False)
    elif isinstance(seed, str):
        raw = seed.encode()
    else:
        raise KeyMaterialError(f"unsupported seed type {type(seed).__name__}")
    return hashlib.sha256(raw).digest()


def restrict_modes(subset) -> tuple[int, ...]:
    """Validate a mode subset used to constrain key generation."""
    allowed = tuple(sorted(set(subset)))
    if not allowed:
        raise ModelError("mode restriction must be a non-empty subset of 1..8")
    for d in allowed:
        validate_mode(d)
    return allowed


def keygen(seed, m: int, allowed=None,
           tail_mode: int = DEFAULT_TAIL_MODE) -> EncryptionKey:
    """Deterministically expand seed material into M mode digits.

    The unrestricted draw consumes 3 bits per digit with no rejection.
    With a restricted subset, draws falling outside an unbiased range are
    rejected and redrawn, keeping the digits uniform over the subset.
    """
    if m < 0:
        raise KeyMaterialError("key length must be >= 0")
    allowed = MODES if allowed is None else restrict_modes(allowed)
    stream = _digest_stream(normalize_seed(seed), b"keygen")
    limit = (8 // len(allowed)) * len(allowed)
    digits = []
    bitbuf = 0
    nbits = 0
    while len(digits) < m:
        if nbits < BITS_PER_DIGIT:
            bitbuf = (bitbuf << 8) | next(stream)
            nbits += 8
            continue
        nbits -= BITS_PER_DIGIT
        draw = (bitbuf >> nbits) & 7
        if draw < limit:
            digits.append(allowed[draw % len(allowed)])
    return EncryptionKey(tuple(digits), tail_mode)


@dataclass(frozen=True)
class KeyPool:
    """Per-position (original, twin) digit pairs; the pool is their product."""

    pairs: tuple[tuple[int, int], ...]
    tail_mode: int = DEFAULT_TAIL_MODE

    @property
    def m(self) -> int:
        return len(self.pairs)

    @property
    def size(self) -> int:
        return 1 << self.m

    def contains(self, key: EncryptionKey) -> bool:
        """Pool membership, decided independently per position."""
        if len(key) != self.m:
            raise KeyMaterialError(
                f"key length {len(key)} does not match pool length {self.m}")
        return all(d in pair for d, pair in zip(key.modes, self.pairs))

    def member_at(self, index: int) -> EncryptionKey:
        """The pool member selected by one twin-flip bit per position (MSB first)."""
        if not 0 <= index < self.size:
            raise CapacityError(f"pool index {index} outside 0..{self.size - 1}")
        digits = tuple(
            pair[(index >> (self.m - 1 - t)) & 1] for t, pair in enumerate(self.pairs))
        return EncryptionKey(digits, self.tail_mode)

    def enumerate(self):
        for index in range(self.size):
            yield self.member_at(index)


def derive_pool(key: EncryptionKey, plaintext_prefix: str) -> KeyPool:
    """Pair each key digit with its twin for the plaintext bit at that position."""
    validate_bits(plaintext_prefix)
    if len(plaintext_prefix) != len(key):
        raise KeyMaterialError(
            f"prefix has {len(plaintext_prefix)} bits, key has {len(key)} digits")
    pairs = tuple(
        (digit, twin_mode(digit, int(bit)))
        for digit, bit in zip(key.modes, plaintext_prefix))
    return KeyPool(pairs, key.tail_mode)


def is_pool_member(pool: KeyPool, key: EncryptionKey) -> bool:
    return pool.contains(key)


def pool_math(m: int, base: int = 8) -> tuple[int, int, Fraction]:
    """(valid pool size 2^M, total keyspace base^M, guessing probability)."""
    if m < 0:
        raise ModelError("m must be >= 0")
    if base < 2:
        raise ModelError("keyspace base must be >= 2")
    valid = 1 << m
    total = base ** m
    return valid, total, Fraction(valid, total)


@dataclass(frozen=True)
class TraceResult:
    status: str  # "user" | "collusion-suspected" | "unknown"
    user: str | None = None


@dataclass
class KeyLedger:
    """Append-only record of which user holds which pool key in a session."""

    session: str
    pool: KeyPool
    entries: dict[str, EncryptionKey] = field(default_factory=dict)
    issued_at: dict[str, float] = field(default_factory=dict)

    def issue(self, user: str, key: EncryptionKey, when: float | None = None) -> None:
        if user in self.entries:
            raise KeyMaterialError(f"user {user!r} already holds a key in this session")
        if key in self.entries.values():
            raise KeyMaterialError("key already issued to another user")
        if not self.pool.contains(key):
            raise KeyMaterialError("refusing to ledger a key outside the session pool")
        self.entries[user] = key
        self.issued_at[user] = time.time() if when is None else when

    def trace(self, leaked: EncryptionKey) -> TraceResult:
        """Attribute a leaked key: exact ledger match, pool member, or foreign."""
        if len(leaked) != self.pool.m:
            raise KeyMaterialError(
                f"leaked key length {len(leaked)} does not match session M {self.pool.m}")
        for user, key in self.entries.items():
            if key == leaked:
                return TraceResult("user", user)
        if self.pool.contains(leaked):
            return TraceResult("collusion-suspected")
        return TraceResult("unknown")

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({
                "type": "session", "session": self.session,
                "tail": self.pool.tail_mode,
                "pairs": [list(pair) for pair in self.pool.pairs],
            }) + "\n")
            for user, key in self.entries.items():
                fh.write(json.dumps({
                    "type": "issue", "session": self.session, "user": user,
                    "key": str(key), "issued_at": self.issued_at[user],
                }) + "\n")

    @classmethod
    def load(cls, path) -> "KeyLedger":
        with open(path, encoding="utf-8") as fh:
            lines = [json.loads(line) for line in fh if line.strip()]
        if not lines or lines[0].get("type") != "session":
            raise FormatError("ledger file must start with a session record")
        head = lines[0]
        pool = KeyPool(tuple((a, b) for a, b in head["pairs"]), head["tail"])
        ledger = cls(session=head["session"], pool=pool)
        for rec in lines[1:]:
            if rec.get("type") != "issue":
                raise FormatError(f"unknown ledger record type {rec.get('type')!r}")
            ledger.issue(rec["user"],
                         EncryptionKey.from_string(rec["key"], pool.tail_mode),
                         when=rec["issued_at"])
        return ledger


def sample_user_key(pool: KeyPool, user: str, ledger: KeyLedger, seed) -> EncryptionKey:
    """Issue a fresh pool member to `user`, deterministic in (seed, user, state).

    The seed picks a starting index in the pool; linear probing over
    twin-flip patterns skips already-issued keys.
    """
    if len(ledger.entries) >= pool.size:
        raise CapacityError(f"pool exhausted: all {pool.size} keys issued")
    digest = hashlib.sha256(
        normalize_seed(seed) + b"issue" + user.encode()).digest()
    start = int.from_bytes(digest, "big") % pool.size
    taken = set(ledger.entries.values())
    for offset in range(len(taken) + 1):
        candidate = pool.member_at((start + offset) % pool.size)
        if candidate not in taken:
            ledger.issue(user, candidate)
            return candidate
    raise AssertionError("probing must find a free key before exhausting issued+1 slots")


# --- key wrapping -----------------------------------------------------------
#
# Wrapping a key for transport is an external dependency boundary: real
# deployments plug in an actual asymmetric scheme. The bundled schemes are
# test doubles and provide NO confidentiality; NULL-TEST ships the digits
# in the clear, XOR-DEMO only whitens them with a hash keystream anybody
# can regenerate. Both carry an integrity tag so tampering is detectable.

@dataclass(frozen=True)
class WrappedKey:
    recipient: str
    blob: bytes
    scheme: str

    def to_bytes(self) -> bytes:
        scheme_id = SCHEME_IDS[self.scheme]
        return bytes([scheme_id]) + len(self.blob).to_bytes(4, "little") + self.blob

    @classmethod
    def from_bytes(cls, buf: bytes, recipient: str) -> "WrappedKey":
        if len(buf) < 5:
            raise FormatError("wrapped key blob truncated")
        scheme = SCHEMES_BY_ID.get(buf[0])
        if scheme is None:
            raise WrapError(f"unknown wrapping scheme id {buf[0]}")
        length = int.from_bytes(buf[1:5], "little")
        if len(buf) != 5 + length:
            raise FormatError("wrapped key length prefix does not match blob")
        return cls(recipient, bytes(buf[5:]), scheme)


_TAG_LEN = 16


def _tag(scheme: str, recipient: str, body: bytes) -> bytes:
    return hashlib.sha256(
        scheme.encode() + b"|" + recipient.encode() + b"|" + body).digest()[:_TAG_LEN]


def _keystream(recipient: str, n: int) -> bytes:
    secret = hashlib.sha256(b"XOR-DEMO-recipient:" + recipient.encode()).digest()
    out = bytearray()
    counter = 0
    while len(out) < n:
        out += hashlib.sha256(secret + counter.to_bytes(4, "big")).digest()
        counter += 1
    return bytes(out[:n])


class NullTestWrap:
    """Identity 'encryption' with an integrity tag. NOT SECURE, test use only."""

    scheme_id = "NULL-TEST"

    @staticmethod
    def wrap(key: EncryptionKey, recipient: str) -> bytes:
        body = len(key).to_bytes(4, "little") + key.to_bytes()
        return body + _tag(NullTestWrap.scheme_id, recipient, body)

    @staticmethod
    def unwrap(blob: bytes, recipient: str) -> EncryptionKey:
        body, tag = blob[:-_TAG_LEN], blob[-_TAG_LEN:]
        if len(blob) < 4 + _TAG_LEN or tag != _tag(NullTestWrap.scheme_id, recipient, body):
            raise WrapError("wrapped key failed authentication")
        m = int.from_bytes(body[:4], "little")
        return EncryptionKey.from_bytes(body[4:], m)


class XorDemoWrap:
    """Hash-keystream whitening double: hides digits on the wire, secures nothing."""

    scheme_id = "XOR-DEMO"

    @staticmethod
    def wrap(key: EncryptionKey, recipient: str) -> bytes:
        plain = len(key).to_bytes(4, "little") + key.to_bytes()
        body = bytes(a ^ b for a, b in zip(plain, _keystream(recipient, len(plain))))
        return body + _tag(XorDemoWrap.scheme_id, recipient, body)

    @staticmethod
    def unwrap(blob: bytes, recipient: str) -> EncryptionKey:
        body, tag = blob[:-_TAG_LEN], blob[-_TAG_LEN:]
        if len(blob) < 4 + _TAG_LEN or tag != _tag(XorDemoWrap.scheme_id, recipient, body):
            raise WrapError("wrapped key failed authentication")
        plain = bytes(a ^ b for a, b in zip(body, _keystream(recipient, len(body))))
        m = int.from_bytes(plain[:4], "little")
        return EncryptionKey.from_bytes(plain[4:], m)


SCHEMES = {cls.scheme_id: cls for cls in (NullTestWrap, XorDemoWrap)}
SCHEME_IDS = {"NULL-TEST": 0, "XOR-DEMO": 1}
SCHEMES_BY_ID = {v: k for k, v in SCHEME_IDS.items()}


def wrap_key(key: EncryptionKey, recipient: str, scheme: str = "NULL-TEST") -> WrappedKey:
    if scheme not in SCHEMES:
        raise WrapError(f"unknown wrapping scheme {scheme!r}")
    return WrappedKey(recipient, SCHEMES[scheme].wrap(key, recipient), scheme)


def unwrap_key(wrapped: WrappedKey, recipient: str) -> EncryptionKey:
    if wrapped.scheme not in SCHEMES:
        raise WrapError(f"unknown wrapping scheme {wrapped.scheme!r}")
    if wrapped.recipient != recipient:
        raise WrapError("wrapped key addressed to a different recipient")
    return SCHEMES[wrapped.scheme].unwrap(wrapped.blob, recipient)


# --- key files --------------------------------------------------------------

_KEYFILE_PREFIX = "CACKEY v1"


def format_key_file(key: EncryptionKey) -> str:
    return f"{_KEYFILE_PREFIX} M={len(key)} tail={key.tail_mode} key={key}\n"


def parse_key_file(text: str) -> EncryptionKey:
    line = text.strip()
    if not line.startswith(_KEYFILE_PREFIX):
        raise FormatError("not a key file (missing CACKEY v1 prefix)")
    fields = dict(part.split("=", 1) for part in line[len(_KEYFILE_PREFIX):].split())
    try:
        m = int(fields["M"])
        tail = int(fields["tail"])
        digits = fields.get("key", "")
    except (KeyError, ValueError) as exc:
        raise FormatError(f"malformed key file: {exc}") from None
    key = EncryptionKey.from_string(digits, tail)
    if len(key) != m:
        raise FormatError(f"key file M={m} does not match {len(key)} digits")
    return key
