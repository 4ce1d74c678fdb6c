"""Desk-scale multicast harness: one encode, many keyed receivers.

Everything runs in-process over a byte-blob "wire"; transport, loss and
timing are out of scope. The harness exists to measure and verify the
keying math end to end: a single ciphertext, per-user pool keys, key
distribution overhead, leak tracing, and toy-sized brute-force sweeps.
Per-user decodes are pure functions of the shared ciphertext and could
run in parallel; the ledger is mutated single-threaded.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import random
from dataclasses import dataclass, field

from .codec import (DEFAULT_PRECISION, code_length_bound, decode_exact,
                    decode_stream, encode_stream, quantized_p)
from .container import Codeword
from .errors import CapacityError, ConfigError, KeyMaterialError
from .keying import (BITS_PER_DIGIT, EncryptionKey, KeyLedger, derive_pool,
                     keygen, normalize_seed, pool_math, sample_user_key,
                     wrap_key)
from .maps import MODES

BRUTE_FORCE_MAX_M = 4


@dataclass(frozen=True)
class SimConfig:
    users: int
    n: int
    m: int
    p_num: int
    seed: int = 0
    precision: int = DEFAULT_PRECISION
    allowed_modes: tuple[int, ...] | None = None
    collude_k: int = 0
    scheme: str = "NULL-TEST"
    trials: int = 100
    message: str | None = None  # overrides the random plaintext when set
    key: EncryptionKey | None = None  # overrides keygen when set

    def __post_init__(self):
        if self.m > self.n:
            raise ConfigError(f"keyed prefix m={self.m} exceeds message length n={self.n}")
        if self.users > (1 << self.m):
            raise CapacityError(
                f"{self.users} users cannot get distinct keys from a 2^{self.m} pool")


@dataclass
class SimReport:
    users: int
    n: int
    m: int
    p_num: int
    ciphertext_bits: int
    ciphertext_sha256: str
    decode_ok: list[bool]
    key_bits_per_user: int
    wrapped_bits_per_user: int
    rate_bits_per_symbol: float
    entropy_bound_bits: tuple[int, int]
    pool_valid: int
    pool_total: int
    guess_probability: str
    raw_key_bytes_on_wire: bool

    @property
    def all_decoded(self) -> bool:
        return all(self.decode_ok)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["all_decoded"] = self.all_decoded
        d["entropy_bound_bits"] = list(self.entropy_bound_bits)
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def random_bits(n: int, p_num: int, rng: random.Random) -> str:
    """n independent bits with P('0') = p_num/65536."""
    threshold = float(quantized_p(p_num))
    return "".join("0" if rng.random() < threshold else "1" for _ in range(n))


def _session_setup(cfg: SimConfig):
    rng = random.Random(cfg.seed)
    message = cfg.message if cfg.message is not None else random_bits(cfg.n, cfg.p_num, rng)
    if len(message) != cfg.n:
        raise ConfigError(f"message override has {len(message)} bits, config says {cfg.n}")
    key = cfg.key if cfg.key is not None else keygen(
        normalize_seed(cfg.seed), cfg.m, allowed=cfg.allowed_modes)
    if len(key) != cfg.m:
        raise KeyMaterialError(f"session key has {len(key)} digits, config says {cfg.m}")
    cw = encode_stream(message, key=key, precision=cfg.precision, p_num=cfg.p_num)
    pool = derive_pool(key, message[:cfg.m])
    ledger = KeyLedger(session=f"sim-{cfg.seed}", pool=pool)
    return rng, message, key, cw, pool, ledger


def simulate_multicast(cfg: SimConfig) -> SimReport:
    """Encode once, issue per-user pool keys, verify every user decodes."""
    _, message, _, cw, pool, ledger = _session_setup(cfg)
    wire_blob = cw.to_bytes()
    digest = hashlib.sha256(wire_blob).hexdigest()

    decode_ok = []
    wrapped_bits = 0
    raw_seen = False
    for i in range(cfg.users):
        user = f"user{i:04d}"
        user_key = sample_user_key(pool, user, ledger, seed=f"{cfg.seed}:{user}")
        wrapped = wrap_key(user_key, user, cfg.scheme).to_bytes()
        wrapped_bits = 8 * len(wrapped)
        raw = user_key.to_bytes()
        if raw and raw in wrapped:
            raw_seen = True
        # every user downloads their own copy of the identical blob
        delivered = bytes(wire_blob)
        assert hashlib.sha256(delivered).hexdigest() == digest
        received = Codeword.from_bytes(delivered)
        decode_ok.append(
            decode_stream(received, user_key, precision=cfg.precision) == message)

    valid, total, prob = pool_math(cfg.m)
    rate = cw.header.payload_len_bits / cfg.n if cfg.n else 0.0
    return SimReport(
        users=cfg.users, n=cfg.n, m=cfg.m, p_num=cfg.p_num,
        ciphertext_bits=cw.header.payload_len_bits,
        ciphertext_sha256=digest,
        decode_ok=decode_ok,
        key_bits_per_user=BITS_PER_DIGIT * cfg.m,
        wrapped_bits_per_user=wrapped_bits,
        rate_bits_per_symbol=rate,
        entropy_bound_bits=code_length_bound(message, p_num=cfg.p_num),
        pool_valid=valid, pool_total=total, guess_probability=str(prob),
        raw_key_bytes_on_wire=raw_seen,
    )


def brute_force_outcomes(cw: Codeword, *, decoder: str = "exact",
                         precision: int = DEFAULT_PRECISION,
                         tail_mode: int = 1) -> dict[str, str | None]:
    """Decode the stream under every key in 8^M; None marks a decode error.

    Only sensible at toy M (the sweep is 8^M decodes); guarded accordingly.
    """
    m = cw.header.m_len
    if m > BRUTE_FORCE_MAX_M:
        raise ConfigError(f"brute force limited to M <= {BRUTE_FORCE_MAX_M}, got {m}")
    if decoder not in ("exact", "stream"):
        raise ConfigError(f"decoder must be 'exact' or 'stream', got {decoder!r}")
    outcomes: dict[str, str | None] = {}
    for digits in itertools.product(MODES, repeat=m):
        key = EncryptionKey(digits, tail_mode)
        try:
            if decoder == "exact":
                outcomes[str(key)] = decode_exact(cw, key)
            else:
                outcomes[str(key)] = decode_stream(cw, key, precision=precision)
        except Exception:
            outcomes[str(key)] = None
    return outcomes


def brute_force_valid_keys(cw: Codeword, plaintext: str, *, decoder: str = "exact",
                           precision: int = DEFAULT_PRECISION,
                           tail_mode: int = 1) -> set[str]:
    """All keys in 8^M whose decode reproduces the plaintext exactly."""
    outcomes = brute_force_outcomes(cw, decoder=decoder, precision=precision,
                                    tail_mode=tail_mode)
    return {digits for digits, decoded in outcomes.items() if decoded == plaintext}


def collude(keys: list[EncryptionKey], seed) -> EncryptionKey:
    """Positionwise mix of the colluders' digits; stays inside the pool."""
    if not keys:
        raise KeyMaterialError("collusion needs at least one key")
    m = len(keys[0])
    tail = keys[0].tail_mode
    for k in keys:
        if len(k) != m or k.tail_mode != tail:
            raise KeyMaterialError("colluding keys must come from one session")
    rng = random.Random(int.from_bytes(normalize_seed(seed), "big"))
    digits = tuple(rng.choice(keys).modes[t] for t in range(m))
    return EncryptionKey(digits, tail)


@dataclass
class TraceExperimentReport:
    trials: int
    collude_k: int
    exact_attributions: int = 0
    collusion_suspected: int = 0
    unknown: int = 0
    misattributions: int = 0
    foreign_trials: int = 0
    foreign_unknown: int = 0
    raw_key_bytes_on_wire: bool = False
    attributed_users: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def run_trace_experiment(cfg: SimConfig) -> TraceExperimentReport:
    """Leak issued keys (or colluded mixes) and score the tracing outcomes.

    With no collusion every leak must attribute exactly. A colluded mix may
    coincide with some user's issued key, in which case attribution is
    correct by definition; otherwise it must come back merely "suspected".
    Foreign (non-pool) keys must always come back "unknown".
    """
    rng, _, _, _, pool, ledger = _session_setup(cfg)
    users = []
    for i in range(cfg.users):
        user = f"user{i:04d}"
        sample_user_key(pool, user, ledger, seed=f"{cfg.seed}:{user}")
        users.append(user)

    report = TraceExperimentReport(trials=cfg.trials, collude_k=cfg.collude_k)

    wrapped_blobs = [wrap_key(ledger.entries[u], u, cfg.scheme).to_bytes() for u in users]
    report.raw_key_bytes_on_wire = any(
        ledger.entries[u].to_bytes() and ledger.entries[u].to_bytes() in blob
        for u, blob in zip(users, wrapped_blobs))

    for _ in range(cfg.trials):
        if cfg.collude_k >= 2:
            group = rng.sample(users, min(cfg.collude_k, len(users)))
            leaked = collude([ledger.entries[u] for u in group],
                             seed=rng.randrange(1 << 63))
        else:
            group = [rng.choice(users)]
            leaked = ledger.entries[group[0]]
        result = ledger.trace(leaked)
        if result.status == "user":
            report.exact_attributions += 1
            report.attributed_users.append(result.user)
            if ledger.entries[result.user] != leaked:
                report.misattributions += 1
        elif result.status == "collusion-suspected":
            report.collusion_suspected += 1
        else:
            report.unknown += 1

    # foreign leaks: random keys forced outside the pool (none exist at M=0)
    if cfg.m > 0:
        for _ in range(cfg.trials):
            while True:
                digits = tuple(rng.choice(MODES) for _ in range(cfg.m))
                candidate = EncryptionKey(digits, pool.tail_mode)
                if not pool.contains(candidate):
                    break
            report.foreign_trials += 1
            if ledger.trace(candidate).status == "unknown":
                report.foreign_unknown += 1
    return report
