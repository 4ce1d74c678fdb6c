"""Keyed binary entropy coders over the chaotic mode catalogue.

Two coders share one container format:

* The exact coder composes, in message order, the decode affine of each
  bit under its positional mode, using exact integers over the scale
  2^(16*N). It emits the shortest payload whose dyadic continuation
  interval [v, v + 2^-k) fits inside the final interval with a strictly
  interior lower end, so the decoded point can never touch an interval
  boundary and the payload length always lands on ceil(-log2 W) or one
  bit more (W = product of symbol interval widths). It is the reference
  the streaming coder is tested against.

* The streaming coder runs the same keyed subdivision in P-bit low/high
  registers with MSB-emission and underflow (pending bit)
  renormalization. Descending decode affines are folded in by mirroring
  the subdivision while the composed orientation is reversed, keeping
  low < high throughout. Output and input sides mirror each other's
  register arithmetic bit-exactly.

The model probability is quantized to p_num/65536 in the header, so both
ends of a transfer derive identical exact rationals.

Coder state is per-call and single-threaded; distinct calls can run in
parallel freely.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .bits import bit_at, pack_int, unpack_int, validate_bits
from .container import Codeword, P_DENOMINATOR, StreamHeader
from .errors import ConfigError, DecodeError, KeyMaterialError, ModelError
from .keying import EncryptionKey
from .maps import mode_params

try:  # optional big-integer accelerator; plain ints give identical results
    from gmpy2 import mpz as _mpz
except ImportError:  # pragma: no cover
    def _mpz(x):
        return x

DEFAULT_PRECISION = 32
_SCALE_BITS = 16


def resolve_p_num(p=None, p_num: int | None = None) -> int:
    """Quantize a model probability to the 16-bit header grid."""
    if p_num is not None:
        if p is not None:
            raise ModelError("pass either p or p_num, not both")
        if not isinstance(p_num, int) or not 0 < p_num < P_DENOMINATOR:
            raise ModelError(f"p_num must be an integer in 1..{P_DENOMINATOR - 1}")
        return p_num
    if p is None:
        raise ModelError("a model probability is required")
    frac = Fraction(p)
    if not 0 < frac < 1:
        raise ModelError(f"p must lie strictly inside (0,1), got {p!r}")
    quantized = round(frac * P_DENOMINATOR)
    return min(max(quantized, 1), P_DENOMINATOR - 1)


def quantized_p(p_num: int) -> Fraction:
    return Fraction(p_num, P_DENOMINATOR)


class _IntModeParams:
    """One mode's parameters as integers scaled by 65536 (hot-path form)."""

    __slots__ = ("affines", "intervals", "negs")

    def __init__(self, affines, intervals, negs):
        self.affines = affines      # ((m,b) bit0, (m,b) bit1)
        self.intervals = intervals  # ((i1,i2), (i3,i4))
        self.negs = negs            # (bit0 slope < 0, bit1 slope < 0)


@lru_cache(maxsize=2048)
def _int_mode(mode: int, pn: int) -> _IntModeParams:
    prm = mode_params(mode, quantized_p(pn))

    def scaled(f: Fraction) -> int:
        v = f * P_DENOMINATOR
        if v.denominator != 1:
            raise AssertionError(f"mode {mode} parameter {f} not on the 1/65536 grid")
        return int(v)

    return _IntModeParams(
        affines=((scaled(prm.m1), scaled(prm.b1)), (scaled(prm.m2), scaled(prm.b2))),
        intervals=((scaled(prm.i1), scaled(prm.i2)), (scaled(prm.i3), scaled(prm.i4))),
        negs=(prm.m1 < 0, prm.m2 < 0),
    )


def _require_key(key) -> EncryptionKey:
    if not isinstance(key, EncryptionKey):
        raise KeyMaterialError("an EncryptionKey is required")
    return key


def _check_key_for_message(key: EncryptionKey, n_bits: int) -> None:
    if len(key) > n_bits:
        raise KeyMaterialError(
            f"keyed prefix of {len(key)} positions exceeds the {n_bits}-bit message")


def _check_key_for_header(key: EncryptionKey, header: StreamHeader) -> None:
    if len(key) != header.m_len:
        raise KeyMaterialError(
            f"key has {len(key)} digits but the stream was encoded with M={header.m_len}")


# --- exact coder -------------------------------------------------------------

def _compose_affines(terms: list[tuple[int, int]]) -> tuple[int, int, int]:
    """Fold per-position affines T_1 .. T_N into one exact (A, C, scale_bits).

    Each term is x = (m*y + b)/65536; the composition is built pairwise so
    the big-integer work is balanced (the naive left fold is quadratic in
    the message length).
    """
    level = [(_mpz(m), _mpz(b), _SCALE_BITS) for m, b in terms]
    while len(level) > 1:
        merged = []
        for i in range(0, len(level) - 1, 2):
            a_l, c_l, e_l = level[i]
            a_r, c_r, e_r = level[i + 1]
            merged.append((a_l * a_r, a_l * c_r + (c_l << e_r), e_l + e_r))
        if len(level) & 1:
            merged.append(level[-1])
        level = merged
    a, c, e = level[0]
    return int(a), int(c), e


def _shortest_dyadic(lo: int, hi: int, scale_bits: int) -> tuple[int, int]:
    """Shortest (k, v) with lo < v/2^k and (v+1)/2^k <= hi/2^scale.

    The smallest feasible k is ceil(-log2 W); k+1 always succeeds because
    two grid steps of 2^-(k+1) fit inside any interval of width >= 2^-k.
    """
    width = hi - lo
    k0 = scale_bits - width.bit_length() + 1
    for k in (k0, k0 + 1):
        if k <= scale_bits:
            shift = scale_bits - k
            v = (lo >> shift) + 1
            if (v + 1) << shift <= hi:
                return k, v
        else:
            shift = k - scale_bits
            v = (lo << shift) + 1
            if v + 1 <= hi << shift:
                return k, v
    raise AssertionError("no dyadic payload inside the guaranteed window")


def encode_exact(bits: str, p=None, key: EncryptionKey = None, *,
                 p_num: int | None = None) -> Codeword:
    """Reference encoder: exact interval composition, canonical termination."""
    validate_bits(bits)
    _require_key(key)
    pn = resolve_p_num(p, p_num)
    _check_key_for_message(key, len(bits))
    if not bits:
        k, payload = 0, b""
    else:
        terms = []
        for t, ch in enumerate(bits):
            prm = _int_mode(key.mode_at(t), pn)
            terms.append(prm.affines[ch == "1"])
        a, c, scale_bits = _compose_affines(terms)
        lo, hi = (c, c + a) if a > 0 else (c + a, c)
        k, v = _shortest_dyadic(lo, hi, scale_bits)
        payload = pack_int(v, k)
    header = StreamHeader(p_num=pn, m_len=len(key), n_bits=len(bits),
                          payload_len_bits=k)
    return Codeword(header, payload)


@lru_cache(maxsize=4096)
def _forward_affine(mode: int, p: Fraction, bit: int) -> tuple[Fraction, Fraction]:
    return mode_params(mode, p).forward_affine(bit)


def decode_exact(cw: Codeword, key: EncryptionKey = None) -> str:
    """Reference decoder: iterate the forward map on the exact payload point.

    Each step classifies the point by symbol-interval membership and
    applies the matching forward branch. A point that escapes both
    intervals means the key is not consistent with the stream (or the
    stream is corrupt).
    """
    _require_key(key)
    header = cw.header
    _check_key_for_header(key, header)
    if header.n_bits == 0:
        return ""
    k = header.payload_len_bits
    x = Fraction(unpack_int(cw.payload, k), 1 << k) if k else Fraction(0)
    p = quantized_p(header.p_num)
    out = []
    for t in range(header.n_bits):
        mode = key.mode_at(t)
        bit = mode_params(mode, p).classify(x)
        if bit is None:
            raise DecodeError(f"decode point left both symbol intervals at position {t}")
        n, c = _forward_affine(mode, p, bit)
        x = n * x + c
        out.append("01"[bit])
    return "".join(out)


def code_length_bound(bits: str, p=None, *, p_num: int | None = None) -> tuple[int, int]:
    """(ceil(-log2 W), ceil(-log2 W) + 1) for W = product of symbol widths."""
    validate_bits(bits)
    pn = resolve_p_num(p, p_num)
    zeros = bits.count("0")
    width = pn ** zeros * (P_DENOMINATOR - pn) ** (len(bits) - zeros)
    lower = _SCALE_BITS * len(bits) - width.bit_length() + 1
    return lower, lower + 1


# --- streaming coder ---------------------------------------------------------

def _check_precision(pn: int, precision: int) -> None:
    if not isinstance(precision, int) or not 16 <= precision <= 62:
        raise ConfigError(f"precision must be an integer in 16..62, got {precision!r}")
    quarter = 1 << (precision - 2)
    # Post-renormalization range exceeds quarter+1; both symbol intervals
    # must keep at least one register step at that range.
    if (quarter + 2) * min(pn, P_DENOMINATOR - pn) <= P_DENOMINATOR:
        raise ConfigError(
            f"p_num {pn} is too extreme for precision {precision}: "
            "a symbol interval can collapse to zero register width")


def _children(low: int, rng: int, prm: _IntModeParams, flipped: bool):
    """Register sub-intervals for bits 0 and 1 under the current orientation."""
    (a0, b0), (a1, b1) = prm.intervals
    if flipped:
        a0, b0 = P_DENOMINATOR - b0, P_DENOMINATOR - a0
        a1, b1 = P_DENOMINATOR - b1, P_DENOMINATOR - a1
    return (low + ((rng * a0) >> _SCALE_BITS), low + ((rng * b0) >> _SCALE_BITS),
            low + ((rng * a1) >> _SCALE_BITS), low + ((rng * b1) >> _SCALE_BITS))


class _BitSink:
    __slots__ = ("value", "nbits", "pending")

    def __init__(self):
        self.value = 0
        self.nbits = 0
        self.pending = 0

    def push(self, bit: int) -> None:
        self.value = (self.value << 1) | bit
        self.nbits += 1

    def emit(self, bit: int) -> None:
        """Emit a settled bit followed by any deferred underflow complements."""
        self.push(bit)
        other = bit ^ 1
        while self.pending:
            self.push(other)
            self.pending -= 1


def encode_stream(bits: str, p=None, key: EncryptionKey = None,
                  precision: int = DEFAULT_PRECISION, *,
                  p_num: int | None = None) -> Codeword:
    """Fixed-precision encoder; decodable content matches the exact coder."""
    validate_bits(bits)
    _require_key(key)
    pn = resolve_p_num(p, p_num)
    _check_precision(pn, precision)
    _check_key_for_message(key, len(bits))

    header = StreamHeader(p_num=pn, m_len=len(key), n_bits=len(bits),
                          payload_len_bits=0)
    if not bits:
        return Codeword(header, b"")

    top = 1 << precision
    half, quarter = top >> 1, top >> 2
    three_q = half + quarter
    low, high = 0, top
    flipped = False
    sink = _BitSink()

    for t, ch in enumerate(bits):
        prm = _int_mode(key.mode_at(t), pn)
        l0, h0, l1, h1 = _children(low, high - low, prm, flipped)
        low, high = ((l1, h1) if ch == "1" else (l0, h0))
        if low >= high:
            raise AssertionError("symbol interval collapsed; precision guard failed")
        flipped ^= prm.negs[ch == "1"]
        while True:
            if high <= half:
                sink.emit(0)
            elif low >= half:
                sink.emit(1)
                low -= half
                high -= half
            elif low >= quarter and high <= three_q:
                sink.pending += 1
                low -= quarter
                high -= quarter
            else:
                break
            low <<= 1
            high <<= 1

    # Terminate on a point strictly inside (low, high): boundary points can
    # be unreachable in the exact map composition (a descending piece's
    # closed endpoint), so v = low must never be emitted. Renormalization
    # leaves low < half < high, hence a 1-bit candidate always exists; the
    # quarter candidates buy margin when half sits near a boundary.
    best = None
    for v, emit_bits in ((half, (1,)), (quarter, (0, 1)), (three_q, (1, 1))):
        if not low < v < high:
            continue
        margin = min(v - low, high - v)
        if best is None or margin > best[0]:  # ties keep the shorter, earlier option
            best = (margin, emit_bits)
    first, *rest = best[1]
    sink.emit(first)
    for extra in rest:
        sink.push(extra)

    header = StreamHeader(p_num=pn, m_len=len(key), n_bits=len(bits),
                          payload_len_bits=sink.nbits)
    return Codeword(header, pack_int(sink.value, sink.nbits))


def decode_stream(cw: Codeword, key: EncryptionKey = None,
                  precision: int = DEFAULT_PRECISION) -> str:
    """Mirror of encode_stream; must be called with the encoder's precision."""
    _require_key(key)
    header = cw.header
    _check_key_for_header(key, header)
    pn = header.p_num
    _check_precision(pn, precision)
    if header.n_bits == 0:
        return ""

    top = 1 << precision
    half, quarter = top >> 1, top >> 2
    three_q = half + quarter
    payload, payload_bits = cw.payload, header.payload_len_bits

    pos = 0

    def next_bit() -> int:
        nonlocal pos
        b = bit_at(payload, pos) if pos < payload_bits else 0
        pos += 1
        return b

    value = 0
    for _ in range(precision):
        value = (value << 1) | next_bit()

    low, high = 0, top
    flipped = False
    out = []
    for t in range(header.n_bits):
        prm = _int_mode(key.mode_at(t), pn)
        l0, h0, l1, h1 = _children(low, high - low, prm, flipped)
        if l0 <= value < h0:
            bit = 0
            low, high = l0, h0
        elif l1 <= value < h1:
            bit = 1
            low, high = l1, h1
        else:
            raise DecodeError(f"value register left both symbol intervals at position {t}")
        flipped ^= prm.negs[bit]
        out.append("01"[bit])
        while True:
            if high <= half:
                pass
            elif low >= half:
                low -= half
                high -= half
                value -= half
            elif low >= quarter and high <= three_q:
                low -= quarter
                high -= quarter
                value -= quarter
            else:
                break
            low <<= 1
            high <<= 1
            value = (value << 1) | next_bit()
    return "".join(out)
