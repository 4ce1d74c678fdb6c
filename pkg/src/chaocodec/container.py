"""Bitstream container: fixed little-endian header plus MSB-first packed payload.

Layout (27 header bytes):

    magic    4s   b"CAC1"
    version  u8   1
    p_num    u16  model probability, p = p_num / 65536
    m_len    u32  number of keyed prefix positions M
    n_bits   u64  plaintext bit count N
    payload  u64  payload length in bits

followed by the payload bits packed MSB-first, final partial byte padded
with zero bits. Arithmetic-coded payloads are not self-terminating, so
n_bits in the header is what tells a decoder when to stop.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import FormatError

MAGIC = b"CAC1"
VERSION = 1
P_DENOMINATOR = 65536

_HEADER = struct.Struct("<4sBHIQQ")
HEADER_SIZE = _HEADER.size


@dataclass(frozen=True)
class StreamHeader:
    p_num: int
    m_len: int
    n_bits: int
    payload_len_bits: int
    version: int = VERSION

    def __post_init__(self):
        if not 0 < self.p_num < P_DENOMINATOR:
            raise FormatError(f"p_num {self.p_num} outside 1..{P_DENOMINATOR - 1}")
        if self.m_len > self.n_bits:
            raise FormatError(f"m_len {self.m_len} exceeds n_bits {self.n_bits}")
        if self.version != VERSION:
            raise FormatError(f"unsupported version {self.version}")
        if min(self.m_len, self.n_bits, self.payload_len_bits) < 0:
            raise FormatError("header fields must be non-negative")

    def pack(self) -> bytes:
        return _HEADER.pack(MAGIC, self.version, self.p_num, self.m_len,
                            self.n_bits, self.payload_len_bits)

    @classmethod
    def unpack(cls, buf: bytes) -> "StreamHeader":
        if len(buf) < HEADER_SIZE:
            raise FormatError(f"header truncated: {len(buf)} < {HEADER_SIZE} bytes")
        magic, version, p_num, m_len, n_bits, payload_len = _HEADER.unpack(buf[:HEADER_SIZE])
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}")
        return cls(p_num=p_num, m_len=m_len, n_bits=n_bits,
                   payload_len_bits=payload_len, version=version)


@dataclass(frozen=True)
class Codeword:
    header: StreamHeader
    payload: bytes

    def __post_init__(self):
        want = (self.header.payload_len_bits + 7) // 8
        if len(self.payload) != want:
            raise FormatError(
                f"payload is {len(self.payload)} bytes, header implies {want}")
        pad = -self.header.payload_len_bits % 8
        if pad and self.payload and self.payload[-1] & ((1 << pad) - 1):
            raise FormatError("payload padding bits must be zero")

    def to_bytes(self) -> bytes:
        return self.header.pack() + self.payload

    @classmethod
    def from_bytes(cls, buf: bytes) -> "Codeword":
        header = StreamHeader.unpack(buf)
        payload = buf[HEADER_SIZE:]
        want = (header.payload_len_bits + 7) // 8
        if len(payload) != want:
            raise FormatError(
                f"expected {want} payload bytes after header, found {len(payload)}")
        return cls(header, bytes(payload))
