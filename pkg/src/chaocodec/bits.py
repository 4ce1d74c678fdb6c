"""Bit-string helpers: MSB-first packing between '0'/'1' strings, ints and bytes."""

from __future__ import annotations

from .errors import FormatError


def validate_bits(bits: str) -> str:
    if not isinstance(bits, str) or bits.strip("01") != "":
        raise FormatError("message must be a string of '0'/'1' characters")
    return bits


def pack_bits(bits: str) -> bytes:
    """Pack a bit string MSB-first, zero-padding the final byte."""
    if not bits:
        return b""
    return pack_int(int(bits, 2), len(bits))


def unpack_bits(data: bytes, nbits: int) -> str:
    if nbits == 0:
        return ""
    return format(unpack_int(data, nbits), f"0{nbits}b")


def pack_int(value: int, nbits: int) -> bytes:
    """The low nbits of value as MSB-first bytes (zero-padded on the right)."""
    if nbits == 0:
        return b""
    pad = -nbits % 8
    return (value << pad).to_bytes((nbits + pad) // 8, "big")


def unpack_int(data: bytes, nbits: int) -> int:
    if nbits == 0:
        return 0
    nbytes = (nbits + 7) // 8
    if len(data) < nbytes:
        raise FormatError(f"need {nbytes} payload bytes for {nbits} bits, have {len(data)}")
    return int.from_bytes(data[:nbytes], "big") >> (-nbits % 8)


def bit_at(data: bytes, index: int) -> int:
    return (data[index >> 3] >> (7 - (index & 7))) & 1


def bytes_to_bits(data: bytes) -> str:
    """Whole-buffer view as a bit string, MSB-first within each byte."""
    if not data:
        return ""
    return format(int.from_bytes(data, "big"), f"0{8 * len(data)}b")


def bits_to_bytes(bits: str) -> bytes:
    """Inverse of bytes_to_bits; bit count is padded up to a whole byte."""
    return pack_bits(bits)
