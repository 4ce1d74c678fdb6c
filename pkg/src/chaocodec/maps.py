"""Piecewise-linear chaotic map algebra.

A map on [0,1) is split into one linear piece per symbol; the piece widths
equal the symbol probabilities and each piece may run with positive or
negative slope. Any arrangement (permutation of pieces plus a slope flag
per piece) yields the same compression behaviour, so the arrangement
itself can act as an encryption key: there are N!*2^N arrangements for an
N-symbol alphabet.

For the binary alphabet all 8 arrangements are catalogued as "modes"
1..8. Each mode carries a pair of decode affines (x = m*y + b, one per
bit), the bit intervals on the x axis, and the forward branches
(y = n*x + c) that invert them. For every (mode, bit) there is exactly
one other mode with an identical decode affine and interval for that bit:
its "twin". Twins are what make one codeword decodable by many keys.

Everything here is exact rational arithmetic; all objects are immutable
and safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import ModelError

MODES = tuple(range(1, 9))

_ZERO = Fraction(0)
_ONE = Fraction(1)


def keyspace_size(alphabet_size: int) -> int:
    """Number of distinct map arrangements for an N-symbol alphabet: N!*2^N."""
    if not isinstance(alphabet_size, int) or alphabet_size < 2:
        raise ModelError(f"alphabet size must be an integer >= 2, got {alphabet_size!r}")
    return math.factorial(alphabet_size) << alphabet_size


def key_bits(alphabet_size: int) -> int:
    """Bits needed to index one arrangement: ceil(log2(N!*2^N))."""
    return (keyspace_size(alphabet_size) - 1).bit_length()


@dataclass(frozen=True)
class SymbolModel:
    """Exact symbol probabilities; probs[i] is the probability of symbol i."""

    probs: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.probs) < 2:
            raise ModelError("a symbol model needs at least two symbols")
        for q in self.probs:
            if not _ZERO < q < _ONE:
                raise ModelError(f"symbol probability {q} outside (0,1)")
        if sum(self.probs) != 1:
            raise ModelError("symbol probabilities must sum to exactly 1")

    @classmethod
    def binary(cls, p: Fraction) -> "SymbolModel":
        """Two-symbol model with p = P(symbol 0)."""
        p = Fraction(p)
        return cls((p, 1 - p))

    def __len__(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class LinearPiece:
    """One linear branch of the map: [beg, end) -> [0,1), ascending or descending."""

    beg: Fraction
    end: Fraction
    negative: bool
    symbol: int

    @property
    def width(self) -> Fraction:
        return self.end - self.beg


@dataclass(frozen=True)
class MapArrangement:
    """A full map: which symbol sits in each slot and with which slope sign.

    Slot j covers the j-th interval from the left; permutation[j] names the
    symbol assigned to it. Pieces are laid contiguously from 0 so the
    arrangement tiles [0,1) exactly.
    """

    model: SymbolModel
    permutation: tuple[int, ...]
    negatives: tuple[bool, ...]

    def __post_init__(self):
        n = len(self.model)
        if sorted(self.permutation) != list(range(n)):
            raise ModelError(f"permutation {self.permutation} is not a bijection on 0..{n - 1}")
        if len(self.negatives) != n:
            raise ModelError("need one slope flag per slot")


def build_pieces(arrangement: MapArrangement) -> tuple[LinearPiece, ...]:
    """Lay out the arrangement's pieces contiguously from 0, in slot order."""
    pieces = []
    pos = _ZERO
    for slot, symbol in enumerate(arrangement.permutation):
        width = arrangement.model.probs[symbol]
        pieces.append(LinearPiece(pos, pos + width, arrangement.negatives[slot], symbol))
        pos += width
    if pos != 1:
        raise ModelError("pieces do not tile [0,1)")  # unreachable for a valid model
    return tuple(pieces)


def map_forward(pieces: tuple[LinearPiece, ...], x: Fraction) -> tuple[int, Fraction]:
    """Evaluate the full map at x: return (symbol of the piece containing x, y).

    y = (x-beg)/width for an ascending piece, 1 - (x-beg)/width for a
    descending one. At the left endpoint of a descending piece this yields
    y = 1, i.e. the closed upper boundary.
    """
    x = Fraction(x)
    if not _ZERO <= x < _ONE:
        raise ModelError(f"map input {x} outside [0,1)")
    for piece in pieces:
        if piece.beg <= x < piece.end:
            y = (x - piece.beg) / piece.width
            return piece.symbol, (1 - y) if piece.negative else y
    raise ModelError("pieces do not cover the input point")  # unreachable when tiled


@dataclass(frozen=True)
class ModeParams:
    """Exact parameters of one binary mode at a given p = P('0').

    m1,b1 / m2,b2: decode affines for bits 0/1 (x = m*y + b).
    n1,c1 / n2,c2: forward branches (y = n*x + c), branch 1 for x <= k.
    [i1,i2) / [i3,i4): the x intervals occupied by bits 0/1.
    """

    mode: int
    p: Fraction
    m1: Fraction
    b1: Fraction
    m2: Fraction
    b2: Fraction
    n1: Fraction
    c1: Fraction
    n2: Fraction
    c2: Fraction
    i1: Fraction
    i2: Fraction
    i3: Fraction
    i4: Fraction
    k: Fraction

    def decode_affine(self, bit: int) -> tuple[Fraction, Fraction]:
        return (self.m1, self.b1) if bit == 0 else (self.m2, self.b2)

    def interval(self, bit: int) -> tuple[Fraction, Fraction]:
        return (self.i1, self.i2) if bit == 0 else (self.i3, self.i4)

    def decode_step(self, y: Fraction, bit: int) -> Fraction:
        m, b = self.decode_affine(bit)
        return m * y + b

    def forward(self, x: Fraction) -> Fraction:
        """Forward map with the branch rule: branch 1 when x <= k, else branch 2."""
        if x <= self.k:
            return self.n1 * x + self.c1
        return self.n2 * x + self.c2

    def forward_affine(self, bit: int) -> tuple[Fraction, Fraction]:
        """The forward branch that exactly inverts this bit's decode affine."""
        m, b = self.decode_affine(bit)
        for n, c in ((self.n1, self.c1), (self.n2, self.c2)):
            if n * m == 1 and n * b + c == 0:
                return n, c
        raise AssertionError(f"mode {self.mode}: no forward branch inverts bit {bit}")

    def classify(self, x: Fraction) -> int | None:
        """Which bit's interval contains x; None if x escaped both."""
        if self.i1 <= x < self.i2:
            return 0
        if self.i3 <= x < self.i4:
            return 1
        return None


# One constructor per mode, in catalogue order 1..8. Widths are always
# |m1| = p and |m2| = 1-p; only placement and slope signs vary.
def _col_1(p, q):
    return dict(m1=p, b1=_ZERO, m2=q, b2=p, n1=1 / p, c1=_ZERO, n2=1 / q, c2=-p / q,
                i1=_ZERO, i2=p, i3=p, i4=_ONE, k=p)


def _col_2(p, q):
    return dict(m1=p, b1=_ZERO, m2=-q, b2=_ONE, n1=1 / p, c1=_ZERO, n2=-1 / q, c2=1 / q,
                i1=_ZERO, i2=p, i3=p, i4=_ONE, k=p)


def _col_3(p, q):
    return dict(m1=-p, b1=p, m2=-q, b2=_ONE, n1=-1 / p, c1=_ONE, n2=-1 / q, c2=1 / q,
                i1=_ZERO, i2=p, i3=p, i4=_ONE, k=p)


def _col_4(p, q):
    return dict(m1=-p, b1=p, m2=q, b2=p, n1=-1 / p, c1=_ONE, n2=1 / q, c2=-p / q,
                i1=_ZERO, i2=p, i3=p, i4=_ONE, k=p)


def _col_5(p, q):
    return dict(m1=p, b1=q, m2=q, b2=_ZERO, n1=1 / q, c1=_ZERO, n2=1 / p, c2=-q / p,
                i1=q, i2=_ONE, i3=_ZERO, i4=q, k=q)


def _col_6(p, q):
    return dict(m1=-p, b1=_ONE, m2=q, b2=_ZERO, n1=1 / q, c1=_ZERO, n2=-1 / p, c2=1 / p,
                i1=q, i2=_ONE, i3=_ZERO, i4=q, k=q)


def _col_7(p, q):
    return dict(m1=-p, b1=_ONE, m2=-q, b2=q, n1=-1 / q, c1=_ONE, n2=-1 / p, c2=1 / p,
                i1=q, i2=_ONE, i3=_ZERO, i4=q, k=q)


def _col_8(p, q):
    return dict(m1=p, b1=q, m2=-q, b2=q, n1=-1 / q, c1=_ONE, n2=1 / p, c2=-q / p,
                i1=q, i2=_ONE, i3=_ZERO, i4=q, k=q)


_MODE_COLUMNS = {1: _col_1, 2: _col_2, 3: _col_3, 4: _col_4,
                 5: _col_5, 6: _col_6, 7: _col_7, 8: _col_8}


def validate_mode(mode: int) -> int:
    if mode not in _MODE_COLUMNS:
        raise ModelError(f"mode must be in 1..8, got {mode!r}")
    return mode


@lru_cache(maxsize=4096)
def mode_params(mode: int, p: Fraction) -> ModeParams:
    """Exact parameter set of one mode with p = P('0') substituted.

    Pass p as a Fraction (or int ratio); floats are converted exactly from
    their binary value, which is rarely what a caller wants.
    """
    validate_mode(mode)
    p = Fraction(p)
    if not _ZERO < p < _ONE:
        raise ModelError(f"p must lie strictly inside (0,1), got {p}")
    return ModeParams(mode=mode, p=p, **_MODE_COLUMNS[mode](p, 1 - p))


def _decode_signature(mode: int, bit: int, p: Fraction):
    prm = mode_params(mode, p)
    return (*prm.decode_affine(bit), *prm.interval(bit))


@lru_cache(maxsize=1)
def _twin_table() -> dict[tuple[int, int], int]:
    # Equality at two unrelated rationals pins equality of the parameter
    # expressions themselves (all entries are degree-1 in p).
    samples = (Fraction(1, 3), Fraction(2, 7))
    table: dict[tuple[int, int], int] = {}
    for bit in (0, 1):
        for mode in MODES:
            matches = [
                other for other in MODES if other != mode
                and all(_decode_signature(other, bit, p) == _decode_signature(mode, bit, p)
                        for p in samples)
            ]
            if len(matches) != 1:
                raise AssertionError(f"mode {mode} bit {bit}: twin not unique: {matches}")
            table[(mode, bit)] = matches[0]
    for (mode, bit), twin in table.items():
        if table[(twin, bit)] != mode or twin == mode:
            raise AssertionError("twin table is not an involution")
    return table


def twin_mode(mode: int, bit: int) -> int:
    """The unique other mode that decodes `bit` identically to `mode`."""
    validate_mode(mode)
    if bit not in (0, 1):
        raise ModelError(f"bit must be 0 or 1, got {bit!r}")
    return _twin_table()[(mode, bit)]
