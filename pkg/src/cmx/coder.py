"""Binary arithmetic coding plus an exact rational-interval oracle.

The production path is a 32-bit range coder with byte-wise
renormalization and carry propagation; probabilities are 16-bit fixed
point, clamped to [1, 65535].  The rational-interval functions mirror
the textbook construction with exact fractions and exist mainly as a
test oracle for the fixed-precision coder.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernel as K
from .errors import (
    CoderStateError,
    CorruptArchiveError,
    InvalidDistributionError,
    InvalidInputError,
)

P16_ONE = 65536


def prob16(p: float) -> int:
    """Quantize a probability to 16-bit fixed point, clamped interior."""
    if not 0.0 <= p <= 1.0:
        raise InvalidInputError(f"probability out of range: {p}")
    q = int(p * 65536.0 + 0.5)
    return min(65535, max(1, q))


class ArithmeticEncoder:
    """Streaming bit encoder; feed (probability, bit) pairs, then flush.

    The first output byte of the underlying range coder is always zero
    and is suppressed, so flushing an empty stream costs exactly four
    bytes and flushing in general adds at most four bytes of tail.
    """

    def __init__(self):
        self._rc = np.zeros(K.NRC, np.int64)
        self._rc[K.RC_RANGE] = K.MASK32
        self._buf = np.zeros(4096, np.uint8)

    def _ensure(self, extra: int):
        need = int(self._rc[K.RC_POS] + self._rc[K.RC_PEND]) + extra
        if need > self._buf.shape[0]:
            grown = np.zeros(max(need, 2 * self._buf.shape[0]), np.uint8)
            grown[: self._buf.shape[0]] = self._buf
            self._buf = grown

    def encode_bit(self, p16: int, bit: int):
        """Encode one bit under P(bit = 1) = p16 / 65536."""
        if self._rc[K.RC_FLUSHED]:
            raise CoderStateError("encode after flush")
        if not 1 <= p16 <= 65535:
            raise InvalidInputError(f"p16 out of range: {p16}")
        self._ensure(48)
        K.rc_encode_bit(self._rc, self._buf, p16, 1 if bit else 0)

    def flush(self) -> bytes:
        """Terminate the stream and return the complete payload."""
        if self._rc[K.RC_FLUSHED]:
            raise CoderStateError("flush called twice")
        self._ensure(48)
        K.rc_flush(self._rc, self._buf)
        return bytes(self._buf[: int(self._rc[K.RC_POS])])


class ArithmeticDecoder:
    """Mirror of the encoder: feed the same probabilities, read bits back."""

    def __init__(self, payload: bytes):
        self._payload = payload
        self._rc = None

    def _start(self):
        rc = np.zeros(K.NRC, np.int64)
        rc[K.RC_RANGE] = K.MASK32
        if len(self._payload) < 4:
            raise CorruptArchiveError("payload shorter than the coder window")
        buf = np.frombuffer(self._payload, np.uint8)
        code = 0
        for i in range(4):
            code = (code << 8) | int(buf[i])
        rc[K.RC_CODE] = code
        rc[K.RC_POS] = 4
        self._rc = rc
        self._buf = buf

    def decode_bit(self, p16: int) -> int:
        if not 1 <= p16 <= 65535:
            raise InvalidInputError(f"p16 out of range: {p16}")
        if self._rc is None:
            self._start()
        bit = K.rc_decode_bit(self._rc, self._buf, p16)
        if self._rc[K.RC_ERR]:
            raise CorruptArchiveError("payload exhausted before declared length")
        return int(bit)


# --------------------------------------------------------------------------
# exact rational interval narrowing
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RationalInterval:
    """Half-open interval [lo, hi) of exact rationals inside [0, 1]."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if not (0 <= self.lo < self.hi <= 1):
            raise InvalidInputError(f"invalid interval [{self.lo}, {self.hi})")

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo


def _normalize_dist(dist):
    """Accept a mapping or pair sequence; return alphabet-ordered pairs."""
    items = sorted(dist.items()) if hasattr(dist, "items") else sorted(dist)
    total = Fraction(0)
    out = []
    for sym, p in items:
        p = Fraction(p)
        if p < 0:
            raise InvalidDistributionError(f"negative probability for {sym!r}")
        total += p
        out.append((sym, p))
    if total != 1:
        raise InvalidDistributionError(f"distribution sums to {total}, not 1")
    return out


def narrow(interval: RationalInterval, dist, symbol) -> RationalInterval:
    """Restrict the interval to ``symbol``'s sector of ``dist``.

    Sectors are laid out in alphabet (sort) order from lo to hi.
    """
    pairs = _normalize_dist(dist)
    offset = Fraction(0)
    for sym, p in pairs:
        if sym == symbol:
            if p == 0:
                raise InvalidDistributionError(
                    f"symbol {symbol!r} has zero probability")
            w = interval.width
            return RationalInterval(interval.lo + offset * w,
                                    interval.lo + (offset + p) * w)
        offset += p
    raise InvalidDistributionError(f"symbol {symbol!r} not in distribution")


def interval_trace(dists, symbols) -> RationalInterval:
    """Narrow [0,1) through one distribution per symbol; exact result."""
    if len(dists) != len(symbols):
        raise InvalidInputError("one distribution required per symbol")
    iv = RationalInterval(Fraction(0), Fraction(1))
    for dist, sym in zip(dists, symbols):
        iv = narrow(iv, dist, sym)
    return iv


def interval_code_bits(interval: RationalInterval) -> tuple[str, Fraction]:
    """Shortest halving sequence whose midpoint identifies the interval.

    Starting from [0,1), repeatedly keep the lower half (emit "0") or
    upper half (emit "1") until the midpoint of the current dyadic
    interval falls inside the target; that midpoint is the number a
    decoder needs.
    """
    lo, hi = Fraction(0), Fraction(1)
    bits = []
    while True:
        mid = (lo + hi) / 2
        if interval.lo <= mid < interval.hi:
            return "".join(bits), mid
        if mid >= interval.hi:
            hi = mid
            bits.append("0")
        else:
            lo = mid
            bits.append("1")
