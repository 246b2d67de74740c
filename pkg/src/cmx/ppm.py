"""Prediction by partial matching over bytes, with escape modeling.

A trie of contexts up to a fixed order K holds symbol counts.  To
predict, the model starts at the longest stored context that matches
the history and blends downward: each level contributes its symbol
frequencies weighted by the product of the escape probabilities of the
levels above it, ending at an order -1 level that assigns every byte
1/256.  The escape probability of a context is its distinct-symbol
count over (total count + distinct count) — escape counting by distinct
symbols, with no exclusions.

This model is the classical baseline the mixing engine is benchmarked
against; it also drives its own arithmetic-coded compressor.
"""

from __future__ import annotations

import hashlib
import math
from fractions import Fraction

import numpy as np

from .coder import ArithmeticDecoder, ArithmeticEncoder, prob16
from .engine import pack_header, unpack_header
from .errors import ConfigMismatchError, CorruptArchiveError, InvalidInputError

__all__ = [
    "PpmModel",
    "ppm_compress",
    "ppm_decompress",
    "ppm_entropy",
]

DEFAULT_K = 5


def _check_k(k: int) -> int:
    if not isinstance(k, int) or not 0 <= k <= 16:
        raise InvalidInputError(f"context order must be in 0..16, got {k!r}")
    return k


class PpmModel:
    """Adaptive byte model with contexts up to order ``k``."""

    def __init__(self, k: int = DEFAULT_K) -> None:
        self.k = _check_k(k)
        # context bytes (length 0..k) -> {symbol: count}; the escape
        # count of a context is simply len() of its dict.
        self._ctx: dict[bytes, dict[int, int]] = {}

    def update(self, symbol: int, history: bytes) -> None:
        """Count ``symbol`` under every realized context of order 0..k."""
        if not 0 <= symbol <= 255:
            raise InvalidInputError("symbol must be a byte value")
        history = bytes(history)
        top = min(self.k, len(history))
        for order in range(top + 1):
            ctx = history[len(history) - order:]
            d = self._ctx.get(ctx)
            if d is None:
                d = {}
                self._ctx[ctx] = d
            d[symbol] = d.get(symbol, 0) + 1

    def level(self, context: bytes, exact: bool = False):
        """Distribution of one trie level: {symbol: p, 'esc': p}.

        ``p(sym) = c / (n + d)`` and ``p(esc) = d / (n + d)`` where
        ``n`` is the context's total count and ``d`` its distinct-symbol
        count.  Returns None for a context never seen.
        """
        d = self._ctx.get(bytes(context))
        if d is None:
            return None
        n = sum(d.values())
        dd = len(d)
        denom = n + dd
        one = Fraction(1) if exact else 1.0
        out = {sym: one * c / denom for sym, c in d.items()}
        out["esc"] = one * dd / denom
        return out

    def _levels_for(self, history: bytes):
        """Stored levels from the longest matching context downward."""
        history = bytes(history)
        for order in range(min(self.k, len(history)), -1, -1):
            d = self._ctx.get(history[len(history) - order:])
            if d is not None:
                n = sum(d.values())
                yield d, n + len(d), len(d)

    def predict_one(self, history: bytes, symbol: int) -> float:
        """Blended probability of a single symbol."""
        p = 0.0
        esc = 1.0
        for d, denom, dd in self._levels_for(history):
            c = d.get(symbol)
            if c:
                p += esc * c / denom
            esc *= dd / denom
        return p + esc / 256.0

    def predict(self, history: bytes) -> np.ndarray:
        """Blended distribution over all 256 byte values (sums to 1)."""
        p = np.zeros(256, dtype=np.float64)
        esc = 1.0
        for d, denom, dd in self._levels_for(history):
            for sym, c in d.items():
                p[sym] += esc * c / denom
            esc *= dd / denom
        p += esc / 256.0
        return p

    def predict_exact(self, history: bytes) -> dict[int, Fraction]:
        """As :meth:`predict`, in exact rational arithmetic."""
        p: dict[int, Fraction] = {s: Fraction(0) for s in range(256)}
        esc = Fraction(1)
        for d, denom, dd in self._levels_for(history):
            for sym, c in d.items():
                p[sym] += esc * Fraction(c, denom)
            esc *= Fraction(dd, denom)
        for s in range(256):
            p[s] += esc / 256
        return p


def ppm_entropy(data: bytes, k: int = DEFAULT_K) -> float:
    """Mean code length of ``data`` under an adaptive order-k model."""
    data = bytes(data)
    if not data:
        raise InvalidInputError("cross entropy of empty input is undefined")
    _check_k(k)
    model = PpmModel(k)
    bits = 0.0
    for i, b in enumerate(data):
        history = data[max(0, i - k): i]
        bits -= math.log2(model.predict_one(history, b))
        model.update(b, history)
    return bits / len(data)


def _ppm_digest(k: int) -> bytes:
    return hashlib.sha256(f"ppm\nk={k}".encode()).digest()[:8]


def _code_byte(dist: np.ndarray, coder, byte: int | None) -> int:
    """Walk the 8-level bit tree of ``dist`` through the coder.

    Encodes ``byte`` when given one, decodes otherwise; returns the
    byte.  At each tree node the probability of the 1-branch is the
    mass of its subtree over the node's mass.
    """
    lo, width = 0, 256
    acc = float(dist.sum())
    for _ in range(8):
        half = width // 2
        upper = float(dist[lo + half: lo + width].sum())
        p1 = prob16(upper / acc if acc > 0 else 0.5)
        if byte is None:
            bit = coder.decode_bit(p1)
        else:
            bit = 1 if byte - lo >= half else 0
            coder.encode_bit(p1, bit)
        if bit:
            lo += half
            acc = upper
        else:
            acc -= upper
        width = half
    return lo


def ppm_compress(data: bytes, k: int = DEFAULT_K) -> bytes:
    """Compress ``data`` under the order-k model into an archive."""
    data = bytes(data)
    _check_k(k)
    header = pack_header(_ppm_digest(k), k, len(data))
    if not data:
        return header
    model = PpmModel(k)
    enc = ArithmeticEncoder()
    for i, b in enumerate(data):
        history = data[max(0, i - k): i]
        _code_byte(model.predict(history), enc, b)
        model.update(b, history)
    return header + enc.flush()


def ppm_decompress(blob: bytes) -> bytes:
    """Invert :func:`ppm_compress`; the model order rides in the header."""
    flags, digest, n, payload = unpack_header(bytes(blob))
    k = flags
    if not 0 <= k <= 16 or digest != _ppm_digest(k):
        raise ConfigMismatchError(
            "archive was not written by this byte-context model"
        )
    if n == 0:
        if payload:
            raise CorruptArchiveError("empty stream carries payload bytes")
        return b""
    model = PpmModel(k)
    dec = ArithmeticDecoder(payload)
    out = bytearray()
    for _ in range(n):
        history = bytes(out[-k:]) if k else b""
        b = _code_byte(model.predict(history), dec, None)
        model.update(b, history)
        out.append(b)
    return bytes(out)
