"""Compression-based distances between byte strings.

A compressor that adapts to its input doubles as a similarity oracle:
if training on ``y`` makes ``x`` cheaper to code, the two share
structure.  Every metric here is a small formula over three kinds of
measurement — C(x), the compressed size of ``x``; C(x|y), the size of
``x`` coded by a model pre-trained on ``y``; and E(x|y), the
bits-per-byte cross entropy of the same run.

Sizes are kept in fractional bytes (coded bits / 8) rather than
on-disk archive sizes, which are only accurate to within a byte and
carry constant header overhead.  Concatenation ``xy`` inserts no
separator.
"""

from __future__ import annotations

from typing import Protocol

from .config import Config
from .engine import Predictor
from .errors import InvalidInputError

__all__ = [
    "CompressorHandle",
    "EngineCompressor",
    "d_c",
    "d_cdm",
    "d_e1",
    "d_e2",
    "d_ncd",
]


class CompressorHandle(Protocol):
    """Anything that can measure C(x), C(x|y) and E(x|y)."""

    def size_of(self, x: bytes) -> float: ...

    def size_of_given(self, x: bytes, y: bytes) -> float: ...

    def entropy_given(self, x: bytes, y: bytes) -> float: ...


class EngineCompressor:
    """Measurement handle backed by the mixing engine.

    Every measurement runs a fresh predictor, so measurements are
    independent and the handle itself is stateless (safe to reuse
    across pairs).
    """

    def __init__(self, config: Config | None = None) -> None:
        self.config = config if config is not None else Config()

    def _bits(self, x: bytes, trained_on: bytes = b"") -> float:
        if len(x) == 0:
            raise InvalidInputError("cannot measure an empty string")
        p = Predictor(self.config)
        if trained_on:
            p.train(trained_on)
        before = p.ce_bits
        p.train(x)
        return p.ce_bits - before

    def size_of(self, x: bytes) -> float:
        """C(x): coded size of ``x`` in fractional bytes."""
        return self._bits(x) / 8.0

    def size_of_given(self, x: bytes, y: bytes) -> float:
        """C(x|y): coded size of ``x`` after adapting to ``y``."""
        return self._bits(x, trained_on=y) / 8.0

    def entropy_given(self, x: bytes, y: bytes) -> float:
        """E(x|y): bits per byte of ``x`` after adapting to ``y``."""
        return self._bits(x, trained_on=y) / len(x)


def _handle(h: CompressorHandle | None) -> CompressorHandle:
    return h if h is not None else EngineCompressor()


def _require(x: bytes, name: str) -> bytes:
    x = bytes(x)
    if not x:
        raise InvalidInputError(f"{name} must be non-empty")
    return x


def d_c(x: bytes, y: bytes, handle: CompressorHandle | None = None) -> float:
    """(C(x|y) + C(y|x)) / C(xy): near 0 for twins, near 1 for strangers."""
    x, y = _require(x, "x"), _require(y, "y")
    h = _handle(handle)
    return (h.size_of_given(x, y) + h.size_of_given(y, x)) / h.size_of(x + y)


def d_e1(x: bytes, y: bytes, handle: CompressorHandle | None = None) -> float:
    """E(x|y): one-pass, asymmetric; bits per byte of x under y's model."""
    x = _require(x, "x")
    h = _handle(handle)
    return h.entropy_given(x, bytes(y))


def d_e2(x: bytes, y: bytes, handle: CompressorHandle | None = None) -> float:
    """(E(x|y) + E(y|x)) / 2: symmetrized cross entropy."""
    x, y = _require(x, "x"), _require(y, "y")
    h = _handle(handle)
    return (h.entropy_given(x, y) + h.entropy_given(y, x)) / 2.0


def d_ncd(x: bytes, y: bytes, handle: CompressorHandle | None = None) -> float:
    """(C(xy) − min(C(x), C(y))) / max(C(x), C(y))."""
    x, y = _require(x, "x"), _require(y, "y")
    h = _handle(handle)
    cx, cy = h.size_of(x), h.size_of(y)
    return (h.size_of(x + y) - min(cx, cy)) / max(cx, cy)


def d_cdm(x: bytes, y: bytes, handle: CompressorHandle | None = None) -> float:
    """C(xy) / (C(x) + C(y)): 1/2 for twins, 1 for strangers.

    The two strings are concatenated in a canonical (lexicographic)
    order, which makes the value exactly symmetric in its arguments.
    """
    x, y = _require(x, "x"), _require(y, "y")
    h = _handle(handle)
    cat = x + y if x <= y else y + x
    return h.size_of(cat) / (h.size_of(x) + h.size_of(y))
