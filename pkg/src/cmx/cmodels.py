"""Context models: bit counters, hashed order-N tables, match model.

Every model answers the same question — the probability that the next
bit is 1 given some view of the history — and the mixer arbitrates
between them.  State lives in plain numpy arrays shaped exactly like
the coding loop's, so these classes stay interchangeable with it.
"""

from __future__ import annotations

import numpy as np

from . import kernel as K
from .errors import InvalidInputError

__all__ = [
    "BitCounter",
    "ContextModel",
    "MatchModel",
    "context_hash",
    "sparse_hash",
]


def _check_tree(tree: int) -> None:
    if not 1 <= tree <= 255:
        raise InvalidInputError("bit-tree index must be in 1..255")


def _check_bit(bit: int) -> None:
    if bit not in (0, 1):
        raise InvalidInputError("bit must be 0 or 1")


def context_hash(history: bytes, order: int) -> int:
    """Hash of the last ``order`` bytes of ``history``, newest first.

    Shorter histories hash what exists plus a length marker, so the
    empty and partial contexts of different orders stay distinct.
    """
    if not 1 <= order <= 64:
        raise InvalidInputError("order must be in 1..64")
    arr = np.frombuffer(bytes(history), dtype=np.uint8)
    return int(K.hash_order(arr, len(arr), order)) & 0x7FFFFFFFFFFF

def sparse_hash(history: bytes) -> int:
    """Hash of the bytes at gap offsets 1 and 3 behind the cursor."""
    arr = np.frombuffer(bytes(history), dtype=np.uint8)
    return int(K.hash_sparse(arr, len(arr))) & 0x7FFFFFFFFFFF


class BitCounter:
    """A (zeros, ones) pair with additive-1/2 probability smoothing.

    Counts saturate at 255; when one side would overflow, both halve
    first, which keeps recent evidence twice as influential as old.
    """

    __slots__ = ("n0", "n1")

    def __init__(self, n0: int = 0, n1: int = 0) -> None:
        if not (0 <= n0 <= 255 and 0 <= n1 <= 255):
            raise InvalidInputError("counts must be in 0..255")
        self.n0 = int(n0)
        self.n1 = int(n1)

    def p(self) -> float:
        """P(next bit = 1) = (n1 + 1/2) / (n0 + n1 + 1)."""
        return (self.n1 + 0.5) / (self.n0 + self.n1 + 1.0)

    def update(self, bit: int) -> None:
        _check_bit(bit)
        if (bit == 1 and self.n1 == 255) or (bit == 0 and self.n0 == 255):
            self.n0 >>= 1
            self.n1 >>= 1
        if bit == 1:
            self.n1 += 1
        else:
            self.n0 += 1

    def __repr__(self) -> str:  # pragma: no cover
        return f"BitCounter(n0={self.n0}, n1={self.n1})"


class ContextModel:
    """Hashed table of bit counters for one context order.

    The table holds ``2**table_log2`` counter cells grouped into buckets
    of 256: a context hash picks the bucket and the one-prefixed partial
    byte (the bit-tree index) picks the cell within it.  Distinct
    contexts may share a bucket; the counters then see both streams.
    """

    def __init__(self, order: int, table_log2: int = 22) -> None:
        if not 9 <= table_log2 <= 28:
            raise InvalidInputError("table_log2 must be in 9..28")
        if not 1 <= order <= 64:
            raise InvalidInputError("order must be in 1..64")
        self.order = int(order)
        self.table = np.zeros((1, 1 << table_log2, 2), dtype=np.uint8)
        self._mask = (1 << (table_log2 - 8)) - 1

    def _cell(self, ctx_hash: int, tree: int) -> int:
        _check_tree(tree)
        return ((int(ctx_hash) & self._mask) << 8) + tree

    def predict(self, ctx_hash: int, tree: int) -> float:
        """P(next bit = 1) for the cell addressed by hash and tree."""
        idx = self._cell(ctx_hash, tree)
        return float(
            K.counter_prob(
                int(self.table[0, idx, 0]), int(self.table[0, idx, 1])
            )
        )

    def update(self, ctx_hash: int, tree: int, bit: int) -> None:
        _check_bit(bit)
        K.counter_update(self.table, 0, self._cell(ctx_hash, tree), bit)

    def hash_for(self, history: bytes) -> int:
        """Context hash of ``history`` at this model's order."""
        return context_hash(history, self.order)


class MatchModel:
    """Predicts a repeat of the longest recent match of the history tail.

    An order-2 index maps the last two bytes to the position right after
    their most recent earlier occurrence.  When the current match dies,
    the index proposes a candidate and the match is re-verified backward
    (up to ``back`` bytes, at least 2 required); while it lives, each
    confirmed byte extends it by one, up to ``cap``.  The predicted next
    byte is the one that followed the matched run, voted with confidence
    that grows with the match length.
    """

    def __init__(self, cap: int = 65534, back: int = 64) -> None:
        if not 2 <= cap <= 65534:
            raise InvalidInputError("cap must be in 2..65534")
        if back < 2:
            raise InvalidInputError("back must be at least 2")
        self._hist = np.zeros(4096, dtype=np.uint8)
        self._midx = np.zeros(65536, dtype=np.int64)
        self._ireg = np.zeros(K.NIREG, dtype=np.int64)
        self._cfgi = np.zeros(K.NCFGI, dtype=np.int64)
        self._cfgi[K.CI_MMAX] = int(cap)
        self._cfgi[K.CI_BACKCAP] = int(back)

    @property
    def match_len(self) -> int:
        return int(self._ireg[K.IR_MLEN])

    @property
    def predicted_byte(self) -> int | None:
        """The byte expected next, or None when there is no live match."""
        n = int(self._ireg[K.IR_N])
        mptr = int(self._ireg[K.IR_MPTR])
        if self.match_len > 0 and mptr < n:
            return int(self._hist[mptr])
        return None

    def predict(self, tree: int, bit_pos: int) -> tuple[float, int]:
        """Return (P(next bit = 1), match length) at this tree node.

        Neutral 1/2 when there is no match or the match byte has already
        disagreed with the bits seen so far this byte.
        """
        _check_tree(tree)
        if not 0 <= bit_pos <= 7:
            raise InvalidInputError("bit_pos must be in 0..7")
        if tree >> bit_pos != 1:
            raise InvalidInputError("tree index does not match bit_pos")
        mb = self.predicted_byte
        x = K.match_x(
            -1 if mb is None else mb, self.match_len, tree, bit_pos
        )
        return float(K.squash(float(x))), self.match_len

    def update(self, byte: int) -> None:
        """Fold one finished byte into the history and the match state."""
        if not 0 <= byte <= 255:
            raise InvalidInputError("byte must be in 0..255")
        n = int(self._ireg[K.IR_N])
        if n + 1 >= len(self._hist):
            grown = np.zeros(2 * len(self._hist), dtype=np.uint8)
            grown[: len(self._hist)] = self._hist
            self._hist = grown
        K.end_byte(self._hist, self._midx, self._ireg, self._cfgi, byte)
