"""Adaptive probability map: a learned per-context refinement of p.

Each context row holds 33 cells at logit knots -8, -7.5, ... 8.  To
refine a probability we locate its logit between two knots and
interpolate the (logits of the) bracketing cells; the two cells then
adapt toward the observed bit.  A fresh table maps every probability to
itself, so the stage can only help once it has seen evidence that the
mixer is systematically over- or under-confident in a context.
"""

from __future__ import annotations

import numpy as np

from . import kernel as K
from .errors import InvalidInputError

__all__ = ["Apm", "fresh_table"]

KNOTS = np.arange(33, dtype=np.float64) * 0.5 - 8.0


def fresh_table(n_ctx: int = 256) -> np.ndarray:
    """Identity table: cell j of every row is squash(knot j)."""
    if n_ctx < 1:
        raise InvalidInputError("need at least one context row")
    row = 1.0 / (1.0 + np.exp(-KNOTS))
    return np.tile(row, (n_ctx, 1))


class Apm:
    """One refinement stage keyed by a small context (default: last byte).

    ``rate`` controls adaptation: each observed bit moves the bracketing
    cells by ``weight * (bit - cell) / 2**rate``.
    """

    def __init__(self, n_ctx: int = 256, rate: int = 7) -> None:
        if not 1 <= rate <= 20:
            raise InvalidInputError("rate must be in 1..20")
        self.table = fresh_table(n_ctx)
        self.rate = int(rate)
        self._freg = np.zeros(K.NFREG, dtype=np.float64)

    @property
    def n_ctx(self) -> int:
        return self.table.shape[0]

    def _check(self, p: float, ctx: int) -> None:
        if not 0.0 < p < 1.0:
            raise InvalidInputError(f"p must be in (0, 1), got {p!r}")
        if not 0 <= ctx < self.n_ctx:
            raise InvalidInputError(f"ctx must be in 0..{self.n_ctx - 1}")

    def apply(self, p: float, ctx: int) -> float:
        """Return the refined probability for ``p`` in context ``ctx``."""
        self._check(p, ctx)
        return float(K.apm_apply(self.table, int(ctx), float(p), self._freg))

    def update(self, p: float, ctx: int, bit: int) -> None:
        """Adapt the cells that refined ``p`` toward the observed bit."""
        self._check(p, ctx)
        if bit not in (0, 1):
            raise InvalidInputError("bit must be 0 or 1")
        K.apm_apply(self.table, int(ctx), float(p), self._freg)
        K.apm_update(
            self.table, int(ctx), int(bit), self.rate, self._freg
        )
