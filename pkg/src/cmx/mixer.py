"""Gated two-layer logistic mixer.

A mixer combines many per-model bit probabilities into one.  Inputs are
moved to the stretch (logit) domain, a first layer of logistic units
produces seven intermediate probabilities, and a second layer combines
those into the final output.  Both layers train online; the second layer
can use either plain gradient descent or an extended Kalman filter.

Gating: each first-layer unit is picked out of a *hidden set* of weight
vectors by a deterministic function of cheap context features (partial
byte, order hashes, match state).  Weights therefore specialise by
context without any per-context tables beyond the weight rows
themselves.

The training loop inside :mod:`cmx.engine` runs the compiled versions of
these routines; this module exposes the same arithmetic piecewise for
direct use and testing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernel as K
from .config import BASE_SET_SIZES
from .errors import InvalidInputError, NumericalError

__all__ = [
    "BASE_SET_SIZES",
    "EkfState",
    "GateInputs",
    "Mixer",
    "ekf_update",
    "mix_layer1",
    "mix_layer2",
    "select_nodes",
    "sgd_update",
    "squash",
    "stretch",
]


def squash(x: float) -> float:
    """Logistic function: map a stretch-domain value back to (0, 1)."""
    return float(K.squash(float(x)))


def stretch(p: float) -> float:
    """Logit function: ln(p / (1 - p)), the inverse of :func:`squash`.

    Accepts any ``p`` in (0, 1); values at or beyond the endpoints are
    nudged inside so the result stays finite.
    """
    return float(K.stretch_guarded(float(p)))


@dataclass(frozen=True)
class GateInputs:
    """Cheap context features that drive hidden-node selection.

    ``h0`` is the one-prefixed partial byte (1..255: a 1 bit followed by
    the bits seen so far this byte), ``h1``/``h2``/``h3`` are the last
    three whole bytes (most recent first), ``low_order_matches`` counts
    how many of the order-1..7 contexts have occurred before (0..7),
    ``last_four_bytes`` packs the previous four bytes into 32 bits with
    the newest in the low byte, ``match_len`` is the current match
    length in bytes, and ``bit_pos`` is the bit position 0..7 within the
    byte being coded.
    """

    h0: int
    h1: int
    h2: int
    h3: int
    low_order_matches: int
    last_four_bytes: int
    match_len: int
    bit_pos: int

    def __post_init__(self) -> None:
        if not 1 <= self.h0 <= 255:
            raise InvalidInputError(f"h0 must be in 1..255, got {self.h0}")
        for name in ("h1", "h2", "h3"):
            v = getattr(self, name)
            if not isinstance(v, int) or not 0 <= v <= 255:
                raise InvalidInputError(f"{name} must be a byte value 0..255")
        if not 0 <= self.low_order_matches <= 7:
            raise InvalidInputError("low_order_matches must be in 0..7")
        if not 0 <= self.last_four_bytes <= 0xFFFFFFFF:
            raise InvalidInputError("last_four_bytes must fit in 32 bits")
        if self.match_len < 0:
            raise InvalidInputError("match_len must be nonnegative")
        if not 0 <= self.bit_pos <= 7:
            raise InvalidInputError("bit_pos must be in 0..7")


def select_nodes(
    g: GateInputs, set_sizes: tuple[int, ...] = BASE_SET_SIZES
) -> tuple[int, ...]:
    """Return the active node index for each of the seven hidden sets.

    Each index is already reduced modulo its set size, so
    ``out[s] < set_sizes[s]`` always holds.
    """
    if len(set_sizes) != 7:
        raise InvalidInputError("set_sizes must have exactly 7 entries")
    nsz = np.asarray(set_sizes, dtype=np.int64)
    if (nsz < 1).any():
        raise InvalidInputError("set sizes must be positive")
    out = np.zeros(7, dtype=np.int64)
    K.select_nodes(
        g.h0, g.h1, g.h2, g.h3,
        g.low_order_matches, g.last_four_bytes, g.match_len, g.bit_pos,
        nsz, out,
    )
    return tuple(int(v) for v in out)


def _dot(w: np.ndarray, x: np.ndarray) -> float:
    # Strict left-to-right accumulation, matching the compiled loop
    # bit for bit.
    d = 0.0
    for j in range(len(x)):
        d += float(w[j]) * float(x[j])
    return d


def mix_layer1(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """First layer: one logistic unit per hidden set.

    ``x`` is the stretch-domain input vector (length ``n``) and ``w``
    the seven selected weight rows, shape ``(7, n)``.  Returns the seven
    intermediate probabilities.
    """
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (7, len(x)):
        raise InvalidInputError(f"weights must have shape (7, {len(x)})")
    return np.array([squash(_dot(w[s], x)) for s in range(7)])


def mix_layer2(p1: np.ndarray, w2: np.ndarray) -> float:
    """Second layer: combine the seven stretched layer-1 outputs.

    Layer-1 probabilities are stretched and clamped to [-8, 8] before
    the dot product, exactly as in the coding loop.
    """
    p1 = np.asarray(p1, dtype=np.float64)
    w2 = np.asarray(w2, dtype=np.float64)
    if p1.shape != (7,) or w2.shape != (7,):
        raise InvalidInputError("layer 2 expects 7 probabilities and 7 weights")
    x2 = np.array([float(K.clamp8(stretch(p))) for p in p1])
    return squash(_dot(w2, x2))


def sgd_update(
    w: np.ndarray, x: np.ndarray, y: int, pi: float, eta: float = 0.003
) -> None:
    """One step of online logistic regression, in place.

    Gradient of the log loss with respect to the weights is
    ``(pi - y) * x``; we step against it.
    """
    w = np.asarray(w)
    x = np.asarray(x, dtype=np.float64)
    if w.shape != x.shape:
        raise InvalidInputError("weights and inputs must have one shape")
    g = eta * (float(pi) - float(y))
    for j in range(len(w)):
        w[j] -= g * x[j]


class EkfState:
    """Weights plus error covariance for the Kalman-filtered layer.

    The weight vector is the state being estimated; the bit is a noisy
    observation of ``squash(w . x)``.  ``q`` is the process-noise power
    added to the covariance diagonal each step and ``r`` the observation
    noise.  ``p0`` and ``w0`` set the initial covariance diagonal and
    weights.
    """

    def __init__(
        self,
        n: int,
        q: float = 0.15,
        r: float = 5.0,
        p0: float = 60.0,
        w0: float = 0.0,
    ) -> None:
        if n < 1:
            raise InvalidInputError("EkfState needs at least one weight")
        if q < 0 or r <= 0 or p0 <= 0:
            raise InvalidInputError("require q >= 0, r > 0, p0 > 0")
        self.w = np.full(n, float(w0), dtype=np.float64)
        self.P = np.eye(n, dtype=np.float64) * float(p0)
        self.q = float(q)
        self.r = float(r)
        self._pg = np.zeros(n, dtype=np.float64)
        self._kg = np.zeros(n, dtype=np.float64)


def ekf_update(state: EkfState, x: np.ndarray, y: int, pi: float) -> None:
    """One extended-Kalman-filter step, in place.

    Time update first (``P += q I``), then the measurement update with
    the linearised observation ``G = pi (1 - pi) x``:

    * gain  ``k = P G' / (r + G P G')``
    * state ``w += k (y - pi)``
    * covariance ``P -= k G P``, then symmetrised.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != state.w.shape:
        raise InvalidInputError("input length must match the weight count")
    g = float(pi) * (1.0 - float(pi))
    gx = g * x
    denom = state.r + state.q * float(gx @ gx) + float(gx @ state.P @ gx)
    if not denom > 0.0 or not math.isfinite(denom):
        raise NumericalError(f"EKF innovation variance {denom!r} is not positive")
    K.ekf_step(
        state.w, state.P, x, float(pi), float(y), state.q, state.r,
        state._pg, state._kg,
    )


class Mixer:
    """Self-contained gated mixer: predict a bit, observe it, adapt.

    Holds the full bank of first-layer weight rows (one row per node in
    every hidden set) and the second-layer weights.  ``predict`` selects
    nodes from the gate inputs and produces the mixed probability;
    ``update`` trains the rows that produced it.
    """

    def __init__(
        self,
        n_inputs: int,
        set_sizes: tuple[int, ...] = BASE_SET_SIZES,
        eta: float = 0.003,
        second_layer: str = "sgd",
        ekf_q: float = 0.15,
        ekf_r: float = 5.0,
        ekf_p0: float = 60.0,
    ) -> None:
        if n_inputs < 1:
            raise InvalidInputError("mixer needs at least one input")
        if second_layer not in ("sgd", "ekf"):
            raise InvalidInputError("second_layer must be 'sgd' or 'ekf'")
        self.n_inputs = int(n_inputs)
        self.set_sizes = tuple(int(s) for s in set_sizes)
        self.eta = float(eta)
        self.second_layer = second_layer
        self.w1 = np.full(
            (sum(self.set_sizes), self.n_inputs),
            1.0 / self.n_inputs,
            dtype=np.float64,
        )
        self._offsets = np.cumsum((0,) + self.set_sizes[:-1])
        if second_layer == "ekf":
            self.ekf: EkfState | None = EkfState(
                7, q=ekf_q, r=ekf_r, p0=ekf_p0, w0=150.0 / 65536.0
            )
            self.w2 = self.ekf.w
        else:
            self.ekf = None
            self.w2 = np.full(7, 128.0 / 65536.0, dtype=np.float64)
        self._sel: tuple[int, ...] | None = None
        self._x: np.ndarray | None = None
        self._p1: np.ndarray | None = None
        self._x2: np.ndarray | None = None
        self._p2 = 0.5

    def predict(self, x: np.ndarray, g: GateInputs) -> float:
        """Mix the stretch-domain inputs ``x`` under gate state ``g``."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n_inputs,):
            raise InvalidInputError(f"expected {self.n_inputs} inputs")
        sel = select_nodes(g, self.set_sizes)
        rows = np.stack(
            [self.w1[self._offsets[s] + sel[s]] for s in range(7)]
        )
        p1 = mix_layer1(x, rows)
        x2 = np.array([float(K.clamp8(stretch(p))) for p in p1])
        p2 = squash(_dot(self.w2, x2))
        self._sel, self._x, self._p1, self._x2, self._p2 = sel, x, p1, x2, p2
        return p2

    def update(self, bit: int) -> None:
        """Train both layers on the observed ``bit`` (0 or 1)."""
        if self._sel is None:
            raise InvalidInputError("update() requires a preceding predict()")
        if bit not in (0, 1):
            raise InvalidInputError("bit must be 0 or 1")
        for s in range(7):
            row = self.w1[self._offsets[s] + self._sel[s]]
            sgd_update(row, self._x, bit, float(self._p1[s]), self.eta)
        if self.ekf is not None:
            ekf_update(self.ekf, self._x2, bit, self._p2)
        else:
            sgd_update(self.w2, self._x2, bit, self._p2, self.eta)
        self._sel = None
