"""Compiled numerical core shared by the coder, the models and the engine.

All mutable predictor state lives in plain numpy arrays owned by the
caller.  Every function here is deterministic given those arrays, which
is what lets the encoder and the decoder replay bit-identical
probability streams.  The thin classes in :mod:`cmx.coder`,
:mod:`cmx.cmodels`, :mod:`cmx.mixer` and :mod:`cmx.apm` call the same
functions on small arrays, so there is a single source of truth for the
arithmetic.

Layout conventions:

* ``ireg``/``freg`` are small integer/float register files holding the
  per-stream counters and the per-bit scratch values that have to
  survive between ``predict_bit`` and ``update_bit``.
* ``cfgi``/``cfgf`` hold frozen configuration values.
* ``rc`` holds the range-coder registers; ``rcbuf`` is its byte buffer.
* Counter tables are ``uint8[n_models, cells, 2]`` where a cell stores
  the (zeros, ones) pair and ``cells`` is a power of two.  A bucket is
  256 consecutive cells addressed by the bit-tree index of the partial
  byte, so ``bucket_base + tree`` is the active cell.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# --- integer registers ---------------------------------------------------
IR_N = 0        # bytes currently in history
IR_C4 = 1       # last four bytes packed big-to-little (newest in low byte)
IR_MPTR = 2     # history position the match model predicts from
IR_MLEN = 3     # current match length (0 = no match)
IR_BYTES = 4    # total bytes processed since construction
IR_LOM = 5      # low-order context hits for the current byte (0..7)
IR_H1 = 6       # previous byte
IR_H2 = 7       # byte before that
IR_H3 = 8       # third-most-recent byte
IR_APMCTX = 9   # refinement context (previous byte)
IR_MBYTE = 10   # byte the match model predicts, -1 if none
IR_P16 = 11     # last coded probability, 16-bit fixed point
IR_ERR = 12     # sticky error flag (decoder ran out of input)
NIREG = 16

# --- float registers -----------------------------------------------------
FR_APMI = 0     # refinement cell index saved by apply for update
FR_APMW = 1     # refinement interpolation weight
FR_P2 = 2       # mixed probability before refinement
FR_PFIN = 3     # final probability handed to the coder
FR_CE = 4       # accumulated code length in bits
NFREG = 16

# --- integer configuration -----------------------------------------------
CI_NP = 0       # mixer input count (context models + match)
CI_NCM = 1      # context model count (orders plus sparse)
CI_MASK = 2     # bucket mask for the counter tables
CI_SECOND = 3   # 0 = gradient second-layer update, 1 = Kalman
CI_APM = 4      # 1 if the refinement stage is enabled
CI_APMRATE = 5  # refinement learning-rate shift
CI_SEENMASK = 6 # mask for the low-order seen tables
CI_MMAX = 7     # match length cap
CI_BACKCAP = 8  # backward match verification cap
NCFGI = 16

# --- float configuration -------------------------------------------------
CF_ETA = 0      # learning rate for the gradient updates
CF_Q = 1        # Kalman process noise (diagonal)
CF_R = 2        # Kalman observation noise
NCFGF = 8

# --- range coder registers -----------------------------------------------
RC_LOW = 0
RC_RANGE = 1
RC_CACHE = 2
RC_PEND = 3     # run of 0xFF bytes awaiting a possible carry
RC_POS = 4      # write (encoder) or read (decoder) position in rcbuf
RC_STARTED = 5  # first output byte (always zero) has been dropped
RC_CODE = 6     # decoder's sliding window over the payload
RC_FLUSHED = 7
RC_ERR = 8      # decoder ran past the end of the payload
NRC = 9

RC_TOP = 1 << 24
MASK32 = 0xFFFFFFFF

# FNV-1a with a murmur-style finalizer, done in wrapping int64 so numba
# needs no unsigned casts; only the masked low bits are ever used.
_FNV_OFFSET = 0xCBF29CE484222325 - (1 << 64)
_FNV_PRIME = 0x100000001B3
_MIX_K = 0xFF51AFD7ED558CCD - (1 << 64)


# --------------------------------------------------------------------------
# hashing
# --------------------------------------------------------------------------

@njit(inline="always", cache=True)
def _fnv_step(h, b):
    return (h ^ b) * _FNV_PRIME


@njit(inline="always", cache=True)
def _fnv_final(h):
    h = (h ^ ((h >> 33) & 0x7FFFFFFF)) * _MIX_K
    return h ^ ((h >> 29) & 0x7FFFFFFFF)


@njit(inline="always", cache=True)
def hash_order(hist, n, k):
    """Hash of the ``k`` most recent history bytes, newest first.

    Fewer than ``k`` bytes of history hashes what exists plus a length
    marker, so early-stream contexts of different lengths stay distinct.
    """
    h = _FNV_OFFSET ^ (k * 0x9E37)
    m = k if k < n else n
    for i in range(m):
        h = _fnv_step(h, np.int64(hist[n - 1 - i]))
    h = _fnv_step(h, m + 1)
    return _fnv_final(h)


@njit(inline="always", cache=True)
def hash_sparse(hist, n):
    """Hash of the skip-gram context (offsets 1 and 3)."""
    b1 = np.int64(hist[n - 1]) if n >= 1 else np.int64(256)
    b3 = np.int64(hist[n - 3]) if n >= 3 else np.int64(256)
    h = _fnv_step(_FNV_OFFSET ^ 0x51ED, b1)
    h = _fnv_step(h, b3)
    return _fnv_final(h)


# --------------------------------------------------------------------------
# scalar transfer functions
# --------------------------------------------------------------------------

@njit(inline="always", cache=True)
def squash(x):
    """Logistic function mapping a logit to a probability."""
    if x > 708.0:
        return 1.0
    if x < -708.0:
        return 0.0
    return 1.0 / (1.0 + np.exp(-x))


@njit(inline="always", cache=True)
def stretch_guarded(p):
    """Logit of ``p`` with saturation guards at the float limits."""
    if p < 1e-300:
        return -708.0
    if p > 1.0 - 1e-16:
        return 708.0
    return np.log(p / (1.0 - p))


@njit(inline="always", cache=True)
def clamp8(x):
    if x > 8.0:
        return 8.0
    if x < -8.0:
        return -8.0
    return x


# --------------------------------------------------------------------------
# bit counters
# --------------------------------------------------------------------------

@njit(inline="always", cache=True)
def counter_prob(n0, n1):
    """Additive-half estimate of P(bit = 1) from a (zeros, ones) pair."""
    return (n1 + 0.5) / (n0 + n1 + 1.0)


@njit(inline="always", cache=True)
def counter_update(cnt, m, idx, bit):
    """Increment one count, halving both first when it would overflow."""
    n0 = np.int64(cnt[m, idx, 0])
    n1 = np.int64(cnt[m, idx, 1])
    if (bit == 1 and n1 == 255) or (bit == 0 and n0 == 255):
        n0 >>= 1
        n1 >>= 1
    if bit == 1:
        n1 += 1
    else:
        n0 += 1
    cnt[m, idx, 0] = n0
    cnt[m, idx, 1] = n1


@njit(inline="always", cache=True)
def match_x(mb, mlen, tree, bp):
    """Stretch-domain match-model vote for the next bit.

    ``mb`` is the predicted byte (-1 when no match), ``tree`` the
    one-prefixed partial byte, ``bp`` the bit position.  Nonzero only
    while the match byte agrees with every bit seen so far this byte;
    magnitude grows with the match length, capped at 32 bytes.
    """
    if mb < 0:
        return 0.0
    if (mb >> (8 - bp)) != tree - (1 << bp):
        return 0.0
    ml = mlen if mlen < 32 else 32
    v = 0.8 * ml
    return v if ((mb >> (7 - bp)) & 1) == 1 else -v


# --------------------------------------------------------------------------
# hidden-node selection
# --------------------------------------------------------------------------

@njit(cache=True)
def select_nodes(h0, h1, h2, h3, lom, c4, mlen, bp, nsz, out):
    """Pick one active node per hidden set from the gate inputs.

    ``h0`` is the one-prefixed partial byte (1 when no bits have been
    seen), ``h1``..``h3`` the three most recent whole bytes, ``lom`` the
    low-order context hit count, ``c4`` the last four bytes packed into
    32 bits (newest lowest), ``mlen`` the current match length and
    ``bp`` the bit position within the byte.  Raw indices are reduced
    modulo each set's size into ``out``.
    """
    s1 = 8 + h1
    s2 = h0
    s3 = lom + 8 * ((c4 >> 5) & 7)
    if h1 == h2:
        s3 += 64
    s4 = h2
    s5 = h3
    if mlen > 0:
        s6 = np.int64(np.floor(np.log2(np.float64(mlen)) * 16.0 + 0.5))
    else:
        s6 = np.int64(0)
    if bp == 0:
        s7 = (h3 >> 7) + (h1 & 240) + 4 * (h2 >> 6) + 2 * ((c4 >> 31) & 1)
    else:
        t = h0 << (8 - bp)
        if bp == 1:
            t += h3 >> 1
        s7 = min(bp, 5) * 256 + (h1 >> 5) + 8 * (h2 >> 5) + (t & 192)
    out[0] = s1 % nsz[0]
    out[1] = s2 % nsz[1]
    out[2] = s3 % nsz[2]
    out[3] = s4 % nsz[3]
    out[4] = s5 % nsz[4]
    out[5] = s6 % nsz[5]
    out[6] = s7 % nsz[6]


# --------------------------------------------------------------------------
# second-layer Kalman update
# --------------------------------------------------------------------------

@njit(cache=True)
def ekf_step(w, P, x, pi, y, q, r, pg, kg):
    """One extended Kalman step on the output weights.

    Observation model: y ~ squash(w.x) observed with variance ``r``;
    the linearization is G_i = pi (1 - pi) x_i.  ``pg`` and ``kg`` are
    caller-owned scratch vectors (P.G' and the gain).
    """
    n = w.shape[0]
    for i in range(n):
        P[i, i] += q
    g = pi * (1.0 - pi)
    s = r
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += P[i, j] * (g * x[j])
        pg[i] = acc
        s += (g * x[i]) * acc
    inv = 1.0 / s
    err = y - pi
    for i in range(n):
        kg[i] = pg[i] * inv
        w[i] += kg[i] * err
    for i in range(n):
        for j in range(n):
            P[i, j] -= kg[i] * pg[j]
    for i in range(n):
        for j in range(i + 1, n):
            v = 0.5 * (P[i, j] + P[j, i])
            P[i, j] = v
            P[j, i] = v


# --------------------------------------------------------------------------
# probability refinement
# --------------------------------------------------------------------------

@njit(inline="always", cache=True)
def apm_apply(apm, ctx, p, freg):
    """Refine ``p`` through the per-context interpolation table.

    The 33 cells of a row sit at logit knots -8..8 in steps of 1/2; the
    output interpolates between the two bracketing cells in logit space,
    so a fresh table (cells at the logistic of their knot) is the
    identity map.  The bracketing cell index and weight are saved for
    ``apm_update``.
    """
    s = clamp8(stretch_guarded(p))
    pos = (s + 8.0) * 2.0
    i = np.int64(pos)
    if i > 31:
        i = 31
    w = pos - i
    lo = stretch_guarded(apm[ctx, i])
    hi = stretch_guarded(apm[ctx, i + 1])
    freg[FR_APMI] = i
    freg[FR_APMW] = w
    return squash((1.0 - w) * lo + w * hi)


@njit(inline="always", cache=True)
def apm_update(apm, ctx, bit, rate, freg):
    """Move the two bracketing cells toward the observed bit."""
    i = np.int64(freg[FR_APMI])
    w = freg[FR_APMW]
    y = 1.0 if bit == 1 else 0.0
    sc = 1.0 / (1 << rate)
    apm[ctx, i] += (y - apm[ctx, i]) * (1.0 - w) * sc
    apm[ctx, i + 1] += (y - apm[ctx, i + 1]) * w * sc


# --------------------------------------------------------------------------
# per-byte model maintenance
# --------------------------------------------------------------------------

@njit(cache=True)
def begin_byte(cnt, orders, cmbk, hist, seen, ireg, cfgi):
    """Prepare per-byte state: gate bytes, hit count, table buckets."""
    n = ireg[IR_N]
    h1 = np.int64(hist[n - 1]) if n >= 1 else np.int64(0)
    h2 = np.int64(hist[n - 2]) if n >= 2 else np.int64(0)
    h3 = np.int64(hist[n - 3]) if n >= 3 else np.int64(0)
    ireg[IR_H1] = h1
    ireg[IR_H2] = h2
    ireg[IR_H3] = h3
    ireg[IR_APMCTX] = h1

    lom = 0
    smask = cfgi[CI_SEENMASK]
    for k in range(1, 8):
        if n >= k:
            hk = hash_order(hist, n, k) & smask
            if seen[k - 1, hk] != 0:
                lom += 1
            else:
                seen[k - 1, hk] = 1
    ireg[IR_LOM] = lom

    mask = cfgi[CI_MASK]
    for m in range(cfgi[CI_NCM]):
        o = orders[m]
        if o >= 0:
            b = hash_order(hist, n, o) & mask
        else:
            b = hash_sparse(hist, n) & mask
        cmbk[m] = b << 8

    if ireg[IR_MLEN] > 0 and ireg[IR_MPTR] < n:
        ireg[IR_MBYTE] = np.int64(hist[ireg[IR_MPTR]])
    else:
        ireg[IR_MBYTE] = -1


@njit(cache=True)
def end_byte(hist, midx, ireg, cfgi, b):
    """Fold a finished byte into history and maintain the match."""
    n = ireg[IR_N]
    hist[n] = b
    n += 1
    ireg[IR_N] = n
    ireg[IR_C4] = ((ireg[IR_C4] << 8) | b) & MASK32
    ireg[IR_BYTES] += 1

    mlen = ireg[IR_MLEN]
    mptr = ireg[IR_MPTR]
    if mlen > 0:
        if np.int64(hist[mptr]) == b:
            mptr += 1
            if mlen < cfgi[CI_MMAX]:
                mlen += 1
        else:
            mlen = 0
    if n >= 2:
        key = (np.int64(hist[n - 2]) << 8) | b
        if mlen == 0:
            cand = midx[key]
            if cand >= 2:
                cap = cfgi[CI_BACKCAP]
                k = 0
                while k < cap and cand - 1 - k >= 0:
                    if hist[cand - 1 - k] != hist[n - 1 - k]:
                        break
                    k += 1
                if k >= 2:
                    mlen = k
                    mptr = cand
        midx[key] = n
    ireg[IR_MLEN] = mlen
    ireg[IR_MPTR] = mptr


# --------------------------------------------------------------------------
# per-bit prediction and update
# --------------------------------------------------------------------------

@njit(cache=True)
def predict_bit(cnt, cmbk, w1, noff, nsz, w2, apm, x, pi1, x2, sel,
                ireg, freg, cfgi, tree, bp):
    """Predict the next bit; returns the 16-bit coding probability.

    ``tree`` is the one-prefixed partial byte (1..255) and ``bp`` the
    bit position 0..7.  Saves everything ``update_bit`` needs in the
    scratch arrays and registers.
    """
    ncm = cfgi[CI_NCM]
    npt = cfgi[CI_NP]
    for m in range(ncm):
        idx = cmbk[m] + tree
        p = counter_prob(np.int64(cnt[m, idx, 0]), np.int64(cnt[m, idx, 1]))
        x[m] = clamp8(stretch_guarded(p))

    x[npt - 1] = clamp8(match_x(ireg[IR_MBYTE], ireg[IR_MLEN], tree, bp))

    select_nodes(tree, ireg[IR_H1], ireg[IR_H2], ireg[IR_H3],
                 ireg[IR_LOM], ireg[IR_C4], ireg[IR_MLEN], bp, nsz, sel)

    for s in range(7):
        row = noff[s] + sel[s]
        d = 0.0
        for j in range(npt):
            d += w1[row, j] * x[j]
        pi1[s] = squash(d)
        x2[s] = clamp8(d)

    d2 = 0.0
    for s in range(7):
        d2 += w2[s] * x2[s]
    p2 = squash(d2)
    freg[FR_P2] = p2

    pf = p2
    if cfgi[CI_APM] != 0:
        pf = apm_apply(apm, ireg[IR_APMCTX], p2, freg)
    freg[FR_PFIN] = pf

    p16 = np.int64(pf * 65536.0 + 0.5)
    if p16 < 1:
        p16 = 1
    elif p16 > 65535:
        p16 = 65535
    ireg[IR_P16] = p16
    return p16


@njit(cache=True)
def update_bit(cnt, cmbk, w1, noff, w2, P, apm, x, pi1, x2, sel, pg, kg,
               ireg, freg, cfgi, cfgf, tree, bp, bit):
    """Fold the coded bit into every adaptive component."""
    npt = cfgi[CI_NP]
    y = 1.0 if bit == 1 else 0.0
    for m in range(cfgi[CI_NCM]):
        counter_update(cnt, m, cmbk[m] + tree, bit)

    eta = cfgf[CF_ETA]
    for s in range(7):
        row = noff[s] + sel[s]
        g = eta * (pi1[s] - y)
        for j in range(npt):
            w1[row, j] -= g * x[j]

    p2 = freg[FR_P2]
    if cfgi[CI_SECOND] == 0:
        g2 = eta * (p2 - y)
        for s in range(7):
            w2[s] -= g2 * x2[s]
    else:
        ekf_step(w2, P, x2, p2, y, cfgf[CF_Q], cfgf[CF_R], pg, kg)

    if cfgi[CI_APM] != 0:
        apm_update(apm, ireg[IR_APMCTX], bit, cfgi[CI_APMRATE], freg)


# --------------------------------------------------------------------------
# range coder
# --------------------------------------------------------------------------

@njit(inline="always", cache=True)
def _rc_shift_low(rc, buf):
    low = rc[RC_LOW]
    if low < 0xFF000000 or low > MASK32:
        carry = low >> 32
        if rc[RC_STARTED] != 0:
            buf[rc[RC_POS]] = (rc[RC_CACHE] + carry) & 0xFF
            rc[RC_POS] += 1
        else:
            rc[RC_STARTED] = 1
        while rc[RC_PEND] > 0:
            buf[rc[RC_POS]] = (0xFF + carry) & 0xFF
            rc[RC_POS] += 1
            rc[RC_PEND] -= 1
        rc[RC_CACHE] = (low >> 24) & 0xFF
    else:
        rc[RC_PEND] += 1
    rc[RC_LOW] = (low << 8) & MASK32


@njit(inline="always", cache=True)
def rc_encode_bit(rc, buf, p16, bit):
    """Narrow the interval by one bit under P(1) = p16 / 2**16."""
    r = rc[RC_RANGE]
    bound = (r * p16) >> 16
    if bit == 1:
        rc[RC_RANGE] = bound
    else:
        rc[RC_LOW] += bound
        rc[RC_RANGE] = r - bound
    while rc[RC_RANGE] < RC_TOP:
        _rc_shift_low(rc, buf)
        rc[RC_RANGE] = rc[RC_RANGE] << 8


@njit(cache=True)
def rc_flush(rc, buf):
    """Drain the window; emits the four bytes a decoder needs to sync."""
    for _ in range(5):
        _rc_shift_low(rc, buf)
    rc[RC_FLUSHED] = 1


@njit(inline="always", cache=True)
def rc_decode_bit(rc, buf, p16):
    """Mirror of ``rc_encode_bit``; sets RC_ERR on truncated input."""
    r = rc[RC_RANGE]
    bound = (r * p16) >> 16
    if rc[RC_CODE] < bound:
        bit = 1
        rc[RC_RANGE] = bound
    else:
        bit = 0
        rc[RC_CODE] -= bound
        rc[RC_RANGE] = r - bound
    while rc[RC_RANGE] < RC_TOP:
        if rc[RC_POS] >= buf.shape[0]:
            rc[RC_ERR] = 1
            return 0
        rc[RC_CODE] = ((rc[RC_CODE] << 8) | np.int64(buf[rc[RC_POS]])) & MASK32
        rc[RC_POS] += 1
        rc[RC_RANGE] = rc[RC_RANGE] << 8
    return bit


# --------------------------------------------------------------------------
# fused stream loops
# --------------------------------------------------------------------------

MODE_TRAIN = 0
MODE_ENCODE = 1
MODE_DECODE = 2


@njit(cache=True)
def run_block(cnt, orders, cmbk, hist, midx, seen, w1, noff, nsz, w2, P, apm,
              x, pi1, x2, sel, pg, kg, ireg, freg, cfgi, cfgf,
              data, mode, rc, rcbuf, probe, use_probe, start):
    """Process ``data[start:]`` in one of the three modes.

    Returns the index of the first unprocessed byte: ``len(data)`` when
    done, an earlier index when the encoder needs a larger output
    buffer, or the failing index with ``ireg[IR_ERR]`` set when the
    decoder ran out of payload.  In decode mode ``data`` is the output
    buffer.  ``probe`` (when ``use_probe``) records every coded
    probability at ``8 * i + bp`` for the determinism check.
    """
    n_total = data.shape[0]
    inv16 = 1.0 / 65536.0
    for i in range(start, n_total):
        if mode == MODE_ENCODE:
            if rc[RC_POS] + rc[RC_PEND] + 48 > rcbuf.shape[0]:
                return i
        begin_byte(cnt, orders, cmbk, hist, seen, ireg, cfgi)
        b = 0
        if mode != MODE_DECODE:
            b = np.int64(data[i])
        tree = np.int64(1)
        for bp in range(8):
            p16 = predict_bit(cnt, cmbk, w1, noff, nsz, w2, apm,
                              x, pi1, x2, sel, ireg, freg, cfgi, tree, bp)
            if mode == MODE_DECODE:
                bit = rc_decode_bit(rc, rcbuf, p16)
                if rc[RC_ERR] != 0:
                    ireg[IR_ERR] = 1
                    return i
            else:
                bit = (b >> (7 - bp)) & 1
                if mode == MODE_ENCODE:
                    rc_encode_bit(rc, rcbuf, p16, bit)
            if use_probe != 0:
                probe[8 * i + bp] = p16
            if bit == 1:
                freg[FR_CE] -= np.log2(p16 * inv16)
            else:
                freg[FR_CE] -= np.log2((65536 - p16) * inv16)
            update_bit(cnt, cmbk, w1, noff, w2, P, apm, x, pi1, x2, sel,
                       pg, kg, ireg, freg, cfgi, cfgf, tree, bp, bit)
            tree = (tree << 1) | bit
        if mode == MODE_DECODE:
            b = tree - 256
            data[i] = b
        end_byte(hist, midx, ireg, cfgi, b)
    return n_total


@njit(cache=True)
def byte_dist(cnt, cmbk, w1, noff, nsz, w2, apm, x, pi1, x2, sel,
              ireg, freg, cfgi, cum):
    """Fill ``cum[256:512]`` with the predicted next-byte distribution.

    Walks the 255 inner bit-tree nodes without updating any state;
    ``cum[256 + v]`` is the probability of byte value ``v``.  The caller
    must have run ``begin_byte`` for the current position.
    """
    cum[1] = 1.0
    for node in range(1, 256):
        bp = 0
        t = node
        while t > 1:
            t >>= 1
            bp += 1
        p16 = predict_bit(cnt, cmbk, w1, noff, nsz, w2, apm,
                          x, pi1, x2, sel, ireg, freg, cfgi,
                          np.int64(node), bp)
        p = p16 / 65536.0
        cum[2 * node] = cum[node] * (1.0 - p)
        cum[2 * node + 1] = cum[node] * p
