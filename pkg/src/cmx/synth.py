"""Seeded synthetic corpora for benchmarks and experiments.

Everything here is a pure function of its seed, so benchmark numbers
and classification datasets are reproducible across runs and machines.
The staple generator is an order-2 Markov chain over a small text
alphabet: each (previous, current) symbol pair gets a sparse, heavily
skewed successor distribution drawn once from the seed.  Different
seeds give statistically very different languages, which is what the
classification and distance experiments need.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "class_corpus",
    "markov2_text",
    "mixed_corpus",
]

ALPHABET = b"abcdefghijklmnopqrstuvwxyz ., \n"


class _Markov2:
    """Order-2 chain with ~4 likely successors per state."""

    def __init__(self, seed: int, branching: int = 4) -> None:
        rng = np.random.default_rng(seed)
        a = len(ALPHABET)
        n_states = a * a
        succ = np.zeros((n_states, branching), dtype=np.int64)
        cum = np.zeros((n_states, branching), dtype=np.float64)
        for s in range(n_states):
            succ[s] = rng.choice(a, size=branching, replace=False)
            w = rng.dirichlet(np.full(branching, 0.35))
            cum[s] = np.cumsum(w)
        cum[:, -1] = 1.0
        self.a = a
        self.succ = succ
        self.cum = cum
        self.rng = rng

    def walk(self, n: int) -> bytes:
        a = self.a
        u = self.rng.random(n)
        out = np.zeros(n, dtype=np.uint8)
        alpha = np.frombuffer(ALPHABET, dtype=np.uint8)
        c1 = int(self.rng.integers(a))
        c2 = int(self.rng.integers(a))
        succ, cum = self.succ, self.cum
        for i in range(n):
            s = c1 * a + c2
            j = int(np.searchsorted(cum[s], u[i], side="right"))
            if j >= succ.shape[1]:
                j = succ.shape[1] - 1
            nxt = int(succ[s, j])
            out[i] = alpha[nxt]
            c1, c2 = c2, nxt
        return out.tobytes()


def markov2_text(n: int, seed: int = 0) -> bytes:
    """``n`` bytes of order-2 Markov text; one language per seed."""
    if n < 0:
        raise InvalidInputError("length must be nonnegative")
    if n == 0:
        return b""
    return _Markov2(seed).walk(n)


def class_corpus(
    n_classes: int,
    train_docs: int,
    test_docs: int,
    doc_len: int,
    seed: int = 0,
) -> list[tuple[list[bytes], list[bytes]]]:
    """Per-class (train, test) documents from ``n_classes`` languages.

    Class ``i`` uses its own chain seeded by ``seed * 1000 + i``; every
    document is an independent walk of that chain.
    """
    if n_classes < 2:
        raise InvalidInputError("need at least two classes")
    out = []
    for i in range(n_classes):
        chain = _Markov2(seed * 1000 + i)
        train = [chain.walk(doc_len) for _ in range(train_docs)]
        test = [chain.walk(doc_len) for _ in range(test_docs)]
        out.append((train, test))
    return out


def mixed_corpus(n: int, seed: int = 0) -> bytes:
    """``n`` bytes mixing Markov text, repeated phrases and noise.

    Built from chunks of three unrelated chains, a periodic phrase and
    a slice of uniform noise, shuffled deterministically — a stand-in
    for a directory of assorted files.
    """
    if n < 0:
        raise InvalidInputError("length must be nonnegative")
    if n == 0:
        return b""
    rng = np.random.default_rng(seed + 777)
    chunk = max(1, n // 16)
    parts: list[bytes] = []
    chains = [_Markov2(seed * 7 + j) for j in range(3)]
    phrase = b"all work and no play makes a dull repository. "
    kinds = []
    for j in range(3):
        kinds += [("chain", j)] * 4
    kinds += [("phrase", 0)] * 3 + [("noise", 0)]
    order = rng.permutation(len(kinds))
    for idx in order:
        kind, j = kinds[int(idx)]
        if kind == "chain":
            parts.append(chains[j].walk(chunk))
        elif kind == "phrase":
            reps = chunk // len(phrase) + 1
            parts.append((phrase * reps)[:chunk])
        else:
            parts.append(rng.integers(0, 256, chunk, dtype=np.uint8).tobytes())
    return b"".join(parts)[:n].ljust(n, b" ")
