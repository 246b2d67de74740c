"""Bit counters, hashed context tables, and the match model."""

import numpy as np
import pytest

from cmx.cmodels import (
    BitCounter,
    ContextModel,
    MatchModel,
    context_hash,
    sparse_hash,
)
from cmx.errors import InvalidInputError


class TestBitCounter:
    def test_fresh_counter_is_uniform(self):
        assert BitCounter().p() == 0.5

    def test_additive_half_smoothing(self):
        c = BitCounter()
        for _ in range(10):
            c.update(1)
        assert c.p() == pytest.approx(10.5 / 11)

    def test_mixed_counts(self):
        c = BitCounter(n0=3, n1=1)
        assert c.p() == pytest.approx(1.5 / 5)

    def test_saturation_halves_both_then_increments(self):
        c = BitCounter(n0=255, n1=3)
        c.update(0)
        assert (c.n0, c.n1) == (128, 1)
        c = BitCounter(n0=3, n1=255)
        c.update(1)
        assert (c.n0, c.n1) == (1, 128)

    def test_saturation_only_on_the_full_side(self):
        c = BitCounter(n0=255, n1=3)
        c.update(1)  # the 1-side is not full: ordinary increment
        assert (c.n0, c.n1) == (255, 4)

    def test_counts_never_exceed_cap(self):
        c = BitCounter()
        for _ in range(10_000):
            c.update(1)
        assert 0 <= c.n0 <= 255
        assert 0 <= c.n1 <= 255
        assert c.p() > 0.99

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            BitCounter(n0=256)
        with pytest.raises(InvalidInputError):
            BitCounter().update(2)


class TestContextHash:
    def test_deterministic(self):
        assert context_hash(b"hello", 3) == context_hash(b"hello", 3)

    def test_depends_on_tail_only(self):
        assert context_hash(b"xxhello", 3) == context_hash(b"yyhello", 3)
        assert context_hash(b"hello", 3) != context_hash(b"hellp", 3)

    def test_orders_disjoint(self):
        h = b"abcdef"
        values = {context_hash(h, k) for k in range(1, 9)}
        assert len(values) == 8

    def test_short_history_is_length_marked(self):
        # an empty history must hash differently at different orders
        assert context_hash(b"", 2) != context_hash(b"", 3)
        assert context_hash(b"a", 4) != context_hash(b"", 4)

    def test_range(self):
        for order in (1, 8, 64):
            v = context_hash(b"some history", order)
            assert 0 <= v <= 0x7FFFFFFFFFFF

    def test_sparse_uses_offsets_one_and_three(self):
        # the most recent byte and the third most recent decide the
        # hash; the bytes between and before them must not
        a = sparse_hash(bytes([9, 5, 7, 3, 8]))
        same = sparse_hash(bytes([1, 2, 7, 4, 8]))  # offsets 2, 4, 5 differ
        diff = sparse_hash(bytes([9, 5, 7, 3, 0]))  # offset 1 differs
        assert a == same
        assert a != diff

    def test_order_validation(self):
        with pytest.raises(InvalidInputError):
            context_hash(b"x", 0)
        with pytest.raises(InvalidInputError):
            context_hash(b"x", 65)


class TestContextModel:
    def test_fresh_prediction_is_half(self):
        m = ContextModel(order=2, table_log2=12)
        assert m.predict(12345, 1) == 0.5

    def test_learns_per_cell(self):
        m = ContextModel(order=2, table_log2=12)
        h = m.hash_for(b"ab")
        for _ in range(20):
            m.update(h, 1, 1)
        assert m.predict(h, 1) == pytest.approx(20.5 / 21)
        assert m.predict(h, 2) == 0.5  # sibling tree node untouched

    def test_distinct_contexts_usually_distinct_cells(self):
        m = ContextModel(order=3, table_log2=16)
        h1 = m.hash_for(b"abc")
        h2 = m.hash_for(b"abd")
        for _ in range(30):
            m.update(h1, 1, 1)
        assert m.predict(h2, 1) == 0.5

    def test_collision_shares_counters(self):
        m = ContextModel(order=1, table_log2=12)
        mask = m._mask
        h1, h2 = 5, 5 + (mask + 1)  # same bucket by construction
        m.update(h1, 7, 1)
        assert m.predict(h2, 7) == pytest.approx(1.5 / 2)

    def test_validation(self):
        m = ContextModel(order=1, table_log2=12)
        with pytest.raises(InvalidInputError):
            m.predict(0, 0)
        with pytest.raises(InvalidInputError):
            m.predict(0, 256)
        with pytest.raises(InvalidInputError):
            ContextModel(order=0)
        with pytest.raises(InvalidInputError):
            ContextModel(order=1, table_log2=8)


def _feed(m: MatchModel, data: bytes) -> None:
    for b in data:
        m.update(b)


class TestMatchModel:
    def test_no_match_initially(self):
        m = MatchModel()
        assert m.match_len == 0
        assert m.predicted_byte is None
        p, mlen = m.predict(1, 0)
        assert p == 0.5
        assert mlen == 0

    def test_abracadabra_match(self):
        # after "abracadabra" the tail "abra" matches the head: length 4,
        # and the byte after the earlier occurrence is "c"
        m = MatchModel()
        _feed(m, b"abracadabra")
        assert m.match_len == 4
        assert m.predicted_byte == ord("c")

    def test_match_votes_towards_predicted_bits(self):
        m = MatchModel()
        _feed(m, b"abracadabra")
        # 'c' = 0x63 starts with bit 0: strong vote for 0 at the root
        p, mlen = m.predict(1, 0)
        assert mlen == 4
        assert p < 0.1
        # after a 0 bit (tree=2), next bit of 'c' is 1: vote for 1
        p, _ = m.predict(2, 1)
        assert p > 0.9

    def test_match_goes_neutral_once_contradicted(self):
        m = MatchModel()
        _feed(m, b"abracadabra")
        # pretend the first coded bit was 1 (tree=3): 'c' is ruled out
        p, _ = m.predict(3, 1)
        assert p == 0.5

    def test_match_extends_on_confirmation(self):
        m = MatchModel()
        _feed(m, b"abcabc")
        # the tail "abc" verifies backward against the head: length 3
        assert m.match_len == 3
        assert m.predicted_byte == ord("a")
        _feed(m, b"abc")  # every byte confirms, extending by one each
        assert m.match_len == 6

    def test_match_dies_and_reseeds(self):
        m = MatchModel()
        _feed(m, b"abcabcX")
        assert m.match_len == 0
        _feed(m, b"bc")
        assert m.match_len >= 1

    def test_periodic_text_match_grows_to_period_multiple(self):
        m = MatchModel()
        _feed(m, b"the cat. " * 40)
        assert m.match_len > 300

    def test_confidence_grows_with_length(self):
        m1, m2 = MatchModel(), MatchModel()
        _feed(m1, b"xyxy")  # short match
        _feed(m2, b"xy" * 40)  # long match
        p_short, _ = m1.predict(1, 0)
        p_long, _ = m2.predict(1, 0)
        # 'x' = 0x78 starts with a 0 bit: both vote low, longer stronger
        assert p_long < p_short < 0.5

    def test_backward_verification_needs_two_bytes(self):
        m = MatchModel(back=64)
        _feed(m, b"qa")
        assert m.match_len == 0  # nothing earlier to verify against
        _feed(m, b"qa")
        assert m.match_len >= 1

    def test_history_growth_beyond_initial_buffer(self):
        m = MatchModel()
        _feed(m, bytes(range(256)) * 20)  # 5120 bytes > initial 4096
        assert m.match_len > 0
        assert m.predicted_byte is not None

    def test_cap_limits_match_length(self):
        m = MatchModel(cap=10)
        _feed(m, b"ab" * 30)
        assert m.match_len <= 10

    def test_validation(self):
        m = MatchModel()
        with pytest.raises(InvalidInputError):
            m.update(256)
        with pytest.raises(InvalidInputError):
            m.predict(0, 0)
        with pytest.raises(InvalidInputError):
            m.predict(2, 0)  # tree inconsistent with bit position
        with pytest.raises(InvalidInputError):
            MatchModel(cap=1)
        with pytest.raises(InvalidInputError):
            MatchModel(back=1)
