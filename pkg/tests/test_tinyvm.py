"""Machine semantics, the self-delimiting code, and the prefix syntax."""

import pytest
from hypothesis import given, settings, strategies as st

from beaverlab.tinyvm import (
    Opcode,
    decode_plain,
    elias_decode,
    elias_encode,
    enumerate_prefix_syntax,
    run_plain,
    run_prefix,
)
from beaverlab.core import Dyadic

bits = st.text(alphabet="01", max_size=24)


class TestDecode:
    def test_halt_program(self):
        image = decode_plain("1111")
        assert image.ops == (Opcode.HALT,)

    def test_no_header_terminator(self):
        assert decode_plain("0000") is None
        assert decode_plain("") is None

    def test_leftover_bits_ignored(self):
        image = decode_plain("1000110")
        assert image.ops == (Opcode.INC, Opcode.DOUBLE)

    def test_unbalanced_brackets(self):
        assert decode_plain("1100") is None  # lone LOOPSTART
        assert decode_plain("1101") is None  # lone LOOPEND

    def test_header_absorbs_zeros(self):
        assert decode_plain("0001000").ops == (Opcode.INC,)


class TestRunPlain:
    def test_immediate_halt(self):
        out = run_plain("1111", 8)
        assert (out.kind, out.output, out.steps) == ("halt", 0, 1)

    def test_inc_double(self):
        out = run_plain("1000110", 8)
        assert (out.kind, out.output, out.steps) == ("halt", 2, 2)

    def test_infinite_loop_hits_budget(self):
        assert run_plain("1000100101", 16).kind == "steplimit"

    def test_invalid(self):
        assert run_plain("0000", 8).kind == "invalid"

    def test_off_end_halt_costs_nothing(self):
        out = run_plain("1", 4)
        assert (out.kind, out.output, out.steps) == ("halt", 0, 0)

    def test_halt_exactly_at_budget(self):
        assert run_plain("1111", 1).kind == "halt"
        out = run_plain("1000110", 2)
        assert out.kind == "halt" and out.steps == 2
        assert run_plain("1000110", 1).kind == "steplimit"

    @given(bits, st.integers(min_value=0, max_value=6))
    @settings(deadline=None)
    def test_header_transparency(self, p, pad):
        if decode_plain(p) is None:
            return
        assert run_plain("0" * pad + p, 64) == run_plain(p, 64)

    @given(bits, st.integers(min_value=1, max_value=64), st.integers(1, 64))
    @settings(deadline=None)
    def test_halt_stable_under_bigger_budget(self, p, t, extra):
        first = run_plain(p, t)
        if first.kind == "halt":
            assert run_plain(p, t + extra) == first

    @given(bits, st.integers(min_value=1, max_value=64))
    @settings(deadline=None)
    def test_deterministic(self, p, t):
        assert run_plain(p, t) == run_plain(p, t)


class TestElias:
    @pytest.mark.parametrize(
        "value,code", [(0, "1"), (1, "010"), (2, "011"), (4, "00101")]
    )
    def test_encode(self, value, code):
        assert elias_encode(value) == code

    @pytest.mark.parametrize(
        "text,expect", [("1", (0, 1)), ("0101", (1, 3)), ("01", None), ("000", None)]
    )
    def test_decode(self, text, expect):
        assert elias_decode(text) == expect

    @given(st.integers(min_value=0, max_value=10**6), st.text(alphabet="01", max_size=8))
    @settings(deadline=None)
    def test_roundtrip_with_suffix(self, value, suffix):
        code = elias_encode(value)
        assert elias_decode(code + suffix) == (value, len(code))


class TestRunPrefix:
    def test_empty_body_is_invalid_plain(self):
        assert run_prefix("1", 8).kind == "invalid"

    def test_minimal_halting(self):
        out = run_prefix("0101", 4)
        assert (out.kind, out.output, out.steps) == ("halt", 0, 0)

    def test_trailing_bits_rejected(self):
        assert run_prefix("010111", 8).kind == "invalid"

    def test_short_body_rejected(self):
        assert run_prefix("010", 8).kind == "invalid"


class TestPrefixSyntax:
    def test_smallest(self):
        assert list(enumerate_prefix_syntax(1)) == ["1"]

    def test_length_three_has_no_new_forms(self):
        # E(1) = "010" needs a 1-symbol body, total 4; only E(0) fits
        assert list(enumerate_prefix_syntax(3)) == ["1"]

    def test_length_four(self):
        words = list(enumerate_prefix_syntax(4))
        assert words == ["1", "0100", "0101"]

    def test_requires_positive_length(self):
        with pytest.raises(ValueError):
            list(enumerate_prefix_syntax(0))

    @pytest.mark.parametrize("max_len", range(1, 17))
    def test_prefix_free(self, max_len):
        words = list(enumerate_prefix_syntax(max_len))
        assert len(set(words)) == len(words)
        ordered = sorted(words)
        for a, b in zip(ordered, ordered[1:]):
            assert not b.startswith(a)

    @pytest.mark.parametrize("max_len", range(1, 17))
    def test_kraft_bound(self, max_len):
        total = Dyadic.zero()
        for w in enumerate_prefix_syntax(max_len):
            total = total + Dyadic.pow2(-len(w))
        assert total <= Dyadic.one()

    def test_sorted_by_length_then_lex(self):
        words = list(enumerate_prefix_syntax(12))
        assert words == sorted(words, key=lambda w: (len(w), w))
