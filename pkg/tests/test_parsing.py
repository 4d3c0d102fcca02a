"""Parser tests: boxed interval extraction, format checking, and robustness."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsadkit.parsing import (
    ParseError,
    check_format,
    format_intervals,
    parse_boxed_intervals,
)


class TestParseBoxedIntervals:
    def test_empty_list(self):
        assert parse_boxed_intervals("Final Answer: boxed{[]}", 200).intervals == []

    def test_direct_form(self):
        out = parse_boxed_intervals("boxed{[[10, 20], [50, 60]]}", 200)
        assert out.intervals == [(10, 20), (50, 60)]

    def test_reversed_pair_swapped(self):
        out = parse_boxed_intervals("...think... boxed{[[20,10]]}", 200)
        assert out.intervals == [(10, 20)]
        # reparsing the normalized serialization is a fixed point
        again = parse_boxed_intervals(format_intervals(out.intervals), 200)
        assert again.intervals == out.intervals

    def test_last_boxed_group_wins(self):
        text = "first boxed{[[1, 2]]} then corrected: boxed{[[7, 9]]}"
        assert parse_boxed_intervals(text, 200).intervals == [(7, 9)]

    def test_clamped_to_canonical_range(self):
        out = parse_boxed_intervals("boxed{[[-5, 250]]}", 200)
        assert out.intervals == [(0, 199)]

    def test_fractional_endpoints_rounded_half_away(self):
        out = parse_boxed_intervals("boxed{[[10.5, 20.4]]}", 200)
        assert out.intervals == [(11, 20)]

    def test_trailing_comma_and_whitespace_tolerated(self):
        out = parse_boxed_intervals("boxed{[ [1 , 2] , [3, 4] , ]}", 200)
        assert out.intervals == [(1, 2), (3, 4)]

    def test_no_boxed_group_is_a_parse_error(self):
        with pytest.raises(ParseError):
            parse_boxed_intervals("there is no anomaly", 200)

    @pytest.mark.parametrize("bad", [
        "boxed{[1, 2]}",            # pair not nested
        "boxed{[[1, 2, 3]]}",       # 3-element list
        "boxed{[[1]]}",             # 1-element list
        "boxed{[[a, b]]}",          # not numeric
        "boxed{[[1, 2] [3, 4]]}",   # missing comma
        "boxed{hello}",
    ])
    def test_malformed_lists_are_parse_errors(self, bad):
        with pytest.raises(ParseError):
            parse_boxed_intervals(bad, 200)

    def test_without_canonical_length_only_floor_clamp(self):
        out = parse_boxed_intervals("boxed{[[-3, 900]]}", None)
        assert out.intervals == [(0, 900)]


class TestCheckFormat:
    def test_think_pair_followed_by_boxed(self):
        assert check_format("<think>reasoning</think> boxed{[[1,2]]}") == 1

    def test_missing_think_tags(self):
        assert check_format("boxed{[[1,2]]}") == 0

    def test_think_without_boxed(self):
        assert check_format("<think>hmm</think> no boxed group") == 0

    def test_empty_prediction_still_valid_format(self):
        assert check_format("<think>clean window</think> Final Answer: boxed{[]}") == 1

    def test_format_one_implies_parse_success(self):
        texts = [
            "<think>a</think> boxed{[]}",
            "<think>a</think>boxed{[[5, 6]]}",
            "<think>a</think> nothing",
            "boxed{[[1, 2]]}",
            "<think>unclosed boxed{[[1, 2]]}",
        ]
        for text in texts:
            if check_format(text) == 1:
                parse_boxed_intervals(text)  # must not raise


class TestRoundTrip:
    @given(st.lists(st.tuples(st.integers(0, 198), st.integers(0, 198)), max_size=6))
    def test_serialize_parse_fixed_point(self, pairs):
        normalized = [(min(a, b), max(a, b)) for a, b in pairs]
        text = format_intervals(normalized)
        assert parse_boxed_intervals(text, 199 + 1).intervals == normalized

    @given(st.text(max_size=300))
    @settings(max_examples=500)
    def test_never_crashes_on_arbitrary_text(self, text):
        try:
            out = parse_boxed_intervals(text, 200)
        except ParseError:
            return
        reparsed = parse_boxed_intervals(format_intervals(out.intervals), 200)
        assert reparsed.intervals == out.intervals

    @given(st.binary(max_size=200))
    @settings(max_examples=300)
    def test_never_crashes_on_bytes_decoded(self, blob):
        text = blob.decode("utf-8", errors="replace")
        try:
            parse_boxed_intervals(text, 200)
        except ParseError:
            pass
        check_format(text)
