"""Parsing of model responses into intervals, and output-format checking.

The required answer syntax is ``boxed{[[start1, end1], [start2, end2], ...]}``
(``boxed{[]}`` when anomaly-free); responses often restate themselves, so the
last boxed group wins. Slightly malformed intervals are normalized
(clamp/swap/round) rather than rejected, because reward computation needs a
graded signal.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

_BOXED_RE = re.compile(r"boxed\{([^{}]*)\}")
_NUMBER_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_THINK_RE = re.compile(r"<think>.*?</think>", re.DOTALL)


class ParseError(ValueError):
    """No boxed group, or its contents are not a list of [start, end] pairs."""


@dataclass
class PredictedIntervals:
    """Interval list recovered from a response, in canonical coordinates."""

    intervals: list[tuple[int, int]]
    raw: str = ""

    def __bool__(self) -> bool:
        return bool(self.intervals)


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


def _parse_pair(body: str, pos: int) -> tuple[tuple[float, float], int]:
    if pos >= len(body) or body[pos] != "[":
        raise ParseError(f"expected '[' at position {pos}")
    pos += 1
    numbers: list[float] = []
    for i in range(2):
        while pos < len(body) and body[pos].isspace():
            pos += 1
        m = _NUMBER_RE.match(body, pos)
        if not m:
            raise ParseError(f"expected number at position {pos}")
        numbers.append(float(m.group()))
        pos = m.end()
        while pos < len(body) and body[pos].isspace():
            pos += 1
        if i == 0:
            if pos >= len(body) or body[pos] != ",":
                raise ParseError(f"expected ',' at position {pos}")
            pos += 1
    if pos >= len(body) or body[pos] != "]":
        raise ParseError(f"expected ']' at position {pos}")
    return (numbers[0], numbers[1]), pos + 1


def _parse_pair_list(content: str) -> list[tuple[float, float]]:
    s = content.strip()
    if not (s.startswith("[") and s.endswith("]")):
        raise ParseError("boxed content is not a bracketed list")
    body = s[1:-1]
    pairs: list[tuple[float, float]] = []
    pos = 0
    while True:
        while pos < len(body) and body[pos].isspace():
            pos += 1
        if pos >= len(body):
            break
        pair, pos = _parse_pair(body, pos)
        pairs.append(pair)
        while pos < len(body) and body[pos].isspace():
            pos += 1
        if pos < len(body):
            if body[pos] != ",":
                raise ParseError(f"expected ',' between pairs at position {pos}")
            pos += 1  # trailing comma tolerated
    return pairs


def parse_boxed_intervals(text: str, canonical_length: int | None = None) -> PredictedIntervals:
    """Extract the interval list from the last boxed{...} group in `text`.

    Endpoints are rounded half-away-from-zero, clamped to
    [0, canonical_length - 1] when a length is given, and reversed pairs are
    swapped. Raises ParseError when there is no boxed group or its contents
    are malformed; an empty list is a successful parse, not an error.
    """
    matches = _BOXED_RE.findall(text)
    if not matches:
        raise ParseError("no boxed{...} group found")
    pairs = _parse_pair_list(matches[-1])
    intervals: list[tuple[int, int]] = []
    for a, b in pairs:
        start, end = _round_half_away(a), _round_half_away(b)
        if canonical_length is not None:
            start = min(max(start, 0), canonical_length - 1)
            end = min(max(end, 0), canonical_length - 1)
        else:
            start = max(start, 0)
            end = max(end, 0)
        if start > end:
            start, end = end, start
        intervals.append((start, end))
    return PredictedIntervals(intervals=intervals, raw=text)


def check_format(text: str) -> int:
    """1 iff the text holds a <think>...</think> pair followed by a parseable boxed list."""
    if not isinstance(text, str):
        return 0
    matches = list(_THINK_RE.finditer(text))
    if not matches:
        return 0
    tail = text[matches[-1].end():]
    try:
        parse_boxed_intervals(tail)
    except ParseError:
        return 0
    return 1


def format_intervals(intervals: list[tuple[int, int]]) -> str:
    """Serialize intervals back to boxed syntax: the inverse of parsing."""
    if not intervals:
        return "boxed{[]}"
    inner = ", ".join(f"[{s}, {e}]" for s, e in intervals)
    return "boxed{[" + inner + "]}"
