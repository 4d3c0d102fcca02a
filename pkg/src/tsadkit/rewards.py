"""Verifiable reward for anomaly-detection responses.

reward = 0.9 * f1_reward + 0.1 * format_reward. On anomaly-free windows the
F1 part is replaced by +0.5 / -0.5 for empty / non-empty predictions (the
negative-reward term suppresses false positives); disabling it reverts those
cases to the plain F1 of 0. The F1 here is point-level without point
adjustment: adjustment is a dataset-level evaluation convention and would
leak full credit for one-point hits during RL.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .parsing import ParseError, PredictedIntervals, check_format, parse_boxed_intervals


@dataclass(frozen=True)
class RewardConfig:
    w_f1: float = 0.9
    w_format: float = 0.1
    empty_correct: float = 0.5
    empty_wrong: float = -0.5
    negative_reward_enabled: bool = True
    f1_mode: str = "point-level"

    def validate(self) -> None:
        if abs(self.w_f1 + self.w_format - 1.0) > 1e-9:
            raise ValueError("w_f1 + w_format must equal 1")
        if self.negative_reward_enabled and not (self.empty_correct > 0 >= self.empty_wrong):
            raise ValueError("need empty_correct > 0 >= empty_wrong when negative reward is enabled")
        if self.f1_mode != "point-level":
            raise ValueError(f"unsupported f1_mode {self.f1_mode!r}")


def _as_interval_list(pred) -> list[tuple[int, int]]:
    if isinstance(pred, PredictedIntervals):
        return pred.intervals
    return [(int(s), int(e)) for s, e in pred]


def _point_mask(intervals: list[tuple[int, int]], window_len: int) -> np.ndarray:
    mask = np.zeros(window_len, dtype=bool)
    for s, e in intervals:
        if not (0 <= s <= e < window_len):
            raise ValueError(f"interval ({s}, {e}) out of range for window {window_len}")
        mask[s:e + 1] = True
    return mask


def interval_f1(pred, real: list[tuple[int, int]], window_len: int) -> float:
    """Point-membership F1 of predicted vs real intervals over one window."""
    if not real:
        raise ValueError("interval_f1 requires non-empty ground truth")
    pred_intervals = _as_interval_list(pred)
    if not pred_intervals:
        return 0.0
    pred_mask = _point_mask(pred_intervals, window_len)
    real_mask = _point_mask(real, window_len)
    tp = float(np.sum(pred_mask & real_mask))
    if tp == 0:
        return 0.0
    precision = tp / float(np.sum(pred_mask))
    recall = tp / float(np.sum(real_mask))
    return 2.0 * precision * recall / (precision + recall)


def f1_reward(
    pred: PredictedIntervals | list[tuple[int, int]] | None,
    real: list[tuple[int, int]],
    window_len: int,
    cfg: RewardConfig = RewardConfig(),
) -> float:
    """F1 part of the reward; `pred is None` means the response failed to parse."""
    cfg.validate()
    if not real:
        if not cfg.negative_reward_enabled:
            return 0.0
        # A parse failure counts as a wrong non-empty prediction.
        if pred is None or _as_interval_list(pred):
            return cfg.empty_wrong
        return cfg.empty_correct
    if pred is None:
        return 0.0
    return interval_f1(pred, real, window_len)


def combined_reward(
    text: str,
    real: list[tuple[int, int]],
    window_len: int,
    cfg: RewardConfig = RewardConfig(),
) -> float:
    """Full reward for a raw response text against ground truth."""
    return reward_components(text, real, window_len, cfg)["reward"]


def reward_components(
    text: str,
    real: list[tuple[int, int]],
    window_len: int,
    cfg: RewardConfig = RewardConfig(),
) -> dict[str, float]:
    """All three reward terms for one response; the batch-mode record shape."""
    cfg.validate()
    try:
        pred = parse_boxed_intervals(text, window_len)
    except ParseError:
        pred = None
    f1_part = f1_reward(pred, real, window_len, cfg)
    format_part = float(check_format(text))
    return {
        "reward": cfg.w_f1 * f1_part + cfg.w_format * format_part,
        "f1_reward": f1_part,
        "format_reward": format_part,
    }


def score_jsonl(lines: Iterable[str], cfg: RewardConfig = RewardConfig()) -> Iterator[dict]:
    """Batch scorer over JSONL records {response, intervals, window_len}.

    Malformed lines are scored as parse errors (empty-window semantics apply)
    and flagged, so a bad rollout never aborts the batch.
    """
    cfg.validate()
    for line in lines:
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
            response = rec["response"]
            real = [(int(s), int(e)) for s, e in rec["intervals"]]
            window_len = int(rec["window_len"])
            yield reward_components(response, real, window_len, cfg)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            f1_part = f1_reward(None, [], 0, cfg)
            yield {
                "reward": cfg.w_f1 * f1_part,
                "f1_reward": f1_part,
                "format_reward": 0.0,
                "error": "malformed input line",
            }
