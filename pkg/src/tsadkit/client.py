"""Remote VLM inference client and the full detect pipeline.

One window flows render -> prompt -> parse -> map -> vote; the report is a
pure function of the persisted responses, so any run can be re-scored offline
from its response log without touching the network.
"""

from __future__ import annotations

import base64
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import requests

from .evaluation import (
    DatasetSeries,
    EvalReport,
    WindowPlan,
    best_f1_over_series,
    map_intervals,
    mask_to_segments,
    slice_windows,
    vote_scores,
)
from .parsing import ParseError, parse_boxed_intervals, format_intervals
from .qa import DETECT_QUESTION
from .render import ImageArtifact, RenderSpec, render_line


class ClientError(Exception):
    """Base class for endpoint client failures."""


class CredentialError(ClientError):
    """Missing or rejected API credentials; never retried."""


class TransportError(ClientError):
    """Transient failures exhausted the retry budget."""


class ProtocolError(ClientError):
    """The endpoint answered with a body we cannot interpret."""


class PartialResultsError(ClientError):
    """Too many window failures; holds whatever was scored so far."""

    def __init__(self, message: str, failures: list[str]):
        super().__init__(message)
        self.failures = failures


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model_name: str
    api_key_env: str = ""
    temperature: float = 0.0
    max_output_tokens: int = 512
    max_retries: int = 3
    backoff_base_ms: int = 250
    max_in_flight: int = 4
    timeout_s: float = 60.0

    def validate(self) -> None:
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")


def _api_key(cfg: EndpointConfig) -> str | None:
    if not cfg.api_key_env:
        return None
    key = os.environ.get(cfg.api_key_env)
    if not key:
        raise CredentialError(f"environment variable {cfg.api_key_env} is not set")
    return key


def query_vlm(
    image: ImageArtifact,
    question: str,
    cfg: EndpointConfig,
    attempt_log: list[dict] | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """Send one chat-completions request with an inline base64 image part.

    Retries transient failures (429/5xx/timeouts) with exponential backoff;
    auth failures are raised immediately and never retried.
    """
    cfg.validate()
    key = _api_key(cfg)
    payload = {
        "model": cfg.model_name,
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_output_tokens,
        "messages": [
            {
                "role": "user",
                "content": [
                    {"type": "text", "text": question},
                    {
                        "type": "image_url",
                        "image_url": {
                            "url": "data:image/png;base64,"
                            + base64.b64encode(image.data).decode("ascii")
                        },
                    },
                ],
            }
        ],
    }
    headers = {"Content-Type": "application/json"}
    if key:
        headers["Authorization"] = f"Bearer {key}"
    url = cfg.base_url.rstrip("/") + "/chat/completions"

    last_error: Exception | None = None
    for attempt in range(cfg.max_retries + 1):
        try:
            resp = requests.post(url, json=payload, headers=headers, timeout=cfg.timeout_s)
        except requests.RequestException as exc:
            last_error = exc
            if attempt_log is not None:
                attempt_log.append({"attempt": attempt, "error": str(exc)})
        else:
            if attempt_log is not None:
                attempt_log.append({"attempt": attempt, "status": resp.status_code})
            if resp.status_code in (401, 403):
                raise CredentialError(f"endpoint rejected credentials (HTTP {resp.status_code})")
            if resp.status_code == 200:
                try:
                    body = resp.json()
                    content = body["choices"][0]["message"]["content"]
                except (ValueError, KeyError, IndexError, TypeError) as exc:
                    raise ProtocolError(f"malformed response body: {exc}") from exc
                if not isinstance(content, str):
                    raise ProtocolError("response content is not text")
                return content
            if resp.status_code not in (429,) and resp.status_code < 500:
                raise ProtocolError(f"unexpected HTTP {resp.status_code}: {resp.text[:200]}")
            last_error = RuntimeError(f"HTTP {resp.status_code}")
        if attempt < cfg.max_retries:
            sleep(cfg.backoff_base_ms / 1000.0 * (2 ** attempt))
    raise TransportError(f"retries exhausted after {cfg.max_retries + 1} attempts: {last_error}")


@dataclass
class EvalWindow:
    """Context handed to a responder test double for one window."""

    series_id: str
    offset: int
    values: np.ndarray
    labels: np.ndarray
    canonical_length: int
    image: ImageArtifact

    @property
    def window_id(self) -> str:
        return f"{self.series_id}:{self.offset}"


Responder = Callable[[EvalWindow], str]


def oracle_responder(window: EvalWindow) -> str:
    """Test double that answers perfectly from the window's ground truth."""
    segments = mask_to_segments(window.labels)
    factor = window.canonical_length / len(window.values)
    canonical = map_intervals(segments, factor, "to-canonical")
    return "Final Answer: " + format_intervals(canonical)


def empty_responder(window: EvalWindow) -> str:
    """Test double that never reports an anomaly."""
    return "Final Answer: boxed{[]}"


def load_response_log(path: str | Path) -> dict[str, str]:
    """Read a persisted response log into {window_id: response}."""
    responses: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rec = json.loads(line)
                responses[rec["window_id"]] = rec["response"]
    return responses


def eval_dataset(
    dataset: list[DatasetSeries],
    plan: WindowPlan,
    cfg: EndpointConfig | None = None,
    render_spec: RenderSpec = RenderSpec(),
    *,
    responder: Responder | None = None,
    replay: dict[str, str] | None = None,
    log_path: str | Path | None = None,
    failure_budget: float = 0.01,
) -> EvalReport:
    """Run the detect pipeline over a windowed dataset and score it.

    Exactly one of cfg (live endpoint), responder (in-process double), or
    replay (persisted responses) supplies the answers. Every raw response is
    persisted to log_path before scoring when given.
    """
    if not dataset:
        raise ValueError("dataset is empty")
    plan.validate()
    sources = sum(x is not None for x in (cfg, responder, replay))
    if sources != 1:
        raise ValueError("provide exactly one of cfg, responder, or replay")

    canonical = plan.canonical
    window_spec = RenderSpec(
        canonical_length=canonical,
        image_width=render_spec.image_width,
        image_height=render_spec.image_height,
        style="line",
        stft_window=render_spec.stft_window,
        stft_hop=render_spec.stft_hop,
    )

    windows: list[EvalWindow] = []
    for series in dataset:
        for values, labels, offset in slice_windows(series.values, series.labels, plan):
            image = render_line(values, window_spec)  # render_line z-scores internally
            windows.append(EvalWindow(
                series_id=series.series_id,
                offset=offset,
                values=values,
                labels=labels,
                canonical_length=canonical,
                image=image,
            ))

    responses: dict[str, str | None] = {}
    latencies: dict[str, int] = {}
    failures: list[str] = []
    if replay is not None:
        for w in windows:
            responses[w.window_id] = replay.get(w.window_id)
            if responses[w.window_id] is None:
                failures.append(w.window_id)
    elif responder is not None:
        for w in windows:
            responses[w.window_id] = responder(w)
    else:
        lock = threading.Lock()

        def ask(w: EvalWindow) -> None:
            started = time.perf_counter()
            try:
                text = query_vlm(w.image, DETECT_QUESTION, cfg)
            except ClientError as exc:
                with lock:
                    failures.append(w.window_id)
                    responses[w.window_id] = None
                if isinstance(exc, CredentialError):
                    raise
                return
            with lock:
                responses[w.window_id] = text
                latencies[w.window_id] = int((time.perf_counter() - started) * 1000)

        with ThreadPoolExecutor(max_workers=cfg.max_in_flight) as pool:
            list(pool.map(ask, windows))

    if log_path is not None:
        with open(log_path, "w", encoding="utf-8") as fh:
            for w in windows:
                text = responses.get(w.window_id)
                if text is not None:
                    fh.write(json.dumps({
                        "window_id": w.window_id,
                        "offset": w.offset,
                        "response": text,
                        "latency_ms": latencies.get(w.window_id, 0),
                    }) + "\n")

    # Scoring is a pure function of the persisted responses from here on.
    per_series: dict[str, list[tuple[int, list[tuple[int, int]]]]] = {}
    for w in windows:
        text = responses.get(w.window_id)
        if text is None:
            continue
        try:
            predicted = parse_boxed_intervals(text, w.canonical_length)
        except ParseError:
            failures.append(w.window_id)
            continue
        factor = w.canonical_length / len(w.values)
        original = map_intervals(predicted.intervals, factor, "to-original")
        clipped = [
            (w.offset + min(s, len(w.values) - 1), w.offset + min(e, len(w.values) - 1))
            for s, e in original
        ]
        per_series.setdefault(w.series_id, []).append((w.offset, clipped))

    if len(failures) > failure_budget * len(windows):
        raise PartialResultsError(
            f"{len(failures)}/{len(windows)} windows failed (budget {failure_budget:.0%})",
            failures,
        )

    pairs = []
    for series in dataset:
        predictions = per_series.get(series.series_id, [])
        scores = vote_scores(predictions, len(series.values), window=plan.window)
        pairs.append((scores, series.labels))
    report = best_f1_over_series(pairs)
    report.n_windows = len(windows)

    kinds = {s.kind for s in dataset if s.kind}
    for kind in sorted(kinds):
        subset = [pair for pair, series in zip(pairs, dataset) if series.kind == kind]
        sub = best_f1_over_series(subset)
        report.per_kind[kind] = {"precision": sub.precision, "recall": sub.recall, "f1": sub.f1}
    return report
