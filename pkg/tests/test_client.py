"""Client tests: retry/backoff against a scripted stub server, test doubles,
replay determinism, and the full oracle pipeline."""

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from tsadkit.client import (
    CredentialError,
    EndpointConfig,
    PartialResultsError,
    TransportError,
    empty_responder,
    eval_dataset,
    load_response_log,
    oracle_responder,
    query_vlm,
)
from tsadkit.config import GenerationConfig
from tsadkit.evaluation import DatasetSeries, WindowPlan
from tsadkit.generate import compose_series
from tsadkit.render import RenderSpec, render_line


class _ScriptedHandler(BaseHTTPRequestHandler):
    """Replays a scripted list of (status, content) responses in order."""

    script = []
    calls = []

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length)) if length else {}
        type(self).calls.append(body)
        status, content = self.script[min(len(type(self).calls) - 1, len(self.script) - 1)]
        payload = json.dumps({"choices": [{"message": {"content": content}}]})
        if status != 200:
            payload = json.dumps({"error": "scripted failure"})
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload.encode())

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    handler = type("Handler", (_ScriptedHandler,), {"script": [(200, "boxed{[]}")], "calls": []})
    server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield handler, f"http://127.0.0.1:{server.server_address[1]}/v1"
    server.shutdown()


def _image():
    return render_line(np.sin(np.arange(200) / 9.0), RenderSpec())


def _cfg(url, **kw):
    return EndpointConfig(base_url=url, model_name="test-model", **kw)


class TestQueryVlm:
    def test_echo_loopback(self, stub_server):
        handler, url = stub_server
        handler.script = [(200, "boxed{[]}")]
        assert query_vlm(_image(), "any question?", _cfg(url)) == "boxed{[]}"
        sent = handler.calls[0]
        parts = sent["messages"][0]["content"]
        assert parts[0]["type"] == "text"
        assert parts[1]["image_url"]["url"].startswith("data:image/png;base64,")

    def test_retries_through_429_with_attempt_log(self, stub_server):
        handler, url = stub_server
        handler.script = [(429, ""), (429, ""), (200, "boxed{[[1, 2]]}")]
        log = []
        out = query_vlm(_image(), "q", _cfg(url), attempt_log=log, sleep=lambda s: None)
        assert out == "boxed{[[1, 2]]}"
        assert len(log) == 3

    def test_exhausted_retries_raise_transport_error(self, stub_server):
        handler, url = stub_server
        handler.script = [(503, "")]
        with pytest.raises(TransportError):
            query_vlm(_image(), "q", _cfg(url, max_retries=2), sleep=lambda s: None)
        assert len(handler.calls) == 3

    def test_missing_key_env_fails_before_network(self, stub_server, monkeypatch):
        handler, url = stub_server
        monkeypatch.delenv("TSADKIT_TEST_KEY", raising=False)
        with pytest.raises(CredentialError):
            query_vlm(_image(), "q", _cfg(url, api_key_env="TSADKIT_TEST_KEY"))
        assert handler.calls == []

    def test_auth_rejection_not_retried(self, stub_server):
        handler, url = stub_server
        handler.script = [(401, "")]
        with pytest.raises(CredentialError):
            query_vlm(_image(), "q", _cfg(url), sleep=lambda s: None)
        assert len(handler.calls) == 1

    def test_key_sent_as_bearer(self, stub_server, monkeypatch):
        handler, url = stub_server
        handler.script = [(200, "ok boxed{[]}")]
        monkeypatch.setenv("TSADKIT_TEST_KEY", "sk-123")
        query_vlm(_image(), "q", _cfg(url, api_key_env="TSADKIT_TEST_KEY"))


def synthetic_eval_dataset(n_series=4, length=400, seed=33):
    """Series built from the generator with per-point labels."""
    cfg = GenerationConfig(ts_length=length, anomaly_free_prob=0.25)
    out = []
    for i in range(n_series):
        _, labeled = compose_series(seed, i, cfg)
        kind = labeled.intervals[0].kind if labeled.intervals else "none"
        out.append(DatasetSeries(series_id=f"s{i}", values=labeled.values,
                                 labels=labeled.label_mask(), kind=kind))
    return out


class TestConcurrencyBound:
    def test_at_most_max_in_flight_requests(self):
        import time as _time

        lock = threading.Lock()
        state = {"active": 0, "peak": 0}

        class CountingHandler(_ScriptedHandler):
            script = [(200, "Final Answer: boxed{[]}")]
            calls = []

            def do_POST(self):
                with lock:
                    state["active"] += 1
                    state["peak"] = max(state["peak"], state["active"])
                _time.sleep(0.05)
                try:
                    super().do_POST()
                finally:
                    with lock:
                        state["active"] -= 1

        server = ThreadingHTTPServer(("127.0.0.1", 0), CountingHandler)
        threading.Thread(target=server.serve_forever, daemon=True).start()
        try:
            url = f"http://127.0.0.1:{server.server_address[1]}/v1"
            dataset = synthetic_eval_dataset(n_series=3, length=600)  # 9 windows
            plan = WindowPlan(window=200, step=200)
            eval_dataset(dataset, plan, _cfg(url, max_in_flight=2))
        finally:
            server.shutdown()
        assert state["peak"] <= 2


class TestEvalDataset:
    def test_oracle_double_scores_perfectly(self):
        dataset = synthetic_eval_dataset()
        plan = WindowPlan(window=200, step=200)
        report = eval_dataset(dataset, plan, responder=oracle_responder)
        assert report.f1 == 1.0
        assert report.n_windows == sum(-(-len(d.values) // 200) for d in dataset)

    def test_oracle_perfect_with_overlapping_windows(self):
        # step < window: every point voted on twice, scores in {0, 1, 2}
        dataset = synthetic_eval_dataset()
        plan = WindowPlan(window=200, step=100)
        report = eval_dataset(dataset, plan, responder=oracle_responder)
        assert report.f1 == 1.0

    def test_always_empty_double_has_zero_recall(self):
        dataset = synthetic_eval_dataset()
        plan = WindowPlan(window=200, step=200)
        report = eval_dataset(dataset, plan, responder=empty_responder)
        assert report.recall == 0.0

    def test_replay_reproduces_live_report(self, tmp_path, stub_server):
        handler, url = stub_server
        handler.script = [(200, "Final Answer: boxed{[[10, 30]]}")]
        dataset = synthetic_eval_dataset(n_series=2, length=200)
        plan = WindowPlan(window=200, step=200)
        log_path = tmp_path / "responses.jsonl"
        live = eval_dataset(dataset, plan, _cfg(url), log_path=log_path)
        replayed = eval_dataset(dataset, plan, replay=load_response_log(log_path))
        assert live.to_dict() == replayed.to_dict()

    def test_failure_budget_aborts(self):
        dataset = synthetic_eval_dataset(n_series=2, length=200)
        plan = WindowPlan(window=200, step=200)
        # Replay with no responses at all -> 100% failures.
        with pytest.raises(PartialResultsError):
            eval_dataset(dataset, plan, replay={}, failure_budget=0.5)

    def test_per_kind_breakdown_present(self):
        dataset = synthetic_eval_dataset(n_series=6)
        plan = WindowPlan(window=200, step=200)
        report = eval_dataset(dataset, plan, responder=oracle_responder)
        assert set(report.per_kind) == {d.kind for d in dataset if d.kind}

    def test_requires_exactly_one_source(self):
        dataset = synthetic_eval_dataset(n_series=1, length=200)
        plan = WindowPlan(window=200, step=200)
        with pytest.raises(ValueError):
            eval_dataset(dataset, plan)
        with pytest.raises(ValueError):
            eval_dataset(dataset, plan, responder=oracle_responder, replay={})

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            eval_dataset([], WindowPlan(window=200, step=200), responder=oracle_responder)
