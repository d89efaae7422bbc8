import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import httpx
import numpy as np
import pytest

from seroute.embed import MockEmbedder
from seroute.errors import BackendFailure, BackendTimeout, ValidationError
from seroute.gateway import (
    ENV_ARTIFACT,
    ENV_LISTEN,
    CompletionResult,
    GatewayConfig,
    MockBackend,
    RemoteBackend,
    RouterGateway,
)
from seroute.routers import KNNRouterModel, save_model

from conftest import make_pair


def knn_artifact(path, dim=32, tie_only=False):
    """A tiny nearest-neighbor artifact over three fixed prompts."""
    embedder = MockEmbedder(dim=dim)
    prompts = [
        "what is the capital of veloria",
        "how many apples in twelve crates",
        "name the largest moon of kepler",
    ]
    rows = np.stack([embedder.embed(p).values for p in prompts])
    targets = np.array([0.5, 0.5, 0.5]) if tie_only else np.array([1.0, 0.0, 0.5])
    model = KNNRouterModel(rows, targets, k=1)
    checksum = save_model(model, path)
    return checksum, prompts


def make_config(tmp_path, **overrides):
    settings = dict(
        listen="127.0.0.1:0",
        artifact_path=str(tmp_path / "router.json"),
        threshold=0.5,
        pair=make_pair(),
    )
    settings.update(overrides)
    return GatewayConfig(**settings)


class TestConfig:
    def write_config(self, tmp_path, **overrides):
        raw = {
            "listen": "127.0.0.1:0",
            "artifact": str(tmp_path / "router.json"),
            "threshold": 0.6,
            "models": {
                "strong": {
                    "id": "strong-cloud",
                    "price_per_input_token": "0.00003",
                    "price_per_output_token": "0.00006",
                },
                "weak": {
                    "id": "weak-edge",
                    "price_per_input_token": "0.0000005",
                    "price_per_output_token": "0.0000015",
                },
            },
        }
        raw.update(overrides)
        path = tmp_path / "gateway.json"
        path.write_text(json.dumps(raw))
        return path

    def test_from_file(self, tmp_path):
        path = self.write_config(tmp_path)
        config = GatewayConfig.from_file(path)
        assert config.listen == "127.0.0.1:0"
        assert config.threshold == 0.6
        assert config.pair.strong.id == "strong-cloud"
        assert config.backend_strong == "mock"
        assert config.embedding_provider == "mock"
        assert config.timeout == 10.0
        assert config.retries == 2
        assert config.max_inflight == 8

    def test_optional_fields(self, tmp_path):
        path = self.write_config(
            tmp_path,
            embedding="http://embed.test/v1",
            timeout=3.5,
            retries=0,
            max_inflight=2,
        )
        config = GatewayConfig.from_file(path)
        assert config.embedding_provider == "http://embed.test/v1"
        assert config.timeout == 3.5
        assert config.retries == 0
        assert config.max_inflight == 2

    def test_env_overrides_file(self, tmp_path, monkeypatch):
        path = self.write_config(
            tmp_path, listen="10.0.0.9:7777", artifact="/nonexistent/router.json"
        )
        monkeypatch.setenv(ENV_LISTEN, "127.0.0.1:0")
        monkeypatch.setenv(ENV_ARTIFACT, str(tmp_path / "real.json"))
        config = GatewayConfig.from_file(path)
        assert config.listen == "127.0.0.1:0"
        assert config.artifact_path == str(tmp_path / "real.json")

    def test_env_ignored_when_unset(self, tmp_path, monkeypatch):
        monkeypatch.delenv(ENV_LISTEN, raising=False)
        monkeypatch.delenv(ENV_ARTIFACT, raising=False)
        path = self.write_config(tmp_path, listen="127.0.0.1:8123")
        assert GatewayConfig.from_file(path).listen == "127.0.0.1:8123"

    def test_validation(self, tmp_path):
        with pytest.raises(ValidationError):
            make_config(tmp_path, threshold=1.5)
        with pytest.raises(ValidationError):
            make_config(tmp_path, listen="no-port-here")
        with pytest.raises(ValidationError):
            make_config(tmp_path, listen="127.0.0.1:notaport")
        with pytest.raises(ValidationError):
            make_config(tmp_path, listen="127.0.0.1:70000")
        with pytest.raises(ValidationError):
            make_config(tmp_path, backend_strong="ftp://files.test")
        with pytest.raises(ValidationError):
            make_config(tmp_path, timeout=0.0)
        with pytest.raises(ValidationError):
            make_config(tmp_path, retries=-1)
        with pytest.raises(ValidationError):
            make_config(tmp_path, max_inflight=0)


class TestPayloadHandlers:
    def test_health_before_and_after_load(self, tmp_path):
        checksum, _ = knn_artifact(tmp_path / "router.json")
        gateway = RouterGateway(make_config(tmp_path))
        status, payload = gateway.health_payload()
        assert status == 503
        assert payload["status"] == "loading"
        assert gateway.load() == checksum
        status, payload = gateway.health_payload()
        assert status == 200
        assert payload == {
            "status": "ok",
            "router_kind": "knn",
            "artifact_checksum": checksum,
        }

    def test_route_validates_body(self, tmp_path):
        knn_artifact(tmp_path / "router.json")
        gateway = RouterGateway(make_config(tmp_path))
        gateway.load()
        for body in (None, [], "text", {}, {"prompt": 7}, {"prompt": ""}, {"prompt": "  "}):
            status, payload = gateway.route_payload(body)
            assert status == 400, body
            assert "error" in payload

    def test_route_before_load_is_unavailable(self, tmp_path):
        knn_artifact(tmp_path / "router.json")
        gateway = RouterGateway(make_config(tmp_path))
        status, payload = gateway.route_payload({"prompt": "hello world"})
        assert status == 503
        assert "error" in payload

    def test_route_matches_offline_prediction(self, tmp_path):
        knn_artifact(tmp_path / "router.json")
        gateway = RouterGateway(make_config(tmp_path))
        gateway.load()
        embedder = MockEmbedder(dim=32)
        state = gateway._state
        for prompt in ("what is the capital of veloria", "tally the crates of apples"):
            status, payload = gateway.route_payload({"prompt": prompt})
            assert status == 200
            offline = state.model.predict_win_prob(embedder.embed(prompt), key=prompt)
            assert payload["p_win_strong"] == offline
            expected = "strong-cloud" if offline >= 0.5 else "weak-edge"
            assert payload["chosen_model"] == expected
            assert payload["threshold"] == 0.5
            assert payload["router_kind"] == "knn"

    def test_probability_equal_to_threshold_routes_strong(self, tmp_path):
        # All-tie targets make every nearest-neighbor prediction exactly
        # 0.5, the configured threshold.
        knn_artifact(tmp_path / "router.json", tie_only=True)
        gateway = RouterGateway(make_config(tmp_path, threshold=0.5))
        gateway.load()
        status, payload = gateway.route_payload({"prompt": "anything at all"})
        assert status == 200
        assert payload["p_win_strong"] == 0.5
        assert payload["chosen_model"] == "strong-cloud"

        just_above = RouterGateway(make_config(tmp_path, threshold=0.5 + 1e-9))
        just_above.load()
        status, payload = just_above.route_payload({"prompt": "anything at all"})
        assert payload["chosen_model"] == "weak-edge"

    def test_route_embed_failure_is_bad_gateway(self, tmp_path):
        knn_artifact(tmp_path / "router.json")
        config = make_config(
            tmp_path,
            embedding_provider="http://127.0.0.1:9/embed",
            timeout=0.2,
            retries=0,
        )
        gateway = RouterGateway(config)
        gateway.load()
        status, payload = gateway.route_payload({"prompt": "hello world"})
        assert status == 502
        assert "embedding provider failed" in payload["error"]

    def test_complete_prices_the_echo(self, tmp_path):
        knn_artifact(tmp_path / "router.json", tie_only=True)
        gateway = RouterGateway(make_config(tmp_path, threshold=0.5))
        gateway.load()
        status, payload = gateway.complete_payload({"prompt": "ping"})
        assert status == 200
        assert payload["chosen_model"] == "strong-cloud"
        assert payload["response_text"] == "[strong-cloud] ping"
        assert payload["usage"] == {
            "in_tokens": 1,
            "out_tokens": 2,
            "cost_usd": "0.00015",
        }

    def test_complete_propagates_route_errors(self, tmp_path):
        knn_artifact(tmp_path / "router.json")
        gateway = RouterGateway(make_config(tmp_path))
        status, _ = gateway.complete_payload({"prompt": ""})
        assert status == 400
        status, _ = gateway.complete_payload({"prompt": "hello"})
        assert status == 503  # not loaded


class TestBackends:
    def test_mock_backend_echo(self):
        result = MockBackend("weak-edge").complete("two words")
        assert result == CompletionResult(
            text="[weak-edge] two words", in_tokens=2, out_tokens=3
        )

    def test_remote_backend_success(self, monkeypatch):
        calls = []

        def fake_post(url, payload, *, timeout, retries):
            calls.append((url, payload, timeout, retries))
            return {"text": "a reply", "in_tokens": 3, "out_tokens": 2}

        monkeypatch.setattr("seroute.gateway.post_json", fake_post)
        backend = RemoteBackend("http://backend.test/v1", timeout=4.0, retries=1)
        result = backend.complete("the prompt")
        assert result == CompletionResult(text="a reply", in_tokens=3, out_tokens=2)
        assert calls == [("http://backend.test/v1", {"prompt": "the prompt"}, 4.0, 1)]

    def test_remote_backend_timeout(self, monkeypatch):
        def fake_post(url, payload, *, timeout, retries):
            raise httpx.ReadTimeout("took too long")

        monkeypatch.setattr("seroute.gateway.post_json", fake_post)
        with pytest.raises(BackendTimeout):
            RemoteBackend("http://backend.test/v1").complete("prompt")

    def test_remote_backend_malformed_reply(self, monkeypatch):
        monkeypatch.setattr(
            "seroute.gateway.post_json", lambda *a, **k: {"text": "no tokens"}
        )
        with pytest.raises(BackendFailure):
            RemoteBackend("http://backend.test/v1").complete("prompt")


class _UpstreamHandler(BaseHTTPRequestHandler):
    def log_message(self, format, *args):
        pass

    def do_POST(self):
        length = int(self.headers.get("Content-Length") or 0)
        self.rfile.read(length)
        self.server.hits += 1
        mode = self.server.mode
        if mode == "fail":
            body = b'{"error":"boom"}'
            self.send_response(500)
        elif mode == "sleep":
            time.sleep(1.0)
            body = b"{}"
            self.send_response(200)
        else:
            body = json.dumps(
                {"text": "upstream says hi", "in_tokens": 4, "out_tokens": 3}
            ).encode()
            self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        try:
            self.wfile.write(body)
        except (BrokenPipeError, ConnectionResetError):
            pass


@pytest.fixture
def upstream():
    servers = []

    def start(mode):
        httpd = ThreadingHTTPServer(("127.0.0.1", 0), _UpstreamHandler)
        httpd.daemon_threads = True
        httpd.mode = mode
        httpd.hits = 0
        httpd.handle_error = lambda *args: None
        thread = threading.Thread(target=httpd.serve_forever, daemon=True)
        thread.start()
        servers.append((httpd, thread))
        return httpd, f"http://127.0.0.1:{httpd.server_address[1]}/complete"

    yield start
    for httpd, thread in servers:
        httpd.shutdown()
        httpd.server_close()
        thread.join(timeout=5.0)


@pytest.fixture
def served(tmp_path):
    gateways = []

    def start(*, load=True, **overrides):
        knn_artifact(tmp_path / "router.json", tie_only=True)
        gateway = RouterGateway(make_config(tmp_path, **overrides))
        if load:
            gateway.load()
        address = gateway.start()
        gateways.append(gateway)
        return gateway, f"http://{address}"

    yield start
    for gateway in gateways:
        gateway.stop()


class TestOverHttp:
    def test_health_lifecycle(self, served):
        gateway, base = served(load=False)
        first = httpx.get(f"{base}/healthz")
        assert first.status_code == 503
        assert first.json()["status"] == "loading"
        checksum = gateway.load()
        for _ in range(3):
            reply = httpx.get(f"{base}/healthz")
            assert reply.status_code == 200
            assert reply.json() == {
                "status": "ok",
                "router_kind": "knn",
                "artifact_checksum": checksum,
            }

    def test_route_and_errors(self, served):
        _, base = served()
        good = httpx.post(f"{base}/v1/route", json={"prompt": "hello there"})
        assert good.status_code == 200
        body = good.json()
        assert body["chosen_model"] == "strong-cloud"
        assert body["p_win_strong"] == 0.5
        assert body["router_kind"] == "knn"

        bad_json = httpx.post(
            f"{base}/v1/route",
            content=b"{not json",
            headers={"Content-Type": "application/json"},
        )
        assert bad_json.status_code == 400

        empty = httpx.post(f"{base}/v1/route", json={"prompt": ""})
        assert empty.status_code == 400

        missing = httpx.post(f"{base}/v1/other", json={"prompt": "x"})
        assert missing.status_code == 404
        assert httpx.get(f"{base}/v1/route").status_code == 404

    def test_complete_end_to_end(self, served):
        _, base = served()
        reply = httpx.post(f"{base}/v1/complete", json={"prompt": "ping pong"})
        assert reply.status_code == 200
        body = reply.json()
        assert body["response_text"] == "[strong-cloud] ping pong"
        assert body["usage"]["in_tokens"] == 2
        assert body["usage"]["out_tokens"] == 3

    def test_upstream_failure_returns_502_after_retries(self, served, upstream):
        httpd, url = upstream("fail")
        _, base = served(backend_strong=url, retries=1, timeout=2.0)
        reply = httpx.post(f"{base}/v1/complete", json={"prompt": "ping"})
        assert reply.status_code == 502
        assert httpd.hits == 2  # first try plus one retry

    def test_upstream_timeout_returns_504(self, served, upstream):
        _, url = upstream("sleep")
        _, base = served(backend_strong=url, retries=0, timeout=0.3)
        reply = httpx.post(
            f"{base}/v1/complete", json={"prompt": "ping"}, timeout=5.0
        )
        assert reply.status_code == 504

    def test_route_unaffected_by_backend_config(self, served, upstream):
        _, url = upstream("fail")
        _, base = served(backend_strong=url)
        reply = httpx.post(f"{base}/v1/route", json={"prompt": "ping"})
        assert reply.status_code == 200


class TestLifecycle:
    def test_address_requires_start(self, tmp_path):
        knn_artifact(tmp_path / "router.json")
        gateway = RouterGateway(make_config(tmp_path))
        with pytest.raises(ValidationError):
            gateway.address

    def test_stop_is_idempotent(self, tmp_path):
        knn_artifact(tmp_path / "router.json")
        gateway = RouterGateway(make_config(tmp_path))
        gateway.start()
        gateway.stop()
        gateway.stop()

    def test_reload_swaps_checksum(self, tmp_path):
        first_checksum, _ = knn_artifact(tmp_path / "router.json")
        gateway = RouterGateway(make_config(tmp_path))
        gateway.load()
        second_checksum, _ = knn_artifact(tmp_path / "other.json", tie_only=True)
        assert gateway.load(tmp_path / "other.json") == second_checksum
        status, payload = gateway.health_payload()
        assert payload["artifact_checksum"] == second_checksum
        assert first_checksum != second_checksum
