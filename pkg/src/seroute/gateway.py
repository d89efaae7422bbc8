"""HTTP service that loads a router artifact and serves routing decisions.

The loaded artifact is immutable shared state swapped in with a single
attribute assignment, so request threads never observe a partial load.
Upstream completion calls are bounded by a semaphore; the decision path
itself takes no locks.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import httpx

from ._http import post_json
from .core import ModelPair, ModelRef, RouterKind, Tier
from .embed import MockEmbedder, RemoteEmbedder
from .errors import (
    BackendFailure,
    BackendTimeout,
    DimensionMismatch,
    ProviderFailure,
    ValidationError,
)
from .evaluation import response_cost
from .routers import load_artifact

ENV_LISTEN = "SEROUTE_LISTEN"
ENV_ARTIFACT = "SEROUTE_ARTIFACT"

MOCK_PROVIDER = "mock"


def _require_endpoint(value: str, label: str) -> str:
    if value == MOCK_PROVIDER or value.startswith(("http://", "https://")):
        return value
    raise ValidationError(f"{label} must be 'mock' or an http(s) URL, got {value!r}")


def _split_listen(listen: str) -> tuple[str, int]:
    host, _, port_text = listen.rpartition(":")
    if not host:
        raise ValidationError(f"listen address must look like host:port, got {listen!r}")
    try:
        port = int(port_text)
    except ValueError:
        raise ValidationError(f"listen port must be an integer, got {port_text!r}") from None
    if not 0 <= port <= 65535:
        raise ValidationError(f"listen port out of range: {port}")
    return host, port


@dataclass(frozen=True)
class GatewayConfig:
    """Static service configuration; reloadable via restart only.

    The environment variables SEROUTE_LISTEN and SEROUTE_ARTIFACT override
    the listen address and artifact path from the config file.
    """

    listen: str
    artifact_path: str
    threshold: float
    pair: ModelPair
    backend_strong: str = MOCK_PROVIDER
    backend_weak: str = MOCK_PROVIDER
    embedding_provider: str = MOCK_PROVIDER
    timeout: float = 10.0
    retries: int = 2
    max_inflight: int = 8

    def __post_init__(self):
        _split_listen(self.listen)
        if not (0.0 <= self.threshold <= 1.0):
            raise ValidationError(f"threshold must be in [0, 1], got {self.threshold!r}")
        _require_endpoint(self.backend_strong, "backend_strong")
        _require_endpoint(self.backend_weak, "backend_weak")
        _require_endpoint(self.embedding_provider, "embedding_provider")
        if not self.timeout > 0:
            raise ValidationError(f"timeout must be > 0, got {self.timeout!r}")
        if self.retries < 0:
            raise ValidationError(f"retries must be >= 0, got {self.retries!r}")
        if self.max_inflight < 1:
            raise ValidationError(f"max_inflight must be >= 1, got {self.max_inflight!r}")

    @classmethod
    def from_file(cls, path: str | Path) -> "GatewayConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"gateway config {path} is not valid JSON: {exc}") from exc
        try:
            models = raw["models"]
            pair = ModelPair(
                strong=ModelRef(
                    id=models["strong"]["id"],
                    tier=Tier.STRONG,
                    price_per_input_token=models["strong"]["price_per_input_token"],
                    price_per_output_token=models["strong"]["price_per_output_token"],
                ),
                weak=ModelRef(
                    id=models["weak"]["id"],
                    tier=Tier.WEAK,
                    price_per_input_token=models["weak"]["price_per_input_token"],
                    price_per_output_token=models["weak"]["price_per_output_token"],
                ),
            )
            listen = os.environ.get(ENV_LISTEN) or raw["listen"]
            artifact_path = os.environ.get(ENV_ARTIFACT) or raw["artifact"]
            return cls(
                listen=listen,
                artifact_path=str(artifact_path),
                threshold=float(raw["threshold"]),
                pair=pair,
                backend_strong=models["strong"].get("backend", MOCK_PROVIDER),
                backend_weak=models["weak"].get("backend", MOCK_PROVIDER),
                embedding_provider=raw.get("embedding", MOCK_PROVIDER),
                timeout=float(raw.get("timeout", 10.0)),
                retries=int(raw.get("retries", 2)),
                max_inflight=int(raw.get("max_inflight", 8)),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"gateway config {path} is malformed: {exc!r}") from exc
        except ValueError as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"gateway config {path} is malformed: {exc!r}") from exc


@dataclass(frozen=True)
class CompletionResult:
    text: str
    in_tokens: int
    out_tokens: int


class MockBackend:
    """Echo backend: the response text identifies which model served it."""

    def __init__(self, model_id: str):
        self.model_id = model_id

    def complete(self, prompt: str) -> CompletionResult:
        text = f"[{self.model_id}] {prompt}"
        return CompletionResult(
            text=text,
            in_tokens=len(prompt.split()),
            out_tokens=len(text.split()),
        )


class RemoteBackend:
    """Completion backend client.

    Wire protocol: POST {"prompt": str} and receive
    {"text": str, "in_tokens": int, "out_tokens": int}.
    """

    def __init__(self, endpoint: str, timeout: float = 10.0, retries: int = 2):
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries

    def complete(self, prompt: str) -> CompletionResult:
        try:
            reply = post_json(
                self.endpoint,
                {"prompt": prompt},
                timeout=self.timeout,
                retries=self.retries,
            )
        except httpx.TimeoutException as exc:
            raise BackendTimeout(f"backend {self.endpoint} timed out: {exc}") from exc
        except Exception as exc:
            raise BackendFailure(f"backend {self.endpoint} failed: {exc}") from exc
        try:
            return CompletionResult(
                text=str(reply["text"]),
                in_tokens=int(reply["in_tokens"]),
                out_tokens=int(reply["out_tokens"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendFailure(
                f"backend {self.endpoint} returned a malformed completion: {reply!r}"
            ) from exc


def _build_backend(endpoint: str, model: ModelRef, timeout: float, retries: int):
    if endpoint == MOCK_PROVIDER:
        return MockBackend(model.id)
    return RemoteBackend(endpoint, timeout=timeout, retries=retries)


@dataclass(frozen=True)
class _LoadedRouter:
    """One fully loaded artifact plus the embedder sized for it."""

    model: object
    kind: RouterKind
    dim: int
    checksum: str
    embedder: object | None


class RouterGateway:
    """Serves /v1/route, /v1/complete and /healthz over plain HTTP."""

    def __init__(self, config: GatewayConfig):
        self.config = config
        self._state: _LoadedRouter | None = None
        self._backends = {
            config.pair.strong.id: _build_backend(
                config.backend_strong, config.pair.strong, config.timeout, config.retries
            ),
            config.pair.weak.id: _build_backend(
                config.backend_weak, config.pair.weak, config.timeout, config.retries
            ),
        }
        self._upstream_slots = threading.BoundedSemaphore(config.max_inflight)
        self._httpd: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    def load(self, path: str | Path | None = None) -> str:
        """Load (or replace) the served artifact; returns its checksum."""
        artifact = load_artifact(path or self.config.artifact_path)
        embedder = None
        if artifact.router_kind is not RouterKind.RANDOM:
            if self.config.embedding_provider == MOCK_PROVIDER:
                embedder = MockEmbedder(dim=artifact.embedding_dim)
            else:
                embedder = RemoteEmbedder(
                    self.config.embedding_provider,
                    timeout=self.config.timeout,
                    retries=self.config.retries,
                    expected_dim=artifact.embedding_dim,
                )
        # Single reference assignment: readers see the old state or the
        # new one, never a mixture.
        self._state = _LoadedRouter(
            model=artifact.model,
            kind=artifact.router_kind,
            dim=artifact.embedding_dim,
            checksum=artifact.checksum,
            embedder=embedder,
        )
        return artifact.checksum

    # Handlers return (status, payload) so they stay testable without a
    # socket in the way.

    def health_payload(self) -> tuple[int, dict]:
        state = self._state
        if state is None:
            return 503, {"status": "loading", "router_kind": None, "artifact_checksum": None}
        return 200, {
            "status": "ok",
            "router_kind": state.kind.value,
            "artifact_checksum": state.checksum,
        }

    def route_payload(self, body: object) -> tuple[int, dict]:
        if not isinstance(body, dict) or not isinstance(body.get("prompt"), str):
            return 400, {"error": "request body must be a JSON object with a 'prompt' string"}
        prompt = body["prompt"]
        if not prompt.strip():
            return 400, {"error": "prompt must be non-empty"}
        state = self._state
        if state is None:
            return 503, {"error": "no router artifact loaded"}
        embedding = None
        if state.embedder is not None:
            try:
                embedding = state.embedder.embed(prompt)
            except (ProviderFailure, DimensionMismatch) as exc:
                return 502, {"error": f"embedding provider failed: {exc}"}
        p = float(state.model.predict_win_prob(embedding, key=prompt))
        chosen = (
            self.config.pair.strong if p >= self.config.threshold else self.config.pair.weak
        )
        return 200, {
            "chosen_model": chosen.id,
            "p_win_strong": p,
            "threshold": self.config.threshold,
            "router_kind": state.kind.value,
        }

    def complete_payload(self, body: object) -> tuple[int, dict]:
        status, routed = self.route_payload(body)
        if status != 200:
            return status, routed
        chosen = self.config.pair.by_id(routed["chosen_model"])
        backend = self._backends[chosen.id]
        with self._upstream_slots:
            try:
                result = backend.complete(body["prompt"])
            except BackendTimeout as exc:
                return 504, {"error": str(exc)}
            except BackendFailure as exc:
                return 502, {"error": str(exc)}
        cost = response_cost((result.in_tokens, result.out_tokens), chosen)
        return 200, {
            "chosen_model": chosen.id,
            "response_text": result.text,
            "usage": {
                "in_tokens": result.in_tokens,
                "out_tokens": result.out_tokens,
                "cost_usd": str(cost),
            },
        }

    # server lifecycle

    def start(self) -> str:
        """Bind and serve on a background thread; returns host:port."""
        host, port = _split_listen(self.config.listen)
        self._httpd = ThreadingHTTPServer((host, port), _Handler)
        self._httpd.daemon_threads = True
        self._httpd.gateway = self
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, name="seroute-gateway", daemon=True
        )
        self._thread.start()
        return self.address

    @property
    def address(self) -> str:
        if self._httpd is None:
            raise ValidationError("gateway is not started")
        host, port = self._httpd.server_address[:2]
        return f"{host}:{port}"

    def stop(self) -> None:
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
            self._httpd = None
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None

    def run(self) -> None:
        """Start (if not already started) and block until interrupted."""
        if self._httpd is None:
            self.start()
        assert self._thread is not None
        try:
            while self._thread.is_alive():
                self._thread.join(timeout=0.5)
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    @property
    def gateway(self) -> RouterGateway:
        return self.server.gateway

    def log_message(self, format, *args):
        pass

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_body(self) -> object:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length > 0 else b""
        if not raw:
            return None
        return json.loads(raw)

    def do_GET(self):
        if self.path == "/healthz":
            status, payload = self.gateway.health_payload()
            self._send(status, payload)
        else:
            self._send(404, {"error": f"no such path: {self.path}"})

    def do_POST(self):
        try:
            body = self._read_body()
        except (json.JSONDecodeError, ValueError):
            self._send(400, {"error": "request body is not valid JSON"})
            return
        if self.path == "/v1/route":
            status, payload = self.gateway.route_payload(body)
        elif self.path == "/v1/complete":
            status, payload = self.gateway.complete_payload(body)
        else:
            status, payload = 404, {"error": f"no such path: {self.path}"}
        self._send(status, payload)
