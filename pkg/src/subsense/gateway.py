"""Masked language model scoring gateway.

Backends answer two kinds of queries:

* ``masked_topk``: the text contains one or more ``<mask>`` sentinels; the
  backend returns one top-k prediction list per sentinel, left to right.
* ``position_topk``: the text contains no sentinel; the backend returns the
  top-k distribution at the subword covering the given character offset.

Wire protocol (newline-delimited JSON over TCP):

    request:  {"id": str, "mode": "masked_topk"|"position_topk",
               "text": str, "top_k": int, "position": int?}
    response: {"id": str, "predictions": [[{"surface": str,
               "begins_word": bool, "logprob": float}, ...], ...]}
    error:    {"id": str, "error": str}
"""

from __future__ import annotations

import json
import math
import socket
import socketserver
import threading
import uuid
from dataclasses import dataclass
from typing import Optional

MASK = "<mask>"


class GatewayError(RuntimeError):
    """Backend-reported or query-validation error."""


class TransportError(GatewayError):
    """Connection-level failure; retryable."""


@dataclass(frozen=True)
class PredictedToken:
    surface: str
    begins_word: bool
    logprob: float

    def __post_init__(self):
        if not self.surface:
            raise GatewayError("empty token surface")


@dataclass(frozen=True)
class MaskQuery:
    text: str
    top_k: int
    mode: str = "masked_topk"
    position: Optional[int] = None

    def __post_init__(self):
        if self.top_k < 1:
            raise GatewayError("top_k must be positive")
        n_masks = self.text.count(MASK)
        if self.mode == "masked_topk":
            if n_masks < 1:
                raise GatewayError("masked_topk query needs at least one <mask>")
        elif self.mode == "position_topk":
            if n_masks != 0:
                raise GatewayError("position_topk query must not contain <mask>")
            if self.position is None or not (0 <= self.position < len(self.text)):
                raise GatewayError("position_topk query needs a valid position")
        else:
            raise GatewayError(f"unknown query mode {self.mode!r}")

    @property
    def n_masks(self) -> int:
        return self.text.count(MASK)

    def cache_key(self) -> str:
        return json.dumps(
            {"mode": self.mode, "text": self.text, "top_k": self.top_k,
             "position": self.position},
            ensure_ascii=False, sort_keys=True, separators=(",", ":"),
        )


@dataclass(frozen=True)
class MlmResponse:
    """Per-mask prediction lists (one list for position_topk)."""

    predictions: tuple[tuple[PredictedToken, ...], ...]

    def validate(self, query: MaskQuery) -> None:
        expected = query.n_masks if query.mode == "masked_topk" else 1
        if len(self.predictions) != expected:
            raise GatewayError(
                f"expected {expected} prediction lists, got {len(self.predictions)}"
            )
        for preds in self.predictions:
            if len(preds) > query.top_k:
                raise GatewayError("prediction list longer than top_k")
            for prev, cur in zip(preds, preds[1:]):
                if cur.logprob > prev.logprob + 1e-12:
                    raise GatewayError("logprobs not non-increasing")


def response_to_dict(resp: MlmResponse) -> dict:
    return {
        "predictions": [
            [{"surface": t.surface, "begins_word": t.begins_word, "logprob": t.logprob}
             for t in preds]
            for preds in resp.predictions
        ]
    }


def response_from_dict(d: dict) -> MlmResponse:
    return MlmResponse(
        predictions=tuple(
            tuple(PredictedToken(t["surface"], bool(t["begins_word"]), float(t["logprob"]))
                  for t in preds)
            for preds in d["predictions"]
        )
    )


class MockBackend:
    """Deterministic scripted backend for desk-scale runs.

    Config (JSON)::

        {"responses": {"<query key>": [[["cat", true, -0.5], ...], ...]},
         "fallback_vocabulary": ["cat", "dog", ...]}

    The query key is the exact query text for ``masked_topk`` and
    ``"<text>@@<position>"`` for ``position_topk``. Unknown queries are
    answered from the uniform fallback distribution over the declared
    vocabulary (sorted lexicographically, all tokens word-initial).
    """

    def __init__(self, responses: dict, fallback_vocabulary: Optional[list[str]] = None):
        self.responses = responses
        self.fallback = sorted(fallback_vocabulary or [])

    @classmethod
    def from_config(cls, path) -> "MockBackend":
        with open(path, encoding="utf-8") as f:
            try:
                cfg = json.load(f)
            except json.JSONDecodeError as e:
                raise GatewayError(f"malformed mock config {path}: {e}") from e
        if not isinstance(cfg, dict):
            raise GatewayError("mock config must be a JSON object")
        return cls(cfg.get("responses", {}), cfg.get("fallback_vocabulary"))

    def _key(self, query: MaskQuery) -> str:
        if query.mode == "position_topk":
            return f"{query.text}@@{query.position}"
        return query.text

    def score(self, query: MaskQuery) -> MlmResponse:
        n_lists = query.n_masks if query.mode == "masked_topk" else 1
        entry = self.responses.get(self._key(query))
        if entry is not None:
            lists = []
            for preds in entry[:n_lists]:
                tokens = [
                    PredictedToken(str(s), bool(b), float(lp)) for s, b, lp in preds
                ]
                tokens.sort(key=lambda t: (-t.logprob, t.surface))
                lists.append(tuple(tokens[: query.top_k]))
            while len(lists) < n_lists:
                lists.append(self._fallback_list(query.top_k))
            resp = MlmResponse(predictions=tuple(lists))
        else:
            if not self.fallback:
                raise GatewayError(
                    f"mock backend has no entry for query and no fallback vocabulary: "
                    f"{self._key(query)!r}"
                )
            resp = MlmResponse(
                predictions=tuple(self._fallback_list(query.top_k) for _ in range(n_lists))
            )
        resp.validate(query)
        return resp

    def _fallback_list(self, top_k: int) -> tuple[PredictedToken, ...]:
        if not self.fallback:
            raise GatewayError("mock backend needs a fallback vocabulary here")
        lp = math.log(1.0 / len(self.fallback))
        return tuple(
            PredictedToken(w, True, lp) for w in self.fallback[:top_k]
        )


class CacheBackend:
    """Replayable cache around another backend.

    The cache file is append-only JSONL of {"request": ..., "response": ...}
    records keyed by the normalized query, so runs are resumable and diffable.
    With ``inner=None`` the cache is read-only and misses are errors.
    """

    def __init__(self, path, inner=None):
        self.path = path
        self.inner = inner
        self._lock = threading.Lock()
        self._cache: dict[str, MlmResponse] = {}
        try:
            with open(path, encoding="utf-8") as f:
                for line in f:
                    line = line.strip()
                    if not line:
                        continue
                    rec = json.loads(line)
                    self._cache[json.dumps(rec["request"], ensure_ascii=False,
                                           sort_keys=True, separators=(",", ":"))] = \
                        response_from_dict(rec["response"])
        except FileNotFoundError:
            pass

    def score(self, query: MaskQuery) -> MlmResponse:
        key = query.cache_key()
        with self._lock:
            cached = self._cache.get(key)
        if cached is not None:
            return cached
        if self.inner is None:
            raise GatewayError(f"cache miss with no inner backend: {key}")
        resp = self.inner.score(query)
        with self._lock:
            if key not in self._cache:
                self._cache[key] = resp
                with open(self.path, "a", encoding="utf-8") as f:
                    f.write(json.dumps(
                        {"request": json.loads(key), "response": response_to_dict(resp)},
                        ensure_ascii=False, separators=(",", ":")) + "\n")
        return resp


class SocketBackend:
    """Client for a sidecar speaking the NDJSON wire protocol over TCP."""

    def __init__(self, host: str, port: int, retries: int = 2, timeout: float = 60.0):
        self.host = host
        self.port = port
        self.retries = retries
        self.timeout = timeout
        self._lock = threading.Lock()

    def score(self, query: MaskQuery) -> MlmResponse:
        req = {
            "id": uuid.uuid4().hex,
            "mode": query.mode,
            "text": query.text,
            "top_k": query.top_k,
        }
        if query.position is not None:
            req["position"] = query.position
        last_err: Optional[Exception] = None
        for _ in range(self.retries + 1):
            try:
                with self._lock:
                    raw = self._round_trip(json.dumps(req, ensure_ascii=False))
                break
            except OSError as e:
                last_err = e
        else:
            raise TransportError(f"sidecar unreachable: {last_err}")
        rec = json.loads(raw)
        if rec.get("id") != req["id"]:
            raise GatewayError("response id does not match request id")
        if "error" in rec:
            raise GatewayError(rec["error"])
        resp = response_from_dict(rec)
        resp.validate(query)
        return resp

    def _round_trip(self, line: str) -> str:
        with socket.create_connection((self.host, self.port), timeout=self.timeout) as s:
            s.sendall(line.encode("utf-8") + b"\n")
            f = s.makefile("r", encoding="utf-8")
            reply = f.readline()
        if not reply:
            raise TransportError("empty reply from sidecar")
        return reply


class _ProtocolHandler(socketserver.StreamRequestHandler):
    def handle(self):
        for raw in self.rfile:
            raw = raw.decode("utf-8").strip()
            if not raw:
                continue
            rid = None
            try:
                req = json.loads(raw)
                rid = req.get("id")
                query = MaskQuery(
                    text=req["text"],
                    top_k=int(req["top_k"]),
                    mode=req.get("mode", "masked_topk"),
                    position=req.get("position"),
                )
                resp = self.server.backend.score(query)  # type: ignore[attr-defined]
                out = {"id": rid, **response_to_dict(resp)}
            except Exception as e:  # protocol errors become error responses
                out = {"id": rid, "error": str(e)}
            self.wfile.write(
                json.dumps(out, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
                + b"\n"
            )
            self.wfile.flush()


class ProtocolServer(socketserver.ThreadingTCPServer):
    """Serves any backend over the NDJSON wire protocol."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, backend, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _ProtocolHandler)
        self.backend = backend

    @property
    def address(self) -> tuple[str, int]:
        return self.server_address[0], self.server_address[1]


def serve_backend(backend, host: str = "127.0.0.1", port: int = 0) -> ProtocolServer:
    """Start a protocol server on a background thread; caller owns shutdown."""
    server = ProtocolServer(backend, host, port)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server
