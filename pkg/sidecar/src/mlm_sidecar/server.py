"""NDJSON-over-TCP protocol server.

    request:  {"id": str, "mode": "masked_topk"|"position_topk",
               "text": str, "top_k": int, "position": int?}
    response: {"id": str, "predictions": [[{"surface", "begins_word",
               "logprob"}, ...], ...]}
    error:    {"id": str, "error": str}

Connections are handled on worker threads; model forward passes are
serialized behind a lock so results are deterministic regardless of how
clients interleave requests.
"""

from __future__ import annotations

import json
import socketserver
import threading

from mlm_sidecar.model import MlmModel, ModelError


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        for raw in self.rfile:
            raw = raw.decode("utf-8").strip()
            if not raw:
                continue
            reply = self.server.answer(raw)  # type: ignore[attr-defined]
            self.wfile.write(
                json.dumps(reply, ensure_ascii=False,
                           separators=(",", ":")).encode("utf-8") + b"\n")
            self.wfile.flush()


class SidecarServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, model: MlmModel, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _Handler)
        self.model = model
        self._model_lock = threading.Lock()

    @property
    def address(self) -> tuple[str, int]:
        return self.server_address[0], self.server_address[1]

    def answer(self, raw: str) -> dict:
        rid = None
        try:
            req = json.loads(raw)
            rid = req.get("id")
            mode = req.get("mode", "masked_topk")
            text = req["text"]
            top_k = int(req["top_k"])
            with self._model_lock:
                if mode == "masked_topk":
                    predictions = self.model.masked_topk(text, top_k)
                elif mode == "position_topk":
                    predictions = self.model.position_topk(
                        text, top_k, int(req["position"]))
                else:
                    raise ModelError(f"unknown query mode {mode!r}")
            return {"id": rid, "predictions": predictions}
        except Exception as e:
            return {"id": rid, "error": str(e)}


def serve(model: MlmModel, host: str = "127.0.0.1", port: int = 0,
          background: bool = False) -> SidecarServer:
    server = SidecarServer(model, host, port)
    if background:
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
    return server
