"""In-process chat-completion mock server for planning runs and tests.

Serves an OpenAI-style ``/v1/chat/completions`` POST route on localhost.
Behaviors:

- ``ground_truth``: answers each sample's true next action, looked up by
  the ``X-Sample-Ref`` correlation header against a supplied answer key;
- ``uniform_random``: three distinct actions drawn uniformly from the
  taxonomy, deterministic per (seed, sample ref) and independent of the
  ground truth;
- ``scripted``: replays a fixed list of raw reply strings in order
  (useful for malformed-reply and retry behavior).

Optionally rejects the first N requests with HTTP 429 and a Retry-After
header to exercise rate-limit handling.
"""

from __future__ import annotations

import json
import random
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from ..taxonomy import TRAINABLE_ACTIONS


def structured_reply(actions, rationale: str = "mock rationale") -> str:
    """A minimal well-formed reply naming the given actions in order."""
    return json.dumps({
        "scene_understanding": "mock scene summary",
        "progress_judgment": "mock progress summary",
        "safety_considerations": "mock safety summary",
        "predictions": [{"action": a if isinstance(a, str) else a.value,
                         "rationale": rationale} for a in actions],
    })


class MockAgentServer:
    def __init__(self, mode: str = "ground_truth", seed: int = 0,
                 answer_key: dict[str, str] | None = None,
                 scripted: list[str] | None = None,
                 rate_limit_first: int = 0, port: int = 0):
        if mode not in ("ground_truth", "uniform_random", "scripted"):
            raise ValueError(f"unknown mock mode {mode!r}")
        if mode == "ground_truth" and answer_key is None:
            raise ValueError("ground_truth mode needs an answer key")
        self.mode = mode
        self.seed = seed
        self.answer_key = answer_key or {}
        self.scripted = list(scripted or [])
        self.rate_limit_first = rate_limit_first
        self._lock = threading.Lock()
        self._request_count = 0
        self._script_index = 0
        self.requests_seen: list[dict] = []

        mock = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):  # keep test output quiet
                pass

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length) or b"{}")
                ref = self.headers.get("X-Sample-Ref", "")
                with mock._lock:
                    mock._request_count += 1
                    count = mock._request_count
                    mock.requests_seen.append({"ref": ref, "model": body.get("model")})
                    if count <= mock.rate_limit_first:
                        self.send_response(429)
                        self.send_header("Retry-After", "0.01")
                        self.end_headers()
                        return
                    content = mock._content_for(ref)
                reply = {
                    "id": f"mock-{count}",
                    "object": "chat.completion",
                    "model": body.get("model", "mock"),
                    "choices": [{
                        "index": 0,
                        "message": {"role": "assistant", "content": content},
                        "finish_reason": "stop",
                    }],
                }
                data = json.dumps(reply).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

        self._server = ThreadingHTTPServer(("127.0.0.1", port), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    def _content_for(self, ref: str) -> str:
        if self.mode == "ground_truth":
            answer = self.answer_key.get(ref)
            if answer is None:
                return structured_reply([], rationale="missing answer key entry")
            return structured_reply([answer], rationale="ground-truth mock")
        if self.mode == "uniform_random":
            rng = random.Random(f"{self.seed}:{ref}")
            picks = rng.sample(TRAINABLE_ACTIONS, 3)
            return structured_reply(picks, rationale="uniform-random mock")
        # scripted
        if self._script_index >= len(self.scripted):
            raise RuntimeError("scripted mock ran out of replies")
        content = self.scripted[self._script_index]
        self._script_index += 1
        return content

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}/v1/chat/completions"

    def start(self) -> "MockAgentServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "MockAgentServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def ground_truth_answer_key(samples) -> dict[str, str]:
    return {s.ref: s.ground_truth_next.value for s in samples}
