"""HTTP client for the planning endpoint and reply parsing.

Requests use a chat-completion wire shape: ``{model, messages, temperature}``
posted as JSON, with images carried as base64 payloads inside the user
message. A correlation header ``X-Sample-Ref`` identifies the sample for
run logs (and lets test doubles answer per sample). Replies must contain
one JSON object matching the response schema; an unparseable reply earns
exactly one retry with a reinforcing instruction.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

import requests

from ..taxonomy import ActionClass, UnknownAction, parse_action
from .prompts import PromptBundle


class TransportError(ConnectionError):
    pass


class ParseError(ValueError):
    pass


class RateLimited(RuntimeError):
    pass


ENDPOINT_ENV = "SURGACT_ENDPOINT"
MODEL_ENV = "SURGACT_MODEL"
TOKEN_ENV = "SURGACT_AUTH_TOKEN"

REINFORCE_INSTRUCTION = (
    "Your previous reply could not be parsed. Respond again with ONLY the "
    "single JSON object in the requested schema and no surrounding text."
)


@dataclass
class ClientConfig:
    endpoint: str = ""
    model: str = "mock"
    auth_token: str | None = None
    timeout_s: float = 30.0
    rate_limit_retries: int = 3
    retry_after_cap_s: float = 10.0
    parallelism: int = 1
    extra_headers: dict = field(default_factory=dict)

    def resolved(self) -> "ClientConfig":
        """Environment variables override unset fields."""
        endpoint = self.endpoint or os.environ.get(ENDPOINT_ENV, "")
        model = os.environ.get(MODEL_ENV, self.model)
        token = self.auth_token or os.environ.get(TOKEN_ENV)
        return ClientConfig(
            endpoint=endpoint, model=model, auth_token=token,
            timeout_s=self.timeout_s, rate_limit_retries=self.rate_limit_retries,
            retry_after_cap_s=self.retry_after_cap_s, parallelism=self.parallelism,
            extra_headers=dict(self.extra_headers),
        )


@dataclass
class Prediction:
    action: ActionClass
    rationale: str = ""


@dataclass
class AgentResponse:
    scene_understanding: str
    progress_judgment: str
    safety_considerations: str
    predictions: list[Prediction]


def _json_candidates(text: str):
    """Balanced-brace substrings, outermost first per opening position."""
    for start, ch in enumerate(text):
        if ch != "{":
            continue
        depth = 0
        in_str = False
        escaped = False
        for end in range(start, len(text)):
            c = text[end]
            if in_str:
                if escaped:
                    escaped = False
                elif c == "\\":
                    escaped = True
                elif c == '"':
                    in_str = False
                continue
            if c == '"':
                in_str = True
            elif c == "{":
                depth += 1
            elif c == "}":
                depth -= 1
                if depth == 0:
                    yield text[start:end + 1]
                    break


def parse_response(raw_text: str) -> AgentResponse:
    """Locate and validate the structured reply block.

    Actions resolve case-insensitively through the taxonomy synonym map;
    duplicates are dropped preserving order and at most three predictions
    are kept.

    Raises:
        ParseError: no parseable block with a ``predictions`` field.
        UnknownAction: a prediction names something outside the taxonomy.
    """
    data = None
    for candidate in _json_candidates(raw_text):
        try:
            loaded = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        if isinstance(loaded, dict) and "predictions" in loaded:
            data = loaded
            break
    if data is None:
        raise ParseError(f"no structured reply block found in: {raw_text[:200]!r}")

    raw_preds = data.get("predictions")
    if not isinstance(raw_preds, list) or not raw_preds:
        raise ParseError("predictions must be a non-empty list")

    predictions: list[Prediction] = []
    seen: set[ActionClass] = set()
    for item in raw_preds:
        if isinstance(item, dict):
            name = str(item.get("action", ""))
            rationale = str(item.get("rationale", ""))
        else:
            name, rationale = str(item), ""
        action = parse_action(name)  # raises UnknownAction with the token
        if action in seen:
            continue
        seen.add(action)
        predictions.append(Prediction(action=action, rationale=rationale))
    return AgentResponse(
        scene_understanding=str(data.get("scene_understanding", "")),
        progress_judgment=str(data.get("progress_judgment", "")),
        safety_considerations=str(data.get("safety_considerations", "")),
        predictions=predictions[:3],
    )


def _post(messages: list[dict], config: ClientConfig, sample_ref: str | None) -> str:
    payload = {"model": config.model, "messages": messages, "temperature": 0}
    headers = {"Content-Type": "application/json", **config.extra_headers}
    if config.auth_token:
        headers["Authorization"] = f"Bearer {config.auth_token}"
    if sample_ref:
        headers["X-Sample-Ref"] = sample_ref

    attempts = 0
    while True:
        try:
            resp = requests.post(config.endpoint, json=payload, headers=headers,
                                 timeout=config.timeout_s)
        except requests.RequestException as err:
            raise TransportError(f"request to {config.endpoint} failed: {err}") from err
        if resp.status_code == 429:
            attempts += 1
            if attempts > config.rate_limit_retries:
                raise RateLimited(f"still rate limited after {attempts - 1} retries")
            wait = min(float(resp.headers.get("Retry-After", 1.0)),
                       config.retry_after_cap_s)
            time.sleep(wait)
            continue
        if resp.status_code != 200:
            raise TransportError(f"endpoint returned HTTP {resp.status_code}: "
                                 f"{resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as err:
            raise TransportError(f"malformed completion envelope: {err}") from err


def query_agent(bundle: PromptBundle, client_config: ClientConfig,
                sample_ref: str | None = None):
    """Send the bundle; parse; on failure retry once with reinforcement.

    Returns (AgentResponse, transcript). The transcript retains every raw
    exchange, including a failed first attempt.
    """
    config = client_config.resolved()
    if not config.endpoint:
        raise TransportError("no endpoint configured (flag, config file, or "
                             f"{ENDPOINT_ENV})")
    messages = bundle.to_messages()
    transcript: list[dict] = []

    raw = _post(messages, config, sample_ref)
    transcript.append({"attempt": 1, "request_messages": messages, "raw_reply": raw})
    try:
        return parse_response(raw), transcript
    except (ParseError, UnknownAction) as first_err:
        transcript[-1]["parse_error"] = str(first_err)

    retry_messages = messages + [
        {"role": "assistant", "content": raw},
        {"role": "user", "content": [{"type": "text", "text": REINFORCE_INSTRUCTION}]},
    ]
    raw2 = _post(retry_messages, config, sample_ref)
    transcript.append({"attempt": 2, "request_messages": retry_messages,
                       "raw_reply": raw2, "reinforced": True})
    try:
        return parse_response(raw2), transcript
    except UnknownAction as err:
        raise ParseError(str(err)) from err
