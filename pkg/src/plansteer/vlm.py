"""Model backends: an OpenAI-compatible HTTP client and a deterministic mock.

The HTTP side targets any server exposing /v1/chat/completions with
image_url content parts (local LLaVA servers widely do). The mock side is
a pure function of (request bytes, seed, script), which makes full
pipeline runs reproducible bit-for-bit with zero network access.
"""

from __future__ import annotations

import base64
import hashlib
import json
import random
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

DEFAULT_TEMPERATURE = 0.2
DEFAULT_MAX_TOKENS = 1024
DEFAULT_TIMEOUT_S = 300.0
DEFAULT_RETRIES = 3

MOCK_SPEED_RANGE = (0.0, 15.0)
MOCK_CURVATURE_RANGE = (-0.2, 0.2)

# Stage markers: distinctive substrings of the stage templates, checked in
# this order because the trajectory prompt embeds earlier stage outputs.
_STAGE_MARKERS = (
    ("trajectory_request", "Speeds: [s1"),
    ("intent_estimation", "turn left, turn right, or go straight"),
    ("object_identification", "List two or three of them"),
    ("scene_description", "what is going on in the scene"),
)

_HORIZON_IN_PROMPT = re.compile(r"exactly (\d+) numbers")


class VlmError(Exception):
    pass


class TransportError(VlmError):
    """Transport failed (or server kept erroring) after all retries."""


class AuthError(VlmError):
    """HTTP 401/403; never retried."""


class RequestRejected(VlmError):
    """Other HTTP 4xx; never retried."""


class SchemaError(VlmError):
    """Response body did not look like a chat completion."""


class MockScriptError(VlmError):
    pass


@dataclass(frozen=True)
class ModelRequest:
    user_text: str
    system_text: str | None = None
    images: tuple[bytes, ...] = ()
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS
    seed: int | None = None

    def __post_init__(self) -> None:
        if not self.user_text:
            raise ValueError("user_text must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")

    def fingerprint(self) -> bytes:
        """Canonical bytes of the request content (images by digest)."""
        h = hashlib.sha256()
        h.update((self.system_text or "").encode("utf-8"))
        h.update(b"\x00")
        h.update(self.user_text.encode("utf-8"))
        h.update(b"\x00")
        for img in self.images:
            h.update(hashlib.sha256(img).digest())
        h.update(f"\x00{self.temperature!r}\x00{self.max_tokens}".encode("utf-8"))
        return h.digest()


@dataclass(frozen=True)
class ModelResponse:
    text: str
    latency: float
    backend_id: str


@dataclass(frozen=True)
class MockRule:
    stage: str | None
    instruction_contains: str | None
    response_text: str

    def matches(self, stage: str, user_text: str) -> bool:
        if self.stage is not None and self.stage != stage:
            return False
        if self.instruction_contains is not None and self.instruction_contains not in user_text:
            return False
        return True


@dataclass(frozen=True)
class MockScript:
    rules: tuple[MockRule, ...] = ()


_VALID_STAGES = {name for name, _ in _STAGE_MARKERS}


def load_mock_script(path: str | Path) -> MockScript:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MockScriptError(f"cannot load mock script {path}: {exc}") from exc
    return parse_mock_script(raw)


def parse_mock_script(raw) -> MockScript:
    if not isinstance(raw, list):
        raise MockScriptError("mock script must be a JSON array of rules")
    rules = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict) or "response_text" not in entry:
            raise MockScriptError(f"mock script rule {i}: missing response_text")
        match = entry.get("match", {})
        if not isinstance(match, dict):
            raise MockScriptError(f"mock script rule {i}: match must be an object")
        stage = match.get("stage")
        if stage is not None and stage not in _VALID_STAGES:
            raise MockScriptError(f"mock script rule {i}: unknown stage {stage!r}")
        rules.append(MockRule(
            stage=stage,
            instruction_contains=match.get("instruction_contains"),
            response_text=str(entry["response_text"]),
        ))
    return MockScript(rules=tuple(rules))


def detect_stage(user_text: str) -> str:
    for stage, marker in _STAGE_MARKERS:
        if marker in user_text:
            return stage
    return "scene_description"


_DEFAULT_STAGE_TEXT = {
    "scene_description": (
        "A multi-lane road in daylight with light traffic. A few vehicles are "
        "visible ahead and the lane markings are clear; no signal change is visible."
    ),
    "object_identification": (
        "1. A sedan ahead in the same lane, setting the following distance. "
        "2. A pedestrian waiting on the right-hand sidewalk, worth monitoring. "
        "3. A van parked at the curb on the left, narrowing the usable lane."
    ),
    "intent_estimation": (
        "The car should keep to its current lane and maintain a moderate speed, "
        "adjusting to the vehicle ahead."
    ),
}


def _mock_trajectory_text(request: ModelRequest, seed: int) -> str:
    horizon_match = _HORIZON_IN_PROMPT.search(request.user_text)
    horizon = int(horizon_match.group(1)) if horizon_match else 10
    digest = hashlib.sha256(request.fingerprint() + seed.to_bytes(8, "big", signed=True)).digest()
    rng = random.Random(int.from_bytes(digest, "big"))
    speeds = [round(rng.uniform(*MOCK_SPEED_RANGE), 3) for _ in range(horizon)]
    curvatures = [round(rng.uniform(*MOCK_CURVATURE_RANGE), 4) for _ in range(horizon)]
    return (
        f"Speeds: [{', '.join(str(v) for v in speeds)}]\n"
        f"Curvatures: [{', '.join(str(k) for k in curvatures)}]"
    )


def mock_complete(request: ModelRequest, script: MockScript) -> ModelResponse:
    """Scripted or hash-derived response; no I/O, fully deterministic."""
    stage = detect_stage(request.user_text)
    for rule in script.rules:
        if rule.matches(stage, request.user_text):
            return ModelResponse(text=rule.response_text, latency=0.0, backend_id="mock")
    seed = request.seed if request.seed is not None else 0
    if stage == "trajectory_request":
        text = _mock_trajectory_text(request, seed)
    else:
        text = _DEFAULT_STAGE_TEXT[stage]
    return ModelResponse(text=text, latency=0.0, backend_id="mock")


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "mock"  # "mock" | "http"
    base_url: str | None = None
    api_key: str | None = None
    model: str = "llava-v1.6-mistral-7b"
    timeout_s: float = DEFAULT_TIMEOUT_S
    retries: int = DEFAULT_RETRIES
    backoff_base_s: float = 1.0  # 1 s, 2 s, 4 s
    mock_script: MockScript = field(default_factory=MockScript)

    def __post_init__(self) -> None:
        if self.kind not in ("mock", "http"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.kind == "http" and not self.base_url:
            raise ValueError("http backend requires base_url")

    @property
    def backend_id(self) -> str:
        return "mock" if self.kind == "mock" else f"http:{self.model}"


def _sniff_mime(data: bytes) -> str:
    if data.startswith(b"\x89PNG"):
        return "image/png"
    if data.startswith(b"\xff\xd8"):
        return "image/jpeg"
    return "image/png"


def _build_payload(request: ModelRequest, config: BackendConfig) -> dict:
    content: list[dict] = [{"type": "text", "text": request.user_text}]
    for img in request.images:
        url = f"data:{_sniff_mime(img)};base64,{base64.b64encode(img).decode('ascii')}"
        content.append({"type": "image_url", "image_url": {"url": url}})
    messages: list[dict] = []
    if request.system_text:
        messages.append({"role": "system", "content": request.system_text})
    messages.append({"role": "user", "content": content})
    payload = {
        "model": config.model,
        "messages": messages,
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
    }
    if request.seed is not None:
        payload["seed"] = request.seed
    return payload


def _extract_text(body) -> str:
    try:
        content = body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise SchemaError(f"response is not a chat completion: {exc}") from exc
    if content is None:
        return ""
    if isinstance(content, str):
        return content
    # Some servers return content parts; concatenate the text ones.
    if isinstance(content, list):
        return "".join(p.get("text", "") for p in content if isinstance(p, dict))
    raise SchemaError(f"unexpected content type {type(content).__name__}")


def _http_complete(request: ModelRequest, config: BackendConfig) -> ModelResponse:
    url = config.base_url.rstrip("/") + "/v1/chat/completions"
    headers = {"Content-Type": "application/json"}
    if config.api_key:
        headers["Authorization"] = f"Bearer {config.api_key}"
    payload = _build_payload(request, config)
    start = time.monotonic()
    last_error: Exception | None = None
    for attempt in range(config.retries + 1):
        if attempt > 0:
            time.sleep(config.backoff_base_s * (2 ** (attempt - 1)))
        try:
            resp = requests.post(url, json=payload, headers=headers, timeout=config.timeout_s)
        except requests.RequestException as exc:
            last_error = exc
            continue
        if resp.status_code in (401, 403):
            raise AuthError(f"authentication failed (HTTP {resp.status_code})")
        if 400 <= resp.status_code < 500:
            raise RequestRejected(f"HTTP {resp.status_code}: {resp.text[:500]}")
        if resp.status_code >= 500:
            last_error = TransportError(f"HTTP {resp.status_code}")
            continue
        try:
            body = resp.json()
        except ValueError as exc:
            raise SchemaError(f"response body is not JSON: {exc}") from exc
        text = _extract_text(body)
        return ModelResponse(
            text=text, latency=time.monotonic() - start, backend_id=config.backend_id
        )
    raise TransportError(
        f"request failed after {config.retries} retries: {last_error}"
    ) from last_error


def complete(request: ModelRequest, config: BackendConfig) -> ModelResponse:
    """Run one model call against the configured backend."""
    if config.kind == "mock":
        return mock_complete(request, config.mock_script)
    return _http_complete(request, config)
