"""Remote wire clients: chat completions, bridge /generate and /detect.

Wire shapes:
  POST {llm}/v1/chat/completions
      {"model": ..., "messages": [{"role", "content"}...], "temperature": 0}
      -> {"choices": [{"message": {"content": ...}}]}
  POST {bridge}/generate
      {"layout": <Layout JSON>, "prompt_d", "prompt_bg", "seed", "steps"}
      -> image/png bytes
  POST {bridge}/detect
      {"image": <base64 PNG>, "categories": [...], "confidence": 0.3}
      -> {"counts": {...}, "boxes": [...]}
"""

from __future__ import annotations

import base64
import json
import threading
import time

import requests

from ..errors import (
    BackendError, EmptyReplyError, ProtocolError, RateLimitError, TransportError,
)
from ..graph import PlanningGraph, decode_graph, encode_graph, graph_to_prompt, validate_graph
from ..layout import Layout
from ..prompting import PromptSpec
from ..scoring import DetectionReport
from .sim import Image

DEFAULT_TIMEOUT = 60.0
CHAT_ATTEMPTS = 3
GENERATE_STEPS_DEFAULT = 50
MAX_INFLIGHT_DEFAULT = 4


def llm_chat(endpoint: str, model: str, messages: list[dict], params: dict | None = None,
             api_key: str | None = None, timeout: float = DEFAULT_TIMEOUT,
             backoff: float = 0.5) -> str:
    """One chat-completions round trip with up to 3 attempts and exponential
    backoff on transient failures (connection errors, 5xx, 429)."""
    url = endpoint.rstrip("/") + "/v1/chat/completions"
    body = {"model": model, "messages": messages, "temperature": 0}
    if params:
        body.update(params)
    headers = {"Content-Type": "application/json"}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"

    last_error: Exception | None = None
    rate_limited = False
    for attempt in range(CHAT_ATTEMPTS):
        if attempt:
            time.sleep(backoff * 2 ** (attempt - 1))
        try:
            resp = requests.post(url, json=body, headers=headers, timeout=timeout)
        except requests.RequestException as exc:
            last_error = exc
            continue
        if resp.status_code == 429:
            rate_limited = True
            last_error = TransportError(f"429 from {url}")
            continue
        if resp.status_code >= 500:
            last_error = TransportError(f"{resp.status_code} from {url}")
            continue
        if resp.status_code != 200:
            raise TransportError(f"chat endpoint returned {resp.status_code}: {resp.text[:200]}")
        try:
            content = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed chat response: {exc}") from exc
        if not content or not str(content).strip():
            raise EmptyReplyError(f"empty reply from {url}")
        return str(content)
    if rate_limited:
        raise RateLimitError(f"rate limited after {CHAT_ATTEMPTS} attempts: {url}")
    raise TransportError(f"chat failed after {CHAT_ATTEMPTS} attempts: {last_error}")


def remote_generate(endpoint: str, layout: Layout, prompt_d: str, prompt_bg: str,
                    seed: int, steps: int = GENERATE_STEPS_DEFAULT,
                    api_key: str | None = None,
                    timeout: float = DEFAULT_TIMEOUT) -> Image:
    """Send a layout to the bridge and decode the returned PNG."""
    url = endpoint.rstrip("/") + "/generate"
    body = {
        "layout": layout.to_dict(),
        "prompt_d": prompt_d,
        "prompt_bg": prompt_bg,
        "seed": int(seed),
        "steps": int(steps),
    }
    headers = {}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    try:
        resp = requests.post(url, json=body, headers=headers, timeout=timeout)
    except requests.RequestException as exc:
        raise TransportError(f"generate call failed: {exc}") from exc
    if resp.status_code == 422:
        raise ProtocolError(f"bridge rejected layout payload: {resp.text[:200]}")
    if resp.status_code != 200:
        raise TransportError(f"generate returned {resp.status_code}")
    try:
        image = Image.from_png(resp.content)
    except Exception as exc:
        raise ProtocolError(f"generate response is not a decodable PNG: {exc}") from exc
    if image.width != layout.resolution or image.height != layout.resolution:
        raise ProtocolError(
            f"bridge PNG is {image.width}x{image.height}, "
            f"expected {layout.resolution}x{layout.resolution}"
        )
    return image


def remote_detect(endpoint: str, image: Image, categories: list[str],
                  confidence: float = 0.3, api_key: str | None = None,
                  timeout: float = DEFAULT_TIMEOUT) -> DetectionReport:
    """Ask the bridge detector for per-category counts on a PNG."""
    url = endpoint.rstrip("/") + "/detect"
    body = {
        "image": base64.b64encode(image.to_png()).decode("ascii"),
        "categories": list(categories),
        "confidence": float(confidence),
    }
    headers = {}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    try:
        resp = requests.post(url, json=body, headers=headers, timeout=timeout)
    except requests.RequestException as exc:
        raise TransportError(f"detect call failed: {exc}") from exc
    if resp.status_code == 422:
        raise ProtocolError(f"bridge rejected detect payload: {resp.text[:200]}")
    if resp.status_code != 200:
        raise TransportError(f"detect returned {resp.status_code}")
    try:
        data = resp.json()
    except ValueError as exc:
        raise ProtocolError(f"detect response is not JSON: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("counts"), dict):
        raise ProtocolError("detect response lacks a 'counts' object")
    try:
        return DetectionReport.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"detect response schema mismatch: {exc}") from exc


class RemoteBackend:
    """Generator/detector backed by the bridge wire protocol. The aesthetic
    score stays local (geometry-based) since the wire carries none. At most
    max_inflight requests run concurrently across threads."""

    name = "remote"

    def __init__(self, endpoint: str, api_key: str | None = None,
                 steps: int = GENERATE_STEPS_DEFAULT, confidence: float = 0.3,
                 timeout: float = DEFAULT_TIMEOUT,
                 max_inflight: int = MAX_INFLIGHT_DEFAULT):
        self.endpoint = endpoint
        self.api_key = api_key
        self.steps = steps
        self.confidence = confidence
        self.timeout = timeout
        self._gate = threading.BoundedSemaphore(max_inflight)

    def generate(self, layout: Layout, prompt_d: str, prompt_bg: str,
                 seed: int) -> tuple[Image, None]:
        with self._gate:
            image = remote_generate(
                self.endpoint, layout, prompt_d, prompt_bg, seed,
                steps=self.steps, api_key=self.api_key, timeout=self.timeout,
            )
        return image, None

    def detect(self, image: Image, manifest, categories: list[str],
               confidence: float | None = None) -> DetectionReport:
        with self._gate:
            return remote_detect(
                self.endpoint, image, categories,
                confidence=self.confidence if confidence is None else confidence,
                api_key=self.api_key, timeout=self.timeout,
            )

    def aesthetic(self, layout: Layout, image: Image | None = None) -> float:
        from .sim import sim_aesthetic

        return sim_aesthetic(layout, image)


# --- LLM planner / critic roles ------------------------------------------------

PLANNER_SYSTEM = """You are a layout designer that converts scene prompts into spatial layouts.

Rules:
1. Assign natural, non-grid positions.
2. Include depth information (d) and proportional sizes.
3. Output ONLY valid JSON matching this schema:
{
  "objects": [{"id": "cat_1", "pos": [x, y], "d": depth, "size": [w, h],
               "color": "optional", "attributes": ["optional"]}],
  "relations": [{"from": "id", "to": "id", "relation": "above|below|left-of|right-of|near|on",
                 "dist": pixels, "angle": degrees}],
  "context": "background description"
}
Positions and sizes are normalized to [0, 1]; y grows downward. Node ids are
"<category>_<k>" with k counting from 1 per category.

Example for "2 cats and 1 bird in the sky":
{
  "objects": [
    {"id": "cat_1", "pos": [0.3, 0.6], "d": 0.4, "size": [0.2, 0.25]},
    {"id": "cat_2", "pos": [0.6, 0.65], "d": 0.4, "size": [0.22, 0.27]},
    {"id": "bird_1", "pos": [0.5, 0.3], "d": 0.2, "size": [0.15, 0.1]}
  ],
  "relations": [
    {"from": "cat_1", "to": "bird_1", "relation": "below", "dist": 120, "angle": 90},
    {"from": "cat_2", "to": "bird_1", "relation": "below", "dist": 100, "angle": 85}
  ],
  "context": "outdoor, grassy field"
}"""

CRITIC_SYSTEM = """You are a design critic that evaluates generated images against prompts and
emits structured refinement feedback.

Rules:
- Use the reference metrics provided; identify SPECIFIC issues with object ids.
- Prioritize count accuracy issues.
- Output ONLY valid JSON matching this schema:
{
  "evaluation": {
    "count_accuracy": {"detected": {"<category>": int}, "target": {"<category>": int}},
    "spatial_quality": float
  },
  "issues": [{"type": "count|spatial|attribute", "severity": "critical|major|minor",
              "description": "...", "suggested_fix": "..."}],
  "decision": {"continue_refinement": bool, "reason": "..."}
}"""


class LlmPlanner:
    """Layout-designer role over the chat wire; replies are decoded with the
    planning-graph codec and validated before use."""

    def __init__(self, endpoint: str, model: str, api_key: str | None = None,
                 timeout: float = DEFAULT_TIMEOUT, backoff: float = 0.5):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self.backoff = backoff

    def plan(self, spec: PromptSpec) -> PlanningGraph:
        targets = ", ".join(f"{v} x {k}" for k, v in spec.targets.items())
        user = (
            f"Prompt: {spec.raw!r}\n"
            f"Required instance counts: {targets}\n"
            "Return the layout JSON now."
        )
        reply = llm_chat(
            self.endpoint, self.model,
            [{"role": "system", "content": PLANNER_SYSTEM},
             {"role": "user", "content": user}],
            api_key=self.api_key, timeout=self.timeout, backoff=self.backoff,
        )
        from ..prompting import iter_json_objects

        for obj in iter_json_objects(reply):
            if isinstance(obj.get("objects"), list):
                graph = decode_graph(obj)
                problems = validate_graph(graph)
                if problems:
                    raise BackendError(
                        f"LLM layout failed validation: {problems[0].message}"
                    )
                return graph
        raise BackendError("LLM reply contained no layout JSON")


class LlmCritic:
    """Design-critic role over the chat wire. The caller is expected to
    overwrite count fields with detector-authoritative numbers afterwards
    (see critic.override_counts)."""

    def __init__(self, endpoint: str, model: str, api_key: str | None = None,
                 timeout: float = DEFAULT_TIMEOUT, backoff: float = 0.5):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self.backoff = backoff

    def review(self, prompt_text: str, graph: PlanningGraph, layout: Layout,
               detected: dict[str, int], targets: dict[str, int],
               s_a: float, score: float):
        reference = {
            "detected": detected,
            "target": targets,
            "aesthetic_score": s_a,
            "composite_score": score,
        }
        user = (
            f"Prompt: {prompt_text!r}\n"
            f"Reference metrics: {json.dumps(reference, sort_keys=True)}\n"
            f"Current layout (text form):\n{graph_to_prompt(graph)}\n"
            "Return the critique JSON now."
        )
        reply = llm_chat(
            self.endpoint, self.model,
            [{"role": "system", "content": CRITIC_SYSTEM},
             {"role": "user", "content": user}],
            api_key=self.api_key, timeout=self.timeout, backoff=self.backoff,
        )
        from ..critic import parse_critic_json

        return parse_critic_json(reply)


__all__ = [
    "llm_chat", "remote_generate", "remote_detect", "RemoteBackend",
    "LlmPlanner", "LlmCritic", "PLANNER_SYSTEM", "CRITIC_SYSTEM",
]
