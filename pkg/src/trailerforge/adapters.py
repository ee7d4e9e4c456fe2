"""Uniform client for external model backends plus deterministic built-in stubs.

Wire protocol: one JSON line per request, one JSON line back.
Request:  {"op": ..., "payload": {...}, "request_id": ..., "proto": "v1"}
Response: {"request_id": ..., "ok": true, "payload": {...}}
          {"request_id": ..., "ok": false, "error": "..."}
"""

from __future__ import annotations

import json
import os
import select
import subprocess
import time
from collections import deque
from pathlib import Path

from .errors import AdapterFailure, SchemaError
from .textmetrics import content_tokens, embed, fit_tfidf, load_stopwords, tokenize

PROTO_VERSION = "v1"
CAPABILITIES = ("title", "hier_titles", "embed", "paraphrase", "classify_definition", "tts")
DEFAULT_TIMEOUT_S = 10.0
DEFAULT_RETRIES = 2


class _TransportError(Exception):
    """Retryable backend failure: timeout, dead process, malformed response."""


def build_request(op: str, payload: dict, request_id: str) -> dict:
    return {"op": op, "payload": payload, "request_id": request_id, "proto": PROTO_VERSION}


def payload_key(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, ensure_ascii=False)


# ---------------------------------------------------------------------------
# Built-in stubs


_STOPWORDS_CACHE: frozenset[str] | None = None


def _stopwords() -> frozenset[str]:
    global _STOPWORDS_CACHE
    if _STOPWORDS_CACHE is None:
        _STOPWORDS_CACHE = load_stopwords()
    return _STOPWORDS_CACHE


def _title_case(tokens: list[str]) -> str:
    return " ".join(tok[:1].upper() + tok[1:] for tok in tokens)


def stub_title(payload: dict) -> dict:
    text = payload["text"]
    tokens = content_tokens(text, _stopwords())[:6]
    if not tokens:
        tokens = tokenize(text)[:6]
    return {"title": _title_case(tokens) if tokens else "Untitled"}


def stub_hier_titles(payload: dict) -> dict:
    first_paragraphs = [text.split("\n\n")[0] for text in payload["texts"]]
    combined = " ".join(first_paragraphs)
    return {"titles": [stub_title({"text": combined})["title"]]}


def stub_embed(payload: dict) -> dict:
    texts = payload["texts"]
    state = fit_tfidf([tokenize(t) for t in texts])
    vectors = [list(embed(state, t).values) for t in texts]
    return {"vectors": vectors, "dim": len(state.vocabulary)}


def stub_paraphrase(payload: dict) -> dict:
    from .fragments import word_truncate

    return {"text": word_truncate(payload["text"], int(payload["max_chars"]))}


def stub_classify_definition(payload: dict) -> dict:
    from .fragments import definition_label

    label, score = definition_label(payload["text"])
    return {"label": label, "score": score}


def stub_tts(payload: dict) -> dict:
    from .composition import DEFAULT_SPEAKING_RATE_WPM, estimate_speech_duration

    rate = float(payload.get("speaking_rate_wpm", DEFAULT_SPEAKING_RATE_WPM))
    return {"audio_path": None, "duration_s": estimate_speech_duration(payload["text"], rate)}


_STUBS = {
    "title": stub_title,
    "hier_titles": stub_hier_titles,
    "embed": stub_embed,
    "paraphrase": stub_paraphrase,
    "classify_definition": stub_classify_definition,
    "tts": stub_tts,
}


# ---------------------------------------------------------------------------
# Response schema validation (shared by conformance tests and bridge checks)


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def response_schema_errors(op: str, payload) -> list[str]:
    """Schema findings for one response payload; empty list means conformant."""
    errs: list[str] = []
    if not isinstance(payload, dict):
        return [f"{op}: payload must be an object"]
    if op == "title":
        if not isinstance(payload.get("title"), str):
            errs.append("title: field 'title' must be a string")
    elif op == "hier_titles":
        titles = payload.get("titles")
        if not isinstance(titles, list) or not titles or any(not isinstance(t, str) for t in titles):
            errs.append("hier_titles: field 'titles' must be a non-empty list of strings")
    elif op == "embed":
        vectors = payload.get("vectors")
        dim = payload.get("dim")
        if not isinstance(dim, int) or isinstance(dim, bool) or dim < 0:
            errs.append("embed: field 'dim' must be a non-negative integer")
        if not isinstance(vectors, list):
            errs.append("embed: field 'vectors' must be a list")
        else:
            for i, row in enumerate(vectors):
                if not isinstance(row, list) or any(not _is_number(x) for x in row):
                    errs.append(f"embed: vectors[{i}] must be a list of numbers")
                elif isinstance(dim, int) and not isinstance(dim, bool) and len(row) != dim:
                    errs.append(f"embed: vectors[{i}] length {len(row)} != dim {dim}")
    elif op == "paraphrase":
        if not isinstance(payload.get("text"), str):
            errs.append("paraphrase: field 'text' must be a string")
    elif op == "classify_definition":
        if payload.get("label") not in ("definition", "non_definition"):
            errs.append("classify_definition: field 'label' must be definition|non_definition")
        score = payload.get("score")
        if not _is_number(score) or not 0 <= score <= 1:
            errs.append("classify_definition: field 'score' must be a number in [0,1]")
    elif op == "tts":
        audio = payload.get("audio_path", "missing")
        if audio is not None and not isinstance(audio, str):
            errs.append("tts: field 'audio_path' must be a string or null")
        duration = payload.get("duration_s")
        if not _is_number(duration) or duration < 0:
            errs.append("tts: field 'duration_s' must be a non-negative number")
    else:
        errs.append(f"unknown op '{op}'")
    return errs


# ---------------------------------------------------------------------------
# Record / replay cassettes


class Cassette:
    """Ordered (op, payload) -> response recording for hermetic replays."""

    def __init__(self, entries: list[dict] | None = None):
        self.entries: list[dict] = entries or []

    @classmethod
    def load(cls, path: str | Path) -> "Cassette":
        payload = json.loads(Path(path).read_text("utf-8"))
        if not isinstance(payload, list):
            raise SchemaError("cassette file must contain a JSON list")
        return cls(entries=payload)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.entries, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            "utf-8",
        )

    def record(self, op: str, payload: dict, response: dict) -> None:
        self.entries.append({"op": op, "payload": payload, "response": response})

    def build_queues(self) -> dict[tuple[str, str], deque]:
        queues: dict[tuple[str, str], deque] = {}
        for entry in self.entries:
            key = (entry["op"], payload_key(entry["payload"]))
            queues.setdefault(key, deque()).append(entry["response"])
        return queues


# ---------------------------------------------------------------------------
# Subprocess backend: one persistent child, strict request/response alternation


class _LineProcess:
    def __init__(self, cmd: list[str]):
        self.cmd = cmd
        self.proc = subprocess.Popen(
            cmd,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
        )
        self._buffer = b""

    def transact(self, line: str, timeout_s: float) -> str:
        try:
            self.proc.stdin.write(line.encode("utf-8") + b"\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise _TransportError(f"backend process closed stdin: {exc}") from exc
        deadline = time.monotonic() + timeout_s
        fd = self.proc.stdout.fileno()
        while b"\n" not in self._buffer:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise _TransportError(f"backend timed out after {timeout_s:g}s")
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                raise _TransportError(f"backend timed out after {timeout_s:g}s")
            chunk = os.read(fd, 65536)
            if not chunk:
                raise _TransportError("backend closed its output stream")
            self._buffer += chunk
        raw, self._buffer = self._buffer.split(b"\n", 1)
        return raw.decode("utf-8")

    def close(self) -> None:
        if self.proc.poll() is None:
            self.proc.kill()
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            pass
        for stream in (self.proc.stdin, self.proc.stdout):
            if stream is not None:
                try:
                    stream.close()
                except OSError:
                    pass


# ---------------------------------------------------------------------------
# Registry


class AdapterRegistry:
    """Resolves each capability to a backend and performs protocol calls."""

    def __init__(
        self,
        backends: dict | None = None,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        retries: int = DEFAULT_RETRIES,
    ):
        self.timeout_s = timeout_s
        self.retries = retries
        self._backends: dict[str, object] = {}
        backends = backends or {}
        for capability in CAPABILITIES:
            self._backends[capability] = backends.get(capability, "stub")
        for capability, spec in backends.items():
            if capability not in CAPABILITIES:
                raise SchemaError(f"adapters config names unknown capability '{capability}'")
            _validate_backend_spec(capability, spec)
        self._children: dict[tuple[str, ...], _LineProcess] = {}
        self._request_count = 0
        self._recording: Cassette | None = None
        self._replay_queues: dict | None = None

    @classmethod
    def builtin(cls, **kwargs) -> "AdapterRegistry":
        return cls(backends=None, **kwargs)

    @classmethod
    def from_config(cls, path: str | Path) -> "AdapterRegistry":
        payload = json.loads(Path(path).read_text("utf-8"))
        if not isinstance(payload, dict):
            raise SchemaError("adapters config must be a JSON object")
        timeout_s = payload.pop("timeout_s", DEFAULT_TIMEOUT_S)
        retries = payload.pop("retries", DEFAULT_RETRIES)
        backends = {}
        for capability, spec in payload.items():
            if isinstance(spec, dict) and set(spec) == {"backend"}:
                spec = spec["backend"]
            backends[capability] = spec
        return cls(backends=backends, timeout_s=float(timeout_s), retries=int(retries))

    def backend_for(self, capability: str):
        return self._backends[capability]

    def start_recording(self, cassette: Cassette | None = None) -> Cassette:
        self._recording = cassette or Cassette()
        return self._recording

    def use_replay(self, cassette: Cassette) -> None:
        self._replay_queues = cassette.build_queues()

    def next_request_id(self) -> str:
        self._request_count += 1
        return f"r{self._request_count}"

    def call(self, capability: str, payload: dict) -> dict:
        if capability not in self._backends:
            raise AdapterFailure(capability, "capability not registered")

        if self._replay_queues is not None:
            key = (capability, payload_key(payload))
            queue = self._replay_queues.get(key)
            if not queue:
                raise AdapterFailure(capability, "no recorded response for this request")
            response = queue.popleft()
            return self._unwrap(capability, response, request_id=None)

        spec = self._backends[capability]
        attempts = self.retries + 1
        last_error = "no attempts made"
        for _ in range(attempts):
            request_id = self.next_request_id()
            request = build_request(capability, payload, request_id)
            try:
                response = self._invoke(spec, request)
                result = self._unwrap(capability, response, request_id)
            except _TransportError as exc:
                last_error = str(exc)
                continue
            if self._recording is not None:
                self._recording.record(capability, payload, response)
            return result
        raise AdapterFailure(capability, f"{attempts} attempts failed; last: {last_error}")

    def _unwrap(self, capability: str, response, request_id: str | None) -> dict:
        if not isinstance(response, dict):
            raise _TransportError("response is not a JSON object")
        if request_id is not None and response.get("request_id") != request_id:
            raise _TransportError(
                f"response id {response.get('request_id')!r} does not echo {request_id!r}"
            )
        if "ok" not in response:
            raise _TransportError("response lacks 'ok' field")
        if response["ok"] is not True:
            # A structured refusal is a definitive answer, not a transport
            # fault; retrying the same request would return the same refusal.
            raise AdapterFailure(capability, str(response.get("error", "backend refused")))
        payload = response.get("payload")
        if not isinstance(payload, dict):
            raise _TransportError("response 'payload' missing or not an object")
        return payload

    def _invoke(self, spec, request: dict) -> dict:
        if spec == "stub":
            return self._invoke_stub(request)
        if isinstance(spec, dict) and "cmd" in spec:
            return self._invoke_cmd(tuple(spec["cmd"]), request)
        if isinstance(spec, dict) and "url" in spec:
            return self._invoke_http(spec["url"], request)
        raise _TransportError(f"unusable backend spec: {spec!r}")

    def _invoke_stub(self, request: dict) -> dict:
        op = request["op"]
        handler = _STUBS.get(op)
        if handler is None:
            return {"request_id": request["request_id"], "ok": False, "error": f"unknown op '{op}'"}
        payload = handler(request["payload"])
        return {"request_id": request["request_id"], "ok": True, "payload": payload}

    def _invoke_cmd(self, cmd: tuple[str, ...], request: dict) -> dict:
        child = self._children.get(cmd)
        if child is None or child.proc.poll() is not None:
            if child is not None:
                child.close()
            child = _LineProcess(list(cmd))
            self._children[cmd] = child
        try:
            raw = child.transact(json.dumps(request, ensure_ascii=False), self.timeout_s)
            return json.loads(raw)
        except json.JSONDecodeError as exc:
            # garbage output desynchronizes the line framing; restart the child
            child.close()
            self._children.pop(cmd, None)
            raise _TransportError(f"backend wrote invalid JSON: {exc}") from exc
        except _TransportError:
            child.close()
            self._children.pop(cmd, None)
            raise

    def _invoke_http(self, url: str, request: dict) -> dict:
        import requests

        try:
            http_response = requests.post(url, json=request, timeout=self.timeout_s)
        except requests.RequestException as exc:
            raise _TransportError(f"http backend unreachable: {exc}") from exc
        try:
            return http_response.json()
        except ValueError as exc:
            raise _TransportError(f"http backend wrote invalid JSON: {exc}") from exc

    def close(self) -> None:
        for child in self._children.values():
            child.close()
        self._children.clear()

    def __enter__(self) -> "AdapterRegistry":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def _validate_backend_spec(capability: str, spec) -> None:
    if spec == "stub":
        return
    if isinstance(spec, dict) and "cmd" in spec:
        cmd = spec["cmd"]
        if not isinstance(cmd, list) or not cmd or any(not isinstance(c, str) for c in cmd):
            raise SchemaError(f"adapters.{capability}: cmd must be a non-empty list of strings")
        return
    if isinstance(spec, dict) and "url" in spec:
        if not isinstance(spec["url"], str) or not spec["url"]:
            raise SchemaError(f"adapters.{capability}: url must be a non-empty string")
        return
    raise SchemaError(f"adapters.{capability}: backend must be 'stub', {{cmd}}, or {{url}}")
