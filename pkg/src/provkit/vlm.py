"""Vision-chat clients and the call transcript.

Any endpoint that accepts a text prompt plus attached images and
returns text can drive the reasoning phases. Every call made through
:class:`TranscribingClient` is recorded in full (prompt, image digests,
response) so downstream behavior is auditable from the transcript
alone.

The mock client used in tests and offline demos looks responses up by
the SHA-256 of the rendered prompt and image digests, replaying canned
documents from a fixture file; it is deterministic by construction.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

import requests

from .errors import VlmTransportError


@runtime_checkable
class VlmClient(Protocol):
    model: str

    def chat(self, prompt: str, images: Sequence[bytes]) -> str: ...


def call_key(prompt: str, images: Sequence[bytes]) -> str:
    """SHA-256 over the rendered prompt and the digest of each image."""
    h = hashlib.sha256()
    h.update(prompt.encode("utf-8"))
    for img in images:
        h.update(b"\x00")
        h.update(hashlib.sha256(img).digest())
    return h.hexdigest()


@dataclass
class TranscriptEntry:
    phase: str  # "interpret" | "synthesize"
    label: str | None
    attempt: int  # 0 = first call, 1 = corrective retry
    prompt: str
    prompt_sha256: str
    image_sha256: list[str]
    response: str


@dataclass
class Transcript:
    entries: list[TranscriptEntry] = field(default_factory=list)

    def record(self, entry: TranscriptEntry) -> None:
        self.entries.append(entry)

    def calls(self, phase: str) -> list[TranscriptEntry]:
        return [e for e in self.entries if e.phase == phase]

    def to_records(self) -> list[dict]:
        return [
            {
                "phase": e.phase,
                "label": e.label,
                "attempt": e.attempt,
                "prompt_sha256": e.prompt_sha256,
                "image_sha256": list(e.image_sha256),
                "prompt": e.prompt,
                "response": e.response,
            }
            for e in self.entries
        ]


class TranscribingClient:
    """Wraps a VlmClient so every exchange lands in a Transcript."""

    def __init__(self, inner: VlmClient, transcript: Transcript):
        self.inner = inner
        self.transcript = transcript
        self.model = inner.model

    def chat_recorded(
        self, prompt: str, images: Sequence[bytes], phase: str, label: str | None, attempt: int
    ) -> str:
        response = self.inner.chat(prompt, images)
        self.transcript.record(
            TranscriptEntry(
                phase=phase,
                label=label,
                attempt=attempt,
                prompt=prompt,
                prompt_sha256=hashlib.sha256(prompt.encode("utf-8")).hexdigest(),
                image_sha256=[hashlib.sha256(img).hexdigest() for img in images],
                response=response,
            )
        )
        return response


class MockVlmClient:
    """Replays canned responses keyed by call_key(prompt, images).

    A key may map to a single response or to a list consumed in call
    order (for exercising retry paths). Unknown keys raise KeyError with
    the offending key so fixtures are easy to extend.
    """

    model = "mock"

    def __init__(self, responses: dict[str, str | list[str]]):
        self._responses = dict(responses)
        self._cursor: dict[str, int] = {}

    @classmethod
    def from_file(cls, path: str | Path) -> "MockVlmClient":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def chat(self, prompt: str, images: Sequence[bytes]) -> str:
        key = call_key(prompt, images)
        if key not in self._responses:
            raise KeyError(f"no canned response for call key {key}")
        value = self._responses[key]
        if isinstance(value, str):
            return value
        i = self._cursor.get(key, 0)
        self._cursor[key] = min(i + 1, len(value) - 1)
        return value[i]


class RemoteVlmClient:
    """OpenAI-style chat-completions client with image attachments.

    POSTs to ``{base}/chat/completions`` with the rendered prompt as one
    user message whose content interleaves text and base64 data-URI
    images. Deterministic decode settings (temperature 0, fixed seed)
    are requested; endpoint and credentials come from VLM_API_BASE and
    VLM_API_KEY unless given explicitly.
    """

    def __init__(
        self,
        endpoint: str | None = None,
        api_key: str | None = None,
        model: str = "gpt-4o",
        session: requests.Session | None = None,
        timeout: float = 120.0,
        retries: int = 2,
        backoff: float = 0.5,
    ):
        endpoint = endpoint or os.environ.get("VLM_API_BASE")
        if not endpoint:
            raise ValueError("no vision-chat endpoint: pass endpoint or set VLM_API_BASE")
        self.endpoint = endpoint.rstrip("/")
        self.api_key = api_key or os.environ.get("VLM_API_KEY", "")
        self.model = model
        self._session = session or requests.Session()
        self._timeout = timeout
        self._retries = retries
        self._backoff = backoff

    def _payload(self, prompt: str, images: Sequence[bytes]) -> dict:
        import base64

        content: list[dict] = [{"type": "text", "text": prompt}]
        for img in images:
            b64 = base64.b64encode(img).decode("ascii")
            content.append(
                {"type": "image_url", "image_url": {"url": f"data:image/png;base64,{b64}"}}
            )
        return {
            "model": self.model,
            "messages": [{"role": "user", "content": content}],
            "temperature": 0,
            "top_p": 1,
            "seed": 0,
        }

    def chat(self, prompt: str, images: Sequence[bytes]) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = self._payload(prompt, images)
        attempt = 0
        while True:
            try:
                resp = self._session.post(
                    f"{self.endpoint}/chat/completions",
                    json=payload,
                    headers=headers,
                    timeout=self._timeout,
                )
                if resp.status_code >= 500:
                    raise VlmTransportError(f"vision endpoint returned {resp.status_code}")
                resp.raise_for_status()
                body = resp.json()
                return body["choices"][0]["message"]["content"]
            except (requests.RequestException, VlmTransportError, KeyError, ValueError) as exc:
                if attempt >= self._retries:
                    raise VlmTransportError(f"vision endpoint failed: {exc}") from exc
                time.sleep(self._backoff * (2**attempt))
                attempt += 1
