"""Chat-completions client, transcript log and record/replay double."""

from __future__ import annotations

import json
import socket
import threading
import time
import urllib.error
import urllib.request
from collections import defaultdict, deque
from dataclasses import dataclass
from pathlib import Path


class TransportError(RuntimeError):
    """Endpoint unreachable, timed out, or answered with a protocol error."""


@dataclass(frozen=True)
class EndpointConfig:
    url: str = "http://localhost:11434/v1/chat/completions"
    model: str = "qwen2.5:7b"
    timeout: float = 30.0
    temperature: float = 0.0


class Transcript:
    """Append-only log of LLM exchanges; optionally mirrored to a JSONL file."""

    def __init__(self, path=None, clock=time.time):
        self.path = Path(path) if path else None
        self.records: list[dict] = []
        self._lock = threading.Lock()
        self._clock = clock

    def append(self, level: str, prompt: str, raw: str, validated: list, retries: int) -> dict:
        rec = {
            "timestamp": self._clock(),
            "level": level,
            "prompt": prompt,
            "raw": raw,
            "validated": list(validated),
            "retries": retries,
        }
        with self._lock:
            self.records.append(rec)
            if self.path is not None:
                with self.path.open("a") as fh:
                    fh.write(json.dumps(rec) + "\n")
        return rec

    @staticmethod
    def read(path) -> list[dict]:
        return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]


class LLMClient:
    """Single-turn requests against an OpenAI/Ollama-style chat endpoint."""

    def __init__(self, config: EndpointConfig):
        self.config = config
        self._lock = threading.Lock()

    def complete(self, prompt: str) -> str:
        body = json.dumps(
            {
                "model": self.config.model,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": self.config.temperature,
                "stream": False,
            }
        ).encode()
        req = urllib.request.Request(
            self.config.url, data=body, headers={"Content-Type": "application/json"}, method="POST"
        )
        with self._lock:
            try:
                with urllib.request.urlopen(req, timeout=self.config.timeout) as resp:
                    payload = resp.read()
            except urllib.error.HTTPError as exc:
                raise TransportError(f"endpoint returned HTTP {exc.code}") from exc
            except (urllib.error.URLError, socket.timeout, ConnectionError, OSError) as exc:
                raise TransportError(f"endpoint unreachable: {exc}") from exc
        try:
            return json.loads(payload)["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError("malformed chat-completions response") from exc


class ReplayClient:
    """Serves replies recorded in a transcript, matched by prompt text in order."""

    def __init__(self, records):
        self._queues: dict[str, deque] = defaultdict(deque)
        for rec in records:
            self._queues[rec["prompt"]].append(rec["raw"])

    @classmethod
    def from_file(cls, path) -> "ReplayClient":
        return cls(Transcript.read(path))

    def complete(self, prompt: str) -> str:
        queue = self._queues.get(prompt)
        if not queue:
            raise TransportError("no recorded reply for prompt")
        return queue.popleft()
