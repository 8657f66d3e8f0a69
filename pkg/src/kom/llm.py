"""Pluggable LLM client: a remote HTTP backend and a deterministic mock.

Every agent in the pipeline talks through this interface; tests and
desk-scale runs use the mock, which never draws randomness outside its seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional


class LLMError(Exception):
    """Permanent backend failure."""


class TransientLLMError(LLMError):
    """Retryable backend failure; caller state must be unchanged."""


@dataclass(frozen=True)
class LLMClientConfig:
    backend: str = "mock"  # "mock" | "remote"
    endpoint: Optional[str] = None
    temperature: float = 0.8
    timeout_s: float = 30.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must lie in [0, 2]")
        if self.backend not in ("mock", "remote"):
            raise ValueError(f"unknown backend: {self.backend}")
        if self.backend == "remote" and not self.endpoint:
            raise ValueError("remote backend needs an endpoint")


class LLMClient:
    def complete(self, prompt: str) -> str:  # pragma: no cover - interface
        raise NotImplementedError


class RemoteLLMClient(LLMClient):
    """Minimal JSON-over-HTTP completion client."""

    def __init__(self, config: LLMClientConfig):
        self.config = config

    def complete(self, prompt: str) -> str:
        import urllib.error
        import urllib.request

        body = json.dumps(
            {"prompt": prompt, "temperature": self.config.temperature}
        ).encode("utf-8")
        request = urllib.request.Request(
            self.config.endpoint, data=body, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(request, timeout=self.config.timeout_s) as response:
                payload = json.loads(response.read().decode("utf-8"))
        except (urllib.error.URLError, TimeoutError) as exc:
            raise TransientLLMError(str(exc)) from exc
        if "text" not in payload:
            raise LLMError("backend response missing 'text'")
        return payload["text"]


class MockLLMClient(LLMClient):
    """Deterministic stand-in: routes prompts to a registered handler.

    Handlers receive the prompt and the seed and must be pure functions, so a
    fixed seed yields bit-identical transcripts.
    """

    def __init__(self, config: Optional[LLMClientConfig] = None):
        self.config = config or LLMClientConfig(backend="mock")
        self._handlers: list[tuple[Callable[[str], bool], Callable[[str, int], str]]] = []

    def register(self, matcher: Callable[[str], bool], handler: Callable[[str, int], str]) -> None:
        self._handlers.append((matcher, handler))

    def complete(self, prompt: str) -> str:
        for matcher, handler in self._handlers:
            if matcher(prompt):
                return handler(prompt, self.config.seed)
        raise LLMError("mock client has no handler for this prompt")


def make_client(config: LLMClientConfig) -> LLMClient:
    if config.backend == "mock":
        return MockLLMClient(config)
    return RemoteLLMClient(config)
