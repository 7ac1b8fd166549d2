"""LLM client abstraction: a chat-completion HTTP backend and a
deterministic mock, interchangeable behind one ``complete(prompt)`` call.

Tests and the acceptance suite run entirely on the mock; the HTTP client
is the only piece that touches the network and reads its bearer token
from the SARA_LLM_API_KEY environment variable.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Protocol

API_KEY_ENV = "SARA_LLM_API_KEY"


class LLMTimeout(Exception):
    """The backend did not answer within the configured timeout."""


class LLMTransportError(Exception):
    """The request could not be delivered or the reply was unusable."""


class LLMClient(Protocol):
    model_name: str

    def complete(self, prompt: str) -> str:
        """Return the model's reply text. Raises LLMTimeout or
        LLMTransportError; an empty reply is returned as-is and judged
        by the caller."""
        ...


@dataclass
class MockLLMClient:
    """Deterministic offline stand-in: same request, same response.

    ``reply_fn`` maps the prompt to a reply; the default echoes a short
    tag with the prompt's first placeholder-ish line so tests can anchor
    on content. ``fail_times`` makes the first N calls raise timeouts,
    which is how the retry machinery is exercised.
    """

    reply_fn: Optional[Callable[[str], str]] = None
    fail_times: int = 0
    model_name: str = "mock-1"
    calls: List[str] = field(default_factory=list)
    _failures_left: int = field(init=False, default=0)

    def __post_init__(self):
        self._failures_left = self.fail_times

    def complete(self, prompt: str) -> str:
        self.calls.append(prompt)
        if self._failures_left > 0:
            self._failures_left -= 1
            raise LLMTimeout("mock timeout")
        if self.reply_fn is not None:
            return self.reply_fn(prompt)
        return f"MOCK[{_digest(prompt)}]"


def _digest(prompt: str) -> str:
    # Stable short token per prompt; enough to make distinct prompts
    # produce distinct replies without hauling the prompt around.
    import hashlib

    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:12]


@dataclass
class HttpChatClient:
    """Minimal chat-completion client (OpenAI-style JSON bodies)."""

    endpoint: str
    model_name: str = "gpt-4"
    timeout_s: float = 30.0
    api_key: Optional[str] = None

    def complete(self, prompt: str) -> str:
        import requests

        key = self.api_key or os.environ.get(API_KEY_ENV, "")
        headers = {"Content-Type": "application/json"}
        if key:
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": self.model_name,
            "messages": [{"role": "user", "content": prompt}],
        }
        try:
            resp = requests.post(
                self.endpoint, json=body, headers=headers, timeout=self.timeout_s
            )
        except requests.Timeout as e:
            raise LLMTimeout(str(e)) from e
        except requests.RequestException as e:
            raise LLMTransportError(str(e)) from e
        if resp.status_code != 200:
            raise LLMTransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as e:
            raise LLMTransportError(f"malformed completion response: {e}") from e
