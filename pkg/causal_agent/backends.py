"""Model backends: chat-completion over HTTP, scripted replay, and a rule-based oracle policy."""

from __future__ import annotations

import asyncio
import json
import logging
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Literal, Optional, Protocol, Sequence

import httpx
from pydantic import BaseModel, Field

from . import tools as tool_names

if TYPE_CHECKING:
    from .agent import Transcript

logger = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://api.openai.com/v1"
DEFAULT_MODEL = "gpt-3.5-turbo"


class BackendError(RuntimeError):
    """Raised when a backend cannot produce a model output."""


class ChatBackend(Protocol):
    async def complete(self, prompt: str, transcript: "Transcript") -> str: ...


class BackendConfig(BaseModel):
    """Backend selection and generation settings.

    Credentials come from ``CAUSAL_AGENT_API_KEY`` (or ``OPENAI_API_KEY``); the
    endpoint and model from ``CAUSAL_AGENT_BASE_URL`` and ``CAUSAL_AGENT_MODEL``.
    """

    mode: Literal["http", "scripted", "oracle"] = "http"
    base_url: str = DEFAULT_BASE_URL
    model: str = DEFAULT_MODEL
    temperature: float = Field(0.5, ge=0.0)
    max_iterations: int = Field(10, ge=1)
    api_key: Optional[str] = Field(None, repr=False)
    timeout: float = Field(60.0, gt=0.0)
    retries: int = Field(3, ge=1)
    backoff: float = Field(1.0, ge=0.0)
    replay: Optional[Path] = None
    icl: bool = False

    @classmethod
    def from_env(cls, **overrides) -> "BackendConfig":
        values = {
            "base_url": os.environ.get("CAUSAL_AGENT_BASE_URL", DEFAULT_BASE_URL),
            "model": os.environ.get("CAUSAL_AGENT_MODEL", DEFAULT_MODEL),
            "api_key": os.environ.get("CAUSAL_AGENT_API_KEY") or os.environ.get("OPENAI_API_KEY"),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class HttpChatBackend:
    """OpenAI-compatible chat-completion client; one user message per call."""

    def __init__(self, config: BackendConfig, client: httpx.AsyncClient | None = None):
        """Initialize the backend.

        Args:
            config: Endpoint, model, temperature and retry settings
            client: Optional preconfigured client (tests pass a mock transport)
        """
        self.config = config
        headers = {"Authorization": f"Bearer {config.api_key}"} if config.api_key else {}
        self.client = client or httpx.AsyncClient(
            base_url=config.base_url.rstrip("/"), timeout=config.timeout, headers=headers
        )

    async def complete(self, prompt: str, transcript: "Transcript | None" = None) -> str:
        payload = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "stop": ["\nObservation:"],
        }
        last_error: Exception | None = None
        for attempt in range(self.config.retries):
            if attempt:
                delay = self.config.backoff * 2 ** (attempt - 1)
                logger.warning("chat request failed (%s), retry %d in %.1fs", last_error, attempt, delay)
                await asyncio.sleep(delay)
            try:
                response = await self.client.post("/chat/completions", json=payload)
                if response.status_code == 429 or response.status_code >= 500:
                    last_error = BackendError(f"HTTP {response.status_code}")
                    continue
                response.raise_for_status()
                return response.json()["choices"][0]["message"]["content"]
            except httpx.HTTPStatusError as e:
                raise BackendError(f"chat endpoint rejected the request: {e}") from e
            except (httpx.TransportError, KeyError, IndexError, ValueError) as e:
                last_error = e
        raise BackendError(f"chat endpoint failed after {self.config.retries} attempts: {last_error}")

    async def close(self) -> None:
        await self.client.aclose()

    async def __aenter__(self) -> "HttpChatBackend":
        return self

    async def __aexit__(self, *exc) -> None:
        await self.close()


class ScriptedBackend:
    """Replays model outputs in order, one per call."""

    def __init__(self, outputs: Sequence[str]):
        self.outputs = list(outputs)
        self.calls = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedBackend":
        """Load a replay file: a JSON array of model-output strings."""
        path = Path(path)
        try:
            outputs = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as e:
            raise BackendError(f"cannot read replay file {path}: {e}") from e
        if not isinstance(outputs, list) or not all(isinstance(o, str) for o in outputs):
            raise BackendError(f"replay file {path} must hold a JSON array of strings")
        return cls(outputs)

    async def complete(self, prompt: str, transcript: "Transcript | None" = None) -> str:
        if self.calls >= len(self.outputs):
            raise BackendError(f"replay exhausted after {len(self.outputs)} outputs")
        output = self.outputs[self.calls]
        self.calls += 1
        return output


@dataclass(frozen=True)
class OracleTask:
    """What the oracle policy needs to know about a question.

    Attributes:
        category: Question category value (IT, CIT, ..., ATE)
        file_name: Data file the question refers to
        variables: The two variables of variable- and edge-level questions,
            the subset of a partial graph, or [treatment, outcome] for ATE
        conditions: Conditioning variables of independence questions
        covariates: Covariates of ATE questions
        t0: Reference treatment value
        t1: Target treatment value
    """

    category: str
    file_name: str
    variables: tuple[str, ...] = ()
    conditions: tuple[str, ...] = ()
    covariates: tuple[str, ...] = field(default_factory=tuple)
    t0: float = 0.0
    t1: float = 1.0


_GRAPH_NAME = re.compile(r"causal graph named '(?P<name>[^']*)'")
_ATE_VALUE = re.compile(r" is (?P<value>-?[0-9.]+(?:e[-+]?\d+)?)$")


def _step(thought: str, action: str, action_input: dict) -> str:
    return f"{thought}\nAction: {action}\nAction Input: {json.dumps(action_input, ensure_ascii=False)}"


def _final(thought: str, answer) -> str:
    return f"{thought}\nFinal Answer: {json.dumps({'answer': answer}, ensure_ascii=False)}"


def verdict_from_observation(category: str, observation: str) -> str | None:
    """Read a yes/no/uncertain verdict off a tool observation."""
    if observation.startswith("Error") or observation.startswith("unknown tool"):
        return None
    text = observation.lower()
    if category in ("IT", "CIT", "MULTCIT"):
        return "no" if "is not independent" in text else "yes"
    if "uncertain" in text:
        return "uncertain"
    if category == "CAUSE":
        return "yes" if " is a cause of " in text else "no"
    if category == "COLLIDER":
        return "yes" if text.startswith("there exists at least one collider") else "no"
    if category == "CONF":
        return "yes" if text.startswith("yes") else "no"
    return None


class OraclePolicyBackend:
    """Emits the canonical tool sequence for a task and answers from the last observation."""

    def __init__(self, task: OracleTask):
        self.task = task

    def _generate(self, partial: bool) -> str:
        args = {"filename": self.task.file_name, "analyse relationship": "False" if partial else "True"}
        if partial:
            args["interesting var"] = list(self.task.variables)
        return _step("I need to generate the causal graph first", tool_names.GENERATE_CAUSAL, args)

    async def complete(self, prompt: str, transcript: "Transcript") -> str:
        task = self.task
        steps = transcript.steps
        last = steps[-1].observation if steps else ""
        pair = list(task.variables[:2])

        if task.category in ("IT", "CIT", "MULTCIT"):
            if not steps:
                return _step(
                    "I need to test the independence of the two variables",
                    tool_names.CONDITION_INDEPENDENT_TEST,
                    {"filename": task.file_name, "interesting var": pair, "condition": list(task.conditions)},
                )
            return _final("I now know the final answer", verdict_from_observation(task.category, last))

        if task.category in ("CAUSE", "COLLIDER", "CONF"):
            if not steps:
                return self._generate(partial=False)
            if len(steps) == 1:
                match = _GRAPH_NAME.search(last)
                if match is None:
                    return _final("The causal graph could not be generated", None)
                tool = {
                    "CAUSE": tool_names.DETERMINE_EDGE_DIRECTIONS,
                    "COLLIDER": tool_names.DETERMINE_COLLIDER,
                    "CONF": tool_names.DETERMINE_CONFOUNDER,
                }[task.category]
                return _step(
                    "I need to analyse the relationship in the causal graph",
                    tool,
                    {"cg name": match.group("name"), "interesting var": pair},
                )
            return _final("I now know the final answer", verdict_from_observation(task.category, last))

        if task.category in ("TOTAL", "PARTIAL"):
            if not steps:
                return self._generate(partial=task.category == "PARTIAL")
            match = _GRAPH_NAME.search(last)
            return _final("I now know the final answer", match.group("name") if match else None)

        if task.category == "ATE":
            if not steps:
                treatment, outcome = task.variables[:2]
                config = {
                    "Y": [outcome],
                    "T": [treatment],
                    "X": list(task.covariates),
                    "T0": task.t0,
                    "T1": task.t1,
                }
                return _step(
                    "I need to calculate the average treatment effect",
                    tool_names.CALCULATE_CATE,
                    {"filename": task.file_name, "config": config},
                )
            match = _ATE_VALUE.search(last.strip())
            return _final("I now know the final answer", float(match.group("value")) if match else None)

        raise BackendError(f"oracle policy has no plan for category '{task.category}'")


def build_backend(config: BackendConfig, task: OracleTask | None = None) -> ChatBackend:
    """Backend for a configuration; the oracle policy needs the task it answers."""
    if config.mode == "http":
        return HttpChatBackend(config)
    if config.mode == "scripted":
        if config.replay is None:
            raise BackendError("scripted mode needs a replay file")
        return ScriptedBackend.from_file(config.replay)
    if task is None:
        raise BackendError("oracle mode needs the task it answers")
    return OraclePolicyBackend(task)
