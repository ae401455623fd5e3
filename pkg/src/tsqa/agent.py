"""The question-answering loop and the language-model backends it talks to.

One query goes: system prompt + tool declarations + question to the
backend, every tool call it emits is filled, validated and dispatched, the
results are appended to the conversation, and the backend is asked again
until it answers in text. An empty answer restarts the whole query, up to
``AgentConfig.empty_output_retries`` times.
"""

from __future__ import annotations

import json
import logging
import os
import random
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Any, Iterable, Protocol, TextIO

import httpx

from .calls import ToolCall, ToolResult
from .errors import BackendTransportError, RegistryError, TsqaError
from .registry import Mode, ToolRegistry

log = logging.getLogger(__name__)

CHARS_PER_TOKEN = 4
RECOMMENDED_CONTEXT = 8192


@dataclass(frozen=True)
class AgentConfig:
    temperature: float = 0.0
    seed: int = 1
    context_budget_tokens: int = RECOMMENDED_CONTEXT
    max_generated_tokens: int = 512
    transport_retries: int = 2
    empty_output_retries: int = 5
    max_tool_rounds: int = 4
    endpoint: str | None = None
    model: str | None = None
    api_key_env: str = "OPENAI_API_KEY"

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must lie in [0, 2]")
        if self.transport_retries < 0 or self.empty_output_retries < 0:
            raise ValueError("retry counts must be >= 0")
        if self.max_generated_tokens <= 0 or self.context_budget_tokens <= 0:
            raise ValueError("token limits must be positive")
        if self.max_tool_rounds < 1:
            raise ValueError("max_tool_rounds must be >= 1")
        if self.context_budget_tokens < RECOMMENDED_CONTEXT:
            log.warning(
                "context budget %d is below %d tokens; tool declarations may not fit",
                self.context_budget_tokens, RECOMMENDED_CONTEXT,
            )

    def snapshot(self) -> dict[str, Any]:
        return asdict(self)


# -- backend protocol ----------------------------------------------------------------

@dataclass(frozen=True)
class RawToolCall:
    id: str
    name: str
    arguments: str | dict[str, Any]


@dataclass(frozen=True)
class AssistantTurn:
    content: str = ""
    tool_calls: tuple[RawToolCall, ...] = ()


@dataclass(frozen=True)
class RequestContext:
    """Per-request metadata. Real backends use only ``seed``; the mock uses the rest."""

    seed: int
    attempt: int = 0
    item_id: str | None = None


class Backend(Protocol):
    def complete(
        self, messages: list[dict[str, Any]], tools: list[dict[str, Any]],
        config: AgentConfig, context: RequestContext,
    ) -> AssistantTurn: ...


class BackendResponseError(TsqaError):
    """The backend answered, but not with something usable."""


class ChatCompletionsBackend:
    """Client for an OpenAI-style ``/chat/completions`` endpoint with function calling.

    The API key is read from the environment variable named in the config;
    it is never taken from the command line. ``extra_body`` is merged into
    every request (e.g. ``{"options": {"num_ctx": 8192}}`` for Ollama).
    """

    def __init__(
        self, endpoint: str, model: str, api_key_env: str | None = "OPENAI_API_KEY",
        timeout: float = 60.0, extra_body: dict[str, Any] | None = None,
        client: httpx.Client | None = None,
    ) -> None:
        self.url = endpoint.rstrip("/") + "/chat/completions"
        self.model = model
        self.api_key_env = api_key_env
        self.extra_body = dict(extra_body or {})
        self._client = client or httpx.Client(timeout=timeout)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env) if self.api_key_env else None
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def build_request(self, messages, tools, config: AgentConfig, context: RequestContext) -> dict[str, Any]:
        body: dict[str, Any] = {
            "model": self.model,
            "messages": messages,
            "temperature": config.temperature,
            "seed": context.seed,
            "max_tokens": config.max_generated_tokens,
        }
        if tools:
            body["tools"] = [_strip_extensions(t) for t in tools]
        body.update(self.extra_body)
        return body

    def complete(self, messages, tools, config, context) -> AssistantTurn:
        body = self.build_request(messages, tools, config, context)
        try:
            resp = self._client.post(self.url, json=body, headers=self._headers())
        except httpx.HTTPError as exc:
            raise BackendTransportError(f"{self.url}: {exc}") from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise BackendTransportError(f"{self.url}: HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise BackendResponseError(f"{self.url}: HTTP {resp.status_code}: {resp.text[:300]}")
        try:
            return parse_chat_response(resp.json())
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendResponseError(f"unparseable response: {exc}") from exc


def _strip_extensions(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _strip_extensions(v) for k, v in obj.items() if not k.startswith("x-")}
    if isinstance(obj, list):
        return [_strip_extensions(v) for v in obj]
    return obj


def parse_chat_response(data: dict[str, Any]) -> AssistantTurn:
    msg = data["choices"][0]["message"]
    calls = []
    for i, tc in enumerate(msg.get("tool_calls") or ()):
        fn = tc["function"]
        calls.append(RawToolCall(tc.get("id") or f"call_{i}", fn["name"], fn.get("arguments") or "{}"))
    return AssistantTurn(msg.get("content") or "", tuple(calls))


@dataclass(frozen=True)
class ScriptEntry:
    match: str
    calls: tuple[dict[str, Any], ...] = ()
    final_text: str = ""
    empty_responses: int = 0
    template: bool = False
    nlq: str | None = None


class MockBackend:
    """Scripted backend for offline, deterministic runs.

    Each entry is matched by item id (when the harness passes one) or by the
    question text. On the first turn of an attempt the entry's ``calls`` are
    emitted together; afterwards its ``final_text`` is returned, or ``""``
    while ``attempt < empty_responses``. With ``template`` the final text is
    ``str.format``-ed with the tool payloads as positional arguments.

    ``noise`` > 0 makes the mock misbehave at random, seeded by
    (seed, entry, attempt): with probability ``noise`` it skips the tool
    calls and answers with half of the text, and with probability
    ``noise / 2`` it returns nothing.
    """

    def __init__(self, entries: Iterable[ScriptEntry | dict[str, Any]] = (), noise: float = 0.0,
                 default_text: str = "") -> None:
        self.entries: list[ScriptEntry] = []
        self._by_match: dict[str, ScriptEntry] = {}
        for e in entries:
            if isinstance(e, dict):
                e = script_entry_from_dict(e)
            self.entries.append(e)
            self._by_match.setdefault(_norm(e.match), e)
            if e.nlq:
                self._by_match.setdefault(_norm(e.nlq), e)
        if not 0.0 <= noise <= 1.0:
            raise ValueError("noise must lie in [0, 1]")
        self.noise = noise
        self.default_text = default_text

    @classmethod
    def load(cls, path: str | os.PathLike, noise: float = 0.0) -> "MockBackend":
        """Read a JSON script: a list of ``{match, calls, final_text, ...}`` objects."""
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        if isinstance(doc, dict):
            noise = doc.get("noise", noise)
            doc = doc["entries"]
        return cls(doc, noise=noise)

    def find(self, nlq: str, item_id: str | None) -> ScriptEntry | None:
        if item_id is not None and _norm(item_id) in self._by_match:
            return self._by_match[_norm(item_id)]
        return self._by_match.get(_norm(nlq))

    def complete(self, messages, tools, config, context) -> AssistantTurn:
        nlq = next((m["content"] for m in reversed(messages) if m["role"] == "user"), "")
        entry = self.find(nlq, context.item_id)
        if entry is None:
            return AssistantTurn(self.default_text)
        rng = random.Random(f"{context.seed}|{entry.match}|{context.attempt}")
        skip_tools = rng.random() < self.noise
        go_silent = rng.random() < self.noise / 2
        started = any(m["role"] == "assistant" for m in messages)
        if not started and entry.calls and not skip_tools and tools:
            return AssistantTurn("", tuple(
                RawToolCall(f"call_{i}", c["tool_name"], json.dumps(c.get("args", {}), sort_keys=True))
                for i, c in enumerate(entry.calls)
            ))
        if context.attempt < entry.empty_responses or go_silent:
            return AssistantTurn("")
        text = entry.final_text
        if entry.template:
            payloads = [json.loads(m["content"]) for m in messages if m["role"] == "tool"]
            try:
                text = text.format(*payloads)
            except (IndexError, KeyError):
                pass
        if skip_tools:
            text = text[: len(text) // 2]
        return AssistantTurn(text)


def script_entry_from_dict(d: dict[str, Any]) -> ScriptEntry:
    calls = tuple(
        {"tool_name": c.get("tool_name") or c["name"], "args": dict(c.get("args") or c.get("arguments") or {})}
        for c in d.get("calls", ())
    )
    return ScriptEntry(
        match=str(d["match"]), calls=calls, final_text=d.get("final_text", ""),
        empty_responses=int(d.get("empty_responses", 0)), template=bool(d.get("template", False)),
        nlq=d.get("nlq"),
    )


def _norm(text: str) -> str:
    return " ".join(str(text).split()).casefold()


# -- conversation and outcome ------------------------------------------------------------

@dataclass
class Conversation:
    messages: list[dict[str, Any]] = field(default_factory=list)

    @classmethod
    def start(cls, system_prompt: str, nlq: str) -> "Conversation":
        return cls([{"role": "system", "content": system_prompt}, {"role": "user", "content": nlq}])

    def add_assistant(self, turn: AssistantTurn) -> None:
        msg: dict[str, Any] = {"role": "assistant", "content": turn.content}
        if turn.tool_calls:
            msg["tool_calls"] = [
                {"id": c.id, "type": "function", "function": {
                    "name": c.name,
                    "arguments": c.arguments if isinstance(c.arguments, str) else json.dumps(c.arguments),
                }}
                for c in turn.tool_calls
            ]
        self.messages.append(msg)

    def add_tool_result(self, call_id: str, content: str) -> None:
        issued = {tc["id"] for m in self.messages if m["role"] == "assistant" for tc in m.get("tool_calls", ())}
        if call_id not in issued:
            raise ValueError(f"tool result for unknown call id {call_id!r}")
        self.messages.append({"role": "tool", "tool_call_id": call_id, "content": content})


@dataclass(frozen=True)
class Failure:
    kind: str  # empty_output | transport | backend
    message: str


@dataclass
class QueryOutcome:
    nlq: str
    nlr: str = ""
    calls: list[ToolCall] = field(default_factory=list)
    results: list[ToolResult] = field(default_factory=list)
    wall_seconds: float = 0.0
    attempts: int = 0
    failure: Failure | None = None
    item_id: str | None = None

    @property
    def ok(self) -> bool:
        return self.failure is None

    def to_dict(self, timing: bool = True) -> dict[str, Any]:
        d: dict[str, Any] = {
            "item_id": self.item_id, "nlq": self.nlq, "nlr": self.nlr,
            "calls": [c.to_dict() for c in self.calls],
            "results": [r.to_dict() for r in self.results],
            "attempts": self.attempts,
            "failure": asdict(self.failure) if self.failure else None,
        }
        if timing:
            d["wall_seconds"] = self.wall_seconds
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "QueryOutcome":
        f = d.get("failure")
        return cls(
            nlq=d["nlq"], nlr=d.get("nlr", ""),
            calls=[ToolCall.from_dict(c) for c in d.get("calls", ())],
            results=[ToolResult.from_dict(r) for r in d.get("results", ())],
            wall_seconds=float(d.get("wall_seconds", 0.0)), attempts=int(d.get("attempts", 0)),
            failure=Failure(**f) if f else None, item_id=d.get("item_id"),
        )


# -- prompt -------------------------------------------------------------------------------

def build_system_prompt(registry: ToolRegistry | None = None) -> str:
    """The fixed instruction block. Tool documentation travels separately as declarations."""
    return resources.files("tsqa").joinpath("data/system_prompt.txt").read_text(encoding="utf-8")


def estimate_tokens(text: str) -> int:
    """Rough token count at four characters per token."""
    return -(-len(text) // CHARS_PER_TOKEN)


def context_tokens(system_prompt: str, declarations: list[dict[str, Any]]) -> int:
    return estimate_tokens(system_prompt) + estimate_tokens(json.dumps(declarations, sort_keys=True))


# -- the loop ---------------------------------------------------------------------------------

class Agent:
    def __init__(self, registry: ToolRegistry, backend: Backend, config: AgentConfig | None = None) -> None:
        self.registry = registry
        self.backend = backend
        self.config = config or AgentConfig()
        self.system_prompt = build_system_prompt(registry)
        self.declarations = registry.export_schemas()
        needed = context_tokens(self.system_prompt, self.declarations)
        if needed > self.config.context_budget_tokens:
            log.warning("prompt and tool declarations need ~%d tokens, budget is %d",
                        needed, self.config.context_budget_tokens)

    def answer(
        self, nlq: str, mode: Mode = "stub", item_id: str | None = None,
        as_of: int | None = None, config: AgentConfig | None = None,
    ) -> QueryOutcome:
        cfg = config or self.config
        outcome = QueryOutcome(nlq=nlq, item_id=item_id)
        start = time.perf_counter()
        for attempt in range(1 + cfg.empty_output_retries):
            outcome.attempts = attempt + 1
            ctx = RequestContext(cfg.seed, attempt, item_id)
            try:
                text, calls, results = self._attempt(nlq, cfg, ctx, mode, item_id, as_of)
            except BackendTransportError as exc:
                outcome.failure = Failure("transport", str(exc))
                break
            except BackendResponseError as exc:
                outcome.failure = Failure("backend", str(exc))
                break
            outcome.calls, outcome.results = calls, results
            if text.strip():
                outcome.nlr = text
                break
        else:
            outcome.failure = Failure(
                "empty_output", f"no text after {outcome.attempts} attempts")
        outcome.wall_seconds = time.perf_counter() - start
        return outcome

    def _complete(self, conv: Conversation, tools, cfg: AgentConfig, ctx: RequestContext) -> AssistantTurn:
        for i in range(cfg.transport_retries + 1):
            try:
                return self.backend.complete(conv.messages, tools, cfg, ctx)
            except BackendTransportError as exc:
                if i == cfg.transport_retries:
                    raise
                log.warning("backend transport error (try %d of %d): %s", i + 1, cfg.transport_retries + 1, exc)
        raise AssertionError("unreachable")

    def _attempt(self, nlq, cfg, ctx, mode, item_id, as_of):
        conv = Conversation.start(self.system_prompt, nlq)
        calls: list[ToolCall] = []
        results: list[ToolResult] = []
        rounds = 0
        while True:
            tools = self.declarations if rounds < cfg.max_tool_rounds else []
            turn = self._complete(conv, tools, cfg, ctx)
            if not turn.tool_calls or not tools:
                return turn.content, calls, results
            rounds += 1
            conv.add_assistant(turn)
            for raw in turn.tool_calls:
                call, result = self._run_tool(raw, mode, item_id, as_of)
                calls.append(call)
                results.append(result)
                conv.add_tool_result(raw.id, result.content_text())

    def _run_tool(self, raw: RawToolCall, mode, item_id, as_of) -> tuple[ToolCall, ToolResult]:
        args: Any = raw.arguments
        try:
            if isinstance(args, str):
                args = json.loads(args) if args.strip() else {}
            if not isinstance(args, dict):
                raise RegistryError(f"arguments must be a JSON object, got {type(args).__name__}")
            call = self.registry.prepare(raw.name, args, raw.id)
        except (ValueError, RegistryError) as exc:
            raw_args = args if isinstance(args, dict) else {"_raw": raw.arguments}
            msg = f"invalid call: {exc}"
            return ToolCall(raw.name, {}, raw_args, raw.id, error=msg), ToolResult(raw.name, {}, error=msg)
        try:
            result = self.registry.dispatch(call, mode, item_id, as_of)
        except TsqaError as exc:
            log.info("tool %s failed: %s", call.tool_name, exc)
            result = ToolResult(call.tool_name, {}, error=str(exc))
        return call, result


# -- terminal chat ------------------------------------------------------------------------------

def format_call(call: ToolCall) -> str:
    args = ", ".join(f"{k}={v!r}" for k, v in call.args.items()) if not call.error else ""
    text = f"{call.tool_name}({args})"
    if call.error:
        text += f"  [error: {call.error}]"
    return text


def chat_repl(
    agent: Agent, mode: Mode = "stub", verbose: bool = False,
    stdin: TextIO | None = None, stdout: TextIO | None = None, prompt: str = "> ",
) -> int:
    """Read questions line by line and print answers until ``/quit`` or end of input.

    Returns the number of questions answered.
    """
    import sys

    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    answered = 0
    while True:
        stdout.write(prompt)
        stdout.flush()
        line = stdin.readline()
        if not line:
            stdout.write("\n")
            break
        nlq = line.strip()
        if not nlq:
            continue
        if nlq in ("/quit", "/exit"):
            break
        try:
            outcome = agent.answer(nlq, mode)
        except Exception as exc:  # keep the session alive
            stdout.write(f"error: {exc}\n")
            continue
        if verbose:
            for call, result in zip(outcome.calls, outcome.results):
                stdout.write(f"  -> {format_call(call)}\n")
                stdout.write(f"  <- {result.content_text()}\n")
        if outcome.ok:
            stdout.write(outcome.nlr.strip() + "\n")
            answered += 1
        else:
            stdout.write(f"(no answer: {outcome.failure.message})\n")
    return answered
