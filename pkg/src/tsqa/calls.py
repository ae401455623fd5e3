"""Tool invocation and tool output records, with their JSON forms."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class ToolCall:
    """One tool invocation emitted by an agent.

    ``args`` holds the coerced, default-filled arguments; ``raw_args`` what the
    agent actually sent. A call that failed validation keeps ``args`` empty
    and carries the reason in ``error``.
    """

    tool_name: str
    args: dict[str, Any] = field(default_factory=dict)
    raw_args: dict[str, Any] = field(default_factory=dict)
    call_id: str | None = None
    warnings: tuple[str, ...] = ()
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"tool_name": self.tool_name, "args": self.args}
        if self.raw_args != self.args:
            d["raw_args"] = self.raw_args
        if self.call_id is not None:
            d["call_id"] = self.call_id
        if self.warnings:
            d["warnings"] = list(self.warnings)
        if self.error is not None:
            d["error"] = self.error
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ToolCall":
        args = dict(d.get("args") or {})
        return cls(
            tool_name=d["tool_name"],
            args=args,
            raw_args=dict(d.get("raw_args", args)),
            call_id=d.get("call_id"),
            warnings=tuple(d.get("warnings", ())),
            error=d.get("error"),
        )


def _canon(value: Any) -> Any:
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        return value.strip().casefold()
    if isinstance(value, (list, tuple)):
        return tuple(_canon(v) for v in value)
    return value


def call_key(call: ToolCall) -> tuple:
    """Hashable identity of a filled call: name plus normalized arguments."""
    return (call.tool_name, tuple(sorted((k, _canon(v)) for k, v in call.args.items())))


@dataclass(frozen=True)
class ToolResult:
    tool_name: str
    payload: dict[str, Any] = field(default_factory=dict)
    error: str | None = None

    def __post_init__(self) -> None:
        _check_finite(self.payload)

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"tool_name": self.tool_name, "payload": self.payload}
        if self.error is not None:
            d["error"] = self.error
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ToolResult":
        return cls(d["tool_name"], dict(d.get("payload") or {}), d.get("error"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def content_text(self) -> str:
        """What the language model sees as the tool's reply."""
        if self.error is not None:
            return json.dumps({"error": self.error}, sort_keys=True)
        return json.dumps(self.payload, sort_keys=True)


def _check_finite(value: Any) -> None:
    if isinstance(value, float) and not math.isfinite(value):
        raise ValueError("tool payload contains a non-finite number")
    if isinstance(value, dict):
        for v in value.values():
            _check_finite(v)
    elif isinstance(value, (list, tuple)):
        for v in value:
            _check_finite(v)
