"""Tool schemas, argument filling/coercion, dispatch and call matching."""

from __future__ import annotations

import copy
import logging
import math
from collections import Counter
from dataclasses import dataclass, replace
from typing import Any, Iterable, Literal

from . import tools
from .calls import ToolCall, ToolResult, call_key
from .errors import ParameterError, RegistryError, StubError, TsqaError, UnknownToolError
from .market_data import InstrumentKey, MarketStore, TimeUnit, WindowSpec

log = logging.getLogger(__name__)

Mode = Literal["real", "stub"]

# semantic type -> JSON schema type
_JSON_TYPES = {"token": "string", "exchange": "string", "time_unit": "string", "int": "integer", "float": "number"}


@dataclass(frozen=True)
class Param:
    name: str
    kind: str  # token | exchange | time_unit | int | float
    required: bool = False
    default: Any = None
    description: str = ""


@dataclass(frozen=True)
class ToolSchema:
    name: str
    description: str
    params: tuple[Param, ...]
    return_kind: str

    def __post_init__(self) -> None:
        if not self.description.strip():
            raise ValueError(f"tool {self.name} has no description")
        for p in self.params:
            if not p.required and p.default is None:
                raise ValueError(f"optional parameter {self.name}.{p.name} needs a default")

    @property
    def param_names(self) -> list[str]:
        return [p.name for p in self.params]

    def param(self, name: str) -> Param:
        for p in self.params:
            if p.name == name:
                return p
        raise KeyError(name)


# -- coercion ---------------------------------------------------------------------

def coerce(param: Param, value: Any) -> tuple[Any, str | None]:
    """Coerce one argument to its semantic type. Returns (value, warning)."""
    kind = param.kind
    if kind in ("token", "exchange"):
        if not isinstance(value, str) or not value.strip():
            raise ParameterError(f"{param.name} must be a non-empty string, got {value!r}")
        return value.strip().upper(), None
    if kind == "time_unit":
        if not isinstance(value, str):
            raise ParameterError(f"{param.name} must be a time unit string, got {value!r}")
        try:
            return TimeUnit.parse(value).value, None
        except ValueError as exc:
            raise ParameterError(f"{param.name}: {exc}") from None
    if kind in ("int", "float"):
        warning = None
        if isinstance(value, bool) or value is None:
            raise ParameterError(f"{param.name} must be a number, got {value!r}")
        if isinstance(value, str):
            try:
                num = float(value.strip().rstrip("%"))
            except ValueError:
                raise ParameterError(f"{param.name} must be a number, got {value!r}") from None
            warning = f"{param.name}: coerced string {value!r} to a number"
        elif isinstance(value, (int, float)):
            num = value
        else:
            raise ParameterError(f"{param.name} must be a number, got {value!r}")
        if not math.isfinite(num):
            raise ParameterError(f"{param.name} must be finite")
        if kind == "int":
            if num != int(num):
                raise ParameterError(f"{param.name} must be an integer, got {value!r}")
            return int(num), warning
        return float(num), warning
    raise AssertionError(f"unknown kind {kind}")


def fill_defaults(schema: ToolSchema, raw_args: dict[str, Any]) -> tuple[dict[str, Any], list[str]]:
    """Validate and coerce ``raw_args`` and add defaults for every missing optional parameter.

    Returns the filled arguments (in schema order) and any coercion warnings.
    """
    unknown = sorted(set(raw_args) - set(schema.param_names))
    if unknown:
        raise ParameterError(
            f"{schema.name}: unknown parameter(s) {', '.join(unknown)}; "
            f"accepted: {', '.join(schema.param_names)}"
        )
    args: dict[str, Any] = {}
    warnings: list[str] = []
    for p in schema.params:
        if p.name in raw_args and raw_args[p.name] is not None:
            value, warning = coerce(p, raw_args[p.name])
            if warning:
                warnings.append(warning)
        elif p.required:
            raise ParameterError(f"{schema.name}: missing required parameter {p.name}")
        else:
            value, _ = coerce(p, p.default)
        args[p.name] = value
    return args, warnings


# -- the tool table ----------------------------------------------------------------

def _common(time_interval: int, time_unit: str) -> tuple[Param, ...]:
    return (
        Param("quote_token", "token", default="USDT", description="Quote currency symbol"),
        Param("exchange", "exchange", default="BINANCE", description="Exchange name"),
        Param("time_interval", "int", default=time_interval, description="Number of time units in the lookback window"),
        Param("time_unit", "time_unit", default=time_unit, description="Unit of the lookback window: minute, hour, day, week, month or year"),
    )


_BASE = Param("base_token", "token", required=True, description="Base token symbol, e.g. BTC")
_SEASONAL = _common(1, "year") + (
    Param("period_unit", "time_unit", default="week", description="Repeating period the pattern is measured within"),
    Param("granularity_unit", "time_unit", default="day", description="Bucket size inside each period"),
    Param("threshold_percent", "float", default=5.0, description="Relative threshold in percent"),
)
_PRICE = _common(1, "day")


def _schemas() -> list[ToolSchema]:
    s = ToolSchema
    return [
        s("peak_traded_volume",
          "Find the times (e.g. day of week) with the highest traded volume within periods, "
          "exceeding a relative threshold.", (_BASE,) + _SEASONAL, "labels"),
        s("lowest_traded_volume",
          "Find the times with the lowest traded volume within periods, below a relative threshold.",
          (_BASE,) + _SEASONAL, "labels"),
        s("round_the_clock_pattern",
          "Summarize the trading pattern: both peak and lowest volume times.",
          (_BASE,) + _SEASONAL, "peaks_lows"),
        s("abnormal_deviations",
          "Find recent time points whose traded volume deviates from historical norms by more than a threshold.",
          (_BASE,) + _SEASONAL, "deviations"),
        s("price", "Get the latest price within the lookback window.", (_BASE,) + _PRICE, "price"),
        s("volatility", "Calculate historical price volatility (Parkinson method) over the window, in percent.",
          (_BASE,) + _PRICE, "volatility"),
        s("predict_price", "Predict the price for the next window by simple extrapolation.",
          (_BASE,) + _PRICE, "predicted_price"),
        s("predict_volatility", "Predict volatility for the next window by simple extrapolation, in percent.",
          (_BASE,) + _PRICE, "predicted_volatility"),
        s("correlation_between_tokens",
          "Compute the Pearson price correlation between two tokens on one exchange.",
          (Param("base_token_a", "token", required=True, description="First base token symbol"),
           Param("base_token_b", "token", required=True, description="Second base token symbol"))
          + _common(7, "day"), "correlation"),
        s("correlation_between_exchanges",
          "Compute the Pearson price correlation of one token pair between two exchanges.",
          (_BASE,
           Param("exchange_a", "exchange", required=True, description="First exchange name"),
           Param("exchange_b", "exchange", required=True, description="Second exchange name"),
           Param("quote_token", "token", default="USDT", description="Quote currency symbol"),
           Param("time_interval", "int", default=7, description="Number of time units in the lookback window"),
           Param("time_unit", "time_unit", default="day", description="Unit of the lookback window")),
          "correlation"),
        s("get_base_tokens", "List the base tokens that have data.", (), "base_tokens"),
        s("get_quote_tokens", "List the quote tokens that have data.", (), "quote_tokens"),
        s("get_exchanges", "List the exchanges that have data.", (), "exchanges"),
        s("get_valid_time_units", "List the accepted time unit names.", (), "time_units"),
    ]


def _window(args: dict[str, Any]) -> WindowSpec:
    return WindowSpec(
        args["time_interval"], args["time_unit"], args.get("period_unit"),
        args.get("granularity_unit"), args.get("threshold_percent"),
    )


def _key(args: dict[str, Any]) -> InstrumentKey:
    return InstrumentKey(args["base_token"], args["quote_token"], args["exchange"])


def _latest(store: MarketStore, *keys: InstrumentKey) -> int:
    return min(store.get(k).last_timestamp or 0 for k in keys)


def _run_real(name: str, args: dict[str, Any], store: MarketStore, as_of: int | None) -> dict[str, Any]:
    if name == "get_base_tokens":
        return {"base_tokens": store.list_base_tokens()}
    if name == "get_quote_tokens":
        return {"quote_tokens": store.list_quote_tokens()}
    if name == "get_exchanges":
        return {"exchanges": store.list_exchanges()}
    if name == "get_valid_time_units":
        return {"time_units": [u.value for u in TimeUnit]}

    try:
        window = _window(args)
    except ValueError as exc:
        raise ParameterError(str(exc)) from None
    if name == "correlation_between_tokens":
        ka = InstrumentKey(args["base_token_a"], args["quote_token"], args["exchange"])
        kb = InstrumentKey(args["base_token_b"], args["quote_token"], args["exchange"])
        t = as_of if as_of is not None else _latest(store, ka, kb)
        return {"correlation": tools.correlation(store, ka, kb, window, t)}
    if name == "correlation_between_exchanges":
        ka = InstrumentKey(args["base_token"], args["quote_token"], args["exchange_a"])
        kb = InstrumentKey(args["base_token"], args["quote_token"], args["exchange_b"])
        t = as_of if as_of is not None else _latest(store, ka, kb)
        return {"correlation": tools.correlation(store, ka, kb, window, t)}

    key = _key(args)
    t = as_of if as_of is not None else _latest(store, key)
    if name == "price":
        return {"price": tools.price(store, key, window, t)}
    if name == "volatility":
        return {"volatility_percent": tools.volatility(store, key, window, t)}
    if name == "predict_price":
        return {"predicted_price": tools.predict_price(store, key, window, t)}
    if name == "predict_volatility":
        return {"predicted_volatility_percent": tools.predict_volatility(store, key, window, t)}
    if name == "peak_traded_volume":
        return {"labels": tools.peak_traded_volume(store, key, window, t)}
    if name == "lowest_traded_volume":
        return {"labels": tools.lowest_traded_volume(store, key, window, t)}
    if name == "round_the_clock_pattern":
        peaks, lows = tools.round_the_clock_pattern(store, key, window, t)
        return {"peaks": peaks, "lows": lows}
    if name == "abnormal_deviations":
        d = tools.abnormal_deviations(store, key, window, t)
        return {
            "timestamps": d.timestamps, "deviation_percents": d.deviation_percents,
            "labels": d.labels, "excluded_buckets": d.excluded_buckets,
        }
    raise AssertionError(f"no implementation for {name}")


class ToolRegistry:
    """The fixed set of tools an agent may call, and the engine behind them.

    ``store`` backs real mode and ``stubs`` backs stub mode; either may be
    absent if that mode is not used.
    """

    def __init__(self, store: MarketStore | None = None, stubs: tools.StubTable | None = None) -> None:
        self.store = store
        self.stubs = stubs
        self._schemas = {s.name: s for s in _schemas()}

    def __len__(self) -> int:
        return len(self._schemas)

    def __contains__(self, name: object) -> bool:
        return name in self._schemas

    @property
    def names(self) -> list[str]:
        return list(self._schemas)

    @property
    def schemas(self) -> list[ToolSchema]:
        return list(self._schemas.values())

    def schema(self, name: str) -> ToolSchema:
        try:
            return self._schemas[name]
        except KeyError:
            raise UnknownToolError(name, self.names) from None

    def prepare(self, tool_name: str, raw_args: dict[str, Any] | None = None, call_id: str | None = None) -> ToolCall:
        """Build a filled :class:`ToolCall`; raises on an unknown tool or bad arguments."""
        raw = dict(raw_args or {})
        args, warnings = fill_defaults(self.schema(tool_name), raw)
        for w in warnings:
            log.warning("%s", w)
        return ToolCall(tool_name, args, raw, call_id, tuple(warnings))

    def fill(self, call: ToolCall) -> ToolCall:
        filled = self.prepare(call.tool_name, call.args, call.call_id)
        return replace(filled, raw_args=call.raw_args or call.args)

    def dispatch(
        self, call: ToolCall, mode: Mode = "real", item_id: str | None = None, as_of: int | None = None
    ) -> ToolResult:
        """Run a filled call against the store (real) or the stub table (stub).

        Errors raised by the tool carry the tool name in their message.
        """
        self.schema(call.tool_name)
        if call.error is not None:
            raise RegistryError(f"{call.tool_name}: {call.error}")
        if mode == "stub":
            if self.stubs is None:
                raise StubError("stub mode requires a stub table")
            return self.stubs.lookup(item_id, call)
        if mode != "real":
            raise ValueError(f"unknown mode {mode!r}")
        if self.store is None:
            raise RegistryError("real mode requires market data")
        try:
            payload = _run_real(call.tool_name, call.args, self.store, as_of)
        except TsqaError as exc:
            raise _with_tool(exc, call.tool_name)
        return ToolResult(call.tool_name, payload)

    def execute(
        self, tool_name: str, raw_args: dict[str, Any] | None = None, mode: Mode = "real",
        item_id: str | None = None, as_of: int | None = None,
    ) -> ToolResult:
        return self.dispatch(self.prepare(tool_name, raw_args), mode, item_id, as_of)

    def export_schemas(self) -> list[dict[str, Any]]:
        return [schema_to_declaration(s) for s in self._schemas.values()]


def _with_tool(exc: TsqaError, tool_name: str) -> TsqaError:
    exc.args = (f"{tool_name}: {exc}",)
    exc.tool_name = tool_name
    return exc


# -- wire format ---------------------------------------------------------------------

def schema_to_declaration(schema: ToolSchema) -> dict[str, Any]:
    """Chat-completions function declaration for one tool."""
    props: dict[str, Any] = {}
    for p in schema.params:
        prop: dict[str, Any] = {"type": _JSON_TYPES[p.kind], "description": p.description, "x-semantic-type": p.kind}
        if p.kind == "time_unit":
            prop["enum"] = [u.value for u in TimeUnit]
        if not p.required:
            prop["default"] = p.default
        props[p.name] = prop
    return {
        "type": "function",
        "function": {
            "name": schema.name,
            "description": schema.description,
            "parameters": {
                "type": "object",
                "properties": props,
                "required": [p.name for p in schema.params if p.required],
                "additionalProperties": False,
            },
            "x-return-kind": schema.return_kind,
        },
    }


def declaration_to_schema(decl: dict[str, Any]) -> ToolSchema:
    fn = decl["function"]
    params_obj = fn.get("parameters") or {}
    required = set(params_obj.get("required", ()))
    params = []
    for name, prop in (params_obj.get("properties") or {}).items():
        kind = prop.get("x-semantic-type") or {"integer": "int", "number": "float"}.get(prop.get("type"), "token")
        params.append(Param(name, kind, name in required, copy.deepcopy(prop.get("default")), prop.get("description", "")))
    return ToolSchema(fn["name"], fn.get("description", ""), tuple(params), fn.get("x-return-kind", ""))


# -- matching --------------------------------------------------------------------------

def match_calls(actual: ToolCall, expected: ToolCall) -> bool:
    """True iff both filled calls name the same tool with equal arguments.

    Strings compare case-insensitively, numbers exactly.
    """
    if actual.error is not None or expected.error is not None:
        return False
    return call_key(actual) == call_key(expected)


def match_call_sets(actual: Iterable[ToolCall], expected: Iterable[ToolCall]) -> bool:
    """Multiset equality of two call lists under :func:`match_calls`; order is ignored."""
    actual = list(actual)
    expected = list(expected)
    if any(c.error is not None for c in actual) or len(actual) != len(expected):
        return False
    return Counter(map(call_key, actual)) == Counter(map(call_key, expected))
