"""Tool-grounded question answering over cryptocurrency OHLCV data."""

from .agent import Agent, AgentConfig, ChatCompletionsBackend, MockBackend, QueryOutcome
from .calls import ToolCall, ToolResult
from .errors import TsqaError
from .harness import BenchmarkItem, RunReport, load_benchmark, run_benchmark
from .market_data import Candle, CandleSeries, InstrumentKey, MarketStore, TimeUnit, WindowSpec
from .registry import ToolRegistry

__version__ = "0.1.0"

__all__ = [
    "Agent", "AgentConfig", "BenchmarkItem", "Candle", "CandleSeries", "ChatCompletionsBackend",
    "InstrumentKey", "MarketStore", "MockBackend", "QueryOutcome", "RunReport", "TimeUnit",
    "ToolCall", "ToolRegistry", "ToolResult", "TsqaError", "WindowSpec", "load_benchmark",
    "run_benchmark",
]
