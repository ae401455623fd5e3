"""Command line entry point: ``tsqa ingest|query|chat|bench|report|schemas``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 backend transport failure.
"""

from __future__ import annotations

import json
import logging
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import click

from . import harness
from .agent import Agent, AgentConfig, ChatCompletionsBackend, MockBackend, chat_repl, format_call
from .errors import BackendTransportError, DataError, TsqaError
from .market_data import MarketStore
from .registry import ToolRegistry

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_TRANSPORT = 3

_AGENT_FIELDS = {f.name for f in fields(AgentConfig)}


@dataclass
class CliConfig:
    data_dir: str | None = None
    benchmark: str | None = None
    mode: str = "stub"
    backend: dict[str, Any] = field(default_factory=lambda: {"kind": "replay"})
    agent: dict[str, Any] = field(default_factory=dict)
    seeds: list[int] = field(default_factory=lambda: [1])
    parallelism: int = 1
    out_dir: str = "bench-out"

    def validate(self, needs_seeds: bool = False) -> None:
        if self.mode not in ("real", "stub"):
            raise click.UsageError(f"mode must be real or stub, got {self.mode!r}")
        if self.mode == "real" and not self.data_dir:
            raise click.UsageError("real mode requires --data-dir")
        if needs_seeds and not self.seeds:
            raise click.UsageError("at least one seed is required")
        unknown = set(self.agent) - _AGENT_FIELDS
        if unknown:
            raise click.UsageError(f"unknown agent settings: {', '.join(sorted(unknown))}")

    @property
    def benchmark_path(self) -> Path:
        return Path(self.benchmark) if self.benchmark else harness.default_benchmark_path()

    def agent_config(self) -> AgentConfig:
        cfg = AgentConfig(**self.agent)
        overrides = {k: self.backend[k] for k in ("endpoint", "model", "api_key_env") if self.backend.get(k)}
        return replace(cfg, **overrides) if overrides else cfg


def load_config(path: str | None) -> CliConfig:
    if not path:
        return CliConfig()
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read config {path}: {exc}") from None
    known = {f.name for f in fields(CliConfig)}
    extra = set(doc) - known
    if extra:
        raise click.UsageError(f"unknown config keys: {', '.join(sorted(extra))}")
    cfg = CliConfig(**doc)
    cfg.backend = {"kind": "replay", **cfg.backend}
    return cfg


def _parse_seeds(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise click.BadParameter(f"seeds must be comma-separated integers, got {text!r}") from None


def _apply_overrides(cfg: CliConfig, **opts: Any) -> CliConfig:
    for name in ("data_dir", "benchmark", "mode", "out_dir", "parallelism"):
        if opts.get(name) is not None:
            setattr(cfg, name, opts[name])
    if opts.get("seeds"):
        cfg.seeds = _parse_seeds(opts["seeds"])
    backend = dict(cfg.backend)
    for name in ("endpoint", "model", "api_key_env", "script"):
        if opts.get(name) is not None:
            backend[name] = opts[name]
    if opts.get("backend") is not None:
        backend["kind"] = opts["backend"]
    if opts.get("noise") is not None:
        backend["noise"] = opts["noise"]
    cfg.backend = backend
    if opts.get("temperature") is not None:
        cfg.agent = {**cfg.agent, "temperature": opts["temperature"]}
    return cfg


def build_agent(cfg: CliConfig, items: list[harness.BenchmarkItem] | None = None) -> tuple[Agent, list[harness.BenchmarkItem]]:
    registry_for_parse = ToolRegistry()
    if items is None:
        items = harness.load_benchmark(cfg.benchmark_path, registry_for_parse)
    store = MarketStore.from_data_dir(cfg.data_dir) if cfg.data_dir else None
    registry = ToolRegistry(store=store, stubs=harness.stub_table(items))
    b = cfg.backend
    kind = b.get("kind", "replay")
    noise = float(b.get("noise", 0.0))
    if kind == "replay":
        backend = replay_backend(items, noise)
    elif kind == "mock":
        if not b.get("script"):
            raise click.UsageError("the mock backend needs --script")
        backend = MockBackend.load(b["script"], noise=noise)
    elif kind == "openai":
        if not b.get("endpoint") or not b.get("model"):
            raise click.UsageError("the openai backend needs --endpoint and --model")
        backend = ChatCompletionsBackend(
            b["endpoint"], b["model"], b.get("api_key_env", "OPENAI_API_KEY"),
            extra_body=b.get("extra_body"),
        )
    else:
        raise click.UsageError(f"unknown backend {kind!r} (replay, mock, openai)")
    return Agent(registry, backend, cfg.agent_config()), items


def replay_backend(items: list[harness.BenchmarkItem], noise: float = 0.0) -> MockBackend:
    """Mock that answers each benchmark question with its ground-truth calls and expected answer."""
    entries = [
        {"match": it.item_id, "nlq": it.nlq, "final_text": it.expected_nlr,
         "calls": [{"tool_name": c.tool_name, "args": c.raw_args} for c in it.expected_calls]}
        for it in items
    ]
    return MockBackend(entries, noise=noise)


def _common_options(f):
    opts = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), help="JSON config file."),
        click.option("--data-dir", type=click.Path(file_okay=False), help="Directory holding manifest.json and CSVs."),
        click.option("--benchmark", type=click.Path(dir_okay=False), help="Benchmark TSV (also the stub source)."),
        click.option("--mode", type=click.Choice(["stub", "real"]), help="Answer from stubs or market data."),
        click.option("--backend", type=click.Choice(["replay", "mock", "openai"]), help="Language-model backend."),
        click.option("--script", type=click.Path(dir_okay=False), help="Mock backend script (JSON)."),
        click.option("--endpoint", help="Chat-completions base URL, e.g. https://api.openai.com/v1."),
        click.option("--model", help="Model name for the openai backend."),
        click.option("--api-key-env", help="Environment variable holding the API key."),
        click.option("--temperature", type=click.FloatRange(0.0, 2.0)),
        click.option("--noise", type=click.FloatRange(0.0, 1.0), help="Random misbehaviour rate of mock backends."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


@click.group()
@click.option("-v", "--log-level", default="WARNING", show_default=True,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
def cli(log_level: str) -> None:
    """Tool-grounded Q&A over OHLCV data, and an agent benchmark."""
    logging.basicConfig(level=log_level.upper(), format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


@cli.command()
@click.option("--data-dir", required=True, type=click.Path(file_okay=False))
@click.option("--manifest", type=click.Path(dir_okay=False), help="Defaults to DATA_DIR/manifest.json.")
@click.option("--gap-policy", type=click.Choice(["reject", "forward_fill"]))
def ingest(data_dir: str, manifest: str | None, gap_policy: str | None) -> None:
    """Load and validate every series in the manifest and print a summary."""
    path = Path(manifest) if manifest else Path(data_dir) / "manifest.json"
    store = MarketStore.from_manifest(path, gap_policy)
    for key, series in store.summary():
        filled = f" ({len(series.filled)} filled)" if series.filled else ""
        click.echo(f"{key}\t{len(series)} candles\tinterval={series.candle_interval}s\t"
                   f"{series.first_timestamp}..{series.last_timestamp}{filled}")
    click.echo(f"{len(store)} instrument(s)")


@cli.command()
@click.option("--nlq", required=True, help="The question.")
@click.option("--verbose", is_flag=True, help="Print the tool calls made.")
@_common_options
def query(nlq: str, verbose: bool, config_path: str | None, **opts: Any) -> None:
    """Answer one question."""
    cfg = _apply_overrides(load_config(config_path), **opts)
    cfg.validate()
    agent, _ = build_agent(cfg)
    outcome = agent.answer(nlq, cfg.mode)
    if verbose:
        for call, result in zip(outcome.calls, outcome.results):
            click.echo(f"-> {format_call(call)}")
            click.echo(f"<- {result.content_text()}")
    for result in outcome.results:
        if result.error:
            logging.getLogger("tsqa.cli").warning("%s", result.error)
    if outcome.ok:
        click.echo(outcome.nlr.strip())
        return
    click.echo(f"no answer: {outcome.failure.message}", err=True)
    if outcome.failure.kind == "transport":
        sys.exit(EXIT_TRANSPORT)
    sys.exit(EXIT_DATA)


@cli.command()
@click.option("--verbose", is_flag=True, help="Print the tool calls made.")
@_common_options
def chat(verbose: bool, config_path: str | None, **opts: Any) -> None:
    """Interactive question/answer session; /quit to leave."""
    cfg = _apply_overrides(load_config(config_path), **opts)
    cfg.validate()
    agent, _ = build_agent(cfg)
    chat_repl(agent, cfg.mode, verbose=verbose)


@cli.command()
@click.option("--seeds", help="Comma-separated seeds, e.g. 1,10,100.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), help="Report directory.")
@click.option("--label", default=None, help="Agent label in the report (defaults to backend/model).")
@click.option("--no-timing", is_flag=True, help="Leave SPQ out of reports (byte-stable output).")
@click.option("--parallelism", type=click.IntRange(1, 64))
@click.option("--limit", type=click.IntRange(1), help="Only the first N benchmark items.")
@click.option("--judge", "use_judge", is_flag=True, help="Score LA/HR with the backend as judge.")
@_common_options
def bench(seeds: str | None, out_dir: str | None, label: str | None, no_timing: bool, parallelism: int | None,
          limit: int | None, use_judge: bool, config_path: str | None, **opts: Any) -> None:
    """Run the benchmark and write report.md, summary.tsv, items.tsv, outcomes.jsonl."""
    cfg = _apply_overrides(load_config(config_path), seeds=seeds, out_dir=out_dir,
                           parallelism=parallelism, **opts)
    cfg.validate(needs_seeds=True)
    items = harness.load_benchmark(cfg.benchmark_path)
    if limit:
        items = items[:limit]
    agent, items = build_agent(cfg, items)
    judge = harness.LLMJudge(agent.backend) if use_judge else None
    label = label or cfg.backend.get("model") or cfg.backend.get("kind", "agent")
    report = harness.run_benchmark(items, agent, cfg.mode, cfg.seeds, judge=judge,
                                   parallelism=cfg.parallelism, timing=not no_timing, label=label)
    harness.write_reports(report, cfg.out_dir)
    click.echo(harness.markdown_report(report), nl=False)
    click.echo(f"reports written to {cfg.out_dir}")
    if all(r.outcome and r.outcome.failure and r.outcome.failure.kind == "transport" for r in report.records):
        sys.exit(EXIT_TRANSPORT)


@cli.command()
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True, file_okay=False),
              help="Directory written by `tsqa bench`.")
@click.option("--benchmark", type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["markdown", "tsv", "items"]), default="markdown")
def report(run_dir: str, benchmark: str | None, fmt: str) -> None:
    """Re-score persisted outcomes of a run and print the report."""
    run = Path(run_dir)
    meta = json.loads((run / "run.json").read_text(encoding="utf-8"))
    items = harness.load_benchmark(benchmark)
    outcomes = harness.load_outcomes(run / "outcomes.jsonl")
    rep = harness.rescore(outcomes, items, label=meta["label"], mode=meta["mode"],
                          config=meta["config"], timing=meta["timing"])
    click.echo(harness.emit_report(rep, fmt), nl=False)


@cli.command()
def schemas() -> None:
    """Print the tool declarations sent to the language model."""
    click.echo(json.dumps(ToolRegistry().export_schemas(), indent=2))


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, prog_name="tsqa", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except BackendTransportError as exc:
        click.echo(f"backend error: {exc}", err=True)
        return EXIT_TRANSPORT
    except (DataError, TsqaError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_DATA
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
