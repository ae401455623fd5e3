"""Benchmark corpus, scoring metrics, multi-seed runs and reports.

Metrics per item:

* RR  1.0 when the agent returned non-blank text.
* MA  1.0 when the agent's calls equal the ground-truth calls as a multiset.
* LA  agreement of the answer with the expected answer, in [0, 1].
* HR  share of the answer not supported by the expected answer and stub
      outputs, in [0, 1].
* SPQ wall-clock seconds to answer.

LA and HR come from an LLM judge when one is configured and otherwise from
deterministic keyword/token rules. Items with RR = 0 score LA = 0, HR = 1.
"""

from __future__ import annotations

import json
import logging
import os
import re
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from decimal import Decimal, InvalidOperation
from importlib import resources
from pathlib import Path
from typing import Any, Iterable

from .agent import Agent, AgentConfig, Backend, Failure, QueryOutcome, RequestContext
from .calls import ToolCall, ToolResult
from .errors import BackendTransportError, BenchmarkFormatError, TsqaError
from .registry import Mode, ToolRegistry, match_call_sets
from .tools import StubEntry, StubTable

log = logging.getLogger(__name__)

COLUMNS = ("item_id", "nlq", "expected_keywords", "expected_nlr", "expected_calls", "stub_results")
METRICS = ("RR", "MA", "LA", "HR", "SPQ")
EXPECTED_ITEMS = 100


@dataclass(frozen=True)
class BenchmarkItem:
    item_id: str
    nlq: str
    expected_keywords: tuple[str, ...]
    expected_nlr: str
    expected_calls: tuple[ToolCall, ...]
    stub_results: tuple[ToolResult, ...]

    def stub_entries(self) -> list[StubEntry]:
        return [StubEntry(self.item_id, c, r) for c, r in zip(self.expected_calls, self.stub_results)]


def default_benchmark_path() -> Path:
    return Path(str(resources.files("tsqa").joinpath("data/benchmark.tsv")))


def split_keywords(cell: str) -> tuple[str, ...]:
    return tuple(k.strip() for k in cell.split("|") if k.strip())


def load_benchmark(path: str | os.PathLike | None = None, registry: ToolRegistry | None = None) -> list[BenchmarkItem]:
    """Parse the benchmark TSV; expected calls come back default-filled."""
    path = Path(path) if path is not None else default_benchmark_path()
    registry = registry or ToolRegistry()
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise BenchmarkFormatError("empty benchmark file", 1)
    header = lines[0].split("\t")
    missing = [c for c in COLUMNS if c not in header]
    if missing:
        raise BenchmarkFormatError(f"missing column(s) {', '.join(missing)}", 1)
    col = {name: header.index(name) for name in COLUMNS}

    items: list[BenchmarkItem] = []
    seen: set[str] = set()
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split("\t")
        if len(cells) < len(header):
            absent = header[len(cells)]
            raise BenchmarkFormatError(f"row has {len(cells)} fields, expected {len(header)}", n, absent)
        row = {name: cells[i].strip() for name, i in col.items()}
        for name in ("item_id", "nlq", "expected_nlr"):
            if not row[name]:
                raise BenchmarkFormatError("empty value", n, name)
        if row["item_id"] in seen:
            raise BenchmarkFormatError(f"duplicate item_id {row['item_id']!r}", n, "item_id")
        seen.add(row["item_id"])
        calls = _parse_calls(row["expected_calls"], registry, n)
        results = _parse_results(row["stub_results"], n)
        if len(results) != len(calls):
            raise BenchmarkFormatError(
                f"{len(results)} stub results for {len(calls)} expected calls", n, "stub_results")
        for c, r in zip(calls, results):
            if c.tool_name != r.tool_name:
                raise BenchmarkFormatError(
                    f"stub for {r.tool_name} paired with call to {c.tool_name}", n, "stub_results")
        items.append(BenchmarkItem(
            row["item_id"], row["nlq"], split_keywords(row["expected_keywords"]),
            row["expected_nlr"], tuple(calls), tuple(results),
        ))
    if len(items) != EXPECTED_ITEMS:
        log.warning("benchmark %s has %d items (expected %d)", path, len(items), EXPECTED_ITEMS)
    return items


def _parse_calls(cell: str, registry: ToolRegistry, line: int) -> list[ToolCall]:
    try:
        raw = json.loads(cell) if cell else []
        if not isinstance(raw, list):
            raise ValueError("expected a JSON list")
        return [registry.prepare(c["tool_name"], c.get("args") or {}) for c in raw]
    except KeyError as exc:
        raise BenchmarkFormatError(f"expected_calls entry lacks {exc}", line, "expected_calls") from None
    except (ValueError, TypeError, TsqaError) as exc:
        raise BenchmarkFormatError(f"unparseable expected_calls: {exc}", line, "expected_calls") from None


def _parse_results(cell: str, line: int) -> list[ToolResult]:
    try:
        raw = json.loads(cell) if cell else []
        if not isinstance(raw, list):
            raise ValueError("expected a JSON list")
        return [ToolResult(r["tool_name"], dict(r["payload"])) for r in raw]
    except KeyError as exc:
        raise BenchmarkFormatError(f"stub_results entry lacks {exc}", line, "stub_results") from None
    except (ValueError, TypeError) as exc:
        raise BenchmarkFormatError(f"unparseable stub_results: {exc}", line, "stub_results") from None


def format_benchmark_row(item_id: str, nlq: str, keywords: Iterable[str], expected_nlr: str,
                         calls: list[dict[str, Any]], results: list[dict[str, Any]]) -> str:
    cells = [item_id, nlq, "|".join(keywords), expected_nlr,
             json.dumps(calls, sort_keys=True), json.dumps(results, sort_keys=True)]
    for c in cells:
        if "\t" in c or "\n" in c:
            raise ValueError(f"tab or newline in benchmark cell {c!r}")
    return "\t".join(cells)


def stub_table(items: Iterable[BenchmarkItem]) -> StubTable:
    return StubTable(e for item in items for e in item.stub_entries())


# -- text normalization ------------------------------------------------------------------

_NUMBER = re.compile(r"-?\d+(?:\.\d+)?")
_TOKEN = re.compile(r"-?\d+(?:\.\d+)?|[a-z]+")
STOP_WORDS = frozenset("""
a about above after again against all am an and any are as at be because been before being below
between both but by can could did do does doing down during each few for from further had has have
having he her here hers herself him himself his how i if in into is it its itself just me more most
my myself no nor not now of off on once only or other our ours ourselves out over own same she should
so some such than that the their theirs them themselves then there these they this those through to
too under until up very was we were what when where which while who whom why will with would you your
yours yourself yourselves also per s t based according ago within past last
""".split())


def canonical_number(text: str) -> str:
    try:
        d = Decimal(text)
    except InvalidOperation:
        return text
    if d == 0:
        return "0"
    return format(d.normalize(), "f")


def numbers_in(text: str) -> set[str]:
    return {canonical_number(m) for m in _NUMBER.findall(text)}


def content_tokens(text: str) -> list[str]:
    out = []
    for tok in _TOKEN.findall(text.lower()):
        if tok[0].isdigit() or tok[0] == "-":
            out.append(canonical_number(tok))
        elif len(tok) > 1 and tok not in STOP_WORDS:
            out.append(tok)
    return out


def keyword_present(keyword: str, text: str) -> bool:
    kw = keyword.strip()
    if _NUMBER.fullmatch(kw):
        return canonical_number(kw) in numbers_in(text)
    return kw.casefold() in text.casefold()


# -- metrics -------------------------------------------------------------------------------

def metric_rr(outcome: QueryOutcome) -> float:
    return 1.0 if outcome.nlr.strip() else 0.0


def metric_ma(outcome: QueryOutcome, item: BenchmarkItem) -> float:
    if not outcome.calls:
        return 0.0
    return 1.0 if match_call_sets(outcome.calls, item.expected_calls) else 0.0


def fallback_la(nlr: str, item: BenchmarkItem) -> float:
    """Share of the expected keywords found in the answer."""
    if not item.expected_keywords:
        return 1.0 if nlr.strip() else 0.0
    hits = sum(keyword_present(k, nlr) for k in item.expected_keywords)
    return hits / len(item.expected_keywords)


def supported_text(item: BenchmarkItem) -> str:
    return item.expected_nlr + " " + " ".join(json.dumps(r.payload, sort_keys=True) for r in item.stub_results)


def fallback_hr(nlr: str, item: BenchmarkItem) -> float:
    """Share of the answer's content tokens absent from the expected answer and stub outputs."""
    tokens = content_tokens(nlr)
    if not tokens:
        return 0.0
    supported = set(content_tokens(supported_text(item)))
    return sum(t not in supported for t in tokens) / len(tokens)


class LLMJudge:
    """Scores LA and HR by asking a backend to apply a fixed rubric.

    Rubric prompts ship with the package under ``data/prompts``. A transport
    failure or an unparseable reply makes the caller fall back to the
    deterministic rules.
    """

    _SCORE = re.compile(r"score\s*[:=]\s*([01](?:\.\d+)?|\.\d+)", re.IGNORECASE)

    def __init__(self, backend: Backend, config: AgentConfig | None = None, prompt_dir: str | os.PathLike | None = None) -> None:
        self.backend = backend
        self.config = config or AgentConfig(temperature=0.0)
        base = Path(prompt_dir) if prompt_dir else Path(str(resources.files("tsqa").joinpath("data/prompts")))
        self.rubrics = {
            "la": (base / "la_rubric.txt").read_text(encoding="utf-8"),
            "hr": (base / "hr_rubric.txt").read_text(encoding="utf-8"),
        }

    def score(self, rubric: str, item: BenchmarkItem, nlr: str) -> float:
        context = "\n".join(json.dumps(r.payload, sort_keys=True) for r in item.stub_results)
        prompt = self.rubrics[rubric].format(
            question=item.nlq, expected=item.expected_nlr, actual=nlr, context=context)
        turn = self.backend.complete(
            [{"role": "user", "content": prompt}], [], self.config, RequestContext(self.config.seed))
        m = self._SCORE.search(turn.content)
        if not m:
            raise ValueError(f"judge reply has no score: {turn.content[:80]!r}")
        value = float(m.group(1))
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"judge score {value} outside [0, 1]")
        return value


def _judged(judge: LLMJudge | None, rubric: str, item: BenchmarkItem, nlr: str, fallback) -> tuple[float, str]:
    if judge is None:
        return fallback(nlr, item), "fallback"
    try:
        return judge.score(rubric, item, nlr), "judge"
    except (BackendTransportError, TsqaError, ValueError) as exc:
        log.warning("judge failed on %s (%s); using fallback", item.item_id, exc)
        return fallback(nlr, item), "fallback-after-judge-error"


def metric_la(outcome: QueryOutcome, item: BenchmarkItem, judge: LLMJudge | None = None) -> tuple[float, str]:
    if not metric_rr(outcome):
        return 0.0, "failed"
    return _judged(judge, "la", item, outcome.nlr, fallback_la)


def metric_hr(outcome: QueryOutcome, item: BenchmarkItem, judge: LLMJudge | None = None) -> tuple[float, str]:
    if not metric_rr(outcome):
        return 1.0, "failed"
    return _judged(judge, "hr", item, outcome.nlr, fallback_hr)


@dataclass
class EvalRecord:
    item_id: str
    rr: float
    ma: float
    la: float
    hr: float
    spq_seconds: float
    la_source: str = "fallback"
    hr_source: str = "fallback"
    outcome: QueryOutcome | None = None

    def value(self, metric: str) -> float:
        return {"RR": self.rr, "MA": self.ma, "LA": self.la, "HR": self.hr, "SPQ": self.spq_seconds}[metric]


def score(outcome: QueryOutcome, item: BenchmarkItem, judge: LLMJudge | None = None) -> EvalRecord:
    la, la_src = metric_la(outcome, item, judge)
    hr, hr_src = metric_hr(outcome, item, judge)
    return EvalRecord(item.item_id, metric_rr(outcome), metric_ma(outcome, item), la, hr,
                      outcome.wall_seconds, la_src, hr_src, outcome)


# -- runs ----------------------------------------------------------------------------------------

def averages(records: list[EvalRecord]) -> dict[str, float]:
    if not records:
        return {m: 0.0 for m in METRICS}
    return {m: sum(r.value(m) for r in records) / len(records) for m in METRICS}


def mean_percentage_error(values: list[float]) -> float:
    """Mean absolute deviation from the mean, as a percent of the mean."""
    mean = sum(values) / len(values)
    if mean == 0:
        return 0.0
    return 100.0 * sum(abs(v - mean) / mean for v in values) / len(values)


@dataclass
class SeedReport:
    seed: int
    records: list[EvalRecord]

    @property
    def averages(self) -> dict[str, float]:
        return averages(self.records)


@dataclass
class RunReport:
    label: str
    mode: str
    config: dict[str, Any]
    seed_reports: list[SeedReport]
    timing: bool = True

    @property
    def seeds(self) -> list[int]:
        return [s.seed for s in self.seed_reports]

    @property
    def records(self) -> list[EvalRecord]:
        return [r for s in self.seed_reports for r in s.records]

    @property
    def averages(self) -> dict[str, float]:
        per_seed = [s.averages for s in self.seed_reports]
        return {m: statistics.fmean(a[m] for a in per_seed) for m in METRICS}

    @property
    def mpe(self) -> dict[str, float] | None:
        if len(self.seed_reports) < 2:
            return None
        per_seed = [s.averages for s in self.seed_reports]
        return {m: mean_percentage_error([a[m] for a in per_seed]) for m in METRICS}

    @property
    def metrics(self) -> tuple[str, ...]:
        return METRICS if self.timing else METRICS[:-1]


def run_benchmark(
    items: list[BenchmarkItem], agent: Agent, mode: Mode = "stub", seeds: Iterable[int] = (1,),
    judge: LLMJudge | None = None, parallelism: int = 1, timing: bool = True, label: str = "agent",
) -> RunReport:
    """Answer and score every item once per seed.

    Items run serially when ``timing`` is on, so SPQ is not skewed by
    concurrent queries; otherwise up to ``parallelism`` at once.
    """
    seeds = list(seeds)
    if not seeds:
        raise ValueError("at least one seed is required")
    seed_reports = []
    for seed in seeds:
        cfg = replace(agent.config, seed=seed)

        def one(item: BenchmarkItem) -> EvalRecord:
            try:
                outcome = agent.answer(item.nlq, mode, item.item_id, config=cfg)
            except Exception as exc:  # never abort a run on one item
                log.exception("item %s crashed", item.item_id)
                outcome = QueryOutcome(item.nlq, failure=Failure("crash", str(exc)), item_id=item.item_id)
            return score(outcome, item, judge)

        if parallelism > 1 and not timing:
            with ThreadPoolExecutor(max_workers=parallelism) as pool:
                records = list(pool.map(one, items))
        else:
            records = [one(item) for item in items]
        seed_reports.append(SeedReport(seed, records))
    return RunReport(label, mode, agent.config.snapshot(), seed_reports, timing)


def rescore(outcomes: dict[int, list[QueryOutcome]], items: list[BenchmarkItem], judge: LLMJudge | None = None,
            label: str = "agent", mode: str = "stub", config: dict[str, Any] | None = None,
            timing: bool = True) -> RunReport:
    """Rebuild a report from persisted outcomes (keyed by seed)."""
    by_id = {i.item_id: i for i in items}
    reports = []
    for seed, outs in outcomes.items():
        recs = []
        for o in outs:
            if o.item_id not in by_id:
                raise BenchmarkFormatError(f"outcome for unknown item {o.item_id!r}")
            recs.append(score(o, by_id[o.item_id], judge))
        reports.append(SeedReport(seed, recs))
    return RunReport(label, mode, config or {}, reports, timing)


# -- reports -----------------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def summary_tsv(report: RunReport) -> str:
    metrics = report.metrics
    lines = ["\t".join(("scope",) + metrics)]
    for s in report.seed_reports:
        avg = s.averages
        lines.append("\t".join([f"seed={s.seed}"] + [_fmt(avg[m]) for m in metrics]))
    avg = report.averages
    lines.append("\t".join(["mean"] + [_fmt(avg[m]) for m in metrics]))
    if report.mpe is not None:
        lines.append("\t".join(["mpe_percent"] + [_fmt(report.mpe[m]) for m in metrics]))
    return "\n".join(lines) + "\n"


def parse_summary_tsv(text: str) -> dict[str, dict[str, float]]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0].split("\t")[1:]
    out = {}
    for ln in lines[1:]:
        cells = ln.split("\t")
        out[cells[0]] = {m: float(v) for m, v in zip(header, cells[1:])}
    return out


def items_tsv(report: RunReport) -> str:
    cols = ["seed", "item_id", "rr", "ma", "la", "hr"] + (["spq_seconds"] if report.timing else []) + [
        "la_source", "hr_source", "attempts", "n_calls", "failure"]
    lines = ["\t".join(cols)]
    for s in report.seed_reports:
        for r in s.records:
            o = r.outcome
            row = [str(s.seed), r.item_id, _fmt(r.rr), _fmt(r.ma), _fmt(r.la), _fmt(r.hr)]
            if report.timing:
                row.append(_fmt(r.spq_seconds))
            row += [r.la_source, r.hr_source, str(o.attempts if o else 0), str(len(o.calls) if o else 0),
                    (o.failure.kind if o and o.failure else "")]
            lines.append("\t".join(row))
    return "\n".join(lines) + "\n"


def markdown_report(report: RunReport) -> str:
    avg = report.averages
    head = "| LLM agent | RR↑ | MA↑ | LA↑ | HR↓ | SPQ↓ |"
    rule = "|---|---:|---:|---:|---:|---:|"

    def row(label: str, a: dict[str, float]) -> str:
        spq = f"{a['SPQ']:.1f}" if report.timing else "-"
        return f"| {label} | {a['RR']:.2f} | {a['MA']:.2f} | {a['LA']:.2f} | {a['HR']:.2f} | {spq} |"

    lines = [f"# Benchmark report: {report.label}", "",
             f"mode: {report.mode}; temperature: {report.config.get('temperature')}; "
             f"seeds: {', '.join(map(str, report.seeds))}; items: {len(report.seed_reports[0].records)}",
             "", head, rule, row(report.label, avg)]
    mpe = report.mpe
    if mpe is not None:
        spq = f"{mpe['SPQ']:.1f}" if report.timing else "-"
        lines.append(f"| MPE % | {mpe['RR']:.1f} | {mpe['MA']:.1f} | {mpe['LA']:.1f} | {mpe['HR']:.1f} | {spq} |")
        lines += ["", "Per seed:", "", head, rule]
        lines += [row(f"seed {s.seed}", s.averages) for s in report.seed_reports]
    return "\n".join(lines) + "\n"


def outcomes_jsonl(report: RunReport) -> str:
    lines = []
    for s in report.seed_reports:
        for r in s.records:
            if r.outcome is not None:
                d = {"seed": s.seed, **r.outcome.to_dict(timing=report.timing)}
                lines.append(json.dumps(d, sort_keys=True))
    return "\n".join(lines) + "\n"


def load_outcomes(path: str | os.PathLike) -> dict[int, list[QueryOutcome]]:
    out: dict[int, list[QueryOutcome]] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            d = json.loads(line)
            out.setdefault(int(d["seed"]), []).append(QueryOutcome.from_dict(d))
    return out


def emit_report(report: RunReport, fmt: str = "markdown") -> str:
    """Render a report as ``markdown``, ``tsv`` (summary), ``items`` (per-item TSV) or ``jsonl`` (outcomes)."""
    renderers = {"markdown": markdown_report, "md": markdown_report, "tsv": summary_tsv,
                 "items": items_tsv, "jsonl": outcomes_jsonl}
    try:
        return renderers[fmt](report)
    except KeyError:
        raise ValueError(f"unknown report format {fmt!r}") from None


REPORT_FILES = {"report.md": "markdown", "summary.tsv": "tsv", "items.tsv": "items", "outcomes.jsonl": "jsonl"}


def write_reports(report: RunReport, out_dir: str | os.PathLike) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, fmt in REPORT_FILES.items():
        p = out / name
        p.write_text(emit_report(report, fmt), encoding="utf-8")
        written.append(p)
    meta = {"label": report.label, "mode": report.mode, "seeds": report.seeds,
            "timing": report.timing, "config": report.config}
    p = out / "run.json"
    p.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    written.append(p)
    return written
