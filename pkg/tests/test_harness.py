import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsqa import harness
from tsqa.agent import Agent, AgentConfig, AssistantTurn, Failure, QueryOutcome
from tsqa.cli import replay_backend
from tsqa.errors import BackendTransportError, BenchmarkFormatError
from tsqa.registry import ToolRegistry

ITEMS = harness.load_benchmark()
BY_ID = {i.item_id: i for i in ITEMS}


def test_corpus_shape():
    assert len(ITEMS) == 100
    assert len({i.item_id for i in ITEMS}) == 100
    assert all(i.expected_calls for i in ITEMS)
    tools_used = {c.tool_name for i in ITEMS for c in i.expected_calls}
    assert tools_used == set(ToolRegistry().names)
    assert len(harness.load_benchmark(harness.default_benchmark_path().with_name("benchmark_smoke.tsv"))) == 10


def _write(tmp_path, rows):
    p = tmp_path / "b.tsv"
    p.write_text("\t".join(harness.COLUMNS) + "\n" + "".join("\t".join(r) + "\n" for r in rows))
    return p


def test_loader_reports_line_and_column(tmp_path):
    good = ["a", "q", "x", "nlr", json.dumps([{"tool_name": "price", "args": {"base_token": "BTC"}}]),
            json.dumps([{"tool_name": "price", "payload": {"price": 1.0}}])]
    bad_json = ["b"] + good[1:4] + ["[{oops"] + good[5:]
    with pytest.raises(BenchmarkFormatError) as info:
        harness.load_benchmark(_write(tmp_path, [good, bad_json]))
    assert info.value.line == 3 and info.value.column == "expected_calls"

    unknown_tool = good[:4] + [json.dumps([{"tool_name": "nope", "args": {}}])] + good[5:]
    with pytest.raises(BenchmarkFormatError) as info:
        harness.load_benchmark(_write(tmp_path, [unknown_tool]))
    assert info.value.line == 2

    with pytest.raises(BenchmarkFormatError):
        harness.load_benchmark(_write(tmp_path, [good, good]))  # duplicate id
    with pytest.raises(BenchmarkFormatError):
        harness.load_benchmark(_write(tmp_path, [good[:5] + ["[]"]]))  # results do not align
    with pytest.raises(BenchmarkFormatError):
        harness.load_benchmark(_write(tmp_path, [good[:3]]))


def test_loader_fills_expected_calls():
    item = BY_ID["vol-01"]
    assert item.expected_calls[0].args == {"base_token": "BTC", "quote_token": "USDT", "exchange": "BINANCE",
                                           "time_interval": 1, "time_unit": "day"}


# -- metrics -------------------------------------------------------------------------------

def outcome(item, nlr, calls=None):
    return QueryOutcome(item.nlq, nlr, list(item.expected_calls if calls is None else calls), item_id=item.item_id)


def test_rr_and_ma():
    item = BY_ID["vol-01"]
    assert harness.metric_rr(outcome(item, "  ")) == 0.0
    assert harness.metric_rr(outcome(item, "x")) == 1.0
    assert harness.metric_ma(outcome(item, "x"), item) == 1.0
    assert harness.metric_ma(outcome(item, "x", []), item) == 0.0
    wrong = ToolRegistry().prepare("volatility", {"base_token": "ETH"})
    assert harness.metric_ma(outcome(item, "x", [wrong]), item) == 0.0


def test_fallback_la_keywords():
    item = BY_ID["vol-01"]
    assert harness.fallback_la(item.expected_nlr, item) == 1.0
    assert harness.fallback_la("no idea", item) == 0.0
    # numbers compare by value, not by spelling
    assert harness.keyword_present("5.0", "roughly 5 percent")
    assert not harness.keyword_present("5.0", "roughly 15 percent")
    assert harness.keyword_present("-45.2", "fell by -45.20%")


def test_fallback_hr():
    item = BY_ID["vol-01"]
    assert harness.fallback_hr(item.expected_nlr, item) == 0.0
    assert harness.fallback_hr("", item) == 0.0
    assert harness.fallback_hr("purple elephants", item) == 1.0
    half = harness.fallback_hr("BTC volatility unicorns rainbow", item)
    assert half == pytest.approx(0.5)


def test_failed_items_score_worst():
    item = BY_ID["vol-01"]
    o = QueryOutcome(item.nlq, failure=Failure("empty_output", "x"), item_id=item.item_id)
    r = harness.score(o, item)
    assert (r.rr, r.la, r.hr) == (0.0, 0.0, 1.0)


@given(st.text(max_size=200))
@settings(max_examples=200, deadline=None)
def test_metric_ranges(nlr):
    item = BY_ID["corr-tokens-01"]
    r = harness.score(outcome(item, nlr), item)
    for v in (r.rr, r.ma, r.la, r.hr):
        assert 0.0 <= v <= 1.0


class Judge:
    def __init__(self, reply=None, fail=False):
        self.reply = reply
        self.fail = fail
        self.prompts = []

    def complete(self, messages, tools, config, context):
        self.prompts.append(messages[0]["content"])
        if self.fail:
            raise BackendTransportError("down")
        return AssistantTurn(self.reply)


def test_llm_judge_and_fallback():
    item = BY_ID["vol-01"]
    o = outcome(item, item.expected_nlr)
    backend = Judge("Reasoning... SCORE: 0.75")
    r = harness.score(o, item, harness.LLMJudge(backend))
    assert (r.la, r.la_source) == (0.75, "judge")
    assert item.nlq in backend.prompts[0]
    assert "volatility_percent" in backend.prompts[1]  # the HR rubric sees the tool output
    r = harness.score(o, item, harness.LLMJudge(Judge(fail=True)))
    assert (r.la, r.hr, r.la_source) == (1.0, 0.0, "fallback-after-judge-error")
    r = harness.score(o, item, harness.LLMJudge(Judge("great answer")))
    assert r.la_source == "fallback-after-judge-error"


# -- aggregation and reports ---------------------------------------------------------------

def test_mean_percentage_error_by_hand():
    assert harness.mean_percentage_error([0.9, 1.0, 1.1]) == pytest.approx(100 * (0.1 + 0 + 0.1) / 3 / 1.0)
    assert harness.mean_percentage_error([0.0, 0.0]) == 0.0
    assert harness.mean_percentage_error([2.0, 2.0, 2.0]) == 0.0


def _run(seeds=(1, 10), noise=0.3, timing=False):
    items = ITEMS[:30]
    reg = ToolRegistry(stubs=harness.stub_table(items))
    agent = Agent(reg, replay_backend(items, noise), AgentConfig(temperature=1.0))
    return harness.run_benchmark(items, agent, "stub", seeds, timing=timing, label="mock")


def test_summary_tsv_round_trip():
    report = _run()
    parsed = harness.parse_summary_tsv(harness.summary_tsv(report))
    for s in report.seed_reports:
        assert parsed[f"seed={s.seed}"] == {m: s.averages[m] for m in report.metrics}
    assert parsed["mean"] == {m: report.averages[m] for m in report.metrics}
    assert "SPQ" not in parsed["mean"]
    assert "SPQ" in harness.summary_tsv(_run(seeds=(1,), timing=True))


def test_rescore_reproduces_report(tmp_path):
    report = _run()
    harness.write_reports(report, tmp_path)
    outs = harness.load_outcomes(tmp_path / "outcomes.jsonl")
    again = harness.rescore(outs, ITEMS, label="mock", mode="stub", config=report.config, timing=False)
    assert harness.summary_tsv(again) == harness.summary_tsv(report)
    assert sorted(p.name for p in tmp_path.iterdir()) == [
        "items.tsv", "outcomes.jsonl", "report.md", "run.json", "summary.tsv"]


def test_crash_is_contained():
    class Boom:
        def complete(self, *a):
            raise RuntimeError("kaboom")

    items = ITEMS[:3]
    agent = Agent(ToolRegistry(stubs=harness.stub_table(items)), Boom())
    report = harness.run_benchmark(items, agent, "stub", [1], timing=False)
    assert report.averages["RR"] == 0.0
    assert report.records[0].outcome.failure.kind == "crash"


def test_parallel_run_matches_serial():
    items = ITEMS[:40]
    reg = ToolRegistry(stubs=harness.stub_table(items))
    agent = Agent(reg, replay_backend(items, 0.4), AgentConfig(temperature=1.0))
    a = harness.run_benchmark(items, agent, "stub", [1, 10], timing=False)
    b = harness.run_benchmark(items, agent, "stub", [1, 10], timing=False, parallelism=8)
    assert harness.items_tsv(a) == harness.items_tsv(b)


def test_report_format_errors():
    with pytest.raises(ValueError):
        harness.emit_report(_run(seeds=(1,)), "pdf")
