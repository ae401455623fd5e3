import json

import pytest
from click.testing import CliRunner

from conftest import make_series
from tsqa import harness
from tsqa.cli import EXIT_DATA, EXIT_TRANSPORT, EXIT_USAGE, cli, main
from tsqa.market_data import HOUR, InstrumentKey, write_candles_csv

VOL_Q = "What is the volatility of BTC?"


@pytest.fixture
def data_dir(tmp_path):
    d = tmp_path / "data"
    d.mkdir()
    series = []
    for base, scale in (("BTC", 1.0), ("ETH", 0.05)):
        closes = [scale * (100 + (i % 13)) for i in range(24 * 10)]
        s = make_series([1.0] * len(closes), key=InstrumentKey(base), interval=HOUR, closes=closes)
        write_candles_csv(s, d / f"{base.lower()}.csv")
        series.append({"file": f"{base.lower()}.csv", "base": base, "quote": "USDT",
                       "exchange": "BINANCE", "interval": "1h"})
    (d / "manifest.json").write_text(json.dumps({"gap_policy": "reject", "series": series}))
    return d


def test_ingest(data_dir, capsys):
    assert main(["ingest", "--data-dir", str(data_dir)]) == 0
    out = capsys.readouterr().out
    assert "BTC/USDT@BINANCE\t240 candles" in out and "2 instrument(s)" in out


def test_ingest_missing_manifest(tmp_path, capsys):
    assert main(["ingest", "--data-dir", str(tmp_path)]) == EXIT_DATA
    assert "manifest not found" in capsys.readouterr().err


def test_usage_errors_exit_1(capsys):
    assert main(["bogus"]) == EXIT_USAGE
    assert main(["query"]) == EXIT_USAGE  # --nlq missing
    assert main(["query", "--nlq", "x", "--mode", "real"]) == EXIT_USAGE  # no data dir
    assert main(["query", "--nlq", "x", "--backend", "openai"]) == EXIT_USAGE  # no endpoint
    assert main(["query", "--nlq", "x", "--backend", "mock"]) == EXIT_USAGE  # no script


def test_help_exits_0(capsys):
    assert main(["--help"]) == 0
    assert "bench" in capsys.readouterr().out


def test_query_stub_replay(capsys):
    assert main(["query", "--nlq", VOL_Q, "--verbose"]) == 0
    out = capsys.readouterr().out
    assert "-> volatility(base_token='BTC'" in out
    assert '<- {"volatility_percent":' in out
    assert "5.0%" in out


def test_query_real_with_script(data_dir, tmp_path, capsys, caplog):
    script = tmp_path / "script.json"
    script.write_text(json.dumps([
        {"match": "corr", "nlq": "corr?", "template": True, "final_text": "r = {0[correlation]:.3f}",
         "calls": [{"tool_name": "correlation_between_tokens", "args": {"base_token_a": "BTC", "base_token_b": "ETH"}}]},
        {"match": "doge", "nlq": "doge?", "template": True, "final_text": "{0[error]}",
         "calls": [{"tool_name": "price", "args": {"base_token": "DOGE"}}]},
    ]))
    common = ["--mode", "real", "--data-dir", str(data_dir), "--backend", "mock", "--script", str(script)]
    assert main(["query", "--nlq", "corr?", *common]) == 0
    assert capsys.readouterr().out.strip() == "r = 1.000"
    assert main(["query", "--nlq", "doge?", *common]) == 0
    assert "unknown instrument DOGE" in capsys.readouterr().out
    assert "unknown instrument DOGE" in caplog.text


def test_config_file_and_overrides(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"mode": "stub", "agent": {"temperature": 1.0}, "seeds": [1, 10]}))
    out = tmp_path / "run"
    assert main(["bench", "--config", str(cfg), "--limit", "5", "--no-timing", "--out", str(out)]) == 0
    run = json.loads((out / "run.json").read_text())
    assert run["seeds"] == [1, 10] and run["config"]["temperature"] == 1.0
    assert main(["bench", "--config", str(cfg), "--limit", "5", "--seeds", "7", "--temperature", "0.5",
                 "--no-timing", "--out", str(out)]) == 0
    run = json.loads((out / "run.json").read_text())
    assert run["seeds"] == [7] and run["config"]["temperature"] == 0.5

    cfg.write_text(json.dumps({"api_key": "sk-oops"}))
    assert main(["query", "--config", str(cfg), "--nlq", "x"]) == EXIT_USAGE
    cfg.write_text(json.dumps({"agent": {"sampling": 3}}))
    assert main(["query", "--config", str(cfg), "--nlq", "x"]) == EXIT_USAGE


def test_bench_and_report(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["bench", "--seeds", "1,10", "--noise", "0.2", "--no-timing", "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "| MPE % |" in printed and f"reports written to {out}" in printed
    assert main(["report", "--run", str(out), "--format", "tsv"]) == 0
    assert capsys.readouterr().out == (out / "summary.tsv").read_text()
    assert main(["report", "--run", str(out)]) == 0
    assert capsys.readouterr().out == (out / "report.md").read_text()


def test_bench_bad_benchmark(tmp_path, capsys):
    bad = tmp_path / "bad.tsv"
    bad.write_text("\t".join(harness.COLUMNS) + "\nx\tq\n")
    assert main(["bench", "--benchmark", str(bad), "--out", str(tmp_path / "o")]) == EXIT_DATA
    assert "line 2" in capsys.readouterr().err


def test_transport_failure_exit_3(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"agent": {"transport_retries": 0}}))
    rc = main(["query", "--config", str(cfg), "--nlq", VOL_Q, "--backend", "openai",
               "--endpoint", "http://127.0.0.1:9/v1", "--model", "m"])
    assert rc == EXIT_TRANSPORT
    assert "no answer" in capsys.readouterr().err


def test_chat_session():
    result = CliRunner().invoke(cli, ["chat"], input=f"{VOL_Q}\n/quit\n")
    assert result.exit_code == 0
    assert "5.0%" in result.output


def test_schemas(capsys):
    assert main(["schemas"]) == 0
    decls = json.loads(capsys.readouterr().out)
    assert len(decls) == 14
