import csv
import hashlib
import json
from importlib.resources import files
from pathlib import Path

import pytest

from amdn.cli import UsageError, main, parse_config
from amdn.maxsat import read_wcnf

BLOCKS = str(files("amdn") / "data" / "blocks.pddl")


def run(*argv):
    return main([str(a) for a in argv])


def digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("gen")
    assert run("gen", "--domain", BLOCKS, "--traces", 6, "--disorder", 0.05, "--noise", 0.05,
               "--seed", 4, "--run-dir", d) == 0
    return d


def test_gen_writes_traces_log_and_manifest(corpus):
    assert {p.name for p in corpus.iterdir()} >= {"traces.sexp", "swaps.json", "manifest.json"}
    man = json.loads((corpus / "manifest.json").read_text())
    assert man["command"] == "gen" and man["config"]["traces"] == 6 and man["seeds"]["seed"] == 4
    for path, h in man["outputs"].items():
        assert digest(path) == h
    assert len(man["plan_lengths"]) == 6


def test_learn_then_eval(corpus, tmp_path, capsys):
    assert run("learn", "--domain", BLOCKS, "--traces", corpus / "traces.sexp", "--run-dir", tmp_path) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["traces"] == 6
    assert run("eval", "--learned", tmp_path / "learned.pddl", "--truth", BLOCKS, "--run-dir", tmp_path) == 0
    acc = json.loads((tmp_path / "metrics.json").read_text())["acc"]
    assert 0.0 <= acc <= 1.0
    assert capsys.readouterr().out.strip().endswith(f"{acc:.4f}")


def test_compile_solve_import_matches_learn(corpus, tmp_path):
    traces = corpus / "traces.sexp"
    assert run("compile", "--domain", BLOCKS, "--traces", traces, "--run-dir", tmp_path) == 0
    assert read_wcnf((tmp_path / "theory.wcnf").read_text()).num_vars > 0
    assert run("solve", "--wcnf", tmp_path / "theory.wcnf", "--solver", "milp", "--run-dir", tmp_path) == 0
    imported = tmp_path / "imported"
    assert run("learn", "--domain", BLOCKS, "--traces", traces, "--import-model", tmp_path / "model.txt",
               "--solver", "milp", "--run-dir", imported) == 0
    direct = tmp_path / "direct"
    assert run("learn", "--domain", BLOCKS, "--traces", traces, "--solver", "milp", "--run-dir", direct) == 0
    rep_i = json.loads((imported / "report.json").read_text())
    rep_d = json.loads((direct / "report.json").read_text())
    assert rep_i["solver"]["cost"] == rep_d["solver"]["cost"] and rep_i["solver"]["hard_ok"]


def test_export_only_matches_compile(corpus, tmp_path):
    traces = corpus / "traces.sexp"
    run("compile", "--domain", BLOCKS, "--traces", traces, "--run-dir", tmp_path / "a")
    run("learn", "--domain", BLOCKS, "--traces", traces, "--export-only", "--run-dir", tmp_path / "b")
    for name in ("theory.wcnf", "varmap.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert not (tmp_path / "b" / "learned.pddl").exists()


def test_manifest_replays_a_run(corpus, tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    args = ["learn", "--domain", BLOCKS, "--traces", corpus / "traces.sexp", "--solver", "milp"]
    assert run(*args, "--run-dir", first) == 0
    assert run("learn", "--config", first / "manifest.json", "--run-dir", second) == 0
    for name in ("learned.pddl", "report.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_experiment_writes_table_and_csv(tmp_path):
    out = tmp_path / "table.csv"
    assert run("experiment", "--domain", BLOCKS, "--vary", "traces=2,4", "--repeats", 2, "--solver", "milp",
               "--run-dir", tmp_path, "--csv", out) == 0
    trends = json.loads((tmp_path / "trends.json").read_text())
    assert trends["axis"] == "traces" and [r["value"] for r in trends["rows"]] == [2, 4]
    assert all(r["n"] == 2 for r in trends["rows"]) and len(trends["runs"]) == 4
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["traces", "n", "mean_acc", "stdev_acc"] and len(rows) == 3


def test_usage_errors_exit_2(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        run("learn", "--traces", "x.sexp")
    assert exc.value.code == 2
    assert run("learn", "--domain", tmp_path / "missing.pddl", "--traces", "x", "--run-dir", tmp_path) == 2
    assert run("learn", "--config", tmp_path / "nope.cfg", "--domain", BLOCKS, "--traces", "x") == 2
    assert "cannot read" in capsys.readouterr().err


def test_stage_failures_exit_1(tmp_path, capsys):
    assert run("experiment", "--domain", BLOCKS, "--vary", "traces=2", "--vary", "noise=0.1",
               "--run-dir", tmp_path) == 1
    assert run("experiment", "--domain", BLOCKS, "--vary", "traces=2", "--repeats", 0, "--run-dir", tmp_path) == 1
    bad = tmp_path / "bad.sexp"
    bad.write_text("(trace")
    assert run("learn", "--domain", BLOCKS, "--traces", bad, "--run-dir", tmp_path) == 1
    err = capsys.readouterr().err
    assert "MixedVariation" in err and "EmptyInput" in err


def test_config_file_supplies_required_flags(corpus, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"domain = {BLOCKS}\ntraces = {corpus / 'traces.sexp'}  # the corpus\nsolver = milp\n")
    assert run("learn", "--config", cfg, "--run-dir", tmp_path) == 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["config"]["solver"] == "milp"


def test_parse_config():
    assert parse_config("# comment\n\nmax-flips = 10\nsolver=exact # inline\n") == {"max_flips": "10", "solver": "exact"}
    with pytest.raises(UsageError):
        parse_config("just words\n")
