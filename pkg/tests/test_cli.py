from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from oscar import schemas
from oscar.cli import main
from oscar.config import PROVIDER_URL_ENV, RunConfig, resolve_config
from oscar.tracker import SessionState, predict, update_state

from conftest import recipe_of


RAW_RECIPE = """Tomato Salad
Ingredients:
- 2 tomatoes
- salt
Steps:
Step 1: Cut the tomatoes into pieces and store them in a bowl.
2. Salt the tomatoes.
"""


def _write_recipe(tmp_path) -> Path:
    path = tmp_path / "recipe.txt"
    path.write_text(RAW_RECIPE, encoding="utf-8")
    return path


def _parse_json(capsys) -> dict:
    return json.loads(capsys.readouterr().out)


def test_parse_to_stdout_validates(tmp_path, capsys):
    assert main(["parse", str(_write_recipe(tmp_path))]) == 0
    document = _parse_json(capsys)
    assert schemas.validate(document, "recipe") == []
    assert document["steps"] == [
        "Cut the tomatoes into pieces and store them in a bowl.",
        "Salt the tomatoes.",
    ]


def test_parse_to_file_and_extract_status(tmp_path, capsys):
    recipe_json = tmp_path / "recipe.json"
    assert main(["parse", str(_write_recipe(tmp_path)), "-o", str(recipe_json)]) == 0
    assert main(["extract-status", str(recipe_json)]) == 0
    document = _parse_json(capsys)
    assert schemas.validate(document, "status_map") == []
    assert {"verb": "cutting", "noun": "tomatoes"} in document["1"]
    assert {"verb": "salting", "noun": "tomatoes"} in document["2"]


def test_parse_missing_file_is_domain_error(tmp_path, capsys):
    assert main(["parse", str(tmp_path / "nope.txt")]) == 1
    assert "error:" in capsys.readouterr().err


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["eval"])  # --corpus is required
    assert exc.value.code == 2
    assert main([]) == 2


def _mini_corpus(tmp_path) -> Path:
    corpus = tmp_path / "corpus"
    code = main([
        "--seed", "0", "simulate", "--out", str(corpus),
        "--sessions", "3", "--steps", "4", "--frames-per-step", "10",
        "--clutter", "0.7", "--status-signal", "0.9", "--jitter", "0.05",
    ])
    assert code == 0
    return corpus


def test_simulate_emits_loadable_corpus(tmp_path, capsys):
    corpus = _mini_corpus(tmp_path)
    capsys.readouterr()
    assert schemas.validate(schemas.read_document(corpus / "corpus.json"), "corpus") == []
    for name, schema in (("manifest", "manifest"), ("recipe", "recipe"),
                         ("statuses", "status_map"), ("oracle_scores", "oracle_scores")):
        document = schemas.read_document(corpus / "s000" / f"{name}.json")
        assert schemas.validate(document, schema) == []


def test_eval_writes_report_bundle(tmp_path, capsys):
    corpus = _mini_corpus(tmp_path)
    capsys.readouterr()
    out = tmp_path / "out"
    code = main([
        "--seed", "0", "--provider", "oracle",
        "eval", "--corpus", str(corpus), "--mode", "both",
        "-o", str(out), "--csv", "--emit-logs",
    ])
    assert code == 0
    table = capsys.readouterr().out
    assert "Baseline Accuracy" in table and "OSCAR Accuracy" in table
    assert "Δ Accuracy (OSCAR - Baseline)" in table

    report = schemas.read_document(out / "report.json")
    assert schemas.validate(report, "report") == []
    assert (out / "report.txt").read_text() == table
    assert (out / "report.csv").exists()
    assert (out / "trials.csv").read_text().startswith("video,step,trial,mode,predicted,correct")
    assert (out / "figures" / "accuracy.png").exists()
    assert (out / "figures" / "per_video.png").exists()
    logs = sorted((out / "logs").glob("*.json"))
    assert len(logs) == 3 * 2 * 3  # videos x modes x trials
    for log in logs[:2]:
        assert schemas.validate(schemas.read_document(log), "history_log") == []


def test_eval_reruns_are_byte_identical(tmp_path, capsys):
    corpus = _mini_corpus(tmp_path)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        code = main([
            "--seed", "7", "--provider", "oracle",
            "eval", "--corpus", str(corpus), "--mode", "both",
            "-o", str(out), "--emit-logs", "--no-figures",
        ])
        assert code == 0
        outs.append(out)
    capsys.readouterr()
    for file in ("report.json", "report.txt", "trials.csv"):
        assert (outs[0] / file).read_bytes() == (outs[1] / file).read_bytes()
    logs_a = sorted((outs[0] / "logs").glob("*.json"))
    logs_b = sorted((outs[1] / "logs").glob("*.json"))
    assert [p.name for p in logs_a] == [p.name for p in logs_b]
    for a, b in zip(logs_a, logs_b):
        assert a.read_bytes() == b.read_bytes()


def test_eval_mock_provider_on_synthetic_corpus(tmp_path, capsys):
    corpus = _mini_corpus(tmp_path)
    capsys.readouterr()
    code = main(["--seed", "0", "--provider", "mock", "--json",
                 "eval", "--corpus", str(corpus), "--mode", "baseline"])
    assert code == 0
    document = _parse_json(capsys)
    assert schemas.validate(document, "report") == []
    assert document["modes"] == ["baseline"]


def test_align_and_figure(tmp_path, capsys):
    corpus = _mini_corpus(tmp_path)
    capsys.readouterr()
    out = tmp_path / "scores.json"
    figure = tmp_path / "scores.png"
    code = main([
        "align",
        "--manifest", str(corpus / "s000" / "manifest.json"),
        "--recipe", str(corpus / "s000" / "recipe.json"),
        "--statuses", str(corpus / "s000" / "statuses.json"),
        "-o", str(out), "--figure", str(figure),
    ])
    assert code == 0
    document = schemas.read_document(out)
    assert schemas.validate(document, "frame_scores") == []
    assert len(document["frames"]) == 40
    assert figure.exists()


def test_track_emits_valid_history_log(tmp_path, capsys):
    corpus = _mini_corpus(tmp_path)
    capsys.readouterr()
    log = tmp_path / "session.json"
    code = main([
        "track",
        "--manifest", str(corpus / "s000" / "manifest.json"),
        "--recipe", str(corpus / "s000" / "recipe.json"),
        "--mode", "oscar", "--batch-size", "5",
        "-o", str(log),
    ])
    assert code == 0
    document = schemas.read_document(log)
    assert schemas.validate(document, "history_log") == []
    assert len(document["entries"]) == 8  # 40 frames / batches of 5


def _gap_log(tmp_path) -> Path:
    recipe = recipe_of(4)
    state = SessionState(recipe=recipe)
    for step in (1, 3):
        scores = np.full(4, 0.1)
        scores[step - 1] = 0.9
        update_state(state, predict(scores, state, "oscar"))
    path = tmp_path / "log.json"
    schemas.write_document(path, schemas.history_log_document("v1", "oscar", recipe, state.history))
    return path


def test_query_gap_example(tmp_path, capsys):
    log = _gap_log(tmp_path)
    assert main(["query", "--log", str(log), "--q", "is_done:2"]) == 0
    assert capsys.readouterr().out.strip() == "false"
    assert main(["query", "--log", str(log), "--q", "is_done:3"]) == 0
    assert capsys.readouterr().out.strip() == "true"
    assert main(["query", "--log", str(log), "--q", "missing"]) == 0
    assert capsys.readouterr().out.strip() == "2"
    assert main(["query", "--log", str(log), "--q", "current"]) == 0
    assert capsys.readouterr().out.strip() == "3"


def test_query_json_output_validates(tmp_path, capsys):
    log = _gap_log(tmp_path)
    assert main(["--json", "query", "--log", str(log), "--q", "is_done:2"]) == 0
    document = _parse_json(capsys)
    assert schemas.validate(document, "query_answer") == []
    assert document["answer"] is False


def test_query_unknown_step_is_domain_error(tmp_path, capsys):
    log = _gap_log(tmp_path)
    assert main(["query", "--log", str(log), "--q", "is_done:9"]) == 1
    assert "error:" in capsys.readouterr().err


def test_sweep_writes_table_and_figure(tmp_path, capsys):
    out = tmp_path / "sweep"
    code = main([
        "--seed", "0", "simulate", "--out", str(out),
        "--steps", "5", "--frames-per-step", "10",
        "--sweep", "clutter=0,1", "--cell-sessions", "2",
        "--status-signal", "0.9", "--jitter", "0.05",
    ])
    assert code == 0
    assert (out / "sweep.csv").read_text().startswith("clutter,")
    assert (out / "sweep.png").exists()
    printed = capsys.readouterr().out
    assert "clutter=0.0" in printed and "clutter=1.0" in printed


def test_config_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv(PROVIDER_URL_ENV, "http://env:1")
    assert resolve_config({}).remote_url == "http://env:1"

    config_file = tmp_path / "config.json"
    config_file.write_text(json.dumps({"remote_url": "http://file:2", "seed": 9}))
    merged = resolve_config({}, config_path=str(config_file))
    assert merged.remote_url == "http://file:2"
    assert merged.seed == 9

    merged = resolve_config({"remote_url": "http://flag:3"}, config_path=str(config_file))
    assert merged.remote_url == "http://flag:3"

    with pytest.raises(ValueError):
        resolve_config({}, config_path=str(tmp_path / "bad.json")) if (
            (tmp_path / "bad.json").write_text(json.dumps({"nonsense": 1})) or True
        ) else None


def test_run_config_invariants():
    with pytest.raises(ValueError):
        RunConfig(fusion_weight=1.5)
    with pytest.raises(ValueError):
        RunConfig(debounce=0)
    with pytest.raises(ValueError):
        RunConfig(blur_radius=-1)
    with pytest.raises(ValueError):
        RunConfig(provider="llm")
