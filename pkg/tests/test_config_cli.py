import json

import pytest

from grabqc.cli import main
from grabqc.config import ConfigError, PipelineConfig, dump_config, load_config

from conftest import FIXTURE_CFG, FIXTURE_DIR


def quick_cfg(tmp_path, **extra):
    """The bundled fixture config with absolute paths and a short training run."""
    lines = [f"corpus = {FIXTURE_DIR / 'corpus.jsonl'}", f"kb = {FIXTURE_DIR / 'kb.jsonl'}",
             f"icd = {FIXTURE_DIR / 'icd.tsv'}", "diagnosis_sections = DIAGNOSIS", "epochs = 2",
             "lr = 0.01", "hidden = 8", "query_width = 8", "embedding_dim = 8"]
    lines += [f"{k} = {v}" for k, v in extra.items()]
    path = tmp_path / "quick.cfg"
    path.write_text("\n".join(lines) + "\n")
    return path


def test_load_bundled_config():
    cfg = load_config(FIXTURE_CFG)
    assert cfg.recall_ks == (1, 8, 15)
    assert cfg.pos_weight is None and cfg.use_external is True
    assert cfg.diagnosis_sections == ("DIAGNOSIS",)
    cfg.validate_paths()


def test_overrides_and_round_trip(tmp_path):
    cfg = load_config(FIXTURE_CFG, seed=7)
    assert cfg.seed == 7
    path = tmp_path / "again.cfg"
    path.write_text(dump_config(cfg))
    assert load_config(path).echo() == cfg.echo()


def test_hash_ignores_out_dir_but_not_settings():
    cfg = load_config(FIXTURE_CFG)
    assert load_config(FIXTURE_CFG, out="/elsewhere").config_hash() == cfg.config_hash()
    assert load_config(FIXTURE_CFG, seed=1).config_hash() != cfg.config_hash()


def test_bad_config_values(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("nonsense = 1\n")
    with pytest.raises(ConfigError, match="nonsense"):
        load_config(path)
    path.write_text("use_external = maybe\n")
    with pytest.raises(ConfigError):
        load_config(path)
    with pytest.raises(ConfigError):
        PipelineConfig(max_hops=0)
    with pytest.raises(ConfigError):
        PipelineConfig(tau=1.5)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")


def run(args, capsys):
    code = main([str(a) for a in args])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_stages_end_to_end(tmp_path, capsys):
    cfg = quick_cfg(tmp_path)
    out = tmp_path / "out"
    code, stdout, _ = run(["--config", cfg, "--out", out, "all"], capsys)
    assert code == 0
    for name in ["corpus.jsonl", "kb.jsonl", "icd.tsv", "queries.jsonl", "graphs.jsonl", "labeled.jsonl",
                 "alignment.json", "model.json", "predictions.jsonl", "report.json", "report.txt"]:
        assert (out / name).is_file(), name
    report = json.loads((out / "report.json").read_text())
    assert {"recall@1", "recall@8", "recall@15"} <= set(report["recall_table"][0])
    assert len(report["recall_table"]) == 6
    assert "recall@15" in stdout

    pred = json.loads((out / "predictions.jsonl").read_text().splitlines()[0])
    assert {"query_id", "q", "q_c", "codes"} <= set(pred)

    # graphs dump agrees with the number of extracted queries
    assert len((out / "graphs.jsonl").read_text().splitlines()) == len((out / "queries.jsonl").read_text().splitlines())

    # a rerun of one stage gives the same file
    before = (out / "graphs.jsonl").read_bytes()
    assert run(["--config", cfg, "--out", out, "build-graphs"], capsys)[0] == 0
    assert (out / "graphs.jsonl").read_bytes() == before

    # a changed setting makes later stages refuse stale artifacts
    code, _, err = run(["--config", cfg, "--out", out, "--seed", "9", "predict"], capsys)
    assert code == 1
    assert json.loads(err.strip().splitlines()[-1])["error"] == "StageError"

    # a tampered artifact is caught as well
    (out / "labeled.jsonl").write_text("")
    code, _, err = run(["--config", cfg, "--out", out, "train"], capsys)
    assert code == 1 and "labeled.jsonl" in err


def test_predict_without_checkpoint(tmp_path, capsys):
    cfg = quick_cfg(tmp_path)
    out = tmp_path / "out"
    for stage in ("ingest", "build-graphs", "label"):
        assert run(["--config", cfg, "--out", out, stage], capsys)[0] == 0
    code, _, err = run(["--config", cfg, "--out", out, "predict"], capsys)
    assert code == 1
    assert "checkpoint" in json.loads(err.strip().splitlines()[-1])["message"]


def test_missing_input_file_is_reported(tmp_path, capsys):
    path = tmp_path / "c.cfg"
    path.write_text("corpus = nope.jsonl\nkb = nope.jsonl\nicd = nope.tsv\n")
    code, _, err = run(["--config", path, "--out", tmp_path / "o", "ingest"], capsys)
    assert code == 1 and json.loads(err.strip().splitlines()[-1])["error"] == "ConfigError"


def test_empty_corpus_gives_empty_dump(tmp_path, capsys):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    cfg = quick_cfg(tmp_path)
    cfg.write_text(cfg.read_text().replace(str(FIXTURE_DIR / "corpus.jsonl"), str(empty)))
    out = tmp_path / "out"
    assert run(["--config", cfg, "--out", out, "ingest"], capsys)[0] == 0
    assert run(["--config", cfg, "--out", out, "build-graphs"], capsys)[0] == 0
    assert (out / "graphs.jsonl").read_text() == ""


def test_malformed_corpus_line_propagates(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"note_id": "A", "sections": {"HPI": "x"}}\n{"note_id": "B"}\n')
    cfg = quick_cfg(tmp_path)
    cfg.write_text(cfg.read_text().replace(str(FIXTURE_DIR / "corpus.jsonl"), str(bad)))
    code, _, err = run(["--config", cfg, "--out", tmp_path / "o", "ingest"], capsys)
    assert code == 1 and "line 2" in err
