import csv
import json
import os
import subprocess
import sys
import time
from pathlib import Path

import pytest

from mooclens.cli import STAGES, main, verify_stage
from mooclens.characterize import parse_report

ROOT = Path(__file__).resolve().parents[1]
SAMPLE = ROOT / "configs" / "sample.ini"
PIPELINE = ["ingest", "preprocess", "sentiment", "lda-train", "stats", "characterize"]

SMALL_PLANTED = """\
[run]
seed = 7
[synth]
kind = planted
n_topics = 3
vocab_size = 60
n_docs = 300
doc_len = 40
[lda]
models = qual
[lda.qual]
n_topics = 3
alpha = 0.1
iterations = 300
[coherence]
model = qual
k_min = 2
k_max = 6
"""


def run_all(out, stages=PIPELINE, config=SAMPLE):
    for stage in stages:
        assert main([stage, "-c", str(config), "-o", str(out)]) == 0, stage


def data_files(out):
    return {p.relative_to(out).as_posix(): p.read_bytes() for p in sorted(out.rglob("*"))
            if p.is_file() and "manifests" not in p.parts}


@pytest.fixture(scope="module")
def sample_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("sample")
    os.environ["SOURCE_DATE_EPOCH"] = "1700000000"
    try:
        t0 = time.perf_counter()
        run_all(out)
        elapsed = time.perf_counter() - t0
    finally:
        del os.environ["SOURCE_DATE_EPOCH"]
    return out, elapsed


def test_fixture_pipeline_outputs(sample_run):
    out, elapsed = sample_run
    assert elapsed < 10
    for name in ("corpus.jsonl", "model_qual.json", "model_content.json", "rating_histogram.csv", "manova.json",
                 "report.json", "report.csv", "plot_data.csv"):
        assert (out / name).is_file(), name
    profiles = parse_report(out / "report.json")
    assert len(profiles) == 10
    assert json.loads((out / "report.json").read_text())["generated_at"].startswith("2023-11-14")
    for stage in PIPELINE:
        manifest = json.loads((out / "manifests" / f"{stage}.json").read_text())
        assert manifest["stage"] == stage and len(manifest["config_digest"]) == 64


def test_rerun_is_byte_identical(sample_run, tmp_path, monkeypatch):
    out, _ = sample_run
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    run_all(tmp_path)
    assert data_files(tmp_path) == data_files(out)


def test_verify_then_tamper(sample_run, tmp_path, capsys):
    out, _ = sample_run
    assert main(["stats", "-c", str(SAMPLE), "-o", str(out), "--verify"]) == 0
    assert verify_stage("characterize", out) == []
    copy = tmp_path / "copy"
    run_all(copy, PIPELINE[:2])
    with open(copy / "corpus.jsonl", "a", encoding="utf-8") as fh:
        fh.write("\n")
    assert main(["ingest", "-c", str(SAMPLE), "-o", str(copy), "--verify"]) == 1
    assert "output changed" in capsys.readouterr().err
    assert verify_stage("sentiment", copy) == [f"{copy / 'manifests' / 'sentiment.json'}: no manifest"]


def test_planted_flow_recovers_k(tmp_path):
    config = tmp_path / "planted.ini"
    config.write_text(SMALL_PLANTED)
    out = tmp_path / "out"
    run_all(out, ["synth", "lda-train", "coherence-sweep"], config)
    planted = json.loads((out / "planted.json").read_text())
    with open(out / "coherence_qual.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["k"]) for r in rows] == [2, 3, 4, 5, 6]
    best = [int(r["k"]) for r in rows if r["recommended"] == "True"]
    assert len(best) == 1
    assert abs(best[0] - len(planted["phi"])) <= 1


def test_overrides_recorded_in_manifest(tmp_path):
    assert main(["ingest", "-c", str(SAMPLE), "-o", str(tmp_path), "--set", "corpus.min_reviews=2"]) == 0
    manifest = json.loads((tmp_path / "manifests" / "ingest.json").read_text())
    assert "corpus.min_reviews=2" in manifest["overrides"]
    assert manifest["config"]["corpus"]["min_reviews"] == 2


def test_config_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("MOOCLENS_CONFIG", str(SAMPLE))
    assert main(["ingest", "-o", str(tmp_path)]) == 0
    manifest = json.loads((tmp_path / "manifests" / "ingest.json").read_text())
    assert manifest["config_source"] == str(SAMPLE)


@pytest.mark.parametrize("argv", [
    ["--set", "lda.qual.n_topics=1"],
    ["--set", "corpus.colour=blue"],
    ["--set", "stats.n_perm=ten"],
    ["-c", "/nonexistent/config.ini"],
])
def test_config_errors_exit_2(tmp_path, argv, capsys):
    assert main(["ingest", "-c", str(SAMPLE), "-o", str(tmp_path)] + argv) == 2
    assert "config error" in capsys.readouterr().err


def test_unknown_section_exits_2(tmp_path):
    config = tmp_path / "bad.ini"
    config.write_text("[run]\nseed = 1\n[extras]\nx = 1\n")
    assert main(["ingest", "-c", str(config), "-o", str(tmp_path)]) == 2


def test_rejects_exit_1_with_sidecar(tmp_path):
    data = tmp_path / "reviews.jsonl"
    good = {"review_id": "r1", "course_id": "c1", "rating": 5, "text": "a very good course"}
    data.write_text(json.dumps(good) + "\n{broken\n")
    out = tmp_path / "out"
    assert main(["ingest", str(data), "-o", str(out)]) == 1
    rejects = [json.loads(line) for line in (out / "corpus.rejects.jsonl").read_text().splitlines()]
    assert [r["reason"] for r in rejects] == ["invalid_json"]
    assert main(["ingest", str(data), "-o", str(out), "--set", "corpus.allow_rejects=true"]) == 0


def test_missing_upstream_exits_1(tmp_path, capsys):
    assert main(["lda-train", "-c", str(SAMPLE), "-o", str(tmp_path)]) == 1
    assert "not found" in capsys.readouterr().err


def test_stale_lock_is_taken_over(tmp_path):
    proc = subprocess.run([sys.executable, "-c", "import os; print(os.getpid())"], capture_output=True, text=True)
    (tmp_path / ".mooclens.lock").write_text(proc.stdout.strip())
    assert main(["ingest", "-c", str(SAMPLE), "-o", str(tmp_path)]) == 0
    assert not (tmp_path / ".mooclens.lock").exists()


def test_live_lock_refuses(tmp_path, capsys):
    (tmp_path / ".mooclens.lock").write_text(str(os.getppid()))
    assert main(["ingest", "-c", str(SAMPLE), "-o", str(tmp_path)]) == 1
    assert "locked" in capsys.readouterr().err
    assert (tmp_path / ".mooclens.lock").exists()


def test_every_stage_has_help():
    for stage in STAGES:
        with pytest.raises(SystemExit) as exc:
            main([stage, "--help"])
        assert exc.value.code == 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mooclens", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("mooclens ")
