import json

import pytest

from wavecart.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from wavecart.manifest import save_dataset
from wavecart.report import TABLES

PHASES = ("phase1_screening", "phase2_ranking", "phase3_steps", "phase5_importance", "phase5_refinement",
          "final_tree")

FAST_YAML = """\
m: 128
min_node_size: 3
cv_folds: 5
cv_repeats: 2
bootstrap_count: 5
refinement_max_size: 5
final_top_k: 3
seed: 7
"""


@pytest.fixture
def workspace(tmp_path, small_dataset):
    manifest = save_dataset(small_dataset, tmp_path / "raw")
    config = tmp_path / "fast.yaml"
    config.write_text(FAST_YAML)
    return tmp_path, manifest, config


def _run(*argv):
    return main([str(a) for a in argv] + ["--quiet", "--threads", "1"])


def test_run_writes_report_and_tables(workspace):
    tmp, manifest, config = workspace
    assert _run("run", "--manifest", manifest, "--config", config, "--out", tmp / "out") == EXIT_OK
    report = json.loads((tmp / "out" / "report.json").read_text())
    assert report["summary"]["n"] == 40
    assert report["config"]["m"] == 128
    for name in TABLES:
        assert (tmp / "out" / f"{name}.csv").is_file()


def test_run_is_byte_identical(workspace):
    tmp, manifest, config = workspace
    for out in ("a", "b"):
        assert _run("run", "--manifest", manifest, "--config", config, "--out", tmp / out) == EXIT_OK
    for name in ["report.json"] + [f"{t}.csv" for t in TABLES]:
        assert (tmp / "a" / name).read_bytes() == (tmp / "b" / name).read_bytes()


def test_stages_match_end_to_end_run(workspace):
    tmp, manifest, config = workspace
    common = ["--config", config]
    assert _run("run", "--manifest", manifest, "--out", tmp / "run", *common) == EXIT_OK
    assert _run("preprocess", "--manifest", manifest, "--out", tmp / "pre", *common) == EXIT_OK
    assert (tmp / "pre" / "preprocess_audit.json").is_file()
    assert _run("compress", "--manifest", tmp / "pre" / "manifest.json", "--out", tmp / "comp", *common) == EXIT_OK
    assert (tmp / "comp" / "eq_curves.csv").is_file()
    assert _run("select", "--packets", tmp / "comp" / "packets", "--out", tmp / "sel", *common) == EXIT_OK

    full = json.loads((tmp / "run" / "report.json").read_text())
    staged = json.loads((tmp / "sel" / "report.json").read_text())
    for key in PHASES:
        assert staged[key] == full[key]
    compression = json.loads((tmp / "comp" / "compression.json").read_text())
    assert compression == full["compression"]


def test_strategy_override(workspace):
    tmp, manifest, config = workspace
    assert _run("run", "--manifest", manifest, "--config", config, "--out", tmp / "out",
                "--strategy", "top_k", "--top-k", "2") == EXIT_OK
    report = json.loads((tmp / "out" / "report.json").read_text())
    assert report["summary"]["final_strategy"] == "top_k"
    assert len(report["summary"]["final_criteria"]) <= 2


def test_report_renders(workspace, capsys):
    tmp, manifest, config = workspace
    assert _run("run", "--manifest", manifest, "--config", config, "--out", tmp / "out") == EXIT_OK
    capsys.readouterr()
    assert main(["report", "--report", str(tmp / "out")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "final criteria:" in out
    assert "forward_steps" in out
    assert "low-signal test: best importance in the CV-pruned tree < 1.0% of root impurity" in out


def test_missing_manifest(tmp_path, capsys):
    missing = tmp_path / "nowhere" / "manifest.json"
    assert _run("run", "--manifest", missing, "--out", tmp_path / "out") == EXIT_DATA
    assert str(missing) in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_unknown_flag(tmp_path):
    assert main(["run", "--manifest", "x.json", "--bogus"]) == EXIT_USAGE


def test_missing_out(workspace):
    _, manifest, config = workspace
    assert _run("run", "--manifest", manifest, "--config", config) == EXIT_USAGE


def test_bad_config(workspace, capsys):
    tmp, manifest, _ = workspace
    bad = tmp / "bad.yaml"
    bad.write_text("cv_folds: 0\n")
    assert _run("run", "--manifest", manifest, "--config", bad, "--out", tmp / "out") == EXIT_DATA
    assert "cv_folds" in capsys.readouterr().err


def test_synth_writes_ground_truth(tmp_path):
    assert _run("synth", "--n", 20, "--seed", 1, "--out", tmp_path / "syn") == EXIT_OK
    truth = json.loads((tmp_path / "syn" / "ground_truth.json").read_text())
    assert truth["discriminant"] == [3, 11, 17]
    assert sum(truth["class_counts"]) == 20
    meta = json.loads((tmp_path / "syn" / "manifest.json").read_text())
    assert len(meta["trials"]) == 20
