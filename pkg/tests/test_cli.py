import csv
import json

import pytest

from surgact.cli import main
from surgact.dataset import ClipRecord, Manifest, save_manifest
from surgact.planning import (
    ClipEntry,
    ContextSequence,
    load_log,
    save_contexts,
)
from surgact.taxonomy import ActionClass as A


@pytest.fixture
def clean_manifest(tmp_path):
    records = [
        ClipRecord(f"v{v}_c{c}", f"v{v}", "cholecystectomy",
                   A.DISSECTION, 10.0, 22.5)
        for v in range(12) for c in range(2)
    ]
    path = tmp_path / "clean.manifest"
    save_manifest(Manifest(records=records), path)
    return path


@pytest.fixture
def dirty_manifest(tmp_path):
    records = [
        ClipRecord("ok", "v0", "cholecystectomy", A.DISSECTION, 10.0, 22.5),
        ClipRecord("short", "v0", "cholecystectomy", A.CLIPPING, 0.0, 1.5),
    ]
    path = tmp_path / "dirty.manifest"
    save_manifest(Manifest(records=records), path)
    return path


def test_dataset_validate_clean(clean_manifest, capsys):
    assert main(["dataset", "validate", "--manifest", str(clean_manifest)]) == 0
    captured = capsys.readouterr()
    assert "0 violations" in captured.err
    assert json.loads(captured.out)["violations"] == 0


def test_dataset_validate_dirty_exits_one(dirty_manifest, capsys):
    assert main(["dataset", "validate", "--manifest", str(dirty_manifest)]) == 1
    out = json.loads(capsys.readouterr().out)
    assert out["by_clip"]["short"] == ["DurationOutOfRange", "TooShortAction"]


def test_dataset_folds_deterministic(clean_manifest, tmp_path, capsys):
    out1 = tmp_path / "f1.json"
    out2 = tmp_path / "f2.json"
    assert main(["dataset", "folds", "--manifest", str(clean_manifest),
                 "--k", "4", "--seed", "11", "--out", str(out1)]) == 0
    assert main(["dataset", "folds", "--manifest", str(clean_manifest),
                 "--k", "4", "--seed", "11", "--out", str(out2)]) == 0
    assert out1.read_text() == out2.read_text()
    assert json.loads(out1.read_text())["seed"] == 11


def test_agree_report(tmp_path, capsys):
    # the hand-computed 2x2 table: kappa = AC1 = 0.6
    path = tmp_path / "pairs.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["clip_id", "rater_a", "rater_b"])
        rows = ([("Clipping", "Clipping")] * 40 + [("Clipping", "Dissection")] * 10
                + [("Dissection", "Clipping")] * 10 + [("Dissection", "Dissection")] * 40)
        for i, (a, b) in enumerate(rows):
            writer.writerow([f"c{i}", a, b])
    assert main(["agree", "--pairs", str(path)]) == 0
    out = capsys.readouterr().out
    assert "cohen_kappa: 0.6000" in out
    assert "gwet_ac1: 0.6000" in out


def test_skill_report_and_svg(tmp_path, capsys):
    segments = tmp_path / "rarp_like.segments"
    segments.write_text(
        '{"total_duration_s": 127}\n'
        '{"action": "NeedleGrasping", "start_s": 0, "end_s": 10}\n'
        '{"action": "NeedleGrasping", "start_s": 12, "end_s": 20}\n'
        '{"action": "NeedlePuncture", "start_s": 22, "end_s": 30}\n'
        '{"action": "NeedlePuncture", "start_s": 31, "end_s": 40}\n'
        '{"action": "SuturePulling", "start_s": 44, "end_s": 60}\n'
        '{"action": "NeedleGrasping", "start_s": 61, "end_s": 70}\n'
        '{"action": "NeedlePuncture", "start_s": 74, "end_s": 86}\n'
        '{"action": "SuturePulling", "start_s": 90, "end_s": 100}\n',
        encoding="utf-8")
    svg_path = tmp_path / "out.svg"
    assert main(["skill", "--segments", str(segments),
                 "--svg", str(svg_path)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["multiple_attempts"] == 2
    assert abs(report["idle_proportion"] - 45 / 127) < 1e-9
    assert svg_path.exists() and "<svg" in svg_path.read_text()


def test_plan_run_and_score_with_mock(tmp_path, capsys):
    contexts = [
        ContextSequence("c1", "cholecystectomy", [
            ClipEntry(f"c1_{i}", a) for i, a in enumerate(
                [A.DISSECTION, A.TISSUE_RETRACTION, A.ASPIRATION,
                 A.TISSUE_RETRACTION, A.DISSECTION, A.CLIPPING,
                 A.TISSUE_RETRACTION])]),
        ContextSequence("c2", "nephrectomy", [
            ClipEntry(f"c2_{i}", a) for i, a in enumerate(
                [A.NEEDLE_GRASPING, A.NEEDLE_PUNCTURE, A.SUTURE_PULLING,
                 A.NEEDLE_GRASPING, A.NEEDLE_PUNCTURE, A.SUTURE_PULLING])]),
    ]
    ctx_path = tmp_path / "contexts.jsonl"
    save_contexts(contexts, ctx_path)
    log_path = tmp_path / "run.jsonl"
    assert main(["plan", "run", "--contexts", str(ctx_path),
                 "--out", str(log_path), "--mock", "ground-truth"]) == 0
    capsys.readouterr()
    log = load_log(log_path)
    assert len(log) == 3  # (7-5) + (6-5)
    assert log.metadata["mock"] == "ground-truth"

    table_path = tmp_path / "table.csv"
    assert main(["plan", "score", "--log", str(log_path),
                 "--out", str(table_path)]) == 0
    with open(table_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["metric"] for r in rows} == {
        "strict_local", "strict_global", "relaxed_local", "relaxed_global"}
    for row in rows:
        assert float(row["top1"]) == 1.0
        assert float(row["top3"]) == 1.0


def test_train_smoke_and_evaluate(tmp_path, capsys):
    scores_path = tmp_path / "scores.jsonl"
    ckpt_path = tmp_path / "model.npz"
    assert main(["train", "--benchmark", "motion", "--epochs", "1",
                 "--checkpoint", str(ckpt_path),
                 "--scores", str(scores_path)]) == 0
    result = json.loads(capsys.readouterr().out)
    assert "held_out_accuracy" in result
    assert ckpt_path.exists() and scores_path.exists()

    report_path = tmp_path / "report.csv"
    assert main(["evaluate", "--scores", str(scores_path),
                 "--out", str(report_path), "--resamples", "20"]) == 0
    with open(report_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert rows[-1]["class"] == "macro"
    assert len(rows) == 4


def test_evaluate_groupwise_table(tmp_path, capsys):
    import numpy as np

    from surgact.metrics import ScoreMatrix, save_scores

    rng = np.random.default_rng(0)
    raw = rng.uniform(size=(60, 3))
    probs = raw / raw.sum(axis=1, keepdims=True)
    sm = ScoreMatrix(probs=probs, labels=rng.integers(0, 3, size=60),
                     group=["cholecystectomy"] * 30 + ["nephrectomy"] * 30)
    scores_path = tmp_path / "scores.jsonl"
    save_scores(sm, scores_path)
    report_path = tmp_path / "report.csv"
    assert main(["evaluate", "--scores", str(scores_path),
                 "--out", str(report_path), "--resamples", "10",
                 "--groupwise", "surgery"]) == 0
    group_csv = tmp_path / "report.csv.surgery.csv"
    assert group_csv.exists()
    with open(group_csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["group"] for r in rows} == {"cholecystectomy", "nephrectomy", "macro"}


def test_usage_error_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["dataset"])  # missing subcommand
    assert exc.value.code == 2


def test_unknown_file_exits_one(capsys):
    assert main(["agree", "--pairs", "/nonexistent/pairs.csv"]) == 1
    assert "error:" in capsys.readouterr().err


def test_effective_config_echoed(clean_manifest, capsys):
    main(["dataset", "validate", "--manifest", str(clean_manifest)])
    err = capsys.readouterr().err
    assert "effective_config" in err
