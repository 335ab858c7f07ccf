"""Tests for the four-phase pipeline runner."""

import hashlib
import json
import os
import shutil

import numpy as np
import pytest

from headerscan.pipeline import (DEFAULT_STACKS, RunConfig, config_to_dict,
                                 load_config, load_datasets, run_phases)

SMALL_GRIDS = {
    "logreg": {"lam": [1e-3]},
    "linear_svm": {"C": [10.0]},
    "random_forest": {"n_trees": [15], "max_depth": [None]},
    "knn": {"k": [3]},
    "mlp": {"hidden": [8], "lr": [0.01]},
    "grad_boost": {"n_trees": [15], "learning_rate": [0.1]},
    "adaboost": {"rounds": [15]},
}


def small_config(out_dir, **overrides):
    doc = {
        "seed": 7,
        "output_dir": str(out_dir),
        "synthetic": {"n": 160, "anomaly_fraction": 0.5, "seed": 99},
        "cv_folds": 4,
        "importance_repeats": 3,
        "grids": SMALL_GRIDS,
        "one_class_grid": {"nu": [0.1], "gamma": ["auto"]},
    }
    doc.update(overrides)
    return doc


@pytest.fixture(scope="module")
def full_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("pipeline")
    config_path = root / "config.json"
    config_path.write_text(json.dumps(small_config(root / "out")))
    cfg = load_config(str(config_path))
    manifest = run_phases(cfg)
    return cfg, manifest


def test_artifact_layout(full_run):
    cfg, manifest = full_run
    out = cfg.output_dir
    tables = sorted(os.listdir(os.path.join(out, "reports")))
    assert tables == [
        "phase1_binary.csv", "phase1_binary.txt",
        "phase1_stacking.csv", "phase1_stacking.txt",
        "phase2_binary.csv", "phase2_binary.txt",
        "phase2_stacking.csv", "phase2_stacking.txt",
        "phase3_oneclass.csv", "phase3_oneclass.txt",
        "phase4_oneclass.csv", "phase4_oneclass.txt",
    ]
    assert sorted(os.listdir(os.path.join(out, "models"))) == [
        f"phase{n}.model.json" for n in (1, 2, 3, 4)]
    assert sorted(os.listdir(os.path.join(out, "roc"))) == [
        f"phase{n}.csv" for n in (1, 2, 3, 4)]
    importance = sorted(os.listdir(os.path.join(out, "importance")))
    assert importance == [
        "phase1_linear_svm.csv", "phase1_linear_svm.txt",
        "phase1_mlp.csv", "phase1_mlp.txt",
        "phase1_random_forest.csv", "phase1_random_forest.txt",
    ]
    assert os.path.isfile(os.path.join(out, "manifest.json"))
    assert set(manifest["phases"]) == {"1", "2", "3", "4"}


def test_manifest_contents(full_run):
    cfg, manifest = full_run
    on_disk = json.load(open(os.path.join(cfg.output_dir, "manifest.json")))
    assert on_disk == manifest
    assert manifest["config"] == config_to_dict(cfg)
    assert manifest["datasets"]["ham_spam"]["count"] == 160
    assert len(manifest["datasets"]["ham_spam"]["digest"]) == 64
    for number, entry in manifest["phases"].items():
        fp = entry["schema_fingerprint"]
        assert len(fp) == 16 and int(fp, 16) >= 0
        for report in entry["test"].values():
            tp, fp_, fn, tn = report["confusion"]
            assert tp + fp_ + fn + tn == entry["counts"]["balanced_test"]
            # balanced test: as many anomalous as ham rows
            assert tp + fn == fp_ + tn
            assert 0.0 <= report["accuracy"] <= 1.0
    grid = manifest["phases"]["1"]["grid"]
    assert set(grid) == {"logreg", "linear_svm", "grad_boost", "mlp",
                         "gaussian_nb", "random_forest", "decision_tree",
                         "knn", "adaboost"}
    for entry in grid.values():
        assert entry["cells"]
        assert "fold_accuracies" in entry["cv"]
        assert len(entry["cv"]["fold_accuracies"]) == cfg.cv_folds


def test_selection_and_importance_blocks(full_run):
    cfg, manifest = full_run
    phase1 = manifest["phases"]["1"]
    selected = phase1["selected_features"]
    assert len(selected) == min(cfg.top_m, phase1["feature_count"])
    assert len(set(selected)) == len(selected)
    imp = phase1["importance"]
    assert set(imp) == {"random_forest", "linear_svm", "mlp"}
    for block in imp.values():
        assert len(block["mean_drop"]) == len(block["feature_names"])
        assert block["repeats"] == cfg.importance_repeats


def test_stacking_rows(full_run):
    cfg, manifest = full_run
    names = list(manifest["phases"]["1"]["stacking"])
    assert names == ["RF, MLP, kNN", "RF, MLP, SVM", "RF, kNN, SVM",
                     "MLP, kNN, SVM"]
    assert cfg.stacking == DEFAULT_STACKS


def test_tables_agree_with_manifest(full_run):
    cfg, manifest = full_run
    csv_path = os.path.join(cfg.output_dir, "reports", "phase1_binary.csv")
    rows = [line.split(",") for line in
            open(csv_path).read().strip().splitlines()]
    assert rows[0] == ["Algorithm", "Accuracy", "F1", "Recall",
                       "Precision", "AUC"]
    by_name = {row[0]: row for row in rows[1:]}
    rf = manifest["phases"]["1"]["test"]["random_forest"]
    assert by_name["Random Forest"][1] == f"{rf['accuracy'] * 100.0:.4f}"
    assert by_name["Random Forest"][5] == f"{rf['auc']:.4f}"


def test_one_class_auto_gamma(full_run):
    cfg, manifest = full_run
    for number in ("3", "4"):
        entry = manifest["phases"][number]
        best = entry["grid"]["one_class_svm"]["best_hyperparameters"]
        assert best["gamma"] == pytest.approx(1.0 / entry["feature_count"])
        assert entry["counts"]["train_ham"] >= 2 * cfg.cv_folds


def test_roc_files_are_valid(full_run):
    cfg, _ = full_run
    for n in (1, 2, 3, 4):
        lines = open(os.path.join(cfg.output_dir, "roc",
                                  f"phase{n}.csv")).read().splitlines()
        assert lines[0] == "fpr,tpr"
        pts = np.array([[float(v) for v in line.split(",")]
                        for line in lines[1:]])
        assert tuple(pts[0]) == (0.0, 0.0)
        assert tuple(pts[-1]) == (1.0, 1.0)
        assert (np.diff(pts, axis=0) >= 0).all()


def test_rerun_is_byte_identical(full_run, tmp_path):
    cfg, _ = full_run

    def digest_tree(root):
        out = {}
        for base, _dirs, files in os.walk(root):
            for name in files:
                path = os.path.join(base, name)
                rel = os.path.relpath(path, root)
                out[rel] = hashlib.sha256(open(path, "rb").read()).hexdigest()
        return out

    before = digest_tree(cfg.output_dir)
    shutil.rmtree(cfg.output_dir)
    run_phases(cfg)
    assert digest_tree(cfg.output_dir) == before


def test_single_phase_run(tmp_path):
    out = tmp_path / "out"
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(small_config(out)))
    cfg = load_config(str(config_path))
    manifest = run_phases(cfg, [3])
    assert set(manifest["phases"]) == {"3"}
    assert os.listdir(os.path.join(out, "models")) == ["phase3.model.json"]
    assert sorted(os.listdir(os.path.join(out, "reports"))) == [
        "phase3_oneclass.csv", "phase3_oneclass.txt"]


def test_phases_needing_phishing_are_guarded(tmp_path):
    cfg = RunConfig(seed=1, output_dir=str(tmp_path / "out"),
                    synthetic={"n": 40, "anomaly_fraction": 0.5, "seed": 2})
    datasets = load_datasets(cfg)
    assert datasets.phishing is not None  # synthetic source provides both
    with pytest.raises(ValueError):
        run_phases(RunConfig(seed=1, output_dir=str(tmp_path / "out2"),
                             synthetic=None, trec_index=None), [1])


def test_load_config_validation(tmp_path):
    def write(doc):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(doc))
        return str(path)

    good = small_config(tmp_path / "out")
    load_config(write(good))

    for mutate in (
        lambda d: d.pop("seed"),
        lambda d: d.pop("output_dir"),
        lambda d: d.update(seed="7"),
        lambda d: d.update(bogus_key=1),
        lambda d: d.update(trec_index=str(tmp_path / "missing-index")),
        lambda d: d.update(synthetic={"n": 100}),
        lambda d: d.update(synthetic={"n": 100, "seed": 1,
                                      "anomaly_fraction": 0.0}),
        lambda d: d.update(test_fraction=1.0),
        lambda d: d.update(cv_folds=1),
        lambda d: d.update(chain_direction="sideways"),
        lambda d: d.update(grids={"nonesuch": {"C": [1.0]}}),
        lambda d: d.update(grids={"linear_svm": {"C": []}}),
        lambda d: d.update(stacking=[["random_forest"]]),
        lambda d: d.update(one_class_grid={"nu": [0.1]}),
    ):
        doc = json.loads(json.dumps(good))
        mutate(doc)
        with pytest.raises(ValueError):
            load_config(write(doc))

    # seed and output overrides take precedence over the file
    cfg = load_config(write(good), seed=123,
                      output_dir=str(tmp_path / "elsewhere"))
    assert cfg.seed == 123
    assert cfg.output_dir.endswith("elsewhere")


def test_labeled_dir_sources(tmp_path):
    from headerscan.corpus import Label
    from headerscan.synthetic import generate_emails, write_labeled_dirs

    emails = generate_emails(60, 0.5, seed=4)
    ham_dir, anom_dir = write_labeled_dirs(emails, str(tmp_path / "corpus"))
    phish = generate_emails(40, 0.5, seed=5, anomaly_label=Label.PHISHING)
    _, phish_dir = write_labeled_dirs(phish, str(tmp_path / "phish"))
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({
        "seed": 11, "output_dir": str(tmp_path / "out"),
        "ham_dir": ham_dir, "spam_dir": anom_dir,
        "phishing_dir": phish_dir,
    }))
    datasets = load_datasets(load_config(str(config_path)))
    assert len(datasets.ham_spam) == 60
    labels = {r.label for r in datasets.ham_spam}
    assert labels == {Label.HAM, Label.SPAM}
    assert len(datasets.phishing) == 20
    assert all(r.id.startswith("phishing/") for r in datasets.phishing)
