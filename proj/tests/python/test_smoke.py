import json
import os
import pathlib

import pytest

import fsbias

SOURCE = pathlib.Path(os.environ.get("FSBIAS_SOURCE_DIR", pathlib.Path(__file__).parents[2]))


def test_tasks():
    assert "offensive" in fsbias.builtin_task_names()
    hop = fsbias.task("hop")
    assert hop["classes"] == ["hate", "offense", "profanity"]


def test_tfidf_worked_example():
    model = fsbias.TfidfModel.fit(["a b", "a c"], min_token_length=1)
    w = model.transform("a b")
    assert w["a"] == pytest.approx(0.579739, abs=1e-6)
    assert w["b"] == pytest.approx(0.814803, abs=1e-6)
    assert model.similarity("a b", "a b") == pytest.approx(1.0)


def test_metrics():
    assert fsbias.roc_auc([0.9, 0.1, 0.5, 0.5], [True, False, True, False]) == 0.875
    r = fsbias.f1_scores(["Yes", "No", "Yes"], ["Yes", "Yes", "No"], ["Yes", "No"], binary=True)
    assert r["f1_binary_pos"] == pytest.approx(0.5)
    with pytest.raises(fsbias.DataError):
        fsbias.roc_auc([0.1, 0.2], [True, True])


def test_edit_distance_and_ratio():
    assert fsbias.edit_distance("kitten", "sitting") == 3
    assert fsbias.dedup_ratio("abcd", "abcd") == 0.0
    with pytest.raises(fsbias.UsageError):
        fsbias.dedup_ratio("a", "b", denominator="bogus")


def test_selection():
    posts = [{"id": f"p{i}", "text": f"t{i}", "label": "Yes" if i % 2 else "No"} for i in range(8)]
    sims = [0.1, 0.9, 0.8, 0.2, 0.7, 0.3, 0.6, 0.4]
    shots = fsbias.select_similarity_balanced("offensive", posts, sims, 4)
    assert sorted(s["id"] for s in shots) == ["p1", "p2", "p4", "p7"]
    edges = fsbias.histogram_bin_edges(sims)
    assert edges[0] == pytest.approx(0.1)
    assert edges[-1] == pytest.approx(0.9)


def test_run_experiment(tmp_path):
    config = SOURCE / "configs" / "e2e_mock.yaml"
    info = fsbias.load_config(str(config))
    summary = fsbias.run_experiment(str(config), str(tmp_path))
    assert summary["fingerprint"] == info["fingerprint"]
    aucs = sorted(c["metrics"]["auc"] for c in summary["cells"])
    assert aucs == pytest.approx([0.26, 0.74])
    on_disk = json.loads((pathlib.Path(summary["run_dir"]) / "summary.json").read_text())
    assert on_disk["fingerprint"] == info["fingerprint"]
