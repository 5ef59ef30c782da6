import hashlib
import json
import subprocess
import sys
from pathlib import Path

import pytest

from edgemask.cli import main
from edgemask.experiment import Prediction, gt_predictions, save_predictions
from edgemask.raster import Box
from edgemask.synthcorpus import load_corpus, save_corpus
from edgemask.synthcorpus.font import CELL_H
from edgemask.toyseg import TrainConfig, init_params, load_checkpoint


def tree_hashes(root: Path, pattern="pages/*") -> dict:
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(root.glob(pattern))}


def manifest(path: Path) -> dict:
    return json.loads(path.read_text())


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    assert main(["gen", "--pages", "4", "--seed", "3", "--out", str(out)]) == 0
    return out


def test_gen_is_deterministic(tmp_path):
    for name in ("a", "b"):
        assert main(["gen", "--pages", "1", "--seed", "42", "--out", str(tmp_path / name)]) == 0
    a, b = tree_hashes(tmp_path / "a"), tree_hashes(tmp_path / "b")
    assert a == b and len(a) == 2
    m = manifest(tmp_path / "a" / "manifest.json")
    assert m["status"] == "ok" and m["command"] == "gen" and m["seed"] == 42
    assert m["config"]["pages"] == 1 and m["outputs"]["pages"] == 1


def test_gen_zero_pages(tmp_path):
    assert main(["gen", "--pages", "0", "--out", str(tmp_path / "c")]) == 0
    assert load_corpus(tmp_path / "c") == []
    assert (tmp_path / "c" / "manifest.json").exists()


def test_train_zero_iterations_equals_init(corpus, tmp_path):
    out = tmp_path / "m.json"
    assert main(["train", "--corpus", str(corpus), "--lambda", "100", "--iters", "0", "--k", "2",
                 "--m", "28", "--seed", "5", "--out", str(out)]) == 0
    params, cfg = load_checkpoint(out)
    assert params == init_params(8, seed=5)
    assert cfg == TrainConfig(lam=100, iterations=0, seed=5)
    assert manifest(tmp_path / "m.json.manifest.json")["status"] == "ok"
    report = json.loads((tmp_path / "m.json.report.json").read_text())
    assert report["loss_trace"] == [] and "wall_time" not in report


def test_train_reruns_are_identical(corpus, tmp_path):
    args = ["train", "--corpus", str(corpus), "--lambda", "30", "--iters", "25", "--seed", "1"]
    for name in ("a.json", "b.json"):
        assert main(args + ["--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert (tmp_path / "a.json.report.json").read_bytes() == (tmp_path / "b.json.report.json").read_bytes()


def test_invalid_lambda_fails_with_manifest(corpus, tmp_path):
    out = tmp_path / "bad.json"
    assert main(["train", "--corpus", str(corpus), "--lambda", "-1", "--out", str(out)]) == 1
    m = manifest(tmp_path / "bad.json.manifest.json")
    assert m["status"] == "failed" and "lambda" in m["error"]
    assert not out.exists()


def test_missing_corpus_fails(tmp_path):
    out = tmp_path / "e.json"
    assert main(["eval", "--corpus", str(tmp_path / "nope"), "--preds", "x", "--out", str(out)]) == 1
    m = manifest(tmp_path / "e.json.manifest.json")
    assert m["status"] == "failed" and "nope" in m["error"]


def test_sweep_single_lambda_matches_train_segment_eval(corpus, tmp_path):
    pages = load_corpus(corpus)
    save_corpus(pages[:-1], tmp_path / "train")
    save_corpus(pages[-1:], tmp_path / "test")
    common = ["--iters", "30", "--seed", "2"]
    assert main(["sweep", "--corpus", str(corpus), "--lambdas", "1,1", "--test-pages", "1",
                 "--out", str(tmp_path / "sw")] + common) == 0
    report = json.loads((tmp_path / "sw" / "report.json").read_text())
    assert [r["lambda"] for r in report["rows"]] == [1.0]
    assert manifest(tmp_path / "sw" / "manifest.json")["outputs"]["duplicates_dropped"] == [1.0]
    assert "| 1 |" in (tmp_path / "sw" / "table.md").read_text()

    assert main(["train", "--corpus", str(tmp_path / "train"), "--lambda", "1",
                 "--out", str(tmp_path / "m.json")] + common) == 0
    assert main(["segment", "--model", str(tmp_path / "m.json"), "--corpus", str(tmp_path / "test"),
                 "--jitter", "4", "--seed", "2", "--out", str(tmp_path / "p.json")]) == 0
    assert main(["eval", "--corpus", str(tmp_path / "test"), "--preds", str(tmp_path / "p.json"),
                 "--k-eval", "8", "--out", str(tmp_path / "e.json")]) == 0
    ev = json.loads((tmp_path / "e.json").read_text())
    row = report["rows"][0]
    for key in ("wer", "cer", "boundary_wer", "boundary_cer"):
        assert row[key] == ev["wer"][key]
    assert row["ap"] == ev["ap"]


def test_digitize_ground_truth_html_and_md(corpus, tmp_path):
    for fmt in ("html", "md"):
        assert main(["digitize", "--corpus", str(corpus), "--gt", "--format", fmt,
                     "--out", str(tmp_path / fmt)]) == 0
        assert manifest(tmp_path / fmt / "manifest.json")["status"] == "ok"
    pages = load_corpus(corpus)
    for page in pages:
        html = (tmp_path / "html" / f"{page.page_id}.html").read_text()
        md = (tmp_path / "md" / f"{page.page_id}.md").read_text()
        assert html != md
        for art in page.articles():
            for para in page.article_texts[art.id].body.split("\n"):
                assert f"<p>{para}</p>" in html
                assert f"\n{para}\n" in md


def test_digitize_empty_corpus_and_missing_predictions(tmp_path):
    main(["gen", "--pages", "0", "--out", str(tmp_path / "c")])
    assert main(["digitize", "--corpus", str(tmp_path / "c"), "--gt", "--out",
                 str(tmp_path / "d")]) == 0
    assert sorted(p.name for p in (tmp_path / "d").iterdir()) == ["manifest.json"]
    assert main(["digitize", "--corpus", str(tmp_path / "c"), "--preds", str(tmp_path / "none.json"),
                 "--out", str(tmp_path / "d2")]) == 1
    assert manifest(tmp_path / "d2" / "manifest.json")["status"] == "failed"


def _eval(corpus, preds, tmp_path, name):
    save_predictions(tmp_path / f"{name}.json", preds)
    assert main(["eval", "--corpus", str(corpus), "--preds", str(tmp_path / f"{name}.json"),
                 "--k-eval", "8", "--out", str(tmp_path / f"{name}.out.json")]) == 0
    return json.loads((tmp_path / f"{name}.out.json").read_text())


def test_eval_ground_truth_and_nothing(corpus, tmp_path):
    pages = load_corpus(corpus)
    gt = _eval(corpus, gt_predictions(pages), tmp_path, "gt")
    assert gt["wer"]["wer"] == gt["wer"]["cer"] == 0.0 and gt["ap"]["ap"] == 1.0
    none = _eval(corpus, [], tmp_path, "none")
    assert none["ap"]["ap"] == 0.0 and none["wer"]["wer"] == 1.0


def test_eval_eroded_masks(corpus, tmp_path):
    pages = load_corpus(corpus)
    preds = []
    for page in pages:
        for art in page.articles():
            bottom = art.bbox().y1
            rects = tuple(Box(r.x0, r.y0, r.x1, min(r.y1, bottom - CELL_H)) if r.y1 > bottom - CELL_H
                          else r for r in art.rects)
            preds.append(Prediction(page.page_id, art.bbox(), 1.0, rects=rects, source=art.id))
    out = _eval(corpus, preds, tmp_path, "eroded")
    assert out["wer"]["boundary_wer"] > out["wer"]["wer"] >= 0


def test_eval_rejects_unknown_pages(corpus, tmp_path):
    pred = Prediction("page_9999", Box(0, 0, 4, 4), 1.0, rects=(Box(0, 0, 4, 4),))
    save_predictions(tmp_path / "x.json", [pred])
    assert main(["eval", "--corpus", str(corpus), "--preds", str(tmp_path / "x.json"),
                 "--out", str(tmp_path / "x.out.json")]) == 1


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "edgemask", "gen", "--pages", "1", "--seed", "1",
                          "--out", str(tmp_path / "g")], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert len(list((tmp_path / "g" / "pages").glob("*.pgm"))) == 1
    res = subprocess.run([sys.executable, "-m", "edgemask", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("edgemask ")
