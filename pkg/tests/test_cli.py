"""End-to-end command line flows on synthetic corpora."""
import dataclasses
import json

import numpy as np
import pytest

from captain.cli import main, parse_weights
from captain.index import load_model
from captain.synth import synth_bundle, write_synth_corpus
from captain.bundles import save_bundle, write_corpus_manifest


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus")
    write_synth_corpus(path, count=12, seed=42)
    return path


@pytest.fixture(scope="module")
def model_dir(tmp_path_factory, corpus):
    out = tmp_path_factory.mktemp("model") / "model.cm"
    assert main(["index", "build", str(corpus), "-o", str(out)]) == 0
    return out


class TestWeightsParsing:
    def test_parse(self):
        w = parse_weights("vgg=0.5,cade=0.5")
        assert w.vgg == 0.5 and w.cade == 0.5 and w.stat == 0.0

    def test_bad_entry(self):
        with pytest.raises(ValueError):
            parse_weights("vgg:1")


class TestIndexCommands:
    def test_build_then_info(self, corpus, model_dir, capsys):
        assert main(["index", "info", "--model", str(model_dir)]) == 0
        info = json.loads(capsys.readouterr().out)
        assert info["rows"] == 12
        assert info["blocks"]["arpose"] == 2772

    def test_append(self, corpus, model_dir, tmp_path, capsys):
        rng = np.random.default_rng(77)
        extra = synth_bundle(rng, "extra01", kind="portrait")
        save_bundle(extra, tmp_path / "extra01")
        out = tmp_path / "appended.cm"
        code = main(["index", "append", "--model", str(model_dir),
                     "--bundle", str(tmp_path / "extra01"), "-o", str(out)])
        assert code == 0
        assert load_model(out).row_count == 13

    def test_duplicate_append_fails(self, corpus, model_dir, tmp_path):
        rng = np.random.default_rng(78)
        dup = synth_bundle(rng, "img0000", kind="portrait")
        save_bundle(dup, tmp_path / "dup")
        code = main(["index", "append", "--model", str(model_dir),
                     "--bundle", str(tmp_path / "dup"), "-o", str(tmp_path / "x.cm")])
        assert code == 2


class TestQueryCommand:
    def test_json_output_is_ranked(self, corpus, model_dir, capsys):
        bundle_dir = corpus / "img0003"
        code = main(["query", "--model", str(model_dir), "--bundle", str(bundle_dir),
                     "--weights", "vgg=0.5,stat=0.5", "--top", "5", "--json"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        scores = [r["score"] for r in payload["results"]]
        assert scores == sorted(scores, reverse=True)
        assert len(scores) == 5
        assert payload["weights"]["vgg"] == 0.5

    def test_one_hot_stat_matches_rating_order(self, corpus, model_dir, capsys):
        bundle_dir = corpus / "img0001"
        code = main(["query", "--model", str(model_dir), "--bundle", str(bundle_dir),
                     "--weights", "stat=1", "--top", "12", "--json"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        model = load_model(model_dir)
        ratings = {i: float(model.blocks["stat"][row, 0])
                   for row, i in enumerate(model.ids)}
        expected = sorted(model.ids, key=lambda i: (-ratings[i], i))
        assert [r["image_id"] for r in payload["results"]] == expected


class TestMatchCommand:
    def test_favorite_among_shots(self, corpus, model_dir, tmp_path, capsys):
        model = load_model(model_dir)
        style = {"preferred": list(model.ids[:3]), "ignored": [list(model.ids)[4]]}
        style_path = tmp_path / "style.json"
        style_path.write_text(json.dumps(style))

        shots_dir = tmp_path / "shots"
        rng = np.random.default_rng(5)
        names = []
        for i in range(4):
            shot = synth_bundle(rng, f"shot{i}", kind="portrait")
            save_bundle(shot, shots_dir / f"shot{i}")
            names.append(f"shot{i}")
        write_corpus_manifest(shots_dir, names)

        code = main(["match", "--model", str(model_dir), "--style", str(style_path),
                     "--shots", str(shots_dir), "--weights", "vgg=0.4,iod=0.6",
                     "--corpus", str(corpus)])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["favorite"] in names
        assert len(payload["scores"]) == 4
        best = max(payload["scores"], key=lambda s: s["score"])
        assert payload["favorite"] == best["shot_id"]


class TestCadeCommands:
    def test_train_and_eval(self, tmp_path, capsys):
        # A corpus with clearly distinct categories via distinct poses.
        corpus = tmp_path / "labeled"
        rng = np.random.default_rng(9)
        names = []
        for i in range(30):
            kind_label = ["facial", "fullbody"][i % 2]
            bundle = synth_bundle(rng, f"t{i:03d}", kind="portrait",
                                  people_count=1 + (i % 2))
            bundle = dataclasses.replace(bundle, category=kind_label)
            save_bundle(bundle, corpus / f"t{i:03d}")
            names.append(f"t{i:03d}")
        write_corpus_manifest(corpus, names)

        model_path = tmp_path / "cade.svm"
        assert main(["cade", "train", "--corpus", str(corpus),
                     "-o", str(model_path)]) == 0
        capsys.readouterr()
        assert main(["cade", "eval", "--model", str(model_path),
                     "--corpus", str(corpus)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["samples"] == 30
        assert 0.0 <= report["accuracy"] <= 1.0


class TestArposeCommand:
    def test_cluster_report(self, corpus, tmp_path, capsys):
        out = tmp_path / "clusters.json"
        centers = tmp_path / "centers.npz"
        code = main(["arpose", "cluster", "--corpus", str(corpus), "--k", "3",
                     "--restarts", "3", "--seed", "1", "-o", str(out),
                     "--save-centers", str(centers)])
        assert code == 0
        report = json.loads(out.read_text())
        assert report["k"] == 3
        assert sum(c["size"] for c in report["clusters"]) == report["samples"]
        stored = np.load(centers)
        assert stored["centers"].shape[1] == 2772


class TestSynthCommand:
    def test_writes_corpus(self, tmp_path):
        out = tmp_path / "demo"
        assert main(["synth", "-o", str(out), "--count", "5", "--seed", "3"]) == 0
        assert (out / "corpus.json").is_file()
        assert (out / "img0004" / "manifest.json").is_file()
