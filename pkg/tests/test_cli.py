"""Command line surface: exit codes, artifacts, reproducibility."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from mpad.cli import main, parse_grid

from conftest import make_corpus, write_tsv


@pytest.fixture(scope="module")
def corpus_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    docs, names = make_corpus(40, n_classes=2, seed=7)
    train_path = root / "train.tsv"
    write_tsv(train_path, docs, names)
    test_docs, _ = make_corpus(16, n_classes=2, seed=8)
    test_path = root / "test.tsv"
    write_tsv(test_path, test_docs, names)
    return str(train_path), str(test_path)


_FAST = ["--set", "input_dim=8", "--set", "hidden_dim=6", "--set", "batch_size=8",
         "--set", "dropout_rate=0.2", "--epochs", "4"]


@pytest.fixture(scope="module")
def trained_run(corpus_files, tmp_path_factory):
    train_path, test_path = corpus_files
    out_dir = str(tmp_path_factory.mktemp("run"))
    rc = main(["train", "--train", train_path, "--test", test_path,
               "--seed", "1", "--out", out_dir] + _FAST)
    assert rc == 0
    return out_dir


class TestBuildGraph:
    def test_json_graph_with_master(self, capsys):
        assert main(["build-graph", "--input", "a b a"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["nodes"] == ["a", "b", "⊙"]
        assert payload["master_index"] == 2
        assert [0, 1, 1.0] in payload["edges"]
        assert [1, 0, 1.0] in payload["edges"]
        assert [0, 2, 1.0] in payload["edges"] and [2, 0, 1.0] in payload["edges"]

    def test_no_master_two_nodes_one_edge(self, capsys):
        assert main(["build-graph", "--input", "a b", "--no-master"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["nodes"] == ["a", "b"]
        assert payload["edges"] == [[0, 1, 1.0]]

    def test_empty_input_exits_2(self, capsys):
        assert main(["build-graph", "--input", "   "]) == 2
        assert "empty" in capsys.readouterr().err

    def test_edgelist_format(self, capsys):
        assert main(["build-graph", "--input", "a b", "--no-master",
                     "--format", "edgelist"]) == 0
        assert capsys.readouterr().out == "a b 1\n"

    def test_reads_files_and_writes_output(self, tmp_path, capsys):
        src = tmp_path / "doc.txt"
        src.write_text("one two one")
        dst = tmp_path / "graph.json"
        assert main(["build-graph", "--input", str(src), "--output", str(dst)]) == 0
        payload = json.loads(dst.read_text())
        assert payload["nodes"][:2] == ["one", "two"]


class TestTrain:
    def test_artifacts_written(self, trained_run):
        names = set(os.listdir(trained_run))
        assert {"checkpoint.mpad", "log.jsonl", "manifest.json"} <= names

    def test_manifest_contents(self, trained_run, corpus_files):
        manifest = json.loads(open(os.path.join(trained_run, "manifest.json")).read())
        assert manifest["config"]["hidden_dim"] == 6
        assert manifest["inputs"]["train"]["sha256"]
        assert manifest["outputs"]["test_accuracy"] is not None
        assert 0.0 <= manifest["outputs"]["best_val_accuracy"] <= 1.0

    def test_log_is_json_lines(self, trained_run):
        lines = open(os.path.join(trained_run, "log.jsonl")).read().splitlines()
        assert len(lines) == 4
        assert {"epoch", "train_loss", "train_acc", "val_acc", "seconds"} == \
            set(json.loads(lines[0]))

    def test_missing_train_file_exits_2(self, capsys):
        assert main(["train", "--train", "/nonexistent/x.tsv"]) == 2

    def test_single_class_corpus_rejected(self, tmp_path, capsys):
        path = tmp_path / "one.tsv"
        path.write_text("a\tsome words here\na\tmore words there\n")
        assert main(["train", "--train", str(path), "--out",
                     str(tmp_path / "out")]) == 2
        assert "label" in capsys.readouterr().err

    def test_bad_set_option_exits_2(self, corpus_files, tmp_path, capsys):
        train_path, _ = corpus_files
        assert main(["train", "--train", train_path, "--set", "nonsense=1",
                     "--out", str(tmp_path / "out")]) == 2

    def test_reruns_are_bit_identical(self, corpus_files, tmp_path):
        train_path, _ = corpus_files
        outs = []
        for name in ("a", "b"):
            out_dir = tmp_path / name
            rc = main(["train", "--train", train_path, "--seed", "9",
                       "--out", str(out_dir)] + _FAST)
            assert rc == 0
            outs.append(out_dir)
        ck_a = (outs[0] / "checkpoint.mpad").read_bytes()
        ck_b = (outs[1] / "checkpoint.mpad").read_bytes()
        assert ck_a == ck_b
        ma = json.loads((outs[0] / "manifest.json").read_text())
        mb = json.loads((outs[1] / "manifest.json").read_text())
        assert ma == mb

    def test_config_file_and_overrides(self, corpus_files, tmp_path, capsys):
        train_path, _ = corpus_files
        cfg = tmp_path / "run.cfg"
        cfg.write_text("hidden_dim=5\ninput_dim=8\nbatch_size=8  # comment\n"
                       "dropout_rate=0.0\n")
        out_dir = tmp_path / "out"
        rc = main(["train", "--train", train_path, "--config", str(cfg),
                   "--set", "hidden_dim=7", "--epochs", "2",
                   "--out", str(out_dir), "--json"])
        assert rc == 0
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["config"]["hidden_dim"] == 7  # --set wins over file
        assert manifest["config"]["max_epochs"] == 2

    def test_path_variant_on_single_sentence_corpus(self, tmp_path, capsys):
        # one sentence per document degenerates to a 1-node second level
        docs, names = make_corpus(20, n_classes=2, seed=11, sentences=(1, 1))
        train_path = tmp_path / "train.tsv"
        write_tsv(train_path, docs, names)
        out_dir = tmp_path / "out"
        rc = main(["train", "--train", str(train_path), "--variant", "path",
                   "--out", str(out_dir), "--seed", "0"] + _FAST)
        assert rc == 0
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["config"]["variant"] == "path"

    def test_limit_restricts_training_documents(self, corpus_files, tmp_path,
                                                capsys):
        train_path, _ = corpus_files
        out_dir = tmp_path / "out"
        rc = main(["train", "--train", train_path, "--limit", "20",
                   "--out", str(out_dir)] + _FAST)
        assert rc == 0

    def test_out_dir_env_var_default(self, corpus_files, tmp_path, monkeypatch,
                                     capsys):
        train_path, _ = corpus_files
        target = tmp_path / "from_env"
        monkeypatch.setenv("MPAD_OUT_DIR", str(target))
        rc = main(["train", "--train", train_path, "--epochs", "1"] + _FAST[:-2])
        assert rc == 0
        assert (target / "checkpoint.mpad").exists()


class TestEvaluatePredict:
    def test_evaluate_matches_manifest_train_accuracy(self, trained_run,
                                                      corpus_files, capsys):
        train_path, _ = corpus_files
        ck = os.path.join(trained_run, "checkpoint.mpad")
        rc = main(["evaluate", "--checkpoint", ck, "--input", train_path, "--json"])
        assert rc == 0
        got = json.loads(capsys.readouterr().out)
        manifest = json.loads(open(os.path.join(trained_run, "manifest.json")).read())
        assert abs(got["accuracy"] - manifest["outputs"]["train_accuracy"]) < 1e-9

    def test_evaluate_human_readable(self, trained_run, corpus_files, capsys):
        train_path, _ = corpus_files
        ck = os.path.join(trained_run, "checkpoint.mpad")
        assert main(["evaluate", "--checkpoint", ck, "--input", train_path]) == 0
        out = capsys.readouterr().out
        assert "accuracy" in out and "confusion" in out

    def test_unknown_label_exits_2(self, trained_run, tmp_path, capsys):
        bad = tmp_path / "bad.tsv"
        bad.write_text("mystery\tsome words\n")
        ck = os.path.join(trained_run, "checkpoint.mpad")
        assert main(["evaluate", "--checkpoint", ck, "--input", str(bad)]) == 2

    def test_predict_one_line_per_document(self, trained_run, tmp_path, capsys):
        inputs = tmp_path / "texts.txt"
        inputs.write_text("c0w1 c0w2 fill1 c0w3.\nc1w1 c1w2 c1w0 fill2.\n")
        ck = os.path.join(trained_run, "checkpoint.mpad")
        assert main(["predict", "--checkpoint", ck, "--input", str(inputs)]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 2
        for line in lines:
            label, conf = line.split("\t")
            assert label in ("class0", "class1")
            assert 0.0 < float(conf) <= 1.0

    def test_predict_single_document(self, trained_run, tmp_path, capsys):
        inputs = tmp_path / "one.txt"
        inputs.write_text("c1w1 c1w2 c1w3.\n")
        ck = os.path.join(trained_run, "checkpoint.mpad")
        assert main(["predict", "--checkpoint", ck, "--input", str(inputs)]) == 0
        assert len(capsys.readouterr().out.splitlines()) == 1

    def test_corrupted_checkpoint_exits_2(self, trained_run, tmp_path, capsys):
        ck = os.path.join(trained_run, "checkpoint.mpad")
        broken = tmp_path / "broken.mpad"
        broken.write_bytes(open(ck, "rb").read()[:-64])
        assert main(["evaluate", "--checkpoint", str(broken),
                     "--input", "whatever"]) == 2

    def test_digest_mismatch_with_manifest_exits_2(self, trained_run, corpus_files,
                                                   tmp_path, capsys):
        train_path, _ = corpus_files
        ck = os.path.join(trained_run, "checkpoint.mpad")
        clone_dir = tmp_path / "clone"
        clone_dir.mkdir()
        clone = clone_dir / "checkpoint.mpad"
        clone.write_bytes(open(ck, "rb").read())
        manifest = json.loads(open(os.path.join(trained_run, "manifest.json")).read())
        manifest["vocab_digest"] = "0" * 64
        (clone_dir / "manifest.json").write_text(json.dumps(manifest))
        assert main(["evaluate", "--checkpoint", str(clone),
                     "--input", train_path]) == 2


class TestExportAttention:
    def test_schema_and_normalization(self, trained_run, tmp_path, capsys):
        inputs = tmp_path / "texts.txt"
        inputs.write_text("c0w1 c0w2 c0w1 fill3.\n")
        ck = os.path.join(trained_run, "checkpoint.mpad")
        assert main(["export-attention", "--checkpoint", ck,
                     "--input", str(inputs)]) == 0
        records = json.loads(capsys.readouterr().out)
        assert len(records) == 1
        rec = records[0]
        # one attention weight per distinct content token, one list per round
        assert rec["tokens"] == ["c0w1", "c0w2", "fill3", "."]
        assert len(rec["per_step_alpha"]) == 2
        for alpha in rec["per_step_alpha"]:
            assert len(alpha) == len(rec["tokens"])
            assert abs(sum(alpha) - 1.0) < 1e-9

    def test_hierarchical_checkpoint_rejected(self, tmp_path, capsys):
        docs, names = make_corpus(20, n_classes=2, seed=12, sentences=(2, 3))
        train_path = tmp_path / "train.tsv"
        write_tsv(train_path, docs, names)
        out_dir = tmp_path / "out"
        rc = main(["train", "--train", str(train_path), "--variant", "clique",
                   "--out", str(out_dir), "--epochs", "1"] + _FAST[:-2])
        assert rc == 0
        inputs = tmp_path / "texts.txt"
        inputs.write_text("c0w1 c0w2.\n")
        rc = main(["export-attention",
                   "--checkpoint", str(out_dir / "checkpoint.mpad"),
                   "--input", str(inputs)])
        assert rc == 2
        assert "flat" in capsys.readouterr().err


class TestAblate:
    def test_grid_parsing(self):
        rows = parse_grid("T=1..4; undirected; no-master; no-renorm; "
                          "neighbors-only; no-skip")
        assert len(rows) == 9
        assert rows[0] == ("T=1", {"mp_iterations": 1})
        assert ("undirected", {"directed": False}) in rows

    def test_unknown_token_rejected(self):
        with pytest.raises(ValueError, match="unknown grid token"):
            parse_grid("T=1..2; bogus")

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            parse_grid(" ; ")

    def test_two_row_grid_runs_and_flags_vanilla(self, corpus_files, capsys):
        train_path, test_path = corpus_files
        rc = main(["ablate", "--train", train_path, "--test", test_path,
                   "--grid", "T=1..2", "--seed", "0", "--epochs", "2",
                   "--set", "input_dim=8", "--set", "hidden_dim=5",
                   "--set", "batch_size=8", "--set", "dropout_rate=0.0"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "T=1" in out and "T=2 *" in out and "* vanilla model" in out

    def test_json_rows(self, corpus_files, capsys):
        train_path, _ = corpus_files
        rc = main(["ablate", "--train", train_path, "--grid", "T=2; no-master",
                   "--epochs", "1", "--json",
                   "--set", "input_dim=8", "--set", "hidden_dim=5",
                   "--set", "batch_size=8", "--set", "dropout_rate=0.0"])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert len(payload["rows"]) == 2
        flags = [row["vanilla"] for row in payload["rows"]]
        assert flags == [True, False]

    def test_unknown_grid_token_exits_2(self, corpus_files, capsys):
        train_path, _ = corpus_files
        assert main(["ablate", "--train", train_path, "--grid", "wat"]) == 2


def test_console_entry_point_help():
    proc = subprocess.run([sys.executable, "-m", "mpad.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "build-graph" in proc.stdout
