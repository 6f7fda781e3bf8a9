"""Training loop, model selection, metrics, cross-validation."""

import io
import json
import math

import numpy as np
import pytest

from mpad.corpus import build_vocabulary, preprocess_document, random_embeddings
from mpad.model import MpadConfig, MpadParams, encode_document, forward_batch
from mpad.numcore import cross_entropy
from mpad.train import (
    cross_validate,
    evaluate,
    metrics_from_predictions,
    split_validation,
    train,
)

from conftest import make_corpus


class TestSplitValidation:
    def test_disjoint_and_exhaustive(self):
        docs = list(range(100))
        tr, va = split_validation(docs, 0.1, seed=0)
        assert len(tr) == 90 and len(va) == 10
        assert set(tr) | set(va) == set(docs)
        assert set(tr) & set(va) == set()

    def test_same_seed_same_split(self):
        docs = list(range(57))
        assert split_validation(docs, 0.1, seed=5) == split_validation(docs, 0.1, seed=5)
        assert split_validation(docs, 0.1, seed=5) != split_validation(docs, 0.1, seed=6)

    def test_reuters_sized_rounding(self):
        docs = list(range(5485))
        tr, va = split_validation(docs, 0.1, seed=0)
        assert len(va) in (548, 549)
        assert len(tr) + len(va) == 5485

    def test_too_few_documents_rejected(self):
        with pytest.raises(ValueError, match="at least 10"):
            split_validation(list(range(9)), 0.1, seed=0)


def _setup(n_docs=24, n_classes=2, seed=0, **config_kw):
    docs, _ = make_corpus(n_docs, n_classes=n_classes, seed=seed)
    vocab = build_vocabulary(docs)
    kw = dict(input_dim=8, n_classes=n_classes, hidden_dim=6, batch_size=8,
              dropout_rate=0.0)
    kw.update(config_kw)
    config = MpadConfig(**kw)
    table = random_embeddings(vocab, config.input_dim, seed=seed)
    return docs, vocab, table, config


class TestTrain:
    def test_fresh_initialization_loss_is_log_class_count(self):
        for n_classes in (2, 4):
            docs, vocab, table, config = _setup(n_docs=20, n_classes=n_classes)
            params = MpadParams(config, seed=0)
            encoded = [encode_document(d, vocab, table, config) for d in docs]
            logits, _ = forward_batch(encoded, params, config, mode="eval")
            loss = cross_entropy(logits, np.array([d.label for d in docs]))
            assert abs(loss.item() - math.log(n_classes)) < 0.1

    def test_overfits_a_small_subset(self):
        docs, vocab, table, config = _setup(n_docs=16)
        run = train(docs, vocab, table, config, seed=0, max_epochs=100,
                    stop_at_train_accuracy=1.0)
        assert run.history[-1].train_acc == 1.0

    def test_same_seed_reproduces_first_epoch(self):
        docs, vocab, table, config = _setup()
        a = train(docs, vocab, table, config, seed=3, max_epochs=2)
        b = train(docs, vocab, table, config, seed=3, max_epochs=2)
        assert a.history[0].train_loss == b.history[0].train_loss
        assert a.history[1].val_acc == b.history[1].val_acc

    def test_best_epoch_maximizes_validation_history(self):
        docs, vocab, table, config = _setup()
        run = train(docs, vocab, table, config, seed=1, max_epochs=6)
        accs = [e.val_acc for e in run.history]
        assert run.best_val_accuracy == max(accs)
        # ties break toward the earliest epoch
        assert accs.index(max(accs)) + 1 == run.best_epoch

    def test_best_state_restored_into_params(self):
        docs, vocab, table, config = _setup()
        run = train(docs, vocab, table, config, seed=1, max_epochs=4)
        for name, arr in run.best_state.items():
            if name in run.params.trainables:
                np.testing.assert_array_equal(run.params.trainables[name].data, arr)

    def test_epoch_log_records(self):
        docs, vocab, table, config = _setup()
        sink = io.StringIO()
        run = train(docs, vocab, table, config, seed=0, max_epochs=3, log_file=sink)
        lines = [json.loads(line) for line in sink.getvalue().splitlines()]
        assert len(lines) == 3
        assert set(lines[0]) == {"epoch", "train_loss", "train_acc", "val_acc",
                                 "seconds"}
        assert [rec["epoch"] for rec in lines] == [1, 2, 3]

    def test_empty_corpus_rejected(self):
        _, vocab, table, config = _setup()
        with pytest.raises(ValueError, match="empty"):
            train([], vocab, table, config, seed=0)


class TestMetrics:
    def test_all_correct(self):
        labels = np.array([0, 1, 1, 0])
        metrics = metrics_from_predictions(labels, labels.copy(), 2)
        assert metrics.accuracy == 1.0
        np.testing.assert_array_equal(metrics.confusion, [[2, 0], [0, 2]])
        np.testing.assert_array_equal(metrics.precision, [1.0, 1.0])

    def test_single_wrong_prediction(self):
        metrics = metrics_from_predictions(np.array([1]), np.array([0]), 2)
        assert metrics.accuracy == 0.0

    def test_hand_tallied_confusion(self):
        labels = np.array([0, 0, 1, 2])
        preds = np.array([0, 1, 1, 1])
        metrics = metrics_from_predictions(labels, preds, 3)
        np.testing.assert_array_equal(metrics.confusion,
                                      [[1, 1, 0], [0, 1, 0], [0, 1, 0]])
        np.testing.assert_allclose(metrics.precision, [1.0, 1 / 3, 0.0])
        np.testing.assert_allclose(metrics.recall, [0.5, 1.0, 0.0])
        assert metrics.accuracy == 0.5
        # row sums equal per-class support
        np.testing.assert_array_equal(metrics.confusion.sum(axis=1), [2, 1, 1])

    def test_evaluate_reproduces_best_validation_accuracy(self):
        # the restored best-epoch state (parameters plus running batch-norm
        # statistics) must reproduce the selected validation accuracy exactly
        docs, vocab, table, config = _setup(n_docs=20)
        run = train(docs, vocab, table, config, seed=0, max_epochs=8)
        _, val_docs = split_validation(docs, config.val_fraction, seed=0)
        metrics = evaluate(run.params, config, val_docs, vocab, table)
        assert metrics.accuracy == pytest.approx(run.best_val_accuracy, abs=1e-12)
        assert metrics.confusion.sum() == len(val_docs)


class TestCrossValidate:
    def test_folds_partition_the_corpus(self):
        docs, vocab, table, config = _setup(n_docs=30)
        result = cross_validate(docs, folds=3, config=config, seed=0, max_epochs=1)
        all_indices = [i for fold in result.fold_test_indices for i in fold]
        assert sorted(all_indices) == list(range(30))
        assert len(result.fold_accuracies) == 3

    def test_same_seed_same_assignment(self):
        docs, vocab, table, config = _setup(n_docs=30)
        a = cross_validate(docs, folds=3, config=config, seed=4, max_epochs=1)
        b = cross_validate(docs, folds=3, config=config, seed=4, max_epochs=1)
        assert a.fold_test_indices == b.fold_test_indices
        assert a.fold_accuracies == b.fold_accuracies

    def test_mean_and_std(self):
        docs, vocab, table, config = _setup(n_docs=30)
        result = cross_validate(docs, folds=3, config=config, seed=0, max_epochs=1)
        arr = np.array(result.fold_accuracies)
        assert result.mean == pytest.approx(arr.mean())
        assert result.std == pytest.approx(arr.std())

    def test_indistinguishable_documents_score_the_base_rate(self):
        # identical text for both classes: the best any model can do per
        # fold is the majority rate, here ~0.5
        texts = [preprocess_document(i % 2, "same words every time") for i in range(24)]
        config = MpadConfig(input_dim=6, n_classes=2, hidden_dim=4, batch_size=8,
                            dropout_rate=0.0)
        result = cross_validate(texts, folds=2, config=config, seed=0, max_epochs=1)
        assert 0.25 <= result.mean <= 0.75

    def test_bad_fold_counts_rejected(self):
        docs, vocab, table, config = _setup(n_docs=12)
        with pytest.raises(ValueError):
            cross_validate(docs, folds=1, config=config, seed=0)
        with pytest.raises(ValueError):
            cross_validate(docs, folds=13, config=config, seed=0)
