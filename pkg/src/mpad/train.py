"""End-to-end training, validation-based model selection, and evaluation."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

import numpy as np

from .corpus import EmbeddingTable, LabeledDocument, Vocabulary
from .model import EncodedDocument, MpadConfig, MpadParams, encode_document, forward_batch
from .numcore import Adam, NonFiniteError, Tape, cross_entropy

# Offsets folded into seeds so the independent random streams of one run
# (validation split, per-epoch shuffles, dropout) never collide.
_SPLIT_STREAM = 11
_SHUFFLE_STREAM = 23
_DROPOUT_STREAM = 37


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    val_acc: float
    seconds: float


@dataclass
class TrainRun:
    """Outcome of one training run: history, best epoch, best parameters.

    ``params`` is left loaded with the best-epoch state, which
    ``best_state`` also holds as plain arrays for checkpointing.
    """

    config: MpadConfig
    seed: int
    history: list[EpochStats]
    best_epoch: int
    best_state: dict[str, np.ndarray]
    params: MpadParams

    @property
    def best_val_accuracy(self) -> float:
        return self.history[self.best_epoch - 1].val_acc


@dataclass
class Metrics:
    """Accuracy with per-class precision/recall and the confusion matrix.

    ``confusion[i, j]`` counts documents of true class i predicted as j.
    Precision/recall use the 0-when-undefined convention.
    """

    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    confusion: np.ndarray


@dataclass
class CrossValResult:
    fold_accuracies: list[float]
    mean: float
    std: float
    fold_test_indices: list[list[int]]


def split_validation(docs: list, fraction: float = 0.1, seed=0) -> tuple[list, list]:
    """Deterministic disjoint train/validation split.

    The validation size is ``round(fraction * N)`` (Python banker's
    rounding). Stratification is not applied.
    """
    n = len(docs)
    if n < 10:
        raise ValueError(f"need at least 10 documents to split, got {n}")
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    n_val = int(round(fraction * n))
    perm = np.random.default_rng([seed, _SPLIT_STREAM]).permutation(n)
    val_idx = set(perm[:n_val].tolist())
    train_split = [docs[i] for i in range(n) if i not in val_idx]
    val_split = [docs[i] for i in range(n) if i in val_idx]
    return train_split, val_split


def predict(encoded: list[EncodedDocument], params: MpadParams, config: MpadConfig,
            chunk_size: int = 256) -> np.ndarray:
    """Eval-mode argmax predictions; ties break toward the lowest class."""
    preds = np.empty(len(encoded), dtype=np.int64)
    for lo in range(0, len(encoded), chunk_size):
        chunk = encoded[lo: lo + chunk_size]
        logits, _ = forward_batch(chunk, params, config, mode="eval")
        preds[lo: lo + len(chunk)] = np.argmax(logits.data, axis=1)
    return preds


def _accuracy(encoded: list[EncodedDocument], params: MpadParams,
              config: MpadConfig) -> float:
    labels = np.array([doc.label for doc in encoded])
    return float((predict(encoded, params, config) == labels).mean())


def metrics_from_predictions(labels: np.ndarray, preds: np.ndarray,
                             n_classes: int) -> Metrics:
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    for true, pred in zip(labels, preds):
        confusion[true, pred] += 1
    support = confusion.sum(axis=1)
    predicted = confusion.sum(axis=0)
    diag = np.diag(confusion)
    precision = np.divide(diag, predicted, out=np.zeros(n_classes), where=predicted > 0)
    recall = np.divide(diag, support, out=np.zeros(n_classes), where=support > 0)
    accuracy = float(diag.sum() / max(confusion.sum(), 1))
    return Metrics(accuracy=accuracy, precision=precision, recall=recall,
                   confusion=confusion)


def evaluate(params: MpadParams, config: MpadConfig, docs: list[LabeledDocument],
             vocab: Vocabulary, table: EmbeddingTable) -> Metrics:
    """Eval-mode metrics for documents preprocessed with the training vocabulary."""
    encoded = [encode_document(d, vocab, table, config) for d in docs]
    labels = np.array([doc.label for doc in encoded])
    preds = predict(encoded, params, config)
    return metrics_from_predictions(labels, preds, config.n_classes)


def train(docs: list[LabeledDocument], vocab: Vocabulary, table: EmbeddingTable,
          config: MpadConfig, seed=0, max_epochs: int | None = None,
          stop_at_train_accuracy: float | None = None,
          log_file=None, quiet: bool = True) -> TrainRun:
    """Train with shuffled mini-batches, selecting the best epoch by
    validation accuracy (ties go to the earliest epoch).

    A slice of ``val_fraction`` is held out of ``docs`` for selection.
    The parameters that produced the best validation accuracy are left
    loaded in the returned run's state and in ``params`` order; training
    stops at the epoch cap or when ``stop_at_train_accuracy`` is reached.
    Per-epoch records are appended to ``log_file`` as JSON lines when given.
    """
    if not docs:
        raise ValueError("cannot train on an empty document list")
    if max_epochs is None:
        max_epochs = config.max_epochs
    train_docs, val_docs = split_validation(docs, config.val_fraction, seed)
    train_set = [encode_document(d, vocab, table, config) for d in train_docs]
    val_set = [encode_document(d, vocab, table, config) for d in val_docs]

    params = MpadParams(config, seed=seed)
    optimizer = Adam(params.trainables, lr=config.learning_rate)
    dropout_rng = np.random.default_rng([seed, _DROPOUT_STREAM])

    history: list[EpochStats] = []
    best_epoch = 0
    best_val = -1.0
    best_state = params.state_dict()

    for epoch in range(1, max_epochs + 1):
        started = time.perf_counter()
        order = np.random.default_rng([seed, _SHUFFLE_STREAM, epoch]).permutation(
            len(train_set))
        loss_sum = 0.0
        for lo in range(0, len(order), config.batch_size):
            batch_idx = order[lo: lo + config.batch_size]
            batch = [train_set[i] for i in batch_idx]
            labels = np.array([doc.label for doc in batch])
            params.zero_grads()
            try:
                with Tape() as tape:
                    logits, _ = forward_batch(batch, params, config,
                                              mode="train", rng=dropout_rng)
                    loss = cross_entropy(logits, labels)
                    tape.backward(loss, params.trainables.values())
            except NonFiniteError as e:
                raise NonFiniteError(
                    f"{e} (epoch {epoch}, batch starting at document {lo})") from e
            optimizer.step()
            loss_sum += loss.item() * len(batch)

        train_loss = loss_sum / len(train_set)
        train_acc = _accuracy(train_set, params, config)
        val_acc = _accuracy(val_set, params, config)
        seconds = time.perf_counter() - started
        record = EpochStats(epoch=epoch, train_loss=train_loss, train_acc=train_acc,
                            val_acc=val_acc, seconds=seconds)
        history.append(record)
        if log_file is not None:
            log_file.write(json.dumps({
                "epoch": epoch, "train_loss": train_loss, "train_acc": train_acc,
                "val_acc": val_acc, "seconds": seconds}) + "\n")
            log_file.flush()
        if not quiet:
            print(f"epoch {epoch:3d}  loss {train_loss:.4f}  "
                  f"train {train_acc:.4f}  val {val_acc:.4f}")
        if val_acc > best_val:
            best_val = val_acc
            best_epoch = epoch
            best_state = params.state_dict()
        if stop_at_train_accuracy is not None and train_acc >= stop_at_train_accuracy:
            break

    params.load_state_dict(best_state)
    return TrainRun(config=config, seed=seed, history=history,
                    best_epoch=best_epoch, best_state=best_state, params=params)


def cross_validate(docs: list[LabeledDocument], folds: int, config: MpadConfig,
                   seed=0, embedding_loader=None,
                   max_epochs: int | None = None) -> CrossValResult:
    """K-fold evaluation with deterministic fold assignment.

    Each fold's training pool gets its own vocabulary; ``embedding_loader``
    (vocab -> EmbeddingTable) supplies vectors, defaulting to seeded random
    initialization. Within each fold, training holds out its own
    validation slice for epoch selection.
    """
    from .corpus import build_vocabulary, random_embeddings

    if folds < 2:
        raise ValueError(f"folds must be >= 2, got {folds}")
    if folds > len(docs):
        raise ValueError(f"{folds} folds for only {len(docs)} documents")
    perm = np.random.default_rng([seed, 43]).permutation(len(docs))
    assignments = [idx.tolist() for idx in np.array_split(perm, folds)]
    accuracies = []
    for fold, test_idx in enumerate(assignments):
        test_mask = np.zeros(len(docs), dtype=bool)
        test_mask[test_idx] = True
        fold_train = [docs[i] for i in range(len(docs)) if not test_mask[i]]
        fold_test = [docs[i] for i in range(len(docs)) if test_mask[i]]
        vocab = build_vocabulary(fold_train, config.min_count)
        if embedding_loader is not None:
            table = embedding_loader(vocab)
        else:
            table = random_embeddings(vocab, config.input_dim, seed=[seed, fold])
        run = train(fold_train, vocab, table, config, seed=[seed, fold],
                    max_epochs=max_epochs)
        metrics = evaluate(run.params, config, fold_test, vocab, table)
        accuracies.append(metrics.accuracy)
    arr = np.array(accuracies)
    return CrossValResult(fold_accuracies=accuracies,
                          mean=float(arr.mean()), std=float(arr.std()),
                          fold_test_indices=assignments)
