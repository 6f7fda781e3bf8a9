"""Shared test helpers: synthetic corpora and finite-difference checking."""

from __future__ import annotations

import numpy as np

from mpad import LabeledDocument, preprocess_document
from mpad.model import MpadParams
from mpad.numcore import Tape, Tensor


def make_corpus(n_docs: int, n_classes: int = 2, seed: int = 0,
                sentences: tuple[int, int] = (1, 1),
                words_per_class: int = 8, n_fillers: int = 12,
                sentence_len: tuple[int, int] = (4, 9),
                class_word_prob: float = 0.6):
    """Synthetic labeled corpus with class-indicative word distributions.

    Returns (documents, label_names). Labels cycle round-robin so every
    class is balanced; each sentence mixes class words and shared fillers.
    """
    rng = np.random.default_rng(seed)
    class_words = [[f"c{c}w{k}" for k in range(words_per_class)]
                   for c in range(n_classes)]
    fillers = [f"fill{k}" for k in range(n_fillers)]
    docs = []
    for i in range(n_docs):
        label = i % n_classes
        n_sent = int(rng.integers(sentences[0], sentences[1] + 1))
        parts = []
        for _ in range(n_sent):
            length = int(rng.integers(sentence_len[0], sentence_len[1] + 1))
            words = []
            for _ in range(length):
                if rng.random() < class_word_prob:
                    words.append(class_words[label][rng.integers(words_per_class)])
                else:
                    words.append(fillers[rng.integers(n_fillers)])
            parts.append(" ".join(words) + ".")
        doc = preprocess_document(label, " ".join(parts))
        assert doc is not None
        docs.append(doc)
    return docs, [f"class{c}" for c in range(n_classes)]


def write_tsv(path, docs: list[LabeledDocument], label_names: list[str]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for doc in docs:
            f.write(f"{label_names[doc.label]}\t{doc.text}\n")


def perturb_params(params: MpadParams, seed, scale: float = 0.3) -> None:
    """Move every trainable (biases included) to a generic point.

    Fresh initialization leaves biases at zero, which together with the
    all-zero master feature row puts some ReLU pre-activations exactly on
    the kink; finite differences are invalid there.
    """
    rng = np.random.default_rng(seed)
    for p in params.trainables.values():
        p.data = p.data + scale * rng.standard_normal(p.data.shape)


def gradcheck_worst(loss_fn, tensors: dict[str, Tensor], step: float = 1e-5,
                    floor: float = 1e-3, max_entries_per_tensor: int | None = None,
                    rng=None) -> float:
    """Worst relative error between taped gradients and central differences.

    ``loss_fn`` must be a pure function of the tensor data, returning a
    1x1 tensor. The relative error of each entry is
    |analytic - numeric| / max(|analytic|, |numeric|, floor).
    """
    for t in tensors.values():
        t.grad = None
    with Tape() as tape:
        loss = loss_fn()
        tape.backward(loss, tensors.values())
    analytic = {name: t.grad.copy() for name, t in tensors.items()}
    if rng is not None:
        rng = np.random.default_rng(rng)
    worst = 0.0
    for name, t in tensors.items():
        flat = t.data.reshape(-1)
        if max_entries_per_tensor is None or flat.size <= max_entries_per_tensor:
            indices = range(flat.size)
        else:
            indices = np.sort(rng.choice(flat.size, max_entries_per_tensor,
                                         replace=False))
        for i in indices:
            orig = flat[i]
            flat[i] = orig + step
            above = loss_fn().item()
            flat[i] = orig - step
            below = loss_fn().item()
            flat[i] = orig
            numeric = (above - below) / (2.0 * step)
            ana = analytic[name].reshape(-1)[i]
            rel = abs(ana - numeric) / max(abs(ana), abs(numeric), floor)
            worst = max(worst, rel)
    return worst
