"""Dataset ingestion: tokenization, sentence splitting, vocabularies, embeddings.

File formats
------------
Dataset: UTF-8 text, one example per non-empty line, ``label<TAB>text``.
Labels are re-indexed densely (0..C-1) in order of first appearance.

Embeddings: UTF-8 text. The first line is ``<word count> <dimension>``;
every following line is ``token v1 v2 ... v_dim`` with space-separated
decimal floats.
"""

from __future__ import annotations

import hashlib
import re
import warnings
from collections import Counter
from dataclasses import dataclass

import numpy as np

UNK_TOKEN = "<unk>"

# English clitics detached from their host word, matching the common
# CNN-for-text cleaning convention.
_CONTRACTIONS = ("'s", "'ve", "n't", "'re", "'d", "'ll")

_SENTENCE_BOUNDARY = re.compile(r"(?<=[.!?])\s+")


class DatasetFormatError(ValueError):
    """A dataset file violates the line format."""


class EmbeddingFormatError(ValueError):
    """An embedding file violates the declared format."""


@dataclass(frozen=True)
class PreprocessRules:
    """Frozen cleaning rules applied before any token is seen downstream.

    1. lowercase (when ``lowercase``)
    2. detach the clitics 's 've n't 're 'd 'll as separate tokens
    3. detach each character of ``detach_punctuation`` as its own token
    4. collapse whitespace and split
    """

    lowercase: bool = True
    split_contractions: bool = True
    detach_punctuation: str = ",.!?()"


DEFAULT_RULES = PreprocessRules()


def tokenize(text: str, rules: PreprocessRules = DEFAULT_RULES) -> list[str]:
    """Deterministic word tokenizer; empty input yields an empty list.

    Idempotent on its own output joined by single spaces.
    """
    if rules.lowercase:
        text = text.lower()
    if rules.split_contractions:
        for clitic in _CONTRACTIONS:
            text = text.replace(clitic, " " + clitic)
    for ch in rules.detach_punctuation:
        text = text.replace(ch, f" {ch} ")
    return text.split()


def split_sentences(text: str) -> list[str]:
    """Split on terminal punctuation (. ! ?) followed by whitespace.

    Delimiters stay attached to their sentence, so joining the result
    reconstructs the text order. Text without terminal punctuation is a
    single sentence; empty/whitespace input yields no sentences.
    """
    stripped = text.strip()
    if not stripped:
        return []
    return _SENTENCE_BOUNDARY.split(stripped)


@dataclass
class LabeledDocument:
    """A classified text with its token stream and sentence decomposition.

    ``tokens`` is always the in-order concatenation of ``sentences``.
    """

    label: int
    text: str
    tokens: list[str]
    sentences: list[list[str]]


def preprocess_document(label: int, text: str,
                        rules: PreprocessRules = DEFAULT_RULES) -> LabeledDocument | None:
    """Tokenize a raw text into a document; None if nothing survives cleaning."""
    sentences = [tokenize(s, rules) for s in split_sentences(text)]
    sentences = [s for s in sentences if s]
    if not sentences:
        return None
    tokens = [tok for sent in sentences for tok in sent]
    return LabeledDocument(label=label, text=text, tokens=tokens, sentences=sentences)


class Vocabulary:
    """Dense token<->index map with a reserved unknown-word slot at index 0."""

    def __init__(self, kept_tokens: list[str], counts: Counter):
        self.tokens: list[str] = [UNK_TOKEN] + list(kept_tokens)
        self.index: dict[str, int] = {tok: i for i, tok in enumerate(self.tokens)}
        self.counts = counts
        self.unk_index = 0

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def lookup(self, token: str) -> int:
        return self.index.get(token, self.unk_index)

    def encode(self, tokens: list[str]) -> list[int]:
        index = self.index
        unk = self.unk_index
        return [index.get(tok, unk) for tok in tokens]

    def digest(self) -> str:
        """Content hash of the index order, for checkpoint/manifest agreement."""
        h = hashlib.sha256()
        for tok in self.tokens:
            h.update(tok.encode("utf-8"))
            h.update(b"\x00")
        return h.hexdigest()


def build_vocabulary(docs: list[LabeledDocument], min_count: int = 1) -> Vocabulary:
    """Index every token that appears at least ``min_count`` times.

    Rarer tokens map to the unknown slot. Indices follow first appearance
    in corpus order, so construction is deterministic.
    """
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    if not docs:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    counts: Counter = Counter()
    order: dict[str, None] = {}
    for doc in docs:
        for tok in doc.tokens:
            counts[tok] += 1
            order.setdefault(tok, None)
    kept = [tok for tok in order if counts[tok] >= min_count]
    return Vocabulary(kept, counts)


@dataclass
class EmbeddingTable:
    """One vector per vocabulary index, flagged pretrained or random."""

    vectors: np.ndarray        # (V, dim) float64
    pretrained: np.ndarray     # (V,) bool

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def coverage(self) -> int:
        """Number of vocabulary tokens that received a pretrained vector."""
        return int(self.pretrained.sum())


def random_embeddings(vocab: Vocabulary, dim: int, seed) -> EmbeddingTable:
    """Uniform [-0.25, 0.25] vectors for the whole vocabulary."""
    if dim < 1:
        raise ValueError(f"embedding dimension must be >= 1, got {dim}")
    rng = np.random.default_rng(seed)
    vectors = rng.uniform(-0.25, 0.25, size=(len(vocab), dim))
    return EmbeddingTable(vectors=vectors, pretrained=np.zeros(len(vocab), dtype=bool))


def load_embeddings(path, vocab: Vocabulary, dim: int, seed) -> EmbeddingTable:
    """Read pretrained vectors for the vocabulary from a text embedding file.

    Tokens found in the file keep the file values; absent tokens and the
    unknown slot get uniform random vectors in [-0.25, 0.25] drawn from
    ``seed`` in index order, so the result is bit-identical across runs.
    """
    found: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline()
        parts = header.split()
        if len(parts) != 2:
            raise EmbeddingFormatError(
                f"{path}, line 1: expected '<count> <dim>' header, got {header!r}")
        try:
            file_dim = int(parts[1])
        except ValueError as e:
            raise EmbeddingFormatError(f"{path}, line 1: non-integer header field") from e
        if file_dim != dim:
            raise EmbeddingFormatError(
                f"{path}: file declares dimension {file_dim}, requested {dim}")
        for lineno, line in enumerate(f, start=2):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != dim + 1:
                raise EmbeddingFormatError(
                    f"{path}, line {lineno}: expected token plus {dim} floats, "
                    f"got {len(fields)} fields")
            token = fields[0]
            if token not in vocab:
                continue
            try:
                found[token] = np.array([float(v) for v in fields[1:]], dtype=np.float64)
            except ValueError as e:
                raise EmbeddingFormatError(f"{path}, line {lineno}: bad float ({e})") from e

    rng = np.random.default_rng(seed)
    vectors = np.empty((len(vocab), dim), dtype=np.float64)
    pretrained = np.zeros(len(vocab), dtype=bool)
    for idx, token in enumerate(vocab.tokens):
        vec = found.get(token)
        if vec is None or idx == vocab.unk_index:
            vectors[idx] = rng.uniform(-0.25, 0.25, size=dim)
        else:
            vectors[idx] = vec
            pretrained[idx] = True
    return EmbeddingTable(vectors=vectors, pretrained=pretrained)


@dataclass
class LoadedDataset:
    """Parsed dataset plus the label dictionary discovered while reading it."""

    documents: list[LabeledDocument]
    label_names: list[str]
    skipped: int

    @property
    def n_classes(self) -> int:
        return len(self.label_names)


def load_dataset(path, rules: PreprocessRules = DEFAULT_RULES) -> LoadedDataset:
    """Parse a ``label<TAB>text`` file into preprocessed documents.

    Documents that are empty after preprocessing are skipped with a
    warning and counted in the result.
    """
    documents: list[LabeledDocument] = []
    label_ids: dict[str, int] = {}
    label_names: list[str] = []
    skipped = 0
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if "\t" not in line:
                raise DatasetFormatError(
                    f"{path}, line {lineno}: expected label<TAB>text")
            label_str, text = line.split("\t", 1)
            doc = preprocess_document(0, text, rules)
            if doc is None:
                warnings.warn(
                    f"{path}, line {lineno}: document empty after preprocessing; skipped",
                    stacklevel=2)
                skipped += 1
                continue
            if label_str not in label_ids:
                label_ids[label_str] = len(label_names)
                label_names.append(label_str)
            doc.label = label_ids[label_str]
            documents.append(doc)
    return LoadedDataset(documents=documents, label_names=label_names, skipped=skipped)


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
