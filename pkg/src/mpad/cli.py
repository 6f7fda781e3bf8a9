"""Command line surface: graph inspection, training, evaluation, prediction,
attention export, and ablation sweeps.

Exit codes: 0 success, 2 input/config error, 3 numerical failure.
Checkpoints are self-contained (parameters, running statistics, config,
vocabulary, label names, embedding table), so evaluate/predict need only
the checkpoint and an input file. ``MPAD_OUT_DIR`` sets the default
output directory for training runs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import typing
import warnings
from collections import Counter

import numpy as np

from .corpus import (
    DEFAULT_RULES,
    EmbeddingFormatError,
    LabeledDocument,
    LoadedDataset,
    Vocabulary,
    build_vocabulary,
    file_digest,
    load_dataset,
    load_embeddings,
    preprocess_document,
    random_embeddings,
    tokenize,
)
from .graph import (
    MASTER_NODE_ID,
    MASTER_NODE_LABEL,
    build_cooccurrence_graph,
    graph_to_dict,
    graph_to_edgelist,
)
from .model import (
    MpadConfig,
    MpadParams,
    encode_document,
    forward_batch,
)
from .numcore import CheckpointError, NonFiniteError, load_checkpoint, save_checkpoint
from .train import evaluate, train

_EMBED_SEED_STREAM = 5


def _coercers() -> dict[str, type]:
    return typing.get_type_hints(MpadConfig)


def _coerce_value(key: str, raw: str) -> object:
    hints = _coercers()
    if key not in hints:
        raise ValueError(f"unknown config key {key!r}")
    target = hints[key]
    if target is bool:
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"config key {key!r}: expected a boolean, got {raw!r}")
    try:
        if target is int:
            return int(raw)
        if target is float:
            return float(raw)
    except ValueError as e:
        raise ValueError(f"config key {key!r}: {e}") from e
    return raw.strip()


def _parse_config_file(path) -> dict:
    values: dict = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}, line {lineno}: expected key=value")
            key, raw = stripped.split("=", 1)
            values[key.strip()] = _coerce_value(key.strip(), raw)
    return values


def _parse_set_options(pairs) -> dict:
    values: dict = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ValueError(f"--set expects KEY=VALUE, got {pair!r}")
        key, raw = pair.split("=", 1)
        values[key.strip()] = _coerce_value(key.strip(), raw)
    return values


def _embedding_file_dim(path) -> int:
    with open(path, "r", encoding="utf-8") as f:
        parts = f.readline().split()
    if len(parts) != 2:
        raise EmbeddingFormatError(f"{path}, line 1: expected '<count> <dim>' header")
    return int(parts[1])


def _resolve_config(args, n_classes: int, embedding_dim: int | None) -> MpadConfig:
    values: dict = {}
    if getattr(args, "config", None):
        values.update(_parse_config_file(args.config))
    values.update(_parse_set_options(getattr(args, "set", None)))
    if getattr(args, "variant", None):
        values["variant"] = args.variant
    if getattr(args, "epochs", None) is not None:
        values["max_epochs"] = args.epochs
    if embedding_dim is not None:
        if values.get("input_dim", embedding_dim) != embedding_dim:
            raise ValueError(
                f"config input_dim {values['input_dim']} conflicts with the "
                f"embedding file dimension {embedding_dim}")
        values["input_dim"] = embedding_dim
    else:
        values.setdefault("input_dim", 300)
    if values.get("n_classes", n_classes) != n_classes:
        raise ValueError(f"config n_classes {values['n_classes']} conflicts with "
                         f"the {n_classes} labels found in the training data")
    values["n_classes"] = n_classes
    return MpadConfig.from_dict(values)


def save_model_checkpoint(path, params: MpadParams, vocab: Vocabulary,
                          label_names: list[str], table, seed) -> None:
    arrays = params.state_dict()
    arrays["embedding.vectors"] = table.vectors
    arrays["embedding.pretrained"] = table.pretrained.astype(np.float64).reshape(1, -1)
    metadata = {
        "format": "mpad-checkpoint",
        "config": params.config.to_dict(),
        "vocab_tokens": vocab.tokens,
        "vocab_digest": vocab.digest(),
        "label_names": list(label_names),
        "seed": seed,
    }
    save_checkpoint(path, arrays, metadata)


def load_model_checkpoint(path):
    """Returns (params, config, vocab, table, label_names, metadata)."""
    from .corpus import EmbeddingTable

    arrays, metadata = load_checkpoint(path)
    for key in ("config", "vocab_tokens", "vocab_digest", "label_names"):
        if key not in metadata:
            raise CheckpointError(f"{path}: missing {key!r} in checkpoint header")
    config = MpadConfig.from_dict(metadata["config"])
    tokens = metadata["vocab_tokens"]
    vocab = Vocabulary(kept_tokens=tokens[1:], counts=Counter())
    if vocab.tokens != tokens:
        raise CheckpointError(f"{path}: malformed vocabulary in checkpoint header")
    if vocab.digest() != metadata["vocab_digest"]:
        raise CheckpointError(f"{path}: vocabulary digest mismatch (corrupted checkpoint)")
    try:
        vectors = arrays.pop("embedding.vectors")
        pretrained = arrays.pop("embedding.pretrained")
    except KeyError as e:
        raise CheckpointError(f"{path}: missing embedding entry {e}") from e
    if vectors.shape[0] != len(vocab):
        raise CheckpointError(f"{path}: embedding rows {vectors.shape[0]} "
                              f"!= vocabulary size {len(vocab)}")
    table = EmbeddingTable(vectors=vectors, pretrained=pretrained[0].astype(bool))
    params = MpadParams(config, seed=0)
    params.load_state_dict(arrays)
    return params, config, vocab, table, list(metadata["label_names"]), metadata


def _remap_labels(loaded: LoadedDataset, label_names: list[str]) -> list[LabeledDocument]:
    """Re-key document labels onto the training label order."""
    mapping = {name: i for i, name in enumerate(label_names)}
    docs = []
    for doc in loaded.documents:
        name = loaded.label_names[doc.label]
        if name not in mapping:
            raise ValueError(f"label {name!r} does not appear in the training data")
        doc.label = mapping[name]
        docs.append(doc)
    return docs


def _read_input_documents(path):
    """One raw text per non-empty line; yields (lineno, document)."""
    docs = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            text = line.rstrip("\n")
            if not text.strip():
                continue
            doc = preprocess_document(0, text)
            if doc is None:
                warnings.warn(f"{path}, line {lineno}: empty after preprocessing; skipped",
                              stacklevel=2)
                continue
            docs.append((lineno, doc))
    return docs


def cmd_build_graph(args) -> int:
    if os.path.exists(args.input):
        with open(args.input, "r", encoding="utf-8") as f:
            text = f.read()
    else:
        text = args.input
    tokens = tokenize(text, DEFAULT_RULES)
    if not tokens:
        print("error: document is empty after preprocessing", file=sys.stderr)
        return 2
    order: dict[str, int] = {}
    for tok in tokens:
        order.setdefault(tok, len(order))
    indices = [order[tok] for tok in tokens]
    graph = build_cooccurrence_graph(indices, window=args.window,
                                     directed=not args.undirected,
                                     with_master=not args.no_master)
    labels = list(order)
    if graph.master_index is not None:
        labels.append(MASTER_NODE_LABEL)
    if args.format == "json":
        rendered = json.dumps(graph_to_dict(graph, labels), ensure_ascii=False, indent=2)
        rendered += "\n"
    else:
        rendered = graph_to_edgelist(graph, labels)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write(rendered)
    else:
        sys.stdout.write(rendered)
    return 0


def _prepare_training_inputs(args):
    loaded = load_dataset(args.train)
    docs = loaded.documents
    if getattr(args, "limit", None):
        docs = docs[: args.limit]
        # Re-derive the label set actually present in the retained slice.
        names = sorted({loaded.label_names[d.label] for d in docs},
                       key=lambda n: loaded.label_names.index(n))
        remap = {loaded.label_names.index(n): i for i, n in enumerate(names)}
        for d in docs:
            d.label = remap[d.label]
        label_names = names
    else:
        label_names = loaded.label_names
    if len(label_names) < 2:
        raise ValueError(f"training data has {len(label_names)} label(s); need >= 2")
    embedding_dim = _embedding_file_dim(args.embeddings) if args.embeddings else None
    config = _resolve_config(args, n_classes=len(label_names),
                             embedding_dim=embedding_dim)
    vocab = build_vocabulary(docs, config.min_count)
    if args.embeddings:
        table = load_embeddings(args.embeddings, vocab, config.input_dim,
                                seed=[args.seed, _EMBED_SEED_STREAM])
    else:
        table = random_embeddings(vocab, config.input_dim,
                                  seed=[args.seed, _EMBED_SEED_STREAM])
    return docs, label_names, config, vocab, table


def cmd_train(args) -> int:
    docs, label_names, config, vocab, table = _prepare_training_inputs(args)
    out_dir = args.out or os.environ.get("MPAD_OUT_DIR", "mpad_run")
    os.makedirs(out_dir, exist_ok=True)
    checkpoint_path = os.path.join(out_dir, "checkpoint.mpad")
    log_path = os.path.join(out_dir, "log.jsonl")
    manifest_path = os.path.join(out_dir, "manifest.json")

    with open(log_path, "w", encoding="utf-8") as log_file:
        run = train(docs, vocab, table, config, seed=args.seed,
                    log_file=log_file, quiet=not args.verbose)
    save_model_checkpoint(checkpoint_path, run.params, vocab, label_names,
                          table, args.seed)

    train_metrics = evaluate(run.params, config, docs, vocab, table)
    test_accuracy = None
    if args.test:
        test_loaded = load_dataset(args.test)
        test_docs = _remap_labels(test_loaded, label_names)
        test_metrics = evaluate(run.params, config, test_docs, vocab, table)
        test_accuracy = test_metrics.accuracy

    inputs = {"train": {"path": args.train, "sha256": file_digest(args.train)}}
    if args.test:
        inputs["test"] = {"path": args.test, "sha256": file_digest(args.test)}
    if args.embeddings:
        inputs["embeddings"] = {"path": args.embeddings,
                                "sha256": file_digest(args.embeddings)}
    if args.config:
        inputs["config"] = {"path": args.config, "sha256": file_digest(args.config)}
    manifest = {
        "command": "train",
        "config": config.to_dict(),
        "seed": args.seed,
        "inputs": inputs,
        "vocab_digest": vocab.digest(),
        "label_names": label_names,
        "pretrained_coverage": table.coverage,
        "outputs": {
            "checkpoint": os.path.basename(checkpoint_path),
            "log": os.path.basename(log_path),
            "best_epoch": run.best_epoch,
            "best_val_accuracy": run.best_val_accuracy,
            "train_accuracy": train_metrics.accuracy,
            "test_accuracy": test_accuracy,
        },
    }
    with open(manifest_path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")

    if args.json:
        print(json.dumps(manifest["outputs"], sort_keys=True))
    else:
        print(f"best epoch {run.best_epoch} with validation accuracy "
              f"{run.best_val_accuracy:.4f}")
        print(f"train accuracy {train_metrics.accuracy:.4f}")
        if test_accuracy is not None:
            print(f"test accuracy {test_accuracy:.4f}")
        print(f"artifacts written to {out_dir}")
    return 0


_GRID_FLAGS = {
    "undirected": {"directed": False},
    "no-master": {"with_master": False},
    "no-renorm": {"renormalize": False},
    "neighbors-only": {"use_gru_combine": False},
    "no-skip": {"master_skip": False},
}


def parse_grid(grid: str) -> list[tuple[str, dict]]:
    """Expand an ablation grid string into (name, config overrides) rows.

    Tokens are separated by ';'. ``T=a..b`` expands to one row per
    message-passing depth; the named flags map to single ablation switches.
    """
    rows: list[tuple[str, dict]] = []
    for token in grid.split(";"):
        token = token.strip()
        if not token:
            continue
        if token.startswith("T="):
            spec = token[2:]
            if ".." in spec:
                lo_s, hi_s = spec.split("..", 1)
                lo, hi = int(lo_s), int(hi_s)
            else:
                lo = hi = int(spec)
            if lo < 1 or hi < lo:
                raise ValueError(f"bad iteration range in grid token {token!r}")
            for t in range(lo, hi + 1):
                rows.append((f"T={t}", {"mp_iterations": t}))
        elif token in _GRID_FLAGS:
            rows.append((token, dict(_GRID_FLAGS[token])))
        else:
            raise ValueError(f"unknown grid token {token!r}")
    if not rows:
        raise ValueError("empty ablation grid")
    return rows


def cmd_ablate(args) -> int:
    docs, label_names, base_config, vocab, table = _prepare_training_inputs(args)
    test_docs = None
    if args.test:
        test_loaded = load_dataset(args.test)
        test_docs = _remap_labels(test_loaded, label_names)

    rows = parse_grid(args.grid)
    results = []
    for name, overrides in rows:
        values = base_config.to_dict()
        values.update(overrides)
        config = MpadConfig.from_dict(values)
        vanilla = config == base_config
        run = train(docs, vocab, table, config, seed=args.seed)
        if test_docs is not None:
            accuracy = evaluate(run.params, config, test_docs, vocab, table).accuracy
        else:
            accuracy = run.best_val_accuracy
        results.append({"name": name, "vanilla": vanilla, "accuracy": accuracy,
                        "config": config.to_dict()})

    column = "test accuracy" if test_docs is not None else "validation accuracy"
    if args.json:
        print(json.dumps({"metric": column, "rows": results}, sort_keys=True))
    else:
        width = max(len(r["name"]) for r in results) + 2
        print(f"{'configuration':<{width}}{column}")
        for r in results:
            name = r["name"] + (" *" if r["vanilla"] else "")
            print(f"{name:<{width}}{r['accuracy']:.4f}")
        if any(r["vanilla"] for r in results):
            print("* vanilla model")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "ablation.json"), "w", encoding="utf-8") as f:
            json.dump({"metric": column, "rows": results}, f, indent=2, sort_keys=True)
            f.write("\n")
    return 0


def _check_manifest_digest(checkpoint_path, metadata) -> None:
    manifest_path = os.path.join(os.path.dirname(os.path.abspath(checkpoint_path)),
                                 "manifest.json")
    if not os.path.exists(manifest_path):
        return
    with open(manifest_path, "r", encoding="utf-8") as f:
        manifest = json.load(f)
    expected = manifest.get("vocab_digest")
    if expected is not None and expected != metadata["vocab_digest"]:
        raise ValueError(
            f"vocabulary digest mismatch between {manifest_path} and the checkpoint")


def cmd_evaluate(args) -> int:
    params, config, vocab, table, label_names, metadata = \
        load_model_checkpoint(args.checkpoint)
    _check_manifest_digest(args.checkpoint, metadata)
    loaded = load_dataset(args.input)
    docs = _remap_labels(loaded, label_names)
    metrics = evaluate(params, config, docs, vocab, table)
    if args.json:
        print(json.dumps({
            "accuracy": metrics.accuracy,
            "precision": metrics.precision.tolist(),
            "recall": metrics.recall.tolist(),
            "confusion": metrics.confusion.tolist(),
            "labels": label_names,
        }, sort_keys=True))
        return 0
    print(f"accuracy {metrics.accuracy:.4f}")
    name_width = max(len(n) for n in label_names) + 2
    print(f"{'class':<{name_width}}{'precision':>10}{'recall':>10}{'support':>10}")
    support = metrics.confusion.sum(axis=1)
    for i, name in enumerate(label_names):
        print(f"{name:<{name_width}}{metrics.precision[i]:>10.4f}"
              f"{metrics.recall[i]:>10.4f}{support[i]:>10d}")
    print("confusion matrix (rows: true, cols: predicted):")
    for row in metrics.confusion:
        print("  " + " ".join(f"{v:6d}" for v in row))
    return 0


def cmd_predict(args) -> int:
    params, config, vocab, table, label_names, metadata = \
        load_model_checkpoint(args.checkpoint)
    _check_manifest_digest(args.checkpoint, metadata)
    docs = _read_input_documents(args.input)
    for lo in range(0, len(docs), 256):
        chunk = [encode_document(doc, vocab, table, config)
                 for _, doc in docs[lo: lo + 256]]
        if not chunk:
            continue
        logits, _ = forward_batch(chunk, params, config, mode="eval")
        shifted = logits.data - logits.data.max(axis=1, keepdims=True)
        probs = np.exp(shifted)
        probs /= probs.sum(axis=1, keepdims=True)
        for row in probs:
            idx = int(np.argmax(row))
            print(f"{label_names[idx]}\t{row[idx]:.6f}")
    return 0


def cmd_export_attention(args) -> int:
    params, config, vocab, table, label_names, metadata = \
        load_model_checkpoint(args.checkpoint)
    if config.variant != "flat":
        print("error: attention export supports the flat variant only",
              file=sys.stderr)
        return 2
    docs = _read_input_documents(args.input)
    records = []
    for _, doc in docs:
        encoded = encode_document(doc, vocab, table, config)
        _, reps = forward_batch([encoded], params, config, mode="eval")
        unit = encoded.units[0]
        content_ids = [i for i in unit.node_ids if i != MASTER_NODE_ID]
        records.append({
            "tokens": [vocab.tokens[i] for i in content_ids],
            "per_step_alpha": [alpha.tolist() for alpha in reps[0].step_alphas],
        })
    rendered = json.dumps(records, ensure_ascii=False, indent=2) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write(rendered)
    else:
        sys.stdout.write(rendered)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpad",
        description="Word co-occurrence graphs with message passing attention "
                    "for document classification.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graph", help="serialize a word co-occurrence graph")
    p.add_argument("--input", required=True,
                   help="literal text, or a path to a text file")
    p.add_argument("--window", type=int, default=2)
    p.add_argument("--undirected", action="store_true")
    p.add_argument("--no-master", action="store_true")
    p.add_argument("--format", choices=("json", "edgelist"), default="json")
    p.add_argument("--output", help="write here instead of stdout")
    p.set_defaults(handler=cmd_build_graph)

    def add_training_options(p):
        p.add_argument("--train", required=True, help="label<TAB>text training file")
        p.add_argument("--test", help="label<TAB>text test file")
        p.add_argument("--embeddings", help="pretrained embedding text file")
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--variant", choices=("flat", "sentence-att", "clique", "path"))
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--epochs", type=int, help="override the epoch cap")
        p.add_argument("--limit", type=int, help="use only the first N training documents")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override any config field")
        p.add_argument("--json", action="store_true")

    p = sub.add_parser("train", help="train a model and write run artifacts")
    add_training_options(p)
    p.add_argument("--out", help="output directory (default: $MPAD_OUT_DIR or mpad_run)")
    p.add_argument("--verbose", action="store_true", help="print per-epoch progress")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("ablate", help="train one model per ablation grid row")
    add_training_options(p)
    p.add_argument("--grid", required=True,
                   help="e.g. 'T=1..4; undirected; no-master; no-renorm; "
                        "neighbors-only; no-skip'")
    p.add_argument("--out", help="also write ablation.json here")
    p.set_defaults(handler=cmd_ablate)

    p = sub.add_parser("evaluate", help="score a labeled dataset with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True, help="label<TAB>text file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("predict", help="classify raw text, one document per line")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True, help="text file, one document per line")
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("export-attention",
                       help="dump per-step attention weights as JSON")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True, help="text file, one document per line")
    p.add_argument("--output", help="write here instead of stdout")
    p.set_defaults(handler=cmd_export_attention)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except NonFiniteError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
