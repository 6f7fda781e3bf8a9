"""Message passing attention model over document graphs.

One document is one graph. Each round of message passing averages the
features of incoming neighbors through the renormalized adjacency,
transforms the result with a per-round MLP, and merges it into the node
states with a gated recurrent update. After each round an attention
readout pools the content nodes into a single vector; when a master node
is present, its state bypasses the attention and is concatenated to the
pooled vector (a skip connection). Per-round readouts are batch
normalized, concatenated, and classified by a dense head.

Hierarchical variants encode every sentence with the same pipeline and
then combine the sentence vectors either by one more attention pool
("sentence-att") or by a second message passing stage over a clique or
path graph of sentences ("clique", "path"). Sentence graphs at the
second level carry no master node, so their readout is the pooled
vector alone.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np

from .corpus import EmbeddingTable, LabeledDocument, Vocabulary
from .graph import (
    MASTER_NODE_ID,
    DocumentGraph,
    build_cooccurrence_graph,
    clique_graph,
    path_graph,
    renormalize,
)
from .numcore import (
    BatchNormState,
    Tensor,
    add,
    batch_norm,
    concat_cols,
    concat_rows,
    dropout,
    linear,
    linear2,
    matmul,
    mul,
    one_minus,
    relu,
    row_slice,
    row_softmax,
    sigmoid,
    tanh,
    transpose,
    weighted_sum_rows,
)

VARIANTS = ("flat", "sentence-att", "clique", "path")
HIERARCHICAL_VARIANTS = ("sentence-att", "clique", "path")


@dataclass
class MpadConfig:
    """Hyperparameters and ablation switches for one model."""

    input_dim: int
    n_classes: int
    mp_iterations: int = 2
    hidden_dim: int = 64
    mlp_layers: int = 2
    variant: str = "flat"
    directed: bool = True
    with_master: bool = True
    renormalize: bool = True
    use_gru_combine: bool = True
    master_skip: bool = True
    multi_readout: bool = True
    bn_per_step: bool = True
    window: int = 2
    dropout_rate: float = 0.5
    batch_size: int = 64
    learning_rate: float = 0.001
    max_epochs: int = 200
    val_fraction: float = 0.1
    min_count: int = 1

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValueError(f"input_dim must be >= 1, got {self.input_dim}")
        if self.n_classes < 2:
            raise ValueError(f"n_classes must be >= 2, got {self.n_classes}")
        if self.mp_iterations < 1:
            raise ValueError(f"mp_iterations must be >= 1, got {self.mp_iterations}")
        if self.hidden_dim < 1:
            raise ValueError(f"hidden_dim must be >= 1, got {self.hidden_dim}")
        if self.mlp_layers < 1:
            raise ValueError(f"mlp_layers must be >= 1, got {self.mlp_layers}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.window < 2:
            raise ValueError(f"window must be >= 2, got {self.window}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError(f"val_fraction must be in (0, 1), got {self.val_fraction}")

    @property
    def step_readout_width(self) -> int:
        """Width of one per-round readout at the word level.

        Pooled vector plus master state when the skip connection is
        active; the pooled vector alone otherwise.
        """
        if self.with_master and self.master_skip:
            return 2 * self.hidden_dim
        return self.hidden_dim

    @property
    def encoder_summary_width(self) -> int:
        """Width of the concatenated word-level readouts."""
        steps = self.mp_iterations if self.multi_readout else 1
        return steps * self.step_readout_width

    @property
    def document_summary_width(self) -> int:
        """Width of the vector entering the classifier head."""
        if self.variant == "flat":
            return self.encoder_summary_width
        if self.variant == "sentence-att":
            return self.hidden_dim
        steps = self.mp_iterations if self.multi_readout else 1
        return steps * self.hidden_dim

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "MpadConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class DenseParams:
    weight: Tensor
    bias: Tensor


@dataclass
class GruParams:
    """Six projection matrices and their biases for one recurrent update.

    ``*_in`` act on the incoming message, ``*_state`` on the previous
    node state. When the state width differs from the hidden width
    (first round on raw embeddings), every use of the previous state is
    routed through ``cand_state``: the gated candidate multiplies the
    projected state, and the interpolation endpoint is that projection.
    """

    reset_in: Tensor
    reset_state: Tensor
    reset_bias: Tensor
    update_in: Tensor
    update_state: Tensor
    update_bias: Tensor
    cand_in: Tensor
    cand_in_bias: Tensor
    cand_state: Tensor
    cand_state_bias: Tensor


@dataclass
class AttentionParams:
    weight: Tensor
    bias: Tensor
    context: Tensor  # (hidden, 1) comparison vector


@dataclass
class BatchNormParams:
    gamma: Tensor
    beta: Tensor
    state: BatchNormState


@dataclass
class MpStepParams:
    mlp: list[DenseParams]
    gru: GruParams | None
    attention: AttentionParams
    norm: BatchNormParams | None


@dataclass
class StackParams:
    """One full message-passing encoder: per-round parameters plus the
    optional whole-summary batch norm used when ``bn_per_step`` is off."""

    steps: list[MpStepParams]
    norm: BatchNormParams | None


class MpadParams:
    """Every trainable tensor of a model, with a flat name registry.

    ``trainables`` maps dotted names to tensors (for the optimizer and
    checkpoints); ``norm_states`` maps batch-norm names to their running
    statistics. Initialization is uniform with Glorot fan-based limits,
    drawn in a fixed order from ``seed``.
    """

    def __init__(self, config: MpadConfig, seed=0):
        self.config = config
        self.trainables: dict[str, Tensor] = {}
        self.norm_states: dict[str, BatchNormState] = {}
        rng = np.random.default_rng(seed)

        d = config.hidden_dim
        self.word_stack = self._build_stack(
            rng, "word", first_input=config.input_dim,
            readout_width=config.step_readout_width)
        self.sentence_dense: DenseParams | None = None
        self.combine_attention: AttentionParams | None = None
        self.combine_norm: BatchNormParams | None = None
        self.doc_stack: StackParams | None = None
        if config.variant in HIERARCHICAL_VARIANTS:
            self.sentence_dense = self._dense(
                rng, "sent_dense", config.encoder_summary_width, d)
            if config.variant == "sentence-att":
                self.combine_attention = self._attention(rng, "combine.att", d)
                self.combine_norm = self._norm("combine.norm", d)
            else:
                self.doc_stack = self._build_stack(
                    rng, "doc", first_input=d, readout_width=d)
        self.head_dense = self._dense(
            rng, "head", config.document_summary_width, d)
        self.classifier = self._dense(rng, "out", d, config.n_classes)

        # Realized width entering the head must match the closed form.
        assert self.head_dense.weight.shape[0] == config.document_summary_width

    def _param(self, name: str, data: np.ndarray) -> Tensor:
        t = Tensor(data, requires_grad=True)
        if name in self.trainables:
            raise ValueError(f"duplicate parameter name {name!r}")
        self.trainables[name] = t
        return t

    def _glorot(self, rng, fan_in: int, fan_out: int) -> np.ndarray:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=(fan_in, fan_out))

    def _dense(self, rng, name: str, fan_in: int, fan_out: int) -> DenseParams:
        return DenseParams(
            weight=self._param(f"{name}.weight", self._glorot(rng, fan_in, fan_out)),
            bias=self._param(f"{name}.bias", np.zeros((1, fan_out))),
        )

    def _attention(self, rng, name: str, width: int) -> AttentionParams:
        return AttentionParams(
            weight=self._param(f"{name}.weight", self._glorot(rng, width, width)),
            bias=self._param(f"{name}.bias", np.zeros((1, width))),
            context=self._param(f"{name}.context", self._glorot(rng, width, 1)),
        )

    def _norm(self, name: str, width: int) -> BatchNormParams:
        state = BatchNormState.fresh(width)
        self.norm_states[name] = state
        return BatchNormParams(
            gamma=self._param(f"{name}.gamma", np.ones((1, width))),
            beta=self._param(f"{name}.beta", np.zeros((1, width))),
            state=state,
        )

    def _gru(self, rng, name: str, state_dim: int, hidden: int) -> GruParams:
        def mat(suffix: str, fan_in: int) -> Tensor:
            return self._param(f"{name}.{suffix}", self._glorot(rng, fan_in, hidden))

        def bias(suffix: str) -> Tensor:
            return self._param(f"{name}.{suffix}", np.zeros((1, hidden)))

        return GruParams(
            reset_in=mat("reset_in", hidden), reset_state=mat("reset_state", state_dim),
            reset_bias=bias("reset_bias"),
            update_in=mat("update_in", hidden), update_state=mat("update_state", state_dim),
            update_bias=bias("update_bias"),
            cand_in=mat("cand_in", hidden), cand_in_bias=bias("cand_in_bias"),
            cand_state=mat("cand_state", state_dim), cand_state_bias=bias("cand_state_bias"),
        )

    def _build_stack(self, rng, prefix: str, first_input: int,
                     readout_width: int) -> StackParams:
        cfg = self.config
        d = cfg.hidden_dim
        steps = []
        for t in range(1, cfg.mp_iterations + 1):
            d_in = first_input if t == 1 else d
            mlp = []
            size = d_in
            for i in range(cfg.mlp_layers):
                mlp.append(self._dense(rng, f"{prefix}.step{t}.mlp{i + 1}", size, d))
                size = d
            gru = self._gru(rng, f"{prefix}.step{t}.gru", d_in, d) \
                if cfg.use_gru_combine else None
            attention = self._attention(rng, f"{prefix}.step{t}.att", d)
            norm = self._norm(f"{prefix}.step{t}.norm", readout_width) \
                if cfg.bn_per_step else None
            steps.append(MpStepParams(mlp=mlp, gru=gru, attention=attention, norm=norm))
        stack_norm = None
        if not cfg.bn_per_step:
            read = cfg.mp_iterations if cfg.multi_readout else 1
            stack_norm = self._norm(f"{prefix}.norm", read * readout_width)
        return StackParams(steps=steps, norm=stack_norm)

    def zero_grads(self) -> None:
        for p in self.trainables.values():
            p.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        """Copies of every trainable plus the batch-norm running statistics."""
        out = {name: p.data.copy() for name, p in self.trainables.items()}
        for name, state in self.norm_states.items():
            out[f"{name}.running_mean"] = state.mean.copy()
            out[f"{name}.running_var"] = state.var.copy()
        return out

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        expected = set(self.trainables)
        for name in self.norm_states:
            expected.add(f"{name}.running_mean")
            expected.add(f"{name}.running_var")
        if set(state) != expected:
            missing = expected - set(state)
            extra = set(state) - expected
            raise ValueError(f"state mismatch: missing {sorted(missing)}, "
                             f"unexpected {sorted(extra)}")
        for name, p in self.trainables.items():
            arr = np.asarray(state[name], dtype=np.float64)
            if arr.shape != p.data.shape:
                raise ValueError(f"parameter {name!r}: shape {arr.shape} "
                                 f"!= expected {p.data.shape}")
            p.data = arr.copy()
        for name, bn in self.norm_states.items():
            bn.mean = np.asarray(state[f"{name}.running_mean"], dtype=np.float64).copy()
            bn.var = np.asarray(state[f"{name}.running_var"], dtype=np.float64).copy()


@dataclass
class GraphUnit:
    """One graph ready for message passing: renormalized adjacency, initial
    node features (master row all zero), and node bookkeeping."""

    anorm: np.ndarray
    h0: np.ndarray
    master_index: int | None
    node_ids: list[int]


@dataclass
class EncodedDocument:
    """Model-ready form of a document for a given config.

    Flat variant: a single unit over the whole token stream. Hierarchical
    variants: one unit per sentence, plus the renormalized sentence-graph
    adjacency for the clique/path variants.
    """

    label: int
    units: list[GraphUnit]
    doc_anorm: np.ndarray | None = None


@dataclass
class DocumentRepresentation:
    """Inspection view of one forward pass: the document vector handed to
    the classifier head and the attention weights of each readout."""

    summary: np.ndarray
    step_alphas: list[np.ndarray]


def _unit_from_tokens(tokens: list[str], vocab: Vocabulary, table: EmbeddingTable,
                      config: MpadConfig) -> GraphUnit:
    indices = vocab.encode(tokens)
    g = build_cooccurrence_graph(indices, window=config.window,
                                 directed=config.directed,
                                 with_master=config.with_master)
    anorm = renormalize(g, enabled=config.renormalize)
    h0 = np.zeros((g.n_nodes, table.dim))
    content = [i for i in g.node_ids if i != MASTER_NODE_ID]
    h0[: len(content)] = table.vectors[content]
    return GraphUnit(anorm=anorm, h0=h0, master_index=g.master_index,
                     node_ids=list(g.node_ids))


def encode_document(doc: LabeledDocument, vocab: Vocabulary, table: EmbeddingTable,
                    config: MpadConfig) -> EncodedDocument:
    """Build the graphs and initial features a forward pass needs."""
    if config.variant == "flat":
        return EncodedDocument(label=doc.label,
                               units=[_unit_from_tokens(doc.tokens, vocab, table, config)])
    if not doc.sentences:
        raise ValueError("hierarchical variants need at least one sentence")
    units = [_unit_from_tokens(s, vocab, table, config) for s in doc.sentences]
    doc_anorm = None
    if config.variant in ("clique", "path"):
        builder = clique_graph if config.variant == "clique" else path_graph
        doc_anorm = renormalize(builder(len(units)), enabled=config.renormalize)
    return EncodedDocument(label=doc.label, units=units, doc_anorm=doc_anorm)


def aggregate(h: Tensor, anorm: np.ndarray, mlp: Sequence[DenseParams]) -> Tensor:
    """Form messages: neighborhood average (or sum) through the adjacency
    operator, then the round's MLP with ReLU after every layer."""
    x = matmul(Tensor(anorm), h)
    for layer in mlp:
        x = relu(linear(x, layer.weight, layer.bias))
    return x


def gru_combine(h: Tensor, m: Tensor, gru: GruParams | None) -> Tensor:
    """Merge the message matrix into the node states with a gated update.

    With ``gru=None`` (neighbors-only ablation) the messages replace the
    states outright. Otherwise reset and update gates interpolate between
    the previous state and a gated candidate; see ``GruParams`` for how
    the first round handles a state width different from the hidden width.
    """
    if gru is None:
        return m
    r = sigmoid(linear2(m, gru.reset_in, h, gru.reset_state, gru.reset_bias))
    z = sigmoid(linear2(m, gru.update_in, h, gru.update_state, gru.update_bias))
    if h.shape[1] == m.shape[1]:
        prev = h
        cand = tanh(add(linear(m, gru.cand_in, gru.cand_in_bias),
                        linear(mul(r, h), gru.cand_state, gru.cand_state_bias)))
    else:
        prev = linear(h, gru.cand_state, gru.cand_state_bias)
        cand = tanh(add(linear(m, gru.cand_in, gru.cand_in_bias), mul(r, prev)))
    return add(mul(one_minus(z), prev), mul(z, cand))


def _attention_pool(h: Tensor, att: AttentionParams) -> tuple[Tensor, np.ndarray]:
    scores = matmul(tanh(linear(h, att.weight, att.bias)), att.context)
    alpha = row_softmax(transpose(scores))
    pooled = weighted_sum_rows(alpha, h)
    return pooled, alpha.data[0].copy()


def _drop_row(h: Tensor, index: int) -> Tensor:
    n = h.shape[0]
    if index == 0:
        return row_slice(h, 1, n)
    if index == n - 1:
        return row_slice(h, 0, n - 1)
    return concat_rows([row_slice(h, 0, index), row_slice(h, index + 1, n)])


def readout(h: Tensor, master_index: int | None, attention: AttentionParams,
            master_skip: bool = True, norm: BatchNormParams | None = None,
            mode: str = "eval") -> tuple[Tensor, np.ndarray]:
    """Pool node states into one row vector; returns (vector, attention weights).

    With a master node and the skip connection active, attention runs
    over the content nodes only and the master state is concatenated to
    the pooled vector. Without a master (or with the skip disabled) the
    pooled vector alone is returned, over all rows. When ``norm`` is
    given, the result is batch normalized in the given mode.
    """
    if master_index is not None and master_skip:
        if h.shape[0] <= 1:
            raise ValueError("empty document graph: no content nodes to read out")
        pooled, alpha = _attention_pool(_drop_row(h, master_index), attention)
        out = concat_cols([pooled, row_slice(h, master_index, master_index + 1)])
    else:
        pooled, alpha = _attention_pool(h, attention)
        out = pooled
    if norm is not None:
        out = batch_norm(out, norm.gamma, norm.beta, norm.state, mode)
    return out, alpha


def _read_step_indices(config: MpadConfig) -> list[int]:
    if config.multi_readout:
        return list(range(config.mp_iterations))
    return [config.mp_iterations - 1]


def _encode_unit(h0: Tensor, anorm: np.ndarray, master_index: int | None,
                 stack: StackParams, config: MpadConfig
                 ) -> tuple[list[Tensor], list[np.ndarray]]:
    read_at = set(_read_step_indices(config))
    h = h0
    rows: list[Tensor] = []
    alphas: list[np.ndarray] = []
    for t, step in enumerate(stack.steps):
        m = aggregate(h, anorm, step.mlp)
        h = gru_combine(h, m, step.gru)
        if t in read_at:
            row, alpha = readout(h, master_index, step.attention,
                                 master_skip=config.master_skip)
            rows.append(row)
            alphas.append(alpha)
    return rows, alphas


def _pool_readouts(rows_by_step: list[list[Tensor]], stack: StackParams,
                   config: MpadConfig, mode: str) -> Tensor:
    """Stack per-unit readout rows, batch normalize, concatenate the rounds."""
    step_ids = _read_step_indices(config)
    normalized = []
    for step_id, rows in zip(step_ids, rows_by_step):
        stacked = rows[0] if len(rows) == 1 else concat_rows(rows)
        if config.bn_per_step:
            norm = stack.steps[step_id].norm
            stacked = batch_norm(stacked, norm.gamma, norm.beta, norm.state, mode)
        normalized.append(stacked)
    out = normalized[0] if len(normalized) == 1 else concat_cols(normalized)
    if not config.bn_per_step:
        out = batch_norm(out, stack.norm.gamma, stack.norm.beta, stack.norm.state, mode)
    return out


def _head(x: Tensor, params: MpadParams, config: MpadConfig, mode: str, rng) -> Tensor:
    x = dropout(x, config.dropout_rate, mode, rng)
    x = relu(linear(x, params.head_dense.weight, params.head_dense.bias))
    x = dropout(x, config.dropout_rate, mode, rng)
    return linear(x, params.classifier.weight, params.classifier.bias)


def forward_batch(docs: Sequence[EncodedDocument], params: MpadParams,
                  config: MpadConfig, mode: str = "eval", rng=None
                  ) -> tuple[Tensor, list[DocumentRepresentation]]:
    """Run the forward pass for a batch of documents.

    Returns the (batch, classes) logits and one inspection representation
    per document. Batch normalization sees the whole batch at once, so in
    train mode batch composition matters; eval mode uses running
    statistics and is deterministic per document.
    """
    if not docs:
        raise ValueError("forward_batch needs at least one document")
    if mode == "train" and config.dropout_rate > 0.0:
        rng = np.random.default_rng(rng)

    if config.variant == "flat":
        rows_by_step: list[list[Tensor]] = [[] for _ in _read_step_indices(config)]
        alphas_per_doc = []
        for doc in docs:
            unit = doc.units[0]
            rows, alphas = _encode_unit(Tensor(unit.h0), unit.anorm,
                                        unit.master_index, params.word_stack, config)
            for slot, row in zip(rows_by_step, rows):
                slot.append(row)
            alphas_per_doc.append(alphas)
        summary = _pool_readouts(rows_by_step, params.word_stack, config, mode)
    else:
        summary, alphas_per_doc = _hierarchical_summary(docs, params, config, mode, rng)

    assert summary.shape[1] == config.document_summary_width
    logits = _head(summary, params, config, mode, rng)
    reps = [DocumentRepresentation(summary=summary.data[i].copy(),
                                   step_alphas=alphas_per_doc[i])
            for i in range(len(docs))]
    return logits, reps


def _hierarchical_summary(docs: Sequence[EncodedDocument], params: MpadParams,
                          config: MpadConfig, mode: str, rng
                          ) -> tuple[Tensor, list[list[np.ndarray]]]:
    for doc in docs:
        if not doc.units:
            raise ValueError("hierarchical variants need at least one sentence")

    # Level 1: encode every sentence of every document with the shared
    # word-level stack; batch norm sees all sentences in the batch.
    rows_by_step: list[list[Tensor]] = [[] for _ in _read_step_indices(config)]
    for doc in docs:
        for unit in doc.units:
            rows, _ = _encode_unit(Tensor(unit.h0), unit.anorm, unit.master_index,
                                   params.word_stack, config)
            for slot, row in zip(rows_by_step, rows):
                slot.append(row)
    sent_summary = _pool_readouts(rows_by_step, params.word_stack, config, mode)
    sent_summary = dropout(sent_summary, config.dropout_rate, mode, rng)
    sent_vectors = relu(linear(sent_summary, params.sentence_dense.weight,
                               params.sentence_dense.bias))

    offsets = np.cumsum([0] + [len(doc.units) for doc in docs])
    if config.variant == "sentence-att":
        pooled_rows = []
        alphas_per_doc = []
        for doc, lo, hi in zip(docs, offsets[:-1], offsets[1:]):
            rows = row_slice(sent_vectors, lo, hi)
            pooled, alpha = _attention_pool(rows, params.combine_attention)
            pooled_rows.append(pooled)
            alphas_per_doc.append([alpha])
        stacked = pooled_rows[0] if len(pooled_rows) == 1 else concat_rows(pooled_rows)
        norm = params.combine_norm
        summary = batch_norm(stacked, norm.gamma, norm.beta, norm.state, mode)
        return summary, alphas_per_doc

    # Level 2 for clique/path: one graph per document over its sentence
    # vectors (no master node).
    doc_rows_by_step: list[list[Tensor]] = [[] for _ in _read_step_indices(config)]
    alphas_per_doc = []
    for doc, lo, hi in zip(docs, offsets[:-1], offsets[1:]):
        h0 = row_slice(sent_vectors, lo, hi)
        rows, alphas = _encode_unit(h0, doc.doc_anorm, None, params.doc_stack, config)
        for slot, row in zip(doc_rows_by_step, rows):
            slot.append(row)
        alphas_per_doc.append(alphas)
    summary = _pool_readouts(doc_rows_by_step, params.doc_stack, config, mode)
    return summary, alphas_per_doc


def mpad_forward(graph: DocumentGraph, h0: np.ndarray, params: MpadParams,
                 config: MpadConfig, mode: str = "eval", rng=None
                 ) -> tuple[Tensor, DocumentRepresentation]:
    """Classify one document graph with the flat pipeline.

    ``h0`` holds the initial node features in graph node order (the
    master row, when present, should be all zero). Returns the (1,
    classes) logits and the inspection representation.
    """
    if config.variant != "flat":
        raise ValueError("mpad_forward runs the flat pipeline; "
                         "use hierarchical_forward for hierarchical variants")
    h0 = np.asarray(h0, dtype=np.float64)
    if h0.shape != (graph.n_nodes, config.input_dim):
        raise ValueError(f"h0 shape {h0.shape} does not match "
                         f"({graph.n_nodes}, {config.input_dim})")
    unit = GraphUnit(anorm=renormalize(graph, enabled=config.renormalize),
                     h0=h0, master_index=graph.master_index,
                     node_ids=list(graph.node_ids))
    doc = EncodedDocument(label=0, units=[unit])
    logits, reps = forward_batch([doc], params, config, mode, rng)
    return logits, reps[0]


def hierarchical_forward(doc: EncodedDocument, params: MpadParams,
                         config: MpadConfig, mode: str = "eval", rng=None
                         ) -> tuple[Tensor, DocumentRepresentation]:
    """Classify one encoded multi-sentence document with a hierarchical variant."""
    if config.variant not in HIERARCHICAL_VARIANTS:
        raise ValueError(f"hierarchical_forward needs a hierarchical variant, "
                         f"got {config.variant!r}")
    logits, reps = forward_batch([doc], params, config, mode, rng)
    return logits, reps[0]
