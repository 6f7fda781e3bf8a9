"""Document classification with message passing attention networks.

Documents become directed, weighted word co-occurrence graphs; a
message-passing encoder with attention readout classifies them, trained
end to end on a built-in reverse-mode differentiation core.
"""

from .corpus import (
    DEFAULT_RULES,
    UNK_TOKEN,
    DatasetFormatError,
    EmbeddingFormatError,
    EmbeddingTable,
    LabeledDocument,
    LoadedDataset,
    PreprocessRules,
    Vocabulary,
    build_vocabulary,
    load_dataset,
    load_embeddings,
    preprocess_document,
    random_embeddings,
    split_sentences,
    tokenize,
)
from .graph import (
    MASTER_NODE_ID,
    DocumentGraph,
    build_cooccurrence_graph,
    clique_graph,
    graph_to_dict,
    graph_to_edgelist,
    path_graph,
    renormalize,
)
from .model import (
    DocumentRepresentation,
    EncodedDocument,
    MpadConfig,
    MpadParams,
    aggregate,
    encode_document,
    forward_batch,
    gru_combine,
    hierarchical_forward,
    mpad_forward,
    readout,
)
from .numcore import Adam, NonFiniteError, Tape, Tensor
from .train import (
    CrossValResult,
    Metrics,
    TrainRun,
    cross_validate,
    evaluate,
    split_validation,
    train,
)

__version__ = "0.1.0"
