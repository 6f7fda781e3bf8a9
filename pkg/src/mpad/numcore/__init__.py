"""Numerical core: tensors with a reverse-mode tape, layers, and the optimizer."""

from .adam import Adam, AdamState
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .nn import BatchNormState, batch_norm, dropout
from .tensor import (
    NonFiniteError,
    Tape,
    Tensor,
    add,
    concat_cols,
    concat_rows,
    cross_entropy,
    linear,
    linear2,
    matmul,
    mean_rows,
    mul,
    one_minus,
    relu,
    row_slice,
    row_softmax,
    scale,
    sigmoid,
    sub,
    sum_all,
    tanh,
    transpose,
    weighted_sum_rows,
)

__all__ = [
    "Adam",
    "AdamState",
    "BatchNormState",
    "CheckpointError",
    "NonFiniteError",
    "Tape",
    "Tensor",
    "add",
    "batch_norm",
    "concat_cols",
    "concat_rows",
    "cross_entropy",
    "dropout",
    "linear",
    "linear2",
    "load_checkpoint",
    "matmul",
    "mean_rows",
    "mul",
    "one_minus",
    "relu",
    "row_slice",
    "row_softmax",
    "save_checkpoint",
    "scale",
    "sigmoid",
    "sub",
    "sum_all",
    "tanh",
    "transpose",
    "weighted_sum_rows",
]
