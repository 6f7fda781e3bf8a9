"""Word co-occurrence networks and sentence-level graphs.

A document graph has one node per distinct token, in first-occurrence
order. Edge weights count co-occurrences inside a sliding window over
the token stream (the window crosses sentence boundaries): for every
window instantiation, each ordered pair (earlier u, later w) adds one
unit of weight to the edge u -> w. ``weights[i, j]`` stores the weight
of the edge j -> i, so row i holds the weights incoming on node i.

An optional master node, appended last, is linked to every other node
with unit-weight edges in both directions; its row/column never carry
co-occurrence counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

MASTER_NODE_ID = -1
MASTER_NODE_LABEL = "⊙"  # circled dot, used in serialized graphs


@dataclass
class DocumentGraph:
    """Directed weighted co-occurrence network.

    ``weights`` is (n, n) with zero diagonal; entry (i, j) is the weight
    of the edge j -> i. ``node_ids`` holds the vocabulary index of each
    node (``MASTER_NODE_ID`` for the master node).
    """

    node_ids: list[int]
    weights: np.ndarray
    directed: bool
    master_index: int | None

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)


def build_cooccurrence_graph(token_indices: Sequence[int], window: int = 2,
                             directed: bool = True,
                             with_master: bool = True) -> DocumentGraph:
    """Tally ordered co-occurrence pairs inside every sliding window.

    Window instantiations start at positions 0..L-window; a stream
    shorter than the window is one single window. Pairs of identical
    tokens are skipped (one node per distinct token, zero diagonal).
    With ``directed=False`` each pair increments both directions.
    """
    if window < 2:
        raise ValueError(f"window must be >= 2, got {window}")
    tokens = list(token_indices)
    if not tokens:
        raise ValueError("cannot build a graph from an empty token sequence")

    order: dict[int, int] = {}
    for tok in tokens:
        order.setdefault(tok, len(order))
    n_content = len(order)
    n = n_content + (1 if with_master else 0)
    weights = np.zeros((n, n), dtype=np.float64)

    length = len(tokens)
    for start in range(max(length - window + 1, 1)):
        span = tokens[start: start + window]
        for p in range(len(span)):
            u = order[span[p]]
            for q in range(p + 1, len(span)):
                w = order[span[q]]
                if u == w:
                    continue
                weights[w, u] += 1.0
                if not directed:
                    weights[u, w] += 1.0

    master_index = None
    if with_master:
        master_index = n - 1
        weights[master_index, :n_content] = 1.0
        weights[:n_content, master_index] = 1.0

    node_ids = list(order)
    if with_master:
        node_ids.append(MASTER_NODE_ID)
    return DocumentGraph(node_ids=node_ids, weights=weights,
                         directed=directed, master_index=master_index)


def renormalize(graph: DocumentGraph, enabled: bool = True) -> np.ndarray:
    """Divide each row of the weight matrix by its in-degree.

    Rows with zero in-degree stay all-zero (an isolated node receives no
    message). With ``enabled=False`` the raw weights are returned, which
    turns the neighborhood average back into a weighted sum.
    """
    weights = graph.weights
    if not enabled:
        return weights.copy()
    in_degree = weights.sum(axis=1, keepdims=True)
    return np.divide(weights, in_degree, out=np.zeros_like(weights),
                     where=in_degree > 0)


def clique_graph(k: int) -> DocumentGraph:
    """Complete graph over k sentence nodes, unit weights, no master node."""
    if k < 1:
        raise ValueError(f"clique graph needs k >= 1, got {k}")
    weights = np.ones((k, k), dtype=np.float64) - np.eye(k)
    return DocumentGraph(node_ids=list(range(k)), weights=weights,
                         directed=False, master_index=None)


def path_graph(k: int) -> DocumentGraph:
    """Directed path i -> i+1 over k sentence nodes, no master node."""
    if k < 1:
        raise ValueError(f"path graph needs k >= 1, got {k}")
    weights = np.zeros((k, k), dtype=np.float64)
    for i in range(k - 1):
        weights[i + 1, i] = 1.0
    return DocumentGraph(node_ids=list(range(k)), weights=weights,
                         directed=True, master_index=None)


def graph_to_dict(graph: DocumentGraph, node_labels: Sequence[str]) -> dict:
    """JSON-ready view: node labels plus (src, dst, weight) edge triples."""
    if len(node_labels) != graph.n_nodes:
        raise ValueError(
            f"{len(node_labels)} labels for a graph of {graph.n_nodes} nodes")
    edges = []
    rows, cols = np.nonzero(graph.weights)
    for dst, src in zip(rows.tolist(), cols.tolist()):
        edges.append([int(src), int(dst), float(graph.weights[dst, src])])
    edges.sort()
    return {
        "nodes": list(node_labels),
        "directed": graph.directed,
        "master_index": graph.master_index,
        "edges": edges,
    }


def graph_to_edgelist(graph: DocumentGraph, node_labels: Sequence[str]) -> str:
    """One ``src dst weight`` line per edge, using the node labels."""
    payload = graph_to_dict(graph, node_labels)
    lines = []
    for src, dst, weight in payload["edges"]:
        lines.append(f"{node_labels[src]} {node_labels[dst]} {weight:g}")
    return "\n".join(lines) + ("\n" if lines else "")
