#!/usr/bin/env python3
"""Turn raw text into a directed, weighted word co-occurrence network.

Every distinct word becomes a node; a sliding window over the token
stream adds one unit of edge weight per ordered co-occurrence, so edge
direction follows text order and weights count repetitions. A master
node linked to every word gives the document a global anchor.
"""

import json

import numpy as np

from mpad import build_cooccurrence_graph, graph_to_dict, renormalize, tokenize

TEXT = "The cat chased the mouse. The mouse hid, and the cat waited."

tokens = tokenize(TEXT)
print("text:   ", TEXT)
print("tokens: ", tokens)

order = {}
for tok in tokens:
    order.setdefault(tok, len(order))
indices = [order[tok] for tok in tokens]

graph = build_cooccurrence_graph(indices, window=2, directed=True, with_master=True)
labels = list(order) + ["(master)"]

print(f"\n{graph.n_nodes} nodes (one per distinct word, plus the master):")
print(" ", labels)

payload = graph_to_dict(graph, labels)
content_edges = [e for e in payload["edges"]
                 if graph.master_index not in (e[0], e[1])]
print(f"\n{len(content_edges)} co-occurrence edges (src -> dst, weight):")
for src, dst, weight in content_edges:
    print(f"  {labels[src]:>8} -> {labels[dst]:<8} {weight:g}")

print("\nRow-normalizing the adjacency turns incoming sums into averages;")
print("every row with any in-edge sums to exactly one:")
anorm = renormalize(graph)
for i, row_sum in enumerate(anorm.sum(axis=1)):
    print(f"  {labels[i]:>9}: row sum = {row_sum:.3f}, "
          f"in-degree = {graph.weights[i].sum():g}")

print("\nmachine-readable form (what `mpad build-graph` prints):")
print(json.dumps({k: payload[k] for k in ("directed", "master_index")}, indent=2))
print("repeated bigrams accumulate weight: 'the'->'cat' has weight",
      graph.weights[order["cat"], order["the"]])
