#!/usr/bin/env python3
"""Convert a Facebook100 .mat file (e.g. Rice31.mat) into edges.txt / labels.txt.

    python3 fb100.py --mat Rice31.mat --out data/rice31

Labels come from one column of local_info (default 4, the residence). Nodes
with a missing value (0) are dropped and the largest connected component of
the rest is kept.
"""

import argparse
import sys
from pathlib import Path

import networkx as nx
import numpy as np
import scipy.io


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--mat", type=Path, required=True)
    ap.add_argument("--out", type=Path, required=True)
    ap.add_argument("--column", type=int, default=4, help="local_info column used as the label")
    args = ap.parse_args()

    mat = scipy.io.loadmat(args.mat)
    A = mat["A"].tocoo()
    attr = np.asarray(mat["local_info"])[:, args.column].astype(int)

    g = nx.Graph()
    g.add_nodes_from(np.flatnonzero(attr != 0).tolist())
    g.add_edges_from((int(u), int(v)) for u, v in zip(A.row, A.col)
                     if u != v and attr[u] != 0 and attr[v] != 0)
    nodes = sorted(max(nx.connected_components(g), key=len))
    new_id = {u: i for i, u in enumerate(nodes)}
    classes = {c: k for k, c in enumerate(sorted(set(attr[nodes].tolist())))}

    args.out.mkdir(parents=True, exist_ok=True)
    edges = sorted((min(new_id[u], new_id[v]), max(new_id[u], new_id[v]))
                   for u, v in g.subgraph(nodes).edges())
    with open(args.out / "edges.txt", "w") as f:
        for a, b in edges:
            f.write(f"{a} {b}\n")
    with open(args.out / "labels.txt", "w") as f:
        for u in nodes:
            f.write(f"{new_id[u]} {classes[int(attr[u])]}\n")

    print(f"{args.mat.stem}: {len(nodes)} nodes, {len(edges)} edges, {len(classes)} classes",
          file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
