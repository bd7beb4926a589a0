#!/usr/bin/env python3
"""Convert Planetoid pickles (ind.<name>.*) into edges.txt / labels.txt / features.txt.

    python3 planetoid.py --raw path/to/planetoid/data --name cora --out data/cora

Nodes with no label (CiteSeer has a few isolated test ids) are dropped and the
remaining ids are compacted.
"""

import argparse
import pickle
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def load(raw: Path, name: str, key: str):
    with open(raw / f"ind.{name}.{key}", "rb") as f:
        return pickle.load(f, encoding="latin1")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--raw", type=Path, required=True)
    ap.add_argument("--name", required=True)
    ap.add_argument("--out", type=Path, required=True)
    ap.add_argument("--no-features", action="store_true")
    args = ap.parse_args()

    x, y, tx, ty, allx, ally, graph = (load(args.raw, args.name, k) for k in ("x", "y", "tx", "ty", "allx", "ally", "graph"))
    test_idx = [int(line) for line in open(args.raw / f"ind.{args.name}.test.index")]
    n = max(max(graph), max(test_idx)) + 1

    features = sp.lil_matrix((n, allx.shape[1]))
    labels = np.full(n, -1, dtype=int)
    train_rows = allx.shape[0]
    features[:train_rows] = allx
    labels[:train_rows] = np.asarray(ally).argmax(1)
    labeled = np.asarray(ty).sum(1) > 0
    for row, node in enumerate(test_idx):
        features[node] = tx[row]
        if labeled[row]:
            labels[node] = int(np.asarray(ty)[row].argmax())

    keep = np.flatnonzero(labels >= 0)
    new_id = -np.ones(n, dtype=int)
    new_id[keep] = np.arange(len(keep))

    edges = set()
    for u, nbrs in graph.items():
        for v in nbrs:
            a, b = new_id[u], new_id[v]
            if a >= 0 and b >= 0 and a != b:
                edges.add((min(a, b), max(a, b)))

    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "edges.txt", "w") as f:
        for a, b in sorted(edges):
            f.write(f"{a} {b}\n")
    with open(args.out / "labels.txt", "w") as f:
        for i, node in enumerate(keep):
            f.write(f"{i} {labels[node]}\n")
    if not args.no_features:
        feats = sp.csr_matrix(features)[keep]
        with open(args.out / "features.txt", "w") as f:
            for i in range(feats.shape[0]):
                row = feats.getrow(i)
                cells = " ".join(f"{j}:{v:g}" for j, v in zip(row.indices, row.data))
                f.write(f"{i} {cells}\n".rstrip() + "\n")

    print(f"{args.name}: {len(keep)} nodes, {len(edges)} edges, {labels[keep].max() + 1} classes, "
          f"{n - len(keep)} unlabeled nodes dropped", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
