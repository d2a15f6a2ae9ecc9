#!/usr/bin/env python3
"""Convert a Planetoid citation dataset (ind.<name>.* pickles) into the
directory layout read by `graphden`: edges.tsv, features.tsv, labels.tsv and
split.json, using the standard public split (20 labeled nodes per class for
training, the next 500 for validation, the 1000 listed test nodes).

    python3 scripts/planetoid_to_tsv.py --raw planetoid/data --name cora --out data/cora
"""
import argparse
import json
import pickle
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def load_part(raw: Path, name: str, part: str):
    with open(raw / f"ind.{name}.{part}", "rb") as fh:
        return pickle.load(fh, encoding="latin1")


def convert(raw: Path, name: str, out: Path) -> None:
    x, y, tx, ty, allx, ally, graph = (load_part(raw, name, p) for p in ("x", "y", "tx", "ty", "allx", "ally", "graph"))
    test_index = [int(line) for line in (raw / f"ind.{name}.test.index").read_text().split()]
    test_sorted = sorted(test_index)

    if name == "citeseer":
        # some test ids are missing from the graph; pad them as unlabeled rows
        full = range(test_sorted[0], test_sorted[-1] + 1)
        tx_ext = sp.lil_matrix((len(full), tx.shape[1]))
        tx_ext[np.array(test_sorted) - test_sorted[0], :] = tx
        tx = tx_ext
        ty_ext = np.zeros((len(full), y.shape[1]))
        ty_ext[np.array(test_sorted) - test_sorted[0], :] = ty
        ty = ty_ext

    features = sp.vstack((allx, tx)).tolil()
    features[test_index, :] = features[test_sorted, :]
    onehot = np.vstack((ally, ty))
    onehot[test_index, :] = onehot[test_sorted, :]
    labels = np.where(onehot.sum(1) > 0, onehot.argmax(1), -1)
    n = features.shape[0]

    edges = set()
    for u, nbrs in graph.items():
        for v in nbrs:
            if u != v and u < n and v < n:
                edges.add((min(u, v), max(u, v)))

    out.mkdir(parents=True, exist_ok=True)
    with open(out / "edges.tsv", "w") as fh:
        for u, v in sorted(edges):
            fh.write(f"{u}\t{v}\n")
    dense = features.toarray()
    with open(out / "features.tsv", "w") as fh:
        for row in dense:
            fh.write("\t".join("1" if v == 1 else repr(float(v)) for v in row) + "\n")
    with open(out / "labels.tsv", "w") as fh:
        fh.write("\n".join(str(int(l)) for l in labels) + "\n")
    split = {
        "train": list(range(len(y))),
        "val": list(range(len(y), len(y) + 500)),
        "test": [i for i in test_sorted if labels[i] >= 0],
    }
    (out / "split.json").write_text(json.dumps(split))
    print(f"{name}: {n} nodes, {len(edges)} edges, {dense.shape[1]} features, "
          f"{labels.max() + 1} classes, split {len(split['train'])}/{len(split['val'])}/{len(split['test'])}",
          file=sys.stderr)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--raw", type=Path, required=True, help="directory holding ind.<name>.* files")
    ap.add_argument("--name", default="cora")
    ap.add_argument("--out", type=Path, required=True)
    args = ap.parse_args()
    convert(args.raw, args.name, args.out)


if __name__ == "__main__":
    main()
