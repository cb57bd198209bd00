"""Convert Cora to the plain-text layout, from either the LINQS release or Planetoid files.

LINQS: ``cora.content`` (``id w_1 ... w_F label``) and ``cora.cites``
(``cited citing``). Planetoid: ``ind.cora.{x,tx,allx,y,ty,ally,graph,test.index}``.

    python scripts/convert_cora.py raw/cora data/cora
"""

import argparse
import pickle
from pathlib import Path

import numpy as np

from disenlink.graph import AttributedGraph, edge_homophily, save_graph


def read_linqs(raw: Path) -> AttributedGraph:
    ids, rows, names = [], [], []
    with open(raw / "cora.content", encoding="utf-8") as fh:
        for line in fh:
            toks = line.split()
            ids.append(toks[0])
            rows.append([float(t) for t in toks[1:-1]])
            names.append(toks[-1])
    index = {p: i for i, p in enumerate(ids)}
    classes = {c: i for i, c in enumerate(sorted(set(names)))}
    pairs = []
    with open(raw / "cora.cites", encoding="utf-8") as fh:
        for line in fh:
            a, b = line.split()
            if a in index and b in index:
                pairs.append((index[a], index[b]))
    y = np.array([classes[c] for c in names])
    return AttributedGraph.from_edge_list(len(ids), np.array(pairs), np.array(rows), y)


def _load(raw, name):
    with open(raw / f"ind.cora.{name}", "rb") as fh:
        return pickle.load(fh, encoding="latin1")


def read_planetoid(raw: Path) -> AttributedGraph:
    x, tx, allx = (_load(raw, k) for k in ("x", "tx", "allx"))
    y, ty, ally = (_load(raw, k) for k in ("y", "ty", "ally"))
    graph = _load(raw, "graph")
    test_idx = np.loadtxt(raw / "ind.cora.test.index", dtype=np.int64)
    feats = np.vstack([allx.toarray(), tx.toarray()])
    labels = np.vstack([ally, ty])
    # test rows are stored in sorted order; put them back at their node ids
    order = np.sort(test_idx)
    feats[test_idx] = feats[order]
    labels[test_idx] = labels[order]
    pairs = [(u, v) for u, nbrs in graph.items() for v in nbrs]
    return AttributedGraph.from_edge_list(len(feats), np.array(pairs), feats, labels.argmax(axis=1))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("raw_dir", type=Path)
    ap.add_argument("out_dir", type=Path)
    args = ap.parse_args()
    g = read_linqs(args.raw_dir) if (args.raw_dir / "cora.content").exists() else read_planetoid(args.raw_dir)
    save_graph(g, args.out_dir)
    print(f"{args.out_dir}: {g.num_nodes} nodes, {g.num_edges} undirected edges, {g.num_features} features, "
          f"homophily {edge_homophily(g):.2f}")


if __name__ == "__main__":
    main()
