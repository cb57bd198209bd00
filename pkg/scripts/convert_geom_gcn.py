"""Convert a geom-gcn style dataset (Texas, Wisconsin, Chameleon, ...) to the plain-text layout.

Input directory holds ``out1_node_feature_label.txt`` (``node_id<TAB>f1,f2,...<TAB>label``
with a header line) and ``out1_graph_edges.txt`` (``src<TAB>dst`` with a header line).
Output is ``edges.txt``, ``features.txt`` and ``labels.txt``.

    python scripts/convert_geom_gcn.py raw/texas data/texas
"""

import argparse
import logging
from pathlib import Path

import numpy as np

from disenlink.graph import AttributedGraph, edge_homophily, save_graph


def read_geom_gcn(raw: Path) -> AttributedGraph:
    feats, labels = {}, {}
    with open(raw / "out1_node_feature_label.txt", encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            node, f, lab = line.rstrip("\n").split("\t")
            feats[int(node)] = np.array([float(x) for x in f.split(",")])
            labels[int(node)] = int(lab)
    n = len(feats)
    if sorted(feats) != list(range(n)):
        raise ValueError("node ids are not 0..N-1")
    x = np.stack([feats[i] for i in range(n)])
    y = np.array([labels[i] for i in range(n)])
    pairs = np.loadtxt(raw / "out1_graph_edges.txt", skiprows=1, dtype=np.int64).reshape(-1, 2)
    return AttributedGraph.from_edge_list(n, pairs, x, y)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("raw_dir", type=Path)
    ap.add_argument("out_dir", type=Path)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO)
    g = read_geom_gcn(args.raw_dir)
    save_graph(g, args.out_dir)
    st = g.load_stats
    print(f"{args.out_dir}: {g.num_nodes} nodes, {g.num_edges} undirected edges, {g.num_features} features, "
          f"homophily {edge_homophily(g):.2f} (dropped {st.self_loops} self-loops, {st.duplicates} duplicates)")


if __name__ == "__main__":
    main()
