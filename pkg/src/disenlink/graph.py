"""Attributed graphs: loading, validation, statistics, edge splits and negative sampling."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import (
    DimensionMismatchError,
    GraphFormatError,
    MissingLabelsError,
    NegativePoolExhaustedError,
)

log = logging.getLogger(__name__)

EDGES_FILE = "edges.txt"
FEATURES_FILE = "features.txt"
LABELS_FILE = "labels.txt"


@dataclass
class LoadStats:
    self_loops: int = 0
    duplicates: int = 0


@dataclass(eq=False)
class AttributedGraph:
    """Undirected simple graph with a dense N x F feature matrix.

    ``edges`` holds each undirected edge once as ``(u, v)`` with ``u < v``,
    sorted lexicographically. Neighbor lists are kept in CSR form
    (``indptr``/``indices``), sorted within each row.
    """

    num_nodes: int
    edges: np.ndarray
    features: np.ndarray
    labels: np.ndarray | None = None
    load_stats: LoadStats = field(default_factory=LoadStats)

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
        self._validate()
        n = self.num_nodes
        src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        order = np.lexsort((dst, src))
        self._src = src[order]
        self.indices = dst[order]
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(self._src, minlength=n), out=self.indptr[1:])
        # sorted keys s*N+t of every directed edge, for membership tests
        self._keys = self._src * n + self.indices

    def _validate(self):
        e = self.edges
        if self.features.ndim != 2 or self.features.shape[0] != self.num_nodes:
            raise ValueError(
                f"feature matrix must have {self.num_nodes} rows, got shape {self.features.shape}"
            )
        if self.labels is not None and self.labels.shape != (self.num_nodes,):
            raise ValueError(f"labels must have shape ({self.num_nodes},)")
        if len(e):
            if e.min() < 0 or e.max() >= self.num_nodes:
                raise ValueError("edge endpoint out of range")
            if np.any(e[:, 0] >= e[:, 1]):
                raise ValueError("edges must be canonical (u < v) with no self-loops")
            keys = e[:, 0] * self.num_nodes + e[:, 1]
            if np.any(np.diff(keys) <= 0):
                raise ValueError("edges must be sorted and free of duplicates")

    @classmethod
    def from_edge_list(cls, num_nodes, edge_list, features, labels=None):
        """Build a graph from arbitrary (possibly directed, duplicated) pairs."""
        edges, stats = canonicalize_edges(np.asarray(edge_list, dtype=np.int64).reshape(-1, 2), num_nodes)
        return cls(num_nodes, edges, features, labels, load_stats=stats)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    def neighbors(self, s: int) -> np.ndarray:
        return self.indices[self.indptr[s]:self.indptr[s + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def directed_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Both orientations of every edge, grouped by source (CSR order)."""
        return self._src, self.indices

    def has_edges(self, src, dst) -> np.ndarray:
        keys = np.asarray(src, dtype=np.int64) * self.num_nodes + np.asarray(dst, dtype=np.int64)
        if len(self._keys) == 0:
            return np.zeros(keys.shape, dtype=bool)
        pos = np.minimum(np.searchsorted(self._keys, keys), len(self._keys) - 1)
        return self._keys[pos] == keys

    def adjacency(self) -> sp.csr_matrix:
        n = self.num_nodes
        data = np.ones(len(self.indices), dtype=np.float64)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(n, n))

    def with_edges(self, edges) -> "AttributedGraph":
        """Same nodes/features/labels, different edge set (e.g. the training graph)."""
        edges, _ = canonicalize_edges(np.asarray(edges, dtype=np.int64).reshape(-1, 2), self.num_nodes)
        return AttributedGraph(self.num_nodes, edges, self.features, self.labels)


def canonicalize_edges(pairs: np.ndarray, num_nodes: int) -> tuple[np.ndarray, LoadStats]:
    """Symmetrize, drop self-loops and duplicates; return sorted ``u < v`` pairs."""
    loops = pairs[:, 0] == pairs[:, 1]
    pairs = pairs[~loops]
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    keys = np.unique(lo * num_nodes + hi)
    stats = LoadStats(self_loops=int(loops.sum()), duplicates=int(len(pairs) - len(keys)))
    edges = np.stack([keys // num_nodes, keys % num_nodes], axis=1) if len(keys) else np.zeros((0, 2), np.int64)
    return edges.astype(np.int64), stats


def _data_lines(path):
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield line_no, line


def _read_features(path) -> np.ndarray:
    rows = []
    width = None
    for line_no, line in _data_lines(path):
        try:
            row = [float(tok) for tok in line.split()]
        except ValueError:
            raise GraphFormatError(path, line_no, "non-numeric feature value") from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise GraphFormatError(path, line_no, f"expected {width} features, got {len(row)}")
        rows.append(row)
    if not rows:
        raise GraphFormatError(path, 0, "no feature rows")
    return np.asarray(rows, dtype=np.float64)


def _read_edges(path, num_nodes) -> np.ndarray:
    pairs = []
    for line_no, line in _data_lines(path):
        toks = line.split()
        if len(toks) != 2:
            raise GraphFormatError(path, line_no, f"expected 2 node ids, got {len(toks)} fields")
        try:
            u, v = int(toks[0]), int(toks[1])
        except ValueError:
            raise GraphFormatError(path, line_no, "node id is not an integer") from None
        if u < 0 or v < 0:
            raise GraphFormatError(path, line_no, "negative node id")
        if u >= num_nodes or v >= num_nodes:
            raise DimensionMismatchError(
                path, line_no, f"edge endpoint {max(u, v)} >= number of feature rows {num_nodes}"
            )
        pairs.append((u, v))
    return np.asarray(pairs, dtype=np.int64).reshape(-1, 2)


def _read_labels(path, num_nodes) -> np.ndarray:
    labels = []
    for line_no, line in _data_lines(path):
        try:
            labels.append(int(line))
        except ValueError:
            raise GraphFormatError(path, line_no, "label is not an integer") from None
    if len(labels) != num_nodes:
        raise DimensionMismatchError(path, len(labels), f"{len(labels)} labels for {num_nodes} nodes")
    return np.asarray(labels, dtype=np.int64)


def load_graph(edges_path, features_path, labels_path=None, normalize_features=False) -> AttributedGraph:
    """Read an attributed graph from the plain-text edge/feature/label files.

    Directed input is symmetrized; self-loops and duplicate edges are dropped
    and counted in ``graph.load_stats``.
    """
    features = _read_features(features_path)
    n = features.shape[0]
    pairs = _read_edges(edges_path, n)
    labels = _read_labels(labels_path, n) if labels_path is not None else None
    if normalize_features:
        norms = np.linalg.norm(features, axis=1, keepdims=True)
        features = features / np.where(norms > 0, norms, 1.0)
    graph = AttributedGraph.from_edge_list(n, pairs, features, labels)
    st = graph.load_stats
    if st.self_loops or st.duplicates:
        log.info("%s: dropped %d self-loops and %d duplicate edges", edges_path, st.self_loops, st.duplicates)
    return graph


def load_dataset(directory, normalize_features=False) -> AttributedGraph:
    """Load ``edges.txt``/``features.txt``/optional ``labels.txt`` from a directory."""
    d = Path(directory)
    labels = d / LABELS_FILE
    return load_graph(
        d / EDGES_FILE,
        d / FEATURES_FILE,
        labels if labels.exists() else None,
        normalize_features=normalize_features,
    )


def save_graph(graph: AttributedGraph, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    np.savetxt(d / EDGES_FILE, graph.edges, fmt="%d")
    np.savetxt(d / FEATURES_FILE, graph.features, fmt="%.17g")
    if graph.labels is not None:
        np.savetxt(d / LABELS_FILE, graph.labels, fmt="%d")
    return d


def edge_homophily(graph: AttributedGraph) -> float:
    """Fraction of edges whose endpoints share a label."""
    if graph.labels is None:
        raise MissingLabelsError("edge homophily needs node labels")
    if graph.num_edges == 0:
        return 0.0
    lab = graph.labels
    same = lab[graph.edges[:, 0]] == lab[graph.edges[:, 1]]
    return float(same.mean())


@dataclass(eq=False)
class EdgeSplit:
    train_pos: np.ndarray
    valid_pos: np.ndarray
    test_pos: np.ndarray
    valid_neg: np.ndarray
    test_neg: np.ndarray
    seed: int = 0
    ratios: tuple[float, float, float] = (0.85, 0.05, 0.10)

    SECTIONS = ("train_pos", "valid_pos", "valid_neg", "test_pos", "test_neg")

    def pairs(self, which: str) -> tuple[np.ndarray, np.ndarray]:
        if which not in ("valid", "test"):
            raise ValueError(f"unknown split {which!r}")
        return getattr(self, f"{which}_pos"), getattr(self, f"{which}_neg")

    def __eq__(self, other):
        if not isinstance(other, EdgeSplit):
            return NotImplemented
        return all(np.array_equal(getattr(self, s), getattr(other, s)) for s in self.SECTIONS)


def _sorted_pairs(pairs: np.ndarray, n: int) -> np.ndarray:
    if len(pairs) == 0:
        return pairs.reshape(0, 2)
    keys = pairs[:, 0] * n + pairs[:, 1]
    return pairs[np.argsort(keys, kind="stable")]


def _sample_non_edges(graph: AttributedGraph, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` distinct uniform non-edges (u < v), in draw order."""
    n = graph.num_nodes
    pool = n * (n - 1) // 2 - graph.num_edges
    if count > pool:
        raise NegativePoolExhaustedError(
            f"need {count} negative pairs but only {pool} non-edges exist"
        )
    if count == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if 2 * count > pool:
        # dense regime: enumerate the whole pool
        iu, ju = np.triu_indices(n, k=1)
        keep = ~graph.has_edges(iu, ju)
        cand = np.stack([iu[keep], ju[keep]], axis=1)
        return cand[rng.choice(len(cand), size=count, replace=False)]
    chosen = np.zeros(0, dtype=np.int64)
    while len(chosen) < count:
        m = 2 * (count - len(chosen)) + 16
        u = rng.integers(0, n, size=m)
        v = rng.integers(0, n, size=m)
        ok = u != v
        u, v = u[ok], v[ok]
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        free = ~graph.has_edges(lo, hi)
        lo, hi = lo[free], hi[free]
        keys = np.concatenate([chosen, lo * n + hi])
        _, first = np.unique(keys, return_index=True)
        chosen = keys[np.sort(first)][:count]
    return np.stack([chosen // n, chosen % n], axis=1)


def split_edges(graph: AttributedGraph, ratios=(0.85, 0.05, 0.10), neg_multiplier=5, seed=0) -> EdgeSplit:
    """Random train/valid/test partition of the edges plus evaluation negatives.

    Validation and test sizes are floored; the rounding remainder goes to
    training. Negatives are uniform non-edges of the full graph, distinct,
    and disjoint between validation and test.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or min(ratios) <= 0 or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must be three positive fractions summing to 1, got {ratios}")
    if neg_multiplier < 1:
        raise ValueError("neg_multiplier must be >= 1")
    rng = np.random.default_rng(seed)
    n_edges = graph.num_edges
    n_valid = int(math.floor(ratios[1] * n_edges + 1e-9))
    n_test = int(math.floor(ratios[2] * n_edges + 1e-9))
    perm = rng.permutation(n_edges)
    e = graph.edges[perm]
    valid, test, train = e[:n_valid], e[n_valid:n_valid + n_test], e[n_valid + n_test:]
    negs = _sample_non_edges(graph, neg_multiplier * (n_valid + n_test), rng)
    cut = neg_multiplier * n_valid
    n = graph.num_nodes
    return EdgeSplit(
        train_pos=_sorted_pairs(train, n),
        valid_pos=_sorted_pairs(valid, n),
        test_pos=_sorted_pairs(test, n),
        valid_neg=_sorted_pairs(negs[:cut], n),
        test_neg=_sorted_pairs(negs[cut:], n),
        seed=seed,
        ratios=ratios,
    )


def sample_training_negatives(graph: AttributedGraph, positives, M: int, seed: int, epoch: int = 0) -> np.ndarray:
    """For each positive ``(s, t)`` draw ``M`` targets ``m`` with ``A[s, m] = 0`` and ``m != s``.

    Returns an int array of shape ``(P, M)``. Rows whose source is adjacent
    to every other node cannot be corrupted; they are filled with ``-1``
    and a warning is emitted.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    positives = np.asarray(positives, dtype=np.int64).reshape(-1, 2)
    n = graph.num_nodes
    rng = np.random.default_rng([seed, epoch])
    src = positives[:, 0]
    out = np.full((len(positives), M), -1, dtype=np.int64)
    full = graph.degrees()[src] >= n - 1
    if full.any():
        warnings.warn(
            f"{int(full.sum())} positives skipped: source adjacent to all other nodes",
            RuntimeWarning,
            stacklevel=2,
        )
    rows = np.flatnonzero(~full)
    s = np.repeat(src[rows], M)
    m = rng.integers(0, n - 1, size=len(s))
    m += m >= s
    bad = np.flatnonzero(graph.has_edges(s, m))
    while len(bad):
        redraw = rng.integers(0, n - 1, size=len(bad))
        redraw += redraw >= s[bad]
        m[bad] = redraw
        bad = bad[graph.has_edges(s[bad], redraw)]
    out[rows] = m.reshape(-1, M)
    return out


def write_split(split: EdgeSplit, path) -> None:
    lines = [
        "# disenlink edge split",
        f"# seed {split.seed}",
        "# ratios " + " ".join(repr(r) for r in split.ratios),
    ]
    for name in EdgeSplit.SECTIONS:
        lines.append(f"[{name}]")
        lines.extend(f"{u} {v}" for u, v in getattr(split, name).tolist())
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_split(path) -> EdgeSplit:
    sections: dict[str, list] = {}
    current = None
    seed, ratios = 0, (0.85, 0.05, 0.10)
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                toks = line[1:].split()
                if toks[:1] == ["seed"] and len(toks) == 2:
                    seed = int(toks[1])
                elif toks[:1] == ["ratios"] and len(toks) == 4:
                    ratios = tuple(float(t) for t in toks[1:])
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1]
                if current not in EdgeSplit.SECTIONS:
                    raise GraphFormatError(path, line_no, f"unknown section {current!r}")
                sections[current] = []
                continue
            if current is None:
                raise GraphFormatError(path, line_no, "edge outside of a section")
            toks = line.split()
            try:
                sections[current].append((int(toks[0]), int(toks[1])))
            except (ValueError, IndexError):
                raise GraphFormatError(path, line_no, "expected two integers") from None
    missing = [s for s in EdgeSplit.SECTIONS if s not in sections]
    if missing:
        raise GraphFormatError(path, 0, f"missing sections {missing}")
    arrays = {k: np.asarray(v, dtype=np.int64).reshape(-1, 2) for k, v in sections.items()}
    return EdgeSplit(seed=seed, ratios=ratios, **arrays)
