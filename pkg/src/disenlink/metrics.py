"""AUC and embedding correlation analysis."""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata


def auc(pos_scores, neg_scores) -> float:
    """Probability that a random positive outscores a random negative, ties worth 1/2.

    Computed from average ranks (Mann-Whitney U).
    """
    pos = np.asarray(pos_scores, dtype=np.float64).ravel()
    neg = np.asarray(neg_scores, dtype=np.float64).ravel()
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("auc needs at least one positive and one negative score")
    ranks = rankdata(np.concatenate([pos, neg]), method="average")
    n_pos, n_neg = len(pos), len(neg)
    u = ranks[:n_pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def correlation_matrix(h) -> np.ndarray:
    """Absolute Pearson correlation between embedding columns.

    ``h`` is N x (K*d) (or N x K x d, flattened here). Columns with zero
    variance correlate as 0 with everything, including themselves.
    """
    h = np.asarray(h, dtype=np.float64)
    if h.ndim == 3:
        h = h.reshape(h.shape[0], -1)
    if h.shape[0] < 2:
        raise ValueError("correlation needs at least 2 rows")
    c = h - h.mean(axis=0)
    norms = np.sqrt((c * c).sum(axis=0))
    live = norms > 1e-12 * max(1.0, float(np.abs(h).max()))
    scale = np.where(live, norms, 1.0)
    corr = np.abs((c.T @ c) / np.outer(scale, scale))
    corr[~live, :] = 0.0
    corr[:, ~live] = 0.0
    np.clip(corr, 0.0, 1.0, out=corr)
    idx = np.flatnonzero(live)
    corr[idx, idx] = 1.0
    return corr


def block_correlation_ratio(corr: np.ndarray, K: int) -> tuple[float, float, float]:
    """Mean off-diagonal |corr| inside factor blocks vs. across blocks.

    Returns ``(within, across, within / across)``. The diagonal is excluded.
    """
    D = corr.shape[0]
    if D % K:
        raise ValueError(f"{D} columns do not split into {K} blocks")
    block = np.arange(D) // (D // K)
    same = block[:, None] == block[None, :]
    off_diag = ~np.eye(D, dtype=bool)
    within = corr[same & off_diag].mean() if K < D else float("nan")
    across = corr[~same].mean() if K > 1 else float("nan")
    return float(within), float(across), float(within / across) if across > 0 else float("inf")
