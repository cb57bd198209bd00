"""Evaluation, repeated runs, ablations, sensitivity sweeps and CSV exports."""

from __future__ import annotations

import csv
import logging
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .graph import AttributedGraph, EdgeSplit, split_edges
from .heuristics import HeuristicScorer
from .metrics import auc
from .model import Hyperparams
from .train import DisenLinkScorer, TrainResult, train

log = logging.getLogger(__name__)

CSV_FIELDS = ["dataset", "method", "variant", "seed", "K", "d", "tau", "beta", "M", "auc", "split", "wall_ms"]
HEURISTICS = ("cn", "aa")


@dataclass
class MetricsReport:
    dataset: str
    method: str
    variant: str
    seed: int
    auc: float
    split: str
    wall_ms: float
    hyperparams: dict = field(default_factory=dict)
    sizes: dict = field(default_factory=dict)

    def row(self) -> dict:
        hp = self.hyperparams
        return {
            "dataset": self.dataset,
            "method": self.method,
            "variant": self.variant,
            "seed": self.seed,
            "K": hp.get("K", ""),
            "d": hp.get("d", ""),
            "tau": hp.get("tau", ""),
            "beta": hp.get("beta", ""),
            "M": hp.get("M", ""),
            "auc": repr(float(self.auc)),
            "split": self.split,
            "wall_ms": f"{self.wall_ms:.3f}",
        }


@dataclass
class Summary:
    reports: list
    mean: float
    std: float
    label: str = ""
    axis_value: object = None

    def __str__(self):
        return f"{self.label} auc {100 * self.mean:.1f} +- {100 * self.std:.1f} (n={len(self.reports)})"


def _scores(scorer, pairs):
    # model scores are ranked on logits: identical ranking to probabilities, no saturation ties
    fn = getattr(scorer, "logits", scorer)
    return np.asarray(fn(pairs), dtype=np.float64)


def evaluate(scorer, split: EdgeSplit, which="test", *, dataset="", method="", variant="", seed=0,
             hyperparams=None, wall_ms=0.0) -> MetricsReport:
    """AUC of ``scorer`` on the positives and pre-sampled negatives of one split."""
    pos, neg = split.pairs(which)
    value = auc(_scores(scorer, pos), _scores(scorer, neg))
    return MetricsReport(
        dataset, method, variant, seed, value, which, wall_ms,
        hyperparams=dict(hyperparams or {}), sizes={"pos": len(pos), "neg": len(neg)},
    )


@dataclass
class RunOutput:
    report: MetricsReport
    split: EdgeSplit
    result: TrainResult | None = None
    scorer: object = None


def run_once(graph: AttributedGraph, hp: Hyperparams, seed: int, method="disenlink", dataset="",
             ratios=(0.85, 0.05, 0.10), neg_multiplier=5, which="test", timing=True, split=None) -> RunOutput:
    """One split + fit + evaluation. The seed drives both the split and the model."""
    start = time.perf_counter()
    if split is None:
        split = split_edges(graph, ratios, neg_multiplier, seed)
    train_graph = graph.with_edges(split.train_pos)
    if method == "disenlink":
        hp_run = replace(hp, seed=seed)
        result = train(graph, split, hp_run, timing=timing)
        scorer = DisenLinkScorer(result.state, train_graph)
        hp_dict, variant = hp_run.to_dict(), hp_run.variant
    elif method in HEURISTICS:
        result = None
        scorer = HeuristicScorer(train_graph, method)
        hp_dict, variant = {}, "-"
    else:
        raise ValueError(f"unknown method {method!r}")
    report = evaluate(scorer, split, which, dataset=dataset, method=method, variant=variant,
                      seed=seed, hyperparams=hp_dict)
    report.wall_ms = (time.perf_counter() - start) * 1000.0 if timing else 0.0
    return RunOutput(report, split, result, scorer)


def summarize(reports, label="", axis_value=None) -> Summary:
    vals = [r.auc for r in reports]
    std = statistics.stdev(vals) if len(vals) > 1 else 0.0
    return Summary(list(reports), float(np.mean(vals)), float(std), label, axis_value)


def _run_job(job):
    graph, hp, seed, method, kw = job
    return run_once(graph, hp, seed, method, **kw)


def run_many(jobs, workers=1) -> list:
    """Run ``(graph, hp, seed, method, kwargs)`` jobs, in parallel when ``workers > 1``.

    Every run is seeded on its own, so results do not depend on scheduling;
    they are returned in job order.
    """
    if workers <= 1 or len(jobs) <= 1:
        return [_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_job, jobs))


def _label(method, hp):
    return method if method != "disenlink" else f"disenlink/{hp.variant}"


def _grid(graph, points, n_seeds, method, base_seed, workers, on_run, kw) -> list:
    """Repeated runs for each ``(label, hp, axis_value)`` point; one Summary per point."""
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    jobs = []
    for _, hp, _ in points:
        base = hp.seed if base_seed is None else base_seed
        jobs += [(graph, hp, base + i, method, kw) for i in range(n_seeds)]
    outs = run_many(jobs, workers)
    summaries = []
    for j, (label, hp, value) in enumerate(points):
        chunk = outs[j * n_seeds:(j + 1) * n_seeds]
        for out in chunk:
            log.info("%s %s seed %d: auc %.4f", kw.get("dataset", ""), label, out.report.seed, out.report.auc)
            if on_run is not None:
                on_run(out)
        summaries.append(summarize([o.report for o in chunk], label, value))
    return summaries


def repeat_experiment(graph, hp: Hyperparams, n_seeds=5, method="disenlink", base_seed=None, dataset="",
                      ratios=(0.85, 0.05, 0.10), neg_multiplier=5, which="test", timing=True,
                      on_run=None, workers=1) -> Summary:
    """``n_seeds`` independent runs, each on a fresh split; sample mean and std of AUC."""
    kw = dict(dataset=dataset, ratios=ratios, neg_multiplier=neg_multiplier, which=which, timing=timing)
    return _grid(graph, [(_label(method, hp), hp, None)], n_seeds, method, base_seed, workers, on_run, kw)[0]


ABLATION_VARIANTS = ("full", "no-alpha", "no-selection", "vanilla-recon")


def ablation(graph, hp: Hyperparams, n_seeds=5, single_factor=False, base_seed=None, workers=1,
             on_run=None, **kw) -> list:
    """Repeated runs of every model variant (plus K=1 when ``single_factor``)."""
    points = [(v, replace(hp, variant=v), None) for v in ABLATION_VARIANTS]
    if single_factor:
        points.append(("single-factor", replace(hp, variant="full", K=1), None))
    return _grid(graph, points, n_seeds, "disenlink", base_seed, workers, on_run, kw)


def sweep(graph, hp: Hyperparams, axis: str, values, n_seeds=5, base_seed=None, workers=1,
          on_run=None, **kw) -> list:
    """One repeated experiment per grid point along ``K`` or ``beta``."""
    if axis not in ("K", "beta"):
        raise ValueError(f"sweep axis must be 'K' or 'beta', got {axis!r}")
    points = []
    for v in values:
        if axis == "K":
            point = replace(hp, K=int(v))
        else:
            point = replace(hp, beta=float(v), allow_zero_beta=True)
        points.append((f"{axis}={v}", point, v))
    return _grid(graph, points, n_seeds, "disenlink", base_seed, workers, on_run, kw)


def write_metrics_csv(reports, path, axis=None, axis_values=None) -> None:
    """Metrics rows with the mandatory header; sweeps prepend ``axis``/``axis_value`` columns."""
    fields = (["axis", "axis_value"] if axis else []) + CSV_FIELDS
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for i, r in enumerate(reports):
            row = r.row()
            if axis:
                row = {"axis": axis, "axis_value": axis_values[i], **row}
            w.writerow(row)


def read_metrics_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_correlation_csv(corr: np.ndarray, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index"] + [f"c{j}" for j in range(corr.shape[1])])
        for i, row in enumerate(corr):
            w.writerow([i] + [f"{x:.6f}" for x in row])
