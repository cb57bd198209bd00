"""Command-line entry point: ``disenlink <subcommand> ...``.

Hyperparameter precedence is flags > ``--config`` JSON file > defaults.
Failures exit non-zero with a single ``error: <category>: <message>`` line
on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path


from . import __version__
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import ConfigError, DisenLinkError
from .experiments import (
    HEURISTICS,
    ablation,
    evaluate,
    repeat_experiment,
    run_once,
    sweep,
    write_correlation_csv,
    write_metrics_csv,
)
from .graph import edge_homophily, load_dataset, read_split, split_edges, write_split
from .metrics import block_correlation_ratio, correlation_matrix
from .model import VARIANTS, Hyperparams
from .train import DisenLinkScorer, write_trace_csv

log = logging.getLogger("disenlink")

# flag name -> Hyperparams field
HP_FLAGS = {
    "factors": "K",
    "dim": "d",
    "hidden": "hidden",
    "tau": "tau",
    "beta": "beta",
    "neg_m": "M",
    "epochs": "max_epochs",
    "seed": "seed",
    "variant": "variant",
    "lr": "lr",
    "weight_decay": "weight_decay",
    "patience": "patience",
    "eval_every": "eval_every",
}
RUN_KEYS = ("ratios", "neg_multiplier", "seeds", "normalize_features")


def _add_hp_flags(p):
    g = p.add_argument_group("hyperparameters")
    g.add_argument("--factors", type=int, help="number of latent factors K (default 5)")
    g.add_argument("--dim", type=int, help="per-factor embedding width d (default 32)")
    g.add_argument("--hidden", type=int, help="MLP hidden width (default 2*d)")
    g.add_argument("--tau", type=float, help="temperature (default 1.0)")
    g.add_argument("--beta", type=float, help="teleport weight (default 0.5)")
    g.add_argument("--neg-m", type=int, help="training negatives per positive M (default 5)")
    g.add_argument("--epochs", type=int, help="max epochs (default 2000)")
    g.add_argument("--seed", type=int, help="base seed (default 0)")
    g.add_argument("--variant", choices=VARIANTS, help="model variant (default full)")
    g.add_argument("--lr", type=float, help="learning rate (default 1e-3)")
    g.add_argument("--weight-decay", type=float, help="L2 weight decay (default 5e-4)")
    g.add_argument("--patience", type=int, help="early-stopping patience in evaluations (default 20)")
    g.add_argument("--eval-every", type=int, help="epochs between validation checks (default 10)")


def _add_data_flags(p, dataset_required=True):
    p.add_argument("--dataset-dir", required=dataset_required, help="directory with edges.txt/features.txt[/labels.txt]")
    p.add_argument("--config", help="JSON object of defaults (hyperparameter and run fields)")
    p.add_argument("--normalize-features", action="store_true", default=None, help="row L2-normalize features")


def _add_run_flags(p):
    p.add_argument("--out-dir", default="runs", help="output directory (created if absent)")
    p.add_argument("--seeds", type=int, help="number of repetitions, one fresh split each (default 5)")
    p.add_argument("--ratios", type=float, nargs=3, metavar=("TRAIN", "VALID", "TEST"))
    p.add_argument("--neg-multiplier", type=int, help="evaluation negatives per positive (default 5)")
    p.add_argument("--no-timing", action="store_true", help="write 0 for wall-clock columns (byte-reproducible output)")
    p.add_argument("--workers", type=int, default=1, help="parallel processes for independent runs (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="disenlink", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one model, write checkpoint, trace and metrics")
    _add_data_flags(p); _add_run_flags(p); _add_hp_flags(p)
    p.add_argument("--split-file", help="replay a saved split instead of drawing one")

    p = sub.add_parser("eval", help="evaluate a checkpoint on a split")
    _add_data_flags(p); _add_run_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split-file", required=True)
    p.add_argument("--which", choices=("valid", "test"), default="test")

    p = sub.add_parser("baseline", help="common-neighbor and Adamic-Adar baselines")
    _add_data_flags(p); _add_run_flags(p); _add_hp_flags(p)

    p = sub.add_parser("ablate", help="all model variants on one dataset")
    _add_data_flags(p); _add_run_flags(p); _add_hp_flags(p)
    p.add_argument("--single-factor", action="store_true", help="also run K=1")

    p = sub.add_parser("sweep", help="sensitivity sweep over K or beta")
    _add_data_flags(p); _add_run_flags(p); _add_hp_flags(p)
    p.add_argument("--axis", choices=("K", "beta"), required=True)
    p.add_argument("--values", type=float, nargs="+", help="grid (default K=1..10 or beta=0,0.1,..,1)")

    p = sub.add_parser("homophily", help="print the edge homophily ratio")
    _add_data_flags(p)

    p = sub.add_parser("corr", help="export |correlation| of learnt embeddings")
    _add_data_flags(p); _add_run_flags(p); _add_hp_flags(p)
    p.add_argument("--checkpoint", help="use a trained checkpoint instead of training")
    p.add_argument("--split-file", help="split whose training edges drive aggregation")

    p = sub.add_parser("split", help="draw and save an edge split")
    _add_data_flags(p); _add_run_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="split file path (default <out-dir>/<dataset>_split_s<seed>.txt)")
    return parser


def resolve_config(args) -> tuple[Hyperparams, dict]:
    """Merge defaults, the JSON config file and explicit flags."""
    file_cfg = {}
    if getattr(args, "config", None):
        file_cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a flat JSON object")
    hp_names = {f.name for f in fields(Hyperparams)}
    hp_kwargs = {}
    run = {"ratios": [0.85, 0.05, 0.10], "neg_multiplier": 5, "seeds": 5, "normalize_features": False}
    for key, value in file_cfg.items():
        field = HP_FLAGS.get(key, key)
        if field in hp_names:
            hp_kwargs[field] = value
        elif key in RUN_KEYS:
            run[key] = value
        else:
            raise ConfigError(f"unknown config key {key!r}")
    for flag, field in HP_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            hp_kwargs[field] = value
    for key in RUN_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            run[key] = value
    return Hyperparams(**hp_kwargs), run


def _dataset(args, run):
    graph = load_dataset(args.dataset_dir, normalize_features=bool(run["normalize_features"]))
    return graph, Path(args.dataset_dir).resolve().name


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _snapshot(out: Path, name: str, args, hp: Hyperparams, run: dict, **extra):
    doc = {
        "version": __version__,
        "command": args.command,
        "dataset_dir": str(args.dataset_dir),
        "hyperparams": hp.to_dict(),
        "run": run,
        **extra,
    }
    (out / f"{name}.config.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _print_summaries(summaries):
    for s in summaries:
        print(s)


def cmd_train(args):
    hp, run = resolve_config(args)
    graph, name = _dataset(args, run)
    out = _out_dir(args)
    timing = not args.no_timing
    split = read_split(args.split_file) if args.split_file else None
    res = run_once(graph, hp, hp.seed, "disenlink", name, run["ratios"], run["neg_multiplier"],
                   timing=timing, split=split)
    stem = f"{name}_disenlink_{hp.variant}_s{hp.seed}"
    split_path = out / f"{stem}.split.txt"
    write_split(res.split, split_path)
    save_checkpoint(res.result.state, out / f"{stem}.ckpt.json")
    write_trace_csv(res.result.trace, out / f"{stem}.trace.csv")
    valid = evaluate(res.scorer, res.split, "valid", dataset=name, method="disenlink", variant=hp.variant,
                     seed=hp.seed, hyperparams=hp.to_dict())
    write_metrics_csv([valid, res.report], out / f"{stem}.metrics.csv")
    _snapshot(out, stem, args, hp, run, split_file=split_path.name, best_epoch=res.result.best_epoch)
    print(f"{name} disenlink/{hp.variant} seed {hp.seed}: valid auc {valid.auc:.4f} test auc {res.report.auc:.4f}")


def cmd_eval(args):
    _, run = resolve_config(args)
    graph, name = _dataset(args, run)
    out = _out_dir(args)
    state = load_checkpoint(args.checkpoint)
    split = read_split(args.split_file)
    scorer = DisenLinkScorer(state, graph.with_edges(split.train_pos))
    hp = state.hp
    rep = evaluate(scorer, split, args.which, dataset=name, method="disenlink", variant=hp.variant,
                   seed=hp.seed, hyperparams=hp.to_dict())
    write_metrics_csv([rep], out / f"{name}_disenlink_{hp.variant}_s{hp.seed}.eval.csv")
    print(f"{name} {args.which} auc {rep.auc:.4f}")


def cmd_baseline(args):
    hp, run = resolve_config(args)
    graph, name = _dataset(args, run)
    out = _out_dir(args)
    reports, summaries = [], []
    for method in HEURISTICS:
        s = repeat_experiment(graph, hp, run["seeds"], method, dataset=name, ratios=run["ratios"],
                              neg_multiplier=run["neg_multiplier"], timing=not args.no_timing,
                              workers=args.workers)
        reports += s.reports
        summaries.append(s)
    write_metrics_csv(reports, out / f"{name}_baseline.metrics.csv")
    _snapshot(out, f"{name}_baseline", args, hp, run)
    _print_summaries(summaries)


def cmd_ablate(args):
    hp, run = resolve_config(args)
    graph, name = _dataset(args, run)
    out = _out_dir(args)
    summaries = ablation(graph, hp, run["seeds"], single_factor=args.single_factor, dataset=name,
                         ratios=run["ratios"], neg_multiplier=run["neg_multiplier"], timing=not args.no_timing,
                         workers=args.workers)
    reports = []
    for s in summaries:
        if s.label == "single-factor":
            for r in s.reports:
                r.variant = "single-factor"
        reports += s.reports
    write_metrics_csv(reports, out / f"{name}_ablation.metrics.csv")
    _snapshot(out, f"{name}_ablation", args, hp, run)
    _print_summaries(summaries)


def cmd_sweep(args):
    hp, run = resolve_config(args)
    graph, name = _dataset(args, run)
    out = _out_dir(args)
    if args.values:
        values = [int(v) for v in args.values] if args.axis == "K" else list(args.values)
    else:
        values = list(range(1, 11)) if args.axis == "K" else [round(0.1 * i, 1) for i in range(11)]
    summaries = sweep(graph, hp, args.axis, values, run["seeds"], dataset=name, ratios=run["ratios"],
                      neg_multiplier=run["neg_multiplier"], timing=not args.no_timing, workers=args.workers)
    reports, axis_values = [], []
    for s in summaries:
        reports += s.reports
        axis_values += [s.axis_value] * len(s.reports)
    write_metrics_csv(reports, out / f"{name}_sweep_{args.axis}.metrics.csv", axis=args.axis, axis_values=axis_values)
    _snapshot(out, f"{name}_sweep_{args.axis}", args, hp, run, values=values)
    _print_summaries(summaries)


def cmd_homophily(args):
    _, run = resolve_config(args)
    graph, _ = _dataset(args, run)
    print(f"{edge_homophily(graph):.2f}")


def cmd_corr(args):
    hp, run = resolve_config(args)
    graph, name = _dataset(args, run)
    out = _out_dir(args)
    if args.checkpoint:
        state = load_checkpoint(args.checkpoint)
        if not args.split_file:
            raise ConfigError("--checkpoint needs the --split-file it was trained on")
        split = read_split(args.split_file)
        scorer = DisenLinkScorer(state, graph.with_edges(split.train_pos))
        hp = state.hp
    else:
        split = read_split(args.split_file) if args.split_file else None
        res = run_once(graph, hp, hp.seed, "disenlink", name, run["ratios"], run["neg_multiplier"],
                       timing=not args.no_timing, split=split)
        scorer = res.scorer
    corr = correlation_matrix(scorer.h)
    stem = f"{name}_disenlink_{hp.variant}_s{hp.seed}"
    write_correlation_csv(corr, out / f"{stem}.corr.csv")
    within, across, ratio = block_correlation_ratio(corr, hp.K)
    _snapshot(out, f"{stem}.corr", args, hp, run)
    print(f"within-block |corr| {within:.4f} cross-block |corr| {across:.4f} ratio {ratio:.3f}")


def cmd_split(args):
    _, run = resolve_config(args)
    graph, name = _dataset(args, run)
    out = _out_dir(args)
    split = split_edges(graph, run["ratios"], run["neg_multiplier"], args.seed)
    path = Path(args.output) if args.output else out / f"{name}_split_s{args.seed}.txt"
    write_split(split, path)
    print(path)


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "baseline": cmd_baseline,
    "ablate": cmd_ablate,
    "sweep": cmd_sweep,
    "homophily": cmd_homophily,
    "corr": cmd_corr,
    "split": cmd_split,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except DisenLinkError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: io_error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: invalid_argument: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
