"""Command-line surface wiring the pipeline end to end.

Commands: crawl, filter, featurize, evaluate, compare, ablate, rank, report.
Every command is deterministic given the config file and seed; machine-
readable outputs carry no timestamps (run metadata goes to a side file under
``meta/``).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import gerrit
from .config import RunConfig, load_run_config
from .errors import ConfigError, ReviewTimeError
from .evaluation import EvalResult, run_online_validation
from .features import DIMENSIONS, FeatureMatrix, featurize
from .importance import dimension_ablation, loco_all
from .stats import compare_pairwise

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2


def _write_meta(out_dir: Path, command: str, started: float, extra: dict | None = None):
    meta_dir = out_dir / "meta"
    meta_dir.mkdir(parents=True, exist_ok=True)
    doc = {
        "command": command,
        "started_at": datetime.now(timezone.utc).isoformat(),
        "duration_seconds": round(time.time() - started, 3),
    }
    doc.update(extra or {})
    (meta_dir / f"{command}.json").write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _load_features(path: str | Path) -> FeatureMatrix:
    return FeatureMatrix.from_csv(path)


def cmd_crawl(config: RunConfig, args) -> int:
    if config.crawl is None:
        raise ConfigError("config has no crawl section")
    out = Path(args.out or config.out_dir)
    started = time.time()
    manifest = gerrit.crawl_project(config.crawl, out / "changes.jsonl",
                                    jobs=args.jobs)
    _write_meta(out, "crawl", started, {"count": manifest.count})
    print(f"crawled {manifest.count} changes -> {out / 'changes.jsonl'}")
    return EXIT_OK


def cmd_filter(config: RunConfig, args) -> int:
    out = Path(args.out or config.out_dir)
    started = time.time()
    records, manifest = ds.read_dataset(args.input)
    bot_accounts = config.crawl.bot_accounts if config.crawl \
        else gerrit.DEFAULT_BOT_ACCOUNTS
    kept, report = ds.apply_filters(records, config.filter_policy, bot_accounts)
    kept = ds.sort_by_creation(kept)
    out.mkdir(parents=True, exist_ok=True)
    ds.write_dataset(kept, out / "filtered.jsonl", project=manifest.project,
                     query=manifest.crawl_query, filter_policy=config.filter_policy,
                     segments_from_diff=manifest.segments_from_diff)
    report_doc = asdict(report)
    (out / "filter_report.json").write_text(
        json.dumps(report_doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    _write_meta(out, "filter", started)
    print(f"kept {report.kept} of {report.total} records "
          f"(incomplete {report.dropped_incomplete}, reopened {report.dropped_reopened}, "
          f"self {report.dropped_self}, short {report.dropped_short}, "
          f"long {report.dropped_long}) -> {out / 'filtered.jsonl'}")
    return EXIT_OK


def cmd_featurize(config: RunConfig, args) -> int:
    out = Path(args.out or config.out_dir)
    started = time.time()
    records, _ = ds.read_dataset(args.input)
    if args.history:
        history, _ = ds.read_dataset(args.history)
    else:
        history = records
    matrix = featurize(records, history=history, window_days=config.window_days,
                       policy=config.keywords)
    matrix.to_csv(out / "features.csv")
    _write_meta(out, "featurize", started, {"rows": len(matrix)})
    print(f"extracted {len(matrix)} x {len(matrix.feature_names)} feature rows "
          f"-> {out / 'features.csv'}")
    return EXIT_OK


def cmd_evaluate(config: RunConfig, args) -> int:
    if not config.pipelines:
        raise ConfigError("config has no evaluation.pipelines")
    out = Path(args.out or config.out_dir)
    started = time.time()
    data = _load_features(args.features)
    summaries = {}
    for pipeline in config.pipelines:
        result = run_online_validation(data, pipeline)
        name = pipeline.algorithm.value
        result.to_csv(out / f"eval_{name}.csv")
        summaries[name] = result.summary()
        print(f"{name}: mae mean {summaries[name]['mae']['mean']:.3f} "
              f"(median {summaries[name]['mae']['median']:.3f}), "
              f"sa mean {summaries[name]['sa']['mean']:.2f}")
    (out / "eval_summary.json").write_text(
        json.dumps(summaries, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    _write_meta(out, "evaluate", started)
    return EXIT_OK


def cmd_compare(config: RunConfig, args) -> int:
    out = Path(args.out or config.out_dir)
    started = time.time()
    samples = {}
    for path in args.results:
        result = EvalResult.from_csv(path)
        name = Path(path).stem.removeprefix("eval_")
        samples[name] = result.metric("mae")
    if len(samples) < 2:
        raise ReviewTimeError("compare needs at least two result files")
    comparisons = compare_pairwise(samples)
    out.mkdir(parents=True, exist_ok=True)
    _write_comparisons(out / "comparisons.csv", comparisons)
    lines = ["| pair | W | p | p(adj) | significant | delta | magnitude |",
             "|---|---|---|---|---|---|---|"]
    for c in comparisons:
        lines.append(f"| {c.left} vs {c.right} | {c.w_statistic:.1f} | "
                     f"{c.p_value:.3g} | {c.p_adjusted:.3g} | "
                     f"{'yes' if c.significant else 'no'} | {c.cliffs_d:.3f} | "
                     f"{c.magnitude} |")
    (out / "comparisons.md").write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_meta(out, "compare", started)
    print("\n".join(lines))
    return EXIT_OK


def _write_comparisons(path: Path, comparisons) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["left", "right", "w", "p_value", "p_adjusted",
                         "significant", "cliffs_d", "magnitude"])
        for c in comparisons:
            writer.writerow([c.left, c.right, repr(c.w_statistic), repr(c.p_value),
                             repr(c.p_adjusted), int(c.significant),
                             repr(c.cliffs_d), c.magnitude])


def cmd_ablate(config: RunConfig, args) -> int:
    if not config.pipelines:
        raise ConfigError("config has no evaluation.pipelines")
    out = Path(args.out or config.out_dir)
    started = time.time()
    data = _load_features(args.features)
    pipeline = config.pipelines[0]
    ablation = dimension_ablation(data, pipeline)
    out.mkdir(parents=True, exist_ok=True)
    for mode, result in ablation.results.items():
        result.to_csv(out / f"ablation_{mode}.csv")
    _write_comparisons(out / "ablation_comparisons.csv", ablation.comparisons)
    _write_meta(out, "ablate", started)
    for mode in ("all", *DIMENSIONS):
        summary = ablation.results[mode].summary()
        print(f"{mode}: mae mean {summary['mae']['mean']:.3f}")
    return EXIT_OK


def cmd_rank(config: RunConfig, args) -> int:
    if not config.pipelines:
        raise ConfigError("config has no evaluation.pipelines")
    out = Path(args.out or config.out_dir)
    started = time.time()
    data = _load_features(args.features)
    pipeline = config.pipelines[0]
    units = list(DIMENSIONS) if args.by == "dimension" else None
    importance = loco_all(data, pipeline, units=units, jobs=args.jobs)
    out.mkdir(parents=True, exist_ok=True)
    importance.to_csv(out / f"loco_{args.by}.csv")
    clusters_doc = [list(cluster) for cluster in importance.ranking.clusters]
    (out / f"loco_{args.by}_clusters.json").write_text(
        json.dumps(clusters_doc, indent=2) + "\n", encoding="utf-8")
    _write_meta(out, "rank", started)
    for rank, cluster in enumerate(importance.ranking.clusters, start=1):
        print(f"rank {rank}: {', '.join(cluster)}")
    return EXIT_OK


def cmd_report(config: RunConfig, args) -> int:
    run_dir = Path(args.run or args.out or config.out_dir)
    started = time.time()
    artifacts = sorted(
        p.relative_to(run_dir).as_posix()
        for p in run_dir.rglob("*")
        if p.is_file() and "meta" not in p.parts and p.name != "report.md"
    )
    lines = ["# Run report", "", "## Artifacts", ""]
    for artifact in artifacts:
        lines.append(f"- [{artifact}]({artifact})")
    summary_path = run_dir / "eval_summary.json"
    if summary_path.exists():
        lines += ["", "## Model summaries", ""]
        summaries = json.loads(summary_path.read_text(encoding="utf-8"))
        lines.append("| algorithm | MAE mean | MAE median | MRE mean | SA mean |")
        lines.append("|---|---|---|---|---|")
        for name in sorted(summaries):
            s = summaries[name]
            lines.append(
                f"| {name} | {s['mae']['mean']:.3f} | {s['mae']['median']:.3f} "
                f"| {s['mre']['mean']:.3f} | {s['sa']['mean']:.2f} |")
    (run_dir / "report.md").write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_meta(run_dir, "report", started, {"artifacts": len(artifacts)})
    print(f"report covering {len(artifacts)} artifacts -> {run_dir / 'report.md'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reviewtime",
        description="Predict code review completion time from review histories",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="run config JSON")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--jobs", type=int, default=1, help="worker parallelism")
        p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("crawl", help="fetch changes from the Gerrit server")
    common(p)
    p.set_defaults(func=cmd_crawl)

    p = sub.add_parser("filter", help="apply the training-data filters")
    common(p)
    p.add_argument("--in", dest="input", required=True, help="input dataset JSONL")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("featurize", help="extract the 50-feature matrix")
    common(p)
    p.add_argument("--in", dest="input", required=True, help="filtered dataset JSONL")
    p.add_argument("--history", default=None,
                   help="unfiltered dataset JSONL for experience features")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("evaluate", help="run online validation per algorithm")
    common(p)
    p.add_argument("--features", required=True, help="feature CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="pairwise statistical comparison of results")
    common(p)
    p.add_argument("results", nargs="+", help="eval result CSV files")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("ablate", help="all-features vs single-dimension study")
    common(p)
    p.add_argument("--features", required=True, help="feature CSV")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("rank", help="LOCO importance with ESD ranking")
    common(p)
    p.add_argument("--features", required=True, help="feature CSV")
    p.add_argument("--by", choices=["feature", "dimension"], default="feature")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("report", help="consolidated Markdown report for a run")
    common(p)
    p.add_argument("--run", default=None, help="run directory (defaults to --out)")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_run_config(args.config, seed_override=args.seed,
                                 out_override=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ReviewTimeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
