"""Command-line entry point: generate, run, ablate, metrics, plot."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from .config import ABLATIONS, PipelineConfig, load_config
from .ingest import PriorKnowledge, load_csv, segment, standardize
from .metrics import MetricsReport, evaluate
from .pipeline import PipelineError, discover_windows, mean_threshold_baseline, run_pipeline
from .synth import SCENARIOS, generate

logger = logging.getLogger("causaldetect")


def _read_vector(path: str) -> List[float]:
    """JSON array, or numbers separated by whitespace or commas."""
    text = Path(path).read_text().strip()
    if text.startswith("["):
        return [float(v) for v in json.loads(text)]
    return [float(v) for v in text.replace(",", " ").split()]


def _load_prior(path: Optional[str]) -> PriorKnowledge:
    if path is None:
        raise SystemExit("a prior-knowledge file is required (--prior)")
    data = json.loads(Path(path).read_text())
    # a ground-truth file from `generate` nests the prior
    return PriorKnowledge.from_dict(data.get("prior", data))


def _load_stream(csv_path: str, config: PipelineConfig):
    ing = config.ingest
    raw = load_csv(csv_path, label_column=ing.label_column, sample_period=ing.sample_period)
    if raw.labels is None:
        raise SystemExit(f"{csv_path} has no '{ing.label_column}' column; evaluation needs labels")
    if ing.standardize:
        raw = standardize(raw)
    return segment(raw, ing.samples_per_window())


def cmd_generate(args) -> int:
    factory = SCENARIOS[args.scenario]
    spec, n_windows, k = factory(args.seed)
    if args.windows is not None:
        n_windows = args.windows
    if args.window_length is not None:
        k = args.window_length
    sc = generate(spec, n_windows, k)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sc.save(out / "data.csv", out / "truth.json")
    print(json.dumps({"csv": str(out / "data.csv"), "truth": str(out / "truth.json"),
                      "rows": int(sc.values.shape[0]), "windows": n_windows}))
    return 0


def cmd_run(args) -> int:
    config = load_config(args.config) if args.config else PipelineConfig()
    stream = _load_stream(args.csv, config)
    prior = _load_prior(args.prior)
    result = run_pipeline(stream, prior, config)
    result.save(args.out)
    print(result.report.to_json(indent=1))
    return 0


def cmd_ablate(args) -> int:
    config = load_config(args.config) if args.config else PipelineConfig()
    stream = _load_stream(args.csv, config)
    prior = _load_prior(args.prior)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = {}
    lagged = None
    for name in args.settings or ABLATIONS:
        cfg = config.ablate(name)
        # discovery only depends on the lag switch, so lagged graphs are shared
        graphs = None
        if cfg.use_lags:
            if lagged is None:
                lagged = discover_windows(stream, cfg)
            graphs = lagged
        result = run_pipeline(stream, prior, cfg, graphs=graphs)
        result.save(out / name)
        table[name] = result.report.to_dict()
    preds = mean_threshold_baseline(stream, train_fraction=config.train_fraction)
    n_train = len(stream) - len(result.test_windows)
    table["mean_threshold"] = evaluate(preds[n_train:], stream.labels[n_train:]).to_dict()
    (out / "ablation.json").write_text(json.dumps(table, indent=1))
    for name, rep in table.items():
        f1 = rep["point_adjusted_f1"]
        print(f"{name:16s} F1_PA={'n/a' if f1 is None else f'{f1:.4f}'}")
    return 0


def cmd_metrics(args) -> int:
    preds = [int(v) for v in _read_vector(args.preds)]
    labels = [int(v) for v in _read_vector(args.labels)]
    scores = _read_vector(args.scores) if args.scores else None
    if len(preds) != len(labels) or (scores is not None and len(scores) != len(labels)):
        raise SystemExit("preds, labels and scores must have equal length")
    text = evaluate(preds, labels, scores).to_json(indent=1)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return 0


def cmd_plot(args) -> int:
    from .plotting import plot_report

    report = MetricsReport.from_dict(json.loads(Path(args.report).read_text()))
    paths = plot_report(report, args.out)
    for p in paths:
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="causaldetect", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log trigger events and stage progress")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthesise a labelled scenario as CSV plus ground truth")
    g.add_argument("--scenario", choices=sorted(SCENARIOS), default="default")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--windows", type=int, help="override the scenario's window count")
    g.add_argument("--window-length", type=int, help="override samples per window")
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_generate)

    for name, func, text in (("run", cmd_run, "run the full pipeline and write a report"),
                             ("ablate", cmd_ablate, "run every ablation setting and the mean-threshold baseline")):
        r = sub.add_parser(name, help=text)
        r.add_argument("--config", help="key-value config file")
        r.add_argument("--csv", required=True, help="input CSV with a label column")
        r.add_argument("--prior", required=True, help="prior knowledge JSON (or a ground-truth file)")
        r.add_argument("--out", required=True, help="output directory")
        if name == "ablate":
            r.add_argument("--settings", nargs="*", choices=ABLATIONS)
        r.set_defaults(func=func)

    m = sub.add_parser("metrics", help="score window predictions against labels")
    m.add_argument("--preds", required=True)
    m.add_argument("--labels", required=True)
    m.add_argument("--scores")
    m.add_argument("--out")
    m.set_defaults(func=cmd_metrics)

    pl = sub.add_parser("plot", help="ROC, PR and score-timeline images from a report")
    pl.add_argument("--report", required=True)
    pl.add_argument("--out", required=True, help="output directory")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
