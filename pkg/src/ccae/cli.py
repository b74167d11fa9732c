"""Command-line entry point: ``ccae {generate,featurize,train,evaluate,run}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import io, pipeline
from .config import RECIPES, ExperimentConfig, config_hash, dump_config, load_config
from .features import SCALING_MODES, extract_features
from .metrics import default_ks, evaluate
from .pipeline import StageError


def _config(path) -> ExperimentConfig:
    return load_config(path) if path else ExperimentConfig()


def cmd_generate(args) -> None:
    config = _config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    h = config_hash(config)
    (out / "config.txt").write_text(dump_config(config) + "\n")
    dataset = pipeline.generate_dataset(config)
    files = ["config.txt", *pipeline.write_dataset(out, dataset, h)]
    io.write_csi_csv(out / "csi.csv", dataset.csi, h)
    files.append("csi.csv")
    pipeline.write_manifest(out, h, files)


def cmd_featurize(args) -> None:
    with pipeline.stage("featurize"):
        csi = io.load_csi(args.csi)
        feats = extract_features(csi, args.scaling)
        io.write_features(args.out, feats.entries)


def cmd_train(args) -> None:
    config = _config(args.config)
    config.constraints.recipes = (args.recipe,)
    pipeline.run_experiment(config, args.out)


def cmd_evaluate(args) -> None:
    with pipeline.stage("evaluate"):
        chart, _, _, _, chart_hash = io.read_chart(args.chart)
        placement, _ = io.read_positions(args.positions)
        if len(chart) != placement.num_users:
            raise ValueError(f"chart has {len(chart)} rows, positions has {placement.num_users}")
        ks = [int(k) for k in args.k.replace(",", " ").split()] if args.k else default_ks(len(chart))
        report = evaluate(placement.positions[:, :2], chart, ks)
        io.write_report(args.out, report.rows(), chart_hash)
        print(report.text())


def cmd_run(args) -> None:
    config = _config(args.config)
    results = pipeline.run_experiment(config, args.out)
    for recipe, result in results.items():
        print(f"[{recipe}]")
        print(result.report.text())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccae", description="Channel charting with representation-constrained autoencoders")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="scenario positions and CSI")
    p.add_argument("--config", help="key = value config file (defaults if omitted)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("featurize", help="CSI file (binary or csv) to features.csv")
    p.add_argument("--csi", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scaling", choices=SCALING_MODES, default="unit_norm")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="full pipeline for a single recipe")
    p.add_argument("--config")
    p.add_argument("--recipe", choices=RECIPES, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="TW/CT/KS of a chart against true positions")
    p.add_argument("--chart", required=True)
    p.add_argument("--positions", required=True)
    p.add_argument("--k", help="comma-separated neighborhood sizes")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="full pipeline for all configured recipes")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        with pipeline.stage(args.command):
            args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: [{args.command}] {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
