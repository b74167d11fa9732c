"""End-to-end channel-charting experiments.

``run_experiment`` goes scenario -> CSI -> features -> (per recipe)
constraints -> training -> metrics and writes every intermediate artifact
into one output directory::

    out/
      config.txt  manifest.json  positions.csv  csi.ccsi  features.csv
      summary.csv
      <recipe>/  constraints.csv  network.ccnn  chart.csv  history.csv
                 report.csv  report.txt
"""
from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io, metrics, nn
from .channel import add_noise, synthesize_csi
from .config import ExperimentConfig, config_hash, dump_config
from .constraints import ConstraintSet, build_anchor_constraints, build_trajectory_constraints
from .features import FeatureSet, extract_features
from .scenario import UePlacement, generate_placement
from .train import LossHistory, train_constrained_ae

log = logging.getLogger(__name__)


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class stage:
    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        log.info("stage %s", self.name)
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, f"{type(exc).__name__}: {exc}") from exc
        return False


@dataclass
class Dataset:
    placement: UePlacement
    csi: np.ndarray
    features: FeatureSet


@dataclass
class RecipeResult:
    recipe: str
    constraints: ConstraintSet
    network: nn.Network
    chart: np.ndarray  # (N, 2), meters for constrained recipes
    history: LossHistory
    report: metrics.MetricsReport
    secondary: metrics.MetricsReport  # against the other reference space
    seconds: float = 0.0  # wall time of constraints + training + evaluation; never written out

    @property
    def rows(self):
        other = "feature:" if self.report.reference == "true-positions" else "true:"
        return self.report.rows() + self.secondary.rows(prefix=other)


def generate_dataset(config: ExperimentConfig) -> Dataset:
    s = config.scenario
    with stage("generate"):
        placement = generate_placement(s)
    with stage("channel"):
        csi = synthesize_csi(
            placement,
            config.array,
            config.channel,
            bs_position=s.bs_position,
            area=(s.area_x_min, s.area_x_max, s.area_y_min, s.area_y_max),
        )
        csi = add_noise(csi, config.channel.snr_db, config.channel.seed)
    with stage("featurize"):
        feats = extract_features(csi, config.features.scaling_mode)
    return Dataset(placement, csi, feats)


def build_constraints(config: ExperimentConfig, placement: UePlacement, recipe: str) -> ConstraintSet:
    """Constraints in representation units, ``(xy - chart_origin) / chart_scale``."""
    c = config.constraints
    sets = []
    if recipe in ("fad", "fad_mrd"):
        sets.append(build_anchor_constraints(
            placement.anchor_indices, placement.positions, c.anchor_weight,
            origin=config.chart_origin, scale=config.chart_scale,
        ))
    if recipe == "fad_mrd":
        sets.append(build_trajectory_constraints(
            placement.trajectory_indices, config.d_max / config.chart_scale, c.lag_max, c.trajectory_weight,
        ))
    return ConstraintSet.concat(*sets) if sets else ConstraintSet.empty()


def to_chart_units(config: ExperimentConfig, codes: np.ndarray) -> np.ndarray:
    """Representation units back to meters."""
    return np.asarray(codes) * config.chart_scale + np.asarray(config.chart_origin)


def evaluate_chart(config: ExperimentConfig, dataset: Dataset, chart: np.ndarray):
    true_xy = dataset.placement.positions[:, :2]
    refs = {"true-positions": true_xy, "feature-space": dataset.features.entries}
    primary = config.metrics.reference
    other = "feature-space" if primary == "true-positions" else "true-positions"
    ks = None if config.metrics.ks is None else list(config.metrics.ks)
    return (
        metrics.evaluate(refs[primary], chart, ks, reference_tag=primary),
        metrics.evaluate(refs[other], chart, ks, reference_tag=other),
    )


def train_recipe(config: ExperimentConfig, dataset: Dataset, recipe: str) -> RecipeResult:
    started = time.perf_counter()
    with stage(f"constraints:{recipe}"):
        cons = build_constraints(config, dataset.placement, recipe)
    with stage(f"train:{recipe}"):
        widths = nn.autoencoder_widths(dataset.features.dim, config.network.hidden, config.network.code_dim)
        net = nn.init_network(widths, config.network.activation, config.network.seed)
        net, codes, history = train_constrained_ae(dataset.features, cons, net, config.train)
        chart = to_chart_units(config, codes)
    with stage(f"evaluate:{recipe}"):
        report, secondary = evaluate_chart(config, dataset, chart)
    return RecipeResult(recipe, cons, net, chart, history, report, secondary, time.perf_counter() - started)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_dataset(out: Path, dataset: Dataset, h: str) -> list[str]:
    io.write_positions(out / "positions.csv", dataset.placement, h)
    io.write_csi(out / "csi.ccsi", dataset.csi)
    io.write_features(out / "features.csv", dataset.features.entries, h)
    return ["positions.csv", "csi.ccsi", "features.csv"]


def write_recipe(out: Path, config: ExperimentConfig, dataset: Dataset, result: RecipeResult, h: str) -> list[str]:
    rdir = out / result.recipe
    rdir.mkdir(parents=True, exist_ok=True)
    io.write_constraints(rdir / "constraints.csv", result.constraints, h)
    io.save_network(rdir / "network.ccnn", result.network)
    io.export_chart(rdir / "chart.csv", result.chart, dataset.placement, h)
    hist = result.history
    io.write_csv(
        rdir / "history.csv",
        ["epoch", "reconstruction", "penalty"],
        ([e, repr(r), repr(p)] for e, r, p in zip(hist.epoch, hist.reconstruction, hist.penalty)),
        h,
    )
    io.write_report(rdir / "report.csv", result.rows, h)
    (rdir / "report.txt").write_text(_report_text(config, result, h) + "\n")
    names = ["constraints.csv", "network.ccnn", "chart.csv", "history.csv", "report.csv", "report.txt"]
    return [f"{result.recipe}/{n}" for n in names]


def _report_text(config: ExperimentConfig, result: RecipeResult, h: str) -> str:
    t = config.train
    counts = result.constraints.counts()
    lines = [
        f"config_hash = {h}",
        f"recipe = {result.recipe}",
        f"channel_mode = {config.channel.mode}",
        f"feature_scaling = {config.features.scaling_mode}",
        f"lambda_fad = {t.lambda_fad!r}",
        f"lambda_mrd = {t.lambda_mrd!r}",
        f"constraint_batch_size = {t.constraint_batch_size}",
        f"num_fad = {counts['FAD']}",
        f"num_mrd = {counts['MRD']}",
        f"d_max_m = {config.d_max!r}",
        f"lag_max = {config.constraints.lag_max}",
        f"reconstruction_initial = {result.history.reconstruction[0]!r}",
        f"reconstruction_final = {result.history.reconstruction[-1]!r}",
        result.report.text(),
        result.secondary.text(),
    ]
    return "\n".join(lines)


def write_manifest(out: Path, h: str, files: list[str]) -> None:
    manifest = {"config_hash": h, "files": {name: _sha256(out / name) for name in sorted(files)}}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def verify_run(out) -> None:
    """Raise ``StageError`` if any artifact is missing, altered, or carries another config hash."""
    out = Path(out)
    manifest = json.loads((out / "manifest.json").read_text())
    h = manifest["config_hash"]
    for name, digest in manifest["files"].items():
        path = out / name
        if not path.exists():
            raise StageError("verify", f"missing artifact {name}")
        if _sha256(path) != digest:
            raise StageError("verify", f"artifact {name} does not match the manifest")
        if name.endswith(".csv"):
            _, _, file_hash = io.read_csv(path)
            if file_hash != h:
                raise StageError("verify", f"{name} has config hash {file_hash}, run has {h}")


def run_experiment(config: ExperimentConfig, out) -> dict[str, RecipeResult]:
    """Full pipeline for every configured recipe; returns results by recipe."""
    with stage("config"):
        config.validate()
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
    h = config_hash(config)
    (out / "config.txt").write_text(dump_config(config) + "\n")
    dataset = generate_dataset(config)
    with stage("write"):
        files = ["config.txt", *write_dataset(out, dataset, h)]

    results = {}
    summary = []
    for recipe in config.constraints.recipes:
        result = train_recipe(config, dataset, recipe)
        results[recipe] = result
        with stage(f"write:{recipe}"):
            files += write_recipe(out, config, dataset, result, h)
        summary += [[recipe, m, k, repr(float(v))] for m, k, v in result.rows]
        log.info("%s: KS %.4f", recipe, result.report.ks)

    with stage("write"):
        io.write_csv(out / "summary.csv", ["recipe", "metric", "K", "value"], summary, h)
        files.append("summary.csv")
        write_manifest(out, h, files)
    return results
