"""End-to-end experiment runners behind the command-line interface.

Every runner is deterministic for a fixed RunConfig: deduplication happens
before the stratified split, transforms and models are fitted on the train
partition only, and wall-clock timings live in dedicated columns so the
remaining output is reproducible byte for byte.
"""

from __future__ import annotations

import csv
import json
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import (
    byte_means_by_category,
    class_distribution,
    correlation_matrix,
    payload_sum_histogram,
    top_ids,
)
from .dataset import (
    RecordTable,
    deduplicate,
    duplicate_report,
    impute_missing,
    merge_tables,
    normalize_labels,
    read_dataset_dir,
    stratified_split,
)
from .ensemble import (
    WEIGHTS_UNIFORM,
    default_member_specs,
    ensemble_predict,
    train_ensemble,
)
from .errors import ConfigError
from .features import (
    FeatureMatrix,
    FittedTransform,
    anova_f_scores,
    fit_lda,
    fit_pca,
    fit_scaler,
    select_k_best,
    transform,
)
from .metrics import EvalReport, classification_report
from .models import ClassifierSpec, fit
from .models.base import CNN1D, FOREST, KNN, LOGREG, MLP, SVM_RBF, TREE
from .synth import SynthConfig, generate_synthetic, write_synthetic_dataset

ORIGINAL = "ORIGINAL"
PCA_SET = "PCA"
LDA_SET = "LDA"
ANOVA_SET = "ANOVA"
FEATURE_SETS = (ORIGINAL, ANOVA_SET, LDA_SET, PCA_SET)

MODEL_FAMILY_FOR_NAME = {
    "logreg": (LOGREG, {}),
    "tree": (TREE, {"criterion": "gini"}),
    "tree_entropy": (TREE, {"criterion": "entropy"}),
    "forest": (FOREST, {}),
    "knn": (KNN, {}),
    "svm_rbf": (SVM_RBF, {}),
    "mlp": (MLP, {}),
    "cnn1d": (CNN1D, {}),
}
#: Families evaluated only on the ORIGINAL feature set in the benchmark.
NEURAL_MODEL_NAMES = frozenset({"mlp", "cnn1d"})

DEFAULT_MODELS = ("tree", "logreg", "forest", "mlp", "cnn1d")


@dataclass(frozen=True)
class RunConfig:
    """One experiment: input source, seed, protocol knobs, output directory."""

    data_dir: Path | None = None
    synth_config: SynthConfig | None = None
    seed: int = 0
    test_fraction: float = 0.30
    feature_sets: tuple[str, ...] = FEATURE_SETS
    model_names: tuple[str, ...] = DEFAULT_MODELS
    out_dir: Path = Path("canguard_out")
    weights_mode: str = WEIGHTS_UNIFORM
    variance_target: float = 0.95
    k_best: int = 5
    top_k_ids: int = 20
    histogram_bins: int = 40

    def __post_init__(self) -> None:
        if not self.feature_sets:
            raise ConfigError("at least one feature set is required")
        if not self.model_names:
            raise ConfigError("at least one model is required")
        for fs in self.feature_sets:
            if fs not in FEATURE_SETS:
                raise ConfigError(f"unknown feature set {fs!r}; expected {FEATURE_SETS}")
        for name in self.model_names:
            if name not in MODEL_FAMILY_FOR_NAME:
                raise ConfigError(
                    f"unknown model {name!r}; expected one of "
                    f"{sorted(MODEL_FAMILY_FOR_NAME)}"
                )
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("test_fraction must lie in (0, 1)")


def model_spec(name: str, seed: int) -> ClassifierSpec:
    family, params = MODEL_FAMILY_FOR_NAME[name]
    return ClassifierSpec(family, params, seed=seed)


def _cell_seed(seed: int, feature_set: str, model_name: str) -> int:
    return (seed + zlib.crc32(f"{feature_set}/{model_name}".encode())) % 2**31


def load_table(config: RunConfig) -> RecordTable:
    """Read and clean the input: parse, merge, normalize labels, impute."""
    if config.data_dir is not None:
        tables = read_dataset_dir(config.data_dir)
        table = merge_tables(tables)
    elif config.synth_config is not None:
        table = generate_synthetic(config.synth_config, config.seed)
    else:
        raise ConfigError("either a data directory or a synth config is required")
    return impute_missing(normalize_labels(table))


def write_csv(path: Path, rows: list[list], seed: int) -> None:
    """CSV with a one-line provenance header recording the run seed."""
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(f"# seed={seed}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerows(rows)


def write_json(path: Path, doc: dict, seed: int) -> None:
    doc = {"seed": seed, **doc}
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


# -- stats -------------------------------------------------------------------


def run_stats(config: RunConfig) -> dict[str, Path]:
    """Write the exploratory statistics as CSV plus JSON artifacts."""
    table = load_table(config)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = config.seed

    artifacts = {}
    results = {
        "category_distribution": class_distribution(table, "category"),
        "specific_class_distribution": class_distribution(table, "specific_class"),
        "top_ids": top_ids(table, config.top_k_ids),
        "byte_means": byte_means_by_category(table),
        "payload_sum_histogram": payload_sum_histogram(table, config.histogram_bins),
        "correlation_matrix": correlation_matrix(table),
        "duplicate_report": duplicate_report(table),
    }
    for name, result in results.items():
        csv_path = out / f"{name}.csv"
        json_path = out / f"{name}.json"
        write_csv(csv_path, result.to_csv_rows(), seed)
        write_json(json_path, result.to_json_dict(), seed)
        artifacts[f"{name}.csv"] = csv_path
        artifacts[f"{name}.json"] = json_path
    return artifacts


# -- benchmark ---------------------------------------------------------------


@dataclass(frozen=True)
class FeaturePipeline:
    """Train-fitted scaler plus the optional reducer for one feature set."""

    name: str
    scaler: FittedTransform
    reducer: FittedTransform | None

    def apply(self, fm: FeatureMatrix) -> FeatureMatrix:
        scaled = transform(self.scaler, fm)
        if self.reducer is None:
            return scaled
        return transform(self.reducer, scaled)


def fit_feature_pipeline(name: str, train_fm: FeatureMatrix,
                         variance_target: float, k_best: int) -> FeaturePipeline:
    """Fit scaler then reducer on the training partition only."""
    scaler = fit_scaler(train_fm)
    scaled = transform(scaler, train_fm)
    if name == ORIGINAL:
        reducer = None
    elif name == PCA_SET:
        reducer = fit_pca(scaled, variance_target)
    elif name == LDA_SET:
        reducer = fit_lda(scaled)
    elif name == ANOVA_SET:
        reducer = select_k_best(anova_f_scores(scaled), k_best)
    else:
        raise ConfigError(f"unknown feature set {name!r}")
    return FeaturePipeline(name=name, scaler=scaler, reducer=reducer)


@dataclass(frozen=True)
class BenchmarkCell:
    feature_set: str
    model_name: str
    report: EvalReport

    @property
    def accuracy(self) -> float:
        return self.report.accuracy

    @property
    def f1_macro(self) -> float:
        return self.report.macro_f1


@dataclass(frozen=True)
class BenchmarkResult:
    cells: tuple[BenchmarkCell, ...]
    pipelines: dict[str, FeaturePipeline] = field(repr=False)
    train: RecordTable = field(repr=False)
    test: RecordTable = field(repr=False)

    def cell(self, feature_set: str, model_name: str) -> BenchmarkCell:
        for c in self.cells:
            if c.feature_set == feature_set and c.model_name == model_name:
                return c
        raise KeyError((feature_set, model_name))


def benchmark_table(table: RecordTable, config: RunConfig) -> BenchmarkResult:
    """Dedup, split, then evaluate every (feature set x model) cell."""
    unique = deduplicate(table)
    split = stratified_split(unique, config.test_fraction, config.seed)
    train_fm = FeatureMatrix.from_table(split.train)
    test_fm = FeatureMatrix.from_table(split.test)
    classes = sorted(set(train_fm.labels.tolist()) | set(test_fm.labels.tolist()))

    pipelines: dict[str, FeaturePipeline] = {}
    cells: list[BenchmarkCell] = []
    for fs in config.feature_sets:
        pipeline = fit_feature_pipeline(
            fs, train_fm, config.variance_target, config.k_best
        )
        pipelines[fs] = pipeline
        X_train = pipeline.apply(train_fm)
        X_test = pipeline.apply(test_fm)
        for name in config.model_names:
            if name in NEURAL_MODEL_NAMES and fs != ORIGINAL:
                continue
            spec = model_spec(name, _cell_seed(config.seed, fs, name))
            model = fit(spec, X_train.X, train_fm.labels)
            start = time.perf_counter()
            predictions = model.predict(X_test.X)
            predict_seconds = time.perf_counter() - start
            report = classification_report(
                test_fm.labels, predictions, classes,
                train_seconds=model.train_seconds,
                predict_seconds=predict_seconds,
            )
            cells.append(BenchmarkCell(fs, name, report))
    return BenchmarkResult(
        cells=tuple(cells), pipelines=pipelines,
        train=split.train, test=split.test,
    )


def run_benchmark(config: RunConfig) -> BenchmarkResult:
    """Benchmark the configured input and write the comparison artifacts."""
    table = load_table(config)
    result = benchmark_table(table, config)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows = [["feature_set", "model", "accuracy", "f1_macro",
             "train_s", "predict_s"]]
    comparison = [["feature_set", "model", "accuracy", "f1_macro"]]
    for cell in result.cells:
        rows.append([
            cell.feature_set, cell.model_name,
            f"{cell.accuracy:.6f}", f"{cell.f1_macro:.6f}",
            f"{cell.report.train_seconds:.6f}",
            f"{cell.report.predict_seconds:.6f}",
        ])
        comparison.append([
            cell.feature_set, cell.model_name,
            f"{cell.accuracy:.6f}", f"{cell.f1_macro:.6f}",
        ])
    write_csv(out / "benchmark.csv", rows, config.seed)
    write_csv(out / "comparison.csv", comparison, config.seed)
    write_json(out / "benchmark.json", {
        "kind": "benchmark",
        "test_fraction": config.test_fraction,
        "cells": [
            {
                "feature_set": c.feature_set,
                "model": c.model_name,
                "accuracy": c.accuracy,
                "f1_macro": c.f1_macro,
                "report": c.report.to_json_dict(),
            }
            for c in result.cells
        ],
    }, config.seed)
    return result


# -- ensemble ----------------------------------------------------------------


@dataclass(frozen=True)
class EnsembleRunResult:
    report: EvalReport
    hard_report: EvalReport
    soft_report: EvalReport
    disagreements: int
    weights_mode: str
    classes: tuple[str, ...]


def ensemble_table(table: RecordTable, config: RunConfig) -> EnsembleRunResult:
    """Train the five-member pool on ORIGINAL features and vote on the test set."""
    unique = deduplicate(table)
    split = stratified_split(unique, config.test_fraction, config.seed)
    train_fm = FeatureMatrix.from_table(split.train)
    test_fm = FeatureMatrix.from_table(split.test)
    scaler = fit_scaler(train_fm)
    X_train = transform(scaler, train_fm)
    X_test = transform(scaler, test_fm)
    classes = sorted(set(train_fm.labels.tolist()) | set(test_fm.labels.tolist()))

    ensemble = train_ensemble(
        X_train.X, train_fm.labels,
        seed=config.seed,
        specs=default_member_specs(config.seed),
        weights_mode=config.weights_mode,
    )
    votes = ensemble_predict(ensemble, X_test.X)
    return EnsembleRunResult(
        report=classification_report(test_fm.labels, votes.hybrid, classes),
        hard_report=classification_report(test_fm.labels, votes.hard, classes),
        soft_report=classification_report(test_fm.labels, votes.soft, classes),
        disagreements=votes.disagreements,
        weights_mode=votes.weights_mode,
        classes=tuple(classes),
    )


def run_ensemble(config: RunConfig) -> EnsembleRunResult:
    table = load_table(config)
    result = ensemble_table(table, config)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    write_json(out / "ensemble.json", {
        "kind": "ensemble",
        "weights_mode": result.weights_mode,
        "disagreements": result.disagreements,
        "hard": {"accuracy": result.hard_report.accuracy,
                 "f1_macro": result.hard_report.macro_f1},
        "soft": {"accuracy": result.soft_report.accuracy,
                 "f1_macro": result.soft_report.macro_f1},
        "hybrid": result.report.to_json_dict(),
    }, config.seed)
    rows = [["method", "accuracy", "f1_macro"]]
    for name, rep in (("hard", result.hard_report),
                      ("soft", result.soft_report),
                      ("hybrid", result.report)):
        rows.append([name, f"{rep.accuracy:.6f}", f"{rep.macro_f1:.6f}"])
    write_csv(out / "ensemble.csv", rows, config.seed)
    (out / "ensemble_report.txt").write_text(
        result.report.to_text() + "\n", encoding="utf-8"
    )
    return result


# -- synth -------------------------------------------------------------------


def run_synth(config: RunConfig) -> list[Path]:
    """Write a synthetic dataset in the six canonical files."""
    synth = config.synth_config
    if synth is None:
        raise ConfigError("synth requires a synth config")
    return write_synthetic_dataset(synth, config.seed, config.out_dir)
