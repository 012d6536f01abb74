"""Exploratory statistics over record tables.

Class distributions, arbitration-ID frequency ranking, per-category payload
byte means, payload-sum histograms, and the feature/attack-flag correlation
matrix. Every result exports as CSV rows and as a plot-ready JSON document;
nothing here renders figures.
"""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .dataset import RecordTable
from .errors import StatsError

PAYLOAD_SUM_RANGE = (0.0, 2040.0)  # 8 bytes x 255
FEATURE_NAMES = ("ID", "DATA_0", "DATA_1", "DATA_2", "DATA_3",
                 "DATA_4", "DATA_5", "DATA_6", "DATA_7")
CORRELATION_NAMES = FEATURE_NAMES + ("is_attack",)


@dataclass(frozen=True)
class DistributionRow:
    name: str
    count: int
    percentage: float


@dataclass(frozen=True)
class DistributionTable:
    """Per-class counts and percentages, sorted by descending count."""

    level: str
    rows: tuple[DistributionRow, ...]

    def to_json_dict(self) -> dict:
        return {
            "kind": "class_distribution",
            "level": self.level,
            "rows": [
                {"class": r.name, "count": r.count, "percentage": r.percentage}
                for r in self.rows
            ],
        }

    def to_csv_rows(self) -> list[list]:
        return [["class", "count", "percentage"]] + [
            [r.name, r.count, f"{r.percentage:.2f}"] for r in self.rows
        ]


@dataclass(frozen=True)
class TopIdsTable:
    """The k most frequent arbitration IDs with per-category counts."""

    categories: tuple[str, ...]
    rows: tuple[tuple[int, int, tuple[int, ...]], ...]  # (id, total, per-category)

    def to_json_dict(self) -> dict:
        return {
            "kind": "top_ids",
            "categories": list(self.categories),
            "rows": [
                {"id": i, "count": total,
                 "by_category": dict(zip(self.categories, per_cat))}
                for i, total, per_cat in self.rows
            ],
        }

    def to_csv_rows(self) -> list[list]:
        header = ["id", "count", *self.categories]
        return [header] + [[i, total, *per_cat] for i, total, per_cat in self.rows]


@dataclass(frozen=True)
class ByteMeansTable:
    """Mean payload byte value per category (rows) and byte position (cols)."""

    categories: tuple[str, ...]
    means: np.ndarray  # (n_categories, 8)

    def to_json_dict(self) -> dict:
        return {
            "kind": "byte_means_by_category",
            "byte_columns": list(FEATURE_NAMES[1:]),
            "rows": [
                {"category": c, "means": self.means[i].tolist()}
                for i, c in enumerate(self.categories)
            ],
        }

    def to_csv_rows(self) -> list[list]:
        header = ["category", *FEATURE_NAMES[1:]]
        return [header] + [
            [c, *(f"{v:.6f}" for v in self.means[i])]
            for i, c in enumerate(self.categories)
        ]


@dataclass(frozen=True)
class PayloadSumHistogram:
    """Per-category histogram of the payload byte sums over [0, 2040]."""

    categories: tuple[str, ...]
    edges: np.ndarray  # (bins + 1,)
    counts: np.ndarray  # (n_categories, bins)

    def to_json_dict(self) -> dict:
        return {
            "kind": "payload_sum_histogram",
            "edges": self.edges.tolist(),
            "rows": [
                {"category": c, "counts": self.counts[i].tolist()}
                for i, c in enumerate(self.categories)
            ],
        }

    def to_csv_rows(self) -> list[list]:
        header = ["bin_start", "bin_end", *self.categories]
        rows = []
        for b in range(self.counts.shape[1]):
            rows.append([
                f"{self.edges[b]:.2f}", f"{self.edges[b + 1]:.2f}",
                *(int(self.counts[i, b]) for i in range(len(self.categories))),
            ])
        return [header] + rows


@dataclass(frozen=True)
class CorrelationMatrix:
    """Pearson correlations over the 9 numeric features plus is_attack."""

    names: tuple[str, ...]
    matrix: np.ndarray
    constant_features: tuple[str, ...]

    def value(self, a: str, b: str) -> float:
        return float(self.matrix[self.names.index(a), self.names.index(b)])

    def to_json_dict(self) -> dict:
        return {
            "kind": "correlation_matrix",
            "names": list(self.names),
            "matrix": self.matrix.tolist(),
            "constant_features": list(self.constant_features),
        }

    def to_csv_rows(self) -> list[list]:
        header = ["feature", *self.names]
        return [header] + [
            [name, *(f"{v:.6f}" for v in self.matrix[i])]
            for i, name in enumerate(self.names)
        ]


def _categories_of(table: RecordTable) -> list[str]:
    cats = []
    for c in table.categories:
        if c is None:
            raise StatsError("table has missing category labels; normalize first")
        cats.append(c)
    return cats


def class_distribution(table: RecordTable, level: str) -> DistributionTable:
    """Counts and percentages per class at the 'category' or 'specific_class' level."""
    if level == "category":
        column = table.categories
    elif level == "specific_class":
        column = table.specific_classes
    else:
        raise ValueError(f"level must be 'category' or 'specific_class', got {level!r}")
    n = len(table)
    if n == 0:
        raise StatsError("cannot compute a class distribution of an empty table")
    counts = Counter(c for c in column if c is not None)
    if sum(counts.values()) != n:
        raise StatsError("table has missing labels; normalize and impute first")
    rows = tuple(
        DistributionRow(name=name, count=c, percentage=100.0 * c / n)
        for name, c in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    )
    return DistributionTable(level=level, rows=rows)


def top_ids(table: RecordTable, k: int) -> TopIdsTable:
    """The k most frequent IDs overall; ties broken by the smaller ID."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    cats = _categories_of(table)
    cat_names = tuple(sorted(set(cats)))
    ids = table.ids.astype(np.int64)
    totals = Counter(ids.tolist())
    ranked = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))[:k]

    per_cat_counts: dict[tuple[int, str], int] = Counter(zip(ids.tolist(), cats))
    rows = tuple(
        (i, total, tuple(per_cat_counts.get((i, c), 0) for c in cat_names))
        for i, total in ranked
    )
    return TopIdsTable(categories=cat_names, rows=rows)


def byte_means_by_category(table: RecordTable) -> ByteMeansTable:
    """Arithmetic mean of each payload byte per category."""
    cats = np.array(_categories_of(table))
    names = tuple(sorted(set(cats.tolist())))
    means = np.zeros((len(names), 8))
    for i, c in enumerate(names):
        means[i] = table.payloads[cats == c].mean(axis=0)
    return ByteMeansTable(categories=names, means=means)


def payload_sum_histogram(table: RecordTable, bins: int) -> PayloadSumHistogram:
    """Equal-width histogram of the payload sums, per category."""
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    cats = np.array(_categories_of(table))
    names = tuple(sorted(set(cats.tolist())))
    sums = table.payloads.sum(axis=1)
    lo, hi = PAYLOAD_SUM_RANGE
    if sums.size and (sums.min() < lo or sums.max() > hi):
        raise StatsError("payload sums fall outside [0, 2040]; invalid byte values")
    edges = np.linspace(lo, hi, bins + 1)
    counts = np.zeros((len(names), bins), dtype=np.int64)
    for i, c in enumerate(names):
        counts[i], _ = np.histogram(sums[cats == c], bins=edges)
    return PayloadSumHistogram(categories=names, edges=edges, counts=counts)


def correlation_matrix(table: RecordTable) -> CorrelationMatrix:
    """Pearson correlation over [ID, DATA_0..7, is_attack].

    Constant features get correlation 0 against everything (flagged and
    warned) so downstream reports stay total; the diagonal is exactly 1.
    """
    n = len(table)
    if n < 2:
        raise StatsError(f"correlation needs at least 2 records, got {n}")
    labels = table.labels
    if any(lab is None for lab in labels):
        raise StatsError("table has missing labels; normalize first")
    is_attack = np.array([1.0 if lab == "ATTACK" else 0.0 for lab in labels])
    X = np.column_stack([table.feature_matrix(), is_attack])

    centered = X - X.mean(axis=0)
    std = np.sqrt((centered**2).mean(axis=0))
    constant = std == 0.0
    safe_std = np.where(constant, 1.0, std)
    cov = centered.T @ centered / n
    corr = cov / np.outer(safe_std, safe_std)
    corr[constant, :] = 0.0
    corr[:, constant] = 0.0
    np.fill_diagonal(corr, 1.0)
    corr = np.clip(corr, -1.0, 1.0)

    flagged = tuple(name for name, c in zip(CORRELATION_NAMES, constant) if c)
    if flagged:
        warnings.warn(
            f"constant features {flagged} assigned correlation 0", stacklevel=2
        )
    return CorrelationMatrix(
        names=CORRELATION_NAMES, matrix=corr, constant_features=flagged
    )
