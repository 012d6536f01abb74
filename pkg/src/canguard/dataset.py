"""CAN frame record tables: ingestion, cleaning, deduplication, splitting.

Tables follow the CICIoV2024 decimal layout: an 11-bit arbitration ID,
eight payload bytes, and a three-level label taxonomy
(label / category / specific_class). Numeric cells are stored as float64
with NaN marking a missing value; label cells use None. All operations are
pure: they return new tables and never mutate their input.
"""

from __future__ import annotations

import csv
import math
import zlib
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    ImputationError,
    LabelError,
    ParseError,
    SchemaError,
    SplitError,
)

LABELS = ("ATTACK", "BENIGN")
CATEGORIES = ("BENIGN", "DOS", "SPOOFING")
SPECIFIC_CLASSES = ("BENIGN", "DOS", "GAS", "RPM", "SPEED", "STEERING_WHEEL")
SPOOFING_CLASSES = ("GAS", "RPM", "SPEED", "STEERING_WHEEL")

NUMERIC_COLUMNS = ("ID", "DATA_0", "DATA_1", "DATA_2", "DATA_3",
                   "DATA_4", "DATA_5", "DATA_6", "DATA_7")
LABEL_COLUMNS = ("label", "category", "specific_class")
COLUMNS = NUMERIC_COLUMNS + LABEL_COLUMNS

#: Canonical file names looked up under a dataset directory.
CANONICAL_FILES = (
    "decimal_benign.csv",
    "decimal_DoS.csv",
    "decimal_spoofing-GAS.csv",
    "decimal_spoofing-RPM.csv",
    "decimal_spoofing-SPEED.csv",
    "decimal_spoofing-STEERING_WHEEL.csv",
)

MAX_ID = 2047
MAX_BYTE = 255


@dataclass(frozen=True)
class CanFrameRecord:
    """One CAN message with its three-level label taxonomy."""

    id: int
    data: tuple[int, ...]
    label: str
    category: str
    specific_class: str

    def __post_init__(self) -> None:
        if not 0 <= self.id <= MAX_ID:
            raise ValueError(f"arbitration id {self.id} outside [0, {MAX_ID}]")
        if len(self.data) != 8:
            raise ValueError(f"payload must have 8 bytes, got {len(self.data)}")
        for b in self.data:
            if not 0 <= b <= MAX_BYTE:
                raise ValueError(f"payload byte {b} outside [0, {MAX_BYTE}]")
        if self.label not in LABELS:
            raise LabelError(f"unknown label {self.label!r}")
        if self.category not in CATEGORIES:
            raise LabelError(f"unknown category {self.category!r}")
        if self.specific_class not in SPECIFIC_CLASSES:
            raise LabelError(f"unknown specific_class {self.specific_class!r}")
        _check_closure(self.label, self.category, self.specific_class)


def _check_closure(label: str, category: str, specific: str) -> None:
    """Enforce the taxonomy closure between the three label levels."""
    benign = (label == "BENIGN", category == "BENIGN", specific == "BENIGN")
    if any(benign) and not all(benign):
        raise LabelError(
            f"taxonomy closure violated: label={label!r} category={category!r} "
            f"specific_class={specific!r}"
        )
    if category == "DOS" and specific != "DOS":
        raise LabelError(f"category DOS requires specific_class DOS, got {specific!r}")
    if category == "SPOOFING" and specific not in SPOOFING_CLASSES:
        raise LabelError(
            f"category SPOOFING requires specific_class in {SPOOFING_CLASSES}, "
            f"got {specific!r}"
        )


class RecordTable:
    """Immutable, array-backed ordered collection of CAN frame records.

    Construction copies its inputs once; the numeric arrays are exposed as
    read-only views so a table can be shared freely across threads.
    """

    __slots__ = ("_ids", "_data", "_labels", "_categories", "_specifics", "_sources")

    def __init__(
        self,
        ids: np.ndarray,
        data: np.ndarray,
        labels: Sequence[str | None],
        categories: Sequence[str | None],
        specifics: Sequence[str | None],
        source_tags: Sequence[str],
    ):
        ids = np.array(ids, dtype=np.float64)
        data = np.array(data, dtype=np.float64)
        if data.ndim != 2 or data.shape[1] != 8:
            raise ValueError(f"payload array must be (n, 8), got {data.shape}")
        n = ids.shape[0]
        if not (data.shape[0] == len(labels) == len(categories)
                == len(specifics) == len(source_tags) == n):
            raise ValueError("column lengths disagree")
        ids.flags.writeable = False
        data.flags.writeable = False
        self._ids = ids
        self._data = data
        self._labels = tuple(labels)
        self._categories = tuple(categories)
        self._specifics = tuple(specifics)
        self._sources = tuple(source_tags)

    # -- construction ----------------------------------------------------

    @classmethod
    def empty(cls) -> "RecordTable":
        return cls(np.empty(0), np.empty((0, 8)), (), (), (), ())

    @classmethod
    def from_records(
        cls, records: Iterable[CanFrameRecord], source_tag: str = ""
    ) -> "RecordTable":
        recs = list(records)
        ids = np.array([r.id for r in recs], dtype=np.float64)
        data = np.array([r.data for r in recs], dtype=np.float64).reshape(len(recs), 8)
        return cls(
            ids,
            data,
            [r.label for r in recs],
            [r.category for r in recs],
            [r.specific_class for r in recs],
            [source_tag] * len(recs),
        )

    # -- access ----------------------------------------------------------

    @property
    def ids(self) -> np.ndarray:
        return self._ids

    @property
    def payloads(self) -> np.ndarray:
        return self._data

    @property
    def labels(self) -> tuple[str | None, ...]:
        return self._labels

    @property
    def categories(self) -> tuple[str | None, ...]:
        return self._categories

    @property
    def specific_classes(self) -> tuple[str | None, ...]:
        return self._specifics

    @property
    def source_tags(self) -> tuple[str, ...]:
        return self._sources

    def __len__(self) -> int:
        return self._ids.shape[0]

    def record(self, i: int) -> CanFrameRecord:
        """Materialize row ``i`` as a validated record."""
        idv = self._ids[i]
        row = self._data[i]
        if math.isnan(idv) or np.isnan(row).any():
            raise ValueError(f"row {i} has missing numeric cells")
        for name, value in (("label", self._labels[i]),
                            ("category", self._categories[i]),
                            ("specific_class", self._specifics[i])):
            if value is None:
                raise ValueError(f"row {i} has a missing {name}")
        return CanFrameRecord(
            id=int(idv),
            data=tuple(int(b) for b in row),
            label=self._labels[i],  # type: ignore[arg-type]
            category=self._categories[i],  # type: ignore[arg-type]
            specific_class=self._specifics[i],  # type: ignore[arg-type]
        )

    def __iter__(self) -> Iterator[CanFrameRecord]:
        for i in range(len(self)):
            yield self.record(i)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RecordTable):
            return NotImplemented
        return (
            np.array_equal(self._ids, other._ids, equal_nan=True)
            and np.array_equal(self._data, other._data, equal_nan=True)
            and self._labels == other._labels
            and self._categories == other._categories
            and self._specifics == other._specifics
            and self._sources == other._sources
        )

    def __hash__(self):  # tables are mutable-sized containers, not keys
        return NotImplemented

    def has_missing(self) -> bool:
        if np.isnan(self._ids).any() or np.isnan(self._data).any():
            return True
        return any(
            v is None
            for col in (self._labels, self._categories, self._specifics)
            for v in col
        )

    def feature_matrix(self) -> np.ndarray:
        """The (n, 9) numeric matrix [ID, DATA_0..DATA_7]."""
        return np.column_stack([self._ids, self._data])

    def take(self, indices: Sequence[int] | np.ndarray) -> "RecordTable":
        """New table with the given rows, in the given order."""
        idx = np.asarray(indices, dtype=np.intp)
        return RecordTable(
            self._ids[idx],
            self._data[idx],
            [self._labels[i] for i in idx],
            [self._categories[i] for i in idx],
            [self._specifics[i] for i in idx],
            [self._sources[i] for i in idx],
        )

    def row_key(self, i: int) -> tuple:
        """Hashable 12-field key used for duplicate detection."""
        return (
            self._ids[i],
            *self._data[i].tolist(),
            self._labels[i],
            self._categories[i],
            self._specifics[i],
        )

    def _row_keys(self) -> list[tuple]:
        ids = self._ids.tolist()
        rows = self._data.tolist()
        return [
            (ids[i], *rows[i], self._labels[i], self._categories[i], self._specifics[i])
            for i in range(len(ids))
        ]


@dataclass(frozen=True)
class CategoryDuplicates:
    category: str
    duplicate_count: int
    total_records: int
    duplicate_fraction: float
    unique_messages: int


@dataclass(frozen=True)
class DuplicateReport:
    """Per-category exact-duplicate counts over all 12 fields."""

    rows: tuple[CategoryDuplicates, ...]

    def row(self, category: str) -> CategoryDuplicates:
        for r in self.rows:
            if r.category == category:
                return r
        raise KeyError(category)

    def to_json_dict(self) -> dict:
        return {
            "kind": "duplicate_report",
            "rows": [
                {
                    "category": r.category,
                    "duplicates": r.duplicate_count,
                    "total_records": r.total_records,
                    "duplicate_fraction": r.duplicate_fraction,
                    "unique_messages": r.unique_messages,
                }
                for r in self.rows
            ],
        }

    def to_csv_rows(self) -> list[list]:
        header = ["category", "duplicates", "total_records",
                  "duplicate_fraction", "unique_messages"]
        body = [
            [r.category, r.duplicate_count, r.total_records,
             f"{r.duplicate_fraction:.6f}", r.unique_messages]
            for r in self.rows
        ]
        return [header, *body]


@dataclass(frozen=True)
class SplitResult:
    """A stratified train/test partition of one table."""

    train: RecordTable
    test: RecordTable
    seed: int
    ratio: float


# -- parsing and writing ---------------------------------------------------


def parse_decimal_csv(path: str | Path, source_tag: str) -> RecordTable:
    """Parse one decimal-layout CSV file into a table.

    The header must contain the 12 canonical column names (whitespace
    around names is ignored; extra columns are skipped). Empty numeric
    cells become missing values; any other non-integer numeric cell is a
    ParseError naming the data row.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8-sig", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty, expected header {COLUMNS}")
        names = [h.strip() for h in header]
        positions = {}
        for col in COLUMNS:
            try:
                positions[col] = names.index(col)
            except ValueError:
                raise SchemaError(f"{path}: missing required column {col!r}") from None
        num_pos = [positions[c] for c in NUMERIC_COLUMNS]
        lab_pos = [positions[c] for c in LABEL_COLUMNS]
        max_pos = max(positions.values())

        ids: list[float] = []
        data: list[list[float]] = []
        labels: list[str | None] = []
        categories: list[str | None] = []
        specifics: list[str | None] = []
        for rownum, row in enumerate(reader):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if len(row) <= max_pos:
                raise ParseError(
                    f"{path}: row {rownum} has {len(row)} cells, "
                    f"expected at least {max_pos + 1}"
                )
            numeric = []
            for col, pos in zip(NUMERIC_COLUMNS, num_pos):
                cell = row[pos].strip()
                if cell == "":
                    numeric.append(math.nan)
                    continue
                try:
                    numeric.append(float(int(cell)))
                except ValueError:
                    raise ParseError(
                        f"{path}: row {rownum}, column {col}: "
                        f"non-integer value {cell!r}"
                    ) from None
            ids.append(numeric[0])
            data.append(numeric[1:])
            cells = [row[p] for p in lab_pos]
            labels.append(cells[0] if cells[0].strip() else None)
            categories.append(cells[1] if cells[1].strip() else None)
            specifics.append(cells[2] if cells[2].strip() else None)

    n = len(ids)
    return RecordTable(
        np.array(ids, dtype=np.float64),
        np.array(data, dtype=np.float64).reshape(n, 8),
        labels,
        categories,
        specifics,
        [source_tag] * n,
    )


def write_decimal_csv(table: RecordTable, path: str | Path) -> None:
    """Write a table in the canonical decimal layout (LF line endings).

    Missing numeric or label cells are written as empty fields.
    """
    path = Path(path)
    ids = table.ids.tolist()
    rows = table.payloads.tolist()
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for i in range(len(table)):
            out: list[str] = []
            for v in (ids[i], *rows[i]):
                out.append("" if math.isnan(v) else str(int(v)))
            for v in (table.labels[i], table.categories[i],
                      table.specific_classes[i]):
                out.append("" if v is None else v)
            writer.writerow(out)


def read_dataset_dir(directory: str | Path) -> list[RecordTable]:
    """Parse the six canonical files under ``directory``, in canonical order.

    Each table is tagged with its file name. Raises FileNotFoundError
    listing all six expected names if any is absent.
    """
    directory = Path(directory)
    missing = [f for f in CANONICAL_FILES if not (directory / f).is_file()]
    if missing:
        raise FileNotFoundError(
            f"{directory}: missing {len(missing)} dataset file(s) "
            f"({', '.join(missing)}); expected the six canonical files: "
            f"{', '.join(CANONICAL_FILES)}"
        )
    return [parse_decimal_csv(directory / f, source_tag=f) for f in CANONICAL_FILES]


# -- table operations -------------------------------------------------------


def merge_tables(tables: Sequence[RecordTable]) -> RecordTable:
    """Concatenate tables in argument order."""
    if not tables:
        return RecordTable.empty()
    if len(tables) == 1:
        return tables[0]
    labels: list[str | None] = []
    categories: list[str | None] = []
    specifics: list[str | None] = []
    sources: list[str] = []
    for t in tables:
        labels.extend(t.labels)
        categories.extend(t.categories)
        specifics.extend(t.specific_classes)
        sources.extend(t.source_tags)
    return RecordTable(
        np.concatenate([t.ids for t in tables]),
        np.concatenate([t.payloads for t in tables]),
        labels,
        categories,
        specifics,
        sources,
    )


_ENUM_FOR_COLUMN = {
    "label": frozenset(LABELS),
    "category": frozenset(CATEGORIES),
    "specific_class": frozenset(SPECIFIC_CLASSES),
}


def normalize_labels(table: RecordTable) -> RecordTable:
    """Strip and uppercase the three label columns, then check the taxonomy.

    Missing label cells are left missing (impute_missing fills them).
    Idempotent. Raises LabelError for values outside the taxonomy or rows
    that violate the closure between levels.
    """
    columns = {}
    for name, col in (("label", table.labels),
                      ("category", table.categories),
                      ("specific_class", table.specific_classes)):
        allowed = _ENUM_FOR_COLUMN[name]
        mapping: dict[str, str] = {}
        out: list[str | None] = []
        for i, raw in enumerate(col):
            if raw is None:
                out.append(None)
                continue
            norm = mapping.get(raw)
            if norm is None:
                norm = raw.strip().upper()
                if norm not in allowed:
                    raise LabelError(
                        f"row {i}: {name} value {raw!r} is outside the taxonomy"
                    )
                mapping[raw] = norm
            out.append(norm)
        columns[name] = out

    labels, categories, specifics = (
        columns["label"], columns["category"], columns["specific_class"]
    )
    for i in range(len(table)):
        lab, cat, spec = labels[i], categories[i], specifics[i]
        if lab is None or cat is None or spec is None:
            continue
        try:
            _check_closure(lab, cat, spec)
        except LabelError as exc:
            raise LabelError(f"row {i}: {exc}") from None
    return RecordTable(
        table.ids, table.payloads, labels, categories, specifics, table.source_tags
    )


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def impute_missing(table: RecordTable) -> RecordTable:
    """Fill missing numeric cells with the column median, labels with the mode.

    The median is computed over the non-missing values of the column before
    any filling; a fractional median is rounded half-up since the columns
    are integer-valued. A table with no missing cells is returned unchanged.
    Raises ImputationError when a column is entirely missing.
    """
    if not table.has_missing():
        return table

    matrix = table.feature_matrix()
    filled = matrix.copy()
    for j, name in enumerate(NUMERIC_COLUMNS):
        col = matrix[:, j]
        mask = np.isnan(col)
        if not mask.any():
            continue
        present = col[~mask]
        if present.size == 0:
            raise ImputationError(f"column {name} is entirely missing")
        filled[mask, j] = _round_half_up(float(np.median(present)))

    new_cols: list[list[str | None]] = []
    for name, col in (("label", table.labels),
                      ("category", table.categories),
                      ("specific_class", table.specific_classes)):
        values = list(col)
        if any(v is None for v in values):
            present_vals = [v for v in values if v is not None]
            if not present_vals:
                raise ImputationError(f"column {name} is entirely missing")
            counts = Counter(present_vals)
            top = max(counts.values())
            mode = min(v for v, c in counts.items() if c == top)
            values = [mode if v is None else v for v in values]
        new_cols.append(values)

    return RecordTable(
        filled[:, 0], filled[:, 1:], new_cols[0], new_cols[1], new_cols[2],
        table.source_tags,
    )


def duplicate_report(table: RecordTable) -> DuplicateReport:
    """Count exact-duplicate rows (all 12 fields equal) per category."""
    totals: Counter = Counter()
    seen: dict[str | None, set] = {}
    uniques: Counter = Counter()
    keys = table._row_keys()
    for i, cat in enumerate(table.categories):
        totals[cat] += 1
        bucket = seen.setdefault(cat, set())
        key = keys[i]
        if key not in bucket:
            bucket.add(key)
            uniques[cat] += 1
    rows = []
    for cat in sorted(totals, key=lambda c: (c is None, c)):
        total = totals[cat]
        unique = uniques[cat]
        rows.append(
            CategoryDuplicates(
                category=cat if cat is not None else "",
                duplicate_count=total - unique,
                total_records=total,
                duplicate_fraction=(total - unique) / total,
                unique_messages=unique,
            )
        )
    return DuplicateReport(rows=tuple(rows))


def deduplicate(table: RecordTable) -> RecordTable:
    """Keep the first occurrence of each distinct 12-field row. Idempotent."""
    seen: set = set()
    keep: list[int] = []
    for i, key in enumerate(table._row_keys()):
        if key not in seen:
            seen.add(key)
            keep.append(i)
    if len(keep) == len(table):
        return table
    return table.take(keep)


def _class_rng(seed: int, class_name: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(class_name.encode("utf-8"))])


def stratified_split_indices(
    labels: Sequence[str], test_fraction: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic per-class index split; returns sorted (train, test).

    Per class the test share is round-half-up(n_c * fraction), capped so
    classes with at least 2 records keep one training record. The totals
    are then repaired toward ceil(n * fraction) using only adjustments
    that keep each class within one record of its exact share.
    """
    if not 0.0 < test_fraction < 1.0:
        raise SplitError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = len(labels)
    if n == 0:
        raise SplitError("cannot split an empty table")

    by_class: dict[str, list[int]] = {}
    for i, lab in enumerate(labels):
        by_class.setdefault(lab, []).append(i)
    names = sorted(by_class)

    exact = {c: len(by_class[c]) * test_fraction for c in names}
    take = {}
    for c in names:
        n_c = len(by_class[c])
        t = _round_half_up(exact[c])
        if n_c >= 2:
            t = min(t, n_c - 1)
        take[c] = min(t, n_c)

    target = math.ceil(n * test_fraction - 1e-9)
    delta = target - sum(take.values())
    step = 1 if delta > 0 else -1
    while delta != 0:
        candidates = []
        for c in names:
            n_c = len(by_class[c])
            new = take[c] + step
            cap = n_c - 1 if n_c >= 2 else n_c
            if not 0 <= new <= cap:
                continue
            if abs(new - exact[c]) <= 1.0 + 1e-9:
                candidates.append(c)
        if not candidates:
            break
        chosen = max(candidates, key=lambda c: (len(by_class[c]), c))
        take[chosen] += step
        delta -= step

    total_test = sum(take.values())
    if total_test == 0:
        raise SplitError(f"test_fraction {test_fraction} yields an empty test set")
    if total_test == n:
        raise SplitError(f"test_fraction {test_fraction} yields an empty train set")

    train_idx: list[int] = []
    test_idx: list[int] = []
    for c in names:
        idx = np.array(by_class[c], dtype=np.intp)
        perm = _class_rng(seed, c).permutation(idx.size)
        shuffled = idx[perm]
        test_idx.extend(shuffled[: take[c]].tolist())
        train_idx.extend(shuffled[take[c]:].tolist())
    return np.sort(np.array(train_idx, dtype=np.intp)), np.sort(
        np.array(test_idx, dtype=np.intp)
    )


def stratified_split(
    table: RecordTable, test_fraction: float, seed: int
) -> SplitResult:
    """Split a table into stratified train/test partitions by specific_class."""
    labels = table.specific_classes
    if any(lab is None for lab in labels):
        raise SplitError("cannot stratify a table with missing specific_class")
    train_idx, test_idx = stratified_split_indices(labels, test_fraction, seed)  # type: ignore[arg-type]
    return SplitResult(
        train=table.take(train_idx),
        test=table.take(test_idx),
        seed=seed,
        ratio=test_fraction,
    )
