"""Synthetic CAN traffic generator.

Produces tables with the same ID/payload signature structure observed in
the real traffic: DoS floods on a single high-priority ID, spoofing on one
fixed ID per target class, and benign traffic over a diverse ID pool.
Payloads come from small per-class template pools, so the duplication rate
is controlled by the pool sizes and the optional byte noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .dataset import (
    CANONICAL_FILES,
    RecordTable,
    SPECIFIC_CLASSES,
    SPOOFING_CLASSES,
    write_decimal_csv,
)
from .errors import ConfigError

DOS_ID = 291
SPOOFING_ID_FOR_CLASS = {"GAS": 513, "RPM": 476, "SPEED": 128, "STEERING_WHEEL": 344}

#: (arbitration id, sampling weight); weighted toward the IDs that dominate
#: real benign traffic.
DEFAULT_BENIGN_IDS: tuple[tuple[int, float], ...] = (
    (535, 12.0), (516, 10.0), (359, 8.0), (65, 3.0), (131, 3.0), (357, 3.0),
    (578, 3.0), (936, 2.0), (1068, 2.0), (661, 1.0), (1086, 1.0), (1438, 1.0),
)

DEFAULT_PAYLOADS: dict[str, tuple[tuple[int, ...], ...]] = {
    "BENIGN": (
        (96, 0, 0, 0, 0, 0, 0, 0),
        (132, 131, 6, 0, 0, 0, 0, 0),
        (127, 255, 127, 255, 127, 255, 127, 255),
        (152, 24, 0, 0, 0, 0, 0, 0),
        (103, 91, 6, 0, 0, 0, 0, 0),
        (16, 12, 13, 0, 6, 0, 0, 0),
        (0, 0, 0, 0, 0, 0, 0, 0),
    ),
    "DOS": ((0, 0, 0, 0, 0, 0, 0, 0),),
    "GAS": ((255, 170, 0, 0, 0, 0, 0, 0), (200, 140, 0, 0, 0, 0, 0, 0)),
    "RPM": ((255, 255, 0, 0, 0, 0, 0, 0), (64, 200, 0, 0, 0, 0, 0, 0)),
    "SPEED": ((0, 0, 255, 255, 0, 0, 0, 0), (0, 0, 80, 160, 0, 0, 0, 0)),
    "STEERING_WHEEL": ((128, 0, 0, 64, 0, 0, 0, 0), (90, 0, 0, 32, 0, 0, 0, 0)),
}

SYNTH_SOURCE_TAG = "SYNTH"

_FILE_FOR_CLASS = dict(zip(
    ("BENIGN", "DOS", "GAS", "RPM", "SPEED", "STEERING_WHEEL"), CANONICAL_FILES
))


@dataclass(frozen=True)
class SynthConfig:
    """Per-class record counts plus the ID and payload signature pools."""

    counts: Mapping[str, int]
    benign_ids: Sequence[tuple[int, float]] = DEFAULT_BENIGN_IDS
    dos_id: int = DOS_ID
    spoofing_ids: Mapping[str, int] = field(
        default_factory=lambda: dict(SPOOFING_ID_FOR_CLASS)
    )
    payload_templates: Mapping[str, Sequence[tuple[int, ...]]] = field(
        default_factory=lambda: dict(DEFAULT_PAYLOADS)
    )
    noise_rate: float = 0.0
    noise_bytes: int = 1

    def validate(self) -> None:
        for cls, count in self.counts.items():
            if cls not in SPECIFIC_CLASSES:
                raise ConfigError(f"unknown class {cls!r} in counts")
            if count < 0:
                raise ConfigError(f"negative count {count} for class {cls}")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ConfigError(f"noise_rate must be in [0, 1], got {self.noise_rate}")
        if not 1 <= self.noise_bytes <= 8:
            raise ConfigError(f"noise_bytes must be in [1, 8], got {self.noise_bytes}")
        for cls in SPECIFIC_CLASSES:
            if self.counts.get(cls, 0) <= 0:
                continue
            templates = self.payload_templates.get(cls, ())
            if not templates:
                raise ConfigError(f"empty payload pool for requested class {cls}")
            if cls == "BENIGN":
                if not self.benign_ids:
                    raise ConfigError("empty benign ID pool")
                if any(w <= 0 for _, w in self.benign_ids):
                    raise ConfigError("benign ID weights must be positive")
            elif cls in SPOOFING_CLASSES and cls not in self.spoofing_ids:
                raise ConfigError(f"no spoofing ID assigned to class {cls}")

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "SynthConfig":
        known = {"counts", "benign_ids", "dos_id", "spoofing_ids",
                 "payload_templates", "noise_rate", "noise_bytes"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown synth config keys: {sorted(unknown)}")
        if "counts" not in doc:
            raise ConfigError("synth config requires a 'counts' mapping")
        kwargs: dict = {"counts": {str(k): int(v) for k, v in doc["counts"].items()}}
        if "benign_ids" in doc:
            kwargs["benign_ids"] = tuple(
                (int(i), float(w)) for i, w in doc["benign_ids"]
            )
        if "dos_id" in doc:
            kwargs["dos_id"] = int(doc["dos_id"])
        if "spoofing_ids" in doc:
            kwargs["spoofing_ids"] = {str(k): int(v)
                                      for k, v in doc["spoofing_ids"].items()}
        if "payload_templates" in doc:
            kwargs["payload_templates"] = {
                str(k): tuple(tuple(int(b) for b in t) for t in v)
                for k, v in doc["payload_templates"].items()
            }
        if "noise_rate" in doc:
            kwargs["noise_rate"] = float(doc["noise_rate"])
        if "noise_bytes" in doc:
            kwargs["noise_bytes"] = int(doc["noise_bytes"])
        return cls(**kwargs)


def default_synth_config(
    benign: int = 2000,
    dos: int = 400,
    spoofing_each: int = 150,
    noise_rate: float = 0.0,
) -> SynthConfig:
    counts = {"BENIGN": benign, "DOS": dos}
    counts.update({cls: spoofing_each for cls in SPOOFING_CLASSES})
    return SynthConfig(counts=counts, noise_rate=noise_rate)


def _labels_for_class(cls: str) -> tuple[str, str, str]:
    if cls == "BENIGN":
        return "BENIGN", "BENIGN", "BENIGN"
    if cls == "DOS":
        return "ATTACK", "DOS", "DOS"
    return "ATTACK", "SPOOFING", cls


def generate_synthetic(config: SynthConfig, seed: int) -> RecordTable:
    """Generate a table from the configured per-class signatures.

    Deterministic per seed: classes are emitted in taxonomy order and all
    randomness comes from a single generator.
    """
    config.validate()
    rng = np.random.default_rng(seed)

    ids_parts: list[np.ndarray] = []
    data_parts: list[np.ndarray] = []
    labels: list[str] = []
    categories: list[str] = []
    specifics: list[str] = []

    for cls in SPECIFIC_CLASSES:
        n = int(config.counts.get(cls, 0))
        if n == 0:
            continue
        if cls == "BENIGN":
            pool = np.array([i for i, _ in config.benign_ids], dtype=np.float64)
            weights = np.array([w for _, w in config.benign_ids], dtype=np.float64)
            ids = rng.choice(pool, size=n, p=weights / weights.sum())
        elif cls == "DOS":
            ids = np.full(n, float(config.dos_id))
        else:
            ids = np.full(n, float(config.spoofing_ids[cls]))

        templates = np.array(config.payload_templates[cls], dtype=np.float64)
        payload = templates[rng.integers(0, len(templates), size=n)].copy()
        if config.noise_rate > 0.0:
            noisy = np.flatnonzero(rng.random(n) < config.noise_rate)
            if noisy.size:
                pos = rng.integers(0, 8, size=(noisy.size, config.noise_bytes))
                vals = rng.integers(0, 256, size=(noisy.size, config.noise_bytes))
                payload[noisy[:, None], pos] = vals.astype(np.float64)

        ids_parts.append(ids)
        data_parts.append(payload)
        lab, cat, spec = _labels_for_class(cls)
        labels.extend([lab] * n)
        categories.extend([cat] * n)
        specifics.extend([spec] * n)

    if not ids_parts:
        return RecordTable.empty()
    total = len(labels)
    return RecordTable(
        np.concatenate(ids_parts),
        np.concatenate(data_parts),
        labels,
        categories,
        specifics,
        [SYNTH_SOURCE_TAG] * total,
    )


def write_synthetic_dataset(
    config: SynthConfig, seed: int, out_dir: str | Path
) -> list[Path]:
    """Write the six canonical files from one generated table.

    Every canonical file is written even when its class count is zero
    (header-only file), so the directory always parses back.
    """
    table = generate_synthetic(config, seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    specifics = np.array([s if s is not None else "" for s in table.specific_classes])
    written = []
    for cls, fname in _FILE_FOR_CLASS.items():
        idx = np.flatnonzero(specifics == cls)
        path = out_dir / fname
        write_decimal_csv(table.take(idx), path)
        written.append(path)
    return written
