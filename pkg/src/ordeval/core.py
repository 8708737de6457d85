"""Domain types, TSV ingestion and confusion-matrix helpers."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateItem,
    EmptyDataset,
    InputError,
    MissingItem,
    UnknownLabel,
    UnknownSystem,
)


@dataclass(frozen=True)
class OrdinalScale:
    """Ordered class labels, lowest first.

    Labels are opaque: only their position in ``classes`` carries meaning.
    """

    classes: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(str(c) for c in self.classes))
        if len(self.classes) < 2:
            raise InputError("an ordinal scale needs at least 2 classes")
        if len(set(self.classes)) != len(self.classes):
            raise InputError(f"duplicate class labels in scale {self.classes}")

    @cached_property
    def _positions(self) -> dict[str, int]:
        return {c: i for i, c in enumerate(self.classes)}

    def __len__(self) -> int:
        return len(self.classes)

    def index(self, label: str) -> int:
        try:
            return self._positions[label]
        except KeyError:
            raise UnknownLabel(f"label {label!r} is not in scale {list(self.classes)}") from None

    def encode(self, labels: Iterable[str]) -> np.ndarray:
        return np.fromiter((self.index(lab) for lab in labels), dtype=np.int64)

    def decode(self, indices: Iterable[int]) -> tuple[str, ...]:
        return tuple(self.classes[int(i)] for i in indices)

    @classmethod
    def from_flag(cls, flag: str) -> "OrdinalScale":
        return cls(tuple(c.strip() for c in flag.split(",") if c.strip()))

    @classmethod
    def from_file(cls, path: str | Path) -> "OrdinalScale":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(tuple(line.strip() for line in lines if line.strip()))


@dataclass(frozen=True)
class GoldDistribution:
    counts: tuple[int, ...]
    total: int

    def __post_init__(self):
        if any(c < 0 for c in self.counts):
            raise InputError("class counts must be nonnegative")
        if sum(self.counts) != self.total:
            raise InputError("class counts do not sum to the total")

    @classmethod
    def from_counts(cls, counts: Sequence[int]) -> "GoldDistribution":
        counts = tuple(int(c) for c in counts)
        return cls(counts, sum(counts))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.float64)


@dataclass(frozen=True)
class ConfusionMatrix:
    """``cell[i][j]`` counts items predicted as class i whose gold class is j."""

    cell: np.ndarray
    scale: OrdinalScale

    def column_sums(self) -> np.ndarray:
        return self.cell.sum(axis=0)

    def row_sums(self) -> np.ndarray:
        return self.cell.sum(axis=1)

    @property
    def total(self) -> int:
        return int(self.cell.sum())


@dataclass(frozen=True)
class LabeledDataset:
    """Gold labels for a list of items plus any number of aligned system outputs."""

    scale: OrdinalScale
    items: tuple[tuple[str, str], ...]
    systems: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    name: str = "dataset"

    def __post_init__(self):
        object.__setattr__(self, "items", tuple((str(i), str(g)) for i, g in self.items))
        object.__setattr__(
            self, "systems", {str(k): tuple(v) for k, v in self.systems.items()}
        )
        ids = [i for i, _ in self.items]
        if len(set(ids)) != len(ids):
            seen = set()
            dup = next(i for i in ids if i in seen or seen.add(i))
            raise DuplicateItem(f"duplicate item id {dup!r}")
        for _, gold in self.items:
            self.scale.index(gold)
        for name, preds in self.systems.items():
            if len(preds) != len(self.items):
                raise MissingItem(
                    f"system {name!r} has {len(preds)} predictions for {len(self.items)} items"
                )
            for lab in preds:
                self.scale.index(lab)

    def __len__(self) -> int:
        return len(self.items)

    @property
    def item_ids(self) -> tuple[str, ...]:
        return tuple(i for i, _ in self.items)

    @cached_property
    def gold_indices(self) -> np.ndarray:
        return self.scale.encode(g for _, g in self.items)

    def system_indices(self, system: str) -> np.ndarray:
        try:
            preds = self.systems[system]
        except KeyError:
            raise UnknownSystem(
                f"unknown system {system!r}; known: {sorted(self.systems)}"
            ) from None
        return self.scale.encode(preds)

    def with_system(self, name: str, labels: Sequence[str]) -> "LabeledDataset":
        systems = dict(self.systems)
        systems[name] = tuple(labels)
        return LabeledDataset(self.scale, self.items, systems, self.name)

    @classmethod
    def from_indices(
        cls,
        scale: OrdinalScale,
        gold: Sequence[int],
        systems: Mapping[str, Sequence[int]] | None = None,
        name: str = "dataset",
    ) -> "LabeledDataset":
        """Build a dataset from class indices; item ids are ``d0, d1, ...``."""
        items = tuple((f"d{k}", scale.classes[int(g)]) for k, g in enumerate(gold))
        systems = {k: scale.decode(v) for k, v in (systems or {}).items()}
        return cls(scale, items, systems, name)


def _read_tsv(path: str | Path) -> list[tuple[str, str]]:
    rows: list[tuple[str, str]] = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter="\t"), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise InputError(f"{path}:{lineno}: expected 2 tab-separated columns, got {len(row)}")
            if lineno == 1 and row[0] == "item_id":
                continue
            rows.append((row[0], row[1]))
    return rows


def load_dataset(
    gold_path: str | Path,
    system_paths: Mapping[str, str | Path],
    scale: OrdinalScale,
    name: str | None = None,
) -> LabeledDataset:
    """Read a gold TSV and per-system TSVs, aligning systems by item id."""
    gold_rows = _read_tsv(gold_path)
    if not gold_rows:
        raise EmptyDataset(f"{gold_path}: no items")
    systems: dict[str, tuple[str, ...]] = {}
    for sys_name, path in system_paths.items():
        by_id: dict[str, str] = {}
        for item_id, label in _read_tsv(path):
            if item_id in by_id:
                raise DuplicateItem(f"{path}: duplicate item id {item_id!r}")
            by_id[item_id] = label
        try:
            systems[sys_name] = tuple(by_id[item_id] for item_id, _ in gold_rows)
        except KeyError as exc:
            raise MissingItem(f"{path}: no prediction for item {exc.args[0]!r}") from None
    return LabeledDataset(scale, tuple(gold_rows), systems, name or Path(gold_path).stem)


def write_tsv(path: str | Path, rows: Iterable[tuple[str, str]], header: bool = True) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header:
            fh.write("item_id\tlabel\n")
        for item_id, label in rows:
            fh.write(f"{item_id}\t{label}\n")


def write_dataset(dataset: LabeledDataset, directory: str | Path) -> dict[str, Path]:
    """Write ``gold.tsv`` and ``sys_<name>.tsv`` files; returns the system paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_tsv(directory / "gold.tsv", dataset.items)
    paths = {}
    for sys_name, preds in dataset.systems.items():
        paths[sys_name] = directory / f"sys_{sys_name}.tsv"
        write_tsv(paths[sys_name], zip(dataset.item_ids, preds))
    return paths


def counts_of(indices: np.ndarray, num_classes: int) -> np.ndarray:
    return np.bincount(indices, minlength=num_classes)


def gold_distribution(dataset: LabeledDataset) -> GoldDistribution:
    if len(dataset) == 0:
        raise EmptyDataset("dataset has no items")
    return GoldDistribution.from_counts(counts_of(dataset.gold_indices, len(dataset.scale)))


def confusion_counts(sys_idx: np.ndarray, gold_idx: np.ndarray, num_classes: int) -> np.ndarray:
    """Rows are system classes, columns gold classes."""
    flat = np.bincount(sys_idx * num_classes + gold_idx, minlength=num_classes * num_classes)
    return flat.reshape(num_classes, num_classes)


def confusion_matrix(dataset: LabeledDataset, system: str) -> ConfusionMatrix:
    sys_idx = dataset.system_indices(system)
    cell = confusion_counts(sys_idx, dataset.gold_indices, len(dataset.scale))
    return ConfusionMatrix(cell, dataset.scale)


@dataclass(frozen=True)
class MetricReport:
    dataset: str
    system: str
    scores: dict[str, float]
    config: str
    notes: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "system": self.system,
            "scores": dict(self.scores),
            "config": self.config,
            "notes": dict(self.notes),
        }


def fingerprint(obj) -> str:
    """Stable short hash of a JSON-serialisable configuration."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
