"""Labelled drug/medical-event pair data: CSV I/O, synthetic generation, splits and folds."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from ._io import atomic_write_text

BLOCK_NAMES = (
    "association_strength",
    "temporality",
    "specificity",
    "biological_gradient",
    "experimentation",
)
DEFAULT_N_ATTR = 30
UNLABELED = 0


class DatasetError(ValueError):
    """Raised for malformed input data or invalid partition requests."""


class Instance(NamedTuple):
    pair_id: str
    attributes: np.ndarray
    label: int | None


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable table of instances.

    ``y`` holds +1/-1 for labelled rows and 0 for unlabelled ones.
    """

    pair_ids: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    attribute_names: tuple[str, ...]
    provenance: str = ""

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64, copy=True)
        if X.size != len(self.pair_ids) * len(self.attribute_names):
            raise DatasetError(f"{X.size} attribute values for {len(self.pair_ids)} rows x {len(self.attribute_names)} names")
        X = X.reshape(len(self.pair_ids), len(self.attribute_names))
        y = np.array(self.y, dtype=np.int8, copy=True).reshape(-1)
        if len(y) != len(self.pair_ids):
            raise DatasetError("labels and pair_ids differ in length")
        if X.shape[1] != len(self.attribute_names):
            raise DatasetError(f"{X.shape[1]} attributes but {len(self.attribute_names)} attribute names")
        if not np.all(np.isfinite(X)):
            raise DatasetError("attributes must be finite")
        if not np.all(np.isin(y, (-1, 0, 1))):
            raise DatasetError("labels must be -1, +1 or unlabeled")
        if len(set(self.pair_ids)) != len(self.pair_ids):
            raise DatasetError("duplicate pair_id")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "pair_ids", tuple(self.pair_ids))
        object.__setattr__(self, "attribute_names", tuple(self.attribute_names))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return len(self.pair_ids)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.pair_ids == other.pair_ids
            and self.attribute_names == other.attribute_names
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
        )

    @property
    def n_attr(self) -> int:
        return len(self.attribute_names)

    @property
    def is_labeled(self) -> bool:
        return bool(np.all(self.y != UNLABELED))

    @property
    def instances(self) -> list[Instance]:
        return [
            Instance(pid, self.X[i], int(self.y[i]) if self.y[i] != UNLABELED else None)
            for i, pid in enumerate(self.pair_ids)
        ]

    def subset(self, indices, provenance: str | None = None) -> "Dataset":
        indices = np.asarray(indices, dtype=np.intp)
        return Dataset(
            tuple(self.pair_ids[i] for i in indices),
            self.X[indices],
            self.y[indices],
            self.attribute_names,
            self.provenance if provenance is None else provenance,
        )


@dataclass(frozen=True)
class SplitPair:
    train: Dataset
    validation: Dataset
    fraction: float
    seed: int


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    k: int
    fold_of: np.ndarray

    def __post_init__(self):
        fold_of = np.array(self.fold_of, dtype=np.intp, copy=True)
        fold_of.flags.writeable = False
        object.__setattr__(self, "fold_of", fold_of)

    def __len__(self):
        return len(self.fold_of)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def fold_sizes(self) -> np.ndarray:
        return np.bincount(self.fold_of, minlength=self.k)


@dataclass(frozen=True)
class SynthSpec:
    n_instances: int = 2000
    positive_rate: float = 0.10
    n_attr: int = DEFAULT_N_ATTR
    block_names: Sequence[str] = field(default=BLOCK_NAMES)
    class_separation: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.n_instances < 1:
            raise DatasetError("n_instances must be positive")
        if not 0 < self.positive_rate < 1:
            raise DatasetError("positive_rate must lie in (0, 1)")
        if self.n_attr < 1 or self.n_attr % len(self.block_names):
            raise DatasetError("n_attr must be a positive multiple of the number of blocks")
        if self.class_separation < 0:
            raise DatasetError("class_separation must be nonnegative")


def default_attribute_names(n_attr: int = DEFAULT_N_ATTR) -> tuple[str, ...]:
    return tuple(f"attr_{i}" for i in range(1, n_attr + 1))


def attribute_blocks(block_names: Sequence[str], n_attr: int) -> dict[str, tuple[str, ...]]:
    """Map each criterion block to its consecutive run of ``attr_i`` columns."""
    per = n_attr // len(block_names)
    names = default_attribute_names(n_attr)
    return {b: names[i * per : (i + 1) * per] for i, b in enumerate(block_names)}


# ------------------------------------------------------------------ CSV


def _format_real(v: float) -> str:
    return repr(float(v))


def _label_text(label: int) -> str:
    return "" if label == UNLABELED else str(int(label))


def load_csv(path) -> Dataset:
    """Read ``pair_id,attr_1..attr_n,label`` rows (header required)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file, header row expected") from None
        names = tuple(header[1:-1])
        if len(header) < 3 or header[0] != "pair_id" or header[-1] != "label" or names != default_attribute_names(
            len(names)
        ):
            raise DatasetError(f"{path}: header must be pair_id,attr_1,...,attr_n,label")
        n_cols = len(header)
        ids, rows, labels = [], [], []
        seen = set()
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != n_cols:
                raise DatasetError(
                    f"{path}: row {row_no} has {len(row) - 2} attributes, expected {n_cols - 2}"
                )
            pid = row[0]
            if pid in seen:
                raise DatasetError(f"{path}: row {row_no} duplicates pair_id {pid!r}")
            seen.add(pid)
            try:
                vals = [float(v) for v in row[1:-1]]
            except ValueError:
                raise DatasetError(f"{path}: row {row_no} has a non-numeric attribute") from None
            if not all(math.isfinite(v) for v in vals):
                raise DatasetError(f"{path}: row {row_no} has a missing or non-finite attribute")
            lab = row[-1].strip()
            if lab == "":
                labels.append(UNLABELED)
            elif lab in ("1", "+1", "-1"):
                labels.append(int(lab))
            else:
                raise DatasetError(f"{path}: row {row_no} label {lab!r} not in {{-1, 1, empty}}")
            ids.append(pid)
            rows.append(vals)
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(names))
    return Dataset(tuple(ids), X, np.array(labels, dtype=np.int8), names, provenance=f"csv:{os.fspath(path)}")


def dumps_csv(dataset: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["pair_id", *dataset.attribute_names, "label"])
    for pid, x, lab in zip(dataset.pair_ids, dataset.X, dataset.y):
        writer.writerow([pid, *map(_format_real, x), _label_text(lab)])
    return buf.getvalue()


def write_csv(dataset: Dataset, path) -> None:
    try:
        atomic_write_text(path, dumps_csv(dataset))
    except OSError as exc:
        raise OSError(f"cannot write dataset to {path}: {exc}") from exc


# ------------------------------------------------------------------ partitions


def _require_labeled(dataset: Dataset):
    if not dataset.is_labeled:
        raise DatasetError("dataset contains unlabeled instances")


def split_train_validation(dataset: Dataset, fraction: float = 0.8, seed: int = 0) -> SplitPair:
    """Stratified random split with ``round(fraction * N)`` training rows."""
    _require_labeled(dataset)
    if not 0 < fraction < 1:
        raise DatasetError("fraction must lie in (0, 1)")
    n = len(dataset)
    n_train = int(round(fraction * n))
    rng = np.random.default_rng(seed)
    pos = np.flatnonzero(dataset.y == 1)
    neg = np.flatnonzero(dataset.y == -1)
    rng.shuffle(pos)
    rng.shuffle(neg)
    n_pos_train = int(round(fraction * len(pos)))
    n_pos_train = min(max(n_pos_train, n_train - len(neg)), len(pos), n_train)
    n_neg_train = n_train - n_pos_train
    train_idx = np.sort(np.concatenate([pos[:n_pos_train], neg[:n_neg_train]]))
    val_idx = np.sort(np.concatenate([pos[n_pos_train:], neg[n_neg_train:]]))
    return SplitPair(
        dataset.subset(train_idx, f"{dataset.provenance}|train"),
        dataset.subset(val_idx, f"{dataset.provenance}|validation"),
        fraction,
        seed,
    )


def stratified_kfold(dataset_or_labels, k: int = 10, seed: int = 0) -> FoldAssignment:
    """Deal each class round-robin (after shuffling) into ``k`` folds.

    Classes are dealt consecutively so fold sizes stay within one of
    each other as well as per-class counts.
    """
    y = dataset_or_labels.y if isinstance(dataset_or_labels, Dataset) else np.asarray(dataset_or_labels)
    if k < 2:
        raise DatasetError("k must be at least 2")
    if np.any(y == UNLABELED):
        raise DatasetError("dataset contains unlabeled instances")
    for label, name in ((1, "positive (+1)"), (-1, "negative (-1)")):
        count = int(np.sum(y == label))
        if count < k:
            raise DatasetError(f"class {name} has {count} members, fewer than k={k}")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(y), dtype=np.intp)
    offset = 0
    for label in (1, -1):
        members = np.flatnonzero(y == label)
        rng.shuffle(members)
        fold_of[members] = (offset + np.arange(len(members))) % k
        offset = (offset + len(members)) % k
    return FoldAssignment(k, fold_of)


# ------------------------------------------------------------------ synthetic


def generate_synthetic(spec: SynthSpec) -> Dataset:
    """Gaussian surrogate for Bradford-Hill attribute data.

    Attributes form ``len(block_names)`` equal blocks. Negatives are
    standard normal; positives are shifted by ``class_separation/sqrt(n_attr)``
    on every attribute except the last block, which is pure noise.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n_instances
    n_pos = int(round(spec.positive_rate * n))
    per_block = spec.n_attr // len(spec.block_names)
    shift = np.full(spec.n_attr, spec.class_separation / math.sqrt(spec.n_attr))
    shift[-per_block:] = 0.0
    y = np.full(n, -1, dtype=np.int8)
    y[rng.permutation(n)[:n_pos]] = 1
    X = rng.standard_normal((n, spec.n_attr))
    X[y == 1] += shift
    width = len(str(n))
    ids = tuple(f"D{i // 50:04d}-E{i:0{width}d}" for i in range(n))
    return Dataset(
        ids,
        X,
        y,
        default_attribute_names(spec.n_attr),
        provenance=f"synthetic(n={n},rate={spec.positive_rate},sep={spec.class_separation},seed={spec.seed})",
    )
