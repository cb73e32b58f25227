"""
Datasets
========
Seeded synthetic data (a super-class / sub-class Gaussian hierarchy and
the two-Gaussians sanity set) plus reading and writing of the embedding
CSV format:

    # curvednet-embeddings v1 dim=<d>
    id,split,label,f0,...,f{d-1}

One file holds one split. Labels are non-negative integers for ID rows
and the literal ``ood`` for OOD rows.
"""

import os
import csv
import math
import logging
from dataclasses import dataclass, field

import numpy as np

from curvednet.config import EMBEDDINGS_MAGIC, SPLITS, OOD_LABEL, OOD_TAG
from curvednet.errors import (
    BadSpec, ParseError, DimInconsistent, UnknownSplitTag, TrainPurityError, ClassTooSmall,
)
from curvednet.guards import check_train_purity, sanitize_sample_id

logger = logging.getLogger(__name__)


@dataclass
class Dataset:
    features: np.ndarray  # n x d
    labels: np.ndarray  # n, OOD_LABEL for OOD rows
    split: str
    ids: list = field(default_factory=list)
    seed: int = None
    note: str = ""

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if self.features.shape[0] != len(self.labels):
            raise ValueError(f"{self.features.shape[0]} feature rows but {len(self.labels)} labels")
        if not self.ids:
            self.ids = [f"{self.split}-{i:05d}" for i in range(len(self.labels))]
        if self.split not in SPLITS:
            raise UnknownSplitTag(f"unknown split '{self.split}'")
        if not np.all(np.isfinite(self.features)):
            raise ParseError("features must be finite")
        if self.split == "train":
            check_train_purity(self.labels)

    def __len__(self):
        return len(self.labels)

    @property
    def dim(self):
        return self.features.shape[1]

    @property
    def classes(self):
        return np.unique(self.labels[self.labels != OOD_LABEL])

    def subset(self, index, split=None):
        index = np.asarray(index, dtype=np.int64)
        return Dataset(
            self.features[index], self.labels[index], split or self.split,
            [self.ids[i] for i in index], self.seed, self.note,
        )


@dataclass
class HierarchySpec:
    n_super: int = 4
    n_sub_per_super: int = 3
    dim: int = 16
    super_spread: float = 10.0
    sub_spread: float = 2.0
    noise_std: float = 0.5
    samples_per_leaf: int = 200
    ood_leaves: int = 2

    @property
    def n_leaves(self):
        return self.n_super * self.n_sub_per_super

    def validate(self):
        errors = []
        if self.n_super < 1 or self.n_sub_per_super < 1:
            errors.append("n_super and n_sub_per_super must be >= 1")
        if self.n_leaves < 2:
            errors.append("the hierarchy needs at least 2 leaves")
        if self.dim < 1:
            errors.append("dim must be >= 1")
        if self.samples_per_leaf < 1:
            errors.append("samples_per_leaf must be >= 1")
        if self.ood_leaves < 1:
            errors.append("ood_leaves must be >= 1")
        if self.n_leaves - self.ood_leaves < 2:
            errors.append("at least 2 leaves must stay in-distribution")
        if self.noise_std < 0:
            errors.append("noise_std must be >= 0")
        if not (self.super_spread > self.noise_std and self.sub_spread > self.noise_std):
            errors.append("super_spread and sub_spread must exceed noise_std")
        if errors:
            raise BadSpec("Invalid hierarchy spec:\n  - " + "\n  - ".join(errors))


@dataclass
class DataSplits:
    train: Dataset
    test_id: Dataset
    test_ood: Dataset
    centers: np.ndarray = None  # leaf centers, n_leaves x d
    ood_leaf_ids: tuple = ()

    def __iter__(self):
        return iter((self.train, self.test_id, self.test_ood))


# ── Generation ───────────────────────────────────────────


def gen_hierarchical(spec, seed, train_fraction=0.8):
    """
    Sample a super/sub-class Gaussian hierarchy.

    Super centers ~ N(0, super_spread^2 I); sub centers scatter around
    their super center with sub_spread; samples around their leaf with
    noise_std. ``ood_leaves`` whole leaves are held out as test_ood; the
    remaining leaves are relabelled 0..C-1 and split per class.
    """
    spec.validate()
    rng = np.random.default_rng(seed)
    d = spec.dim

    supers = rng.normal(0.0, spec.super_spread, (spec.n_super, d))
    subs = supers[:, None, :] + rng.normal(0.0, spec.sub_spread, (spec.n_super, spec.n_sub_per_super, d))
    centers = subs.reshape(spec.n_leaves, d)
    leaves = [
        center + spec.noise_std * rng.standard_normal((spec.samples_per_leaf, d))
        for center in centers
    ]
    ood = tuple(sorted(int(i) for i in rng.choice(spec.n_leaves, spec.ood_leaves, replace=False)))
    id_leaves = [i for i in range(spec.n_leaves) if i not in ood]

    id_all = Dataset(
        np.concatenate([leaves[i] for i in id_leaves]),
        np.repeat(np.arange(len(id_leaves)), spec.samples_per_leaf),
        "test_id", seed=seed, note=f"hierarchical seed={seed}",
    )
    train, test_id = split_train_test(id_all, train_fraction, seed)
    test_ood = Dataset(
        np.concatenate([leaves[i] for i in ood]),
        np.full(spec.ood_leaves * spec.samples_per_leaf, OOD_LABEL),
        "test_ood", seed=seed, note=f"hierarchical seed={seed} leaves={list(ood)}",
    )
    logger.info(
        "Generated hierarchy: %d leaves (%d ID, %d OOD), train=%d test_id=%d test_ood=%d",
        spec.n_leaves, len(id_leaves), len(ood), len(train), len(test_id), len(test_ood),
    )
    return DataSplits(train, test_id, test_ood, centers, ood)


def gen_two_gaussians(n=200, dim=2, separation=3.0, std=0.5, seed=0):
    """Two balanced classes centred at -separation and +separation on every axis."""
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % 2
    centers = np.where(labels[:, None] == 0, -separation, separation)
    features = centers + std * rng.standard_normal((n, dim))
    return Dataset(features, labels, "train", seed=seed, note="two gaussians")


def split_train_test(ds, fraction, seed):
    """Per-class stratified split; returns (train, test_id)."""
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in ds.classes:
        members = np.flatnonzero(ds.labels == c)
        n_train = int(round(fraction * len(members)))
        if n_train < 1 or n_train >= len(members):
            raise ClassTooSmall(f"class {c} has {len(members)} sample(s); cannot split at {fraction}")
        order = rng.permutation(members)
        train_idx.extend(order[:n_train])
        test_idx.extend(order[n_train:])
    return ds.subset(np.sort(train_idx), "train"), ds.subset(np.sort(test_idx), "test_id")


# ── Embedding files ─────────────────────────────────────


def write_embeddings(ds, path):
    """Write one split; floats use repr so the file round-trips exactly."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"{EMBEDDINGS_MAGIC}{ds.dim}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["id", "split", "label"] + [f"f{j}" for j in range(ds.dim)])
        for sample_id, label, row in zip(ds.ids, ds.labels, ds.features):
            tag = OOD_TAG if label == OOD_LABEL else str(int(label))
            writer.writerow([sample_id, ds.split, tag] + [repr(float(v)) for v in row])
    logger.debug("Wrote %d %s rows to %s", len(ds), ds.split, path)


def _parse_label(text, split, lineno, path):
    if text == OOD_TAG:
        if split == "train":
            raise TrainPurityError(f"{path}:{lineno}: OOD row in the train split")
        if split == "test_id":
            raise ParseError("OOD label in the test_id split", lineno, path)
        return OOD_LABEL
    if split == "test_ood":
        raise ParseError(f"test_ood rows must be labelled '{OOD_TAG}', got '{text}'", lineno, path)
    try:
        label = int(text)
    except ValueError:
        raise ParseError(f"label must be a non-negative integer or '{OOD_TAG}', got '{text}'", lineno, path)
    if label < 0:
        raise ParseError(f"label must be non-negative, got {label}", lineno, path)
    return label


def load_embeddings(path):
    """
    Parse one embedding CSV file into a Dataset.

    Raises ParseError (with the 1-based line number), DimInconsistent,
    UnknownSplitTag, or TrainPurityError.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"Embedding file not found: {path}")

    with open(path, "r", encoding="utf-8", newline="") as f:
        lines = f.read().split("\n")

    first = lines[0].strip() if lines else ""
    if not first.startswith(EMBEDDINGS_MAGIC):
        raise ParseError(f"missing header '{EMBEDDINGS_MAGIC}<d>'", 1, path)
    try:
        dim = int(first[len(EMBEDDINGS_MAGIC):])
    except ValueError:
        raise ParseError("dimension in the header is not an integer", 1, path)
    if dim < 1:
        raise ParseError("dimension must be >= 1", 1, path)

    expected = ["id", "split", "label"] + [f"f{j}" for j in range(dim)]
    rows = list(csv.reader(lines[1:]))
    if not rows or [c.strip() for c in rows[0]] != expected:
        raise ParseError("column header must be 'id,split,label,f0..f{d-1}'", 2, path)

    ids, labels, features = [], [], []
    split = None
    for offset, row in enumerate(rows[1:]):
        lineno = offset + 3
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) < 3:
            raise ParseError("expected id,split,label and features", lineno, path)
        if len(row) - 3 != dim:
            raise DimInconsistent(f"row has {len(row) - 3} features, header declares {dim}", lineno, path)
        sample_id = sanitize_sample_id(row[0])
        if not sample_id:
            raise ParseError("empty sample id", lineno, path)
        tag = row[1].strip()
        if tag not in SPLITS:
            raise UnknownSplitTag(f"unknown split '{tag}'", lineno, path)
        if split is None:
            split = tag
        elif tag != split:
            raise ParseError(f"file mixes splits '{split}' and '{tag}'", lineno, path)
        labels.append(_parse_label(row[2].strip(), tag, lineno, path))
        try:
            values = [float(v) for v in row[3:]]
        except ValueError:
            raise ParseError("feature is not a number", lineno, path)
        if not all(math.isfinite(v) for v in values):
            raise ParseError("feature is not finite", lineno, path)
        ids.append(sample_id)
        features.append(values)

    if split is None:
        raise ParseError("file contains no rows", 2, path)
    logger.info("Loaded %d %s rows (d=%d) from %s", len(labels), split, dim, path)
    return Dataset(np.array(features).reshape(len(labels), dim), labels, split, ids, note=path)


def load_splits(data_dir):
    """Read ``train.csv``, ``test_id.csv`` and ``test_ood.csv`` from a directory."""
    loaded = {}
    for name in SPLITS:
        ds = load_embeddings(os.path.join(data_dir, f"{name}.csv"))
        if ds.split != name:
            raise ParseError(f"{name}.csv holds '{ds.split}' rows", path=data_dir)
        loaded[name] = ds
    dims = {ds.dim for ds in loaded.values()}
    if len(dims) != 1:
        raise DimInconsistent(f"splits disagree on the dimension: {sorted(dims)}", path=data_dir)
    return DataSplits(loaded["train"], loaded["test_id"], loaded["test_ood"])


def write_splits(splits, data_dir):
    paths = []
    for ds in splits:
        path = os.path.join(data_dir, f"{ds.split}.csv")
        write_embeddings(ds, path)
        paths.append(path)
    return paths
