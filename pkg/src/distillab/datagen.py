"""Seeded synthetic classification tasks and JSONL dataset files.

The keyword task plants exactly one class-identifying token per sequence,
so a rule-based scan labels every example perfectly: generated datasets are
learnable by construction, which leaves headroom for comparing distillation
recipes.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .io_utils import atomic_write_json, atomic_write_text, read_json
from .seeding import substream


@dataclass
class Dataset:
    tokens: np.ndarray  # (N, L) int64
    labels: np.ndarray  # (N,) int64
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.tokens = np.asarray(self.tokens, dtype=np.int64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.tokens.ndim != 2:
            raise ValidationError(f"dataset tokens must be (N, L), got {self.tokens.shape}")
        if self.labels.shape != (self.tokens.shape[0],):
            raise ValidationError("label count does not match example count")

    def __len__(self) -> int:
        return self.tokens.shape[0]

    @property
    def length(self) -> int:
        return self.tokens.shape[1]


def keyword_groups(n_classes: int, per_class: int) -> list[list[int]]:
    return [list(range(c * per_class, (c + 1) * per_class)) for c in range(n_classes)]


def gen_keyword_task(
    seed: int,
    vocab_size: int,
    length: int,
    n_classes: int,
    n_train: int,
    n_unlabeled: int,
    n_test: int,
    keywords_per_class: int = 2,
) -> tuple[Dataset, Dataset, Dataset]:
    """Three disjoint splits of the planted-keyword task.

    Token ids below n_classes * keywords_per_class are keywords (group c owns
    a contiguous block); the rest form the noise pool. Every example is
    ``length`` noise tokens with one keyword of its label's group planted at
    a random position.
    """
    n_keywords = n_classes * keywords_per_class
    if vocab_size <= 2 * n_classes or vocab_size <= n_keywords:
        raise ValidationError(
            f"vocab_size={vocab_size} too small for {n_classes} classes "
            f"({keywords_per_class} keywords each)"
        )
    if length < 1 or n_classes < 2:
        raise ValidationError("need length >= 1 and at least 2 classes")
    sizes = {"train": n_train, "unlabeled": n_unlabeled, "test": n_test}
    for name, size in sizes.items():
        if size < 1:
            raise ValidationError(f"{name} split must be non-empty")

    rng = substream(seed, "datagen")
    seen: set[tuple[int, ...]] = set()
    splits = []
    for name, size in sizes.items():
        tokens = np.empty((size, length), dtype=np.int64)
        labels = np.empty(size, dtype=np.int64)
        for i in range(size):
            label = i % n_classes
            while True:
                row = rng.integers(n_keywords, vocab_size, size=length)
                pos = int(rng.integers(length))
                row[pos] = label * keywords_per_class + int(rng.integers(keywords_per_class))
                key = tuple(int(t) for t in row)
                if key not in seen:
                    seen.add(key)
                    break
            tokens[i] = row
            labels[i] = label
        meta = {
            "z": vocab_size,
            "l": length,
            "c": n_classes,
            "seed": seed,
            "generator": "keyword-v1",
            "split": name,
            "keywords_per_class": keywords_per_class,
            "keyword_ids": keyword_groups(n_classes, keywords_per_class),
        }
        splits.append(Dataset(tokens=tokens, labels=labels, meta=meta))
    return splits[0], splits[1], splits[2]


def oracle_label(tokens: np.ndarray, n_classes: int, keywords_per_class: int) -> int:
    """Scan for the planted keyword; the keyword's group is the label."""
    n_keywords = n_classes * keywords_per_class
    hits = [int(t) // keywords_per_class for t in tokens if int(t) < n_keywords]
    if len(hits) != 1:
        raise ValidationError(f"expected exactly one keyword, found {len(hits)}")
    return hits[0]


def _meta_path(path: str) -> str:
    base, _ = os.path.splitext(path)
    return base + ".meta.json"


def save_jsonl(dataset: Dataset, path: str) -> None:
    lines = []
    for row, label in zip(dataset.tokens, dataset.labels):
        lines.append(json.dumps({"tokens": [int(t) for t in row], "label": int(label)}))
    atomic_write_text(path, "\n".join(lines) + "\n")
    if dataset.meta:
        atomic_write_json(_meta_path(path), dataset.meta)


def load_jsonl(path: str, vocab_size: int | None = None) -> Dataset:
    """Load and validate a JSONL dataset; the first line fixes the length L."""
    meta: dict = {}
    if vocab_size is None and os.path.exists(_meta_path(path)):
        stored = read_json(_meta_path(path))
        if isinstance(stored, dict):
            meta = stored
            vocab_size = stored.get("z")
    tokens_rows: list[list[int]] = []
    labels: list[int] = []
    length = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                row = [int(t) for t in obj["tokens"]]
                label = int(obj["label"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"{path}: malformed line {lineno}: {exc}") from exc
            if length is None:
                length = len(row)
            elif len(row) != length:
                raise ValidationError(
                    f"{path}: line {lineno} has {len(row)} tokens, expected {length}"
                )
            if min(row, default=0) < 0 or (vocab_size is not None and max(row) >= vocab_size):
                raise ValidationError(f"{path}: line {lineno} has a token id out of range")
            if label < 0:
                raise ValidationError(f"{path}: line {lineno} has a negative label")
            tokens_rows.append(row)
            labels.append(label)
    if not tokens_rows:
        raise ValidationError(f"{path}: empty dataset")
    if vocab_size is not None and not meta:
        meta = {"z": vocab_size}
    return Dataset(tokens=np.asarray(tokens_rows), labels=np.asarray(labels), meta=meta)


def draw_batch(dataset: Dataset, batch_size: int, seed: int, step: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform sample with replacement, deterministic in (seed, step)."""
    if batch_size < 1 or batch_size > len(dataset):
        raise ValidationError(f"batch size {batch_size} out of range for {len(dataset)} examples")
    rng = substream(seed, "batch", step)
    idx = rng.integers(0, len(dataset), size=batch_size)
    return dataset.tokens[idx], dataset.labels[idx]


def batch_iter(dataset: Dataset, batch_size: int, seed: int, steps: int):
    """Stream of (tokens, labels) batches for steps 0..steps-1."""
    for step in range(steps):
        yield draw_batch(dataset, batch_size, seed, step)
