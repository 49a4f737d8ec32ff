"""Vocabulary, embedding tables, and the token-projection kernel.

Projection maps a continuous representation back to the vocabulary token
whose embedding is most similar, which is what keeps every augmented batch
inside the discrete input space. Ties are broken by the lowest token id so
results never depend on evaluation order or thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .nn import MODEL_FORMAT_VERSION, as_matrix

SIMILARITIES = ("cosine", "dot")


@dataclass
class Vocabulary:
    size: int
    tokens: list[str] | None = None

    def __post_init__(self) -> None:
        if self.size < 2:
            raise ValidationError(f"vocabulary needs at least 2 tokens, got {self.size}")
        if self.tokens is not None and len(self.tokens) != self.size:
            raise ValidationError("display string count does not match vocabulary size")

    def save(self, path: str) -> None:
        from .io_utils import atomic_write_text

        tokens = self.tokens if self.tokens is not None else [f"t{i}" for i in range(self.size)]
        atomic_write_text(path, "\n".join(tokens) + "\n")

    @classmethod
    def load(cls, path: str) -> "Vocabulary":
        with open(path, "r", encoding="utf-8") as fh:
            tokens = [line.rstrip("\n") for line in fh if line.rstrip("\n") != ""]
        return cls(size=len(tokens), tokens=tokens)


@dataclass
class EmbeddingTable:
    table: np.ndarray  # (Z, H)
    owner: str = "teacher"

    def __post_init__(self) -> None:
        self.table = as_matrix("embedding table", self.table)
        if self.table.shape[0] < 2 or self.table.shape[1] < 1:
            raise ValidationError(f"embedding table too small: {self.table.shape}")
        norms = np.linalg.norm(self.table, axis=1)
        if norms.min() < 1e-12:
            raise ValidationError("embedding table contains a zero row")

    @property
    def size(self) -> int:
        return self.table.shape[0]

    @property
    def dim(self) -> int:
        return self.table.shape[1]


def init_embedding_table(rng: np.random.Generator, size: int, dim: int, owner: str = "teacher") -> EmbeddingTable:
    """uniform(-0.1, 0.1) entries; rows with norm < 1e-6 are re-drawn."""
    table = rng.uniform(-0.1, 0.1, size=(size, dim))
    while True:
        bad = np.flatnonzero(np.linalg.norm(table, axis=1) < 1e-6)
        if bad.size == 0:
            break
        table[bad] = rng.uniform(-0.1, 0.1, size=(bad.size, dim))
    return EmbeddingTable(table=table, owner=owner)


def validate_token_batch(tokens: object, vocab_size: int) -> np.ndarray:
    """Validate a (B, L) array of token ids against the vocabulary size."""
    t = np.asarray(tokens)
    if t.ndim != 2:
        raise ValidationError(f"token batch must be 2-D, got shape {t.shape}")
    if not np.issubdtype(t.dtype, np.integer):
        raise ValidationError(f"token batch must be integer, got dtype {t.dtype}")
    if t.size and (t.min() < 0 or t.max() >= vocab_size):
        raise ValidationError(
            f"token id out of range [0, {vocab_size}): min={t.min()}, max={t.max()}"
        )
    return t.astype(np.int64, copy=False)


def embed(table: EmbeddingTable, tokens: np.ndarray) -> np.ndarray:
    """Look up a (B, L) token batch, giving a (B, L, H) embedding tensor."""
    t = validate_token_batch(tokens, table.size)
    return table.table[t]


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """u.v / (|u||v|); a zero-norm input yields -inf, which never wins an argmax."""
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError(f"vectors must share a 1-D shape, got {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return float("-inf")
    return float(a @ b / (na * nb))


def _score_matrix(table: EmbeddingTable, similarity: str) -> np.ndarray:
    if similarity == "cosine":
        # Query norms are constant across the vocabulary, so normalizing
        # table rows alone preserves the cosine argmax.
        return table.table / np.linalg.norm(table.table, axis=1, keepdims=True)
    if similarity == "dot":
        return table.table
    raise ValidationError(f"unknown similarity {similarity!r}")


def _project_flat(flat: np.ndarray, mat: np.ndarray, block: int, out: np.ndarray) -> None:
    best = np.full(flat.shape[0], -np.inf)
    for start in range(0, mat.shape[0], block):
        scores = flat @ mat[start : start + block].T
        arg = scores.argmax(axis=1)
        top = scores[np.arange(scores.shape[0]), arg]
        better = top > best  # strict: earlier blocks keep ties, so lowest id wins
        out[better] = start + arg[better]
        best[better] = top[better]


def project_blocked(
    reps: np.ndarray,
    table: EmbeddingTable,
    block: int,
    similarity: str = "cosine",
    threads: int = 1,
) -> np.ndarray:
    """Nearest-token projection computed over vocabulary blocks.

    Blocking bounds the score-matrix size only; the result is identical to
    the unblocked projection for every block size.
    """
    if block < 1:
        raise ValidationError(f"block size must be >= 1, got {block}")
    r = np.asarray(reps, dtype=np.float64)
    if r.ndim != 3 or r.shape[2] != table.dim:
        raise ValidationError(f"reps must have shape (B, L, {table.dim}), got {r.shape}")
    if not np.isfinite(r).all():
        raise ValidationError("reps contain non-finite entries")
    mat = _score_matrix(table, similarity)
    flat = r.reshape(-1, table.dim)
    out = np.zeros(flat.shape[0], dtype=np.int64)
    if threads > 1 and flat.shape[0] > 1:
        chunk = (flat.shape[0] + threads - 1) // threads
        spans = [(s, min(s + chunk, flat.shape[0])) for s in range(0, flat.shape[0], chunk)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_project_flat, flat[a:b], mat, block, out[a:b]) for a, b in spans]
            for f in futures:
                f.result()
    else:
        _project_flat(flat, mat, block, out)
    return out.reshape(r.shape[0], r.shape[1])


def project_to_tokens(
    reps: np.ndarray, table: EmbeddingTable, similarity: str = "cosine", threads: int = 1
) -> np.ndarray:
    """Per-position argmax of similarity over the vocabulary; ties -> lowest id."""
    return project_blocked(reps, table, block=table.size, similarity=similarity, threads=threads)


def knn_neighbors(table: EmbeddingTable, token_id: int, k: int) -> np.ndarray:
    """The k most cosine-similar tokens to ``token_id``, excluding itself.

    Ordered by descending similarity, ties by lowest id.
    """
    if not 1 <= k < table.size:
        raise ValidationError(f"k must be in [1, {table.size}), got {k}")
    if not 0 <= token_id < table.size:
        raise ValidationError(f"token id {token_id} out of range")
    mat = _score_matrix(table, "cosine")
    scores = mat @ mat[token_id]
    scores[token_id] = -np.inf
    order = np.argsort(-scores, kind="stable")
    return order[:k].astype(np.int64)


def table_to_dict(table: EmbeddingTable) -> dict:
    return {
        "version": MODEL_FORMAT_VERSION,
        "dims": [table.size, table.dim],
        "owner": table.owner,
        "table": table.table.tolist(),
    }


def table_from_dict(obj: dict) -> EmbeddingTable:
    if obj.get("version") != MODEL_FORMAT_VERSION:
        raise ValidationError(f"unsupported table format version {obj.get('version')!r}")
    rows, cols = obj["dims"]
    return EmbeddingTable(as_matrix("stored table", obj["table"], rows=rows, cols=cols), obj["owner"])
