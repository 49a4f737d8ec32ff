"""Augmentation operators.

Two embedding-space backbones (MixUp interpolation, FGSM sign perturbation),
the two projected variants that convert the result back to tokens, and the
k-nearest-neighbor token-replacement baseline. Projected batches carry no
labels: supervision for them comes from the teacher at training time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingTable, embed, knn_neighbors, project_to_tokens, validate_token_batch
from .errors import ValidationError
from .model import TokenModel, backward_to_embeddings, model_forward
from .nn import cross_entropy_rows, softmax

PAIRINGS = ("shift-half", "shuffled")
SIGN_MODES = ("ascent", "descent", "random")
GRAD_LOSSES = ("kd", "ce", "distill")


@dataclass(frozen=True)
class MixupConfig:
    lam: float = 0.5
    pairing: str = "shift-half"

    def __post_init__(self) -> None:
        if not 0.0 <= self.lam <= 1.0:
            raise ValidationError(f"lambda must be in [0, 1], got {self.lam}")
        if self.pairing not in PAIRINGS:
            raise ValidationError(f"unknown pairing {self.pairing!r}")


@dataclass(frozen=True)
class FgsmConfig:
    epsilon: float = 0.05
    sign_mode: str = "ascent"

    def __post_init__(self) -> None:
        if self.epsilon <= 0.0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")
        if self.sign_mode not in SIGN_MODES:
            raise ValidationError(f"unknown sign mode {self.sign_mode!r}")


def mixup_embed(e1: np.ndarray, e2: np.ndarray, lam: float) -> np.ndarray:
    """Elementwise lam * e1 + (1 - lam) * e2."""
    a = np.asarray(e1, dtype=np.float64)
    b = np.asarray(e2, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch: {a.shape} vs {b.shape}")
    if not 0.0 <= lam <= 1.0:
        raise ValidationError(f"lambda must be in [0, 1], got {lam}")
    return lam * a + (1.0 - lam) * b


def mixup_label(y1: np.ndarray, y2: np.ndarray, lam: float) -> np.ndarray:
    """Convex combination of two probability vectors; stays a probability vector."""
    a = np.asarray(y1, dtype=np.float64)
    b = np.asarray(y2, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch: {a.shape} vs {b.shape}")
    return lam * a + (1.0 - lam) * b


def fgsm_perturb(e: np.ndarray, grad: np.ndarray, cfg: FgsmConfig, rng: np.random.Generator | None = None) -> np.ndarray:
    """Move each coordinate of ``e`` by 0 or +-epsilon.

    ascent follows sign(grad), descent the opposite, random draws fresh signs
    from ``rng``. sign(0) = 0: a zero-gradient coordinate is left alone.
    """
    x = np.asarray(e, dtype=np.float64)
    g = np.asarray(grad, dtype=np.float64)
    if x.shape != g.shape:
        raise ValidationError(f"shape mismatch: {x.shape} vs {g.shape}")
    if cfg.sign_mode == "ascent":
        return x + cfg.epsilon * np.sign(g)
    if cfg.sign_mode == "descent":
        return x - cfg.epsilon * np.sign(g)
    if rng is None:
        raise ValidationError("random sign mode needs an rng")
    signs = rng.integers(0, 2, size=x.shape).astype(np.float64) * 2.0 - 1.0
    return x + cfg.epsilon * signs


def pair_partners(batch_size: int, pairing: str, rng: np.random.Generator | None = None) -> np.ndarray:
    """Partner index for each batch row under the chosen pairing rule."""
    if pairing == "shift-half":
        if batch_size % 2 != 0:
            raise ValidationError(f"shift-half pairing needs an even batch, got {batch_size}")
        return (np.arange(batch_size) + batch_size // 2) % batch_size
    if pairing == "shuffled":
        if rng is None:
            raise ValidationError("shuffled pairing needs an rng")
        return rng.permutation(batch_size)
    raise ValidationError(f"unknown pairing {pairing!r}")


def augpro_mix(
    batch: np.ndarray,
    labels: np.ndarray | None,
    cfg: MixupConfig,
    teacher_table: EmbeddingTable,
    rng: np.random.Generator | None = None,
    similarity: str = "cosine",
    threads: int = 1,
) -> np.ndarray:
    """MixUp in the teacher's embedding space, then projection back to tokens.

    ``labels`` is accepted for interface symmetry but unused: the projected
    batch carries no label because projection need not preserve it.
    """
    del labels
    tokens = validate_token_batch(batch, teacher_table.size)
    partner = pair_partners(tokens.shape[0], cfg.pairing, rng)
    e = embed(teacher_table, tokens)
    mixed = mixup_embed(e, e[partner], cfg.lam)
    return project_to_tokens(mixed, teacher_table, similarity=similarity, threads=threads)


def fgsm_embedding_grad(
    batch: np.ndarray,
    labels: np.ndarray,
    student: TokenModel,
    teacher: TokenModel | None,
    grad_loss: str = "kd",
    distance: str = "ce",
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of the chosen per-batch loss w.r.t. the student's embeddings.

    Returns (student_embeddings, grad) with shape (B, L, H) each. ``kd`` uses
    hard-label CE plus the teacher-distance term, ``ce`` the CE term alone,
    ``distill`` the distance term alone.
    """
    from .distillation import distance_and_grad  # local import to avoid a cycle

    if grad_loss not in GRAD_LOSSES:
        raise ValidationError(f"unknown gradient loss {grad_loss!r}")
    tokens = validate_token_batch(batch, student.table.size)
    logits, cache = model_forward(student, tokens)
    b = tokens.shape[0]
    dlogits = np.zeros_like(logits)
    if grad_loss in ("kd", "ce"):
        onehot = np.eye(student.n_classes)[np.asarray(labels, dtype=np.int64)]
        _, ce_grad = cross_entropy_rows(logits, onehot)
        dlogits += ce_grad / b
    if grad_loss in ("kd", "distill"):
        if teacher is None:
            raise ValidationError(f"gradient loss {grad_loss!r} needs a teacher model")
        teacher_logits, _ = model_forward(teacher, tokens)
        _, d_grad = distance_and_grad(logits, teacher_logits, distance)
        dlogits += d_grad / b
    _, demb = backward_to_embeddings(student.net, cache.net_cache, dlogits, tokens.shape[1])
    return cache.emb, demb


def augpro_fgsm(
    batch: np.ndarray,
    labels: np.ndarray,
    student: TokenModel,
    teacher: TokenModel,
    cfg: FgsmConfig,
    rng: np.random.Generator | None = None,
    grad_loss: str = "kd",
    distance: str = "ce",
    project_table: str = "teacher",
    similarity: str = "cosine",
    threads: int = 1,
) -> np.ndarray:
    """FGSM on the student's embeddings, then projection back to tokens."""
    emb, grad = fgsm_embedding_grad(batch, labels, student, teacher, grad_loss, distance)
    perturbed = fgsm_perturb(emb, grad, cfg, rng)
    table = teacher.table if project_table == "teacher" else student.table
    return project_to_tokens(perturbed, table, similarity=similarity, threads=threads)


def knn_replace(
    batch: np.ndarray,
    k: int,
    portion: float,
    table: EmbeddingTable,
    rng: np.random.Generator,
) -> np.ndarray:
    """Replace round(portion * L) tokens per sequence with random near neighbors."""
    if not 0.0 < portion <= 1.0:
        raise ValidationError(f"portion must be in (0, 1], got {portion}")
    tokens = validate_token_batch(batch, table.size).copy()
    length = tokens.shape[1]
    count = round(portion * length)
    if count == 0:
        return tokens
    neighbor_cache: dict[int, np.ndarray] = {}
    for row in tokens:
        positions = rng.choice(length, size=count, replace=False)
        for pos in positions:
            tok = int(row[pos])
            if tok not in neighbor_cache:
                neighbor_cache[tok] = knn_neighbors(table, tok, k)
            row[pos] = neighbor_cache[tok][rng.integers(k)]
    return tokens


def one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    idx = np.asarray(labels, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= n_classes):
        raise ValidationError(f"label out of range [0, {n_classes})")
    return np.eye(n_classes)[idx]


def soft_label_check(y: np.ndarray) -> np.ndarray:
    arr = np.asarray(y, dtype=np.float64)
    if arr.min() < 0.0 or abs(arr.sum() - 1.0) > 1e-12:
        raise ValidationError("soft label is not a probability vector")
    return arr


__all__ = [
    "MixupConfig",
    "FgsmConfig",
    "mixup_embed",
    "mixup_label",
    "fgsm_perturb",
    "pair_partners",
    "augpro_mix",
    "augpro_fgsm",
    "fgsm_embedding_grad",
    "knn_replace",
    "one_hot",
    "soft_label_check",
    "softmax",
]
