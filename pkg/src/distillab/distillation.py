"""Teacher training, augmentation losses, and the distillation loop.

One training step: sample a batch, build the augmented batches the recipe
asks for (projection and perturbation directions are frozen per step, so
the remaining objective is smooth in the student's parameters), compute the
distillation loss plus every augmentation loss, take one SGD step.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import nn
from .augment import (
    FgsmConfig,
    MixupConfig,
    augpro_mix,
    fgsm_embedding_grad,
    fgsm_perturb,
    knn_replace,
    mixup_embed,
    mixup_label,
    one_hot,
    pair_partners,
)
from .datagen import Dataset, draw_batch
from .embeddings import embed, validate_token_batch
from .errors import ValidationError
from .model import (
    ModelGrads,
    TokenModel,
    apply_sgd,
    backward_to_embeddings,
    config_hash,
    forward_from_embeddings,
    init_token_model,
    model_forward,
    scatter_token_grads,
    zero_grads,
)
from .nn import cross_entropy_rows, log_softmax, softmax
from .seeding import substream

DISTANCES = ("ce", "mse")
AUG_KINDS = ("none", "mixup", "fgsm", "augpro-mix", "augpro-fgsm", "knn")


@dataclass(frozen=True)
class AugSpec:
    """One entry of a distillation recipe."""

    kind: str
    lam: float = 0.5
    pairing: str = "shift-half"
    epsilon: float = 0.05
    sign_mode: str = "ascent"
    grad_loss: str = "kd"
    knn_k: int = 15
    knn_portion: float = 0.1

    def __post_init__(self) -> None:
        if self.kind not in AUG_KINDS:
            raise ValidationError(f"unknown augmentation kind {self.kind!r}")
        if self.kind in ("mixup", "augpro-mix"):
            MixupConfig(self.lam, self.pairing)
        if self.kind in ("fgsm", "augpro-fgsm"):
            FgsmConfig(self.epsilon, self.sign_mode)


@dataclass(frozen=True)
class TrainConfig:
    steps: int
    batch: int
    lr: float
    seed: int
    embed_dim: int = 16
    hidden: tuple[int, ...] = (64, 64)
    activation: str = "tanh"

    def __post_init__(self) -> None:
        if self.steps < 0 or self.batch < 1 or self.lr <= 0.0:
            raise ValidationError("need steps >= 0, batch >= 1, lr > 0")


@dataclass(frozen=True)
class DistillConfig:
    steps: int
    batch: int
    lr: float
    seed: int
    distance: str = "ce"
    recipe: tuple[AugSpec, ...] = ()
    embed_dim: int = 16
    hidden: tuple[int, ...] = (8,)
    activation: str = "tanh"
    combine: str = "sum"
    project_table: str = "teacher"
    similarity: str = "cosine"
    eval_every: int | None = None
    threads: int = 1

    def __post_init__(self) -> None:
        if self.steps < 0 or self.batch < 1 or self.lr <= 0.0:
            raise ValidationError("need steps >= 0, batch >= 1, lr > 0")
        if self.distance not in DISTANCES:
            raise ValidationError(f"unknown distance {self.distance!r}")
        if self.combine not in ("sum", "average"):
            raise ValidationError(f"unknown combine mode {self.combine!r}")
        if self.project_table not in ("teacher", "student"):
            raise ValidationError(f"unknown projection table {self.project_table!r}")


@dataclass
class MetricsRow:
    step: int
    split: str
    loss_kd: float
    loss_aug: float
    accuracy: float


def distance_and_grad(student_logits: np.ndarray, teacher_logits: np.ndarray, kind: str) -> tuple[np.ndarray, np.ndarray]:
    """Per-row distance values and gradients w.r.t. the student logits.

    ``ce`` treats the teacher softmax as a soft target; ``mse`` compares raw
    logits. Gradients are per-row (callers divide by the batch size).
    """
    s = np.asarray(student_logits, dtype=np.float64)
    t = np.asarray(teacher_logits, dtype=np.float64)
    if s.shape != t.shape:
        raise ValidationError(f"logit shape mismatch: {s.shape} vs {t.shape}")
    if kind == "ce":
        p_t = softmax(t)
        values = -(p_t * log_softmax(s)).sum(axis=-1)
        return values, softmax(s) - p_t
    if kind == "mse":
        diff = s - t
        return (diff * diff).mean(axis=-1), 2.0 * diff / s.shape[-1]
    raise ValidationError(f"unknown distance {kind!r}")


def kd_loss(student_logits: np.ndarray, teacher_logits: np.ndarray, hard_label: int, d: str = "ce") -> float:
    """Hard-label CE plus the student/teacher distance, for one example."""
    s = np.asarray(student_logits, dtype=np.float64)
    if not 0 <= int(hard_label) < s.shape[-1]:
        raise ValidationError(f"label {hard_label} out of range for {s.shape[-1]} classes")
    ce, _ = nn.cross_entropy(s, one_hot(np.asarray([hard_label]), s.shape[-1])[0])
    values, _ = distance_and_grad(s[None, :], np.asarray(teacher_logits)[None, :], d)
    return float(ce + values[0])


@dataclass
class EmbeddingTerm:
    """One differentiated loss branch evaluated from explicit embeddings."""

    loss: float
    net_grads: list[tuple[np.ndarray, np.ndarray]]
    demb: np.ndarray  # gradient w.r.t. the (M, L, H) student-side embeddings


def embedding_term(
    student_net: nn.ClassifierNet,
    emb: np.ndarray,
    teacher_logits: np.ndarray,
    d: str,
    hard_targets: np.ndarray | None = None,
) -> EmbeddingTerm:
    """mean_j [CE(g(e_j), y_j)] (if targets given) + mean_j d(g(e_j), f_j).

    The shared core of every loss branch: the KD term, both backbones, and
    the projected/replaced token batches (after embedding them).
    """
    m = emb.shape[0]
    logits, cache = forward_from_embeddings(student_net, emb)
    d_values, d_grad = distance_and_grad(logits, teacher_logits, d)
    loss = float(d_values.mean())
    dlogits = d_grad / m
    if hard_targets is not None:
        ce_values, ce_grad = cross_entropy_rows(logits, hard_targets)
        loss += float(ce_values.mean())
        dlogits = dlogits + ce_grad / m
    net_grads, demb = backward_to_embeddings(student_net, cache, dlogits, emb.shape[1])
    return EmbeddingTerm(loss=loss, net_grads=net_grads, demb=demb)


def aug_loss_mixup(
    mixed_student_emb: np.ndarray,
    mixed_teacher_emb: np.ndarray,
    mixed_labels: np.ndarray,
    teacher: TokenModel,
    student: TokenModel,
    d: str = "ce",
) -> float:
    """Backbone MixUp loss: CE against the mixed label plus the teacher distance."""
    teacher_logits, _ = forward_from_embeddings(teacher.net, mixed_teacher_emb)
    term = embedding_term(student.net, mixed_student_emb, teacher_logits, d, np.asarray(mixed_labels, dtype=np.float64))
    return term.loss


def aug_loss_fgsm(
    perturbed_student_emb: np.ndarray,
    clean_teacher_emb: np.ndarray,
    teacher: TokenModel,
    student: TokenModel,
    d: str = "ce",
) -> float:
    """Backbone FGSM loss: distance only; the teacher sees clean embeddings."""
    teacher_logits, _ = forward_from_embeddings(teacher.net, clean_teacher_emb)
    term = embedding_term(student.net, perturbed_student_emb, teacher_logits, d)
    return term.loss


def aug_loss_augpro(aug_tokens: np.ndarray, teacher: TokenModel, student: TokenModel, d: str = "ce") -> float:
    """Projected-batch loss: mean teacher distance, no ground-truth CE term."""
    tokens = validate_token_batch(aug_tokens, student.table.size)
    teacher_logits, _ = model_forward(teacher, tokens)
    emb = embed(student.table, tokens)
    term = embedding_term(student.net, emb, teacher_logits, d)
    return term.loss


@dataclass
class Artifact:
    """Per-step augmentation inputs, frozen before the differentiable pass."""

    kind: str
    tokens: np.ndarray | None = None  # (B, L) for token-level batches
    partner: np.ndarray | None = None  # mixup pairing
    lam: float = 0.5
    soft_labels: np.ndarray | None = None  # (B, C) mixed labels
    delta: np.ndarray | None = None  # (B, L, H) fgsm perturbation


def build_artifacts(
    student: TokenModel,
    teacher: TokenModel,
    tokens: np.ndarray,
    labels: np.ndarray,
    cfg: DistillConfig,
    step: int,
) -> list[Artifact]:
    artifacts: list[Artifact] = []
    seen_kinds: dict[str, int] = {}
    for spec in cfg.recipe:
        occurrence = seen_kinds.get(spec.kind, 0)
        seen_kinds[spec.kind] = occurrence + 1
        rng = substream(cfg.seed, "aug", step, spec.kind, occurrence)
        if spec.kind == "none":
            artifacts.append(Artifact(kind="none"))
        elif spec.kind == "mixup":
            partner = pair_partners(tokens.shape[0], spec.pairing, rng)
            hot = one_hot(labels, student.n_classes)
            soft = mixup_label(hot, hot[partner], spec.lam)
            artifacts.append(Artifact(kind="mixup", partner=partner, lam=spec.lam, soft_labels=soft))
        elif spec.kind == "augpro-mix":
            partner = pair_partners(tokens.shape[0], spec.pairing, rng)
            e = embed(teacher.table, tokens)
            mixed = mixup_embed(e, e[partner], spec.lam)
            from .embeddings import project_to_tokens

            aug = project_to_tokens(mixed, teacher.table, similarity=cfg.similarity, threads=cfg.threads)
            artifacts.append(Artifact(kind="augpro-mix", tokens=aug))
        elif spec.kind in ("fgsm", "augpro-fgsm"):
            emb, grad = fgsm_embedding_grad(tokens, labels, student, teacher, spec.grad_loss, cfg.distance)
            fgsm_cfg = FgsmConfig(spec.epsilon, spec.sign_mode)
            delta = fgsm_perturb(np.zeros_like(emb), grad, fgsm_cfg, rng)
            if spec.kind == "fgsm":
                artifacts.append(Artifact(kind="fgsm", delta=delta))
            else:
                from .embeddings import project_to_tokens

                table = teacher.table if cfg.project_table == "teacher" else student.table
                aug = project_to_tokens(emb + delta, table, similarity=cfg.similarity, threads=cfg.threads)
                artifacts.append(Artifact(kind="augpro-fgsm", tokens=aug))
        elif spec.kind == "knn":
            aug = knn_replace(tokens, spec.knn_k, spec.knn_portion, student.table, rng)
            artifacts.append(Artifact(kind="knn", tokens=aug))
        else:  # pragma: no cover - AugSpec already validated
            raise ValidationError(f"unknown augmentation kind {spec.kind!r}")
    return artifacts


def step_losses_and_grads(
    student: TokenModel,
    teacher: TokenModel,
    tokens: np.ndarray,
    labels: np.ndarray,
    artifacts: list[Artifact],
    cfg: DistillConfig,
) -> tuple[float, float, ModelGrads]:
    """L_KD plus the recipe's augmentation losses, with full student grads."""
    grads = zero_grads(student)
    hot = one_hot(labels, student.n_classes)

    teacher_logits, _ = model_forward(teacher, tokens)
    emb_clean = embed(student.table, tokens)
    kd = embedding_term(student.net, emb_clean, teacher_logits, cfg.distance, hot)
    for (dw, db), (gw, gb) in zip(grads.net, kd.net_grads):
        dw += gw
        db += gb
    scatter_token_grads(grads.table, tokens, kd.demb)

    active = [a for a in artifacts if a.kind != "none"]
    aug_scale = 1.0 if cfg.combine == "sum" or not active else 1.0 / len(active)
    loss_aug = 0.0
    for art in active:
        if art.kind == "mixup":
            e = embed(student.table, tokens)
            emb_s = mixup_embed(e, e[art.partner], art.lam)
            e_t = embed(teacher.table, tokens)
            t_logits, _ = forward_from_embeddings(teacher.net, mixup_embed(e_t, e_t[art.partner], art.lam))
            term = embedding_term(student.net, emb_s, t_logits, cfg.distance, art.soft_labels)
            scatter_token_grads(grads.table, tokens, term.demb, aug_scale * art.lam)
            scatter_token_grads(grads.table, tokens[art.partner], term.demb, aug_scale * (1.0 - art.lam))
        elif art.kind == "fgsm":
            emb_s = embed(student.table, tokens) + art.delta
            term = embedding_term(student.net, emb_s, teacher_logits, cfg.distance)
            scatter_token_grads(grads.table, tokens, term.demb, aug_scale)
        else:  # token-level batches: augpro-mix, augpro-fgsm, knn
            t_logits, _ = model_forward(teacher, art.tokens)
            emb_s = embed(student.table, art.tokens)
            targets = hot if art.kind == "knn" else None
            term = embedding_term(student.net, emb_s, t_logits, cfg.distance, targets)
            scatter_token_grads(grads.table, art.tokens, term.demb, aug_scale)
        loss_aug += aug_scale * term.loss
        for (dw, db), (gw, gb) in zip(grads.net, term.net_grads):
            dw += aug_scale * gw
            db += aug_scale * gb
    return kd.loss, loss_aug, grads


def evaluate(model: TokenModel, data: Dataset) -> float:
    """Fraction of argmax-correct predictions."""
    if len(data) == 0:
        raise ValidationError("cannot evaluate on an empty dataset")
    logits, _ = model_forward(model, data.tokens)
    return float((logits.argmax(axis=1) == data.labels).mean())


def train_teacher(data: Dataset, cfg: TrainConfig) -> TokenModel:
    """K steps of SGD on mean cross-entropy over the labeled data."""
    if len(data) == 0:
        raise ValidationError("teacher training needs a non-empty dataset")
    vocab_size = int(data.meta.get("z", int(data.tokens.max()) + 1))
    n_classes = int(data.meta.get("c", int(data.labels.max()) + 1))
    model = init_token_model(
        substream(cfg.seed, "init", "teacher"),
        vocab_size,
        cfg.embed_dim,
        cfg.hidden,
        n_classes,
        owner="teacher",
        activation=cfg.activation,
    )
    for step in range(cfg.steps):
        tokens, labels = draw_batch(data, min(cfg.batch, len(data)), cfg.seed, step)
        logits, cache = model_forward(model, tokens)
        values, grad_rows = cross_entropy_rows(logits, one_hot(labels, n_classes))
        grads, _ = _model_grads_from_dlogits(model, cache, grad_rows / tokens.shape[0])
        model = apply_sgd(model, grads, cfg.lr)
    model.meta = {"seed": cfg.seed, "config_hash": config_hash(cfg.__dict__), "role": "teacher"}
    return model


def _model_grads_from_dlogits(model: TokenModel, cache, dlogits: np.ndarray):
    from .model import model_backward

    return model_backward(model, cache, dlogits)


def distill(
    teacher: TokenModel,
    data: Dataset,
    cfg: DistillConfig,
    eval_data: Dataset | None = None,
) -> tuple[TokenModel, list[MetricsRow]]:
    """Algorithm: sample batch, build augmented batches, descend on KD + Aug."""
    if len(data) == 0:
        raise ValidationError("distillation needs a non-empty dataset")
    vocab_size = teacher.table.size
    student = init_token_model(
        substream(cfg.seed, "init", "student"),
        vocab_size,
        cfg.embed_dim,
        cfg.hidden,
        teacher.n_classes,
        owner="student",
        activation=cfg.activation,
    )
    every = cfg.eval_every if cfg.eval_every is not None else max(1, cfg.steps // 50)
    rows: list[MetricsRow] = []
    last_kd, last_aug = float("nan"), float("nan")

    def record(step: int) -> None:
        rows.append(MetricsRow(step, "train", last_kd, last_aug, evaluate(student, data)))
        if eval_data is not None:
            rows.append(MetricsRow(step, "test", last_kd, last_aug, evaluate(student, eval_data)))

    for step in range(cfg.steps):
        tokens, labels = draw_batch(data, min(cfg.batch, len(data)), cfg.seed, step)
        artifacts = build_artifacts(student, teacher, tokens, labels, cfg, step)
        last_kd, last_aug, grads = step_losses_and_grads(student, teacher, tokens, labels, artifacts, cfg)
        student = apply_sgd(student, grads, cfg.lr)
        if (step + 1) % every == 0 and step + 1 != cfg.steps:
            record(step + 1)
    record(cfg.steps)
    student.meta = {"seed": cfg.seed, "config_hash": config_hash(str(cfg)), "role": "student"}
    return student, rows


def full_objective(
    student: TokenModel,
    teacher: TokenModel,
    tokens: np.ndarray,
    labels: np.ndarray,
    artifacts: list[Artifact],
    cfg: DistillConfig,
) -> float:
    """KD + Aug loss for fixed artifacts; the target of the gradient checks."""
    loss_kd, loss_aug, _ = step_losses_and_grads(student, teacher, tokens, labels, artifacts, cfg)
    return loss_kd + loss_aug


def metrics_rows_as_lists(rows: list[MetricsRow]) -> list[list[object]]:
    return [[r.step, r.split, r.loss_kd, r.loss_aug, r.accuracy] for r in rows]


METRICS_HEADER = ["step", "split", "loss_kd", "loss_aug", "accuracy"]
