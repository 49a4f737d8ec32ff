"""Token classifier = embedding table -> mean pooling -> dense net.

Mean pooling keeps per-token embedding gradients well-defined: every token
position receives 1/L of the pooled gradient.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .embeddings import EmbeddingTable, embed, init_embedding_table, table_from_dict, table_to_dict
from .errors import ValidationError
from .io_utils import atomic_write_json, read_json
from .nn import ClassifierNet, ForwardCache


@dataclass
class TokenModel:
    table: EmbeddingTable
    net: ClassifierNet
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.table.dim != self.net.in_dim:
            raise ValidationError(
                f"embedding dim {self.table.dim} does not match net input {self.net.in_dim}"
            )

    @property
    def n_classes(self) -> int:
        return self.net.n_classes


@dataclass
class ModelCache:
    tokens: np.ndarray
    emb: np.ndarray  # (B, L, H)
    net_cache: ForwardCache


@dataclass
class ModelGrads:
    table: np.ndarray  # (Z, H)
    net: list[tuple[np.ndarray, np.ndarray]]

    def add(self, other: "ModelGrads", scale: float = 1.0) -> None:
        self.table += scale * other.table
        for (dw, db), (ow, ob) in zip(self.net, other.net):
            dw += scale * ow
            db += scale * ob


def zero_grads(model: TokenModel) -> ModelGrads:
    return ModelGrads(
        table=np.zeros_like(model.table.table),
        net=[(np.zeros_like(l.weight), np.zeros_like(l.bias)) for l in model.net.layers],
    )


def init_token_model(
    rng: np.random.Generator,
    vocab_size: int,
    embed_dim: int,
    hidden: tuple[int, ...],
    n_classes: int,
    owner: str,
    activation: str = "tanh",
) -> TokenModel:
    table = init_embedding_table(rng, vocab_size, embed_dim, owner=owner)
    net = nn.init_net(rng, [embed_dim, *hidden, n_classes], hidden_activation=activation)
    return TokenModel(table=table, net=net)


def pool_embeddings(emb: np.ndarray) -> np.ndarray:
    if emb.ndim != 3:
        raise ValidationError(f"embeddings must be (B, L, H), got shape {emb.shape}")
    return emb.mean(axis=1)


def forward_from_embeddings(net: ClassifierNet, emb: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    return nn.forward(net, pool_embeddings(emb))


def backward_to_embeddings(
    net: ClassifierNet, cache: ForwardCache, dlogits: np.ndarray, length: int
) -> tuple[list[tuple[np.ndarray, np.ndarray]], np.ndarray]:
    """Net parameter grads plus the gradient w.r.t. the (B, L, H) embeddings."""
    net_grads, dpooled = nn.backward(net, cache, dlogits)
    demb = np.repeat(dpooled[:, None, :] / length, length, axis=1)
    return net_grads, demb


def model_forward(model: TokenModel, tokens: np.ndarray) -> tuple[np.ndarray, ModelCache]:
    emb = embed(model.table, tokens)
    logits, net_cache = forward_from_embeddings(model.net, emb)
    return logits, ModelCache(tokens=np.asarray(tokens, dtype=np.int64), emb=emb, net_cache=net_cache)


def scatter_token_grads(table_grad: np.ndarray, tokens: np.ndarray, demb: np.ndarray, scale: float = 1.0) -> None:
    """Accumulate per-position embedding grads into their table rows."""
    flat = (scale * demb).reshape(-1, demb.shape[-1])
    np.add.at(table_grad, np.asarray(tokens, dtype=np.int64).ravel(), flat)


def model_backward(model: TokenModel, cache: ModelCache, dlogits: np.ndarray) -> tuple[ModelGrads, np.ndarray]:
    """Full-model grads (table + net) and the embedding-activation gradient."""
    net_grads, demb = backward_to_embeddings(model.net, cache.net_cache, dlogits, cache.emb.shape[1])
    table_grad = np.zeros_like(model.table.table)
    scatter_token_grads(table_grad, cache.tokens, demb)
    return ModelGrads(table=table_grad, net=net_grads), demb


def apply_sgd(model: TokenModel, grads: ModelGrads, lr: float) -> TokenModel:
    flat_params = [model.table.table] + model.net.params()
    flat_grads = [grads.table]
    for dw, db in grads.net:
        flat_grads.extend([dw, db])
    updated = nn.sgd_step(flat_params, flat_grads, lr)
    table = EmbeddingTable(updated[0], owner=model.table.owner)
    return TokenModel(table=table, net=model.net.with_params(updated[1:]), meta=model.meta)


def flatten_params(model: TokenModel) -> list[np.ndarray]:
    """All trainable arrays (table first). Mutating them mutates the model."""
    return [model.table.table] + model.net.params()


def flatten_grads(grads: ModelGrads) -> list[np.ndarray]:
    out = [grads.table]
    for dw, db in grads.net:
        out.extend([dw, db])
    return out


def config_hash(obj: object) -> str:
    blob = json.dumps(obj, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def model_to_dict(model: TokenModel) -> dict:
    return {
        "version": nn.MODEL_FORMAT_VERSION,
        "kind": "token-classifier",
        "table": table_to_dict(model.table),
        "net": nn.net_to_dict(model.net),
        "meta": model.meta,
    }


def model_from_dict(obj: dict) -> TokenModel:
    if obj.get("kind") != "token-classifier":
        raise ValidationError(f"not a token-classifier file: kind={obj.get('kind')!r}")
    return TokenModel(
        table=table_from_dict(obj["table"]),
        net=nn.net_from_dict(obj["net"]),
        meta=obj.get("meta", {}),
    )


def save_model(model: TokenModel, path: str) -> None:
    atomic_write_json(path, model_to_dict(model))


def load_model(path: str) -> TokenModel:
    obj = read_json(path)
    if not isinstance(obj, dict):
        raise ValidationError(f"{path}: not a model file")
    return model_from_dict(obj)
