"""Dense feed-forward classifiers with hand-derived forward/backward passes.

Everything is float64. The API is functional: ``forward`` returns a cache
that ``backward`` consumes, and ``sgd_step`` returns fresh arrays instead of
mutating, which lets a cache detect that it no longer matches the net it
was produced from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

MODEL_FORMAT_VERSION = 1

ACTIVATIONS = ("tanh", "relu", "identity")


def as_matrix(name: str, arr: object, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Validate a 2-D float64 array with finite entries."""
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim != 2:
        raise ValidationError(f"{name}: expected a 2-D array, got shape {a.shape}")
    if rows is not None and a.shape[0] != rows:
        raise ValidationError(f"{name}: expected {rows} rows, got {a.shape[0]}")
    if cols is not None and a.shape[1] != cols:
        raise ValidationError(f"{name}: expected {cols} cols, got {a.shape[1]}")
    if not np.isfinite(a).all():
        raise ValidationError(f"{name}: non-finite entries")
    return a


def _apply_activation(name: str, z: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "identity":
        return z
    raise ValidationError(f"unknown activation {name!r}")


def _activation_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    # Derivative expressed from whichever of (z, a) is cheaper.
    if name == "tanh":
        return 1.0 - a * a
    if name == "relu":
        return (z > 0.0).astype(np.float64)
    if name == "identity":
        return np.ones_like(z)
    raise ValidationError(f"unknown activation {name!r}")


@dataclass
class Layer:
    weight: np.ndarray  # (fan_in, fan_out)
    bias: np.ndarray  # (fan_out,)
    activation: str = "tanh"

    def __post_init__(self) -> None:
        self.weight = as_matrix("layer weight", self.weight)
        bias = np.asarray(self.bias, dtype=np.float64)
        if bias.ndim != 1 or bias.shape[0] != self.weight.shape[1]:
            raise ValidationError(
                f"layer bias shape {bias.shape} does not match weight {self.weight.shape}"
            )
        if not np.isfinite(bias).all():
            raise ValidationError("layer bias: non-finite entries")
        self.bias = bias
        if self.activation not in ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.activation!r}")


@dataclass
class ClassifierNet:
    """A stack of dense layers; the last layer's width is the class count."""

    layers: list[Layer]

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValidationError("net needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.weight.shape[1] != nxt.weight.shape[0]:
                raise ValidationError(
                    f"layer widths do not chain: {prev.weight.shape} -> {nxt.weight.shape}"
                )

    @property
    def in_dim(self) -> int:
        return self.layers[0].weight.shape[0]

    @property
    def n_classes(self) -> int:
        return self.layers[-1].weight.shape[1]

    def params(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for layer in self.layers:
            out.append(layer.weight)
            out.append(layer.bias)
        return out

    def with_params(self, params: list[np.ndarray]) -> "ClassifierNet":
        if len(params) != 2 * len(self.layers):
            raise ValidationError("wrong number of parameter arrays")
        layers = []
        for i, layer in enumerate(self.layers):
            layers.append(Layer(params[2 * i], params[2 * i + 1], layer.activation))
        return ClassifierNet(layers)


@dataclass
class ForwardCache:
    """Per-layer pre-activations/activations retained for exact backprop."""

    net: ClassifierNet
    inputs: np.ndarray  # (B, in_dim)
    pre: list[np.ndarray] = field(default_factory=list)
    act: list[np.ndarray] = field(default_factory=list)


def init_net(rng: np.random.Generator, dims: list[int], hidden_activation: str = "tanh") -> ClassifierNet:
    """Seeded net with uniform(+-1/sqrt(fan_in)) weights; identity output layer."""
    if len(dims) < 2:
        raise ValidationError("dims must list input width, hidden widths, class count")
    layers = []
    for i in range(len(dims) - 1):
        fan_in, fan_out = dims[i], dims[i + 1]
        scale = 1.0 / math.sqrt(fan_in)
        weight = rng.uniform(-scale, scale, size=(fan_in, fan_out))
        bias = np.zeros(fan_out)
        activation = hidden_activation if i < len(dims) - 2 else "identity"
        layers.append(Layer(weight, bias, activation))
    return ClassifierNet(layers)


def forward(net: ClassifierNet, pooled: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Run the net on a (B, in_dim) batch; returns logits and a backprop cache."""
    x = as_matrix("pooled input", pooled, cols=net.in_dim)
    cache = ForwardCache(net=net, inputs=x)
    a = x
    for layer in net.layers:
        z = a @ layer.weight + layer.bias
        a = _apply_activation(layer.activation, z)
        cache.pre.append(z)
        cache.act.append(a)
    return a, cache


def backward(
    net: ClassifierNet, cache: ForwardCache, dlogits: np.ndarray
) -> tuple[list[tuple[np.ndarray, np.ndarray]], np.ndarray]:
    """Exact gradients of the scalar loss whose logit-gradient is ``dlogits``.

    Returns per-layer (dW, db) pairs plus the gradient with respect to the
    net's input batch.
    """
    if cache.net is not net:
        raise ValidationError("cache was produced by a different net (stale cache)")
    if len(cache.pre) != len(net.layers):
        raise ValidationError("cache depth does not match net")
    g = as_matrix("dlogits", dlogits, rows=cache.inputs.shape[0], cols=net.n_classes)
    param_grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(net.layers)  # type: ignore
    delta = g
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        dz = delta * _activation_grad(layer.activation, cache.pre[i], cache.act[i])
        below = cache.inputs if i == 0 else cache.act[i - 1]
        param_grads[i] = (below.T @ dz, dz.sum(axis=0))
        delta = dz @ layer.weight.T
    return param_grads, delta


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise log-softmax, stabilized by max subtraction."""
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


def cross_entropy(logits: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """CE of a single logit vector against a probability vector.

    Returns (loss, dloss/dlogits); the gradient is softmax(logits) - target.
    """
    z = np.asarray(logits, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if z.ndim != 1 or t.shape != z.shape:
        raise ValidationError(f"logits/target must be equal-length vectors, got {z.shape} vs {t.shape}")
    if t.min() < 0.0 or abs(t.sum() - 1.0) > 1e-9:
        raise ValidationError("target is not a probability vector")
    logp = log_softmax(z)
    loss = float(-(t * logp).sum())
    return loss, np.exp(logp) - t


def cross_entropy_rows(logits: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise CE values and per-row gradients (softmax - target), unscaled."""
    z = as_matrix("logits", logits)
    t = as_matrix("targets", targets, rows=z.shape[0], cols=z.shape[1])
    logp = log_softmax(z)
    return -(t * logp).sum(axis=1), np.exp(logp) - t


def mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared difference of two equal-length vectors."""
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape:
        raise ValidationError(f"length mismatch: {x.shape} vs {y.shape}")
    d = x - y
    return float((d * d).mean())


def sgd_step(params: list[np.ndarray], grads: list[np.ndarray], lr: float) -> list[np.ndarray]:
    """One gradient-descent update; returns fresh arrays."""
    if lr <= 0.0:
        raise ValidationError(f"learning rate must be positive, got {lr}")
    if len(params) != len(grads):
        raise ValidationError("param/grad count mismatch")
    out = []
    for p, g in zip(params, grads):
        ga = np.asarray(g, dtype=np.float64)
        if ga.shape != p.shape:
            raise ValidationError(f"param/grad shape mismatch: {p.shape} vs {ga.shape}")
        out.append(p - lr * ga)
    return out


def relative_errors(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    a = np.asarray(analytic, dtype=np.float64).ravel()
    b = np.asarray(numeric, dtype=np.float64).ravel()
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-6)
    return np.abs(a - b) / denom


def _ce_loss_of(net: ClassifierNet, inputs: np.ndarray, targets: np.ndarray) -> float:
    logits, _ = forward(net, inputs)
    values, _ = cross_entropy_rows(logits, targets)
    return float(values.mean())


def grad_check(net: ClassifierNet, batch: tuple[np.ndarray, np.ndarray], h: float) -> float:
    """Max relative error of backward() vs central differences.

    Checks every parameter entry and every entry of the input batch for the
    mean-CE loss on ``batch = (inputs, target_rows)``.
    """
    if not (0.0 < h <= 1e-3):
        raise ValidationError(f"step size h must be in (0, 1e-3], got {h}")
    inputs, targets = batch
    inputs = as_matrix("inputs", inputs, cols=net.in_dim)
    targets = as_matrix("targets", targets, rows=inputs.shape[0], cols=net.n_classes)

    logits, cache = forward(net, inputs)
    values, grad_rows = cross_entropy_rows(logits, targets)
    dlogits = grad_rows / inputs.shape[0]
    param_grads, input_grads = backward(net, cache, dlogits)

    analytic: list[np.ndarray] = []
    for dw, db in param_grads:
        analytic.extend([dw.ravel(), db.ravel()])
    analytic.append(input_grads.ravel())

    numeric: list[np.ndarray] = []
    arrays = net.params() + [inputs]
    for arr in arrays:
        flat = arr.ravel()
        num = np.empty_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = _ce_loss_of(net, inputs, targets)
            flat[i] = orig - h
            down = _ce_loss_of(net, inputs, targets)
            flat[i] = orig
            num[i] = (up - down) / (2.0 * h)
        numeric.append(num)

    worst = 0.0
    for a, b in zip(analytic, numeric):
        worst = max(worst, float(relative_errors(a, b).max()))
    return worst


def net_to_dict(net: ClassifierNet) -> dict:
    dims = [net.in_dim] + [layer.weight.shape[1] for layer in net.layers]
    return {
        "version": MODEL_FORMAT_VERSION,
        "dims": dims,
        "layers": [
            {
                "activation": layer.activation,
                "weight": layer.weight.tolist(),
                "bias": layer.bias.tolist(),
            }
            for layer in net.layers
        ],
    }


def net_from_dict(obj: dict) -> ClassifierNet:
    if obj.get("version") != MODEL_FORMAT_VERSION:
        raise ValidationError(f"unsupported net format version {obj.get('version')!r}")
    dims = obj["dims"]
    layers = []
    for i, layer in enumerate(obj["layers"]):
        weight = as_matrix("stored weight", layer["weight"], rows=dims[i], cols=dims[i + 1])
        layers.append(Layer(weight, np.asarray(layer["bias"], dtype=np.float64), layer["activation"]))
    return ClassifierNet(layers)
