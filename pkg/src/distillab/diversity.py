"""Monte Carlo study of distinct-coverage gains on the +-1 hypercube.

Universe: {-1, +1}^(2 log2 n), so |universe| = n^2 and a training set of n
uniform draws leaves most of the space unseen. The two augmented-set
constructions measure how much new coverage each augmentation style adds:

* mix: pair consecutive training points; agreeing coordinates are copied,
  disagreeing ones re-drawn uniformly (one new point per pair).
* fgsm: add N(0, 4) noise to every coordinate and snap back to +-1 via the
  sign (one new point per training point).

The estimators report the distinct-cardinality ratio of the augmented set to
the training set and the normalized generalization-error gap, both of which
have known large-n limits (3/2 and 2 for the ratios, 1 for the gaps).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .seeding import substream

VARIANTS = ("mix", "fgsm")


@dataclass(frozen=True)
class HypercubeConfig:
    n: int
    trials: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 2 or self.n & (self.n - 1) != 0:
            raise ValidationError(f"n must be a power of two >= 2, got {self.n}")
        if self.trials < 1:
            raise ValidationError(f"trials must be >= 1, got {self.trials}")

    @property
    def dim(self) -> int:
        return 2 * (self.n.bit_length() - 1)


def sample_training_set(cfg: HypercubeConfig, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. uniform +-1 vectors, duplicates retained; shape (n, dim)."""
    return (rng.integers(0, 2, size=(cfg.n, cfg.dim), dtype=np.int8) * 2 - 1).astype(np.int8)


def construct_mix_aug(points: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One point per consecutive pair: copy agreements, re-draw disagreements."""
    pts = np.asarray(points)
    if pts.shape[0] % 2 != 0:
        raise ValidationError(f"pair construction needs an even count, got {pts.shape[0]}")
    a = pts[0::2]
    b = pts[1::2]
    fresh = (rng.integers(0, 2, size=a.shape, dtype=np.int8) * 2 - 1).astype(np.int8)
    return np.where(a == b, a, fresh)


def construct_fgsm_aug(points: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Add N(0, variance 4) per coordinate and snap back to +-1 (0 maps to +1)."""
    pts = np.asarray(points, dtype=np.float64)
    noisy = pts + rng.normal(0.0, 2.0, size=pts.shape)
    return np.where(noisy >= 0.0, 1, -1).astype(np.int8)


def pack_rows(points: np.ndarray) -> np.ndarray:
    """Pack +-1 rows into machine words (dim <= 62)."""
    pts = np.asarray(points)
    dim = pts.shape[1]
    if dim > 62:
        raise ValidationError(f"dimension {dim} exceeds word packing limit")
    weights = (np.int64(1) << np.arange(dim, dtype=np.int64))
    return (pts > 0).astype(np.int64) @ weights


def distinct_count(points: np.ndarray) -> int:
    """Number of distinct rows (hash-based on packed words)."""
    if len(points) == 0:
        return 0
    return len(set(pack_rows(points).tolist()))


def run_trials(cfg: HypercubeConfig, variant: str, threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Per-trial distinct counts of the training set and the augmented union.

    Each trial is seeded from (master seed, trial index), so any level of
    parallelism returns identical results.
    """
    if variant not in VARIANTS:
        raise ValidationError(f"unknown variant {variant!r}")
    train_counts = np.zeros(cfg.trials, dtype=np.int64)
    aug_counts = np.zeros(cfg.trials, dtype=np.int64)

    def run_span(start: int, stop: int) -> None:
        for t in range(start, stop):
            rng = substream(cfg.seed, "trial", t)
            points = sample_training_set(cfg, rng)
            extra = construct_mix_aug(points, rng) if variant == "mix" else construct_fgsm_aug(points, rng)
            packed_train = pack_rows(points)
            train_set = set(packed_train.tolist())
            train_counts[t] = len(train_set)
            aug_counts[t] = len(train_set | set(pack_rows(extra).tolist()))

    if threads > 1 and cfg.trials > 1:
        chunk = (cfg.trials + threads - 1) // threads
        spans = [(s, min(s + chunk, cfg.trials)) for s in range(0, cfg.trials, chunk)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for f in [pool.submit(run_span, a, b) for a, b in spans]:
                f.result()
    else:
        run_span(0, cfg.trials)
    return train_counts, aug_counts


def _mean_ci95(values: np.ndarray) -> tuple[float, tuple[float, float]]:
    mean = float(values.mean())
    half = 1.96 * float(values.std(ddof=1)) / math.sqrt(len(values)) if len(values) > 1 else 0.0
    return mean, (mean - half, mean + half)


def gap_factor(n: int, variant: str) -> float:
    # error(set) = 1/2 - E[|set|] / (2 n^2); the gap is normalized by its
    # limiting scale: 1/(4n) for mix, 1/(2n) for fgsm.
    scale = 4.0 * n if variant == "mix" else 2.0 * n
    return scale / (2.0 * n * n)


def estimate_ratio(
    cfg: HypercubeConfig, variant: str, threads: int = 1,
    counts: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[float, tuple[float, float]]:
    """Mean distinct-cardinality ratio |augmented| / |train| with 95% CI."""
    train, aug = counts if counts is not None else run_trials(cfg, variant, threads)
    return _mean_ci95(aug / train)


def estimate_error_gap(
    cfg: HypercubeConfig, variant: str, threads: int = 1,
    counts: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[float, tuple[float, float]]:
    """Normalized generalization-error gap between train-only and augmented."""
    train, aug = counts if counts is not None else run_trials(cfg, variant, threads)
    return _mean_ci95((aug - train) * gap_factor(cfg.n, variant))


def exact_expected_distinct(n: int) -> float:
    """E[|training set|] = n^2 (1 - (1 - 1/n^2)^n), by inclusion-exclusion."""
    universe = float(n) * float(n)
    return universe * -math.expm1(n * math.log1p(-1.0 / universe))


def exact_train_error(n: int) -> float:
    return 0.5 - exact_expected_distinct(n) / (2.0 * n * n)


def sim_summary(cfg: HypercubeConfig, variant: str, threads: int = 1) -> dict:
    """Single-pass summary used by the CLI: ratios and gaps from one trial set."""
    counts = run_trials(cfg, variant, threads)
    mean_ratio, ratio_ci = estimate_ratio(cfg, variant, counts=counts)
    gap, gap_ci = estimate_error_gap(cfg, variant, counts=counts)
    return {
        "variant": variant,
        "n": cfg.n,
        "trials": cfg.trials,
        "mean_ratio": mean_ratio,
        "ratio_ci95": list(ratio_ci),
        "normalized_gap": gap,
        "gap_ci95": list(gap_ci),
        "exact_E_train": exact_expected_distinct(cfg.n),
    }
