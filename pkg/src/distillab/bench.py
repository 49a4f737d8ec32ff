"""Wall-clock scaling of the projection kernel across vocabulary sizes.

The kernel's work is one (B*L, H) x (H, Z) score product plus an argmax, so
doubling Z should roughly double the median time; the bench records medians
so the linearity claim can be checked from the CSV.
"""

from __future__ import annotations

import math
import statistics
import time

from .embeddings import init_embedding_table, project_to_tokens
from .errors import ValidationError
from .seeding import substream


def _oracle_spot_check(seed: int) -> None:
    # Tiny pure-Python argmax oracle; guards against timing a wrong kernel.
    rng = substream(seed, "bench", "spot")
    table = init_embedding_table(rng, 17, 5)
    reps = rng.normal(size=(2, 3, 5))
    got = project_to_tokens(reps, table)
    norms = [math.sqrt(sum(v * v for v in row)) for row in table.table.tolist()]
    for i in range(2):
        for j in range(3):
            q = reps[i, j].tolist()
            best, best_score = 0, -math.inf
            for w, row in enumerate(table.table.tolist()):
                score = sum(a * b for a, b in zip(q, row)) / norms[w]
                if score > best_score:
                    best, best_score = w, score
            if got[i, j] != best:
                raise ValidationError("projection kernel disagrees with the oracle")


def bench_projection(
    vocab_sizes: list[int],
    batch: int = 64,
    length: int = 32,
    dim: int = 32,
    reps: int = 5,
    seed: int = 0,
    threads: int = 1,
) -> list[dict]:
    """Median projection time per vocabulary size; one result row per Z."""
    if not vocab_sizes:
        raise ValidationError("need at least one vocabulary size")
    if reps < 1:
        raise ValidationError("need at least one repetition")
    _oracle_spot_check(seed)
    rows = []
    for z in vocab_sizes:
        rng = substream(seed, "bench", z)
        table = init_embedding_table(rng, z, dim)
        reps_tensor = rng.normal(size=(batch, length, dim))
        project_to_tokens(reps_tensor, table, threads=threads)  # warm-up
        times = []
        for _ in range(reps):
            start = time.perf_counter()
            project_to_tokens(reps_tensor, table, threads=threads)
            times.append(time.perf_counter() - start)
        rows.append(
            {
                "z": z,
                "batch": batch,
                "length": length,
                "dim": dim,
                "reps": reps,
                "median_sec": statistics.median(times),
            }
        )
    return rows


BENCH_HEADER = ["z", "batch", "length", "dim", "reps", "median_sec"]


def bench_rows_as_lists(rows: list[dict]) -> list[list[object]]:
    return [[r[k] for k in BENCH_HEADER] for r in rows]
