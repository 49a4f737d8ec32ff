import math

import numpy as np
import pytest

from distillab import diversity as div
from distillab.errors import ValidationError
from distillab.seeding import substream


def test_config_validation():
    with pytest.raises(ValidationError):
        div.HypercubeConfig(n=3, trials=10)
    with pytest.raises(ValidationError):
        div.HypercubeConfig(n=0, trials=10)
    with pytest.raises(ValidationError):
        div.HypercubeConfig(n=4, trials=0)
    assert div.HypercubeConfig(n=256, trials=1).dim == 16


def test_sample_training_set_shape_and_values():
    cfg = div.HypercubeConfig(n=2, trials=1)
    pts = div.sample_training_set(cfg, substream(0, "t"))
    assert pts.shape == (2, 2)
    assert set(np.unique(pts).tolist()) <= {-1, 1}


def test_sample_training_set_deterministic():
    cfg = div.HypercubeConfig(n=16, trials=1)
    a = div.sample_training_set(cfg, substream(1, "t"))
    b = div.sample_training_set(cfg, substream(1, "t"))
    assert np.array_equal(a, b)


def test_sample_coordinate_means_near_zero():
    cfg = div.HypercubeConfig(n=1024, trials=1)
    rng = substream(2, "t")
    total = np.zeros(cfg.dim)
    draws = 100
    for _ in range(draws):
        total += div.sample_training_set(cfg, rng).sum(axis=0)
    n_draws = draws * cfg.n  # > 1e5 coordinate samples per dimension
    sigma = math.sqrt(n_draws)
    assert np.all(np.abs(total) < 3 * sigma)


def test_mix_construction_copies_agreements():
    pts = np.array([[1, -1, 1, -1], [1, -1, 1, -1]], dtype=np.int8)
    z = div.construct_mix_aug(pts, substream(3, "m"))
    assert np.array_equal(z, pts[:1])


def test_mix_construction_redraws_disagreements_uniformly():
    pts = np.array([[1, 1], [1, -1]], dtype=np.int8)
    rng = substream(4, "m")
    hits = 0
    trials = 10000
    for _ in range(trials):
        z = div.construct_mix_aug(pts, rng)
        assert z[0, 0] == 1  # agreeing coordinate always copied
        hits += z[0, 1] == 1
    sigma = math.sqrt(trials * 0.25)
    assert abs(hits - trials / 2) < 3 * sigma


def test_mix_construction_output_length_and_odd_reject():
    pts = (substream(5, "m").integers(0, 2, size=(8, 6), dtype=np.int8) * 2 - 1).astype(np.int8)
    assert div.construct_mix_aug(pts, substream(5, "r")).shape == (4, 6)
    with pytest.raises(ValidationError):
        div.construct_mix_aug(pts[:3], substream(5, "r"))


def test_fgsm_construction_flip_probability():
    # Keep probability per coordinate is Phi(1/2) for N(0, variance 4) noise.
    phi_half = 0.5 * (1.0 + math.erf(0.5 / math.sqrt(2.0)))
    pts = np.ones((1000, 10), dtype=np.int8)
    rng = substream(6, "g")
    flips = 0
    reps = 10
    for _ in range(reps):
        w = div.construct_fgsm_aug(pts, rng)
        flips += int((w != pts).sum())
    total = reps * pts.size
    p_flip = 1.0 - phi_half
    sigma = math.sqrt(total * p_flip * (1 - p_flip))
    assert abs(flips - total * p_flip) < 3 * sigma


def test_fgsm_construction_shape_and_determinism():
    pts = (substream(7, "p").integers(0, 2, size=(16, 8), dtype=np.int8) * 2 - 1).astype(np.int8)
    a = div.construct_fgsm_aug(pts, substream(7, "g"))
    b = div.construct_fgsm_aug(pts, substream(7, "g"))
    assert a.shape == pts.shape
    assert np.array_equal(a, b)
    assert set(np.unique(a).tolist()) <= {-1, 1}


def test_distinct_count_basics_and_oracle():
    same = np.ones((5, 4), dtype=np.int8)
    assert div.distinct_count(same) == 1
    distinct = np.array([[1, 1], [1, -1], [-1, 1], [-1, -1], [1, 1]], dtype=np.int8)
    assert div.distinct_count(distinct) == 4
    rng = substream(8, "d")
    for _ in range(20):
        pts = (rng.integers(0, 2, size=(50, 6)) * 2 - 1).astype(np.int8)
        oracle = len(sorted(set(tuple(r.tolist()) for r in pts)))
        assert div.distinct_count(pts) == oracle


def test_exact_expected_distinct_small_n():
    assert div.exact_expected_distinct(2) == pytest.approx(7.0 / 4.0, abs=1e-12)
    # brute-force check at n=2: E = 4 * (1 - (3/4)^2)
    assert div.exact_expected_distinct(2) == pytest.approx(4 * (1 - (3 / 4) ** 2), abs=1e-12)
    assert div.exact_train_error(2) == pytest.approx(9.0 / 32.0, abs=1e-12)


def test_monte_carlo_train_count_matches_closed_form():
    for n in (2, 16, 256):
        cfg = div.HypercubeConfig(n=n, trials=3000, seed=100 + n)
        train, _ = div.run_trials(cfg, "mix")
        mean = train.mean()
        half = 1.96 * train.std(ddof=1) / math.sqrt(len(train))
        assert abs(mean - div.exact_expected_distinct(n)) <= half


def test_augmented_set_is_superset_with_bounded_growth():
    for variant, cap in (("mix", lambda n: n // 2), ("fgsm", lambda n: n)):
        cfg = div.HypercubeConfig(n=64, trials=200, seed=9)
        train, aug = div.run_trials(cfg, variant)
        assert np.all(aug >= train)
        assert np.all(aug <= train + cap(cfg.n))


def test_ratio_estimates_near_expected_bands():
    mix_mean, _ = div.estimate_ratio(div.HypercubeConfig(n=256, trials=500, seed=10), "mix")
    assert 1.45 <= mix_mean <= 1.55
    fgsm_mean, _ = div.estimate_ratio(div.HypercubeConfig(n=256, trials=500, seed=10), "fgsm")
    assert 1.94 <= fgsm_mean <= 2.06


def test_ratio_denominator_mean_for_tiny_n():
    cfg = div.HypercubeConfig(n=2, trials=20000, seed=11)
    train, _ = div.run_trials(cfg, "mix")
    mean = train.mean()
    half = 1.96 * train.std(ddof=1) / math.sqrt(len(train))
    assert abs(mean - 1.75) <= half


def test_ratio_trend_is_monotone_toward_limit():
    means = []
    for n in (16, 64, 256, 1024):
        cfg = div.HypercubeConfig(n=n, trials=400, seed=12)
        mean, _ = div.estimate_ratio(cfg, "mix")
        means.append(mean)
    assert means == sorted(means)
    assert means[-1] < 1.5


def test_error_gap_estimates():
    mix_gap, _ = div.estimate_error_gap(div.HypercubeConfig(n=256, trials=500, seed=13), "mix")
    assert 0.9 <= mix_gap <= 1.05
    fgsm_gap, _ = div.estimate_error_gap(div.HypercubeConfig(n=256, trials=500, seed=13), "fgsm")
    assert 0.93 <= fgsm_gap <= 1.05


def test_trials_deterministic_across_thread_counts():
    cfg = div.HypercubeConfig(n=64, trials=64, seed=14)
    t1, a1 = div.run_trials(cfg, "fgsm", threads=1)
    t4, a4 = div.run_trials(cfg, "fgsm", threads=4)
    assert np.array_equal(t1, t4)
    assert np.array_equal(a1, a4)


def test_sim_summary_fields():
    cfg = div.HypercubeConfig(n=16, trials=50, seed=15)
    out = div.sim_summary(cfg, "mix")
    assert set(out) == {
        "variant", "n", "trials", "mean_ratio", "ratio_ci95",
        "normalized_gap", "gap_ci95", "exact_E_train",
    }
    assert out["variant"] == "mix"
    assert out["n"] == 16
    assert out["ratio_ci95"][0] <= out["mean_ratio"] <= out["ratio_ci95"][1]
