import numpy as np
import pytest

from distillab import datagen
from distillab.errors import ValidationError


def small_task(seed=0):
    return datagen.gen_keyword_task(
        seed=seed, vocab_size=30, length=8, n_classes=3, n_train=24, n_unlabeled=30, n_test=30
    )


def test_every_example_has_exactly_one_keyword():
    train, unlabeled, test = small_task()
    for split in (train, unlabeled, test):
        per_class = split.meta["keywords_per_class"]
        n_keywords = split.meta["c"] * per_class
        for row in split.tokens:
            assert int((row < n_keywords).sum()) == 1


def test_rule_based_oracle_reaches_perfect_accuracy():
    train, unlabeled, test = small_task()
    for split in (train, unlabeled, test):
        per_class = split.meta["keywords_per_class"]
        got = [datagen.oracle_label(row, split.meta["c"], per_class) for row in split.tokens]
        assert np.array_equal(np.asarray(got), split.labels)


def test_same_seed_same_datasets():
    a = small_task(seed=5)
    b = small_task(seed=5)
    c = small_task(seed=6)
    for x, y in zip(a, b):
        assert np.array_equal(x.tokens, y.tokens)
        assert np.array_equal(x.labels, y.labels)
    assert not all(np.array_equal(x.tokens, y.tokens) for x, y in zip(a, c))


def test_splits_are_disjoint():
    train, unlabeled, test = small_task(seed=2)
    seen = set()
    for split in (train, unlabeled, test):
        for row in split.tokens:
            key = tuple(row.tolist())
            assert key not in seen
            seen.add(key)


def test_infeasible_parameters_rejected():
    with pytest.raises(ValidationError):
        datagen.gen_keyword_task(0, vocab_size=8, length=4, n_classes=4, n_train=4, n_unlabeled=4, n_test=4)
    with pytest.raises(ValidationError):
        datagen.gen_keyword_task(0, vocab_size=30, length=4, n_classes=3, n_train=0, n_unlabeled=4, n_test=4)


def test_jsonl_round_trip(tmp_path):
    train, _, _ = small_task(seed=1)
    path = str(tmp_path / "train.jsonl")
    datagen.save_jsonl(train, path)
    loaded = datagen.load_jsonl(path)
    assert np.array_equal(loaded.tokens, train.tokens)
    assert np.array_equal(loaded.labels, train.labels)
    assert loaded.meta["z"] == train.meta["z"]


def test_load_empty_file_errors(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    with pytest.raises(ValidationError, match="empty"):
        datagen.load_jsonl(str(path))


def test_load_names_offending_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    rows = [
        '{"tokens": [1, 2, 3], "label": 0}',
        '{"tokens": [4, 5, 6], "label": 1}',
        '{"tokens": [1, 2, 99], "label": 0}',
    ]
    path.write_text("\n".join(rows) + "\n")
    with pytest.raises(ValidationError, match="line 3"):
        datagen.load_jsonl(str(path), vocab_size=10)


def test_load_ragged_line_errors(tmp_path):
    path = tmp_path / "ragged.jsonl"
    path.write_text('{"tokens": [1, 2, 3], "label": 0}\n{"tokens": [1, 2], "label": 0}\n')
    with pytest.raises(ValidationError, match="line 2"):
        datagen.load_jsonl(str(path))


def test_load_malformed_line_errors(tmp_path):
    path = tmp_path / "malformed.jsonl"
    path.write_text('{"tokens": [1, 2, 3], "label": 0}\nnot json\n')
    with pytest.raises(ValidationError, match="line 2"):
        datagen.load_jsonl(str(path))


def test_draw_batch_single_example_dataset():
    data = datagen.Dataset(tokens=np.array([[1, 2, 3]]), labels=np.array([0]))
    for step in range(5):
        tokens, labels = datagen.draw_batch(data, 1, seed=0, step=step)
        assert np.array_equal(tokens, data.tokens)
        assert labels[0] == 0


def test_draw_batch_deterministic_and_seed_sensitive():
    train, _, _ = small_task(seed=3)
    a = [datagen.draw_batch(train, 8, seed=1, step=s)[0] for s in range(4)]
    b = [datagen.draw_batch(train, 8, seed=1, step=s)[0] for s in range(4)]
    c = [datagen.draw_batch(train, 8, seed=2, step=s)[0] for s in range(4)]
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert not all(np.array_equal(x, y) for x, y in zip(a, c))


def test_draw_batch_rejects_oversized_batch():
    data = datagen.Dataset(tokens=np.zeros((4, 2), dtype=np.int64), labels=np.zeros(4, dtype=np.int64))
    with pytest.raises(ValidationError):
        datagen.draw_batch(data, 5, seed=0, step=0)


def test_sampling_frequencies_are_uniform():
    # 1e5 draws over 20 examples: every count within 3 sigma of n*p.
    data = datagen.Dataset(tokens=np.arange(40, dtype=np.int64).reshape(20, 2), labels=np.zeros(20, dtype=np.int64))
    counts = np.zeros(20, dtype=np.int64)
    draws, batch = 5000, 20
    for step in range(draws):
        tokens, _ = datagen.draw_batch(data, batch, seed=11, step=step)
        counts += np.bincount(tokens[:, 0] // 2, minlength=20)
    total = draws * batch
    expect = total / 20
    sigma = np.sqrt(total * (1 / 20) * (19 / 20))
    assert np.all(np.abs(counts - expect) < 3 * sigma)


def test_batch_iter_streams_match_draw_batch():
    train, _, _ = small_task(seed=4)
    stream = list(datagen.batch_iter(train, 4, seed=9, steps=3))
    for step, (tokens, labels) in enumerate(stream):
        t2, l2 = datagen.draw_batch(train, 4, seed=9, step=step)
        assert np.array_equal(tokens, t2)
        assert np.array_equal(labels, l2)
