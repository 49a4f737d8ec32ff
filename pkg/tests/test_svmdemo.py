from fractions import Fraction

import pytest

from distillab import svmdemo
from distillab.errors import InseparableDataError, ValidationError
from distillab.svmdemo import SeparatorLine, classify, hard_margin_svm_2d, rational_point


def F(x):
    return Fraction(x)


def test_symmetric_pair():
    line = hard_margin_svm_2d([rational_point(1, 0), rational_point(-1, 0)], [1, -1])
    assert line.beta == (F(1), F(0))
    assert line.b == 0


def test_four_point_ground_truth_exact():
    line = hard_margin_svm_2d(svmdemo.DEMO_POINTS, svmdemo.DEMO_LABELS)
    assert line.beta == (F("4/9"), F("-1/18"))
    assert line.b == 0
    # every margin constraint holds exactly
    for x, y in zip(svmdemo.DEMO_POINTS, svmdemo.DEMO_LABELS):
        assert y * line.score(x) >= 1


def test_mixed_point_training_set_exact():
    x_mix = rational_point("-1/10", "-2/25")
    line = hard_margin_svm_2d(
        [svmdemo.DEMO_POINTS[0], svmdemo.DEMO_POINTS[2], x_mix], [1, -1, -1]
    )
    assert line.beta == (F("250/533"), F("200/533"))
    assert line.b == F("-12/13")


def test_projected_training_set_exact():
    line = hard_margin_svm_2d(
        [svmdemo.DEMO_POINTS[0], svmdemo.DEMO_POINTS[2], svmdemo.DEMO_POINTS[1]], [1, -1, 1]
    )
    assert line.beta == (F("4/9"), F(0))
    assert line.b == F("1/9")


def test_classify_mixed_point_under_ground_truth():
    ground = hard_margin_svm_2d(svmdemo.DEMO_POINTS, svmdemo.DEMO_LABELS)
    assert classify(ground, rational_point("-1/10", "-2/25")) == -1


def test_mixup_separator_misclassifies_x2_only():
    line = SeparatorLine(beta=(F("250/533"), F("200/533")), b=F("-12/13"))
    predictions = [classify(line, x) for x in svmdemo.DEMO_POINTS]
    wrong = [i for i, (p, y) in enumerate(zip(predictions, svmdemo.DEMO_LABELS)) if p != y]
    assert wrong == [1]  # x2


def test_projected_separator_classifies_all_four():
    line = SeparatorLine(beta=(F("4/9"), F(0)), b=F("1/9"))
    for x, y in zip(svmdemo.DEMO_POINTS, svmdemo.DEMO_LABELS):
        assert classify(line, x) == y


def test_classify_zero_score_maps_to_plus_one():
    line = SeparatorLine(beta=(F(1), F(0)), b=F(0))
    assert classify(line, rational_point(0, 5)) == 1


def test_one_class_rejected():
    with pytest.raises(ValidationError):
        hard_margin_svm_2d([rational_point(0, 0), rational_point(1, 1)], [1, 1])


def test_inseparable_data_raises():
    pts = [rational_point(0, 0), rational_point(1, 0), rational_point(2, 0)]
    with pytest.raises(InseparableDataError):
        hard_margin_svm_2d(pts, [1, -1, 1])
    with pytest.raises(InseparableDataError):
        hard_margin_svm_2d([rational_point(1, 1), rational_point(1, 1)], [1, -1])


def test_size_bounds():
    with pytest.raises(ValidationError):
        hard_margin_svm_2d([rational_point(0, 0)], [1])
    pts = [rational_point(i, i % 3) for i in range(9)]
    with pytest.raises(ValidationError):
        hard_margin_svm_2d(pts, [1, -1] * 4 + [1])


def test_optimality_against_constructed_feasible_lines():
    # Build random separable instances from a known feasible line: the
    # solver's norm can never exceed the generator's.
    import random

    rng = random.Random(7)
    for _ in range(25):
        beta = (F(rng.randint(-4, 4)) / rng.randint(1, 5), F(rng.randint(-4, 4)) / rng.randint(1, 5))
        if beta == (0, 0):
            continue
        b = F(rng.randint(-3, 3)) / rng.randint(1, 4)
        gen = SeparatorLine(beta=beta, b=b)
        pts, labels = [], []
        for _ in range(rng.randint(2, 6)):
            x = rational_point(F(rng.randint(-40, 40)) / 8, F(rng.randint(-40, 40)) / 8)
            score = gen.score(x)
            if abs(score) < 1:
                continue
            pts.append(x)
            labels.append(1 if score >= 1 else -1)
        if len(pts) < 2 or len(set(labels)) < 2:
            continue
        line = hard_margin_svm_2d(pts, labels)
        assert line.norm_sq() <= gen.norm_sq()
        for x, y in zip(pts, labels):
            assert y * line.score(x) >= 1


def test_scaling_points_scales_beta_inversely():
    for scale in (F(2), F("1/3"), F("7/5")):
        scaled = [(x[0] * scale, x[1] * scale) for x in svmdemo.DEMO_POINTS]
        line = hard_margin_svm_2d(scaled, svmdemo.DEMO_LABELS)
        base = hard_margin_svm_2d(svmdemo.DEMO_POINTS, svmdemo.DEMO_LABELS)
        assert line.beta == (base.beta[0] / scale, base.beta[1] / scale)
        for x, y in zip(scaled, svmdemo.DEMO_LABELS):
            assert classify(line, x) == y


def test_euclidean_nearest_exact_order():
    # The exact distance order around the mixed point: x4 < x2 < x3 < x1.
    x_mix = rational_point("-1/10", "-2/25")
    idx, dists = svmdemo.euclidean_nearest(x_mix, svmdemo.DEMO_POINTS)
    assert idx == 3
    assert dists[3] == F("19841/2500")
    assert dists[1] == F("20241/2500")
    assert dists[3] < dists[1] < dists[2] < dists[0]


def test_run_boundary_demo_report_values():
    report = svmdemo.run_boundary_demo()
    assert report["ground_truth"]["separator"]["beta"] == ["4/9", "-1/18"]
    assert report["ground_truth"]["separator"]["b"] == "0"
    assert report["mixup"]["point"] == ["-1/10", "-2/25"]
    assert report["mixup"]["teacher_label"] == -1
    assert report["mixup"]["separator"]["beta"] == ["250/533", "200/533"]
    assert report["mixup"]["separator"]["b"] == "-12/13"
    assert report["mixup"]["misclassified"] == ["x2"]
    proj = report["projection"]
    assert proj["published_nearest"] == "x2"
    assert proj["computed_nearest"] == "x4"
    assert proj["published"]["separator"]["beta"] == ["4/9", "0"]
    assert proj["published"]["separator"]["b"] == "1/9"
    assert proj["published"]["misclassified"] == []
    assert proj["computed"]["misclassified"] == []


def test_run_boundary_demo_deterministic_and_renderable():
    a = svmdemo.run_boundary_demo()
    b = svmdemo.run_boundary_demo()
    assert a == b
    text = svmdemo.render_report_text(a)
    assert "4/9" in text and "250/533" in text and "x_mix" in text
