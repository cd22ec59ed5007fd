import numpy as np
import pytest

from gradrank import ShapeError, gradcam_snippet, vanilla_snippet
from gradrank.snippet import gradcam_weights, match_indicator

from oracles import brute_window


def test_single_match_picks_leftmost_window():
    doc = ["x"] * 60
    doc[30] = "q"
    span = vanilla_snippet(["q"], doc, 20)
    assert (span.start, span.end, span.score) == (11, 31, 1.0)


def test_short_document_returned_whole():
    doc = ["q", "x", "q", "y", "z", "q", "x", "x", "x", "x"]
    span = vanilla_snippet(["q", "z"], doc, 20)
    assert (span.start, span.end, span.score) == (0, 10, 4.0)
    assert span.tokens == tuple(doc)


def test_two_clusters():
    doc = [f"f{i}" for i in range(80)]
    for i in (0, 2, 5):
        doc[i] = "alpha"
    for i in (50, 55):
        doc[i] = "beta"
    span = vanilla_snippet(["alpha", "beta"], doc, 20)
    start, end, total = brute_window(match_indicator(["alpha", "beta"], doc), 20)
    assert (span.start, span.end) == (start, end) == (0, 20)
    assert span.score == float(total) == 3.0


def test_zero_attribution_matches_vanilla(rng):
    doc = [f"t{i}" for i in rng.integers(0, 6, size=70)]
    query = ["t1", "t4"]
    assert gradcam_snippet(query, doc, np.zeros(len(doc)), 20) == vanilla_snippet(query, doc, 20)


def test_attribution_spike_without_matches():
    doc = [f"f{i}" for i in range(70)]
    l = np.zeros(70)
    l[40] = 3.0
    span = gradcam_snippet(["q"], doc, l, 20)
    assert (span.start, span.end) == (21, 41)
    assert span.score == pytest.approx(3.0 / 20)


def test_attribution_can_outvote_matches():
    doc = [f"f{i}" for i in range(100)]
    doc[5] = "q"  # window A: one exact match
    l = np.zeros(100)
    l[60:70] = 5.0  # window B: 10 * 5 / 20 = 2.5 from attribution
    span = gradcam_snippet(["q"], doc, l, 20)
    start, end, total = brute_window(gradcam_weights(["q"], doc, l, 20), 20)
    assert (span.start, span.end) == (start, end)
    assert 50 <= span.start <= 60
    assert vanilla_snippet(["q"], doc, 20).start == 0


def test_length_mismatch():
    with pytest.raises(ShapeError):
        gradcam_snippet(["a"], ["a", "b"], [0.1], 5)


def test_window_score_ignores_outside_tokens(rng):
    doc = [f"t{i}" for i in rng.integers(0, 5, size=50)]
    query = ["t0"]
    span = vanilla_snippet(query, doc, 10)
    changed = list(doc)
    for i in range(len(doc)):
        if not span.start <= i < span.end:
            changed[i] = "zzz"
    assert vanilla_snippet(query, changed, 10).score == span.score


def test_random_instances_match_brute_force(rng):
    for _ in range(200):
        n = int(rng.integers(1, 60))
        w = int(rng.integers(1, 25))
        doc = [f"t{i}" for i in rng.integers(0, 8, size=n)]
        query = [f"t{i}" for i in rng.integers(0, 8, size=int(rng.integers(1, 4)))]
        l = rng.random(n) * (rng.random(n) < 0.3)
        for span, weights in [(vanilla_snippet(query, doc, w), match_indicator(query, doc)),
                              (gradcam_snippet(query, doc, l, w), gradcam_weights(query, doc, l, w))]:
            start, end, total = brute_window(weights, w)
            assert (span.start, span.end) == (start, end)
            assert span.score == float(total)
            assert span.end - span.start <= w and span.end <= n
