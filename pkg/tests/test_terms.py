import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from gradrank import ShapeError, effective_terms, filtered_terms
from gradrank.terms import build_term_report, filtered_term_positions


def positions(terms):
    return [t.position for t in terms]


def test_top_k():
    assert positions(effective_terms([0.9, 0.1, 0.5], ["a", "b", "c"], 2)) == [0, 2]


def test_ties_go_to_lower_index():
    assert positions(effective_terms([0.3, 0.3, 0.3, 0.3], ["a", "b", "c", "d"], 2)) == [0, 1]


def test_duplicate_tokens_collapse():
    terms = effective_terms([0.2, 0.0, 0.9], ["infection", "x", "infection"], 2)
    assert [(t.token, t.position) for t in terms] == [("infection", 2), ("x", 1)]


def test_effective_length_mismatch():
    with pytest.raises(ShapeError):
        effective_terms([1.0, 2.0], ["a"], 1)


def test_filtered_constructed_case():
    terms = filtered_terms([1, 0, 0, 0], [1, 1, 0, 0], ["a", "b", "c", "d"], q_m=75, q_l=50)
    assert positions(terms) == [1]


def test_filtered_proportional_arrays_empty():
    # m_hat = l_hat = [0, .25, .5, .75, 1]: 80th percentile of m_hat is 0.8
    # (only position 4), 40th percentile of l_hat is 0.4 (positions 0, 1)
    x = [1.0, 2.0, 3.0, 4.0, 5.0]
    assert filtered_terms(x, x, list("abcde")) == []


def test_filtered_constant_arrays_empty():
    assert filtered_terms([2.0] * 6, [0.7] * 6, list("abcdef")) == []


def test_filtered_sorted_by_gap_and_deduped():
    doc = ["p", "q", "p", "r", "s", "t"]
    m = [0.9, 1.0, 0.95, 0.1, 0.0, 0.2]
    l = [0.0, 0.1, 0.0, 0.5, 1.0, 0.3]
    # candidates 0, 1, 2 with gaps 0.9, 0.9, 0.95; position 0 repeats "p"
    terms = filtered_terms(l, m, doc, q_m=60, q_l=50)
    assert [(t.token, t.position) for t in terms] == [("p", 2), ("q", 1)]


def test_filtered_length_mismatch():
    with pytest.raises(ShapeError):
        filtered_terms([1.0, 2.0], [1.0], ["a", "b"])


def test_report_lists_disjoint():
    doc = list("abcdefgh")
    rng = np.random.default_rng(3)
    for _ in range(50):
        l, m = rng.random(8), rng.random(8)
        rep = build_term_report(l, m, doc, k=3, q_m=60, q_l=40)
        assert not {t.token for t in rep.effective} & {t.token for t in rep.filtered}


vec = arrays(np.float64, 12, elements=st.floats(-5, 5, allow_nan=False))
DOC = [f"t{i % 9}" for i in range(12)]


@given(vec, st.floats(0.01, 100))
def test_effective_invariant_under_positive_scaling(l, c):
    assert positions(effective_terms(l, DOC, 4)) == positions(effective_terms(c * l, DOC, 4))


def _affine_ok(x, a, b):
    # affine maps preserve min-max normalization up to rounding; keep inputs
    # whose normalized values are well separated so rounding cannot reorder
    y = a * x + b
    return np.allclose((x - x.min()) / np.ptp(x), (y - y.min()) / np.ptp(y), atol=1e-9)


@given(vec, vec, st.floats(0.1, 10), st.floats(-10, 10), st.floats(0.1, 10), st.floats(-10, 10))
def test_filtered_invariant_under_affine_rescaling(l, m, a1, b1, a2, b2):
    l = np.round(l, 1)
    m = np.round(m, 1)
    if np.ptp(l) == 0 or np.ptp(m) == 0 or not (_affine_ok(l, a1, b1) and _affine_ok(m, a2, b2)):
        return
    base = filtered_term_positions(l, m, DOC)
    moved = filtered_term_positions(a1 * l + b1, a2 * m + b2, DOC)
    assert base == moved
