"""Fixed-window query-biased snippets.

Both generators score each document term, then pick the window of ``w``
consecutive terms with the largest total, leftmost on ties. Window totals
are accumulated exactly (floats rescaled to integers over a common
power-of-two denominator), so equal totals compare equal no matter how
the window was reached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import EmptyInputError, ShapeError

DEFAULT_WINDOW = 20


@dataclass(frozen=True)
class SnippetSpan:
    start: int
    end: int
    score: float
    tokens: tuple[str, ...]

    def text(self) -> str:
        return " ".join(self.tokens)


def match_indicator(query, doc) -> np.ndarray:
    """1.0 where the document token equals some query token, else 0.0."""
    qset = set(query)
    return np.array([1.0 if t in qset else 0.0 for t in doc])


def _exact_ints(values):
    ratios = [float(v).as_integer_ratio() for v in values]
    denom = max(d for _, d in ratios)
    return [n * (denom // d) for n, d in ratios], denom


def best_window(weights, w: int) -> tuple[int, int, float]:
    """Leftmost ``[start, end)`` of length ``min(w, n)`` maximizing the sum."""
    n = len(weights)
    if n == 0:
        raise EmptyInputError("cannot pick a window in an empty document")
    if w < 1:
        raise ValueError(f"window size must be at least 1, got {w}")
    if not all(math.isfinite(x) for x in weights):
        raise ValueError("window weights must be finite")
    ints, denom = _exact_ints(weights)
    width = min(w, n)
    cur = sum(ints[:width])
    best, best_start = cur, 0
    for s in range(1, n - width + 1):
        cur += ints[s + width - 1] - ints[s - 1]
        if cur > best:
            best, best_start = cur, s
    return best_start, best_start + width, float(Fraction(best, denom))


def _span(doc, weights, w):
    start, end, score = best_window(weights, w)
    return SnippetSpan(start, end, score, tuple(doc[start:end]))


def vanilla_snippet(query, doc, w: int = DEFAULT_WINDOW) -> SnippetSpan:
    """Window with the most exact query-term matches."""
    return _span(doc, match_indicator(query, doc), w)


def gradcam_weights(query, doc, l, w: int) -> np.ndarray:
    l = np.asarray(l, dtype=np.float64)
    if l.shape != (len(doc),):
        raise ShapeError(f"l has shape {l.shape}, document has {len(doc)} terms")
    return match_indicator(query, doc) + l / w


def gradcam_snippet(query, doc, l, w: int = DEFAULT_WINDOW) -> SnippetSpan:
    """Window maximizing exact matches plus ``l_j / w`` per term."""
    if w < 1:
        raise ValueError(f"window size must be at least 1, got {w}")
    return _span(doc, gradcam_weights(query, doc, l, w), w)
