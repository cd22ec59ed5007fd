"""Effective and filtered document terms from the flattened maps ``l`` and ``m``.

An effective term carries a large share of the attribution ``l``. A
filtered term is similar to the query (large ``m``) yet receives little
attribution, i.e. similarity the model chose to discount.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

DEFAULT_Q_M = 80.0
DEFAULT_Q_L = 40.0


@dataclass(frozen=True)
class Term:
    token: str
    position: int
    l: float  # noqa: E741
    m: float


@dataclass(frozen=True)
class TermReport:
    effective: tuple[Term, ...]
    filtered: tuple[Term, ...]


def _check(doc, *arrays):
    for a in arrays:
        if a.ndim != 1 or len(a) != len(doc):
            raise ShapeError(f"array of shape {a.shape} does not match document length {len(doc)}")


def minmax(x) -> np.ndarray:
    """Scale to [0, 1]; a constant array maps to zeros."""
    x = np.asarray(x, dtype=np.float64)
    lo, hi = x.min(), x.max()
    if hi == lo:
        return np.zeros_like(x)
    return (x - lo) / (hi - lo)


def _dedup(order, doc, limit=None):
    seen, keep = set(), []
    for pos in order:
        if doc[pos] in seen:
            continue
        seen.add(doc[pos])
        keep.append(int(pos))
        if limit is not None and len(keep) == limit:
            break
    return keep


def effective_term_positions(l, doc, k: int) -> list[int]:
    l = np.asarray(l, dtype=np.float64)
    _check(doc, l)
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    order = np.lexsort((np.arange(len(l)), -l))
    return _dedup(order, doc, k)


def effective_terms(l, doc, k: int = 5, m=None) -> list[Term]:
    """Top-``k`` distinct tokens by ``l``; ties go to the earlier position."""
    l = np.asarray(l, dtype=np.float64)
    m = np.zeros_like(l) if m is None else np.asarray(m, dtype=np.float64)
    return [Term(doc[p], p, float(l[p]), float(m[p])) for p in effective_term_positions(l, doc, k)]


def filtered_term_positions(l, m, doc, q_m: float = DEFAULT_Q_M, q_l: float = DEFAULT_Q_L) -> list[int]:
    l = np.asarray(l, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    _check(doc, l, m)
    if not 0 < q_l < q_m < 100:
        raise ValueError(f"need 0 < q_l < q_m < 100, got q_l={q_l}, q_m={q_m}")
    m_hat, l_hat = minmax(m), minmax(l)
    if not m_hat.any():
        # constant similarity: nothing stands out as highly similar
        return []
    mask = (m_hat >= np.percentile(m_hat, q_m)) & (l_hat <= np.percentile(l_hat, q_l))
    candidates = np.flatnonzero(mask)
    gap = (m_hat - l_hat)[candidates]
    order = candidates[np.lexsort((candidates, -gap))]
    return _dedup(order, doc)


def filtered_terms(l, m, doc, q_m: float = DEFAULT_Q_M, q_l: float = DEFAULT_Q_L) -> list[Term]:
    """Positions in the top ``q_m`` percentile of normalized ``m`` and the
    bottom ``q_l`` percentile of normalized ``l``, largest gap first."""
    l = np.asarray(l, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    return [Term(doc[p], p, float(l[p]), float(m[p])) for p in filtered_term_positions(l, m, doc, q_m, q_l)]


def build_term_report(l, m, doc, k: int = 5, q_m: float = DEFAULT_Q_M,
                      q_l: float = DEFAULT_Q_L) -> TermReport:
    eff = effective_terms(l, doc, k, m)
    eff_tokens = {t.token for t in eff}
    filt = [t for t in filtered_terms(l, m, doc, q_m, q_l) if t.token not in eff_tokens]
    return TermReport(tuple(eff), tuple(filt))
