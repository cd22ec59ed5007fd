"""Grad-CAM attribution for the ranker.

The score's gradient with respect to each last-layer feature map is
averaged into one weight per map, the maps are combined with those
weights and clipped at zero, and the result is stretched back to the
interaction-matrix grid so every (query term, document term) pair gets a
non-negative contribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMapError, ShapeError
from .interaction import build_interaction_matrix, flatten_columns
from .ranker import RankerModel, backward_to_feature_maps, forward
from .report import ExplanationReport
from .snippet import DEFAULT_WINDOW, gradcam_snippet, vanilla_snippet
from .stats import kurtosis, map_total
from .terms import DEFAULT_Q_L, DEFAULT_Q_M, build_term_report


def importance_weights(grads) -> np.ndarray:
    """Global-average-pool each gradient map: one weight per feature map."""
    try:
        grads = np.asarray(grads, dtype=np.float64)
    except ValueError:
        raise ShapeError("gradient maps do not share one shape") from None
    if grads.ndim != 3 or grads.shape[1] * grads.shape[2] == 0:
        raise ShapeError(f"expected K non-empty 2-D gradient maps, got shape {grads.shape}")
    return grads.mean(axis=(1, 2))


def localization_map(alpha, feature_maps) -> np.ndarray:
    """``ReLU(sum_k alpha[k] * A[k])`` at feature-map resolution."""
    alpha = np.asarray(alpha, dtype=np.float64)
    try:
        A = np.asarray(feature_maps, dtype=np.float64)
    except ValueError:
        raise ShapeError("feature maps do not share one shape") from None
    if A.ndim != 3:
        raise ShapeError(f"expected K 2-D feature maps, got shape {A.shape}")
    if alpha.shape != (A.shape[0],):
        raise ShapeError(f"{alpha.shape[0] if alpha.ndim else 0} weights for {A.shape[0]} feature maps")
    return np.maximum(np.tensordot(alpha, A, axes=1), 0.0)


def _interp_matrix(n_out, n_in):
    # Row i holds the align-corners linear weights of output i over inputs.
    R = np.zeros((n_out, n_in))
    if n_in == 1 or n_out == 1:
        R[:, 0] = 1.0
        return R
    for i in range(n_out):
        src = i * (n_in - 1) / (n_out - 1)
        lo = min(int(np.floor(src)), n_in - 1)
        hi = min(lo + 1, n_in - 1)
        frac = src - lo
        R[i, lo] += 1.0 - frac
        R[i, hi] += frac
    return R


def bilinear_upsample(raw, target: tuple[int, int]) -> np.ndarray:
    """Upsample a 2-D map to ``target`` with align-corners bilinear weights.

    Corner values are preserved exactly; an axis of source length 1 is
    replicated. Downsampling is not supported.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 2 or raw.size == 0:
        raise ShapeError(f"expected a non-empty 2-D map, got shape {raw.shape}")
    u, v = target
    if u < raw.shape[0] or v < raw.shape[1]:
        raise ShapeError(f"cannot downsample {raw.shape} to {(u, v)}")
    if (u, v) == raw.shape:
        return raw.copy()
    return _interp_matrix(u, raw.shape[0]) @ raw @ _interp_matrix(v, raw.shape[1]).T


@dataclass
class LocalizationMap:
    raw: np.ndarray
    upsampled: np.ndarray
    l: np.ndarray  # noqa: E741 - column sums of ``upsampled``


def compute_localization(model: RankerModel, M) -> tuple[float, np.ndarray, LocalizationMap]:
    """Forward, backpropagate to the last feature maps and build the map."""
    score, cache = forward(model, M)
    grads = backward_to_feature_maps(model, cache)
    alpha = importance_weights(grads)
    raw = localization_map(alpha, cache.feature_maps)
    up = bilinear_upsample(raw, cache.input.shape)
    return score, alpha, LocalizationMap(raw, up, flatten_columns(up))


def explain(model: RankerModel, query, doc, emb, *, top_k: int = 5, window: int = DEFAULT_WINDOW,
            q_m: float = DEFAULT_Q_M, q_l: float = DEFAULT_Q_L) -> ExplanationReport:
    """Full explanation of one query-document score."""
    M = build_interaction_matrix(query, doc, emb)
    score, alpha, loc = compute_localization(model, M)
    m = flatten_columns(M)
    terms = build_term_report(loc.l, m, doc, top_k, q_m, q_l)
    try:
        kurt = kurtosis(loc.upsampled)
    except DegenerateMapError:
        kurt = None
    return ExplanationReport(
        query=tuple(query), doc=tuple(doc), score=score,
        M=M, L=loc.upsampled, L_raw=loc.raw, alpha=alpha, l=loc.l, m=m,
        effective=terms.effective, filtered=terms.filtered,
        vanilla_snippet=vanilla_snippet(query, doc, window),
        gradcam_snippet=gradcam_snippet(query, doc, loc.l, window),
        kurtosis=kurt, total=map_total(loc.upsampled),
    )
