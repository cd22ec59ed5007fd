"""Query-document interaction matrices."""

from __future__ import annotations

import numpy as np

from .errors import EmptyInputError, ShapeError
from .text import EmbeddingTable, TokenSequence


def cosine_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarity between rows of ``a`` and rows of ``b``.

    Rows with zero norm have similarity 0 with everything.
    """
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    an = np.divide(a, na[:, None], out=np.zeros_like(a, dtype=np.float64), where=na[:, None] > 0)
    bn = np.divide(b, nb[:, None], out=np.zeros_like(b, dtype=np.float64), where=nb[:, None] > 0)
    return np.clip(an @ bn.T, -1.0, 1.0)


def build_interaction_matrix(query: TokenSequence, doc: TokenSequence,
                             emb: EmbeddingTable) -> np.ndarray:
    """Return the ``(len(query), len(doc))`` matrix of cosine similarities."""
    if len(query) == 0 or len(doc) == 0:
        raise EmptyInputError("interaction matrix needs a non-empty query and document")
    return cosine_matrix(emb.matrix(query), emb.matrix(doc))


def flatten_columns(matrix) -> np.ndarray:
    """Sum each column, giving one value per document term."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.size == 0:
        raise ShapeError(f"expected a non-empty 2-D matrix, got shape {matrix.shape}")
    return matrix.sum(axis=0)
