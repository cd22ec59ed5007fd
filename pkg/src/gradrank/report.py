"""Explanation reports: JSON serialization and PPM heatmaps."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .snippet import SnippetSpan
from .terms import Term

SCHEMA_VERSION = 1
SIG_DIGITS = 9
BLUE = np.array([0.0, 0.0, 255.0])
RED = np.array([255.0, 0.0, 0.0])


def fmt(x):
    """Round a float to 9 significant digits; ``None`` passes through."""
    if x is None:
        return None
    return float(f"{float(x):.{SIG_DIGITS}g}")


def fmt_array(a):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 0:
        return fmt(a)
    return [fmt_array(row) for row in a] if a.ndim > 1 else [fmt(x) for x in a]


@dataclass
class ExplanationReport:
    query: tuple[str, ...]
    doc: tuple[str, ...]
    score: float
    M: np.ndarray
    L: np.ndarray
    L_raw: np.ndarray
    alpha: np.ndarray
    l: np.ndarray  # noqa: E741
    m: np.ndarray
    effective: tuple[Term, ...]
    filtered: tuple[Term, ...]
    vanilla_snippet: SnippetSpan
    gradcam_snippet: SnippetSpan
    kurtosis: float | None
    total: float

    @property
    def snippets_same(self) -> bool:
        a, b = self.vanilla_snippet, self.gradcam_snippet
        return (a.start, a.end) == (b.start, b.end)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "query": list(self.query),
            "doc": list(self.doc),
            "score": fmt(self.score),
            "M": fmt_array(self.M),
            "L": fmt_array(self.L),
            "L_raw": fmt_array(self.L_raw),
            "alpha": fmt_array(self.alpha),
            "l": fmt_array(self.l),
            "m": fmt_array(self.m),
            "effective_terms": [_term_dict(t) for t in self.effective],
            "filtered_terms": [_term_dict(t) for t in self.filtered],
            "snippets": {
                "vanilla": _span_dict(self.vanilla_snippet),
                "gradcam": _span_dict(self.gradcam_snippet),
                "same": self.snippets_same,
            },
            "kurtosis": fmt(self.kurtosis),
            "total": fmt(self.total),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> ExplanationReport:
        if data.get("schema_version") != SCHEMA_VERSION:
            raise FormatError(f"unsupported report schema_version {data.get('schema_version')!r}")
        try:
            return cls(
                query=tuple(data["query"]),
                doc=tuple(data["doc"]),
                score=data["score"],
                M=np.array(data["M"], dtype=np.float64),
                L=np.array(data["L"], dtype=np.float64),
                L_raw=np.array(data["L_raw"], dtype=np.float64),
                alpha=np.array(data["alpha"], dtype=np.float64),
                l=np.array(data["l"], dtype=np.float64),
                m=np.array(data["m"], dtype=np.float64),
                effective=tuple(Term(**t) for t in data["effective_terms"]),
                filtered=tuple(Term(**t) for t in data["filtered_terms"]),
                vanilla_snippet=_span_from(data["snippets"]["vanilla"]),
                gradcam_snippet=_span_from(data["snippets"]["gradcam"]),
                kurtosis=data["kurtosis"],
                total=data["total"],
            )
        except (KeyError, TypeError) as exc:
            raise FormatError(f"malformed report: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> ExplanationReport:
        return cls.from_dict(json.loads(text))

    def rounded(self) -> ExplanationReport:
        """This report at serialized precision."""
        return self.from_dict(self.to_dict())


def _term_dict(t: Term) -> dict:
    return {"token": t.token, "position": t.position, "l": fmt(t.l), "m": fmt(t.m)}


def _span_dict(s: SnippetSpan) -> dict:
    return {"start": s.start, "end": s.end, "score": fmt(s.score), "tokens": list(s.tokens)}


def _span_from(d: dict) -> SnippetSpan:
    return SnippetSpan(d["start"], d["end"], d["score"], tuple(d["tokens"]))


_NUM = {"type": "number"}
_MATRIX = {"type": "array", "items": {"type": "array", "items": _NUM}}
_VECTOR = {"type": "array", "items": _NUM}
_TOKENS = {"type": "array", "items": {"type": "string"}}
_TERM = {
    "type": "object",
    "required": ["token", "position", "l", "m"],
    "properties": {"token": {"type": "string"}, "position": {"type": "integer", "minimum": 0},
                   "l": _NUM, "m": _NUM},
    "additionalProperties": False,
}
_SPAN = {
    "type": "object",
    "required": ["start", "end", "score", "tokens"],
    "properties": {"start": {"type": "integer", "minimum": 0}, "end": {"type": "integer", "minimum": 1},
                   "score": _NUM, "tokens": _TOKENS},
    "additionalProperties": False,
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "gradrank explanation report",
    "type": "object",
    "required": ["schema_version", "query", "doc", "score", "M", "L", "L_raw", "alpha", "l", "m",
                 "effective_terms", "filtered_terms", "snippets", "kurtosis", "total"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "query": _TOKENS,
        "doc": _TOKENS,
        "score": _NUM,
        "M": _MATRIX,
        "L": _MATRIX,
        "L_raw": _MATRIX,
        "alpha": _VECTOR,
        "l": _VECTOR,
        "m": _VECTOR,
        "effective_terms": {"type": "array", "items": _TERM},
        "filtered_terms": {"type": "array", "items": _TERM},
        "snippets": {
            "type": "object",
            "required": ["vanilla", "gradcam", "same"],
            "properties": {"vanilla": _SPAN, "gradcam": _SPAN, "same": {"type": "boolean"}},
        },
        "kurtosis": {"type": ["number", "null"]},
        "total": {"type": "number", "minimum": 0},
    },
    "additionalProperties": False,
}


def check_report_consistency(data: dict) -> None:
    """Shape checks the JSON schema cannot express."""
    u, v = len(data["query"]), len(data["doc"])
    for key in ("M", "L"):
        rows = data[key]
        if len(rows) != u or any(len(r) != v for r in rows):
            raise FormatError(f"{key} is not {u}x{v}")
    for key in ("l", "m"):
        if len(data[key]) != v:
            raise FormatError(f"{key} has length {len(data[key])}, expected {v}")


# -- heatmaps ---------------------------------------------------------------

def heatmap_rgb(matrix) -> np.ndarray:
    """Min-max map values onto a linear blue-to-red ramp; uint8 (H, W, 3).

    A constant matrix renders entirely blue.
    """
    x = np.asarray(matrix, dtype=np.float64)
    lo, hi = x.min(), x.max()
    t = np.zeros_like(x) if hi == lo else (x - lo) / (hi - lo)
    rgb = BLUE + t[..., None] * (RED - BLUE)
    return np.rint(rgb).astype(np.uint8)


def ppm_bytes(matrix, cell_px: int = 16) -> bytes:
    """Binary PPM (P6) with each matrix cell drawn as a ``cell_px`` square."""
    if cell_px < 1:
        raise ValueError(f"cell_px must be positive, got {cell_px}")
    rgb = heatmap_rgb(matrix)
    img = np.repeat(np.repeat(rgb, cell_px, axis=0), cell_px, axis=1)
    h, w = img.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode("ascii") + img.tobytes()


def write_ppm(matrix, path, cell_px: int = 16) -> None:
    with open(path, "wb") as fh:
        fh.write(ppm_bytes(matrix, cell_px))


def read_ppm(path) -> np.ndarray:
    """Read a P6 file written by :func:`write_ppm` into an (H, W, 3) array."""
    with open(path, "rb") as fh:
        blob = fh.read()
    parts = blob.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P6":
        raise FormatError(f"{path}: not a binary PPM")
    w, h = (int(x) for x in parts[1].split())
    if int(parts[2]) != 255:
        raise FormatError(f"{path}: unsupported maxval")
    data = np.frombuffer(parts[3], dtype=np.uint8)
    if data.size != w * h * 3:
        raise FormatError(f"{path}: truncated pixel data")
    return data.reshape(h, w, 3)
