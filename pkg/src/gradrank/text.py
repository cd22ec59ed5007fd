"""Tokenization, embedding tables and ranking datasets."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyInputError, FormatError

DEFAULT_MAX_Q = 16
DEFAULT_MAX_D = 128

# Alphanumeric runs; underscore is a word character but not alphanumeric.
_TOKEN_RE = re.compile(r"[^\W_]+")


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[str, ...]
    source: str = ""

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __getitem__(self, index):
        return self.tokens[index]

    def text(self) -> str:
        return " ".join(self.tokens)


def tokenize(text: str, max_len: int = DEFAULT_MAX_Q) -> TokenSequence:
    """Lowercase ``text``, split it on non-alphanumeric runs and truncate.

    >>> tokenize("Blood Diseases, transmitted!", 10).tokens
    ('blood', 'diseases', 'transmitted')
    """
    if max_len < 1:
        raise ValueError(f"max_len must be positive, got {max_len}")
    tokens = _TOKEN_RE.findall(text.lower())
    if not tokens:
        raise EmptyInputError(f"no alphanumeric content in {text!r}")
    return TokenSequence(tuple(tokens[:max_len]), text)


@dataclass(frozen=True)
class EmbeddingTable:
    """Token to vector map with one shared vector for unknown tokens."""

    dim: int
    entries: dict[str, np.ndarray]
    oov_vector: np.ndarray
    seed: int = 0

    @classmethod
    def from_vectors(cls, vectors: dict[str, np.ndarray], seed: int = 0) -> EmbeddingTable:
        if not vectors:
            raise EmptyInputError("embedding table needs at least one vector")
        dim = len(next(iter(vectors.values())))
        entries = {}
        for token, vec in vectors.items():
            arr = np.array(vec, dtype=np.float64)
            if arr.shape != (dim,):
                raise FormatError(f"vector for {token!r} has shape {arr.shape}, expected ({dim},)")
            arr.setflags(write=False)
            entries[token] = arr
        return cls(dim, entries, _oov_vector(dim, seed), seed)

    def __contains__(self, token):
        return token in self.entries

    def __len__(self):
        return len(self.entries)

    def lookup(self, token: str) -> np.ndarray:
        return self.entries.get(token, self.oov_vector)

    def matrix(self, tokens) -> np.ndarray:
        """Stack the vectors of ``tokens`` into an ``(n, dim)`` array."""
        return np.stack([self.lookup(t) for t in tokens])


def _oov_vector(dim: int, seed: int) -> np.ndarray:
    vec = np.random.default_rng(seed).uniform(-0.1, 0.1, size=dim)
    vec.setflags(write=False)
    return vec


def load_embeddings(path, seed: int = 0) -> EmbeddingTable:
    """Read a GloVe-style text file: ``<token> <f1> ... <fdim>`` per line.

    Blank lines are skipped. Every line must carry the same number of
    values; the first non-blank line fixes ``dim``.
    """
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            token, values = parts[0], parts[1:]
            if not values:
                raise FormatError(f"token {token!r} has no vector", line=lineno)
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise FormatError(f"expected {dim} values, found {len(values)}", line=lineno)
            try:
                vec = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError as exc:
                raise FormatError(f"unreadable float: {exc}", line=lineno) from None
            vec.setflags(write=False)
            vectors[token] = vec
    if dim is None:
        raise FormatError(f"{path}: no embeddings found")
    return EmbeddingTable(dim, vectors, _oov_vector(dim, seed), seed)


def save_embeddings(table: EmbeddingTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for token, vec in table.entries.items():
            fh.write(token + " " + " ".join(repr(float(x)) for x in vec) + "\n")


@dataclass(frozen=True)
class RankingRecord:
    qid: str
    query: TokenSequence
    positive: TokenSequence
    negatives: tuple[TokenSequence, ...]

    def doc_ids(self) -> list[str]:
        return [f"{self.qid}:pos"] + [f"{self.qid}:neg{k}" for k in range(len(self.negatives))]


@dataclass(frozen=True)
class RankingDataset:
    records: tuple[RankingRecord, ...] = field(default_factory=tuple)

    def __post_init__(self):
        seen = set()
        for i, rec in enumerate(self.records):
            if rec.qid in seen:
                raise FormatError(f"duplicate query id {rec.qid!r}", record=i)
            seen.add(rec.qid)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def split(self, n_first: int) -> tuple[RankingDataset, RankingDataset]:
        return RankingDataset(self.records[:n_first]), RankingDataset(self.records[n_first:])

    def pairs(self):
        """Yield ``(query, positive, negative)`` triples in record order."""
        for rec in self.records:
            for neg in rec.negatives:
                yield rec.query, rec.positive, neg


def load_dataset(path, max_q: int = DEFAULT_MAX_Q, max_d: int = DEFAULT_MAX_D) -> RankingDataset:
    """Parse a tab-separated file of ``qid, query, positive, negatives...``."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            index = len(records)
            fields = line.split("\t")
            if len(fields) < 4:
                raise FormatError(
                    f"expected qid, query, positive and at least one negative; got {len(fields)} fields",
                    line=lineno, record=index)
            qid = fields[0].strip()
            if not qid:
                raise FormatError("empty query id", line=lineno, record=index)
            try:
                query = tokenize(fields[1], max_q)
                docs = [tokenize(text, max_d) for text in fields[2:]]
            except EmptyInputError as exc:
                raise FormatError(f"empty text field: {exc}", line=lineno, record=index) from None
            records.append(RankingRecord(qid, query, docs[0], tuple(docs[1:])))
    return RankingDataset(tuple(records))


def save_dataset(dataset: RankingDataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in dataset:
            docs = [rec.positive, *rec.negatives]
            fh.write("\t".join([rec.qid, rec.query.text()] + [d.text() for d in docs]) + "\n")


def read_text(path) -> str:
    return Path(path).read_text(encoding="utf-8")
