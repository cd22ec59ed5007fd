"""Corpus-level separation analysis and a synthetic corpus generator."""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import GradRankError
from .gradcam import explain
from .report import fmt
from .stats import mann_whitney_u
from .text import EmbeddingTable, RankingDataset, RankingRecord, TokenSequence

MEASURES = ("kurtosis", "total")
THREADS_ENV = "GRADRANK_THREADS"


@dataclass(frozen=True)
class MapStatistics:
    doc_id: str
    qid: str
    label: str  # "positive" or "negative"
    score: float
    kurtosis: float | None  # None when the map is constant
    total: float

    @property
    def degenerate(self) -> bool:
        return self.kurtosis is None


@dataclass(frozen=True)
class SeparationResult:
    measure: str
    u_statistic: float | None
    p_value: float | None
    n_pos: int
    n_neg: int
    direction: str  # "positive", "negative", "equal" or "undetermined"
    excluded_count: int
    median_pos: float | None
    median_neg: float | None

    def to_dict(self) -> dict:
        return {
            "measure": self.measure,
            "U": fmt(self.u_statistic),
            "p": fmt(self.p_value),
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
            "direction": self.direction,
            "excluded_count": self.excluded_count,
            "median_pos": fmt(self.median_pos),
            "median_neg": fmt(self.median_neg),
        }


@dataclass
class CorpusAnalysis:
    rows: list[MapStatistics]
    tests: dict[str, SeparationResult]
    failures: list[tuple[str, str]]

    @property
    def excluded_count(self) -> int:
        return sum(r.degenerate for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "rows": [
                {"doc_id": r.doc_id, "label": r.label, "score": fmt(r.score),
                 "kurtosis": fmt(r.kurtosis), "total": fmt(r.total)}
                for r in self.rows
            ],
            "tests": [self.tests[m].to_dict() for m in MEASURES],
            "summary": {m: _summary(self.rows, m) for m in MEASURES},
            "failures": [{"doc_id": d, "error": e} for d, e in self.failures],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _quantiles(values):
    if not values:
        return None
    q1, med, q3 = np.percentile(values, [25, 50, 75])
    return {"min": fmt(min(values)), "q1": fmt(q1), "median": fmt(med), "q3": fmt(q3),
            "max": fmt(max(values))}


def _summary(rows, measure):
    usable = [r for r in rows if not r.degenerate]
    return {label: _quantiles([getattr(r, measure) for r in usable if r.label == label])
            for label in ("positive", "negative")}


def thread_count() -> int:
    cap = os.environ.get(THREADS_ENV)
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n


def separation_test(rows, measure: str) -> SeparationResult:
    """One-sided test that positives score higher than negatives on ``measure``.

    Rows with a constant localization map are left out of both measures.
    """
    usable = [r for r in rows if not r.degenerate]
    pos = [getattr(r, measure) for r in usable if r.label == "positive"]
    neg = [getattr(r, measure) for r in usable if r.label == "negative"]
    excluded = len(rows) - len(usable)
    med_pos = float(np.median(pos)) if pos else None
    med_neg = float(np.median(neg)) if neg else None
    if not pos or not neg:
        return SeparationResult(measure, None, None, len(pos), len(neg), "undetermined",
                                excluded, med_pos, med_neg)
    res = mann_whitney_u(pos, neg, "greater")
    direction = {"a_greater": "positive", "b_greater": "negative", "equal": "equal"}[res.direction]
    return SeparationResult(measure, res.u_statistic, res.p_value, len(pos), len(neg), direction,
                            excluded, med_pos, med_neg)


def corpus_analysis(model, dataset: RankingDataset, emb: EmbeddingTable, workers: int | None = None,
                    **explain_kwargs) -> CorpusAnalysis:
    """Explain every (query, positive) and (query, negative) pair, then test
    whether positives have larger kurtosis and total attribution.

    Per-document failures are recorded and skipped.
    """
    jobs = []
    for rec in dataset:
        ids = rec.doc_ids()
        jobs.append((ids[0], rec.qid, "positive", rec.query, rec.positive))
        for doc_id, neg in zip(ids[1:], rec.negatives):
            jobs.append((doc_id, rec.qid, "negative", rec.query, neg))

    def run(job):
        doc_id, qid, label, query, doc = job
        try:
            rep = explain(model, query, doc, emb, **explain_kwargs)
        except GradRankError as exc:
            return None, (doc_id, f"{type(exc).__name__}: {exc}")
        return MapStatistics(doc_id, qid, label, rep.score, rep.kurtosis, rep.total), None

    workers = thread_count() if workers is None else max(1, workers)
    if workers == 1:
        results = [run(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, jobs))
    rows = [r for r, _ in results if r is not None]
    failures = [f for _, f in results if f is not None]
    return CorpusAnalysis(rows, {m: separation_test(rows, m) for m in MEASURES}, failures)


# -- synthetic data ---------------------------------------------------------

def _unit(rng, dim):
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _near(rng, base, lo, hi):
    """Unit vector whose cosine with unit ``base`` is uniform in [lo, hi]."""
    c = rng.uniform(lo, hi)
    orth = rng.standard_normal(base.size)
    orth -= orth @ base * base
    orth /= np.linalg.norm(orth)
    return c * base + np.sqrt(1.0 - c * c) * orth


@dataclass(frozen=True)
class SyntheticVocab:
    topic: tuple[str, ...]
    synonyms: dict[str, str]  # topic token -> its near-synonym
    filler: tuple[str, ...]


def generate_synthetic_corpus(n_queries: int, vocab_size: int, seed: int = 0, *, n_negatives: int = 4,
                              dim: int = 16, doc_len: tuple[int, int] = (20, 40),
                              query_len: tuple[int, int] = (3, 6),
                              return_vocab: bool = False):
    """Random corpus whose positives contain query tokens and their synonyms.

    A quarter of the vocabulary are topic tokens, a quarter their
    near-synonyms (cosine 0.8 to 0.95 with the partner) and the rest filler.
    Each query is 3 to 6 distinct topic tokens. A positive document mixes at
    least one exact query token and some synonyms into other tokens; a
    negative never contains a query token or one of its synonyms.

    Returns ``(dataset, embeddings)``, plus the vocabulary split when
    ``return_vocab`` is set.
    """
    if vocab_size < 20:
        raise ValueError(f"vocab_size must be at least 20, got {vocab_size}")
    rng = np.random.default_rng(seed)
    width = len(str(vocab_size - 1))
    names = [f"w{i:0{width}d}" for i in range(vocab_size)]
    n_topic = vocab_size // 4
    topic, syns, filler = names[:n_topic], names[n_topic:2 * n_topic], names[2 * n_topic:]
    vectors = {}
    for t, s in zip(topic, syns):
        vectors[t] = _unit(rng, dim)
        vectors[s] = _near(rng, vectors[t], 0.8, 0.95)
    for f in filler:
        vectors[f] = _unit(rng, dim)
    synonym = dict(zip(topic, syns))

    records = []
    for qi in range(n_queries):
        qlen = int(rng.integers(query_len[0], query_len[1] + 1))
        qlen = min(qlen, n_topic)
        q_tokens = [str(t) for t in rng.choice(topic, size=qlen, replace=False)]
        related = set(q_tokens) | {synonym[t] for t in q_tokens}
        others = [t for t in names if t not in related]

        n = int(rng.integers(doc_len[0], doc_len[1] + 1))
        n_exact = int(rng.integers(1, qlen + 1))
        n_syn = int(rng.integers(1, qlen + 1))
        pos = ([str(t) for t in rng.choice(q_tokens, size=n_exact)]
               + [synonym[str(t)] for t in rng.choice(q_tokens, size=n_syn)]
               + [str(t) for t in rng.choice(others, size=max(n - n_exact - n_syn, 0))])
        pos = [pos[i] for i in rng.permutation(len(pos))]

        negs = []
        for _ in range(n_negatives):
            n = int(rng.integers(doc_len[0], doc_len[1] + 1))
            negs.append(_seq(str(t) for t in rng.choice(others, size=n)))
        records.append(RankingRecord(f"q{qi}", _seq(q_tokens), _seq(pos), tuple(negs)))

    dataset = RankingDataset(tuple(records))
    emb = EmbeddingTable.from_vectors(vectors, seed=seed)
    if return_vocab:
        return dataset, emb, SyntheticVocab(tuple(topic), synonym, tuple(filler))
    return dataset, emb


def _seq(tokens) -> TokenSequence:
    tokens = tuple(tokens)
    return TokenSequence(tokens, " ".join(tokens))
