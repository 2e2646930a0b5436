"""Cosine ranking of documents against a weighted reformulated query."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping

from .config import RunConfig
from .index import InvertedIndex
from .query import ReformulatedQuery


@dataclass(frozen=True)
class ScoredDocument:
    doc_uid: str
    score: float
    matched_terms: list[str] = field(default_factory=list)


def query_vector(rq: ReformulatedQuery, index: InvertedIndex, config: RunConfig) -> dict[str, float]:
    """Query term -> ``weight * idf``.

    Without heuristic weighting every term gets ``count / |rq|`` instead of
    its category weight. Terms unknown to the index drop out (idf 0).
    """
    vec: dict[str, float] = {}
    rq_len = max(rq.rq_len, 1)
    for t in rq.terms:
        w = t.weight if config.heuristic_weighting else t.count / rq_len
        idf = index.idf(t.term)
        if w > 0 and idf > 0:
            vec[t.term] = vec.get(t.term, 0.0) + w * idf
    return vec


def score(rq: ReformulatedQuery, index: InvertedIndex, config: RunConfig) -> dict[str, ScoredDocument]:
    """Cosine score for every document sharing a weighted term with the query."""
    qvec = query_vector(rq, index, config)
    qnorm = math.sqrt(sum(v * v for v in qvec.values()))
    if qnorm == 0:
        return {}
    dots: dict[str, float] = {}
    matched: dict[str, list[str]] = {}
    for term, qw in qvec.items():
        entry = index.vocabulary[term]
        for p in entry.postings:
            dots[p.doc_uid] = dots.get(p.doc_uid, 0.0) + qw * p.normalized_tf * entry.idf
            matched.setdefault(p.doc_uid, []).append(term)
    norms = index.doc_norms
    out = {}
    for uid, dot in dots.items():
        dnorm = norms[uid]
        if dnorm == 0 or dot <= 0:
            continue
        out[uid] = ScoredDocument(uid, dot / (dnorm * qnorm), sorted(matched[uid]))
    return out


def rank(scores: Mapping[str, ScoredDocument]) -> list[ScoredDocument]:
    return sorted(scores.values(), key=lambda d: (-d.score, d.doc_uid))


def top_k(rq: ReformulatedQuery, index: InvertedIndex, k: int, config: RunConfig) -> list[ScoredDocument]:
    if k < 1:
        raise ValueError("k must be at least 1")
    return rank(score(rq, index, config))[:k]


def write_trec_run(
    results: Mapping[str, Iterable[ScoredDocument]], out: IO[str], run_tag: str
) -> None:
    """``query_id Q0 doc_uid rank score run_tag`` lines, ranks from 1."""
    for qid, docs in results.items():
        for rank_, d in enumerate(docs, 1):
            out.write(f"{qid} Q0 {d.doc_uid} {rank_} {d.score:.12g} {run_tag}\n")
