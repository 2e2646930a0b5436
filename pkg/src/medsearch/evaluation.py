"""Relevance judgments, P@k and the RUN 1-5 experiment matrix."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .config import RUNS, RunConfig
from .corpus import Document
from .index import InvertedIndex, build_index
from .query import Topic, reformulate
from .resources import SemanticResourceSet
from .retrieval import ScoredDocument, top_k, write_trec_run
from .text import StopwordPolicy, load_stopwords

log = logging.getLogger(__name__)


class InvalidGrade(ValueError):
    pass


def binarize(grade: int) -> int:
    """Grades 0-1 are irrelevant, 2-3 relevant."""
    if isinstance(grade, bool) or grade not in (0, 1, 2, 3):
        raise InvalidGrade(f"relevance grade must be 0-3, got {grade!r}")
    return 1 if grade >= 2 else 0


@dataclass
class Qrels:
    judgments: dict[tuple[str, str], int] = field(default_factory=dict)

    def query_ids(self) -> set[str]:
        return {q for q, _ in self.judgments}

    def is_relevant(self, query_id: str, doc_uid: str) -> bool:
        # unjudged counts as irrelevant
        return binarize(self.judgments.get((query_id, doc_uid), 0)) == 1


def parse_qrels(text: str, source: str = "<qrels>") -> Qrels:
    """TREC qrels: ``query_id 0 doc_uid grade`` per line."""
    judgments = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        cols = line.split()
        if len(cols) != 4:
            raise ValueError(f"{source}:{lineno}: expected 4 columns, got {len(cols)}")
        qid, _, uid, grade = cols
        try:
            g = int(grade)
        except ValueError:
            raise InvalidGrade(f"{source}:{lineno}: grade {grade!r} is not an integer") from None
        if g not in (0, 1, 2, 3):
            raise InvalidGrade(f"{source}:{lineno}: grade {g} outside 0-3")
        judgments[(qid, uid)] = g
    return Qrels(judgments)


def load_qrels(path: str | Path) -> Qrels:
    return parse_qrels(Path(path).read_text(encoding="utf-8"), str(path))


def precision_at_k(
    results: Sequence[ScoredDocument],
    qrels: Qrels,
    query_id: str,
    k: int = 10,
    mode: str = "fixed",
) -> float:
    """Relevant documents among the first ``k`` results.

    ``fixed`` divides by ``k``; ``retrieved`` divides by the number of
    results actually inspected (``min(k, len(results))``).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    head = results[:k]
    hits = sum(1 for d in head if qrels.is_relevant(query_id, d.doc_uid))
    if mode == "fixed":
        return hits / k
    if mode == "retrieved":
        return hits / len(head) if head else 0.0
    raise ValueError(f"unknown precision mode {mode!r}")


@dataclass
class EvalReport:
    run_id: str
    per_query: dict[str, float]
    mean_p10: float
    skipped: list[str] = field(default_factory=list)
    failed: dict[str, str] = field(default_factory=dict)


def evaluate_run(
    run_id: str,
    results: dict[str, list[ScoredDocument]],
    qrels: Qrels,
    query_ids: Iterable[str],
    k: int = 10,
    mode: str = "fixed",
) -> EvalReport:
    judged = qrels.query_ids()
    per_query, skipped = {}, []
    for qid in query_ids:
        if qid not in judged:
            skipped.append(qid)
            continue
        per_query[qid] = precision_at_k(results.get(qid, []), qrels, qid, k, mode)
    mean = sum(per_query.values()) / len(per_query) if per_query else 0.0
    return EvalReport(run_id, dict(sorted(per_query.items())), mean, skipped)


def search_topics(
    topics: Sequence[Topic],
    index: InvertedIndex,
    resources: SemanticResourceSet,
    config: RunConfig,
    k: int = 10,
    query_field: str = "title",
) -> tuple[dict[str, list[ScoredDocument]], dict[str, str]]:
    """Run every topic; a topic that raises is recorded and skipped."""
    results, failed = {}, {}
    for topic in topics:
        try:
            rq = reformulate(topic.text(query_field), resources, index.policy, config, topic.id)
            results[topic.id] = top_k(rq, index, k, config)
        except Exception as exc:
            log.error("query %s failed: %s", topic.id, exc)
            failed[topic.id] = str(exc)
    return results, failed


@dataclass
class RunComparison:
    run_id: str
    better: list[str]
    equal: list[str]
    worse: list[str]
    deltas: dict[str, float]


@dataclass
class MatrixResult:
    reports: list[EvalReport]
    comparisons: list[RunComparison]
    results: dict[str, dict[str, list[ScoredDocument]]]
    vocab_sizes: dict[str, int]
    baseline: str

    def report(self, run_id: str) -> EvalReport:
        for r in self.reports:
            if r.run_id == run_id:
                return r
        raise KeyError(run_id)


def compare(baseline: EvalReport, other: EvalReport) -> RunComparison:
    better, equal, worse, deltas = [], [], [], {}
    for qid, base in baseline.per_query.items():
        if qid not in other.per_query:
            continue
        d = other.per_query[qid] - base
        deltas[qid] = d
        (better if d > 0 else worse if d < 0 else equal).append(qid)
    return RunComparison(other.run_id, better, equal, worse, deltas)


def run_matrix(
    docs: Sequence[Document],
    topics: Sequence[Topic],
    qrels: Qrels,
    resources: SemanticResourceSet,
    runs: Sequence[RunConfig] = tuple(RUNS.values()),
    policy: StopwordPolicy | None = None,
    k: int = 10,
    query_field: str = "title",
    mode: str = "fixed",
    augment: bool = True,
) -> MatrixResult:
    """Index, search and evaluate each run; compare all against the first.

    Runs with identical index flags share one index. ``policy`` defaults to
    the bundled static stopword list.
    """
    if not runs:
        raise ValueError("no runs requested")
    if policy is None:
        policy = StopwordPolicy.static(load_stopwords())
    indexes: dict[tuple, InvertedIndex] = {}
    reports, all_results, vocab = [], {}, {}
    query_ids = [t.id for t in topics]
    for cfg in runs:
        key = cfg.index_key()
        if key not in indexes:
            indexes[key] = build_index(docs, resources, policy, cfg, augment=augment)
        index = indexes[key]
        vocab[cfg.run_id] = len(index.vocabulary)
        results, failed = search_topics(topics, index, resources, cfg, k, query_field)
        rep = evaluate_run(cfg.run_id, results, qrels, [q for q in query_ids if q not in failed], k, mode)
        rep.failed = failed
        reports.append(rep)
        all_results[cfg.run_id] = results
    base = reports[0]
    comparisons = [compare(base, r) for r in reports]
    return MatrixResult(reports, comparisons, all_results, vocab, base.run_id)


def write_reports(matrix: MatrixResult, out_dir: str | Path) -> list[Path]:
    """Per-run P@k TSVs, a summary TSV, plot data and TREC run files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for rep in matrix.reports:
        p = out / f"{rep.run_id}.p_at_10.tsv"
        with open(p, "w", encoding="utf-8") as fh:
            fh.write("run_id\tquery_id\tp_at_10\n")
            for qid, v in rep.per_query.items():
                fh.write(f"{rep.run_id}\t{qid}\t{v:.4f}\n")
        written.append(p)
        p = out / f"{rep.run_id}.run"
        with open(p, "w", encoding="utf-8") as fh:
            write_trec_run(matrix.results[rep.run_id], fh, rep.run_id)
        written.append(p)

    p = out / "summary.tsv"
    with open(p, "w", encoding="utf-8") as fh:
        fh.write("run_id\tmean_p10\tqueries\tbetter\tequal\tworse\tvocabulary\tbaseline\n")
        for rep, cmp_ in zip(matrix.reports, matrix.comparisons):
            fh.write(
                f"{rep.run_id}\t{rep.mean_p10:.4f}\t{len(rep.per_query)}\t{len(cmp_.better)}\t"
                f"{len(cmp_.equal)}\t{len(cmp_.worse)}\t{matrix.vocab_sizes[rep.run_id]}\t"
                f"{'yes' if rep.run_id == matrix.baseline else 'no'}\n"
            )
    written.append(p)

    p = out / "plotdata.tsv"
    base = matrix.report(matrix.baseline)
    with open(p, "w", encoding="utf-8") as fh:
        fh.write("run_id\tquery_id\tbaseline_p10\trun_p10\tdelta\n")
        for rep in matrix.reports:
            for qid, v in rep.per_query.items():
                b = base.per_query.get(qid, 0.0)
                fh.write(f"{rep.run_id}\t{qid}\t{b:.4f}\t{v:.4f}\t{v - b:+.4f}\n")
    written.append(p)
    return written


def format_summary(matrix: MatrixResult) -> str:
    lines = [f"{'run':<8}{'P@10':>8}{'better':>8}{'equal':>8}{'worse':>8}{'vocab':>8}"]
    for rep, c in zip(matrix.reports, matrix.comparisons):
        flag = "  (baseline)" if rep.run_id == matrix.baseline else ""
        lines.append(
            f"{rep.run_id:<8}{rep.mean_p10:>8.4f}{len(c.better):>8}{len(c.equal):>8}"
            f"{len(c.worse):>8}{matrix.vocab_sizes[rep.run_id]:>8}{flag}"
        )
    return "\n".join(lines)
