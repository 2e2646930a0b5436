"""Semantically enriched inverted index: build, persist, load."""

from __future__ import annotations

import json
import logging
import math
import os
import shutil
import tempfile
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .config import RunConfig
from .corpus import Document
from .resources import SemanticResourceSet
from .text import (
    StopwordPolicy,
    augment_stopwords,
    compute_idf,
    filtered_tokens,
    ngrams,
)

log = logging.getLogger(__name__)

FORMAT_NAME = "medsearch-index"
FORMAT_VERSION = 1
_HEADER = f"#{FORMAT_NAME}\tversion={FORMAT_VERSION}"
_FOOTER = "#end"


class EmptyCorpus(ValueError):
    pass


class IndexFormatError(IOError):
    """The on-disk index is missing, truncated or otherwise unreadable."""


class FormatVersionMismatch(IndexFormatError):
    pass


@dataclass(frozen=True)
class Posting:
    doc_uid: str
    tf: int
    normalized_tf: float


@dataclass
class TermEntry:
    df: int
    idf: float
    postings: list[Posting] = field(default_factory=list)


@dataclass
class InvertedIndex:
    N: int
    vocabulary: dict[str, TermEntry]
    doc_lengths: dict[str, int]
    config: RunConfig = field(default_factory=RunConfig)
    policy: StopwordPolicy = field(default_factory=StopwordPolicy)
    _doc_norms: dict[str, float] | None = field(default=None, repr=False, compare=False)

    def idf(self, term: str) -> float:
        entry = self.vocabulary.get(term)
        return entry.idf if entry else 0.0

    def postings(self, term: str) -> list[Posting]:
        entry = self.vocabulary.get(term)
        return entry.postings if entry else []

    @property
    def doc_norms(self) -> dict[str, float]:
        """Euclidean length of each document's ``ntf * idf`` vector."""
        if self._doc_norms is None:
            sq: dict[str, float] = {uid: 0.0 for uid in self.doc_lengths}
            for entry in self.vocabulary.values():
                for p in entry.postings:
                    w = p.normalized_tf * entry.idf
                    sq[p.doc_uid] += w * w
            self._doc_norms = {uid: math.sqrt(v) for uid, v in sq.items()}
        return self._doc_norms

    def stats(self) -> dict:
        return {
            "N": self.N,
            "vocabulary": len(self.vocabulary),
            "postings": sum(len(e.postings) for e in self.vocabulary.values()),
        }


def normalized_tf(tf: int, doc_length: int) -> float:
    if tf > 0:
        return tf / doc_length
    return 0.0


def derive_stopword_policy(docs: Iterable[Document], static_list: Iterable[str]) -> StopwordPolicy:
    """Run the idf-gap rule over the unigram vocabulary left by the static list."""
    static = StopwordPolicy.static(static_list)
    df: Counter[str] = Counter()
    n = 0
    for doc in docs:
        n += 1
        df.update(set(filtered_tokens(doc.text, static)))
    if not df:
        return static
    idfs = {t: compute_idf(c, n) for t, c in df.items()}
    return augment_stopwords(idfs, static.static_list)


def document_term_counts(
    tokens: Sequence[str],
    resources: SemanticResourceSet,
    config: RunConfig,
    phrases: dict[tuple[str, ...], str] | None = None,
) -> Counter[str]:
    """Term frequencies for one filtered, stemmed document."""
    counts: Counter[str] = Counter(tokens)
    if config.index_fullforms:
        for tok in tokens:
            for e in resources.acronym_entries(tok):
                counts[e.key] += 1
        # Full forms written out in the text; shorter ones are already
        # counted as unigrams or compounds.
        if phrases is None:
            phrases = resources.full_form_phrases()
        covered = 3 if config.index_compounds else 1
        for phrase, key in phrases.items():
            n = len(phrase)
            if n <= covered or n > len(tokens):
                continue
            hits = sum(1 for i in range(len(tokens) - n + 1) if tuple(tokens[i : i + n]) == phrase)
            if hits:
                counts[key] += hits
    if config.index_compounds:
        for gram in ngrams(tokens, 2) + ngrams(tokens, 3):
            counts[gram] += 1
            for e in resources.acronym_entries(gram):
                counts[e.key] += 1
    return counts


def build_index(
    docs: Sequence[Document],
    resources: SemanticResourceSet,
    policy: StopwordPolicy,
    config: RunConfig,
    augment: bool = True,
) -> InvertedIndex:
    """Index ``docs`` under ``config``.

    With ``augment`` the idf-gap stopwords are derived from the corpus (on
    top of ``policy.static_list``) before indexing; otherwise ``policy`` is
    used as given. Document length counts the filtered unigrams only.
    """
    if not docs:
        raise EmptyCorpus("cannot build an index from zero documents")
    if augment:
        policy = derive_stopword_policy(docs, policy.static_list)

    phrases = resources.full_form_phrases() if config.index_fullforms else None
    postings: dict[str, list[tuple[str, int]]] = {}
    doc_lengths: dict[str, int] = {}
    for doc in docs:
        tokens = filtered_tokens(doc.text, policy)
        doc_lengths[doc.uid] = len(tokens)
        for term, tf in document_term_counts(tokens, resources, config, phrases).items():
            postings.setdefault(term, []).append((doc.uid, tf))

    n_docs = len(doc_lengths)
    vocabulary: dict[str, TermEntry] = {}
    for term in sorted(postings):
        plist = [Posting(uid, tf, normalized_tf(tf, doc_lengths[uid])) for uid, tf in postings[term]]
        df = len(plist)
        vocabulary[term] = TermEntry(df, compute_idf(df, n_docs), plist)
    log.info("indexed %d documents, %d terms", n_docs, len(vocabulary))
    return InvertedIndex(n_docs, vocabulary, doc_lengths, config, policy)


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_table(path: Path, rows: Iterable[Iterable[object]]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_HEADER + "\n")
        for row in rows:
            fh.write("\t".join(str(c) for c in row) + "\n")
            n += 1
        fh.write(f"{_FOOTER}\t{n}\n")
    return n


def persist_index(index: InvertedIndex, path: str | Path, meta: dict | None = None) -> None:
    """Write ``index`` to directory ``path``, replacing it atomically.

    ``meta`` is stored verbatim in the manifest (e.g. the resource directory).
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".tmp-index-", dir=path.parent))
    try:
        counts = {}
        counts["vocab"] = _write_table(
            tmp / "vocab.tsv",
            ((t, e.df, _fmt(e.idf)) for t, e in index.vocabulary.items()),
        )
        counts["postings"] = _write_table(
            tmp / "postings.tsv",
            (
                (t, p.doc_uid, p.tf, _fmt(p.normalized_tf))
                for t, e in index.vocabulary.items()
                for p in e.postings
            ),
        )
        counts["doclen"] = _write_table(tmp / "doclen.tsv", index.doc_lengths.items())
        stop_rows = [(w, "static") for w in sorted(index.policy.static_list)]
        stop_rows += [(w, "idf") for w in sorted(index.policy.augmented_list)]
        counts["stopwords"] = _write_table(tmp / "stopwords.tsv", stop_rows)
        manifest = {
            "format": FORMAT_NAME,
            "format_version": FORMAT_VERSION,
            "N": index.N,
            "config": index.config.to_dict(),
            "config_hash": index.config.index_hash(),
            "idf_threshold": _fmt(index.policy.threshold),
            "rows": counts,
            "meta": meta or {},
        }
        with open(tmp / "manifest", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        if path.exists():
            shutil.rmtree(path)
        os.replace(tmp, path)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def _read_table(path: Path, ncols: int, expected_rows: int) -> list[list[str]]:
    try:
        lines = path.read_text(encoding="utf-8").split("\n")
    except OSError as exc:
        raise IndexFormatError(f"cannot read {path}: {exc}") from exc
    if not lines or lines[0] != _HEADER:
        raise FormatVersionMismatch(f"{path}: bad or missing header {lines[0][:60]!r}")
    if lines[-1] == "":
        lines.pop()
    if not lines[-1].startswith(_FOOTER + "\t"):
        raise IndexFormatError(f"{path}: truncated (no end marker)")
    body = lines[1:-1]
    if lines[-1] != f"{_FOOTER}\t{len(body)}" or len(body) != expected_rows:
        raise IndexFormatError(f"{path}: row count mismatch")
    rows = []
    for i, line in enumerate(body, 2):
        cols = line.split("\t")
        if len(cols) != ncols:
            raise IndexFormatError(f"{path}:{i}: expected {ncols} columns")
        rows.append(cols)
    return rows


def read_manifest(path: str | Path) -> dict:
    path = Path(path)
    try:
        manifest = json.loads((path / "manifest").read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise IndexFormatError(f"no index at {path}") from exc
    except (OSError, ValueError) as exc:
        raise IndexFormatError(f"unreadable manifest in {path}: {exc}") from exc
    return manifest


def load_index(path: str | Path) -> InvertedIndex:
    path = Path(path)
    manifest = read_manifest(path)
    if manifest.get("format") != FORMAT_NAME or manifest.get("format_version") != FORMAT_VERSION:
        raise FormatVersionMismatch(
            f"{path}: expected {FORMAT_NAME} v{FORMAT_VERSION}, found "
            f"{manifest.get('format')} v{manifest.get('format_version')}"
        )
    try:
        rows = manifest["rows"]
        vocab_rows = _read_table(path / "vocab.tsv", 3, rows["vocab"])
        post_rows = _read_table(path / "postings.tsv", 4, rows["postings"])
        len_rows = _read_table(path / "doclen.tsv", 2, rows["doclen"])
        stop_rows = _read_table(path / "stopwords.tsv", 2, rows["stopwords"])

        vocabulary = {t: TermEntry(int(df), float(idf)) for t, df, idf in vocab_rows}
        for term, uid, tf, ntf in post_rows:
            vocabulary[term].postings.append(Posting(uid, int(tf), float(ntf)))
        doc_lengths = {uid: int(n) for uid, n in len_rows}
        policy = StopwordPolicy(
            static_list=frozenset(w for w, src in stop_rows if src == "static"),
            threshold=float(manifest["idf_threshold"]),
            augmented_list=frozenset(w for w, src in stop_rows if src == "idf"),
        )
        config = RunConfig.from_dict(manifest["config"])
        n_docs = int(manifest["N"])
    except IndexFormatError:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise IndexFormatError(f"{path}: corrupt index ({exc!r})") from exc
    if n_docs != len(doc_lengths):
        raise IndexFormatError(f"{path}: N does not match doclen.tsv")
    return InvertedIndex(n_docs, vocabulary, doc_lengths, config, policy)
