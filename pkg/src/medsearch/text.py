"""Lexical processing shared by queries and documents."""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from importlib import resources as _pkg_resources
from pathlib import Path
from typing import Iterable, Mapping

from .porter import porter_stem

log = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[^\W_]+")

# Relative tolerance used when comparing idf gaps for ties.
GAP_TIE_TOLERANCE = 1e-12


def fold_and_tokenize(text: str) -> list[str]:
    """Lowercase ``text`` and split it on every non-alphanumeric character."""
    return _TOKEN_RE.findall(text.lower())


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Read a stopword file (one word per line, ``#`` comments).

    With no path, the bundled English list is returned.
    """
    if path is None:
        text = (
            _pkg_resources.files("medsearch")
            .joinpath("data/stopwords.txt")
            .read_text(encoding="utf-8")
        )
    else:
        text = Path(path).read_text(encoding="utf-8", errors="replace")
    words = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            words.add(line)
    return frozenset(words)


def compute_idf(df: int, n_docs: int) -> float:
    """``log10(N / df)``; zero for terms that never occur."""
    if df <= 0:
        return 0.0
    return math.log10(n_docs / df)


@dataclass(frozen=True)
class StopwordPolicy:
    """Static stopwords plus the stems whose idf fell under the gap threshold."""

    static_list: frozenset[str] = frozenset()
    threshold: float = 0.0
    augmented_list: frozenset[str] = frozenset()

    @property
    def active(self) -> frozenset[str]:
        return self.static_list | self.augmented_list

    @classmethod
    def static(cls, words: Iterable[str]) -> "StopwordPolicy":
        return cls(static_list=frozenset(words))


def idf_gap_threshold(idfs: Iterable[float]) -> float:
    """Midpoint of the widest gap between consecutive distinct idf values.

    Among gaps of equal width the lowest one wins, so the fewest terms fall
    below the threshold. Returns 0.0 when fewer than two distinct values exist.
    """
    values = sorted(set(idfs))
    if len(values) < 2:
        return 0.0
    gaps = [(values[i + 1] - values[i], i) for i in range(len(values) - 1)]
    widest = max(g for g, _ in gaps)
    for gap, i in gaps:
        if gap >= widest - GAP_TIE_TOLERANCE * max(1.0, abs(widest)):
            return (values[i] + values[i + 1]) / 2.0
    raise AssertionError("unreachable")


def augment_stopwords(
    vocabulary_idfs: Mapping[str, float], static_list: Iterable[str]
) -> StopwordPolicy:
    """Extend ``static_list`` with every term whose idf is below the gap threshold."""
    if not vocabulary_idfs:
        raise ValueError("augment_stopwords needs a non-empty vocabulary")
    static = frozenset(static_list)
    if len(set(vocabulary_idfs.values())) < 2:
        log.info("idf values are degenerate; no stopwords added")
        return StopwordPolicy(static, 0.0, frozenset())
    nu = idf_gap_threshold(vocabulary_idfs.values())
    augmented = frozenset(t for t, v in vocabulary_idfs.items() if v < nu)
    return StopwordPolicy(static, nu, augmented)


@dataclass(frozen=True)
class NGramSet:
    tokens: tuple[str, ...] = ()
    unigrams: list[str] = field(default_factory=list)
    bigrams: list[str] = field(default_factory=list)
    trigrams: list[str] = field(default_factory=list)


def ngrams(tokens: list[str] | tuple[str, ...], n: int) -> list[str]:
    return [" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def filtered_tokens(text: str, policy: StopwordPolicy) -> list[str]:
    """Tokenize, drop stopwords, stem.

    Static stopwords are surface forms and are removed before stemming; the
    augmented list holds stems, so it is applied afterwards. A stem that
    collapses onto a static stopword (``being`` -> ``be``) is dropped too.
    """
    static = policy.static_list
    active = policy.active
    out = []
    for tok in fold_and_tokenize(text):
        if tok in static:
            continue
        stem = porter_stem(tok)
        if stem and stem not in active:
            out.append(stem)
    return out


def pipeline(text: str, policy: StopwordPolicy) -> NGramSet:
    tokens = filtered_tokens(text, policy)
    return NGramSet(
        tokens=tuple(tokens),
        unigrams=list(tokens),
        bigrams=ngrams(tokens, 2),
        trigrams=ngrams(tokens, 3),
    )


def normalize_term(text: str, policy: StopwordPolicy) -> str:
    """Space-joined stemmed form used as a lookup key for lexicon entries."""
    return " ".join(filtered_tokens(text, policy))
