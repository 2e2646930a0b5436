"""Query categorization, expansion and heuristic term weighting."""

from __future__ import annotations

import html
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from decimal import ROUND_DOWN, Decimal
from enum import Enum
from pathlib import Path

from .config import RunConfig
from .resources import SemanticResourceSet
from .text import NGramSet, StopwordPolicy, pipeline


class ZeroLengthQuery(ValueError):
    pass


class TermCategory(str, Enum):
    MEDICAL = "Medical"
    ACRONYM = "Acronym"
    ABBREVIATION = "Abbreviation"
    SUPPORTIVE = "Supportive"
    SYNONYM = "Synonym"
    FULL_FORM = "FullFormExpansion"
    OTHER_RELATED = "OtherRelated"

    @property
    def is_original(self) -> bool:
        return self in _ORIGINAL

    def __str__(self) -> str:
        return self.value


_ORIGINAL = frozenset(
    {TermCategory.MEDICAL, TermCategory.ACRONYM, TermCategory.ABBREVIATION, TermCategory.SUPPORTIVE}
)
_KEY_CATEGORIES = frozenset({TermCategory.MEDICAL, TermCategory.ACRONYM, TermCategory.ABBREVIATION})
# Which expansion survives when two sources propose the same term.
_EXPANSION_RANK = {TermCategory.SYNONYM: 2, TermCategory.FULL_FORM: 1, TermCategory.OTHER_RELATED: 0}


@dataclass(frozen=True)
class CategorizedTerm:
    term: str
    category: TermCategory
    size: int
    count: int = 1


@dataclass(frozen=True)
class WeightedQueryTerm:
    term: str
    category: TermCategory
    source_term: str | None = None
    weight: float = 0.0
    count: int = 1
    label: str = ""
    origin: str = ""

    @property
    def display(self) -> str:
        return self.label or self.term


@dataclass(frozen=True)
class ReformulatedQuery:
    query_id: str = ""
    original_terms: list[WeightedQueryTerm] = field(default_factory=list)
    expansion_terms: list[WeightedQueryTerm] = field(default_factory=list)
    q_len: int = 0
    rq_len: int = 0

    @property
    def terms(self) -> list[WeightedQueryTerm]:
        return self.original_terms + self.expansion_terms

    def get(self, term: str) -> WeightedQueryTerm | None:
        for t in self.terms:
            if t.term == term or t.label == term:
                return t
        return None

    def weights(self) -> dict[str, float]:
        return {t.term: t.weight for t in self.terms}


def categorize(
    grams: NGramSet, resources: SemanticResourceSet, use_concepts: bool = True
) -> list[CategorizedTerm]:
    """Label query n-grams, trigrams first.

    An n-gram with a lexicon full form is an Acronym (or Abbreviation);
    otherwise it is Medical when a concept table knows it. Unlabelled
    unigrams are Supportive and unlabelled compounds are dropped. Unigrams
    inside a labelled compound are still labelled on their own.
    """
    out: list[CategorizedTerm] = []
    for size, candidates in ((3, grams.trigrams), (2, grams.bigrams), (1, grams.unigrams)):
        counts = Counter(candidates)
        for term in dict.fromkeys(candidates):
            kind = resources.acronym_kind(term)
            if kind == "abbreviation":
                cat = TermCategory.ABBREVIATION
            elif kind == "acronym":
                cat = TermCategory.ACRONYM
            elif use_concepts and resources.recognize_medical(term):
                cat = TermCategory.MEDICAL
            elif size == 1:
                cat = TermCategory.SUPPORTIVE
            else:
                continue
            out.append(CategorizedTerm(term, cat, size, counts[term]))
    return out


def expand(
    categorized: list[CategorizedTerm],
    resources: SemanticResourceSet,
    config: RunConfig,
    query_id: str = "",
) -> ReformulatedQuery:
    """Build the reformulated query (weights are filled by :func:`assign_weights`)."""
    kept = [c for c in categorized if c.size == 1 or config.expand_compounds]
    ordered = sorted(kept, key=lambda c: c.size)  # stable: unigrams, bigrams, trigrams
    original = [WeightedQueryTerm(c.term, c.category, count=c.count) for c in ordered]
    seen = {t.term for t in original}

    # Expansion sources are visited longest first, matching categorization.
    sources = [c for c in kept if c.category in _KEY_CATEGORIES]
    proposals: list[WeightedQueryTerm] = []
    if config.expand_fullforms:
        for c in sources:
            if c.category in (TermCategory.ACRONYM, TermCategory.ABBREVIATION):
                for e in resources.acronym_entries(c.term):
                    proposals.append(
                        WeightedQueryTerm(e.key, TermCategory.FULL_FORM, c.term, label=e.label, origin="acronym")
                    )
    if config.expand_synonyms:
        for c in sources:
            for e in resources.synonym_entries(c.term):
                cat = TermCategory.SYNONYM if e.kind == "synonym" else TermCategory.OTHER_RELATED
                proposals.append(WeightedQueryTerm(e.key, cat, c.term, label=e.label, origin="lexicon"))
        for c in sources:
            for e in resources.concept_synonyms(c.term):
                proposals.append(
                    WeightedQueryTerm(e.key, TermCategory.SYNONYM, c.term, label=e.label, origin="concept")
                )

    expansion: dict[str, WeightedQueryTerm] = {}
    for p in proposals:
        if p.term in seen:
            continue
        prev = expansion.get(p.term)
        if prev is None or _EXPANSION_RANK[p.category] > _EXPANSION_RANK[prev.category]:
            expansion[p.term] = p
    exp_terms = list(expansion.values())
    # Lengths count occurrences, so a repeated term cannot push its weight past 1.
    q_len = sum(t.count for t in original)
    return ReformulatedQuery(
        query_id=query_id,
        original_terms=original,
        expansion_terms=exp_terms,
        q_len=q_len,
        rq_len=q_len + len(exp_terms),
    )


def assign_weights(rq: ReformulatedQuery) -> ReformulatedQuery:
    """Heuristic query-term weights by category.

    Medical terms, acronyms and abbreviations get ``tf/|q|``, supportive
    terms half that, synonyms the weight of the term they came from, and
    full forms or other related concepts ``1/|rq|``.
    """
    if rq.q_len < 1:
        raise ZeroLengthQuery(f"query {rq.query_id!r} has no terms left after filtering")
    q_len, rq_len = rq.q_len, max(rq.rq_len, rq.q_len)

    original = []
    by_term: dict[str, float] = {}
    for t in rq.original_terms:
        if t.category == TermCategory.SUPPORTIVE:
            w = t.count / (2 * q_len)
        else:
            w = t.count / q_len
        by_term[t.term] = w
        original.append(replace(t, weight=w))

    expansion = []
    for t in rq.expansion_terms:
        if t.category == TermCategory.SYNONYM and t.source_term in by_term:
            w = by_term[t.source_term]
        else:
            w = 1 / rq_len
        expansion.append(replace(t, weight=w))
    return replace(rq, original_terms=original, expansion_terms=expansion)


def reformulate(
    text: str,
    resources: SemanticResourceSet,
    policy: StopwordPolicy,
    config: RunConfig,
    query_id: str = "",
) -> ReformulatedQuery:
    """Text to weighted reformulated query. Empty queries come back empty."""
    grams = pipeline(text, policy)
    cats = categorize(grams, resources, use_concepts=config.heuristic_weighting)
    rq = expand(cats, resources, config, query_id)
    if rq.q_len == 0:
        return rq
    return assign_weights(rq)


def display_weight(w: float) -> str:
    """Weight truncated to two decimals (0.125 -> 0.12, 1/6 -> 0.16)."""
    return str(Decimal(repr(w)).quantize(Decimal("0.01"), rounding=ROUND_DOWN))


def weight_table(rq: ReformulatedQuery) -> str:
    lines = [f"# query {rq.query_id or '-'}  |q|={rq.q_len}  |rq|={rq.rq_len}"]
    lines.append("term\tcategory\tweight\texact")
    for t in rq.terms:
        lines.append(f"{t.display}\t{t.category}\t{display_weight(t.weight)}\t{t.weight:.6f}")
    return "\n".join(lines)


def lexicon_lists(rq: ReformulatedQuery) -> dict[str, list[str]]:
    """Acronyms / abbreviations / expansions / lexicon synonyms of a query.

    Full forms and concept names are reported by label; lexicon synonyms and
    related terms by their stemmed key.
    """
    out = {"acronyms": [], "abbreviations": [], "expansion": [], "synonyms": []}
    for t in rq.original_terms:
        if t.category == TermCategory.ACRONYM:
            out["acronyms"].append(t.term)
        elif t.category == TermCategory.ABBREVIATION:
            out["abbreviations"].append(t.term)
    for t in rq.expansion_terms:
        if t.origin == "lexicon":
            out["synonyms"].append(t.term)
        else:
            out["expansion"].append(t.display)
    return out


# -- topics -----------------------------------------------------------------

@dataclass(frozen=True)
class Topic:
    id: str
    title: str = ""
    desc: str = ""
    narr: str = ""
    profile: str = ""
    discharge_summary: str = ""

    def text(self, field_spec: str = "title") -> str:
        parts = []
        for name in field_spec.split("+"):
            name = name.strip()
            if name not in ("title", "desc", "narr", "profile"):
                raise ValueError(f"unknown topic field {name!r}")
            parts.append(getattr(self, name))
        return " ".join(p for p in parts if p)


_TOPIC_RE = re.compile(r"<topic\b[^>]*>(.*?)</topic\s*>", re.S | re.I)
_FIELD_RE = re.compile(r"<(\w+)\b[^>]*>(.*?)</\1\s*>", re.S)


def parse_topics(text: str) -> list[Topic]:
    """Parse ``<topic>`` blocks of the CLEF eHealth topic format."""
    topics = []
    for block in _TOPIC_RE.findall(text):
        values = {}
        for name, value in _FIELD_RE.findall(block):
            values[name.lower()] = " ".join(html.unescape(value).split())
        if not values.get("id"):
            raise ValueError("topic without <id>")
        topics.append(Topic(**{k: v for k, v in values.items() if k in Topic.__dataclass_fields__}))
    return topics


def load_topics(path: str | Path) -> list[Topic]:
    return parse_topics(Path(path).read_text(encoding="utf-8", errors="replace"))
