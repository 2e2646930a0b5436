"""File-backed lexicons standing in for the UMLS lexicon, MetaMap and MRDEF.

Each table lives in its own TSV file inside a resource directory:

``acronyms.tsv``
    ``short_form<TAB>full_form[<TAB>acronym|abbreviation]``; repeat the short
    form for every sense.
``synonyms.tsv``
    ``term<TAB>synonym[<TAB>synonym|related]``. Rows marked ``related`` are
    lexicon neighbours that are not true synonyms.
``concepts_metamap.tsv``
    ``surface_form[<TAB>concept_name...]``; extra columns list other names
    of the same concept.
``concepts_mrdef.tsv``
    ``surface_form<TAB>definition``.

Keys are normalized with the text pipeline (case folding, static stopword
removal, Porter stemming) so that lookups compose with query and document
processing. Full forms and concept names keep their case-folded surface
spelling as a display label next to the normalized key.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

from .text import StopwordPolicy, load_stopwords, normalize_term

log = logging.getLogger(__name__)

ACRONYMS_FILE = "acronyms.tsv"
SYNONYMS_FILE = "synonyms.tsv"
METAMAP_FILE = "concepts_metamap.tsv"
MRDEF_FILE = "concepts_mrdef.tsv"
RESOURCE_FILES = (ACRONYMS_FILE, SYNONYMS_FILE, METAMAP_FILE, MRDEF_FILE)


class SchemaError(ValueError):
    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = str(path)
        self.lineno = lineno


@dataclass(frozen=True)
class LexiconTerm:
    """A lexicon value: ``key`` is matched against the index, ``label`` is shown."""

    key: str
    label: str
    kind: str = ""


@dataclass(frozen=True)
class SemanticResourceSet:
    acronym_table: Mapping[str, tuple[LexiconTerm, ...]] = field(default_factory=dict)
    synonym_table: Mapping[str, tuple[LexiconTerm, ...]] = field(default_factory=dict)
    concept_table_metamap: frozenset[str] = frozenset()
    concept_table_mrdef: Mapping[str, str] = field(default_factory=dict)
    concept_names: Mapping[str, tuple[LexiconTerm, ...]] = field(default_factory=dict)

    def lookup_acronym(self, token: str) -> list[str]:
        """Full forms of an acronym or abbreviation (all senses)."""
        return [t.label for t in self.acronym_table.get(token, ())]

    def acronym_entries(self, token: str) -> tuple[LexiconTerm, ...]:
        return self.acronym_table.get(token, ())

    def acronym_kind(self, token: str) -> str | None:
        entries = self.acronym_table.get(token)
        if not entries:
            return None
        return "abbreviation" if all(e.kind == "abbreviation" for e in entries) else "acronym"

    def lookup_synonyms(self, term: str) -> list[str]:
        return [t.key for t in self.synonym_table.get(term, ())]

    def synonym_entries(self, term: str) -> tuple[LexiconTerm, ...]:
        return self.synonym_table.get(term, ())

    def concept_synonyms(self, term: str) -> tuple[LexiconTerm, ...]:
        return self.concept_names.get(term, ())

    def recognize_medical(self, ngram: str) -> bool:
        if not ngram:
            return False
        return ngram in self.concept_table_metamap or ngram in self.concept_table_mrdef

    def full_form_phrases(self) -> dict[tuple[str, ...], str]:
        """Token tuples of every full form, mapped to the index key."""
        out: dict[tuple[str, ...], str] = {}
        for entries in self.acronym_table.values():
            for e in entries:
                out.setdefault(tuple(e.key.split()), e.key)
        return out


@dataclass
class ResourceReport:
    counts: dict[str, int] = field(default_factory=dict)
    duplicates: int = 0
    warnings: list[str] = field(default_factory=list)


def _read_rows(path: Path, report: ResourceReport, min_cols: int, max_cols: int | None):
    if not path.exists():
        report.warnings.append(f"{path}: missing, treated as empty")
        return
    with open(path, encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = [c.strip() for c in line.split("\t")]
            if len(cols) < min_cols or (max_cols is not None and len(cols) > max_cols):
                want = str(min_cols) if max_cols == min_cols else f"{min_cols}-{max_cols or 'n'}"
                raise SchemaError(path, lineno, f"expected {want} tab-separated columns, got {len(cols)}")
            if not cols[0]:
                raise SchemaError(path, lineno, "empty key")
            yield lineno, cols


def _surface(text: str) -> str:
    return " ".join(text.lower().split())


class _Loader:
    def __init__(self, policy: StopwordPolicy):
        self.policy = policy
        self.report = ResourceReport()

    def norm(self, text: str) -> str:
        return normalize_term(text, self.policy)

    def _add(self, table: dict, key: str, term: LexiconTerm, where: str):
        bucket = table.setdefault(key, [])
        if any(t.key == term.key for t in bucket):
            self.report.duplicates += 1
            self.report.warnings.append(f"{where}: duplicate entry {key!r} -> {term.key!r} merged")
            return
        bucket.append(term)

    def acronyms(self, path: Path) -> dict:
        table: dict[str, list[LexiconTerm]] = {}
        for lineno, cols in _read_rows(path, self.report, 2, 3):
            where = f"{path}:{lineno}"
            kind = cols[2].lower() if len(cols) == 3 and cols[2] else "acronym"
            if kind not in ("acronym", "abbreviation"):
                raise SchemaError(path, lineno, f"kind must be acronym or abbreviation, got {cols[2]!r}")
            if not cols[1]:
                raise SchemaError(path, lineno, "empty full form")
            key, full = self.norm(cols[0]), self.norm(cols[1])
            if not key or not full:
                self.report.warnings.append(f"{where}: entry reduces to stopwords only, skipped")
                continue
            self._add(table, key, LexiconTerm(full, _surface(cols[1]), kind), where)
        return table

    def synonyms(self, path: Path) -> dict:
        table: dict[str, list[LexiconTerm]] = {}
        for lineno, cols in _read_rows(path, self.report, 2, 3):
            where = f"{path}:{lineno}"
            relation = cols[2].lower() if len(cols) == 3 and cols[2] else "synonym"
            if relation not in ("synonym", "related"):
                raise SchemaError(path, lineno, f"relation must be synonym or related, got {cols[2]!r}")
            if not cols[1]:
                raise SchemaError(path, lineno, "empty synonym")
            key, syn = self.norm(cols[0]), self.norm(cols[1])
            if not key or not syn:
                self.report.warnings.append(f"{where}: entry reduces to stopwords only, skipped")
                continue
            if key == syn:
                self.report.warnings.append(f"{where}: self-synonym {key!r} dropped")
                continue
            self._add(table, key, LexiconTerm(syn, syn, relation), where)
        return table

    def metamap(self, path: Path) -> tuple[set, dict]:
        concepts: set[str] = set()
        names: dict[str, list[LexiconTerm]] = {}
        for lineno, cols in _read_rows(path, self.report, 1, None):
            where = f"{path}:{lineno}"
            key = self.norm(cols[0])
            if not key:
                self.report.warnings.append(f"{where}: entry reduces to stopwords only, skipped")
                continue
            if key in concepts:
                self.report.duplicates += 1
                self.report.warnings.append(f"{where}: duplicate concept {key!r} merged")
            concepts.add(key)
            for name in cols[1:]:
                nkey = self.norm(name)
                if nkey and nkey != key:
                    self._add(names, key, LexiconTerm(nkey, _surface(name), "concept"), where)
        return concepts, names

    def mrdef(self, path: Path) -> dict:
        table: dict[str, str] = {}
        for lineno, cols in _read_rows(path, self.report, 2, 2):
            where = f"{path}:{lineno}"
            key = self.norm(cols[0])
            if not key:
                self.report.warnings.append(f"{where}: entry reduces to stopwords only, skipped")
                continue
            if key in table:
                self.report.duplicates += 1
                self.report.warnings.append(f"{where}: duplicate definition for {key!r} merged")
                continue
            table[key] = cols[1]
        return table


def _freeze(table: dict) -> Mapping[str, tuple[LexiconTerm, ...]]:
    return MappingProxyType({k: tuple(v) for k, v in table.items() if v})


def _load(directory, stopwords) -> tuple[SemanticResourceSet, ResourceReport]:
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"resource directory not found: {directory}")
    static = load_stopwords() if stopwords is None else frozenset(stopwords)
    loader = _Loader(StopwordPolicy.static(static))
    acr = loader.acronyms(directory / ACRONYMS_FILE)
    syn = loader.synonyms(directory / SYNONYMS_FILE)
    concepts, names = loader.metamap(directory / METAMAP_FILE)
    mrdef = loader.mrdef(directory / MRDEF_FILE)
    res = SemanticResourceSet(
        acronym_table=_freeze(acr),
        synonym_table=_freeze(syn),
        concept_table_metamap=frozenset(concepts),
        concept_table_mrdef=MappingProxyType(mrdef),
        concept_names=_freeze(names),
    )
    rep = loader.report
    rep.counts = {
        ACRONYMS_FILE: sum(len(v) for v in res.acronym_table.values()),
        SYNONYMS_FILE: sum(len(v) for v in res.synonym_table.values()),
        METAMAP_FILE: len(res.concept_table_metamap),
        MRDEF_FILE: len(res.concept_table_mrdef),
    }
    for w in rep.warnings:
        log.warning(w)
    return res, rep


def load_resources(directory, stopwords=None) -> SemanticResourceSet:
    """Load and normalize every table in ``directory``.

    ``stopwords`` is the static list used when normalizing keys; it should be
    the one used to build the index. Raises :class:`SchemaError` on bad rows.
    """
    return _load(directory, stopwords)[0]


def validate_resources(directory, stopwords=None) -> ResourceReport:
    return _load(directory, stopwords)[1]


EMPTY_RESOURCES = SemanticResourceSet()
