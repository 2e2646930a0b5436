"""Shared fixtures, corpus generators and independent oracles for the tests."""

from __future__ import annotations

import math
import random
import re
from collections import Counter
from importlib.resources import files
from pathlib import Path

import numpy as np
from nltk.stem.porter import PorterStemmer

from medsearch import Document, StopwordPolicy, load_resources, load_stopwords

EXAMPLE = Path(str(files("medsearch") / "data" / "example"))
RESOURCES_DIR = EXAMPLE / "resources"

Q1 = "MRSA and wound infection, and its danger"
Q2 = "Patients diagnosed with localized prostate cancer and treated with robotic surgery"

STOPWORDS = load_stopwords()
STATIC = StopwordPolicy.static(STOPWORDS)


def example_resources():
    return load_resources(RESOURCES_DIR, STOPWORDS)


# Words drawn on by the random corpora: a few lexicon hits, common filler and stopwords.
WORDS = (
    "mrsa wound wounds infection infected danger patients diagnosed prostate cancer "
    "robotic surgery csf cerebrospinal fluid methicillin resistant staphylococcus aureus "
    "fever cough renal kidney heart failure therapy dose nurse clinic ward vaccine "
    "the and of with a is in to for"
).split()


def random_corpus(rng: random.Random, n_docs: int, max_len: int = 30, words=WORDS) -> list[Document]:
    docs = []
    for i in range(n_docs):
        n = rng.randint(1, max_len)
        text = " ".join(rng.choice(words) for _ in range(n))
        docs.append(Document(uid=f"d{i:03d}", url="", text=text))
    return docs


# -- oracles ----------------------------------------------------------------

_REF_STEMMER = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)


def reference_stem(word: str) -> str:
    return _REF_STEMMER.stem(word)


def bow_oracle(texts: dict[str, str], stopwords, extra_stop=()):
    """Plain bag-of-words tf-idf built without any medsearch code.

    Returns (df, idf, ntf, doc_len) with ``ntf[uid][term] = tf / len``.
    """
    stop = set(stopwords)
    tokens = {}
    for uid, text in texts.items():
        toks = [w for w in re.findall(r"[^\W_]+", text.lower()) if w not in stop]
        drop = stop | set(extra_stop)
        tokens[uid] = [s for s in (reference_stem(w) for w in toks) if s not in drop]
    df = Counter()
    for toks in tokens.values():
        df.update(set(toks))
    n = len(texts)
    idf = {t: math.log10(n / c) for t, c in df.items()}
    ntf = {}
    for uid, toks in tokens.items():
        c = Counter(toks)
        ntf[uid] = {t: v / len(toks) for t, v in c.items()} if toks else {}
    return dict(df), idf, ntf, {u: len(t) for u, t in tokens.items()}


def gap_threshold_oracle(idfs) -> float:
    vals = np.unique(np.array(sorted(idfs), dtype=float))
    if len(vals) < 2:
        return 0.0
    gaps = np.diff(vals)
    i = int(np.argmax(gaps))  # first maximal gap
    return float((vals[i] + vals[i + 1]) / 2)


def dense_cosine(doc_vectors: dict[str, dict[str, float]], query: dict[str, float]):
    """Score every document with numpy dense vectors; sort by (-score, uid)."""
    terms = sorted(set(query) | {t for v in doc_vectors.values() for t in v})
    col = {t: i for i, t in enumerate(terms)}
    uids = sorted(doc_vectors)
    D = np.zeros((len(uids), len(terms)))
    for r, uid in enumerate(uids):
        for t, w in doc_vectors[uid].items():
            D[r, col[t]] = w
    q = np.zeros(len(terms))
    for t, w in query.items():
        q[col[t]] = w
    qn = np.linalg.norm(q)
    out = []
    for r, uid in enumerate(uids):
        dn = np.linalg.norm(D[r])
        if qn == 0 or dn == 0:
            continue
        s = float(D[r] @ q / (dn * qn))
        if s > 0:
            out.append((uid, s))
    out.sort(key=lambda x: (-x[1], x[0]))
    return out


def index_doc_vectors(index) -> dict[str, dict[str, float]]:
    vecs: dict[str, dict[str, float]] = {uid: {} for uid in index.doc_lengths}
    for term, entry in index.vocabulary.items():
        for p in entry.postings:
            vecs[p.doc_uid][term] = p.normalized_tf * entry.idf
    return vecs


def same_ranking(got, want, tol=1e-12) -> bool:
    """Exact order match; near-ties (within ``tol``) are compared as sets."""
    if [u for u, _ in got] == [u for u, _ in want]:
        return True
    if len(got) != len(want):
        return False
    i = 0
    while i < len(want):
        j = i
        while j + 1 < len(want) and abs(want[j + 1][1] - want[i][1]) <= tol:
            j += 1
        if {u for u, _ in got[i : j + 1]} != {u for u, _ in want[i : j + 1]}:
            return False
        i = j + 1
    return True


def write_corpus(path: Path, docs) -> Path:
    """Write ``(uid, html)`` pairs in the collection's record format."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for uid, html in docs:
            fh.write(f"#UID:{uid}\n#DATE:01/14\n#URL:http://example.org/{uid}\n#CONTENT:\n{html}\n#EOF\n")
    return path


# -- planted-evidence bundle -------------------------------------------------
# Relevant documents mention only the full form or a synonym of the query's
# key term; distractors share the query's supportive words.

PLANTED_TOPICS = [
    ("P1", "MRSA screening"),
    ("P2", "CSF leak"),
    ("P3", "wound dressing"),
]

PLANTED_DOCS = [
    ("rel_p1_a", "<p>Methicillin resistant Staphylococcus aureus carriage in care homes.</p>"),
    ("rel_p1_b", "<p>Decolonisation of methicillin resistant staphylococcus aureus before surgery.</p>"),
    ("rel_p2_a", "<p>Cerebrospinal fluid rhinorrhoea after skull base trauma.</p>"),
    ("rel_p2_b", "<p>Lumbar drain management of cerebrospinal fluid fistula.</p>"),
    ("rel_p3_a", "<p>Vulnerat tissue heals faster under moist gauze.</p>"),
    ("irr_1", "<p>Breast screening programme invitation letters.</p>"),
    ("irr_2", "<p>Screening for colon polyps in adults.</p>"),
    ("irr_3", "<p>Gas leak safety at home.</p>"),
    ("irr_4", "<p>Roof leak repair and damp walls.</p>"),
    ("irr_5", "<p>Window dressing for retail shops.</p>"),
    ("irr_6", "<p>Salad dressing recipes with olive oil.</p>"),
    ("irr_7", "<p>Hip replacement rehabilitation exercises.</p>"),
]

PLANTED_QRELS = "\n".join(
    f"{qid} 0 {uid} 2"
    for qid, uid in [("P1", "rel_p1_a"), ("P1", "rel_p1_b"), ("P2", "rel_p2_a"), ("P2", "rel_p2_b"), ("P3", "rel_p3_a")]
) + "\nP1 0 irr_1 0\nP2 0 irr_3 0\nP3 0 irr_5 1\n"


def planted_records():
    # The shared footer keeps the idf-gap rule from eating the df=2 terms.
    return [(uid, html + "<footer>Health information</footer>") for uid, html in PLANTED_DOCS]


def planted_bundle():
    from medsearch.corpus import Document, html_to_text
    from medsearch.evaluation import parse_qrels
    from medsearch.query import Topic

    docs = [Document(uid, "", html_to_text(html)) for uid, html in planted_records()]
    topics = [Topic(id=qid, title=title) for qid, title in PLANTED_TOPICS]
    return docs, topics, parse_qrels(PLANTED_QRELS)


# -- acceptance bookkeeping ---------------------------------------------------

CRITERIA_RESULTS: list[tuple[int, str, bool]] = []


class criterion:
    """Context manager that prints and records one PASS/FAIL line."""

    def __init__(self, number: int, title: str):
        self.number, self.title = number, title

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        ok = exc_type is None
        CRITERIA_RESULTS.append((self.number, self.title, ok))
        print(f"{'PASS' if ok else 'FAIL'} criterion {self.number}: {self.title}")
        return False
