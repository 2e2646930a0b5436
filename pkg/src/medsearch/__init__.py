"""Medical search with acronym, synonym and concept-lexicon expansion."""

from .config import RUNS, RunConfig, get_run
from .corpus import Document, RawDocument, extract_text, load_corpus, parse_corpus_file
from .evaluation import (
    EvalReport,
    Qrels,
    binarize,
    load_qrels,
    parse_qrels,
    precision_at_k,
    run_matrix,
)
from .index import InvertedIndex, build_index, load_index, normalized_tf, persist_index
from .porter import porter_stem
from .query import (
    ReformulatedQuery,
    TermCategory,
    WeightedQueryTerm,
    assign_weights,
    categorize,
    expand,
    load_topics,
    parse_topics,
    reformulate,
)
from .resources import SemanticResourceSet, load_resources
from .retrieval import ScoredDocument, score, top_k
from .text import (
    NGramSet,
    StopwordPolicy,
    augment_stopwords,
    compute_idf,
    fold_and_tokenize,
    load_stopwords,
    pipeline,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
