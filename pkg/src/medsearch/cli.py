"""``medsearch`` command line: index, search, eval, runs, resources validate."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from .config import RUNS, RunConfig, get_run
from .corpus import Document, MalformedRecord, load_corpus
from .evaluation import (
    EvalReport,
    MatrixResult,
    Qrels,
    compare,
    evaluate_run,
    format_summary,
    load_qrels,
    run_matrix,
    search_topics,
    write_reports,
)
from .index import EmptyCorpus, IndexFormatError, build_index, load_index, persist_index, read_manifest
from .query import Topic, load_topics, reformulate, weight_table
from .resources import SchemaError, SemanticResourceSet, load_resources, validate_resources
from .retrieval import top_k, write_trec_run
from .text import StopwordPolicy, load_stopwords

log = logging.getLogger("medsearch")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

# Environment variables only override default paths.
ENV_PATHS = {
    "resources": "MEDSEARCH_RESOURCES",
    "stopwords": "MEDSEARCH_STOPWORDS",
    "index": "MEDSEARCH_INDEX",
    "corpus": "MEDSEARCH_CORPUS",
    "topics": "MEDSEARCH_TOPICS",
    "qrels": "MEDSEARCH_QRELS",
}
DEFAULTS = {"k": 10, "query_field": "title", "precision": "fixed", "out": "reports", "no_idf_stopwords": False}
QUERY_FIELDS = ("title", "desc", "title+desc")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for data errors here.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class CliConfig:
    corpus: list[str] = field(default_factory=list)
    topics: str | None = None
    qrels: str | None = None
    resources: str | None = None
    stopwords: str | None = None
    index: str | None = None
    runs: list[RunConfig] = field(default_factory=list)
    k: int = 10
    query_field: str = "title"
    precision: str = "fixed"
    out: str = "reports"
    idf_stopwords: bool = True


def _split_runs(values) -> list[RunConfig]:
    runs = []
    for v in values or []:
        for name in str(v).split(","):
            if name.strip():
                runs.append(get_run(name))
    return list({r.run_id: r for r in runs}.values())


def resolve_config(args: argparse.Namespace) -> CliConfig:
    """Merge flags, the optional JSON config file, env paths and defaults (in that order)."""
    file_conf: dict = {}
    if getattr(args, "config", None):
        try:
            file_conf = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise UsageError(f"config file not found: {args.config}") from None
        except ValueError as exc:
            raise UsageError(f"config file {args.config}: {exc}") from None
        if not isinstance(file_conf, dict):
            raise UsageError(f"config file {args.config}: expected a JSON object")
        file_conf = {k.replace("-", "_"): v for k, v in file_conf.items()}

    def pick(name):
        v = getattr(args, name, None)
        if v is not None and v != []:
            return v
        if name in file_conf:
            return file_conf[name]
        if name in ENV_PATHS and os.environ.get(ENV_PATHS[name]):
            return os.environ[ENV_PATHS[name]]
        return DEFAULTS.get(name)

    corpus = pick("corpus") or []
    if isinstance(corpus, str):
        corpus = [corpus]
    runs = pick("run") or []
    try:
        k = int(pick("k"))
        run_list = _split_runs([runs] if isinstance(runs, str) else runs)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    if k < 1:
        raise UsageError("--k must be at least 1")
    qf = pick("query_field")
    if qf not in QUERY_FIELDS:
        raise UsageError(f"--query-field must be one of {', '.join(QUERY_FIELDS)}")
    prec = pick("precision")
    if prec not in ("fixed", "retrieved"):
        raise UsageError("--precision must be fixed or retrieved")
    return CliConfig(
        corpus=list(corpus),
        topics=pick("topics"),
        qrels=pick("qrels"),
        resources=pick("resources"),
        stopwords=pick("stopwords"),
        index=pick("index"),
        runs=run_list,
        k=k,
        query_field=qf,
        precision=prec,
        out=pick("out"),
        idf_stopwords=not bool(pick("no_idf_stopwords")),
    )


def _require(cfg: CliConfig, *names: str) -> None:
    missing = [n for n in names if not getattr(cfg, n)]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise UsageError(f"missing required option(s): {flags}")


def _check_paths(cfg: CliConfig, files=(), dirs=()) -> None:
    """Validate inputs up front so long jobs fail before they start."""
    for p in cfg.corpus:
        if not Path(p).exists():
            raise DataError(f"corpus path not found: {p}")
    for name in files:
        p = getattr(cfg, name)
        if p and not Path(p).is_file():
            raise DataError(f"{name} file not found: {p}")
    for name in dirs:
        p = getattr(cfg, name)
        if p and not Path(p).is_dir():
            raise DataError(f"{name} directory not found: {p}")


def _static_stopwords(cfg: CliConfig) -> frozenset[str]:
    return load_stopwords(cfg.stopwords)


def _load_resources(path: str | None, stopwords) -> SemanticResourceSet:
    if not path:
        log.warning("no --resources given; running without lexicons")
        return SemanticResourceSet()
    return load_resources(path, stopwords)


def _load_docs(cfg: CliConfig) -> list[Document]:
    bad: list[MalformedRecord] = []

    def on_error(err):
        bad.append(err)
        log.warning("%s", err)

    docs = load_corpus(cfg.corpus, on_error)
    if bad:
        print(f"warning: skipped {len(bad)} malformed record(s)", file=sys.stderr)
    return docs


# -- commands ---------------------------------------------------------------

def cmd_index(cfg: CliConfig) -> int:
    _require(cfg, "corpus", "index")
    _check_paths(cfg, files=("stopwords",), dirs=("resources",))
    run = cfg.runs[0] if cfg.runs else RUNS["RUN5"]
    if len(cfg.runs) > 1:
        raise UsageError("index takes a single --run")
    static = _static_stopwords(cfg)
    resources = _load_resources(cfg.resources, static)
    t0 = time.perf_counter()
    docs = _load_docs(cfg)
    index = build_index(docs, resources, StopwordPolicy.static(static), run, augment=cfg.idf_stopwords)
    meta = {"resources": str(Path(cfg.resources).resolve()) if cfg.resources else None}
    persist_index(index, cfg.index, meta)
    elapsed = time.perf_counter() - t0
    st = index.stats()
    print(
        f"{run.run_id}: N={st['N']} vocabulary={st['vocabulary']} postings={st['postings']} "
        f"idf_stopwords={len(index.policy.augmented_list)} build_time={elapsed:.2f}s -> {cfg.index}"
    )
    return EXIT_OK


def _open_index(cfg: CliConfig):
    _require(cfg, "index")
    index = load_index(cfg.index)
    res_dir = cfg.resources or read_manifest(cfg.index).get("meta", {}).get("resources")
    if res_dir and not Path(res_dir).is_dir():
        raise DataError(f"resources directory not found: {res_dir}")
    resources = _load_resources(res_dir, index.policy.static_list)
    if cfg.runs and cfg.runs[0].index_key() != index.config.index_key():
        log.warning(
            "%s expects different index flags than the index at %s (%s)",
            cfg.runs[0].run_id, cfg.index, index.config.run_id,
        )
    run = cfg.runs[0] if cfg.runs else index.config
    return index, resources, run


def cmd_search(cfg: CliConfig, query: str, query_id: str) -> int:
    index, resources, run = _open_index(cfg)
    rq = reformulate(query, resources, index.policy, run, query_id)
    print(weight_table(rq))
    results = top_k(rq, index, cfg.k, run) if rq.q_len else []
    print(f"# results {len(results)}")
    write_trec_run({query_id: results}, sys.stdout, run.run_id)
    return EXIT_OK


def _load_eval_inputs(cfg: CliConfig) -> tuple[list[Topic], Qrels]:
    _require(cfg, "topics", "qrels")
    _check_paths(cfg, files=("topics", "qrels"))
    topics = load_topics(cfg.topics)
    if not topics:
        raise DataError(f"no topics found in {cfg.topics}")
    return topics, load_qrels(cfg.qrels)


def _finish(matrix: MatrixResult, cfg: CliConfig) -> int:
    for rep in matrix.reports:
        for qid, msg in rep.failed.items():
            print(f"warning: {rep.run_id} query {qid} failed: {msg}", file=sys.stderr)
    if not any(rep.per_query for rep in matrix.reports):
        print("error: zero evaluable queries (no topic id appears in the qrels)", file=sys.stderr)
        return EXIT_DATA
    written = write_reports(matrix, cfg.out)
    print(format_summary(matrix))
    skipped = matrix.reports[0].skipped
    if skipped:
        print(f"skipped {len(skipped)} topic(s) without judgments: {' '.join(skipped)}")
    print(f"wrote {len(written)} file(s) to {cfg.out}")
    return EXIT_OK


def cmd_eval(cfg: CliConfig) -> int:
    """Evaluate one run against a persisted index."""
    if len(cfg.runs) > 1:
        raise UsageError("eval takes a single --run; use `runs` for several")
    topics, qrels = _load_eval_inputs(cfg)
    index, resources, run = _open_index(cfg)
    results, failed = search_topics(topics, index, resources, run, cfg.k, cfg.query_field)
    ids = [t.id for t in topics if t.id not in failed]
    rep: EvalReport = evaluate_run(run.run_id, results, qrels, ids, cfg.k, cfg.precision)
    rep.failed = failed
    matrix = MatrixResult(
        [rep], [compare(rep, rep)], {run.run_id: results}, {run.run_id: len(index.vocabulary)}, run.run_id
    )
    return _finish(matrix, cfg)


def cmd_runs(cfg: CliConfig) -> int:
    """Build, search and evaluate each requested run from the raw corpus."""
    _require(cfg, "corpus")
    topics, qrels = _load_eval_inputs(cfg)
    _check_paths(cfg, files=("stopwords",), dirs=("resources",))
    runs = cfg.runs or list(RUNS.values())
    if runs[0].run_id != "RUN1":
        runs = [RUNS["RUN1"]] + [r for r in runs if r.run_id != "RUN1"]
    static = _static_stopwords(cfg)
    resources = _load_resources(cfg.resources, static)
    docs = _load_docs(cfg)
    matrix = run_matrix(
        docs, topics, qrels, resources, runs, StopwordPolicy.static(static),
        k=cfg.k, query_field=cfg.query_field, mode=cfg.precision, augment=cfg.idf_stopwords,
    )
    return _finish(matrix, cfg)


def cmd_resources_validate(cfg: CliConfig) -> int:
    _require(cfg, "resources")
    _check_paths(cfg, files=("stopwords",), dirs=("resources",))
    report = validate_resources(cfg.resources, _static_stopwords(cfg))
    for name, n in report.counts.items():
        print(f"{name}\t{n}")
    print(f"duplicates merged\t{report.duplicates}")
    print(f"warnings\t{len(report.warnings)}")
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="JSON file of option defaults")
    common.add_argument("--resources", metavar="DIR", help="lexicon directory")
    common.add_argument("--stopwords", metavar="FILE", help="static stopword list (default: bundled)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    run_opts = _Parser(add_help=False)
    run_opts.add_argument("--run", action="append", metavar="RUN", help="RUN1..RUN5 (repeatable or comma-separated)")
    run_opts.add_argument("--k", type=int, help="result cutoff (default 10)")

    corpus_opts = _Parser(add_help=False)
    corpus_opts.add_argument("--corpus", nargs="+", metavar="PATH", help="corpus files or directories")
    corpus_opts.add_argument(
        "--no-idf-stopwords", action="store_const", const=True, default=None,
        help="skip the corpus-derived idf stopwords",
    )

    eval_opts = _Parser(add_help=False)
    eval_opts.add_argument("--topics", metavar="FILE")
    eval_opts.add_argument("--qrels", metavar="FILE")
    eval_opts.add_argument("--query-field", choices=QUERY_FIELDS)
    eval_opts.add_argument("--precision", choices=("fixed", "retrieved"))
    eval_opts.add_argument("--out", metavar="DIR", help="report directory (default ./reports)")

    parser = _Parser(prog="medsearch", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("index", parents=[common, run_opts, corpus_opts], help="build and persist an index")
    p.add_argument("--index", metavar="DIR", help="output index directory")

    p = sub.add_parser("search", parents=[common, run_opts], help="run one ad-hoc query")
    p.add_argument("--index", metavar="DIR")
    p.add_argument("--query-id", default="Q", metavar="ID")
    p.add_argument("query", nargs="+", help="query text")

    p = sub.add_parser("eval", parents=[common, run_opts, eval_opts], help="evaluate one run on an index")
    p.add_argument("--index", metavar="DIR")

    sub.add_parser("runs", parents=[common, run_opts, corpus_opts, eval_opts], help="RUN1-5 experiment matrix")

    p = sub.add_parser("resources", help="lexicon utilities")
    rsub = p.add_subparsers(dest="resources_command", metavar="ACTION", parser_class=_Parser)
    rsub.required = True
    rsub.add_parser("validate", parents=[common], help="schema check and entry counts")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = resolve_config(args)
        if args.command == "index":
            return cmd_index(cfg)
        if args.command == "search":
            return cmd_search(cfg, " ".join(args.query), args.query_id)
        if args.command == "eval":
            return cmd_eval(cfg)
        if args.command == "runs":
            return cmd_runs(cfg)
        return cmd_resources_validate(cfg)
    except UsageError as exc:
        print(f"medsearch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SchemaError as exc:
        print(f"medsearch: schema error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DataError, IndexFormatError, EmptyCorpus, OSError, ValueError) as exc:
        print(f"medsearch: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
