import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import _support as S
from medsearch import RUNS, Qrels, parse_qrels, precision_at_k
from medsearch import evaluation as ev
from medsearch.evaluation import InvalidGrade, compare, evaluate_run, run_matrix, write_reports
from medsearch.query import Topic
from medsearch.retrieval import ScoredDocument


def ranked(*uids):
    return [ScoredDocument(u, 1 - i / 100) for i, u in enumerate(uids)]


def test_parse_qrels():
    q = parse_qrels("# header\nq1 0 d1 3\nq1 0 d2 1\n\nq2 0 d1 2\n")
    assert q.query_ids() == {"q1", "q2"}
    assert q.is_relevant("q1", "d1") and not q.is_relevant("q1", "d2")
    assert not q.is_relevant("q1", "unjudged")


@pytest.mark.parametrize("line, exc", [("q 0 d 4", InvalidGrade), ("q 0 d x", InvalidGrade), ("q 0 d", ValueError)])
def test_qrels_rejects(line, exc):
    with pytest.raises(exc, match="<qrels>:1"):
        parse_qrels(line)


def test_precision_examples():
    qrels = Qrels({("q", f"r{i}"): 2 for i in range(8)})
    res = ranked(*[f"r{i}" for i in range(8)], "x", "y")
    assert precision_at_k(res, qrels, "q") == 0.8
    assert precision_at_k([], qrels, "q") == 0.0
    qrels = Qrels({("q", "a"): 2, ("q", "b"): 3, ("q", "e"): 2, ("q", "c"): 1})
    assert precision_at_k(ranked(*"abcdefghij"), qrels, "q") == pytest.approx(0.3)
    with pytest.raises(ValueError):
        precision_at_k([], qrels, "q", k=0)
    with pytest.raises(ValueError):
        precision_at_k([], qrels, "q", mode="other")


@settings(max_examples=300, deadline=None)
@given(st.lists(st.booleans(), max_size=15), st.integers(1, 12))
def test_precision_bounds_and_monotone(flags, k):
    uids = [f"d{i}" for i in range(len(flags))]
    qrels = Qrels({("q", u): 2 for u, f in zip(uids, flags) if f})
    p = precision_at_k(ranked(*uids), qrels, "q", k)
    assert 0 <= p <= 1
    assert p == sum(flags[:k]) / k
    # one more relevant doc inside the cutoff never lowers P@k
    if False in flags[:k]:
        i = flags.index(False)
        more = Qrels(qrels.judgments | {("q", uids[i]): 3})
        assert precision_at_k(ranked(*uids), more, "q", k) > p


def test_evaluate_run_skips_unjudged_topics():
    qrels = Qrels({("a", "d1"): 2})
    rep = evaluate_run("RUN1", {"a": ranked("d1")}, qrels, ["a", "b"])
    assert rep.per_query == {"a": 0.1} and rep.skipped == ["b"] and rep.mean_p10 == 0.1


def test_self_comparison_is_zero():
    rep = evaluate_run("RUN1", {"a": ranked("d1")}, Qrels({("a", "d1"): 2}), ["a"])
    c = compare(rep, rep)
    assert c.deltas == {"a": 0.0} and c.equal == ["a"]


@pytest.fixture(scope="module")
def res():
    return S.example_resources()


def test_matrix_reuses_indexes_and_is_deterministic(monkeypatch, res):
    docs, topics, qrels = S.planted_bundle()
    calls = []
    real = ev.build_index
    monkeypatch.setattr(ev, "build_index", lambda *a, **kw: calls.append(a[3].run_id) or real(*a, **kw))
    m1 = run_matrix(docs, topics, qrels, res)
    assert calls == ["RUN1", "RUN2", "RUN3"]  # RUN4 and RUN5 share RUN3's index
    m2 = run_matrix(docs, topics, qrels, res)
    assert [r.per_query for r in m1.reports] == [r.per_query for r in m2.reports]
    assert m1.results == m2.results
    assert m1.baseline == "RUN1"
    assert all(v == 0 for v in m1.comparisons[0].deltas.values())


def test_failing_query_is_reported_not_fatal(monkeypatch, res):
    docs, topics, qrels = S.planted_bundle()
    real = ev.reformulate

    def flaky(text, *a, **kw):
        if "CSF" in text:
            raise RuntimeError("boom")
        return real(text, *a, **kw)

    monkeypatch.setattr(ev, "reformulate", flaky)
    m = run_matrix(docs, topics, qrels, res, runs=[RUNS["RUN1"]])
    rep = m.reports[0]
    assert rep.failed == {"P2": "boom"}
    assert set(rep.per_query) == {"P1", "P3"}


def test_run1_report_matches_oracle(res):
    import random

    rng = random.Random(12)
    docs = S.random_corpus(rng, 60)
    queries = {"a": "wound infection", "b": "kidney failure dose", "c": "heart therapy nurse"}
    topics = [Topic(id=k, title=v) for k, v in queries.items()]
    judgments = {(q, d.uid): rng.choice([0, 1, 2, 3]) for q in queries for d in docs}
    qrels = Qrels(judgments)
    rep = run_matrix(docs, topics, qrels, res, runs=[RUNS["RUN1"]], augment=False).reports[0]

    _, idf, ntf, _ = S.bow_oracle({d.uid: d.text for d in docs}, S.STOPWORDS)
    vecs = {u: {t: v * idf[t] for t, v in ntf[u].items()} for u in ntf}
    for qid, text in queries.items():
        stems = [S.reference_stem(w) for w in re.findall(r"[^\W_]+", text.lower()) if w not in S.STOPWORDS]
        qv = {}
        for s in stems:
            if idf.get(s, 0) > 0:
                qv[s] = qv.get(s, 0.0) + idf[s] / len(stems)
        top = [u for u, _ in S.dense_cosine(vecs, qv)[:10]]
        want = sum(1 for u in top if judgments[(qid, u)] >= 2) / 10
        assert rep.per_query[qid] == want


def test_write_reports(tmp_path, res):
    docs, topics, qrels = S.planted_bundle()
    m = run_matrix(docs, topics, qrels, res)
    written = write_reports(m, tmp_path)
    names = sorted(p.name for p in written)
    assert "summary.tsv" in names and "plotdata.tsv" in names
    assert len(names) == 12
    rows = (tmp_path / "RUN5.p_at_10.tsv").read_text().splitlines()
    assert rows[0] == "run_id\tquery_id\tp_at_10"
    assert rows[1:] == ["RUN5\tP1\t0.2000", "RUN5\tP2\t0.2000", "RUN5\tP3\t0.1000"]
    summary = (tmp_path / "summary.tsv").read_text().splitlines()
    assert summary[1].startswith("RUN1\t0.0000") and summary[1].endswith("yes")
    run_lines = (tmp_path / "RUN5.run").read_text().splitlines()
    assert all(len(line.split()) == 6 for line in run_lines)
    assert ev.format_summary(m).splitlines()[1].endswith("(baseline)")
