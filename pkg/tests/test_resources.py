import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _support import RESOURCES_DIR, STATIC, STOPWORDS, example_resources
from medsearch.resources import (
    SchemaError,
    SemanticResourceSet,
    load_resources,
    validate_resources,
)
from medsearch.text import normalize_term


@pytest.fixture(scope="module")
def res():
    return example_resources()


def _write(d, **files):
    d.mkdir(exist_ok=True)
    for name, body in files.items():
        (d / f"{name}.tsv").write_text(body, encoding="utf-8")
    return d


def test_acronym_lookups(res):
    assert res.lookup_acronym("mrsa") == ["methicillin resistant staphylococcus aureus"]
    assert res.lookup_acronym("wound") == []
    assert res.lookup_acronym("arv") == ["adelaide river virus", "average rectified value"]
    assert res.acronym_kind("mrsa") == "acronym"
    assert res.acronym_kind("abd") == "abbreviation"
    assert res.acronym_entries("mrsa")[0].key == "methicillin resist staphylococcu aureu"


def test_synonym_lookups(res):
    assert res.lookup_synonyms("wound") == ["vulnerat"]
    assert res.lookup_synonyms("local prostat cancer") == ["suspect prostat cancer"]
    assert res.lookup_synonyms("robot surgeri") == ["robot assist surgeri"]
    assert res.lookup_synonyms("nothing here") == []
    assert [e.kind for e in res.synonym_entries("robot surgeri")] == ["related"]


def test_recognize_medical(res):
    assert res.recognize_medical("wound") and res.recognize_medical("infect")
    assert not res.recognize_medical("danger")
    assert not res.recognize_medical("")
    # mrdef-only entries count too
    assert res.recognize_medical("prostat cancer")
    assert "prostat cancer" not in res.concept_table_metamap


def test_concept_names(res):
    names = [e.label for e in res.concept_synonyms("local prostat cancer")]
    assert names == ["prostate carcinoma", "malignant neoplasm of prostate"]


def test_empty_files_give_empty_tables(tmp_path):
    d = _write(tmp_path / "r", acronyms="", synonyms="# only a comment\n", concepts_metamap="\n", concepts_mrdef="")
    r = load_resources(d)
    assert not r.acronym_table and not r.synonym_table
    assert not r.concept_table_metamap and not r.concept_table_mrdef


def test_missing_file_warns(tmp_path):
    d = _write(tmp_path / "r", acronyms="csf\tcerebrospinal fluid\n")
    rep = validate_resources(d)
    assert rep.counts["acronyms.tsv"] == 1
    assert sum("missing" in w for w in rep.warnings) == 3
    with pytest.raises(FileNotFoundError):
        load_resources(tmp_path / "absent")


@pytest.mark.parametrize(
    "name, body, lineno",
    [
        ("acronyms", "mrsa\tx\n\nbad-line-without-tab\n", 3),
        ("acronyms", "mrsa\tx\tneither\n", 1),
        ("synonyms", "# c\n\twound\n", 2),
        ("synonyms", "a\tb\tc\td\n", 1),
        ("concepts_mrdef", "prostate\n", 1),
    ],
)
def test_schema_errors_name_file_and_line(tmp_path, name, body, lineno):
    d = _write(tmp_path / "r", **{name: body})
    with pytest.raises(SchemaError) as ei:
        load_resources(d)
    assert ei.value.lineno == lineno
    assert f"{name}.tsv:{lineno}" in str(ei.value)


def test_duplicates_merged_with_warning(tmp_path):
    d = _write(
        tmp_path / "r",
        acronyms="MRSA\tmethicillin resistant staphylococcus aureus\nmrsa\tMethicillin-resistant Staphylococcus aureus\n",
        synonyms="wound\tvulnerat\nwounds\tvulnerat\nwound\twound\n",
        concepts_metamap="infection\ninfections\n",
        concepts_mrdef="cancer\ta\ncancers\tb\n",
    )
    rep = validate_resources(d)
    assert rep.duplicates == 4
    assert rep.counts == {
        "acronyms.tsv": 1, "synonyms.tsv": 1, "concepts_metamap.tsv": 1, "concepts_mrdef.tsv": 1,
    }
    assert any("self-synonym" in w for w in rep.warnings)
    r = load_resources(d)
    assert r.lookup_synonyms("wound") == ["vulnerat"]  # no self-synonym


_phrases = st.lists(
    st.sampled_from("localized prostate cancer robotic surgery wound infections patients of the".split()),
    min_size=1, max_size=4,
).map(" ".join)


@settings(max_examples=200, deadline=None)
@given(st.lists(_phrases, min_size=1, max_size=6, unique=True))
def test_normalization_closure_and_set_semantics(tmp_path_factory, phrases):
    d = tmp_path_factory.mktemp("r")
    _write(d, concepts_metamap="\n".join(phrases) + "\n")
    r = load_resources(d, STOPWORDS)
    keys = {normalize_term(p, STATIC) for p in phrases} - {""}
    assert r.concept_table_metamap == keys
    for p in phrases:
        k = normalize_term(p, STATIC)
        assert r.recognize_medical(k) == bool(k)


def test_lookups_are_total():
    r = SemanticResourceSet()
    for probe in ("", " ", "x y z", "é"):
        assert r.lookup_acronym(probe) == [] and r.lookup_synonyms(probe) == []
        assert not r.recognize_medical(probe)


def test_bundled_fixture_validates():
    rep = validate_resources(RESOURCES_DIR)
    assert rep.duplicates == 0 and rep.warnings == []
