from pathlib import Path

import pytest

import mtie

ROOT = Path(__file__).resolve().parents[2]
FIXTURES = ROOT / "tests" / "fixtures"


def test_shipped_schemas():
    assert mtie.shipped_schemas() == ["ace05", "conllpp", "duee1", "duie2", "msra", "nyt11-hrl"]
    conll = mtie.shipped_schema("conllpp")
    assert conll.task == "NER"
    assert conll.type_names() == ["LOC", "MISC", "ORG", "PER"]
    assert ("location-contains", "location-located_in") in mtie.shipped_schema("nyt11-hrl").inverse_relations()


def test_schema_round_trip():
    schema = mtie.shipped_schema("duie2")
    again = mtie.parse_schema(schema.to_yaml())
    assert again.type_names() == schema.type_names()


def test_errors_carry_codes():
    with pytest.raises(mtie.Error) as info:
        mtie.parse_schema("name: x\ntask: XX\n")
    assert info.value.code in {"MalformedSchema", "InvalidSchema", "ConfigError"}
    with pytest.raises(mtie.Error) as info:
        mtie.parse_pair_table("(A, B, C)", ("person", "country"))
    assert info.value.code == "ArityMismatch"


def test_parsers():
    assert mtie.parse_type_list("LOC, MISC", ["LOC", "MISC", "ORG", "PER"])["names"] == ["LOC", "MISC"]
    rows = mtie.parse_pair_table("(Jacques Chirac, France)", ("person", "country"))["rows"]
    assert rows == [("Jacques Chirac", "France")]
    items = mtie.parse_entity_list('["Japan", "LOC"], ["Syrian", "LOC"]', ["LOC", "MISC", "ORG", "PER"])["items"]
    assert items == [("Japan", "LOC"), ("Syrian", "LOC")]
    assert mtie.parse_role_table("none", "Life:Die", ["Agent"])["kind"] == "NoneAnswer"
    assert mtie.is_none_signal("None.") and not mtie.is_none_signal("none of these")


def test_replay_fixture_and_score():
    schema = mtie.shipped_schema("conllpp")
    samples = mtie.load_dataset(FIXTURES / "datasets" / "conllpp_cases.jsonl", "conllpp", schema)
    japan = [s for s in samples if s.id == "japan"]
    report = mtie.run_batch(japan, schema, backend="replay",
                            transcripts=str(FIXTURES / "transcripts" / "ner_cases.jsonl"))
    assert report.failed == 0
    assert sorted(report.results[0]["entities"]) == [("Japan", "LOC"), ("Syrian", "LOC")]
    metrics = mtie.score(report, japan, "NER-exact", schema)
    assert metrics["precision"] == metrics["recall"] == metrics["f1"] == 0.5


def test_gold_oracle_closure():
    schema = mtie.shipped_schema("nyt11-hrl")
    samples = mtie.load_dataset(FIXTURES / "datasets" / "nyt11_cases.jsonl", "nyt11", schema)
    report = mtie.run_batch(samples, schema, backend="gold-oracle", workers=2)
    assert report.succeeded == len(samples)
    assert mtie.score(report, samples, "border", schema)["f1"] == 1.0
    assert report.to_jsonl().count("\n") == len(samples) + 1


def test_token_f1_and_keys():
    assert mtie.token_f1("the 19 Rangers", "19 Rangers") == pytest.approx(0.8)
    key = mtie.transcript_key("m", [("user", "hi")])
    assert len(key) == 64 and key == mtie.transcript_key("m", [("user", "hi")])
