import json

import pytest
from hypothesis import given, strategies as st

from assocbias.core import EncodingLevel, TextItem
from assocbias.errors import (
    BadTemplate,
    EmptyInput,
    ParseError,
    SchemaError,
    UnbalancedTargets,
    UnequalTargetSizes,
    UnknownVariant,
    UnrecognizedName,
)
from assocbias.testspec import (
    BLEACHED_ATTRIBUTE_TEMPLATES,
    BLEACHED_PERSON_TEMPLATES,
    INTERSECTIONAL_PAIRINGS,
    TemplateSet,
    TestNameInfo,
    compose_intersectional,
    compose_matched_test,
    default_category,
    expand_templates,
    format_test_name,
    load_spec,
    load_templates,
    parse_test_name,
    serialize_spec,
)


def spec_doc(**overrides):
    doc = {
        "targ1": {"category": "male names", "examples": ["John", "Paul"]},
        "targ2": {"category": "female names", "examples": ["Amy", "Joan"]},
        "attr1": {"category": "career", "examples": ["career", "office"]},
        "attr2": {"category": "family", "examples": ["family", "home"]},
    }
    doc.update(overrides)
    return doc


# --- spec files ---------------------------------------------------------


def test_load_minimal_spec():
    doc = spec_doc(
        targ1={"category": "x", "examples": ["a"]},
        targ2={"category": "y", "examples": ["b"]},
        attr1={"category": "p", "examples": ["c"]},
        attr2={"category": "u", "examples": ["d"]},
    )
    spec = load_spec(json.dumps(doc))
    assert len(spec.targ1) == len(spec.targ2) == 1
    assert spec.level is EncodingLevel.WORD


def test_load_spec_eight_per_target():
    names1 = [f"Name{i}" for i in range(8)]
    names2 = [f"Other{i}" for i in range(8)]
    doc = spec_doc(
        targ1={"category": "x", "examples": names1},
        targ2={"category": "y", "examples": names2},
    )
    spec = load_spec(json.dumps(doc))
    assert len(spec.targ1) == len(spec.targ2) == 8


def test_load_spec_missing_key():
    doc = spec_doc()
    del doc["attr2"]
    with pytest.raises(SchemaError, match="attr2"):
        load_spec(json.dumps(doc))


def test_load_spec_parse_error_has_position():
    with pytest.raises(ParseError, match="line"):
        load_spec('{"targ1": ,}')


def test_load_spec_rejects_duplicates():
    doc = spec_doc(targ1={"category": "x", "examples": ["John", "John"]})
    with pytest.raises(SchemaError, match="targ1"):
        load_spec(json.dumps(doc))


def test_load_spec_balance_policies():
    doc = spec_doc(targ1={"category": "x", "examples": ["a", "b", "c"]})
    with pytest.raises(UnbalancedTargets, match="3"):
        load_spec(json.dumps(doc))
    spec = load_spec(json.dumps(doc), balance="truncate")
    assert [i.text for i in spec.targ1.items] == ["a", "b"]
    assert [i.text for i in spec.targ2.items] == ["Amy", "Joan"]


def test_load_spec_cword_requires_target_focus():
    doc = spec_doc(level="cword")
    with pytest.raises(SchemaError, match="focus"):
        load_spec(json.dumps(doc))
    doc["focus"] = {
        "targ1": [[0, 4], [0, 4]],
        "targ2": [[0, 3], [0, 4]],
    }
    spec = load_spec(json.dumps(doc))
    assert spec.targ1.items[0].focus_text == "John"


def test_load_spec_nfc_normalizes():
    doc = spec_doc(targ1={"category": "x", "examples": ["café", "b"]})
    spec = load_spec(json.dumps(doc))
    assert spec.targ1.items[0].text == "café"


def test_load_spec_category_from_id():
    spec = load_spec(json.dumps(spec_doc()), spec_id="weat6")
    assert spec.category == "gender"
    spec = load_spec(json.dumps(spec_doc(id="sent-weat+i2")))
    assert spec.category == "intersectional"
    spec = load_spec(json.dumps(spec_doc()), spec_id="somethingelse")
    assert spec.category == "other"


def test_spec_round_trip():
    doc = spec_doc(id="weat8", level="sentence")
    doc["focus"] = {"targ1": [[0, 4], None]}
    spec = load_spec(json.dumps(doc))
    assert load_spec(serialize_spec(spec)) == spec


# --- naming convention --------------------------------------------------


@pytest.mark.parametrize(
    "test_id,level,family,terms,index",
    [
        ("weat1", EncodingLevel.WORD, "caliskan", False, "1"),
        ("weat10", EncodingLevel.WORD, "caliskan", False, "10"),
        ("weat3b", EncodingLevel.WORD, "caliskan", True, "3"),
        ("sent-weat7", EncodingLevel.SENTENCE, "caliskan", False, "7"),
        ("weat+11", EncodingLevel.WORD, "additional", False, "11"),
        ("sent-weat+13b", EncodingLevel.SENTENCE, "additional", True, "13"),
        ("weat+i3", EncodingLevel.WORD, "intersectional", False, "3"),
        ("sent-weat+i5", EncodingLevel.SENTENCE, "intersectional", False, "5"),
        ("weat+occ", EncodingLevel.WORD, "occupation", False, None),
        ("sent-weat+occ", EncodingLevel.SENTENCE, "occupation", False, None),
        ("weat_hdb", EncodingLevel.WORD, "gender_double_bind", False, None),
        ("sent-weat_hdb_competent", EncodingLevel.SENTENCE, "gender_double_bind", False, "competent"),
        ("weat_r_hdb_likable", EncodingLevel.WORD, "race_double_bind", False, "likable"),
        ("weat_angry", EncodingLevel.WORD, "angry_black_woman", False, None),
        ("sent-weat_angry_b", EncodingLevel.SENTENCE, "angry_black_woman", False, "b"),
    ],
)
def test_parse_test_name(test_id, level, family, terms, index):
    info = parse_test_name(test_id)
    assert info == TestNameInfo(level, family, uses_terms_variant=terms, index=index)
    assert format_test_name(info) == test_id


@pytest.mark.parametrize(
    "bad", ["", "weat", "weat0", "weat11", "weat+14", "weat+i6", "weat+i0",
            "seat1", "sent_weat1", "weat1bb", "weatocc", "weat_hdb-x"]
)
def test_parse_test_name_rejects(bad):
    with pytest.raises(UnrecognizedName):
        parse_test_name(bad)


def test_default_categories():
    assert default_category(parse_test_name("weat1")) == "neutral"
    assert default_category(parse_test_name("weat4")) == "race"
    assert default_category(parse_test_name("weat8b")) == "gender"
    assert default_category(parse_test_name("weat9")) == "other"
    assert default_category(parse_test_name("weat+11")) == "gender"
    assert default_category(parse_test_name("weat+12")) == "race"
    assert default_category(parse_test_name("sent-weat+occ")) == "gender"
    assert default_category(parse_test_name("weat_hdb_x")) == "gender"
    assert default_category(parse_test_name("weat_r_hdb_x")) == "race"
    assert default_category(parse_test_name("weat+i1")) == "intersectional"
    assert default_category(parse_test_name("weat_angry")) == "intersectional"


# --- template expansion ---------------------------------------------------


def test_expand_bleached_battery():
    items = expand_templates(BLEACHED_PERSON_TEMPLATES, ["Shanice"])
    assert len(items) == 8
    assert items[0].text == "This is Shanice."
    assert items[0].focus_text == "Shanice"
    assert all(i.focus_text == "Shanice" for i in items)


def test_expand_filler_major_order():
    ts = TemplateSet(("A [X].", "B [X]."))
    items = expand_templates(ts, ["one", "two"])
    assert [i.text for i in items] == ["A one.", "B one.", "A two.", "B two."]


def test_expand_article_slot():
    ts = TemplateSet(("This is a/an [X].",))
    assert expand_templates(ts, ["doctor"])[0].text == "This is a doctor."
    assert expand_templates(ts, ["engineer"])[0].text == "This is an engineer."
    # exceptions flip the naive vowel rule in both directions
    assert expand_templates(ts, ["honest person"])[0].text == "This is an honest person."
    assert expand_templates(ts, ["user"])[0].text == "This is a user."
    assert expand_templates(ts, ["European"])[0].text == "This is a European."
    assert expand_templates(ts, ["engineer"], article_exceptions=["engineer"])[0].text \
        == "This is a engineer."


def test_expand_article_focus_spans():
    ts = TemplateSet(("This is a/an [X].",))
    item = expand_templates(ts, ["engineer"])[0]
    assert item.focus_text == "engineer"


@given(
    st.lists(st.text(alphabet="abcdefgXYZ", min_size=1, max_size=8), min_size=1, max_size=5),
)
def test_expand_count_and_spans_property(fillers):
    items = expand_templates(BLEACHED_PERSON_TEMPLATES, fillers)
    assert len(items) == len(BLEACHED_PERSON_TEMPLATES.templates) * len(fillers)
    for k, item in enumerate(items):
        assert item.focus_text == fillers[k // len(BLEACHED_PERSON_TEMPLATES.templates)]


def test_template_validation():
    with pytest.raises(BadTemplate, match="0 slots"):
        TemplateSet(("no slot here.",))
    with pytest.raises(BadTemplate, match="2 slots"):
        TemplateSet(("[X] and [X].",))
    with pytest.raises(BadTemplate, match="punctuation"):
        TemplateSet(("This is [X]",))
    with pytest.raises(EmptyInput):
        expand_templates(BLEACHED_PERSON_TEMPLATES, [])


def test_load_templates_file():
    ts = load_templates(json.dumps({"slot_kind": "attribute", "templates": ["Hi [X]."]}))
    assert ts.slot_kind == "attribute"
    with pytest.raises(SchemaError):
        load_templates(json.dumps({"slot_kind": "attribute"}))
    with pytest.raises(ParseError):
        load_templates(b"{")


# --- composition ----------------------------------------------------------


def test_compose_matched_test():
    spec = compose_matched_test(
        "weat+11",
        (["John", "Paul"], ["Amy", "Joan"]),
        (["caress", "freedom"], ["abuse", "filth"]),
    )
    assert spec.category == "gender"
    assert [i.text for i in spec.targ1.items] == ["John", "Paul"]
    with pytest.raises(UnequalTargetSizes):
        compose_matched_test("weat+11", (["John"], ["Amy", "Joan"]), (["a"], ["b"]))


def test_compose_intersectional_pairing_table():
    groups = {
        "EA_male": ["Brad", "Todd"],
        "EA_female": ["Emily", "Jill"],
        "AA_male": ["Jamal", "Leroy"],
        "AA_female": ["Keisha", "Tamika"],
    }
    attrs = (["caress"], ["abuse"])
    expected = {
        1: ("Emily", "Keisha"),
        2: ("Jamal", "Keisha"),
        3: ("Brad", "Jamal"),
        4: ("Brad", "Emily"),
        5: ("Brad", "Keisha"),
    }
    for variant, (first1, first2) in expected.items():
        spec = compose_intersectional(variant, groups, attrs)
        assert spec.targ1.items[0].text == first1
        assert spec.targ2.items[0].text == first2
        assert spec.id == f"weat+i{variant}"
        assert spec.category == "intersectional"
        assert parse_test_name(spec.id).index == str(variant)
    # documented anchors of the pairing table
    assert all("AA_female" in INTERSECTIONAL_PAIRINGS[v] for v in (1, 2, 5))
    assert all(INTERSECTIONAL_PAIRINGS[v][0] == "EA_male" for v in (3, 4, 5))


def test_compose_intersectional_errors():
    groups = {
        "EA_male": ["Brad"],
        "EA_female": ["Emily"],
        "AA_male": ["Jamal", "Leroy"],
        "AA_female": ["Keisha"],
    }
    with pytest.raises(UnknownVariant):
        compose_intersectional(6, groups, (["a"], ["b"]))
    with pytest.raises(UnequalTargetSizes):
        compose_intersectional(2, groups, (["a"], ["b"]))
    with pytest.raises(SchemaError):
        compose_intersectional(1, {"EA_male": ["Brad"]}, (["a"], ["b"]))


def test_compose_sentence_level_ids():
    groups = {k: ["x y"] for k in ("EA_male", "EA_female", "AA_male", "AA_female")}
    # sentence-level composition over expanded items keeps focus spans
    expanded = {
        k: expand_templates(BLEACHED_PERSON_TEMPLATES, [f"Name{i}"])
        for i, k in enumerate(("EA_male", "EA_female", "AA_male", "AA_female"))
    }
    attrs = (
        expand_templates(BLEACHED_ATTRIBUTE_TEMPLATES, ["gentle"]),
        expand_templates(BLEACHED_ATTRIBUTE_TEMPLATES, ["rotten"]),
    )
    spec = compose_intersectional(
        5, expanded, attrs, level=EncodingLevel.SENTENCE
    )
    assert spec.id == "sent-weat+i5"
    assert spec.targ1.items[0].focus_text == "Name0"
    assert len(spec.targ1) == 8
