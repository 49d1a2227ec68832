import json

import pytest

from cohortqa.data_model import (
    COHORT_SIZE,
    AbstractionTemplate,
    CohortInstance,
    QuestionVariant,
    SchemaError,
    instantiate_template,
    load_cohorts,
    parse_cohort,
    validate_cohort,
)


def _template(**overrides):
    base = dict(
        template_id="t0",
        masked_question="Is {X} bigger than {Y}?",
        parameter_names=("X", "Y"),
        options=("No", "Yes"),
        function_header="def answer(X: str, Y: str) -> int",
        domain_tag="other",
    )
    base.update(overrides)
    return AbstractionTemplate(**base)


def test_template_accepts_matching_header():
    t = _template()
    assert t.parameter_names == ("X", "Y")


def test_template_rejects_placeholder_mismatch():
    with pytest.raises(SchemaError):
        _template(parameter_names=("X",), function_header="def answer(X: str) -> int")


def test_template_rejects_header_param_mismatch():
    with pytest.raises(SchemaError):
        _template(function_header="def answer(Y: str, X: str) -> int")


def test_template_rejects_single_option():
    with pytest.raises(SchemaError):
        _template(options=("Yes",))


def test_template_rejects_duplicate_options():
    with pytest.raises(SchemaError):
        _template(options=("Yes", "Yes"))


def test_instantiate_template_substitutes_all():
    t = _template()
    text = instantiate_template(t, {"X": "the Sun", "Y": "the Moon"})
    assert text == "Is the Sun bigger than the Moon?"


def test_instantiate_template_rejects_missing_binding():
    with pytest.raises(SchemaError):
        instantiate_template(_template(), {"X": "a"})


def _member(t, x, y, gold, question=None):
    bindings = {"X": x, "Y": y}
    return QuestionVariant(
        bindings=bindings,
        question_text=question or instantiate_template(t, bindings),
        gold_index=gold,
    )


def _cohort(t, members):
    return CohortInstance(
        cohort_id="c0", template=t, original=members[0], variants=tuple(members[1:])
    )


def test_cohort_requires_five_variants():
    t = _template()
    members = [_member(t, f"a{i}", f"b{i}", 0) for i in range(3)]
    with pytest.raises(SchemaError):
        _cohort(t, members)


def test_members_property_puts_original_first():
    t = _template()
    members = [_member(t, f"a{i}", f"b{i}", i % 2) for i in range(COHORT_SIZE)]
    cohort = _cohort(t, members)
    assert cohort.members[0] is cohort.original
    assert len(cohort.members) == COHORT_SIZE


def test_validate_cohort_ok_and_punctuation_insensitive():
    t = _template()
    members = [_member(t, f"a{i}", f"b{i}", 0) for i in range(COHORT_SIZE)]
    # trailing punctuation and doubled spaces are normalized away
    members[2] = _member(t, "a2", "b2", 0, question="Is a2  bigger than b2")
    report = validate_cohort(_cohort(t, members))
    assert report.ok


def test_validate_cohort_flags_text_mismatch():
    t = _template()
    members = [_member(t, f"a{i}", f"b{i}", 0) for i in range(COHORT_SIZE)]
    members[3] = _member(t, "a3", "b3", 0, question="Is something else entirely?")
    report = validate_cohort(_cohort(t, members))
    assert not report.ok
    assert not report.members[3].template_match
    assert report.members[0].ok


def test_validate_cohort_flags_gold_out_of_range():
    t = _template()
    members = [_member(t, f"a{i}", f"b{i}", 0) for i in range(COHORT_SIZE)]
    members[1] = _member(t, "a1", "b1", 5)
    report = validate_cohort(_cohort(t, members))
    assert not report.members[1].gold_in_range


def _record(t=None):
    return {
        "cohort_id": "c1",
        "domain": "other",
        "masked_question": "Is {X} bigger than {Y}?",
        "parameters": ["X", "Y"],
        "options": ["No", "Yes"],
        "function_header": "def answer(X: str, Y: str) -> int",
        "original": {
            "bindings": {"X": "a", "Y": "b"},
            "question": "Is a bigger than b?",
            "gold": 1,
        },
        "variants": [
            {
                "bindings": {"X": f"a{i}", "Y": f"b{i}"},
                "question": f"Is a{i} bigger than b{i}?",
                "gold": 0,
            }
            for i in range(5)
        ],
    }


def test_parse_cohort_roundtrip():
    cohort = parse_cohort(_record())
    assert cohort.cohort_id == "c1"
    assert cohort.original.gold_index == 1
    assert validate_cohort(cohort).ok


def test_parse_cohort_accepts_letter_gold():
    record = _record()
    record["original"]["gold"] = "B"
    assert parse_cohort(record).original.gold_index == 1


def test_parse_cohort_rejects_bool_gold():
    record = _record()
    record["original"]["gold"] = True
    with pytest.raises(SchemaError):
        parse_cohort(record)


def test_parse_cohort_rejects_unknown_domain():
    record = _record()
    record["domain"] = "trivia"
    with pytest.raises(SchemaError):
        parse_cohort(record)


def test_parse_cohort_missing_key_names_field():
    record = _record()
    del record["options"]
    with pytest.raises(SchemaError) as excinfo:
        parse_cohort(record, line=7)
    assert "options" in str(excinfo.value)
    assert "line 7" in str(excinfo.value)


def test_load_cohorts_reports_line_of_bad_json(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text(json.dumps(_record()) + "\n{not json\n", encoding="utf-8")
    with pytest.raises(SchemaError) as excinfo:
        load_cohorts(path)
    assert excinfo.value.line == 2


def test_load_cohorts_fixture(film_cohort):
    assert film_cohort.cohort_id == "hotpotqa-film-0001"
    assert validate_cohort(film_cohort).ok
    assert [m.gold_index for m in film_cohort.members] == [1, 0, 1, 1, 0, 1]
