import pytest

from fairgate.agents import extract_json


@pytest.mark.parametrize("text,expected", [
    ('{"a": 1}', {"a": 1}),
    ("[1, 2, 3]", [1, 2, 3]),
    ("{}", {}),
    ("[]", []),
    ('```json\n{"a": 1}\n```', {"a": 1}),
    ('```\n[{"x": null}]\n```', [{"x": None}]),
    ('Sure, here is the JSON:\n{"qe_score": 95, "rationale": "ok"}', {"qe_score": 95, "rationale": "ok"}),
    ('prefix {"a": {"b": [1]}} suffix', {"a": {"b": [1]}}),
    ('{"s": "braces { inside } strings"}', {"s": "braces { inside } strings"}),
    ('noise [not json] then {"a": 2}', {"a": 2}),
])
def test_extracts_first_complete_value(text, expected):
    assert extract_json(text) == expected


def test_first_value_wins_over_later_ones():
    assert extract_json('{"first": 1} {"second": 2}') == {"first": 1}


@pytest.mark.parametrize("text", ["", "   ", "no json here", "{broken", "]["])
def test_unparseable_returns_none(text):
    assert extract_json(text) is None


def test_fenced_block_preferred_over_surrounding_prose():
    text = 'The answer {not: json} is\n```json\n{"a": 3}\n```\ndone'
    assert extract_json(text) == {"a": 3}
