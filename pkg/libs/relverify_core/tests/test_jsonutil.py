from relverify.jsonutil import canonical_json_bytes, read_jsonl, try_parse_json


def test_canonical_json_bytes_sorted_and_newline():
    data = {"verdict": "valid", "label": "M:m:post:1", "time_ms": 3}
    b = canonical_json_bytes(data)
    assert b == b'{"label":"M:m:post:1","time_ms":3,"verdict":"valid"}\n'
    assert canonical_json_bytes(dict(reversed(list(data.items())))) == b


def test_try_parse_json_valid():
    obj, err = try_parse_json('{"a":1}')
    assert err is None
    assert obj == {"a": 1}


def test_try_parse_json_invalid():
    obj, err = try_parse_json('{"a":')
    assert obj is None
    assert isinstance(err, str)


def test_read_jsonl_skips_blank_lines():
    assert read_jsonl('{"a":1}\n\n{"b":2}\n') == [{"a": 1}, {"b": 2}]
