import json
import math
import os

import numpy as np
import pytest

from hermix.serialize import (atomic_write_text, canonical_json, format_float,
                              sha256_of_file, sha256_of_text)


def test_format_float_round_trips_doubles():
    rng = np.random.default_rng(11)
    values = list(rng.standard_normal(200))
    values += [0.1, 1.0 / 3.0, math.pi, 1e-300, 2.0**53 + 1.0, -0.0]
    for v in values:
        assert float(format_float(v)) == v


def test_format_float_handles_specials():
    assert format_float(float("inf")) == "Infinity"
    assert format_float(float("-inf")) == "-Infinity"
    assert format_float(float("nan")) == "NaN"


def test_canonical_json_is_stable_and_order_preserving():
    obj = {"b": [1.5, 2], "a": {"z": 0.1, "y": None}, "c": "x"}
    s1 = canonical_json(obj, indent=2)
    s2 = canonical_json(obj, indent=2)
    assert s1 == s2
    # insertion order is kept verbatim (callers build dicts schema-order)
    assert s1.index('"b"') < s1.index('"a"') < s1.index('"c"')
    back = json.loads(s1)
    assert back["a"]["y"] is None
    assert back["b"][0] == 1.5


def test_canonical_json_floats_use_17_digits():
    s = canonical_json({"v": 0.1})
    assert json.loads(s)["v"] == 0.1


def test_atomic_write_and_hashes(tmp_path):
    p = tmp_path / "out.txt"
    atomic_write_text(str(p), "hello\n")
    assert p.read_text() == "hello\n"
    # no stray temp files left behind
    assert os.listdir(tmp_path) == ["out.txt"]
    assert sha256_of_file(str(p)) == sha256_of_text("hello\n")
    atomic_write_text(str(p), "second\n")
    assert p.read_text() == "second\n"


def test_sha256_of_text_is_hex():
    h = sha256_of_text("x")
    assert len(h) == 64
    int(h, 16)


@pytest.mark.parametrize("bad", [object(), {1, 2}])
def test_canonical_json_rejects_unknown_types(bad):
    with pytest.raises(TypeError):
        canonical_json({"v": bad})
