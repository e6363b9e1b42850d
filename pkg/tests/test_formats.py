import csv
import io
import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from branchscope import formats
from branchscope.engine import PointProcess, RunResult, Status


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_round_trip(x):
    text = formats.fmt_float(x)
    assert float(text) == x
    digits = text.lstrip("-").split("e")[0].replace(".", "").lstrip("0")
    assert len(digits) <= 17


def test_dumps_is_valid_json():
    obj = {"a": 0.1, "b": [1, 2.5, None, math.nan, math.inf], "c": {"d": True, "e": "x\"y"}, "f": []}
    text = formats.dumps(obj)
    back = json.loads(text)
    assert back["a"] == 0.1
    assert back["b"] == [1, 2.5, None, None, None]
    assert back["c"] == {"d": True, "e": "x\"y"}
    assert "0.10000000000000001" in text
    assert formats.dumps(obj) == text


def test_dumps_compact():
    assert formats.dumps([1.0, {"k": 2}], indent=None) == '[1, {"k": 2}]\n'


def test_dumps_rejects_unknown():
    with pytest.raises(TypeError):
        formats.dumps({"x": object()})


def _run(rep, status, mp, mi, pend, inter):
    return RunResult(status, 5.0, 2.5, len(pend), 0, 0, 0.25, mp, mi,
                     PointProcess(pend), PointProcess(inter), {}, rep, 3.0)


def test_csv_outputs():
    runs = [_run(0, Status.SURVIVED, 3.0, 2.0, [0.5, -0.1], [0.2]),
            _run(1, Status.EXTINCT, None, 1.5, [], [-1.0])]
    rows = list(csv.reader(io.StringIO(formats.atoms_csv(runs))))
    assert rows[0] == ["replicate", "kind", "position"]
    assert rows[1:] == [["0", "p", "-0.10000000000000001"], ["0", "p", "0.5"], ["0", "i", "0.20000000000000001"], ["1", "i", "-1"]]
    rows = list(csv.reader(io.StringIO(formats.maxima_csv(runs))))
    assert rows == [["replicate", "status", "z_t", "mp", "mi"],
                    ["0", "survived", "0.25", "3", "2"], ["1", "extinct", "0.25", "", "1.5"]]
