import json

import numpy as np
import pytest

from locc.report import canonical, dumps, input_digest, matrix_pairs, round_sig


@pytest.mark.parametrize(
    "x, expected",
    [(0.0, 0.0), (-0.0, 0.0), (1 / 3, 0.333333333333), (123456789.123456789, 123456789.123), (1e-20 / 3, 3.33333333333e-21)],
)
def test_round_sig(x, expected):
    assert round_sig(x) == expected


def test_canonical_types():
    out = canonical({"a": np.float64(0.1), "b": np.int64(3), "c": (1, 2), "d": np.bool_(True), "e": 1 + 2j})
    assert out == {"a": 0.1, "b": 3, "c": [1, 2], "d": True, "e": [1.0, 2.0]}
    assert json.dumps(out)


def test_matrix_pairs():
    assert matrix_pairs(np.array([[1 + 2j, 0], [0, 1j]])) == [[[1.0, 2.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]]]
    assert canonical(np.array([[1j]])) == [[[0.0, 1.0]]]


def test_dumps_sorted_and_stable():
    a = dumps({"b": 1, "a": {"z": 2.0000000000001, "y": 1}})
    b = dumps({"a": {"y": 1, "z": 2.0}, "b": 1})
    assert a == b
    assert a.index('"a"') < a.index('"b"')


def test_digest_depends_on_params():
    assert input_digest("x", {"p": 0.1}) == input_digest("x", {"p": 0.1})
    assert input_digest("x", {"p": 0.1}) != input_digest("x", {"p": 0.2})
    assert input_digest("x") != input_digest("y")
