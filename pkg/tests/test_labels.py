import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from reactmix.labels import (
    LabelVector,
    encode_label,
    make_multi_hot,
    parse_label_option,
    resolve_label_spec,
)


def test_one_hot_definition():
    np.testing.assert_array_equal(encode_label(0, 6).values, [1, 0, 0, 0, 0, 0])
    np.testing.assert_array_equal(encode_label(5, 6).values, [0, 0, 0, 0, 0, 1])


@given(st.integers(1, 32).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n - 1))))
def test_one_hot_indicator_property(case):
    n, c = case
    vec = encode_label(c, n)
    assert vec.values.sum() == 1.0
    for i in range(n):
        assert vec.values[i] == (1.0 if i == c else 0.0)


def test_one_hot_rejects_out_of_range():
    with pytest.raises(ValueError):
        encode_label(6, 6)
    with pytest.raises(ValueError):
        encode_label(-1, 6)


def test_multi_hot_two_positive():
    vec = make_multi_hot({2: 1.0, 3: 1.0}, 6)
    np.testing.assert_array_equal(vec.values, [0, 0, 1, 1, 0, 0])


def test_multi_hot_negative_entry():
    vec = make_multi_hot({0: -1.0}, 6)
    np.testing.assert_array_equal(vec.values, [-1, 0, 0, 0, 0, 0])


def test_multi_hot_empty_spec_is_neutral():
    np.testing.assert_array_equal(make_multi_hot({}, 4).values, np.zeros(4))


def test_multi_hot_fractional_values_allowed():
    vec = make_multi_hot({1: 0.5, 2: -0.25}, 3)
    np.testing.assert_allclose(vec.values, [0.0, 0.5, -0.25])


def test_multi_hot_range_enforced_by_default():
    with pytest.raises(ValueError):
        make_multi_hot({0: 1.5}, 3)
    unclamped = make_multi_hot({0: 1.5}, 3, clamp=False)
    assert unclamped.values[0] == 1.5
    assert not unclamped.clamped


def test_train_mode_invariant():
    with pytest.raises(ValueError):
        LabelVector(np.array([0.5, 0.5]), mode="train_one_hot")
    with pytest.raises(ValueError):
        LabelVector(np.array([1.0, 1.0]), mode="train_one_hot")


def test_resolve_label_spec_lists_valid_names():
    with pytest.raises(ValueError, match="kick, hug"):
        resolve_label_spec({"dance": 1.0}, ["kick", "hug"])


def test_parse_label_option():
    vec = parse_label_option("hug=+1,kick=-1", ["kick", "push", "hug"])
    np.testing.assert_array_equal(vec.values, [-1.0, 0.0, 1.0])
    empty = parse_label_option("", ["kick", "push"])
    np.testing.assert_array_equal(empty.values, [0.0, 0.0])
    with pytest.raises(ValueError):
        parse_label_option("hug:1", ["hug"])
