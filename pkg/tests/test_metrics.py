import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mcseg.metrics import pixel_accuracy, rand_index, variation_of_information

labelings = st.integers(2, 12).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 3), min_size=n, max_size=n),
    st.lists(st.integers(0, 3), min_size=n, max_size=n),
))


def test_vi_examples():
    assert variation_of_information([0, 0, 1, 1], [5, 5, 7, 7]) == 0.0
    assert variation_of_information([0, 0, 1, 1], [0, 1, 2, 3]) == pytest.approx(math.log(2))


def test_rand_index_examples():
    assert rand_index([1, 2, 3], [4, 5, 6]) == 1.0
    assert rand_index([1, 1, 2, 2], [1, 1, 1, 1]) == pytest.approx(2 / 6)


def test_pixel_accuracy_examples():
    assert pixel_accuracy([0, 1, 2, 3], [0, 1, 2, 3]) == 1.0
    assert pixel_accuracy([0, 1], [1, 0]) == 0.0
    assert pixel_accuracy([0, 1, 2, 3], [0, 1, 0, 0]) == 0.5


def test_length_mismatch():
    for fn in (variation_of_information, rand_index, pixel_accuracy):
        with pytest.raises(ValueError):
            fn([0, 1], [0])


@given(labelings)
def test_metric_properties(pq):
    p, q = pq
    vi = variation_of_information(p, q)
    assert vi >= 0.0
    assert vi == pytest.approx(variation_of_information(q, p), abs=1e-12)
    renamed = [(a + 1) % 4 for a in q]
    assert variation_of_information(p, renamed) == pytest.approx(vi, abs=1e-12)
    assert rand_index(p, renamed) == pytest.approx(rand_index(p, q))
    assert 0.0 <= rand_index(p, q) <= 1.0
    assert 0.0 <= pixel_accuracy(p, q) <= 1.0
    same = variation_of_information(p, p) == 0.0
    assert same
