import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uwloc.dataset import (
    batch_iterator,
    build_step_one,
    build_step_two,
    split_indices,
    write_split_manifest,
)
from uwloc.errors import InvalidModulus, LengthMismatch


@pytest.mark.parametrize("m,train", [(2, 2250), (4, 1125), (8, 563)])
def test_split_sizes(m, train):
    tr, te = split_indices(4500, m)
    assert tr.size == train and te.size == 4500 - train


@given(st.integers(2, 50).flatmap(lambda m: st.tuples(st.integers(m, 5000), st.just(m))))
def test_split_partition(nm):
    n, m = nm
    tr, te = split_indices(n, m)
    assert np.intersect1d(tr, te).size == 0
    assert np.array_equal(np.union1d(tr, te), np.arange(n))
    assert np.all((tr + 1) % m == 1)
    assert tr.size == -(-n // m)


@pytest.mark.parametrize("n,m,exc", [(10, 1, InvalidModulus), (10, 0, InvalidModulus), (3, 4, LengthMismatch)])
def test_split_errors(n, m, exc):
    with pytest.raises(exc):
        split_indices(n, m)


def test_step_datasets_are_read_only():
    X = np.arange(20.0).reshape(10, 2)
    one = build_step_one(X)
    assert len(one) == 10
    with pytest.raises(ValueError):
        one.rows[0, 0] = 1.0
    two = build_step_two(X, np.arange(10.0), 4)
    assert two.train_idx.tolist() == [0, 4, 8]
    assert two.label_fraction == "25%"
    with pytest.raises(LengthMismatch):
        build_step_two(X, np.arange(9.0), 2)


def test_batches_cover_every_row_once():
    batches = list(batch_iterator(10, 3, seed=1, epoch=2))
    assert [b.size for b in batches] == [3, 3, 3, 1]
    assert sorted(np.concatenate(batches).tolist()) == list(range(10))
    again = list(batch_iterator(build_step_one(np.zeros((10, 1))), 3, seed=1, epoch=2))
    assert all(np.array_equal(a, b) for a, b in zip(batches, again))
    other = np.concatenate(list(batch_iterator(10, 3, seed=1, epoch=3)))
    assert not np.array_equal(np.concatenate(batches), other)


def test_split_manifest(tmp_path):
    ds = build_step_two(np.zeros((5, 1)), np.zeros(5), 2)
    write_split_manifest(tmp_path / "split.csv", ds)
    assert (tmp_path / "split.csv").read_text().splitlines() == [
        "index,partition", "0,train", "1,test", "2,train", "3,test", "4,train"]
