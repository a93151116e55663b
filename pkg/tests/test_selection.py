import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uwloc.errors import DimensionMismatch, EmptySelection, FormatError, IndexOutOfRange
from uwloc.selection import (
    build_selected_matrix,
    interpretation_loadings,
    loadings_svg,
    rank_coefficients,
    read_index_list,
    select_features,
    select_pipeline,
    write_index_list,
    write_selection_csv,
)
from uwloc.synth import planted_columns


@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=60))
def test_ranking_is_a_sorted_permutation(values):
    theta = np.array(values)
    order = rank_coefficients(theta)
    assert sorted(order.tolist()) == list(range(theta.size))
    mags = np.abs(theta[order])
    assert np.all(mags[:-1] >= mags[1:])


def test_ties_break_by_index():
    assert rank_coefficients([0.5, -0.5, 0.1, 0.5]).tolist() == [0, 1, 3, 2]


@given(st.lists(st.floats(-1, 1, allow_nan=False), min_size=1, max_size=40), st.floats(0, 0.5))
def test_selection_is_exactly_the_threshold_set(values, eps):
    theta = np.array(values)
    expected = np.flatnonzero(np.abs(theta) > eps)
    if expected.size == 0:
        with pytest.raises(EmptySelection):
            select_features(theta, eps)
    else:
        assert select_features(theta, eps).selected_indices.tolist() == expected.tolist()


def test_epsilon_equal_is_excluded():
    assert select_features([0.02, 0.03], 0.02).selected_indices.tolist() == [1]


def test_pipeline_finds_planted(small_recording):
    cfg, fm, labels, _ = small_recording
    res = select_pipeline(fm.values, labels.values)
    planted = set(planted_columns(cfg).tolist())
    assert planted <= set(res.selected_indices.tolist())
    assert res.pca.n_components == 3


def test_pipeline_empty_selection_message():
    rng = np.random.default_rng(0)
    with pytest.raises(EmptySelection, match="epsilon"):
        select_pipeline(rng.uniform(size=(30, 5)), rng.uniform(size=30), epsilon=100.0)


def test_pipeline_length_mismatch():
    with pytest.raises(DimensionMismatch):
        select_pipeline(np.ones((5, 3)), np.ones(4))


def test_selected_matrix_bounds():
    X = np.arange(12.0).reshape(3, 4)
    assert build_selected_matrix(X, np.array([3, 1])).tolist() == [[3, 1], [7, 5], [11, 9]]
    with pytest.raises(IndexOutOfRange):
        build_selected_matrix(X, np.array([4]))


def test_index_list_roundtrip(tmp_path):
    p = tmp_path / "sel.idx"
    write_index_list(p, [5, 0, 99], 200)
    idx, k = read_index_list(p)
    assert idx.tolist() == [5, 0, 99] and k == 200
    p.write_bytes(b"XXXX" + p.read_bytes()[4:])
    with pytest.raises(FormatError):
        read_index_list(p)


def test_exports(tmp_path, small_recording):
    _, fm, labels, _ = small_recording
    res = select_pipeline(fm.values, labels.values)
    write_selection_csv(tmp_path / "s.csv", res)
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "rank,column_index,frequency_hz,theta_bar,selected"
    assert len(lines) == fm.n_features + 1
    Xs = build_selected_matrix(fm.values, res)
    _, cl = interpretation_loadings(Xs)
    svg = loadings_svg(cl, res.selected_indices)
    assert svg.startswith("<svg") and svg.count("<title>") == res.selected_count
