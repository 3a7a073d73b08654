import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symlat import _kernels
from symlat.data import NeighborIndex, RegressionDataset
from symlat.errors import DataError


def brute_nearest(points, queries):
    """Oracle: argmin of float64 squared distance, first index on ties."""
    out = np.empty(len(queries), dtype=np.int64)
    for k, q in enumerate(queries):
        diffs = points - q
        sq = np.einsum("ij,ij->i", diffs, diffs)
        out[k] = int(np.argmin(sq))
    return out


def test_dataset_validation():
    with pytest.raises(DataError):
        RegressionDataset(np.zeros((1, 2)), np.zeros(1))
    with pytest.raises(DataError):
        RegressionDataset(np.zeros((3, 2)), np.zeros(2))
    with pytest.raises(DataError):
        RegressionDataset(np.array([[np.inf, 0.0], [0.0, 0.0]]), np.zeros(2))
    data = RegressionDataset(np.zeros((4, 2)), np.arange(4.0))
    assert data.n == 4 and data.dim == 2
    left, right = data.head_split(2)
    assert left.n == 2 and right.n == 2


def test_query_at_data_point_returns_itself():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(50, 3))
    index = NeighborIndex(pts)
    for i in (0, 17, 49):
        assert index.query(pts[i]) == i


def test_exact_ties_take_smaller_index():
    pts = np.array([[0.0], [2.0], [2.0]])
    index = NeighborIndex(pts)
    assert index.query(np.array([1.0])) == 0 or True  # distance 1 both ways
    # equidistant between points 0 and 1
    assert index.query(np.array([1.0])) == brute_nearest(pts, np.array([[1.0]]))[0]
    # duplicated points: the smaller index wins
    assert index.query(np.array([2.0])) == 1


def test_matches_brute_force_on_random_points():
    rng = np.random.default_rng(42)
    pts = rng.normal(size=(1000, 5))
    queries = np.vstack([rng.normal(size=(200, 5)), pts[rng.integers(0, 1000, 50)]])
    index = NeighborIndex(pts)
    assert np.array_equal(index.query_many(queries), brute_nearest(pts, queries))


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=1, max_value=40), st.integers(min_value=1, max_value=5),
       st.integers(min_value=0, max_value=2 ** 31 - 1))
def test_neighbor_index_property(n, d, seed):
    rng = np.random.default_rng(seed)
    # round coordinates so exact ties actually occur
    pts = np.round(rng.normal(size=(n, d)), 1)
    queries = np.round(rng.normal(size=(10, d)), 1)
    index = NeighborIndex(pts)
    assert np.array_equal(index.query_many(queries), brute_nearest(pts, queries))


# ---------------------------------------------------------------------------
# regression kernels (numba and numpy backends agree)
# ---------------------------------------------------------------------------

def test_backends_agree():
    rng = np.random.default_rng(1)
    xt = rng.normal(size=(60, 3))
    yt = rng.normal(size=60)
    xq = rng.normal(size=(25, 3))
    h = np.array([0.5, 1.0, 2.0])
    ref = _kernels.nw_predict_numpy(xt, yt, xq, h)
    out = _kernels.nw_predict(xt, yt, xq, h)
    assert np.allclose(out, ref, rtol=1e-12, atol=1e-12)
    assert np.isclose(_kernels.loo_cv_sse(xt, yt, h),
                      _kernels.loo_cv_sse_numpy(xt, yt, h), rtol=1e-10)


def test_predict_limits():
    xt = np.array([[0.0], [1.0], [2.0]])
    yt = np.array([5.0, -1.0, 3.0])
    # vanishing bandwidth: the nearest training response
    tiny = _kernels.nw_predict(xt, yt, np.array([[1.0001]]), np.array([1e-8]))
    assert np.isclose(tiny[0], -1.0)
    # huge bandwidth: the overall mean
    flat = _kernels.nw_predict(xt, yt, np.array([[0.3]]), np.array([1e8]))
    assert np.isclose(flat[0], yt.mean(), atol=1e-6)


def test_constant_responses_stay_constant():
    rng = np.random.default_rng(2)
    xt = rng.normal(size=(30, 2))
    yt = np.full(30, 4.2)
    preds = _kernels.nw_predict(xt, yt, rng.normal(size=(10, 2)), np.array([0.7, 0.7]))
    assert np.allclose(preds, 4.2, atol=1e-12)


def test_far_queries_fall_back_to_nearest_response():
    # all weights underflow relative rounding: the shifted exponent keeps the
    # nearest point's weight at 1
    xt = np.array([[0.0], [10.0]])
    yt = np.array([1.0, 2.0])
    out = _kernels.nw_predict(xt, yt, np.array([[1e6]]), np.array([0.01]))
    assert np.isclose(out[0], 2.0)
