"""Regression datasets and the nearest-neighbour index."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DataError, DimensionMismatchError


@dataclass(frozen=True, eq=False)
class RegressionDataset:
    """Paired features (n x d) and responses (n,), all finite."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        if X.ndim != 2:
            raise DataError("features must be a 2-d array")
        if Y.shape != (X.shape[0],):
            raise DataError("responses must be one value per feature row")
        if X.shape[0] < 2:
            raise DataError("need at least two observations")
        if not (np.isfinite(X).all() and np.isfinite(Y).all()):
            raise DataError("features and responses must be finite")
        X = X.copy()
        Y = Y.copy()
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def head_split(self, k: int) -> tuple["RegressionDataset", "RegressionDataset"]:
        """First k rows and the remaining rows, as two datasets."""
        if not 2 <= k <= self.n - 2:
            raise DataError(f"split point {k} leaves too few rows on one side")
        return (RegressionDataset(self.X[:k], self.Y[:k]),
                RegressionDataset(self.X[k:], self.Y[k:]))


class NeighborIndex:
    """k-d tree over feature rows whose queries match a brute-force scan.

    Queries return exactly the argmin of float64 squared Euclidean distance,
    with ties broken by the smallest row index: the tree supplies the nearest
    distance, candidates within a hair of it are re-scored exactly, and the
    lowest qualifying index wins.
    """

    def __init__(self, points: np.ndarray):
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[0] < 1:
            raise DataError("index needs a non-empty 2-d point array")
        self._points = points
        self._tree = cKDTree(points)

    @classmethod
    def from_dataset(cls, data: RegressionDataset) -> "NeighborIndex":
        return cls(data.X)

    @property
    def dim(self) -> int:
        return self._points.shape[1]

    def query_many(self, queries: np.ndarray) -> np.ndarray:
        queries = np.asarray(queries, dtype=float)
        if queries.ndim != 2 or queries.shape[1] != self.dim:
            raise DimensionMismatchError(
                f"queries must be (m, {self.dim}), got {queries.shape}")
        dist, _ = self._tree.query(queries, k=1)
        radii = dist * (1.0 + 1e-9) + 1e-300
        candidate_lists = self._tree.query_ball_point(queries, radii)
        out = np.empty(len(queries), dtype=np.int64)
        pts = self._points
        for row, cands in enumerate(candidate_lists):
            cands = sorted(cands)
            diffs = pts[cands] - queries[row]
            sq = np.einsum("ij,ij->i", diffs, diffs)
            out[row] = cands[int(np.argmin(sq))]
        return out

    def query(self, point: np.ndarray) -> int:
        return int(self.query_many(np.asarray(point, dtype=float)[None, :])[0])
