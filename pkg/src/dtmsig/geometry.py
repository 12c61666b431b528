"""Point clouds, file formats and exact nearest-neighbour queries.

All distances handled here are *squared* Euclidean distances computed
directly from coordinate differences.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from ._io import atomic_write_text, fmt
from .errors import DimensionError, EmptyInput, InsufficientPoints, ParseError

# Above this many neighbours a blocked brute-force pass beats the kd-tree.
_TREE_MAX_K = 64
_BLOCK_ELEMENTS = 2_000_000


@dataclass(frozen=True, eq=False)
class PointCloud:
    """An ordered, immutable sample of ``n`` points in ``R^dim``."""

    points: np.ndarray
    id: str | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2:
            raise DimensionError(f"points must be a 2-d array, got shape {pts.shape}")
        if pts.shape[0] == 0:
            raise EmptyInput("point cloud has no points")
        if pts.shape[1] == 0:
            raise DimensionError("points must have at least one coordinate")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n


def _is_number(token):
    try:
        float(token)
    except ValueError:
        return False
    return True


def _parse_rows(rows):
    rows = [[tok.strip() for tok in row] for row in rows]
    rows = [row for row in rows if any(row)]
    if rows and not all(_is_number(tok) for tok in rows[0]):
        rows = rows[1:]  # header
    if not rows:
        raise EmptyInput("no data rows")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ParseError(f"expected {width} columns, found {len(row)}", row=i)
    ncoord = width
    if width > 3 or not _is_number(rows[0][-1]):
        ncoord = width - 1  # trailing label column
    if ncoord < 1:
        raise ParseError("no coordinate columns", row=0)
    out = np.empty((len(rows), ncoord))
    for i, row in enumerate(rows):
        for j in range(ncoord):
            try:
                out[i, j] = float(row[j])
            except ValueError:
                raise ParseError(f"non-numeric coordinate {row[j]!r}", row=i) from None
    return out


def load_cloud(path, format=None, id=None) -> PointCloud:
    """Read a CSV or XYZ point file.

    ``format`` defaults to the file suffix (``.xyz`` means whitespace
    separated, anything else CSV).  A non-numeric first row is treated as a
    header and a trailing label column is dropped.
    """
    path = Path(path)
    if format is None:
        format = "xyz" if path.suffix.lower() == ".xyz" else "csv"
    text = path.read_text()
    if format == "csv":
        rows = list(csv.reader(io.StringIO(text)))
    elif format == "xyz":
        rows = [line.split() for line in text.splitlines()]
    else:
        raise ValueError(f"unknown format {format!r}")
    return PointCloud(_parse_rows(rows), id=id if id is not None else path.stem)


def cloud_to_text(cloud: PointCloud, format="csv") -> str:
    sep = "," if format == "csv" else " "
    return "".join(sep.join(fmt(v) for v in row) + "\n" for row in cloud.points)


def save_cloud(cloud: PointCloud, path, format="csv"):
    atomic_write_text(path, cloud_to_text(cloud, format))


class NeighborIndex:
    """Exact k-nearest-neighbour index over a fixed point cloud.

    The index is read-only after construction, so queries may be issued
    concurrently from several threads.
    """

    def __init__(self, cloud: PointCloud):
        self.cloud = cloud
        self._tree = cKDTree(cloud.points)

    @property
    def n(self):
        return self.cloud.n

    @property
    def dim(self):
        return self.cloud.dim

    def _check_point(self, x):
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.shape[0] != self.dim:
            raise DimensionError(f"query has dimension {x.shape[0]}, cloud has {self.dim}")
        return x

    def _check_k(self, k):
        if k < 1:
            raise InsufficientPoints(f"k must be positive, got {k}")
        if k > self.n:
            raise InsufficientPoints(f"k={k} exceeds the number of points n={self.n}")

    def sq_distances(self, x):
        """Squared distances from ``x`` to every point, in point order."""
        x = self._check_point(x)
        diff = self.cloud.points - x
        return np.einsum("ij,ij->i", diff, diff)

    def query(self, x, k):
        x = self._check_point(x)
        self._check_k(k)
        if k == self.n:
            cand = np.arange(self.n)
        else:
            dist, _ = self._tree.query(x, k=k)
            radius = float(np.max(dist))
            # widen slightly so every point tied with the k-th is a candidate
            cand = np.asarray(self._tree.query_ball_point(x, radius * (1 + 1e-9) + 1e-300))
        diff = self.cloud.points[cand] - x
        d2 = np.einsum("ij,ij->i", diff, diff)
        order = np.lexsort((cand, d2))[:k]
        return [(int(cand[i]), float(d2[i])) for i in order]

    def _as_queries(self, queries):
        queries = np.asarray(queries, dtype=np.float64)
        if queries.ndim == 1:
            queries = queries.reshape(-1, self.dim) if self.dim == 1 else queries.reshape(1, -1)
        if queries.shape[1] != self.dim:
            raise DimensionError(f"queries have dimension {queries.shape[1]}, cloud has {self.dim}")
        return queries

    def _blocks(self, queries):
        cols = self.cloud.points.T
        block = max(1, _BLOCK_ELEMENTS // self.n)
        for start in range(0, len(queries), block):
            q = queries[start:start + block]
            d2 = np.zeros((len(q), self.n))
            for j in range(self.dim):
                diff = np.subtract(cols[j][None, :], q[:, j][:, None])
                np.multiply(diff, diff, out=diff)
                d2 += diff
            yield start, d2

    def sq_distance_sums(self, queries):
        """Sum of squared distances from each query to all points."""
        queries = self._as_queries(queries)
        out = np.empty(len(queries))
        for start, d2 in self._blocks(queries):
            out[start:start + len(d2)] = d2.sum(axis=1)
        return out

    def knn_sq_distances(self, queries, k, workers=1):
        """Row-wise sorted squared distances to the ``k`` nearest points.

        ``queries`` has shape ``(q, dim)``; returns a ``(q, k)`` array.
        """
        queries = self._as_queries(queries)
        self._check_k(k)
        pts = self.cloud.points
        if k <= _TREE_MAX_K and k < self.n:
            _, idx = self._tree.query(queries, k=k, workers=workers)
            idx = idx.reshape(len(queries), k)
            diff = pts[idx] - queries[:, None, :]
            d2 = np.einsum("ijk,ijk->ij", diff, diff)
            d2.sort(axis=1)
            return d2
        out = np.empty((len(queries), k))
        for start, d2 in self._blocks(queries):
            if k < self.n:
                d2 = np.partition(d2, k - 1, axis=1)[:, :k]
            d2.sort(axis=1)
            out[start:start + len(d2)] = d2
        return out


def build_index(cloud: PointCloud) -> NeighborIndex:
    return NeighborIndex(cloud)


def knn_query(index: NeighborIndex, x, k: int):
    """The ``k`` nearest points to ``x`` as ``(index, squared distance)`` pairs.

    Ascending by squared distance; ties go to the smaller point index.
    A query point that is itself in the cloud is returned at distance 0.
    """
    return index.query(x, k)


def sorted_sq_distances(index: NeighborIndex, x) -> np.ndarray:
    """All ``n`` squared distances from ``x``, sorted ascending.

    Entry ``i`` (0-based) is the empirical quantile of ``||x - X||^2`` on
    the level interval ``(i/n, (i+1)/n]``.
    """
    return np.sort(index.sq_distances(x))
