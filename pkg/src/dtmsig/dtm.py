"""Empirical and closed-form Distance-to-Measure functions.

The empirical DTM of a point ``x`` with mass ``m`` is the average of the
empirical quantile function of ``||x - X_i||^2`` over levels ``(0, m]``.
For ``m = k/n`` this is the mean squared distance to the ``k`` nearest
sample points (the point itself included when it belongs to the sample).
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._io import atomic_write_json, atomic_write_text, fmt, sidecar_path
from .errors import (
    DimensionError,
    DomainError,
    InputError,
    InsufficientPoints,
    MassTooSmall,
    NoDensity,
    ParseError,
    UnsupportedOracle,
)
from .geometry import NeighborIndex, PointCloud
from .synth import AnalyticSpace

_INTEGRAL_TOL = 1e-9


def _mass_split(m, n):
    """Return ``(l, frac)`` with ``m*n = l + frac``, snapping near-integers."""
    if not 0 < m <= 1:
        raise InputError(f"mass parameter must lie in (0, 1], got {m}")
    mn = m * n
    k = round(mn)
    if abs(mn - k) <= _INTEGRAL_TOL * max(1.0, mn):
        mn = float(k)
    if mn < 1:
        raise MassTooSmall(f"m={m} is below 1/n for n={n}")
    ell = math.floor(mn)
    return ell, mn - ell


def neighbours_needed(m, n):
    """Number of order statistics the DTM with mass ``m`` depends on."""
    ell, frac = _mass_split(m, n)
    return ell + (frac > 0)


def dtm_from_sorted(sorted_sq, m, n):
    """DTM values from row-wise ascending squared distances.

    ``sorted_sq`` has shape ``(..., K)`` with ``K >= neighbours_needed(m, n)``.
    """
    sorted_sq = np.asarray(sorted_sq, dtype=np.float64)
    ell, frac = _mass_split(m, n)
    head = sorted_sq[..., :ell].sum(axis=-1)
    if frac == 0:
        return head / ell
    return (head + frac * sorted_sq[..., ell]) / (ell + frac)


def empirical_dtm_at(index: NeighborIndex, x, m) -> float:
    """Plug-in DTM of ``x`` computed from the indexed sample."""
    k = neighbours_needed(m, index.n)
    d2 = index.knn_sq_distances(np.asarray(x, dtype=np.float64).reshape(1, -1), k)
    return float(dtm_from_sorted(d2[0], m, index.n))


def knn_dtm_at(index: NeighborIndex, x, k: int) -> float:
    """Mean squared distance from ``x`` to its ``k`` nearest sample points."""
    return float(np.mean([d for _, d in index.query(x, k)]))


@dataclass(frozen=True, eq=False)
class DtmSignature:
    values: np.ndarray
    m: float
    n: int
    source_id: str | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).reshape(-1)
        if len(v) != self.n:
            raise InputError(f"signature has {len(v)} values but n={self.n}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InputError("signature values must be finite and non-negative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.n


def dtm_signature(cloud: PointCloud, m, index: NeighborIndex | None = None, workers=1) -> DtmSignature:
    """Empirical DTM at every sample point, in cloud order."""
    if index is None:
        index = NeighborIndex(cloud)
    ell, frac = _mass_split(m, cloud.n)
    if ell == cloud.n:
        # full mass: order statistics are not needed, only their sum
        values = index.sq_distance_sums(cloud.points) / cloud.n
    else:
        d2 = index.knn_sq_distances(cloud.points, ell + (frac > 0), workers=workers)
        values = dtm_from_sorted(d2, m, cloud.n)
    return DtmSignature(values, float(m), cloud.n, cloud.id)


def save_signature(sig: DtmSignature, path):
    body = "dtm_sq\n" + "".join(fmt(v) + "\n" for v in sig.values)
    atomic_write_text(path, body)
    atomic_write_json(sidecar_path(path), {"m": sig.m, "n": sig.n, "source_id": sig.source_id})


def load_signature(path) -> DtmSignature:
    path = Path(path)
    rows = list(csv.reader(io.StringIO(path.read_text())))
    rows = [r for r in rows if r and r[0].strip()]
    if rows and rows[0][0].strip() == "dtm_sq":
        rows = rows[1:]
    values = []
    for i, r in enumerate(rows):
        try:
            values.append(float(r[0]))
        except ValueError:
            raise ParseError(f"non-numeric value {r[0]!r}", row=i) from None
    meta = {}
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text())
    m = meta.get("m", float("nan"))
    return DtmSignature(np.array(values), m, len(values), meta.get("source_id", path.stem))


@dataclass(frozen=True)
class QuadraticDtm:
    """``x -> ||x - center||^2 + offset``: the exact DTM with mass one."""

    center: np.ndarray
    offset: float

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        diff = x - self.center
        return np.sum(diff * diff, axis=-1) + self.offset


def quadratic_dtm_from_cloud(cloud: PointCloud) -> QuadraticDtm:
    if cloud.n < 2:
        raise InsufficientPoints("quadratic DTM needs at least two points")
    pts = cloud.points
    center = pts.mean(axis=0)
    offset = float(np.sum(np.mean((pts - center) ** 2, axis=0)))
    return QuadraticDtm(center, offset)


# ---------------------------------------------------------------------------
# closed forms for the reference spaces

_SQRT_04 = math.sqrt(0.4)
_LIN_LEFT = math.sqrt(0.1) / 2
_LIN_RIGHT = 0.5 + 3 / (2 * math.sqrt(10))
_LIN_BETA = 18 * _SQRT_04 - 40 / 3
_LIN_VERTEX = -_LIN_BETA / 2
# breakpoints of the m = 0.1 density for the linear density on [0, 1]
_LIN_Y0 = 19 / 20 - _LIN_BETA**2 / 4
_LIN_Y1 = (19 - 6 * math.sqrt(10)) / 120
_LIN_Y2 = -683 / 60 + 18 * _SQRT_04
_LIN_Y3 = 1 / 120
_LIN_Y4 = 1 / 20


def _is(m, value):
    return math.isclose(float(m), value, rel_tol=1e-12, abs_tol=0.0)


def _check_support(space, x):
    x = np.asarray(x, dtype=np.float64)
    tol = 1e-12
    if space.dim == 1:
        x = x.reshape(-1)
        if x.shape[0] != 1:
            raise DimensionError(f"{space.value} is one-dimensional, got {x.shape[0]} coordinates")
        if not -tol <= x[0] <= 1 + tol:
            raise DomainError(f"x={x[0]} lies outside [0, 1]")
        return float(x[0])
    x = x.reshape(-1)
    if x.shape[0] != 2:
        raise DimensionError(f"{space.value} is two-dimensional, got {x.shape[0]} coordinates")
    if space is AnalyticSpace.UNIT_SQUARE_UNIFORM:
        if np.any(x < -tol) or np.any(x > 1 + tol):
            raise DomainError(f"x={x.tolist()} lies outside the unit square")
    elif x @ x > 1 + tol:
        raise DomainError(f"x={x.tolist()} lies outside the unit disk")
    return x


def _uniform_m01(x):
    e = min(x, 1 - x)
    if e < 0.05:
        return e * e - 0.1 * e + 1 / 300
    return 1 / 1200


def _linear_m01(x):
    if x <= _LIN_LEFT:
        return x * x - (2 / 3) * _SQRT_04 * x + 1 / 20
    if x <= _LIN_RIGHT:
        return 1 / (4800 * x * x)
    return x * x + _LIN_BETA * x + 19 / 20


def _oracle_key(space, m):
    space = AnalyticSpace(space)
    if space is AnalyticSpace.UNIT_INTERVAL_UNIFORM and (_is(m, 1) or _is(m, 0.1)):
        return space, (1 if _is(m, 1) else 0.1)
    if space is AnalyticSpace.UNIT_INTERVAL_LINEAR and _is(m, 0.1):
        return space, 0.1
    if space in (AnalyticSpace.UNIT_SQUARE_UNIFORM, AnalyticSpace.UNIT_DISK_QUADRATIC) and _is(m, 1):
        return space, 1
    raise UnsupportedOracle(f"no closed form for {space.value} with m={m}")


def analytic_dtm(space: AnalyticSpace, x, m) -> float:
    """Exact population DTM of a reference space at the point ``x``."""
    space, m = _oracle_key(space, m)
    x = _check_support(space, x)
    if space is AnalyticSpace.UNIT_INTERVAL_UNIFORM:
        return 1 / 3 - x + x * x if m == 1 else _uniform_m01(x)
    if space is AnalyticSpace.UNIT_INTERVAL_LINEAR:
        return _linear_m01(x)
    if space is AnalyticSpace.UNIT_SQUARE_UNIFORM:
        return float(x @ x - x.sum() + 2 / 3)
    return float(x @ x + 1 / 3)


def analytic_signature(space: AnalyticSpace, cloud: PointCloud, m) -> np.ndarray:
    """Exact DTM evaluated at every point of ``cloud`` (vectorised)."""
    space, m = _oracle_key(space, m)
    pts = cloud.points
    if pts.shape[1] != space.dim:
        raise DimensionError(f"{space.value} has dimension {space.dim}, cloud has {pts.shape[1]}")
    if space is AnalyticSpace.UNIT_SQUARE_UNIFORM:
        return np.sum(pts * pts, axis=1) - pts.sum(axis=1) + 2 / 3
    if space is AnalyticSpace.UNIT_DISK_QUADRATIC:
        return np.sum(pts * pts, axis=1) + 1 / 3
    x = pts[:, 0]
    if space is AnalyticSpace.UNIT_INTERVAL_UNIFORM and m == 1:
        return 1 / 3 - x + x * x
    f = _uniform_m01 if space is AnalyticSpace.UNIT_INTERVAL_UNIFORM else _linear_m01
    return np.array([f(v) for v in x])


def density_support(space: AnalyticSpace, m):
    """Interval ``(lo, hi)`` carrying the DTM density."""
    space, m = _oracle_key(space, m)
    if space is AnalyticSpace.UNIT_INTERVAL_UNIFORM:
        if m != 1:
            raise NoDensity("the DTM of U[0,1] with m=0.1 is constant on [0.05, 0.95]; no Lebesgue density")
        return 1 / 12, 1 / 3
    if space is AnalyticSpace.UNIT_INTERVAL_LINEAR:
        return _LIN_Y0, _LIN_Y4
    if space is AnalyticSpace.UNIT_SQUARE_UNIFORM:
        return 1 / 6, 2 / 3
    return 1 / 3, 4 / 3


def _density_array(space, m, y):
    lo, hi = density_support(space, m)
    out = np.zeros_like(y)
    inside = (y >= lo) & (y <= hi)
    if space is AnalyticSpace.UNIT_DISK_QUADRATIC:
        out[inside] = -2 * y[inside] + 8 / 3
    elif space is AnalyticSpace.UNIT_SQUARE_UNIFORM:
        flat = inside & (y <= 5 / 12)
        out[flat] = math.pi
        curved = inside & (y > 5 / 12)
        z = 2 * np.sqrt(y[curved] - 5 / 12)
        # arccot(z) = pi/2 - arctan(z) for z > 0
        out[curved] = 2 * (math.pi / 2 - np.arctan(z)) - 2 * np.arctan(np.sqrt(4 * y[curved] - 5 / 3))
    elif space is AnalyticSpace.UNIT_INTERVAL_UNIFORM:
        with np.errstate(divide="ignore"):
            out[inside] = 2 * math.sqrt(3) / np.sqrt(12 * y[inside] - 1)
    else:
        with np.errstate(divide="ignore"):
            # sqrt(13661 - 4320 sqrt(10) + 180 y), written without the cancellation
            root = np.sqrt(np.maximum(180 * (y - _LIN_Y0), 0.0))
            a = inside & (y <= _LIN_Y1)
            out[a] = (80 * math.sqrt(5) - 108 * math.sqrt(2)) / root[a]
            b = (y > _LIN_Y1) & (y <= _LIN_Y2)
            out[b] = 1 + (40 * math.sqrt(5) - 54 * math.sqrt(2)) / root[b] + 1 / (4800 * y[b] ** 2)
            c = (y > _LIN_Y2) & (y <= _LIN_Y3)
            out[c] = 1 / (4800 * y[c] ** 2)
            d = (y > _LIN_Y3) & (y <= _LIN_Y4)
            out[d] = -1 + 2 / np.sqrt(90 * y[d] - 0.5)
    return out


def analytic_density(space: AnalyticSpace, y, m):
    """Exact Lebesgue density of the DTM signature, zero off its support.

    Integrable singularities (at the lower support end for the interval
    spaces) are returned as ``inf``; no clipping is applied.
    """
    space, m = _oracle_key(space, m)
    if space is AnalyticSpace.UNIT_INTERVAL_UNIFORM and m != 1:
        raise NoDensity("the DTM of U[0,1] with m=0.1 has no Lebesgue density")
    arr = np.asarray(y, dtype=np.float64)
    out = _density_array(space, m, np.atleast_1d(arr).astype(np.float64))
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)
