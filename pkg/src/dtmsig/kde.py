"""Kernel density estimation of DTM signatures and L1 distances between estimates."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate, special

from ._io import atomic_write_json, atomic_write_text, fmt, sidecar_path
from .errors import ConfigError, DegenerateSample, EmptyInput, InsufficientPoints, ParseError

DEFAULT_GRID = 512
L1_GRID = 1024
_GRID_CHUNK = 64

# Normalising constant of the standard normal density restricted to [-1, 1].
_GAUSS_Z = special.erf(1 / math.sqrt(2))


@dataclass(frozen=True)
class Kernel:
    """A compactly supported, even kernel on ``[-1, 1]``."""

    kind: str

    def __post_init__(self):
        kind = {"gaussian": "gaussian-truncated"}.get(self.kind, self.kind)
        if kind not in ("biweight", "gaussian-truncated"):
            raise ConfigError(f"unknown kernel {self.kind!r}")
        object.__setattr__(self, "kind", kind)

    support = 1.0

    def __call__(self, u):
        u = np.asarray(u, dtype=np.float64)
        inside = np.abs(u) <= 1.0
        if self.kind == "biweight":
            t = np.where(inside, 1.0 - u * u, 0.0)
            return 0.9375 * t * t
        u = np.where(inside, u, 0.0)
        return np.where(inside, np.exp(-0.5 * u * u) / (math.sqrt(2 * math.pi) * _GAUSS_Z), 0.0)


BIWEIGHT = Kernel("biweight")
GAUSSIAN = Kernel("gaussian-truncated")


def as_kernel(kernel) -> Kernel:
    return kernel if isinstance(kernel, Kernel) else Kernel(kernel)


def kernel_eval(kernel, u) -> float:
    return float(as_kernel(kernel)(u))


def kernel_l2(kernel) -> float:
    """``int K(u)^2 du`` over ``[-1, 1]``."""
    kernel = as_kernel(kernel)
    if kernel.kind == "biweight":
        return 5.0 / 7.0
    # int_{-1}^{1} phi(u)^2 du = erf(1) / (2 sqrt(pi))
    return special.erf(1.0) / (2 * math.sqrt(math.pi) * _GAUSS_Z**2)


def kernel_l2_quadrature(kernel) -> float:
    kernel = as_kernel(kernel)
    val, _ = integrate.quad(lambda u: float(kernel(u)) ** 2, -1, 1, epsabs=1e-13, epsrel=1e-13)
    return val


RULES = {
    "silverman-5th-root": "silverman-5th-root",
    "n5": "silverman-5th-root",
    "silverman-54-power": "silverman-54-power",
    "n54": "silverman-54-power",
    "manual": "manual",
}


@dataclass(frozen=True)
class Bandwidth:
    h: float
    rule: str = "manual"

    def __post_init__(self):
        if not (math.isfinite(self.h) and self.h > 0):
            raise ConfigError(f"bandwidth must be positive and finite, got {self.h}")
        if self.rule not in RULES:
            raise ConfigError(f"unknown bandwidth rule {self.rule!r}")
        object.__setattr__(self, "rule", RULES[self.rule])

    def __float__(self):
        return float(self.h)


def _as_h(h) -> Bandwidth:
    return h if isinstance(h, Bandwidth) else Bandwidth(float(h))


def spread(values) -> float:
    """``min(sample sd, IQR / 1.34)``; IQR from type-7 (linear) quantiles."""
    values = np.asarray(values, dtype=np.float64)
    s = np.std(values, ddof=1)
    q75, q25 = np.quantile(values, [0.75, 0.25])
    return float(min(s, (q75 - q25) / 1.34))


def bandwidth_select(values, rule="silverman-5th-root") -> Bandwidth:
    """Rule-of-thumb bandwidth.

    ``silverman-5th-root``: ``1.06 A n^(-1/5)``.
    ``silverman-54-power``: ``(1.06 A)^(5/4) n^(-1/4)``, which satisfies
    ``h = o(n^(-1/5))``.  Here ``A = min(s, IQR/1.34)``.
    """
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    if rule not in RULES or RULES[rule] == "manual":
        raise ConfigError(f"bandwidth rule must be silverman-5th-root or silverman-54-power, got {rule!r}")
    rule = RULES[rule]
    n = len(values)
    if n < 2:
        raise InsufficientPoints("bandwidth selection needs at least two values")
    if np.all(values == values[0]):
        raise DegenerateSample("all values are identical")
    a = spread(values)
    if not a > 0:
        raise DegenerateSample("interquartile range is zero; rule-of-thumb bandwidth degenerates")
    if rule == "silverman-5th-root":
        h = 1.06 * a * n ** -0.2
    else:
        h = (1.06 * a) ** 1.25 * n ** -0.25
    return Bandwidth(h, rule)


def _evaluate(sorted_data, kernel, h, grid):
    """Windowed KDE sum over ``grid`` using the kernel's compact support."""
    n = len(sorted_data)
    out = np.zeros(len(grid))
    for start in range(0, len(grid), _GRID_CHUNK):
        g = grid[start:start + _GRID_CHUNK]
        lo = np.searchsorted(sorted_data, g.min() - h, side="left")
        hi = np.searchsorted(sorted_data, g.max() + h, side="right")
        if hi > lo:
            u = (sorted_data[None, lo:hi] - g[:, None]) / h
            out[start:start + len(g)] = kernel(u).sum(axis=1)
    return out / (n * h)


def kde_at(values, kernel, h, y) -> float:
    """Kernel density estimate at a single point ``y``."""
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    if len(values) == 0:
        raise EmptyInput("no values")
    h = float(_as_h(h))
    kernel = as_kernel(kernel)
    return float(np.sum(kernel((values - y) / h)) / (len(values) * h))


@dataclass(frozen=True, eq=False)
class DensityEstimate:
    """A kernel density estimate tabulated on a grid.

    ``sample`` keeps the data the estimate was built from, so the estimate
    can be re-evaluated exactly anywhere (see :func:`l1_distance`).
    """

    grid: np.ndarray
    values: np.ndarray
    h: Bandwidth
    kernel: Kernel
    n: int
    source_id: str | None = None
    sample: np.ndarray | None = None

    def __post_init__(self):
        for name in ("grid", "values", "sample"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.array(arr, dtype=np.float64).reshape(-1)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)
        if self.sample is not None:
            s = np.sort(self.sample)
            s.setflags(write=False)
            object.__setattr__(self, "sample", s)

    @property
    def support(self):
        if self.sample is not None:
            return float(self.sample[0] - self.h.h), float(self.sample[-1] + self.h.h)
        return float(self.grid[0]), float(self.grid[-1])

    def __call__(self, y):
        """Evaluate the estimate at ``y`` (exact when the sample is known)."""
        y = np.atleast_1d(np.asarray(y, dtype=np.float64))
        if self.sample is not None:
            order = np.argsort(y, kind="stable")
            out = np.empty(len(y))
            out[order] = _evaluate(self.sample, self.kernel, self.h.h, y[order])
            return out
        return np.interp(y, self.grid, self.values, left=0.0, right=0.0)

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.grid))


def make_grid(values, h, grid=None):
    if grid is None or isinstance(grid, (int, np.integer)):
        size = DEFAULT_GRID if grid is None else int(grid)
        if size < 2:
            raise ConfigError("grid needs at least two points")
        return np.linspace(values.min() - h, values.max() + h, size)
    grid = np.asarray(grid, dtype=np.float64).reshape(-1)
    if len(grid) < 2 or np.any(np.diff(grid) <= 0):
        raise ConfigError("grid must be strictly increasing with at least two points")
    return grid


def kde_estimate(values, kernel=BIWEIGHT, h=None, grid=None, source_id=None) -> DensityEstimate:
    """Tabulate the kernel density estimate of ``values``.

    ``h`` is a :class:`Bandwidth`, a float, or ``None`` for the
    ``silverman-5th-root`` rule.  ``grid`` is an explicit array or a point
    count for an even grid on ``[min - h, max + h]`` (default 512).
    """
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    if len(values) == 0:
        raise EmptyInput("no values to estimate a density from")
    kernel = as_kernel(kernel)
    h = bandwidth_select(values) if h is None else _as_h(h)
    grid = make_grid(values, h.h, grid)
    sample = np.sort(values)
    dens = _evaluate(sample, kernel, h.h, grid)
    return DensityEstimate(grid, dens, h, kernel, len(values), source_id, sample)


def union_grid(a: DensityEstimate, b: DensityEstimate, size=L1_GRID):
    """Merge of two even grids, one over each estimate's support."""
    half = size // 2
    ga = np.linspace(*a.support, half)
    gb = np.linspace(*b.support, size - half)
    return np.union1d(ga, gb)


def l1_distance(a: DensityEstimate, b: DensityEstimate) -> float:
    """Trapezoidal ``int |f_a - f_b|`` on the merged grid of both supports."""
    grid = union_grid(a, b)
    return float(np.trapezoid(np.abs(a(grid) - b(grid)), grid))


def l1_to_function(est: DensityEstimate, f, lo, hi, size=8192) -> float:
    """``int |f_est - f|`` over the union of ``[lo, hi]`` and the estimate's support."""
    slo, shi = est.support
    grid = np.union1d(np.linspace(min(lo, slo), max(hi, shi), size), [lo, hi])
    fv = np.asarray(f(grid), dtype=np.float64)
    return float(np.trapezoid(np.abs(est(grid) - fv), grid))


def save_density(est: DensityEstimate, path):
    body = "y,density\n" + "".join(f"{fmt(y)},{fmt(v)}\n" for y, v in zip(est.grid, est.values))
    atomic_write_text(path, body)
    meta = {
        "kernel": est.kernel.kind,
        "h": est.h.h,
        "rule": est.h.rule,
        "n": est.n,
        "source_id": est.source_id,
    }
    if est.sample is not None:
        meta["sample"] = [float(v) for v in est.sample]
    atomic_write_json(sidecar_path(path), meta)


def load_density(path) -> DensityEstimate:
    path = Path(path)
    rows = [r for r in csv.reader(io.StringIO(path.read_text())) if r]
    if rows and rows[0][0].strip() == "y":
        rows = rows[1:]
    if not rows:
        raise EmptyInput(f"{path}: no density rows")
    try:
        table = np.array([[float(r[0]), float(r[1])] for r in rows])
    except (ValueError, IndexError):
        raise ParseError(f"{path}: malformed density table") from None
    side = sidecar_path(path)
    if not side.exists():
        raise ParseError(f"{path}: missing sidecar {side.name}")
    meta = json.loads(side.read_text())
    return DensityEstimate(
        table[:, 0],
        table[:, 1],
        Bandwidth(meta["h"], meta.get("rule", "manual")),
        Kernel(meta["kernel"]),
        int(meta["n"]),
        meta.get("source_id"),
        meta.get("sample"),
    )
