"""Seeded samplers: reference spaces, planar shapes and noisy chromatin fibres.

Random streams
--------------
Every generator is a numpy ``PCG64`` bit generator seeded through
``SeedSequence(seed, spawn_key=(stream, ...))``.  The same ``(seed, stream)``
pair reproduces the same draws; different stream ids give independent
streams without reusing the raw seed.
"""
from __future__ import annotations

import dataclasses
import enum
import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, DimensionError, InvalidShape, TooManyLoops
from .geometry import PointCloud


class AnalyticSpace(str, enum.Enum):
    """Reference metric measure spaces with closed-form DTM functions."""

    UNIT_INTERVAL_UNIFORM = "UnitIntervalUniform"  # U[0, 1]
    UNIT_INTERVAL_LINEAR = "UnitIntervalLinear"  # density 2x on [0, 1]
    UNIT_SQUARE_UNIFORM = "UnitSquareUniform"  # U([0, 1]^2)
    UNIT_DISK_QUADRATIC = "UnitDiskQuadratic"  # density -(2/pi)(|x|^2 - 1) on the unit disk

    @property
    def dim(self) -> int:
        return 1 if self in (AnalyticSpace.UNIT_INTERVAL_UNIFORM, AnalyticSpace.UNIT_INTERVAL_LINEAR) else 2


@dataclass(frozen=True)
class RngSeed:
    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.stream < 0:
            raise ConfigError(f"stream id must be non-negative, got {self.stream}")

    def generator(self, *subkeys: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream, *subkeys))
        return np.random.Generator(np.random.PCG64(ss))


def as_seed(seed) -> RngSeed:
    return seed if isinstance(seed, RngSeed) else RngSeed(int(seed))


def sample_space(space: AnalyticSpace, n: int, seed) -> PointCloud:
    """``n`` i.i.d. draws from one of the reference spaces."""
    space = AnalyticSpace(space)
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    rng = as_seed(seed).generator()
    if space is AnalyticSpace.UNIT_INTERVAL_UNIFORM:
        pts = rng.random(n)
    elif space is AnalyticSpace.UNIT_INTERVAL_LINEAR:
        pts = np.sqrt(rng.random(n))
    elif space is AnalyticSpace.UNIT_SQUARE_UNIFORM:
        pts = rng.random((n, 2))
    else:
        # radial CDF F(r) = 2r^2 - r^4, so r^2 = 1 - sqrt(1 - u)
        u = rng.random(n)
        r = np.sqrt(1.0 - np.sqrt(1.0 - u))
        theta = 2.0 * np.pi * rng.random(n)
        pts = np.column_stack((r * np.cos(theta), r * np.sin(theta)))
    return PointCloud(pts, id=space.value)


def _shape_region(shape, r_in, r_out):
    if shape == "square":
        return (0.0, 1.0), lambda p: np.ones(len(p), dtype=bool)
    if shape == "disk":
        return (-1.0, 1.0), lambda p: np.einsum("ij,ij->i", p, p) <= 1.0
    if shape == "annulus":
        if not 0 <= r_in < r_out:
            raise InvalidShape(f"annulus needs 0 <= r_in < r_out, got ({r_in}, {r_out})")

        def inside(p):
            rr = np.einsum("ij,ij->i", p, p)
            return (rr >= r_in**2) & (rr <= r_out**2)

        return (-r_out, r_out), inside
    raise InvalidShape(f"unknown shape {shape!r}")


def rejection_sample(shape, n, seed, r_in=0.5, r_out=1.0):
    """Uniform points on a planar region by rejection from its bounding box.

    Returns ``(points, acceptance_rate)``.
    """
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    (lo, hi), inside = _shape_region(shape, r_in, r_out)
    rng = as_seed(seed).generator()
    chunks, have, proposed = [], 0, 0
    while have < n:
        batch = max(64, int(1.5 * (n - have)))
        p = lo + (hi - lo) * rng.random((batch, 2))
        proposed += batch
        keep = p[inside(p)]
        chunks.append(keep)
        have += len(keep)
    pts = np.concatenate(chunks)
    accepted = len(pts)
    return pts[:n], accepted / proposed


def sample_shape(shape, n, seed, r_in=0.5, r_out=1.0) -> PointCloud:
    """Uniform sample on ``square`` ([0,1]^2), ``disk`` (unit) or ``annulus``."""
    pts, _ = rejection_sample(shape, n, seed, r_in=r_in, r_out=r_out)
    return PointCloud(pts, id=shape)


def add_gaussian_noise(cloud: PointCloud, cov, seed) -> PointCloud:
    """Add independent centred Gaussian noise with diagonal covariance ``cov``.

    ``cov`` is either the diagonal (length ``dim``) or a diagonal matrix.
    """
    cov = np.asarray(cov, dtype=np.float64)
    var = np.diag(cov) if cov.ndim == 2 else cov.reshape(-1)
    if cov.ndim == 2 and cov.shape != (cloud.dim, cloud.dim):
        raise DimensionError(f"covariance is {cov.shape}, cloud dimension is {cloud.dim}")
    if var.shape[0] != cloud.dim:
        raise DimensionError(f"covariance has {var.shape[0]} entries, cloud dimension is {cloud.dim}")
    if np.any(var < 0):
        raise ConfigError("covariance diagonal must be non-negative")
    rng = as_seed(seed).generator()
    noise = rng.standard_normal(cloud.points.shape) * np.sqrt(var)
    return PointCloud(cloud.points + noise, id=cloud.id)


@dataclass(frozen=True)
class ChromatinParams:
    """Parameters of the noisy chromatin-fibre generator (lengths in nm).

    The expected number of loops is ``expected_loops`` when given, otherwise
    ``loops_per_mb_scale * loop_density_c * genome_length_mb``.  The default
    scale 0.4 makes ``c = 25`` on 249 Mb produce 2490 loops on average.
    """

    loop_density_c: float = 25.0
    genome_length_mb: float = 249.0
    n_points: int = 49800
    step_nm: float = 45.0
    noise_cov: tuple = (45.0, 45.0, 90.0)
    loop_radius_nm: float = 50.0
    scale: float = 45.0
    loops_per_mb_scale: float = 0.4
    expected_loops: float | None = None

    def __post_init__(self):
        cov = np.asarray(self.noise_cov, dtype=float)
        if cov.ndim == 2:
            cov = np.diag(cov)
        object.__setattr__(self, "noise_cov", tuple(float(v) for v in cov))
        if len(self.noise_cov) != 3 or any(v < 0 for v in self.noise_cov):
            raise ConfigError("noise_cov must hold three non-negative variances")
        if self.loop_density_c < 0:
            raise ConfigError("loop_density_c must be >= 0")
        for name in ("genome_length_mb", "step_nm", "loop_radius_nm", "scale"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.n_points < 2:
            raise ConfigError("n_points must be >= 2")
        if self.loops_per_mb_scale < 0 or (self.expected_loops is not None and self.expected_loops < 0):
            raise ConfigError("loop calibration must be non-negative")

    @property
    def loop_rate(self) -> float:
        if self.expected_loops is not None:
            return float(self.expected_loops)
        return self.loops_per_mb_scale * self.loop_density_c * self.genome_length_mb

    @property
    def loop_vertices(self) -> int:
        """Number of vertices on one closed loop (a regular polygon)."""
        return max(3, round(2 * math.pi * self.loop_radius_nm / self.step_nm))

    def to_dict(self):
        return dataclasses.asdict(self) | {"noise_cov": list(self.noise_cov)}

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown chromatin parameters: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        if not isinstance(d, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        return cls.from_dict(d)


class ChromatinFiber(NamedTuple):
    backbone: PointCloud
    noisy: PointCloud
    loop_count: int


def _unit_vectors(rng, size):
    v = rng.standard_normal((size, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _walk(params, rng):
    step = params.step_nm
    nv = params.loop_vertices
    n = params.n_points
    n_loops = int(rng.poisson(params.loop_rate))
    free = n - n_loops * (nv - 1)
    if free < 1:
        raise TooManyLoops(
            f"{n_loops} loops of {nv} vertices do not fit into {n} points"
        )
    # each loop starts after a uniformly placed free walk vertex
    starts = np.sort(rng.integers(0, free, size=n_loops))
    loops_at = np.bincount(starts, minlength=free)

    radius = step / (2.0 * math.sin(math.pi / nv))
    angles = 2.0 * math.pi * np.arange(1, nv) / nv
    cos_a, sin_a = np.cos(angles), np.sin(angles)
    min_sep2 = (step / 2.0) ** 2

    pts = np.empty((n, 3))
    pts[0] = 0.0
    i = 0
    dirs = _unit_vectors(rng, 4096)
    di = 0
    for w in range(free):
        if w > 0:
            prev = pts[i]
            lo = max(0, i - 4)
            recent = pts[lo:i]
            for _ in range(50):
                if di == len(dirs):
                    dirs, di = _unit_vectors(rng, 4096), 0
                cand = prev + step * dirs[di]
                di += 1
                if len(recent) == 0:
                    break
                dd = recent - cand
                if np.min(np.einsum("ij,ij->i", dd, dd)) >= min_sep2:
                    break
            i += 1
            pts[i] = cand
        for _ in range(loops_at[w]):
            e1, e2 = _unit_vectors(rng, 2)
            e2 = e2 - e1 * (e2 @ e1)
            e2 /= np.linalg.norm(e2)
            base = pts[i]
            centre = base + radius * e1
            ring = centre - radius * np.outer(cos_a, e1) + radius * np.outer(sin_a, e2)
            pts[i + 1:i + nv] = ring
            i += nv - 1
    assert i == n - 1
    return pts, n_loops


def simulate_chromatin(params: ChromatinParams, seed) -> ChromatinFiber:
    """Simulate one looped chromatin fibre and its noisy, rescaled localisations.

    The backbone is a softly self-avoiding random walk with fixed step
    length.  A Poisson number of closed loops (regular polygons with the
    same edge length, circumradius close to ``loop_radius_nm``) is inserted
    at uniform positions along the walk.  ``noisy`` adds Gaussian noise with
    covariance ``noise_cov`` and divides all coordinates by ``scale``.
    """
    seed = as_seed(seed)
    pts, n_loops = _walk(params, seed.generator(0))
    backbone = PointCloud(pts, id=f"chromatin-c{params.loop_density_c:g}-s{seed.seed}-{seed.stream}")
    noise_seed = np.random.SeedSequence(seed.seed, spawn_key=(seed.stream, 1))
    rng = np.random.Generator(np.random.PCG64(noise_seed))
    noise = rng.standard_normal(pts.shape) * np.sqrt(np.asarray(params.noise_cov))
    noisy = PointCloud((pts + noise) / params.scale, id=backbone.id)
    return ChromatinFiber(backbone, noisy, n_loops)
