"""Monte Carlo check of the pointwise central limit theorem for DTM densities.

For each repetition a fresh sample is drawn from a reference space.  The
plug-in statistic uses the empirical DTM signature, the oracle statistic
the exact DTM at the same points:

    sqrt(n h1) (f_plugin(y) - f(y))    and    sqrt(n h2) (f_oracle(y) - f(y)).

Both should approach ``N(0, f(y) * int K^2)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

from ._io import atomic_write_json, atomic_write_text, fmt
from .dtm import analytic_density, analytic_signature, density_support, dtm_signature
from .errors import ConfigError, DomainError, InvalidVariance
from .kde import RULES, as_kernel, bandwidth_select, kde_at, kernel_l2, kernel_l2_quadrature
from .synth import AnalyticSpace, RngSeed, sample_space


def _normal_cdf(x, sigma2):
    return 0.5 * (1.0 + special.erf(np.asarray(x) / math.sqrt(2.0 * sigma2)))


def ks_statistic(sample, sigma2) -> float:
    """One-sample Kolmogorov-Smirnov distance to ``N(0, sigma2)``."""
    if not sigma2 > 0:
        raise InvalidVariance(f"variance must be positive, got {sigma2}")
    x = np.sort(np.asarray(sample, dtype=np.float64).reshape(-1))
    n = len(x)
    if n == 0:
        raise ConfigError("empty sample")
    cdf = _normal_cdf(x, sigma2)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))


def two_sample_ks(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov distance between empirical CDFs."""
    a = np.sort(np.asarray(a, dtype=np.float64).reshape(-1))
    b = np.sort(np.asarray(b, dtype=np.float64).reshape(-1))
    if len(a) == 0 or len(b) == 0:
        raise ConfigError("both samples must be non-empty")
    pts = np.concatenate((a, b))
    fa = np.searchsorted(a, pts, side="right") / len(a)
    fb = np.searchsorted(b, pts, side="right") / len(b)
    return float(np.max(np.abs(fa - fb)))


@dataclass(frozen=True)
class CltExperiment:
    space: AnalyticSpace = AnalyticSpace.UNIT_DISK_QUADRATIC
    m: float = 1.0
    y: float = 0.7
    n: int = 2500
    reps: int = 2000
    kernel: str = "biweight"
    bandwidth_rule: str = "silverman-54-power"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "space", AnalyticSpace(self.space))
        object.__setattr__(self, "kernel", as_kernel(self.kernel).kind)
        if self.bandwidth_rule not in RULES or RULES[self.bandwidth_rule] == "manual":
            raise ConfigError(f"unknown bandwidth rule {self.bandwidth_rule!r}")
        object.__setattr__(self, "bandwidth_rule", RULES[self.bandwidth_rule])
        if self.reps < 100:
            raise ConfigError(f"reps must be at least 100, got {self.reps}")
        if self.n < 2:
            raise ConfigError(f"n must be at least 2, got {self.n}")
        RngSeed(self.seed)
        lo, hi = density_support(self.space, self.m)
        if not lo < self.y < hi:
            raise DomainError(f"y={self.y} is not strictly inside the density support ({lo}, {hi})")

    @classmethod
    def from_dict(cls, d):
        names = set(cls.__dataclass_fields__)
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown experiment fields: {sorted(unknown)}")
        try:
            return cls(**d)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(d)

    def to_dict(self):
        return asdict(self) | {"space": self.space.value}


@dataclass(frozen=True, eq=False)
class CltResult:
    experiment: CltExperiment
    plugin_stats: np.ndarray
    oracle_stats: np.ndarray
    target_variance: float
    ks_plugin: float
    ks_oracle: float
    ks_between: float = field(default=float("nan"))

    def summary(self) -> str:
        return (
            f"ks_plugin={self.ks_plugin:.6f}, ks_oracle={self.ks_oracle:.6f}, "
            f"target_variance={self.target_variance:.6f}"
        )

    def to_dict(self):
        return {
            "experiment": self.experiment.to_dict(),
            "target_variance": self.target_variance,
            "ks_plugin": self.ks_plugin,
            "ks_oracle": self.ks_oracle,
            "ks_between": self.ks_between,
            "plugin_stats": [float(v) for v in self.plugin_stats],
            "oracle_stats": [float(v) for v in self.oracle_stats],
        }

    def save_json(self, path):
        atomic_write_json(path, self.to_dict())

    def save_csv(self, path):
        rows = "".join(f"{r},{fmt(p)},{fmt(o)}\n" for r, (p, o) in enumerate(zip(self.plugin_stats, self.oracle_stats)))
        atomic_write_text(path, "rep,plugin,oracle\n" + rows)


def target_variance(space, m, y, kernel="biweight", quadrature=False) -> float:
    """Limit variance ``f(y) * int K^2``."""
    l2 = kernel_l2_quadrature(kernel) if quadrature else kernel_l2(kernel)
    return float(analytic_density(space, y, m)) * l2


def clt_replicate(exp: CltExperiment, rep: int):
    """One repetition: ``(plugin statistic, oracle statistic)``."""
    kernel = as_kernel(exp.kernel)
    f_y = float(analytic_density(exp.space, exp.y, exp.m))
    cloud = sample_space(exp.space, exp.n, RngSeed(exp.seed, rep))
    empirical = dtm_signature(cloud, exp.m).values
    exact = analytic_signature(exp.space, cloud, exp.m)
    h1 = bandwidth_select(empirical, exp.bandwidth_rule).h
    h2 = bandwidth_select(exact, exp.bandwidth_rule).h
    plugin = math.sqrt(exp.n * h1) * (kde_at(empirical, kernel, h1, exp.y) - f_y)
    oracle = math.sqrt(exp.n * h2) * (kde_at(exact, kernel, h2, exp.y) - f_y)
    return plugin, oracle


def run_clt_experiment(exp: CltExperiment, progress=None) -> CltResult:
    """Run all repetitions; repetition ``r`` uses random stream ``(seed, r)``."""
    plugin = np.empty(exp.reps)
    oracle = np.empty(exp.reps)
    for r in range(exp.reps):
        plugin[r], oracle[r] = clt_replicate(exp, r)
        if progress is not None:
            progress(r + 1, exp.reps)
    sigma2 = target_variance(exp.space, exp.m, exp.y, exp.kernel)
    return CltResult(
        exp,
        plugin,
        oracle,
        sigma2,
        ks_statistic(plugin, sigma2),
        ks_statistic(oracle, sigma2),
        two_sample_ks(plugin, oracle),
    )
