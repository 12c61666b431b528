"""Acceptance criteria; each test prints one PASS/FAIL line."""
import math
import time

import numpy as np
import pytest
from scipy import integrate, stats

from dtmsig.analysis import DistanceMatrix, LabeledDensities, average_linkage, cut_dendrogram, holdout_experiment, pairwise_l1
from dtmsig.dtm import (
    analytic_density,
    density_support,
    dtm_signature,
    empirical_dtm_at,
    knn_dtm_at,
    quadratic_dtm_from_cloud,
)
from dtmsig.geometry import PointCloud, build_index
from dtmsig.kde import BIWEIGHT, bandwidth_select, kde_estimate, kernel_l2, l1_to_function
from dtmsig.synth import AnalyticSpace, ChromatinParams, RngSeed, sample_shape, sample_space, simulate_chromatin
from dtmsig.validate import CltExperiment, run_clt_experiment, target_variance

DISK = AnalyticSpace.UNIT_DISK_QUADRATIC


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nacceptance {number}: {'PASS' if ok else 'FAIL'} | {detail}")
        assert ok, detail

    return emit


def _disk_l1(n, seed):
    cloud = sample_space(DISK, n, seed)
    sig = dtm_signature(cloud, 1.0).values
    est = kde_estimate(sig, BIWEIGHT, bandwidth_select(sig, "silverman-5th-root"))
    lo, hi = density_support(DISK, 1)
    return l1_to_function(est, lambda y: analytic_density(DISK, y, 1), lo, hi)


def test_1_analytic_oracle_agreement(report):
    t0 = time.perf_counter()
    big = np.array([_disk_l1(5000, RngSeed(1, s)) for s in range(20)])
    small = np.array([_disk_l1(500, RngSeed(2, s)) for s in range(20)])
    wins = int(np.sum(big < small))
    dt = time.perf_counter() - t0
    ok = big.mean() <= 0.10 and wins >= 18 and dt <= 60
    report(1, ok, f"mean L1(n=5000)={big.mean():.4f} (<=0.10), n=5000 beats n=500 in {wins}/20 (>=18), {dt:.1f}s")


@pytest.mark.slow
def test_2_pointwise_clt(report):
    t0 = time.perf_counter()
    exp = CltExperiment(space=DISK, m=1.0, y=0.7, n=2500, reps=2000, kernel="biweight",
                        bandwidth_rule="silverman-54-power", seed=0)
    res = run_clt_experiment(exp)
    dt = time.perf_counter() - t0
    assert res.target_variance == pytest.approx(target_variance(DISK, 1, 0.7))
    ok = res.ks_plugin <= 0.06 and res.ks_between <= 0.06 and dt <= 600
    report(2, ok, f"KS(plugin)={res.ks_plugin:.4f}, KS(oracle)={res.ks_oracle:.4f}, "
                  f"two-sample KS={res.ks_between:.4f} (<=0.06), var={res.target_variance:.5f}, {dt:.0f}s")


def _quantile_integral(points, x, m):
    # integral of the step quantile function of |X - x|^2 over (0, m], divided by m
    d2 = np.sort(((points - x) ** 2).sum(axis=1))
    n = len(d2)
    left = np.arange(n) / n
    width = np.clip(m - left, 0.0, 1.0 / n)
    return float(np.dot(d2, width) / m)


def test_3_quantile_integral_equals_knn_mean(report):
    rng = np.random.default_rng(3)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(1000):
        n = int(rng.integers(1, 201))
        dim = int(rng.integers(1, 4))
        pts = rng.standard_normal((n, dim)) * rng.uniform(0.1, 10)
        cloud = PointCloud(pts)
        idx = build_index(cloud)
        k = int(rng.integers(1, n + 1))
        x = pts[rng.integers(n)] if rng.random() < 0.5 else rng.standard_normal(dim)
        knn = knn_dtm_at(idx, x, k)
        for q in (_quantile_integral(pts, x, k / n), empirical_dtm_at(idx, x, k / n)):
            worst = max(worst, abs(q - knn) / max(abs(knn), 1e-300))
    dt = time.perf_counter() - t0
    report(3, worst <= 1e-12, f"max relative difference over 1000 instances = {worst:.2e} (<=1e-12), {dt:.1f}s")


def test_4_shape_discrimination(report):
    t0 = time.perf_counter()
    truth = np.repeat([0, 1, 2], 10)
    good = 0
    for trial in range(10):
        ests = []
        for j, (shape, kw) in enumerate([("square", {}), ("disk", {}), ("annulus", {"r_in": 0.5, "r_out": 1.0})]):
            for i in range(10):
                cloud = sample_shape(shape, 2000, RngSeed(40 + trial, 100 * j + i), **kw)
                sig = dtm_signature(cloud, 1.0).values
                ests.append(kde_estimate(sig, BIWEIGHT, bandwidth_select(sig)))
        assign = cut_dendrogram(average_linkage(pairwise_l1(ests)), 3)
        good += len(set(zip(assign, truth))) == 3
    dt = time.perf_counter() - t0
    report(4, good >= 9 and dt <= 60, f"exact 3-way partition in {good}/10 trials (>=9), {dt:.1f}s")


@pytest.mark.slow
def test_5_chromatin_classification(report):
    t0 = time.perf_counter()
    n = 10000
    ests, labels = [], []
    for c in (25, 10):
        params = ChromatinParams(loop_density_c=c, n_points=n, genome_length_mb=249 * n / 49800)
        for i in range(20):
            fiber = simulate_chromatin(params, RngSeed(2024, 1000 * c + i))
            sig = dtm_signature(fiber.noisy, 10 / n).values
            ests.append(kde_estimate(sig, BIWEIGHT, bandwidth_select(sig)))
            labels.append(f"c{c}")
    data = LabeledDensities(ests, labels)
    rate = holdout_experiment(data, 0.1, 3, 200, seed=5)
    dt = time.perf_counter() - t0
    report(5, rate <= 0.05 and dt <= 300, f"misclassification rate c=25 vs c=10 (k=3, 10% train) = {rate:.4f} (<=0.05), {dt:.0f}s")


def test_6_invariant_suite(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    failures = []

    # DTM monotone in m, rigid motions, scaling, k=1 self-signature
    for _ in range(20):
        n, dim = int(rng.integers(5, 300)), int(rng.integers(1, 4))
        pts = rng.standard_normal((n, dim))
        cloud = PointCloud(pts)
        ms = np.sort(rng.uniform(1 / n, 1, 6))
        sigs = [dtm_signature(cloud, m).values for m in ms]
        if any(np.any(a > b + 1e-12) for a, b in zip(sigs, sigs[1:])):
            failures.append("monotone in m")
        q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        moved = PointCloud(pts @ q.T + rng.uniform(-50, 50, dim))
        m = float(ms[2])
        base = dtm_signature(cloud, m).values
        if not np.allclose(dtm_signature(moved, m).values, base, rtol=1e-9, atol=1e-9):
            failures.append("rigid motion")
        s = rng.uniform(0.1, 10)
        if not np.allclose(dtm_signature(PointCloud(s * pts), m).values, s * s * base, rtol=1e-9, atol=0):
            failures.append("scaling")
        if np.any(dtm_signature(cloud, 1 / n).values != 0):
            failures.append("k=1 self-signature")

    # KDE normalisation of DTM signatures
    for s in range(10):
        sig = dtm_signature(sample_space(AnalyticSpace.UNIT_SQUARE_UNIFORM, 1500, RngSeed(60, s)), 0.05).values
        if abs(kde_estimate(sig, BIWEIGHT, bandwidth_select(sig)).integral() - 1) > 1e-3:
            failures.append("KDE normalisation")

    # UPGMA monotone heights
    for _ in range(20):
        pts = rng.standard_normal((int(rng.integers(2, 40)), 3))
        d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
        h = [mg.height for mg in average_linkage(DistanceMatrix(d, tuple(map(str, range(len(d)))))).merges]
        if any(a > b + 1e-12 for a, b in zip(h, h[1:])):
            failures.append("UPGMA monotone")

    # sampler KS checks at alpha = 0.001
    cdfs = {
        AnalyticSpace.UNIT_INTERVAL_UNIFORM: lambda p: stats.kstest(p[:, 0], "uniform").pvalue,
        AnalyticSpace.UNIT_INTERVAL_LINEAR: lambda p: stats.kstest(p[:, 0], lambda t: np.clip(t, 0, 1) ** 2).pvalue,
        AnalyticSpace.UNIT_SQUARE_UNIFORM: lambda p: min(stats.kstest(p[:, j], "uniform").pvalue for j in (0, 1)),
        DISK: lambda p: stats.kstest(np.hypot(*p.T), lambda r: 2 * np.clip(r, 0, 1) ** 2 - np.clip(r, 0, 1) ** 4).pvalue,
    }
    for space, pval in cdfs.items():
        if pval(sample_space(space, 100_000, RngSeed(61)).points) <= 0.001:
            failures.append(f"KS {space.value}")

    # bit-exact reproducibility
    a = simulate_chromatin(ChromatinParams(loop_density_c=10, n_points=2000, genome_length_mb=10), RngSeed(7, 3))
    b = simulate_chromatin(ChromatinParams(loop_density_c=10, n_points=2000, genome_length_mb=10), RngSeed(7, 3))
    if a.noisy.points.tobytes() != b.noisy.points.tobytes():
        failures.append("seed reproducibility")
    for space in AnalyticSpace:
        if sample_space(space, 100, RngSeed(8, 1)).points.tobytes() != sample_space(space, 100, RngSeed(8, 1)).points.tobytes():
            failures.append("seed reproducibility")

    dt = time.perf_counter() - t0
    ok = not failures and dt <= 120
    report(6, ok, f"invariant failures: {sorted(set(failures)) or 'none'}, {dt:.1f}s")


def test_7_oracle_cross_checks(report):
    errs = {}
    for space in (AnalyticSpace.UNIT_INTERVAL_UNIFORM, AnalyticSpace.UNIT_SQUARE_UNIFORM, DISK):
        lo, hi = density_support(space, 1)
        # substitution y = lo + s^2 removes the inverse square-root singularity at lo
        f = lambda s, sp=space, lo=lo: 2 * s * float(analytic_density(sp, lo + s * s, 1))
        total = integrate.quad(f, 0, math.sqrt(hi - lo), epsabs=1e-13, epsrel=1e-13, limit=200, points=[math.sqrt(5 / 12 - lo)] if space is AnalyticSpace.UNIT_SQUARE_UNIFORM else None)[0]
        errs[space.value] = abs(total - 1)
    rng = np.random.default_rng(7)
    quad_err = 0.0
    for _ in range(20):
        pts = rng.standard_normal((int(rng.integers(2, 400)), int(rng.integers(1, 4)))) * rng.uniform(0.1, 5)
        cloud = PointCloud(pts)
        qd = quadratic_dtm_from_cloud(cloud)
        sig = dtm_signature(cloud, 1.0).values
        quad_err = max(quad_err, float(np.max(np.abs(qd(pts) - sig) / np.maximum(1, np.abs(sig)))))
    l2_err = abs(kernel_l2(BIWEIGHT) - 5 / 7)
    ok = max(errs.values()) <= 1e-6 and quad_err <= 1e-9 and l2_err <= 1e-10
    report(7, ok, f"density integral errors {max(errs.values()):.1e} (<=1e-6), quadratic form {quad_err:.1e} (<=1e-9), "
                  f"int K^2 error {l2_err:.1e} (<=1e-10)")
