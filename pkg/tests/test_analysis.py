import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import squareform

from dtmsig.analysis import (
    DistanceMatrix,
    LabeledDensities,
    average_linkage,
    cut_dendrogram,
    holdout_experiment,
    holdout_from_matrix,
    knn_classify,
    load_matrix,
    pairwise_l1,
    save_dendrogram,
    save_matrix,
    vote,
)
from dtmsig.errors import InputError, InsufficientInput, InsufficientPoints, InvalidK
from dtmsig.kde import BIWEIGHT, kde_estimate, l1_distance


def est(center, n=80, seed=0, h=0.3):
    rng = np.random.default_rng(seed)
    return kde_estimate(rng.normal(center, 1.0, n), BIWEIGHT, h, source_id=f"{center}-{seed}")


def random_matrix(rng, n):
    pts = rng.standard_normal((n, 3))
    d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    return DistanceMatrix(d, tuple(str(i) for i in range(n)))


matrices = st.integers(2, 25).flatmap(
    lambda n: st.tuples(st.just(n), st.integers(0, 2**31))
).map(lambda t: random_matrix(np.random.default_rng(t[1]), t[0]))


# pairwise distances


def test_pairwise_identical():
    a = est(0)
    d = pairwise_l1([a, a])
    assert d.entries.tolist() == [[0.0, 0.0], [0.0, 0.0]]


def test_pairwise_disjoint():
    a, b = est(0), est(40)
    d = pairwise_l1([a, a, b], labels=["a", "a2", "b"])
    assert d.entries[0, 1] == 0
    assert d.entries[0, 2] == pytest.approx(2, abs=1e-3)
    assert d.entries[1, 2] == pytest.approx(2, abs=1e-3)
    assert d.labels == ("a", "a2", "b")


def test_pairwise_matches_l1_and_counts(monkeypatch):
    import dtmsig.analysis as an

    calls = []
    real = an.l1_distance
    monkeypatch.setattr(an, "l1_distance", lambda a, b: calls.append(1) or real(a, b))
    ests = [est(c, seed=c) for c in range(6)]
    d = pairwise_l1(ests)
    assert len(calls) == 15
    for i, j in itertools.combinations(range(6), 2):
        assert d.entries[i, j] == d.entries[j, i] == l1_distance(ests[i], ests[j])


def test_pairwise_errors():
    with pytest.raises(InsufficientInput):
        pairwise_l1([est(0)])
    with pytest.raises(InputError):
        pairwise_l1([est(0), est(1)], labels=["x"])


def test_distance_matrix_validation():
    with pytest.raises(InputError):
        DistanceMatrix(np.array([[0, 1], [2, 0.0]]), ("a", "b"))
    with pytest.raises(InputError):
        DistanceMatrix(np.array([[1, 1], [1, 0.0]]), ("a", "b"))
    with pytest.raises(InputError):
        DistanceMatrix(np.zeros((2, 3)), ("a", "b"))


def test_matrix_roundtrip(tmp_path):
    d = random_matrix(np.random.default_rng(0), 5)
    save_matrix(d, tmp_path / "m.csv")
    back = load_matrix(tmp_path / "m.csv")
    np.testing.assert_array_equal(back.entries, d.entries)
    assert back.labels == d.labels


# linkage


def test_upgma_example():
    d = DistanceMatrix(np.array([[0, 1, 5], [1, 0, 5], [5, 5, 0.0]]), ("a", "b", "c"))
    dend = average_linkage(d)
    assert [(m.a, m.b, m.height, m.size) for m in dend.merges] == [(0, 1, 1.0, 2), (2, 3, 5.0, 3)]
    assert cut_dendrogram(dend, 2).tolist() == [0, 0, 1]
    assert cut_dendrogram(dend, 1).tolist() == [0, 0, 0]
    assert cut_dendrogram(dend, 3).tolist() == [0, 1, 2]
    assert dend.to_newick() == "(c:5.0,(a:1.0,b:1.0):4.0);"


def test_upgma_two_leaves():
    dend = average_linkage(DistanceMatrix(np.array([[0, 2.5], [2.5, 0]]), ("x", "y")))
    assert len(dend.merges) == 1 and dend.merges[0].height == 2.5


def test_upgma_all_ties():
    n = 5
    d = np.ones((n, n)) - np.eye(n)
    dend = average_linkage(DistanceMatrix(d, tuple("abcde")))
    assert [m.height for m in dend.merges] == [1.0] * 4
    assert [(m.a, m.b) for m in dend.merges] == [(0, 1), (2, 3), (4, 5), (6, 7)]
    assert dend.to_dict() == average_linkage(DistanceMatrix(d, tuple("abcde"))).to_dict()


@given(matrices)
def test_upgma_matches_scipy(d):
    dend = average_linkage(d)
    ref = linkage(squareform(d.entries, checks=False), method="average")
    assert len(dend.merges) == d.size - 1
    np.testing.assert_allclose([m.height for m in dend.merges], ref[:, 2], rtol=1e-12)
    np.testing.assert_array_equal([m.size for m in dend.merges], ref[:, 3])
    for k in range(1, d.size + 1):
        ours = cut_dendrogram(dend, k)
        theirs = fcluster(ref, k, criterion="maxclust")
        # same partition up to relabelling
        assert len(set(zip(ours, theirs))) == len(set(ours)) == len(set(theirs))


@given(matrices)
def test_heights_monotone(d):
    h = [m.height for m in average_linkage(d).merges]
    assert all(a <= b + 1e-12 for a, b in zip(h, h[1:]))


@given(matrices, st.randoms(use_true_random=False))
def test_partition_permutation_equivariant(d, rnd):
    perm = list(range(d.size))
    rnd.shuffle(perm)
    permuted = DistanceMatrix(d.entries[np.ix_(perm, perm)], tuple(d.labels[p] for p in perm))
    for k in range(1, d.size + 1):
        a = cut_dendrogram(average_linkage(d), k)
        b = cut_dendrogram(average_linkage(permuted), k)
        back = np.empty_like(b)
        back[perm] = b
        assert len(set(zip(a, back))) == len(set(a))


def test_cut_errors():
    dend = average_linkage(random_matrix(np.random.default_rng(1), 4))
    for k in (0, 5):
        with pytest.raises(InvalidK):
            cut_dendrogram(dend, k)


def test_newick_quoting_and_json(tmp_path):
    d = DistanceMatrix(np.array([[0, 2.0], [2.0, 0]]), ("a b", "c's"))
    dend = average_linkage(d)
    assert dend.to_newick() == "('a b':2.0,'c''s':2.0);"
    save_dendrogram(dend, tmp_path / "t.nwk", tmp_path / "t.json", {"cut": None})
    assert (tmp_path / "t.nwk").read_text() == "('a b':2.0,'c''s':2.0);\n"
    assert '"height": 2.0' in (tmp_path / "t.json").read_text()


# classification


def test_vote_examples():
    assert vote(["A", "A", "B"], [0.1, 0.2, 0.9], 3) == "A"
    assert vote(["A", "A", "B"], [0.3, 0.2, 0.1], 1) == "B"
    assert vote(["A", "B", "B", "A"], [0.1, 0.2, 0.3, 0.5], 4) == "B"
    # equal votes and equal sums fall back to the label order
    assert vote(["B", "A"], [0.2, 0.2], 2) == "A"


def test_vote_errors():
    with pytest.raises(InsufficientPoints):
        vote(["A"], [0.1], 2)
    with pytest.raises(InvalidK):
        vote(["A"], [0.1], 0)


def brute_knn(train, query, k):
    dists = [l1_distance(e, query) for e in train.estimates]
    ranked = sorted(range(len(dists)), key=lambda i: (dists[i], i))[:k]
    tally = {}
    for i in ranked:
        c, s = tally.get(train.labels[i], (0, 0.0))
        tally[train.labels[i]] = (c + 1, s + dists[i])
    return sorted(tally, key=lambda lab: (-tally[lab][0], tally[lab][1], lab))[0]


def test_knn_matches_brute_force():
    rng = np.random.default_rng(7)
    for trial in range(15):
        n = int(rng.integers(3, 30))
        centers = rng.uniform(-2, 2, n)
        train = LabeledDensities([est(c, 40, seed=trial * 100 + i) for i, c in enumerate(centers)],
                                 rng.choice(["A", "B", "C"], n))
        q = est(rng.uniform(-2, 2), 40, seed=999 + trial)
        for k in (1, 2, 3, 5):
            if k <= n:
                assert knn_classify(train, q, k) == brute_knn(train, q, k)
    with pytest.raises(InsufficientPoints):
        knn_classify(LabeledDensities([est(0)], ["A"]), est(1), 2)


def two_class_data(sep, per_class=10):
    ests = [est(0, 50, seed=i) for i in range(per_class)] + [est(sep, 50, seed=100 + i) for i in range(per_class)]
    return LabeledDensities(ests, ["a"] * per_class + ["b"] * per_class)


def test_holdout_separated():
    data = two_class_data(30, 20)
    for k in (1, 3):
        assert holdout_experiment(data, 0.1, k, 50, seed=1) == 0.0


def test_holdout_permutation_null():
    rng = np.random.default_rng(3)
    n = 40
    pts = rng.standard_normal((n, 2))
    d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    labels = ["a"] * 20 + ["b"] * 20
    rate = holdout_from_matrix(d, labels, 0.25, 1, 1000, seed=5)
    assert abs(rate - 0.5) <= 0.1


def test_holdout_leave_one_out():
    rng = np.random.default_rng(2)
    n = 12
    pts = rng.standard_normal((n, 2))
    pts[6:] += 1.0
    d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    labels = ["a"] * 6 + ["b"] * 6
    # 5 of 6 per class in training: each rep leaves one item per class out
    frac = 5 / 6 - 1e-9
    got = holdout_from_matrix(d, labels, frac, 3, 400, seed=0)
    # direct leave-one-per-class-out average over all 36 held-out pairs
    errors = 0
    total = 0
    for i in range(6):
        for j in range(6, 12):
            train = [t for t in range(n) if t not in (i, j)]
            for q in (i, j):
                errors += vote([labels[t] for t in train], d[q, train], 3) != labels[q]
                total += 1
    assert got == pytest.approx(errors / total, abs=0.05)


def test_holdout_permutation_invariant():
    data = two_class_data(0.7, 8)
    perm = np.random.default_rng(0).permutation(len(data))
    shuffled = LabeledDensities([data.estimates[i] for i in perm], [data.labels[i] for i in perm])
    a = holdout_experiment(data, 0.25, 3, 30, seed=11)
    b = holdout_experiment(shuffled, 0.25, 3, 30, seed=11)
    assert a == b


def test_holdout_deterministic_and_errors():
    data = two_class_data(0.5, 6)
    assert holdout_experiment(data, 0.3, 1, 20, 4) == holdout_experiment(data, 0.3, 1, 20, 4)
    with pytest.raises(InputError):
        holdout_experiment(data, 1.0, 1, 5, 0)
    with pytest.raises(InsufficientInput):
        holdout_experiment(LabeledDensities(data.estimates[:3], ["a"] * 3), 0.3, 1, 5, 0)
    with pytest.raises(InsufficientPoints):
        holdout_experiment(data, 0.1, 5, 5, 0)
