"""Pairwise L1 matrices, average-linkage clustering and k-NN classification."""
from __future__ import annotations

import csv
import hashlib
import io
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from ._io import atomic_write_json, atomic_write_text, fmt
from .errors import InputError, InsufficientInput, InsufficientPoints, InvalidK, ParseError
from .kde import DensityEstimate, l1_distance
from .synth import RngSeed, as_seed


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    entries: np.ndarray
    labels: tuple

    def __post_init__(self):
        d = np.array(self.entries, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise InputError(f"distance matrix must be square, got {d.shape}")
        if len(self.labels) != d.shape[0]:
            raise InputError(f"{len(self.labels)} labels for a {d.shape[0]}x{d.shape[0]} matrix")
        if not np.allclose(d, d.T, rtol=0, atol=1e-12):
            raise InputError("distance matrix is not symmetric")
        if np.any(np.diag(d) != 0) or np.any(d < 0):
            raise InputError("distance matrix needs a zero diagonal and non-negative entries")
        d.setflags(write=False)
        object.__setattr__(self, "entries", d)
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))

    @property
    def size(self):
        return self.entries.shape[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["", *self.labels])
        for lab, row in zip(self.labels, self.entries):
            w.writerow([lab, *(fmt(v) for v in row)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        rows = list(csv.reader(io.StringIO(text)))
        rows = [r for r in rows if r]
        try:
            labels = rows[0][1:]
            entries = [[float(v) for v in r[1:]] for r in rows[1:]]
        except (IndexError, ValueError):
            raise ParseError("malformed distance matrix CSV") from None
        return cls(np.array(entries), tuple(labels))


def pairwise_l1(estimates: Sequence[DensityEstimate], labels=None) -> DistanceMatrix:
    """L1 distances between all pairs; each unordered pair is computed once."""
    n = len(estimates)
    if n < 2:
        raise InsufficientInput("need at least two density estimates")
    if labels is None:
        labels = [e.source_id or str(i) for i, e in enumerate(estimates)]
    if len(labels) != n:
        raise InputError(f"{len(labels)} labels for {n} estimates")
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = l1_distance(estimates[i], estimates[j])
    return DistanceMatrix(d, tuple(labels))


class Merge(NamedTuple):
    a: int
    b: int
    height: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    """Agglomeration history.

    Leaves are clusters ``0..N-1``; the cluster formed by merge ``t`` gets
    id ``N + t`` (the scipy linkage convention).
    """

    merges: tuple
    labels: tuple

    @property
    def n_leaves(self):
        return len(self.labels)

    def to_newick(self) -> str:
        n = self.n_leaves
        heights = [0.0] * n + [mg.height for mg in self.merges]

        def quote(label):
            if any(c in label for c in " ,;:()[]'"):
                return "'" + label.replace("'", "''") + "'"
            return label

        def render(node, parent_height):
            length = fmt(parent_height - heights[node])
            if node < n:
                return f"{quote(self.labels[node])}:{length}"
            mg = self.merges[node - n]
            return f"({render(mg.a, mg.height)},{render(mg.b, mg.height)}):{length}"

        if not self.merges:
            return f"{quote(self.labels[0])};"
        mg = self.merges[-1]
        return f"({render(mg.a, mg.height)},{render(mg.b, mg.height)});"

    def to_dict(self):
        return {
            "labels": list(self.labels),
            "merges": [{"a": m.a, "b": m.b, "height": m.height, "size": m.size} for m in self.merges],
        }


def average_linkage(d: DistanceMatrix) -> Dendrogram:
    """UPGMA clustering.

    Each step merges the pair of active clusters with the smallest average
    distance; exact ties go to the lexicographically smallest ``(i, j)``.
    """
    n = d.size
    total = 2 * n - 1
    dist = np.full((total, total), np.inf)
    dist[:n, :n] = d.entries
    np.fill_diagonal(dist, np.inf)
    size = np.zeros(total, dtype=int)
    size[:n] = 1
    active = np.zeros(total, dtype=bool)
    active[:n] = True
    merges = []
    for t in range(n - 1):
        idx = np.flatnonzero(active)
        sub = dist[np.ix_(idx, idx)]
        best = sub.min()
        ii, jj = np.nonzero(sub == best)
        keep = ii < jj
        k = np.lexsort((jj[keep], ii[keep]))[0]
        a, b = int(idx[ii[keep][k]]), int(idx[jj[keep][k]])
        new = n + t
        size[new] = size[a] + size[b]
        row = (size[a] * dist[a] + size[b] * dist[b]) / size[new]
        active[[a, b]] = False
        row[~active] = np.inf
        row[new] = np.inf
        dist[new, :] = row
        dist[:, new] = row
        active[new] = True
        merges.append(Merge(a, b, float(best), int(size[new])))
    return Dendrogram(tuple(merges), d.labels)


def cut_dendrogram(dend: Dendrogram, k: int) -> np.ndarray:
    """Flat clustering into ``k`` groups by undoing the last ``k - 1`` merges.

    Groups are numbered by their smallest leaf index.
    """
    n = dend.n_leaves
    if not 1 <= k <= n:
        raise InvalidK(f"k must be between 1 and {n}, got {k}")
    parent = list(range(2 * n - 1))
    for t, mg in enumerate(dend.merges[: n - k]):
        parent[mg.a] = parent[mg.b] = n + t

    def root(x):
        while parent[x] != x:
            x = parent[x]
        return x

    roots = [root(i) for i in range(n)]
    ids = {}
    for r in roots:
        ids.setdefault(r, len(ids))
    return np.array([ids[r] for r in roots])


@dataclass(frozen=True)
class LabeledDensities:
    estimates: tuple
    labels: tuple

    def __post_init__(self):
        object.__setattr__(self, "estimates", tuple(self.estimates))
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        if len(self.estimates) != len(self.labels):
            raise InputError(f"{len(self.labels)} labels for {len(self.estimates)} estimates")

    def __len__(self):
        return len(self.labels)


def vote(labels, distances, k):
    """Majority label among the ``k`` closest; see :func:`knn_classify`."""
    distances = np.asarray(distances, dtype=np.float64)
    if k > len(distances):
        raise InsufficientPoints(f"k={k} exceeds the {len(distances)} training items")
    if k < 1:
        raise InvalidK(f"k must be positive, got {k}")
    nearest = np.argsort(distances, kind="stable")[:k]
    counts = Counter()
    sums = Counter()
    for i in nearest:
        counts[labels[i]] += 1
        sums[labels[i]] += distances[i]
    return min(counts, key=lambda lab: (-counts[lab], sums[lab], lab))


def knn_classify(train: LabeledDensities, query: DensityEstimate, k: int) -> str:
    """k-nearest-neighbour label of ``query`` under the L1 distance.

    Ties in distance keep training order; ties in the vote go to the label
    with the smaller summed distance, then the lexicographically smaller label.
    """
    if k > len(train):
        raise InsufficientPoints(f"k={k} exceeds the {len(train)} training items")
    dists = [l1_distance(e, query) for e in train.estimates]
    return vote(train.labels, dists, k)


def _fingerprint(est: DensityEstimate) -> str:
    h = hashlib.sha256()
    for arr in (est.grid, est.values, est.sample):
        if arr is not None:
            h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()


def holdout_from_matrix(dist, labels, train_fraction, k, reps, seed, order=None) -> float:
    """Stratified hold-out k-NN misclassification rate from a distance matrix.

    Each repetition draws ``ceil(train_fraction * class size)`` training
    items per class (classes in sorted label order, items in ``order``),
    classifies every other item, and counts errors.  Repetition ``r`` uses
    the random stream ``(seed, r)``.
    """
    dist = np.asarray(dist, dtype=np.float64)
    labels = [str(x) for x in labels]
    if not 0 < train_fraction < 1:
        raise InputError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    if reps < 1:
        raise InputError("reps must be positive")
    seed = as_seed(seed)
    order = list(range(len(labels))) if order is None else list(order)
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise InsufficientInput("need at least two classes")
    members = {c: [i for i in order if labels[i] == c] for c in classes}
    n_train = {c: math.ceil(train_fraction * len(members[c])) for c in classes}
    n_test = sum(len(members[c]) - n_train[c] for c in classes)
    if n_test == 0:
        raise InsufficientInput("no items left to classify after drawing the training set")
    if k > sum(n_train.values()):
        raise InsufficientPoints(f"k={k} exceeds the training set size {sum(n_train.values())}")
    errors = 0
    for r in range(reps):
        rng = RngSeed(seed.seed, seed.stream + r).generator()
        train = []
        for c in classes:
            pick = rng.choice(len(members[c]), size=n_train[c], replace=False)
            train.extend(members[c][j] for j in sorted(pick))
        train_set = set(train)
        train_labels = [labels[i] for i in train]
        for i in order:
            if i in train_set:
                continue
            if vote(train_labels, dist[i, train], k) != labels[i]:
                errors += 1
    return errors / (reps * n_test)


def holdout_experiment(data: LabeledDensities, train_fraction, k, reps, seed, matrix=None) -> float:
    """Average misclassification rate of repeated stratified hold-out k-NN.

    Items are put in a canonical order (label, then content fingerprint)
    before sampling, so the rate does not depend on input order.
    """
    if matrix is None:
        matrix = pairwise_l1(data.estimates, data.labels)
    keys = [(lab, _fingerprint(e), i) for i, (lab, e) in enumerate(zip(data.labels, data.estimates))]
    order = [i for *_, i in sorted(keys)]
    return holdout_from_matrix(matrix.entries, data.labels, train_fraction, k, reps, seed, order=order)


def save_matrix(d: DistanceMatrix, path):
    atomic_write_text(path, d.to_csv())


def load_matrix(path) -> DistanceMatrix:
    return DistanceMatrix.from_csv(Path(path).read_text())


def save_dendrogram(dend: Dendrogram, newick_path, json_path, extra=None):
    atomic_write_text(newick_path, dend.to_newick() + "\n")
    atomic_write_json(json_path, dend.to_dict() | (extra or {}))
