"""Filter-based feature scoring: correlation merit, consistency, relief weights,
information gain, and the shared entropy machinery underneath them.

Scores treat numeric features through an MDL discretization map where a
method needs categorical views; relief works on the raw values directly.
All entropies are in bits.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .data import Dataset, DiscretizationMap, DataError, NUMERIC

#: sentinel feature index meaning "the class column"
CLASS = -1


def entropy(labels) -> float:
    """Shannon entropy (bits) of a label sequence."""
    labels = list(labels)
    if not labels:
        raise DataError("entropy of an empty sequence is undefined")
    counts = np.asarray(list(Counter(labels).values()), dtype=float)
    p = counts / counts.sum()
    return float(-(p * np.log2(p)).sum())


def _entropy_codes(codes: np.ndarray) -> float:
    counts = np.bincount(codes)
    counts = counts[counts > 0].astype(float)
    p = counts / counts.sum()
    return float(-(p * np.log2(p)).sum())


def _joint_codes(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a * (int(b.max()) + 1 if len(b) else 1) + b


class SuCache:
    """Memoized binned columns and symmetric-uncertainty values.

    One cache serves one (dataset, discretization map) pair, so a subset
    search pays the pairwise SU cost once. Reads and inserts are plain dict
    operations and safe under concurrent evaluation.
    """

    def __init__(self, ds: Dataset, dmap: DiscretizationMap):
        self.ds = ds
        self.dmap = dmap
        self._cols: dict[int, np.ndarray] = {}
        self._h: dict[int, float] = {}
        self._su: dict[tuple[int, int], float] = {}

    def column(self, f: int) -> np.ndarray:
        got = self._cols.get(f)
        if got is None:
            got = (
                self.ds.class_codes()
                if f == CLASS
                else self.dmap.bin_column(self.ds, f)
            )
            self._cols[f] = got
        return got

    def col_entropy(self, f: int) -> float:
        got = self._h.get(f)
        if got is None:
            got = _entropy_codes(self.column(f))
            self._h[f] = got
        return got

    def su(self, f1: int, f2: int) -> float:
        key = (min(f1, f2), max(f1, f2))
        got = self._su.get(key)
        if got is None:
            got = symmetric_uncertainty(self.ds, f1, f2, self.dmap, cache=self)
            self._su[key] = got
        return got


def info_gain(ds: Dataset, feature: int, dmap: DiscretizationMap) -> float:
    """H(class) - H(class | binned feature)."""
    if feature == CLASS:
        raise DataError("info_gain of the class column against itself")
    y = ds.class_codes()
    x = dmap.bin_column(ds, feature)
    h_y = _entropy_codes(y)
    cond = 0.0
    n = len(y)
    for b in np.unique(x):
        sub = y[x == b]
        cond += len(sub) / n * _entropy_codes(sub)
    return h_y - cond


def symmetric_uncertainty(
    ds: Dataset, f1: int, f2: int, dmap: DiscretizationMap, cache: SuCache | None = None
) -> float:
    """SU(X, Y) = 2 [H(X) + H(Y) - H(X, Y)] / [H(X) + H(Y)], in [0, 1].

    Either argument may be CLASS (-1) to mean the class column. Defined as 0
    when both marginal entropies vanish.
    """
    if cache is None:
        cache = SuCache(ds, dmap)
    a, b = cache.column(f1), cache.column(f2)
    h_a, h_b = cache.col_entropy(f1), cache.col_entropy(f2)
    if h_a == 0.0 and h_b == 0.0:
        return 0.0
    h_ab = _entropy_codes(_joint_codes(a, b))
    return 2.0 * (h_a + h_b - h_ab) / (h_a + h_b)


def cfs_merit(
    ds: Dataset, subset, dmap: DiscretizationMap, cache: SuCache | None = None
) -> float:
    """Correlation-based subset merit: k * r_cf / sqrt(k + k(k-1) * r_ff).

    r_cf is the mean feature-class SU over the subset; r_ff the mean
    pairwise SU among subset features.
    """
    subset = sorted(set(subset))
    if not subset:
        raise DataError("cfs_merit of an empty subset")
    if CLASS in subset:
        raise DataError("subset must not contain the class column")
    if cache is None:
        cache = SuCache(ds, dmap)
    k = len(subset)
    r_cf = sum(cache.su(f, CLASS) for f in subset) / k
    if k == 1:
        r_ff = 0.0
    else:
        pair_sum = 0.0
        for i in range(k):
            for j in range(i + 1, k):
                pair_sum += cache.su(subset[i], subset[j])
        r_ff = pair_sum / (k * (k - 1) / 2)
    return k * r_cf / math.sqrt(k + k * (k - 1) * r_ff)


def inconsistency_rate(ds: Dataset, subset, dmap: DiscretizationMap) -> float:
    """Fraction of rows that majority rule mislabels within identical
    projected (binned) feature patterns."""
    subset = sorted(set(subset))
    if not subset:
        raise DataError("inconsistency_rate of an empty subset")
    cols = np.column_stack([dmap.bin_column(ds, f) for f in subset])
    y = ds.class_codes()
    _, inverse = np.unique(cols, axis=0, return_inverse=True)
    bad = 0
    for g in range(inverse.max() + 1):
        sub = y[inverse == g]
        counts = np.bincount(sub)
        bad += len(sub) - counts.max()
    return bad / ds.n_rows


@dataclass(frozen=True)
class FeatureScores:
    """Per-feature scores from a ranking method, plus the induced ordering
    (descending score, ties by ascending feature index)."""

    method: str
    scores: tuple[float, ...]
    ordering: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.ordering) != list(range(len(self.scores))):
            raise DataError("ordering must be a permutation of feature indexes")


def rank_features(method: str, scores) -> FeatureScores:
    scores = tuple(float(s) for s in scores)
    ordering = tuple(sorted(range(len(scores)), key=lambda i: (-scores[i], i)))
    return FeatureScores(method, scores, ordering)


@dataclass(frozen=True)
class SubsetEvaluation:
    """A scored feature subset; value is always larger-is-better (the
    consistency criterion stores the negated inconsistency rate)."""

    method: str
    subset: frozenset
    value: float


def relieff(ds: Dataset, m: int | None = None, k: int = 10, seed: int = 0) -> FeatureScores:
    """Relief-style feature weights from nearest hits and misses.

    For each sampled row, the k nearest same-class rows pull each feature's
    weight down by the mean normalized difference, and the k nearest rows of
    every other class push it up, weighted by that class's prior over the
    complement of the sampled row's class. Distances are Manhattan over
    range-normalized numeric values with 0/1 nominal mismatches. m = None
    (or n_rows) visits every row once, deterministically; smaller m samples
    rows without replacement using the seed. k is clamped per class when a
    class is smaller than k + 1.
    """
    n = ds.n_rows
    if m is None:
        m = n
    if not 1 <= m <= n:
        raise DataError("sample count m must lie in 1..n_rows")
    if k < 1:
        raise DataError("k must be >= 1")
    n_feat = ds.n_features
    feats = ds.feature_matrix()
    numeric = np.array([ds.feature_spec(f).kind == NUMERIC for f in range(n_feat)])
    spans = feats.max(axis=0) - feats.min(axis=0)
    norm = np.zeros((n, n_feat))
    for f in range(n_feat):
        if numeric[f]:
            norm[:, f] = (feats[:, f] - feats[:, f].min()) / spans[f] if spans[f] > 0 else 0.0
        else:
            norm[:, f] = feats[:, f]

    def diffs(rows: np.ndarray, r: int) -> np.ndarray:
        d = np.abs(norm[rows] - norm[r])
        if not numeric.all():
            d[:, ~numeric] = (norm[np.ix_(rows, np.flatnonzero(~numeric))] != norm[r, ~numeric])
        return d

    dist = None  # per-row distance vector, filled in the loop
    y = ds.class_codes()
    n_classes = len(ds.class_labels)
    prior = np.bincount(y, minlength=n_classes) / n
    groups = [np.flatnonzero(y == c) for c in range(n_classes)]
    # value-based tie rank: identical rows share a rank, so neighbor choice
    # among ties never depends on row order
    _, tie_rank = np.unique(norm, axis=0, return_inverse=True)

    if m == n:
        sample = np.arange(n)
    else:
        sample = np.random.default_rng(int(seed)).choice(n, size=m, replace=False)

    w = np.zeros(n_feat)
    for r in sample:
        dist = diffs(np.arange(n), r).sum(axis=1)
        c = y[r]
        for cls in range(n_classes):
            grp = groups[cls]
            if cls == c:
                grp = grp[grp != r]
            if len(grp) == 0:
                continue
            k_use = min(k, len(grp))
            order = np.lexsort((tie_rank[grp], dist[grp]))[:k_use]
            contrib = diffs(grp[order], r).sum(axis=0) / (m * k_use)
            if cls == c:
                w -= contrib
            else:
                w += prior[cls] / (1.0 - prior[c]) * contrib
    return rank_features("relieff", w)


def rank_cutoff(scores: FeatureScores, rule: str, value=None) -> frozenset:
    """Turn a ranking into a feature set.

    rule = "keep_all" keeps everything; "top_k" keeps the first k of the
    ordering; "threshold" keeps features scoring strictly above value.
    """
    n = len(scores.scores)
    if rule == "keep_all":
        return frozenset(range(n))
    if rule == "top_k":
        k = int(value)
        if not 1 <= k <= n:
            raise DataError(f"top_k: k={k} out of range 1..{n}")
        return frozenset(scores.ordering[:k])
    if rule == "threshold":
        t = float(value)
        return frozenset(i for i, s in enumerate(scores.scores) if s > t)
    raise DataError(f"unknown cutoff rule {rule!r}")


def info_gain_scores(ds: Dataset, dmap: DiscretizationMap) -> FeatureScores:
    return rank_features("info_gain", [info_gain(ds, f, dmap) for f in range(ds.n_features)])


def scores_to_csv(scores: FeatureScores, feature_names) -> str:
    """CSV rows: feature name, method, score, rank."""
    lines = ["feature,method,score,rank"]
    rank_of = {f: r for r, f in enumerate(scores.ordering)}
    for f, name in enumerate(feature_names):
        lines.append(f"{name},{scores.method},{scores.scores[f]!r},{rank_of[f]}")
    return "\n".join(lines) + "\n"
