"""Independent brute-force reference implementations used by the tests.

Everything here is deliberately written from the definitions with plain
loops and dicts (numpy only for array plumbing in the QP solver), and never
calls into the package's own scoring or solver code.
"""
from __future__ import annotations

import math
from collections import Counter, defaultdict
from itertools import combinations

import numpy as np


# ---------------------------------------------------------------------------
# Entropy family


def entropy_bits(labels) -> float:
    labels = list(labels)
    n = len(labels)
    h = 0.0
    for count in Counter(labels).values():
        p = count / n
        h -= p * math.log2(p)
    return h


def info_gain_brute(feature_bins, classes) -> float:
    n = len(classes)
    h = entropy_bits(classes)
    by_bin = defaultdict(list)
    for b, c in zip(feature_bins, classes):
        by_bin[b].append(c)
    cond = 0.0
    for group in by_bin.values():
        cond += len(group) / n * entropy_bits(group)
    return h - cond


def su_brute(xs, ys) -> float:
    hx, hy = entropy_bits(xs), entropy_bits(ys)
    if hx == 0.0 and hy == 0.0:
        return 0.0
    hxy = entropy_bits(list(zip(xs, ys)))
    return 2.0 * (hx + hy - hxy) / (hx + hy)


def cfs_merit_brute(columns, classes, subset) -> float:
    subset = sorted(subset)
    k = len(subset)
    r_cf = sum(su_brute(columns[f], classes) for f in subset) / k
    if k == 1:
        r_ff = 0.0
    else:
        pairs = list(combinations(subset, 2))
        r_ff = sum(su_brute(columns[a], columns[b]) for a, b in pairs) / len(pairs)
    return k * r_cf / math.sqrt(k + k * (k - 1) * r_ff)


def inconsistency_brute(columns, classes, subset) -> float:
    subset = sorted(subset)
    groups = defaultdict(list)
    for i, c in enumerate(classes):
        groups[tuple(columns[f][i] for f in subset)].append(c)
    bad = 0
    for members in groups.values():
        bad += len(members) - max(Counter(members).values())
    return bad / len(classes)


# ---------------------------------------------------------------------------
# Relief weights


def relieff_brute(feats, kinds, classes, k, m=None):
    """Hit/miss weight accumulation exactly from the update rule.

    feats: list of rows (lists); kinds: 'numeric'/'nominal' per feature;
    classes: labels per row. m=None visits all rows in order.
    """
    n = len(feats)
    n_feat = len(kinds)
    if m is None:
        m = n
    spans = []
    for f in range(n_feat):
        vals = [row[f] for row in feats]
        spans.append(max(vals) - min(vals))
    mins = [min(row[f] for row in feats) for f in range(n_feat)]

    def norm(i, f):
        if kinds[f] == "nominal":
            return feats[i][f]
        return (feats[i][f] - mins[f]) / spans[f] if spans[f] > 0 else 0.0

    def diff(f, i, j):
        if kinds[f] == "nominal":
            return 0.0 if feats[i][f] == feats[j][f] else 1.0
        return abs(norm(i, f) - norm(j, f))

    def dist(i, j):
        return sum(diff(f, i, j) for f in range(n_feat))

    prior = Counter(classes)
    labels = sorted(prior)
    w = [0.0] * n_feat
    for r in range(m):
        for cls in labels:
            group = [i for i in range(n) if classes[i] == cls and i != r]
            if classes[r] != cls:
                group = [i for i in range(n) if classes[i] == cls]
            if not group:
                continue
            group.sort(key=lambda i: (dist(r, i), tuple(norm(i, f) for f in range(n_feat))))
            k_use = min(k, len(group))
            chosen = group[:k_use]
            for f in range(n_feat):
                total = sum(diff(f, r, i) for i in chosen)
                if cls == classes[r]:
                    w[f] -= total / (m * k_use)
                else:
                    p = prior[cls] / n
                    p_self = prior[classes[r]] / n
                    w[f] += (p / (1.0 - p_self)) * total / (m * k_use)
    return w


# ---------------------------------------------------------------------------
# Entropy-split discretization over every midpoint (not just boundaries)


def mdl_cuts_brute(values, classes):
    pairs = sorted(zip(values, classes), key=lambda t: t[0])
    v = [p[0] for p in pairs]
    y = [p[1] for p in pairs]

    cuts = []

    def split(lo, hi):
        n = hi - lo
        cands = [p for p in range(lo + 1, hi) if v[p] != v[p - 1]]
        if not cands:
            return
        h_s = entropy_bits(y[lo:hi])
        best_p, best_we = None, None
        for p in cands:
            we = ((p - lo) * entropy_bits(y[lo:p]) + (hi - p) * entropy_bits(y[p:hi])) / n
            if best_we is None or we < best_we:
                best_we, best_p = we, p
        gain = h_s - best_we
        k = len(set(y[lo:hi]))
        k1 = len(set(y[lo:best_p]))
        k2 = len(set(y[best_p:hi]))
        delta = math.log2(3**k - 2) - (
            k * h_s - k1 * entropy_bits(y[lo:best_p]) - k2 * entropy_bits(y[best_p:hi])
        )
        if gain <= (math.log2(n - 1) + delta) / n:
            return
        cuts.append((v[best_p - 1] + v[best_p]) / 2.0)
        split(lo, best_p)
        split(best_p, hi)

    split(0, len(v))
    return sorted(cuts)


# ---------------------------------------------------------------------------
# Subset-search references


def exhaustive_best(score_fn, n_features):
    """Max over all non-empty subsets; ties to smaller, then lexicographic."""
    best = None
    for mask in range(1, 1 << n_features):
        sub = frozenset(f for f in range(n_features) if mask >> f & 1)
        val = score_fn(sub)
        key = (-val, len(sub), tuple(sorted(sub)))
        if best is None or key < best[0]:
            best = (key, sub, val)
    return best[1], best[2]


def forward_selection(score_fn, n_features):
    """Plain greedy: add the best single feature while it improves."""
    current = frozenset()
    value = score_fn(current)
    while True:
        best_child, best_val = None, None
        for f in range(n_features):
            if f in current:
                continue
            child = current | {f}
            v = score_fn(child)
            if best_child is None or v > best_val:
                best_child, best_val = child, v
        if best_child is None or best_val <= value:
            return current, value
        current, value = best_child, best_val


# ---------------------------------------------------------------------------
# Dense projected-gradient QP solver for the SVM dual


def _project_box_hyperplane(v, y, C):
    """Exact projection of v onto {0 <= a <= C, y.a = 0}.

    g(lam) = y . clip(v - lam*y, 0, C) is piecewise linear and
    non-increasing, so the root lies between two kinks and a single linear
    interpolation inside that segment is exact.
    """
    bps = np.unique(np.concatenate([v[y > 0] - C, v[y > 0], -v[y < 0], C - v[y < 0]]))
    gs = np.clip(v[None, :] - bps[:, None] * y[None, :], 0.0, C) @ y
    if gs[0] <= 0.0:
        lam = bps[0]
    elif gs[-1] >= 0.0:
        lam = bps[-1]
    else:
        k = int(np.argmax(gs <= 0.0))
        if gs[k] == 0.0 or gs[k - 1] == gs[k]:
            lam = bps[k]
        else:
            lam = bps[k - 1] + gs[k - 1] * (bps[k] - bps[k - 1]) / (gs[k - 1] - gs[k])
    return np.clip(v - lam * y, 0.0, C)


def qp_reference(K, y, C, max_iter=200_000):
    """Maximize sum(a) - 1/2 a' (yy' o K) a over the box and hyperplane.

    Projected gradient ascent with the exact projection; returns (alphas,
    objective).
    """
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    Q = np.outer(y, y) * K
    L = max(float(np.linalg.eigvalsh((Q + Q.T) / 2.0).max()), 1e-9)
    a = np.zeros(n)

    def objective(x):
        return float(x.sum() - 0.5 * x @ Q @ x)

    prev = objective(a)
    stagnant = 0
    for _ in range(max_iter):
        grad = 1.0 - Q @ a
        a = _project_box_hyperplane(a + grad / L, y, C)
        cur = objective(a)
        if abs(cur - prev) < 1e-14 * max(1.0, abs(cur)):
            stagnant += 1
            if stagnant >= 50:
                break
        else:
            stagnant = 0
        prev = cur
    return a, objective(a)


def qp_bias(K, y, C, a, tol=1e-8):
    """Bias by the same rule the trained models use: mean over unbounded
    support rows, else the midpoint of the feasible interval."""
    g = K @ (a * y)
    b_est = y - g
    unbounded = (a > tol * C) & (a < C * (1 - tol))
    if unbounded.any():
        return float(b_est[unbounded].mean())
    i_up = ((y > 0) & (a < C)) | ((y < 0) & (a > 0))
    i_low = ((y > 0) & (a > 0)) | ((y < 0) & (a < C))
    return float((b_est[i_up].max() + b_est[i_low].min()) / 2.0)
