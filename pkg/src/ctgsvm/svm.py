"""Soft-margin SVM with a polynomial kernel, trained by sequential minimal
optimization, plus the one-vs-one wrapper for multiclass problems.

The solver is fully deterministic: Platt-style alternating passes over all
rows and over the non-bound set, second choice by largest error difference,
with ascending-index scans instead of randomized ones. Convergence is
verified against the dual feasibility gap before a model is returned, and
the bias is recomputed from the unbounded support rows.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import DataError, Dataset, Standardizer

DENSE_LIMIT = 4096
MODEL_MAGIC = "ctgsvm-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "polynomial"
    degree: int = 3
    coef0: float = 1.0

    def __post_init__(self):
        if self.kind != "polynomial":
            raise DataError(f"unsupported kernel kind {self.kind!r}")
        if int(self.degree) < 1:
            raise DataError("kernel degree must be >= 1")


@dataclass(frozen=True)
class SvmConfig:
    C: float
    kernel: KernelSpec
    tolerance: float = 1e-3
    epsilon: float = 1e-12
    max_iter: int = 200_000

    def __post_init__(self):
        if self.C <= 0:
            raise DataError("C must be positive")
        if self.tolerance <= 0:
            raise DataError("tolerance must be positive")


def kernel_eval(u, v, spec: KernelSpec) -> float:
    """(u . v + coef0) ** degree for two instances."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise DataError("kernel arguments must have equal length")
    return float((float(np.dot(u, v)) + spec.coef0) ** spec.degree)


def kernel_matrix(U, V, spec: KernelSpec) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    if U.shape[1] != V.shape[1]:
        raise DataError("kernel arguments must have equal width")
    return (U @ V.T + spec.coef0) ** spec.degree


class _KernelSource:
    """Kernel rows for the solver: dense matrix when the problem is small,
    otherwise an on-demand row cache with FIFO eviction."""

    def __init__(self, X: np.ndarray, spec: KernelSpec, gram: np.ndarray | None, cache_rows=512):
        self.X = X
        self.spec = spec
        n = X.shape[0]
        self.dense = None
        if n <= DENSE_LIMIT:
            g = gram if gram is not None else X @ X.T
            self.dense = (g + spec.coef0) ** spec.degree
            self.diag = np.ascontiguousarray(np.diagonal(self.dense))
        else:
            self._cache: dict[int, np.ndarray] = {}
            self._order: list[int] = []
            self._cap = cache_rows
            self.diag = (np.einsum("ij,ij->i", X, X) + spec.coef0) ** spec.degree

    def row(self, i: int) -> np.ndarray:
        if self.dense is not None:
            return self.dense[i]
        got = self._cache.get(i)
        if got is None:
            got = (self.X @ self.X[i] + self.spec.coef0) ** self.spec.degree
            self._cache[i] = got
            self._order.append(i)
            if len(self._order) > self._cap:
                del self._cache[self._order.pop(0)]
        return got

    def full_g(self, coef: np.ndarray) -> np.ndarray:
        """K @ coef without materializing K in cached mode."""
        if self.dense is not None:
            return self.dense @ coef
        n = self.X.shape[0]
        out = np.empty(n)
        for lo in range(0, n, 256):
            hi = min(lo + 256, n)
            out[lo:hi] = ((self.X[lo:hi] @ self.X.T + self.spec.coef0) ** self.spec.degree) @ coef
        return out


@dataclass
class BinarySvm:
    """A trained two-class machine: support rows with their dual weights."""

    support_vectors: np.ndarray
    alphas: np.ndarray
    labels: np.ndarray  # +/-1 per support row
    bias: float
    kernel: KernelSpec
    converged: bool = True
    n_updates: int = 0

    def __post_init__(self):
        if len(self.alphas) == 0:
            raise DataError("invalid model: empty support set")

    def decision_values(self, X) -> np.ndarray:
        k = kernel_matrix(np.asarray(X, dtype=float), self.support_vectors, self.kernel)
        return k @ (self.alphas * self.labels) + self.bias

    def decision_value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.support_vectors.shape[1],):
            raise DataError("instance length does not match support vectors")
        return float(self.decision_values(x.reshape(1, -1))[0])


def decision_value(m: BinarySvm, x) -> float:
    return m.decision_value(x)


def dual_objective(m: BinarySvm) -> float:
    """sum(alpha) - 1/2 * alpha' Q alpha over the stored support rows."""
    k = kernel_matrix(m.support_vectors, m.support_vectors, m.kernel)
    ay = m.alphas * m.labels
    return float(m.alphas.sum() - 0.5 * ay @ k @ ay)


def smo_train(X, y, cfg: SvmConfig, gram: np.ndarray | None = None) -> BinarySvm:
    """Train a binary soft-margin SVM by pairwise dual updates.

    Maximizes sum(a) - 1/2 sum a_i a_j y_i y_j K(x_i, x_j) subject to the
    box 0 <= a <= C and sum a_i y_i = 0. Hitting the update cap returns the
    best-so-far model flagged as non-converged instead of raising.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    if n < 2:
        raise DataError("need at least 2 training rows")
    if y.shape != (n,) or not np.all(np.isin(y, (-1.0, 1.0))):
        raise DataError("labels must be +/-1, one per row")
    if np.all(y == y[0]):
        raise DataError("single-class input")

    C = float(cfg.C)
    tol = float(cfg.tolerance)
    # the per-example test only bounds the feasibility gap by twice its
    # threshold, so run it at tol/2 to land the final gap within tol
    tol2 = tol / 2.0
    eps = float(cfg.epsilon)
    K = _KernelSource(X, cfg.kernel, gram)
    diag = K.diag

    alphas = np.zeros(n)
    b = 0.0
    E = -y.copy()  # decision - label with all alphas at zero
    updates = 0

    def take_step(i1: int, i2: int) -> bool:
        nonlocal b, updates, E
        if i1 == i2:
            return False
        a1o, a2o = alphas[i1], alphas[i2]
        y1, y2 = y[i1], y[i2]
        e1, e2 = E[i1], E[i2]
        s = y1 * y2
        if s < 0:
            L = max(0.0, a2o - a1o)
            H = min(C, C + a2o - a1o)
        else:
            L = max(0.0, a1o + a2o - C)
            H = min(C, a1o + a2o)
        if L >= H:
            return False
        row1 = K.row(i1)
        k11, k12, k22 = diag[i1], row1[i2], diag[i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0.0:
            a2 = a2o + y2 * (e1 - e2) / eta
            a2 = min(max(a2, L), H)
        else:
            # pair objective evaluated at both clip bounds
            f1 = y1 * (e1 - b) - a1o * k11 - s * a2o * k12
            f2 = y2 * (e2 - b) - s * a1o * k12 - a2o * k22
            l1 = a1o + s * (a2o - L)
            h1 = a1o + s * (a2o - H)
            lobj = l1 * f1 + L * f2 + 0.5 * l1 * l1 * k11 + 0.5 * L * L * k22 + s * L * l1 * k12
            hobj = h1 * f1 + H * f2 + 0.5 * h1 * h1 * k11 + 0.5 * H * H * k22 + s * H * h1 * k12
            if lobj < hobj - eps:
                a2 = L
            elif lobj > hobj + eps:
                a2 = H
            else:
                a2 = a2o
        if abs(a2 - a2o) < eps * (a2 + a2o + eps):
            return False
        a1 = a1o + s * (a2o - a2)
        # push any float residue outside the box back into a2, keeping the
        # equality constraint intact
        if a1 < 0.0:
            a2 += s * a1
            a1 = 0.0
        elif a1 > C:
            a2 += s * (a1 - C)
            a1 = C
        # snap cancellation crumbs onto the box walls (threshold relative to
        # the pair's own scale); a stray 1e-19 alpha would otherwise sit on
        # top of the violating-pair ordering forever, blocking progress
        crumb = 1e-12 * max(a1o, a2o, a1, a2)
        if 0.0 < a1 < crumb:
            a2 += s * a1
            a1 = 0.0
        elif 0.0 < C - a1 < crumb:
            a2 += s * (a1 - C)
            a1 = C
        if 0.0 < a2 < crumb:
            a1 += s * a2
            a2 = 0.0
        elif 0.0 < C - a2 < crumb:
            a1 += s * (a2 - C)
            a2 = C
        a1 = min(max(a1, 0.0), C)
        a2 = min(max(a2, 0.0), C)
        d1, d2 = a1 - a1o, a2 - a2o
        b1 = b - e1 - y1 * d1 * k11 - y2 * d2 * k12
        b2 = b - e2 - y1 * d1 * k12 - y2 * d2 * k22
        if 0.0 < a1 < C:
            b_new = b1
        elif 0.0 < a2 < C:
            b_new = b2
        else:
            b_new = (b1 + b2) / 2.0
        row2 = K.row(i2)
        E += y1 * d1 * row1 + y2 * d2 * row2 + (b_new - b)
        alphas[i1], alphas[i2] = a1, a2
        b = b_new
        updates += 1
        if K.dense is not None and updates % 4096 == 0:
            E[:] = K.full_g(alphas * y) + b - y  # shed accumulated drift
        return True

    def examine(i2: int) -> bool:
        a2 = alphas[i2]
        r2 = E[i2] * y[i2]
        if not ((r2 < -tol2 and a2 < C) or (r2 > tol2 and a2 > 0.0)):
            return False
        nb = np.flatnonzero((alphas > 0.0) & (alphas < C))
        if len(nb) > 1:
            i1 = int(nb[np.argmax(np.abs(E[nb] - E[i2]))])
            if take_step(i1, i2):
                return True
        for i1 in nb:
            if take_step(int(i1), i2):
                return True
        for i1 in range(n):
            if take_step(i1, i2):
                return True
        return False

    def platt_cycle() -> int:
        """Alternating full/non-bound passes; returns total steps taken."""
        nonlocal updates
        total = 0
        num_changed = 0
        examine_all = True
        while updates < cfg.max_iter and (num_changed > 0 or examine_all):
            num_changed = 0
            if examine_all:
                targets = range(n)
            else:
                targets = np.flatnonzero((alphas > 0.0) & (alphas < C))
            for i in targets:
                num_changed += examine(int(i))
                if updates >= cfg.max_iter:
                    return total + num_changed
            total += num_changed
            if examine_all:
                examine_all = False
            elif num_changed == 0:
                examine_all = True
        return total

    def run_mvp() -> None:
        """Main loop: most-violating pair with second-order partner choice.

        b cancels out of every comparison, so the selection can read the
        error cache directly: I_up rows want smaller E, I_low rows larger.
        """
        while updates < cfg.max_iter:
            up = ((y > 0) & (alphas < C)) | ((y < 0) & (alphas > 0))
            low = ((y > 0) & (alphas > 0)) | ((y < 0) & (alphas < C))
            i = int(np.argmin(np.where(up, E, np.inf)))
            j_max = int(np.argmax(np.where(low, E, -np.inf)))
            if E[j_max] - E[i] <= tol:
                return
            eta = np.maximum(diag[i] + diag - 2.0 * K.row(i), 1e-12)
            quad = np.where(low & (E > E[i]), (E - E[i]) ** 2 / eta, -np.inf)
            j = int(np.argmax(quad))
            if take_step(i, j) or take_step(i, j_max):
                continue
            if platt_cycle() == 0:
                return  # numerically stuck; the final gap check decides

    def gap_state():
        g = K.full_g(alphas * y)
        b_est = y - g
        i_up = ((y > 0) & (alphas < C)) | ((y < 0) & (alphas > 0))
        i_low = ((y > 0) & (alphas > 0)) | ((y < 0) & (alphas < C))
        m_up = b_est[i_up].max()
        m_low = b_est[i_low].min()
        return g, b_est, m_up, m_low

    run_mvp()
    g, b_est, m_up, m_low = gap_state()
    for _ in range(3):
        # the cheap incremental error cache can drift; resync and re-verify
        if m_up - m_low <= tol or updates >= cfg.max_iter:
            break
        E[:] = g + b - y
        run_mvp()
        g, b_est, m_up, m_low = gap_state()

    converged = (m_up - m_low) <= tol
    unbounded = (alphas > 0.0) & (alphas < C)
    if unbounded.any():
        bias = float(b_est[unbounded].mean())
    else:
        bias = float((m_up + m_low) / 2.0)

    sv = alphas > 0.0
    if not sv.any():
        # degenerate but satisfiable KKT state; keep the largest-alpha row
        sv = np.zeros(n, dtype=bool)
        sv[int(np.argmax(alphas))] = True
    return BinarySvm(
        support_vectors=X[sv].copy(),
        alphas=alphas[sv].copy(),
        labels=y[sv].copy(),
        bias=bias,
        kernel=cfg.kernel,
        converged=converged,
        n_updates=updates,
    )


# ---------------------------------------------------------------------------
# One-vs-one multiclass


@dataclass
class PairProblem:
    ci: int
    cj: int
    X: np.ndarray
    yb: np.ndarray
    gram: np.ndarray


@dataclass
class MulticlassProblem:
    classes: tuple[str, ...]
    class_counts: np.ndarray
    problems: list[PairProblem]
    feature_mask: tuple[int, ...] | None
    standardizer: Standardizer | None


def pairwise_problems(
    train: Dataset,
    feature_mask=None,
    standardizer: Standardizer | None = None,
) -> MulticlassProblem:
    """Precompute the per-pair training matrices and gram matrices once so a
    parameter grid can reuse them across cells."""
    k = len(train.class_labels)
    if k < 2:
        raise DataError("need at least 2 classes")
    codes = train.class_codes()
    counts = np.bincount(codes, minlength=k)
    if (counts == 0).any():
        missing = train.class_labels[int(np.flatnonzero(counts == 0)[0])]
        raise DataError(f"class {missing!r} absent from training data")
    feats = train.feature_matrix()
    mask = tuple(sorted(feature_mask)) if feature_mask is not None else None
    if mask is not None:
        if not mask:
            raise DataError("empty feature mask")
        feats = feats[:, list(mask)]
    if standardizer is not None:
        feats = standardizer.transform_features(feats)
    problems = []
    for ci in range(k):
        for cj in range(ci + 1, k):
            idx = np.flatnonzero((codes == ci) | (codes == cj))
            X = np.ascontiguousarray(feats[idx])
            yb = np.where(codes[idx] == ci, 1.0, -1.0)
            problems.append(PairProblem(ci, cj, X, yb, X @ X.T))
    return MulticlassProblem(train.class_labels, counts, problems, mask, standardizer)


@dataclass
class SvmModel:
    """One binary machine per unordered class pair, voting for predictions."""

    classes: tuple[str, ...]
    class_counts: np.ndarray
    pairs: tuple[tuple[int, int], ...]
    machines: list[BinarySvm]
    feature_mask: tuple[int, ...] | None = None
    standardizer: Standardizer | None = None

    @property
    def converged(self) -> bool:
        return all(m.converged for m in self.machines)

    def _prepare(self, feats: np.ndarray) -> np.ndarray:
        if self.feature_mask is not None:
            feats = feats[:, list(self.feature_mask)]
        if self.standardizer is not None:
            feats = self.standardizer.transform_features(feats)
        return feats

    def predict_matrix(self, feats: np.ndarray) -> tuple[list[str], dict]:
        feats = self._prepare(np.asarray(feats, dtype=float))
        n = feats.shape[0]
        k = len(self.classes)
        votes = np.zeros((n, k))
        strength = np.zeros((n, k))
        for (ci, cj), m in zip(self.pairs, self.machines):
            d = m.decision_values(feats)
            pos = d >= 0
            votes[pos, ci] += 1
            votes[~pos, cj] += 1
            strength[pos, ci] += d[pos]
            strength[~pos, cj] += -d[~pos]
        top = votes.max(axis=1)
        tied = (votes == top[:, None]).sum(axis=1) > 1
        winners = np.argmax(votes, axis=1)
        priors = self.class_counts / self.class_counts.sum()
        for i in np.flatnonzero(tied):
            cands = np.flatnonzero(votes[i] == top[i])
            # larger summed |decision|, then larger prior, then class order
            order = sorted(cands, key=lambda c: (-strength[i, c], -priors[c], c))
            winners[i] = order[0]
        stats = {"vote_ties": int(tied.sum())}
        return [self.classes[w] for w in winners], stats

    def predict_dataset(self, ds: Dataset) -> tuple[list[str], dict]:
        return self.predict_matrix(ds.feature_matrix())

    def predict_values(self, values) -> str:
        values = np.asarray(values, dtype=float).reshape(1, -1)
        return self.predict_matrix(values)[0][0]


def train_from_problems(mp: MulticlassProblem, cfg: SvmConfig) -> SvmModel:
    machines = [smo_train(p.X, p.yb, cfg, gram=p.gram) for p in mp.problems]
    return SvmModel(
        classes=mp.classes,
        class_counts=mp.class_counts.copy(),
        pairs=tuple((p.ci, p.cj) for p in mp.problems),
        machines=machines,
        feature_mask=mp.feature_mask,
        standardizer=mp.standardizer,
    )


def train_multiclass(
    train: Dataset,
    cfg: SvmConfig,
    feature_mask=None,
    standardizer: Standardizer | None = None,
) -> SvmModel:
    return train_from_problems(pairwise_problems(train, feature_mask, standardizer), cfg)


def predict(model: SvmModel, values) -> str:
    """Class label for one instance given in the model's input feature space."""
    return model.predict_values(values)


# ---------------------------------------------------------------------------
# Persistence: versioned text format, hex floats for bit-exact round trips


def _hex(x: float) -> str:
    return float(x).hex()


def _write_machine(lines: list[str], pair: tuple[int, int], m: BinarySvm) -> None:
    lines.append(
        "machine\t%d\t%d\t%d\t%s\t%d" % (pair[0], pair[1], len(m.alphas), _hex(m.bias), int(m.converged))
    )
    for a, lab, row in zip(m.alphas, m.labels, m.support_vectors):
        cells = [("%+d" % int(lab)), _hex(a)] + [_hex(v) for v in row]
        lines.append("sv\t" + "\t".join(cells))


def model_to_lines(model: SvmModel) -> list[str]:
    lines = [f"{MODEL_MAGIC} {MODEL_VERSION}"]
    lines.append("classes\t" + "\t".join(model.classes))
    lines.append("counts\t" + "\t".join(str(int(c)) for c in model.class_counts))
    km = model.machines[0].kernel
    lines.append(f"kernel\tpolynomial\t{km.degree}\t{_hex(km.coef0)}")
    if model.feature_mask is None:
        lines.append("mask\tall")
    else:
        lines.append("mask\t" + "\t".join(str(i) for i in model.feature_mask))
    s = model.standardizer
    if s is None:
        lines.append("standardizer\tnone")
    else:
        lines.append(f"standardizer\t{len(s.means)}")
        for mu, sg, spec in zip(s.means, s.sigmas, s.feature_schema):
            lines.append(f"feat\t{spec.name}\t{spec.kind}\t{_hex(mu)}\t{_hex(sg)}")
    for pair, m in zip(model.pairs, model.machines):
        _write_machine(lines, pair, m)
    lines.append("end")
    return lines


def save_model(model: SvmModel, path) -> None:
    Path(path).write_text("\n".join(model_to_lines(model)) + "\n", encoding="utf-8")


def model_from_lines(lines: list[str], pos: int = 0) -> tuple[SvmModel, int]:
    from .data import AttributeSpec, NOMINAL, NUMERIC

    head = lines[pos].split()
    if len(head) != 2 or head[0] != MODEL_MAGIC:
        raise DataError("not a model file")
    if int(head[1]) != MODEL_VERSION:
        raise DataError(f"unsupported model version {head[1]}")
    pos += 1

    def fields(expect: str) -> list[str]:
        nonlocal pos
        parts = lines[pos].split("\t")
        if parts[0] != expect:
            raise DataError(f"malformed model file: expected {expect!r} at line {pos + 1}")
        pos += 1
        return parts[1:]

    classes = tuple(fields("classes"))
    counts = np.array([int(c) for c in fields("counts")])
    kparts = fields("kernel")
    kernel = KernelSpec(kparts[0], int(kparts[1]), float.fromhex(kparts[2]))
    mparts = fields("mask")
    mask = None if mparts == ["all"] else tuple(int(i) for i in mparts)
    sparts = fields("standardizer")
    standardizer = None
    if sparts != ["none"]:
        width = int(sparts[0])
        means, sigmas, fschema = [], [], []
        for _ in range(width):
            fp = fields("feat")
            # nominal label lists are not persisted; a placeholder keeps the
            # width/kind contract, which is all prediction needs
            if fp[1] == NOMINAL:
                fschema.append(AttributeSpec(fp[0], NOMINAL, ("0",)))
            else:
                fschema.append(AttributeSpec(fp[0], NUMERIC))
            means.append(float.fromhex(fp[2]))
            sigmas.append(float.fromhex(fp[3]))
        standardizer = Standardizer(np.array(means), np.array(sigmas), tuple(fschema))
    pairs, machines = [], []
    while lines[pos].split("\t")[0] == "machine":
        mp = fields("machine")
        ci, cj, n_sv, bias, conv = int(mp[0]), int(mp[1]), int(mp[2]), float.fromhex(mp[3]), bool(int(mp[4]))
        labels, alphas, rows = [], [], []
        for _ in range(n_sv):
            sp = fields("sv")
            labels.append(float(sp[0]))
            alphas.append(float.fromhex(sp[1]))
            rows.append([float.fromhex(v) for v in sp[2:]])
        pairs.append((ci, cj))
        machines.append(
            BinarySvm(np.array(rows), np.array(alphas), np.array(labels), bias, kernel, conv)
        )
    if lines[pos] != "end":
        raise DataError("malformed model file: missing end marker")
    pos += 1
    model = SvmModel(classes, counts, tuple(pairs), machines, mask, standardizer)
    return model, pos


def load_model(path) -> SvmModel:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    model, _ = model_from_lines(lines)
    return model
