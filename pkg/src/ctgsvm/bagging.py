"""Bagged SVM ensembles: bootstrap resampling, majority voting, and
member-agreement statistics.

Member seeds are derived from the master seed with a splitmix-style mixer,
so each member is fully determined by (master_seed, member_index) no matter
how or where the members are trained.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import DataError, Dataset, Standardizer
from .svm import (
    SvmConfig,
    SvmModel,
    model_from_lines,
    model_to_lines,
    train_multiclass,
)

ENSEMBLE_MAGIC = "ctgsvm-ensemble"
ENSEMBLE_VERSION = 1

VOTE_RULES = ("unweighted_majority", "weighted_by_train_accuracy")

_MASK64 = (1 << 64) - 1


def split_mix(seed: int, index: int) -> int:
    """Derived 64-bit seed for a member; parallel-safe and order-free."""
    z = (int(seed) + (index + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def bootstrap_sample(train: Dataset, seed: int) -> Dataset:
    """Seeded sample of n_rows draws with replacement."""
    if train.n_rows == 0:
        raise DataError("cannot bootstrap an empty dataset")
    rng = np.random.default_rng(int(seed))
    idx = rng.integers(0, train.n_rows, size=train.n_rows)
    return train.take(idx)


@dataclass(frozen=True)
class EnsembleConfig:
    members: int
    base: SvmConfig
    master_seed: int
    vote: str = "unweighted_majority"

    def __post_init__(self):
        if self.members < 1:
            raise DataError("members must be >= 1")
        if self.vote not in VOTE_RULES:
            raise DataError(f"unknown vote rule {self.vote!r}")


@dataclass
class EnsembleModel:
    members: list[tuple[SvmModel, int, float]]  # (model, bootstrap seed, train accuracy)
    vote: str
    classes: tuple[str, ...]
    class_priors: np.ndarray
    master_seed: int

    @property
    def converged(self) -> bool:
        return all(m.converged for m, _, _ in self.members)

    def member_predictions(self, ds: Dataset) -> list[list[str]]:
        return [m.predict_dataset(ds)[0] for m, _, _ in self.members]

    def predict_dataset(self, ds: Dataset) -> tuple[list[str], dict]:
        per_member = self.member_predictions(ds)
        weights = None
        if self.vote == "weighted_by_train_accuracy":
            weights = [acc for _, _, acc in self.members]
        priors = {c: float(p) for c, p in zip(self.classes, self.class_priors)}
        labels, ties = [], 0
        for row in zip(*per_member):
            lab, tie = _vote(row, priors, self.classes, weights)
            labels.append(lab)
            ties += tie
        return labels, {"vote_ties": ties}

    def predict_values(self, values) -> str:
        votes = [m.predict_values(values) for m, _, _ in self.members]
        weights = None
        if self.vote == "weighted_by_train_accuracy":
            weights = [acc for _, _, acc in self.members]
        priors = {c: float(p) for c, p in zip(self.classes, self.class_priors)}
        return _vote(votes, priors, self.classes, weights)[0]


def _vote(predictions, priors, class_order, weights=None) -> tuple[str, int]:
    totals: Counter = Counter()
    if weights is None:
        totals.update(predictions)
    else:
        for lab, w in zip(predictions, weights):
            totals[lab] += w
    top = max(totals.values())
    cands = [lab for lab, v in totals.items() if v == top]
    if len(cands) == 1:
        return cands[0], 0
    rank = {c: i for i, c in enumerate(class_order)}
    cands.sort(key=lambda lab: (-priors.get(lab, 0.0), rank.get(lab, len(rank))))
    return cands[0], 1


def majority_vote(predictions, priors, rule: str = "unweighted_majority", weights=None) -> str:
    """Modal label; ties break toward the larger prior, then label order.

    The weighted rule sums the given member weights instead of counts.
    """
    predictions = list(predictions)
    if not predictions:
        raise DataError("majority_vote of an empty prediction list")
    if rule not in VOTE_RULES:
        raise DataError(f"unknown vote rule {rule!r}")
    order = sorted(priors)
    use_weights = weights if rule == "weighted_by_train_accuracy" else None
    return _vote(predictions, priors, order, use_weights)[0]


def bagging_train(
    train: Dataset,
    cfg: EnsembleConfig,
    feature_mask=None,
    standardizer: Standardizer | None = None,
) -> EnsembleModel:
    """Train cfg.members machines on seeded bootstrap resamples.

    A bootstrap that drops a class entirely is redrawn from a further
    derived seed (up to 10 retries). Each member's accuracy on the full
    training set is recorded for the weighted voting rule.
    """
    k = len(train.class_labels)
    members = []
    for i in range(cfg.members):
        seed = split_mix(cfg.master_seed, i)
        sample = None
        for retry in range(11):
            use_seed = seed if retry == 0 else split_mix(seed, retry)
            cand = bootstrap_sample(train, use_seed)
            if len(np.bincount(cand.class_codes(), minlength=k).nonzero()[0]) == k:
                sample, seed = cand, use_seed
                break
        if sample is None:
            raise DataError(f"member {i}: bootstrap kept losing a class after 10 retries")
        model = train_multiclass(sample, cfg.base, feature_mask, standardizer)
        preds, _ = model.predict_dataset(train)
        truth = [train.class_labels[c] for c in train.class_codes()]
        acc = sum(p == t for p, t in zip(preds, truth)) / train.n_rows
        members.append((model, seed, acc))
    priors = np.bincount(train.class_codes(), minlength=k) / train.n_rows
    return EnsembleModel(members, cfg.vote, train.class_labels, priors, cfg.master_seed)


def member_agreement(model: EnsembleModel, ds: Dataset) -> float:
    """Fraction of rows on which every member emits the same label."""
    if len(model.members) < 2:
        raise DataError("agreement needs at least 2 members")
    per_member = model.member_predictions(ds)
    agree = sum(1 for row in zip(*per_member) if len(set(row)) == 1)
    return agree / ds.n_rows


# ---------------------------------------------------------------------------
# Persistence: manifest line plus one embedded model section per member


def save_ensemble(model: EnsembleModel, path) -> None:
    lines = [f"{ENSEMBLE_MAGIC} {ENSEMBLE_VERSION}"]
    lines.append(
        "manifest\t%d\t%d\t%s" % (len(model.members), model.master_seed, model.vote)
    )
    lines.append("classes\t" + "\t".join(model.classes))
    lines.append("priors\t" + "\t".join(float(p).hex() for p in model.class_priors))
    for m, seed, acc in model.members:
        lines.append("member\t%d\t%s" % (seed, float(acc).hex()))
        lines.extend(model_to_lines(m))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_ensemble(path) -> EnsembleModel:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    head = lines[0].split()
    if head[0] != ENSEMBLE_MAGIC:
        raise DataError("not an ensemble file")
    if int(head[1]) != ENSEMBLE_VERSION:
        raise DataError(f"unsupported ensemble version {head[1]}")
    manifest = lines[1].split("\t")
    n_members, master_seed, vote = int(manifest[1]), int(manifest[2]), manifest[3]
    classes = tuple(lines[2].split("\t")[1:])
    priors = np.array([float.fromhex(p) for p in lines[3].split("\t")[1:]])
    pos = 4
    members = []
    for _ in range(n_members):
        mparts = lines[pos].split("\t")
        if mparts[0] != "member":
            raise DataError("malformed ensemble file")
        seed, acc = int(mparts[1]), float.fromhex(mparts[2])
        pos += 1
        model, pos = model_from_lines(lines, pos)
        members.append((model, seed, acc))
    return EnsembleModel(members, vote, classes, priors, master_seed)
