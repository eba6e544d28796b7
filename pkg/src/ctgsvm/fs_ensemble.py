"""Ensembles of feature selectors: run the individual selectors, then merge
their outputs by union, intersection, or mean-rank aggregation.

Selector codes follow a fixed numbering: 1 = correlation merit, 2 =
consistency, 3 = relief weights, 4 = information gain. Combination labels
append the member digits in order, e.g. "EFS41".
"""
from __future__ import annotations

from dataclasses import dataclass

from .data import Dataset, DiscretizationMap, DataError, fit_discretization
from .filters import (
    FeatureScores,
    info_gain_scores,
    rank_cutoff,
    relieff,
)
from .search import (
    BestFirstConfig,
    GeneticConfig,
    SubsetEvaluator,
    best_first,
    genetic_search,
    make_cfs_evaluator,
    make_consistency_evaluator,
)

CODES = ("FS1", "FS2", "FS3", "FS4")
SUBSET_CODES = ("FS1", "FS2")
RANKER_CODES = ("FS3", "FS4")
METHOD_OF = {"FS1": "cfs", "FS2": "consistency", "FS3": "relieff", "FS4": "info_gain"}


@dataclass(frozen=True)
class SelectorId:
    code: str
    search: str

    def __post_init__(self):
        if self.code not in CODES:
            raise DataError(f"unknown selector code {self.code!r}")
        if self.code in SUBSET_CODES and self.search not in ("best_first", "genetic"):
            raise DataError(f"{self.code} requires best_first or genetic search")
        if self.code in RANKER_CODES and self.search != "ranker":
            raise DataError(f"{self.code} requires the ranker")

    @property
    def label(self) -> str:
        return f"{self.code}-{self.search}"


@dataclass(frozen=True)
class SelectorConfig:
    """Shared knobs for a batch of selector runs."""

    best_first: BestFirstConfig = BestFirstConfig()
    genetic: GeneticConfig = GeneticConfig()
    relieff_m: int | None = None
    relieff_k: int = 10
    relieff_seed: int = 0
    cutoff_rule: str = "keep_all"
    cutoff_value: float | None = None


@dataclass(frozen=True)
class FeatureSelection:
    """What one selector chose: a feature set, optionally with the ranking
    and the search value that produced it."""

    selector: SelectorId
    selected: frozenset
    scores: FeatureScores | None = None
    value: float | None = None

    def ranking(self, n_features: int) -> tuple[int, ...]:
        """Full feature ordering: scored order when available, otherwise the
        selected features (ascending) ahead of the rest (ascending)."""
        if self.scores is not None:
            return self.scores.ordering
        chosen = sorted(self.selected)
        rest = [f for f in range(n_features) if f not in self.selected]
        return tuple(chosen + rest)


def run_selector(
    sel: SelectorId,
    train: Dataset,
    cfg: SelectorConfig = SelectorConfig(),
    dmap: DiscretizationMap | None = None,
) -> FeatureSelection:
    """Execute one selector on the training partition."""
    if dmap is None:
        dmap = fit_discretization(train)
    if sel.code in SUBSET_CODES:
        evaluator: SubsetEvaluator = (
            make_cfs_evaluator(train, dmap)
            if sel.code == "FS1"
            else make_consistency_evaluator(train, dmap)
        )
        if sel.search == "best_first":
            res = best_first(evaluator, train.n_features, cfg.best_first)
        else:
            res = genetic_search(evaluator, train.n_features, cfg.genetic)
        return FeatureSelection(sel, res.subset, value=res.value)
    scores = (
        relieff(train, m=cfg.relieff_m, k=cfg.relieff_k, seed=cfg.relieff_seed)
        if sel.code == "FS3"
        else info_gain_scores(train, dmap)
    )
    selected = rank_cutoff(scores, cfg.cutoff_rule, cfg.cutoff_value)
    return FeatureSelection(sel, selected, scores=scores)


@dataclass(frozen=True)
class EnsembleSelection:
    members: tuple[SelectorId, ...]
    mode: str
    result: frozenset
    label: str


def combo_label(members) -> str:
    return "EFS" + "".join(m.code[2] for m in members)


def parse_label(label: str) -> tuple[str, ...]:
    """Map a combination label back to its member codes, in order."""
    if not label.startswith("EFS") or not label[3:].isdigit() or not label[3:]:
        raise DataError(f"malformed combination label {label!r}")
    codes = tuple(f"FS{d}" for d in label[3:])
    for c in codes:
        if c not in CODES:
            raise DataError(f"malformed combination label {label!r}")
    return codes


def aggregate(
    selections: list[FeatureSelection],
    mode: str = "union",
    k: int | None = None,
    n_features: int | None = None,
) -> EnsembleSelection:
    """Merge several selector outputs into one feature set.

    union keeps any feature some member chose; intersection keeps features
    every member chose (error when empty); mean_rank_top_k averages each
    feature's rank position across members and keeps the k best (ties by
    ascending index).
    """
    if len(selections) < 2:
        raise DataError("need at least 2 selections to aggregate")
    members = tuple(s.selector for s in selections)
    label = combo_label(members)
    if mode == "union":
        result = frozenset().union(*(s.selected for s in selections))
    elif mode == "intersection":
        result = frozenset.intersection(*(s.selected for s in selections))
        if not result:
            raise DataError(f"{label}: intersection is empty")
    elif mode == "mean_rank_top_k":
        if n_features is None:
            raise DataError("mean_rank_top_k requires n_features")
        if k is None or not 1 <= k <= n_features:
            raise DataError(f"mean_rank_top_k: k out of range 1..{n_features}")
        totals = [0.0] * n_features
        for s in selections:
            for pos, f in enumerate(s.ranking(n_features)):
                totals[f] += pos
        order = sorted(range(n_features), key=lambda f: (totals[f], f))
        result = frozenset(order[:k])
    else:
        raise DataError(f"unknown aggregation mode {mode!r}")
    return EnsembleSelection(members, mode, result, label)


def selection_record(es: EnsembleSelection, feature_names) -> str:
    """Line-oriented record: label, mode, sorted feature names."""
    names = sorted(feature_names[f] for f in es.result)
    return "\t".join([es.label, es.mode, ",".join(names)])
