"""Feature-subset search: greedy best-first, a generational GA over bitmasks,
and an exhaustive enumerator used as the testing baseline.

All searches share one tie rule (higher score, then smaller subset, then
lexicographically smallest index tuple), never return an empty subset, and
are deterministic given their configuration and seed.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .data import DataError
from .filters import SubsetEvaluation, SuCache, cfs_merit, inconsistency_rate


class SubsetEvaluator:
    """Deterministic larger-is-better subset scorer with memo and call count."""

    def __init__(self, fn: Callable[[frozenset], float], method: str = "custom"):
        self._fn = fn
        self.method = method
        self.calls = 0
        self._memo: dict[frozenset, float] = {}

    def score(self, subset: frozenset) -> float:
        self.calls += 1
        got = self._memo.get(subset)
        if got is None:
            got = float(self._fn(subset))
            self._memo[subset] = got
        return got


def make_cfs_evaluator(ds, dmap) -> SubsetEvaluator:
    cache = SuCache(ds, dmap)
    return SubsetEvaluator(
        lambda s: cfs_merit(ds, s, dmap, cache=cache) if s else 0.0, method="cfs"
    )


def make_consistency_evaluator(ds, dmap) -> SubsetEvaluator:
    empty_rate = None

    def fn(s: frozenset) -> float:
        if not s:
            # one all-rows pattern: the majority class explains what it can
            nonlocal empty_rate
            if empty_rate is None:
                y = ds.class_codes()
                empty_rate = (len(y) - int(np.bincount(y).max())) / len(y)
            return -empty_rate
        return -inconsistency_rate(ds, s, dmap)

    return SubsetEvaluator(fn, method="consistency")


def _better(sub_a: frozenset, val_a: float, sub_b: frozenset, val_b: float) -> bool:
    """True when (sub_a, val_a) wins under the shared tie rule."""
    if val_a != val_b:
        return val_a > val_b
    return (len(sub_a), tuple(sorted(sub_a))) < (len(sub_b), tuple(sorted(sub_b)))


def _best_singleton(evaluator: SubsetEvaluator, n_features: int, trace=None):
    best_sub, best_val = None, None
    for f in range(n_features):
        sub = frozenset([f])
        val = evaluator.score(sub)
        if trace is not None:
            trace.append((evaluator.calls, sub, val))
        if best_sub is None or _better(sub, val, best_sub, best_val):
            best_sub, best_val = sub, val
    return best_sub, best_val


@dataclass(frozen=True)
class BestFirstConfig:
    direction: str = "forward"
    stale_limit: int = 5
    start: str = "empty"

    def __post_init__(self):
        if self.direction != "forward":
            raise DataError("only forward best-first is supported")
        if self.start != "empty":
            raise DataError("search must start from the empty set")
        if self.stale_limit < 1:
            raise DataError("stale_limit must be >= 1")


def best_first(
    evaluator: SubsetEvaluator,
    n_features: int,
    cfg: BestFirstConfig = BestFirstConfig(),
    trace: list | None = None,
) -> SubsetEvaluation:
    """Forward best-first search from the empty set over add-one neighbors.

    Keeps an open list ordered by score, expands the best node, and stops
    after stale_limit consecutive expansions that fail to improve the global
    best. Total evaluations are capped at stale_limit * n * (n + 1). The
    empty set is never returned; if nothing beats it, the best singleton is.
    """
    if n_features < 1:
        raise DataError("n_features must be >= 1")
    cap = cfg.stale_limit * n_features * (n_features + 1)

    def score(sub: frozenset) -> float:
        val = evaluator.score(sub)
        if trace is not None:
            trace.append((evaluator.calls, sub, val))
        return val

    empty = frozenset()
    best_sub, best_val = empty, score(empty)
    evaluated = 1
    visited = {empty}
    counter = 0  # heap tiebreaker insertion order; deterministic push order
    heap = [(-best_val, 0, (), counter, empty)]
    stale = 0
    while heap and stale < cfg.stale_limit and evaluated < cap:
        _, _, _, _, node = heapq.heappop(heap)
        improved = False
        for f in range(n_features):
            if f in node:
                continue
            child = node | {f}
            if child in visited:
                continue
            visited.add(child)
            val = score(child)
            evaluated += 1
            counter += 1
            heapq.heappush(heap, (-val, len(child), tuple(sorted(child)), counter, child))
            if _better(child, val, best_sub, best_val):
                best_sub, best_val = child, val
                improved = True
            if evaluated >= cap:
                break
        if improved:
            stale = 0
        else:
            stale += 1
    if not best_sub:
        best_sub, best_val = _best_singleton(evaluator, n_features, trace)
    return SubsetEvaluation(evaluator.method, best_sub, best_val)


@dataclass(frozen=True)
class GeneticConfig:
    population: int = 20
    generations: int = 20
    crossover_prob: float = 0.6
    mutation_prob: float = 0.033
    seed: int = 1

    def __post_init__(self):
        if self.population < 2 or self.population % 2:
            raise DataError("population must be even and >= 2")
        if self.generations < 0:
            raise DataError("generations must be >= 0")
        for p in (self.crossover_prob, self.mutation_prob):
            if not 0.0 <= p <= 1.0:
                raise DataError("probabilities must lie in [0, 1]")


def genetic_search(
    evaluator: SubsetEvaluator,
    n_features: int,
    cfg: GeneticConfig = GeneticConfig(),
    trace: list | None = None,
) -> SubsetEvaluation:
    """Generational GA over fixed-length bitmasks.

    Roulette selection on min-shifted fitness, single-point crossover,
    per-bit mutation, elitism of one. All-zero individuals score as worst
    and are never returned; the best individual ever seen wins.
    """
    if n_features < 1:
        raise DataError("n_features must be >= 1")
    rng = np.random.default_rng(int(cfg.seed))
    pop = rng.random((cfg.population, n_features)) < 0.5

    best_sub: frozenset | None = None
    best_val = 0.0

    def evaluate(population: np.ndarray) -> np.ndarray:
        nonlocal best_sub, best_val
        raw = np.empty(len(population))
        zero = np.zeros(len(population), dtype=bool)
        for i, mask in enumerate(population):
            sub = frozenset(int(f) for f in np.flatnonzero(mask))
            if not sub:
                zero[i] = True
                raw[i] = 0.0
                continue
            val = evaluator.score(sub)
            raw[i] = val
            if trace is not None:
                trace.append((evaluator.calls, sub, val))
            if best_sub is None or _better(sub, val, best_sub, best_val):
                best_sub, best_val = sub, val
        if zero.any():
            worst = raw[~zero].min() - 1.0 if (~zero).any() else -1.0
            raw[zero] = worst
        return raw

    def select(fitness: np.ndarray) -> int:
        w = fitness - fitness.min()
        total = w.sum()
        r = rng.random()
        if total <= 0.0:
            return min(int(r * len(w)), len(w) - 1)
        return min(int(np.searchsorted(np.cumsum(w / total), r, side="right")), len(w) - 1)

    fitness = evaluate(pop)
    for _ in range(cfg.generations):
        elite = int(np.lexsort((np.arange(len(pop)), -fitness))[0])
        nxt = [pop[elite].copy()]
        while len(nxt) < cfg.population:
            p1 = pop[select(fitness)].copy()
            p2 = pop[select(fitness)].copy()
            if n_features > 1 and rng.random() < cfg.crossover_prob:
                point = int(rng.integers(1, n_features))
                p1[point:], p2[point:] = p2[point:].copy(), p1[point:].copy()
            for child in (p1, p2):
                flips = rng.random(n_features) < cfg.mutation_prob
                child ^= flips
                if len(nxt) < cfg.population:
                    nxt.append(child)
        pop = np.array(nxt)
        fitness = evaluate(pop)

    if best_sub is None:
        best_sub, best_val = _best_singleton(evaluator, n_features, trace)
    return SubsetEvaluation(evaluator.method, best_sub, best_val)


def exhaustive_search(
    evaluator: SubsetEvaluator, n_features: int, trace: list | None = None
) -> SubsetEvaluation:
    """Exact maximizer over every non-empty subset (n_features <= 16)."""
    if not 1 <= n_features <= 16:
        raise DataError("exhaustive search supports 1..16 features")
    best_sub, best_val = None, None
    for mask in range(1, 1 << n_features):
        sub = frozenset(f for f in range(n_features) if mask >> f & 1)
        val = evaluator.score(sub)
        if trace is not None:
            trace.append((evaluator.calls, sub, val))
        if best_sub is None or _better(sub, val, best_sub, best_val):
            best_sub, best_val = sub, val
    return SubsetEvaluation(evaluator.method, best_sub, best_val)


def trace_to_csv(trace) -> str:
    """CSV rows: evaluation index, subset bitmask as hex, score."""
    lines = ["iteration,subset_hex,score"]
    for it, sub, val in trace:
        mask = 0
        for f in sub:
            mask |= 1 << f
        lines.append(f"{it},{mask:#x},{val!r}")
    return "\n".join(lines) + "\n"
