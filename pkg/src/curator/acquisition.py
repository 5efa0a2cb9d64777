"""Budgeted frame selection.

``select_cdal`` is farthest-point (k-center) greedy over the contextual
distance matrix. Entropy ranking and seeded random sampling are the
baselines; ``brute_force_kcenter`` is an exact oracle for small pools.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import BadBudget, TooLarge, UnknownId
from .prob import DEFAULT_EPS, entropy
from .records import PredictionRecord
from .rng import partial_shuffle
from .signature import DistanceMatrix

BRUTE_FORCE_MAX_N = 20
BRUTE_FORCE_MAX_SUBSETS = 10**6


@dataclass
class SelectionResult:
    method: str
    selected: list[str]
    covering_radius: float | None = None
    objective_trace: list[float] = field(default_factory=list)
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "selected": list(self.selected),
            "diagnostics": {
                "covering_radius": self.covering_radius,
                "objective_trace": [float(x) for x in self.objective_trace],
                "seed": self.seed,
                "method": self.method,
            },
        }


def _check_budget(budget) -> int:
    if isinstance(budget, bool) or not isinstance(budget, (int, np.integer)) or budget < 1:
        raise BadBudget(f"budget must be a positive integer, got {budget!r}")
    return int(budget)


def select_cdal(
    m: DistanceMatrix, budget: int, preselected: Iterable[str] = ()
) -> SelectionResult:
    """Farthest-point greedy selection.

    Without anchors the first pick is the item with the largest distance row
    sum. Each later pick maximizes the distance to its nearest selected or
    preselected item. Preselected items anchor the distances but are never
    returned and do not consume budget. All ties go to the lower index.

    ``objective_trace[t]`` is the covering radius after t + 1 picks, which is
    also the nearest-center distance of the next pick, so it never increases.
    """
    budget = _check_budget(budget)
    index = {item_id: i for i, item_id in enumerate(m.ids)}
    pre = []
    for item_id in preselected:
        if item_id not in index:
            raise UnknownId(f"preselected id {item_id!r} is not in the pool")
        pre.append(index[item_id])
    D = m.d
    n = m.n
    taken = np.zeros(n, dtype=bool)
    taken[pre] = True
    k = min(budget, n - int(taken.sum()))

    min_dist = D[:, sorted(set(pre))].min(axis=1) if pre else None
    selected: list[int] = []
    trace: list[float] = []
    for _ in range(k):
        if min_dist is None:
            idx = int(np.argmax(D.sum(axis=1)))
            min_dist = D[:, idx].copy()
        else:
            idx = int(np.argmax(np.where(taken, -np.inf, min_dist)))
            min_dist = np.minimum(min_dist, D[:, idx])
        taken[idx] = True
        selected.append(idx)
        trace.append(_radius(min_dist, taken))

    if trace:
        radius = trace[-1]
    elif min_dist is not None:
        radius = _radius(min_dist, taken)
    else:
        radius = 0.0
    return SelectionResult("cdal", [m.ids[i] for i in selected], radius, trace)


def _radius(min_dist: np.ndarray, taken: np.ndarray) -> float:
    rest = min_dist[~taken]
    return float(rest.max()) if rest.size else 0.0


def region_entropy_score(rec: PredictionRecord, eps: float = DEFAULT_EPS) -> float:
    """Weight-averaged region entropy of one item."""
    num = 0.0
    den = 0.0
    for r in rec.regions:
        num += r.weight * entropy(r.prob, eps)
        den += r.weight
    return num / den


def select_entropy(
    records: Sequence[PredictionRecord], budget: int, eps: float = DEFAULT_EPS
) -> SelectionResult:
    budget = _check_budget(budget)
    scores = [region_entropy_score(r, eps) for r in records]
    order = sorted(range(len(records)), key=lambda i: (-scores[i], i))[:budget]
    return SelectionResult(
        "entropy", [records[i].item_id for i in order], None, [scores[i] for i in order]
    )


def select_random(ids: Sequence[str], budget: int, seed: int) -> SelectionResult:
    """Uniform sample without replacement, reproducible from ``seed``."""
    budget = _check_budget(budget)
    return SelectionResult("random", partial_shuffle(ids, budget, seed), None, [], seed)


def brute_force_kcenter(m: DistanceMatrix, budget: int) -> tuple[float, tuple[int, ...]]:
    """Exact k-center radius by enumeration; returns (radius, lexicographically first optimal subset)."""
    budget = _check_budget(budget)
    n = m.n
    k = min(budget, n)
    if n > BRUTE_FORCE_MAX_N or math.comb(n, k) > BRUTE_FORCE_MAX_SUBSETS:
        raise TooLarge(f"n={n}, budget={budget} is beyond exhaustive search limits")
    if k == n:
        return 0.0, tuple(range(n))
    D = m.d
    best, witness = math.inf, ()
    combos = itertools.combinations(range(n), k)
    while True:
        chunk = np.array(list(itertools.islice(combos, 20000)), dtype=int)
        if chunk.size == 0:
            break
        radii = D[:, chunk].min(axis=2).max(axis=0)
        j = int(np.argmin(radii))
        if radii[j] < best:
            best, witness = float(radii[j]), tuple(int(x) for x in chunk[j])
    return best, witness
