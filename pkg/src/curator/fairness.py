"""Coefficient-of-variation repair of class/group co-occurrence.

The objective is the unweighted mean, over classes with a positive total, of
the coefficient of variation of that class's counts across protected groups.
Repair greedily removes items from a labeled set (batch mode) or adds items
from a pool (incremental mode), one item per step, taking the move with the
lowest resulting objective.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    BadBudget,
    BadTarget,
    ClassSpaceMismatch,
    EmptyInput,
    MissingGroupTable,
    NoGroupedItems,
    TooLarge,
)
from .prob import cv_rows
from .records import LabelRecord, class_vocabulary
from .signature import ContextSignature

log = logging.getLogger(__name__)

# objectives closer than this are ties, broken by item id
TIE_TOL = 1e-12


def class_name(c: int) -> str:
    """Label name used for predicted class index ``c``."""
    return f"c{c}"


@dataclass
class CooccurrenceMatrix:
    classes: list[str]
    groups: list[str]
    counts: np.ndarray  # shape (len(classes), len(groups))

    def as_dict(self) -> dict[str, dict[str, int]]:
        return {
            c: {g: int(self.counts[i, j]) for j, g in enumerate(self.groups)}
            for i, c in enumerate(self.classes)
        }


@dataclass
class RepairResult:
    kept: list[str]
    objective_trace: list[float]
    initial_objective: float
    final_objective: float
    removed: list[str] = field(default_factory=list)
    added: list[str] = field(default_factory=list)

    def to_dict(self, mode: str) -> dict:
        out: dict = {"kept": list(self.kept)}
        if mode == "remove":
            out["removed"] = list(self.removed)
        else:
            out["added"] = list(self.added)
        out["objective_trace"] = [float(x) for x in self.objective_trace]
        out["initial_objective"] = float(self.initial_objective)
        out["final_objective"] = float(self.final_objective)
        return out


def _grouped(labels: Sequence[LabelRecord], what: str) -> list[LabelRecord]:
    grouped = [r for r in labels if r.group is not None]
    skipped = len(labels) - len(grouped)
    if skipped:
        log.warning("%s: ignoring %d item(s) without a group", what, skipped)
    return grouped


def _vocab(labels: Sequence[LabelRecord]) -> tuple[list[str], list[str]]:
    return class_vocabulary(labels), sorted({r.group for r in labels})


def _matrix(labels: Sequence[LabelRecord], classes: list[str], groups: list[str]):
    ci = {c: i for i, c in enumerate(classes)}
    gi = {g: j for j, g in enumerate(groups)}
    X = np.zeros((len(labels), len(classes)), dtype=np.int64)
    g = np.zeros(len(labels), dtype=np.int64)
    for k, rec in enumerate(labels):
        for name, n in rec.class_counts.items():
            X[k, ci[name]] += n
        g[k] = gi[rec.group]
    return X, g


def cooccurrence(
    labels: Sequence[LabelRecord],
    classes: Sequence[str] | None = None,
    groups: Sequence[str] | None = None,
) -> CooccurrenceMatrix:
    """Sum class counts per protected group; ungrouped items are skipped."""
    grouped = _grouped(labels, "cooccurrence")
    if not grouped:
        raise NoGroupedItems("no label record carries a group")
    c0, g0 = _vocab(grouped)
    classes = list(classes) if classes is not None else c0
    groups = list(groups) if groups is not None else g0
    X, g = _matrix(grouped, classes, groups)
    counts = np.zeros((len(classes), len(groups)), dtype=np.int64)
    np.add.at(counts.T, g, X)
    return CooccurrenceMatrix(classes, groups, counts)


def _objective_batch(K: np.ndarray) -> np.ndarray:
    """Objective of a stack of count matrices, shape (..., classes, groups)."""
    active = K.sum(axis=-1) > 0
    cvs = np.where(active, cv_rows(K), 0.0)
    n_active = active.sum(axis=-1)
    return np.where(n_active > 0, cvs.sum(axis=-1) / np.maximum(n_active, 1), 0.0)


def fairness_objective(m: CooccurrenceMatrix) -> float:
    return float(_objective_batch(m.counts.astype(float)))


def _pick(objs: np.ndarray, ids: Sequence[str]) -> int:
    best = objs.min()
    tied = np.flatnonzero(objs <= best + TIE_TOL)
    return min(tied, key=lambda i: ids[i])


def repair_remove(labels: Sequence[LabelRecord], target_size: int) -> RepairResult:
    """Greedily drop items until ``target_size`` grouped items remain.

    Each step removes the item whose removal gives the lowest objective, even
    when every candidate makes it worse. Survivors keep their input order.
    """
    grouped = _grouped(labels, "repair_remove")
    n = len(grouped)
    if isinstance(target_size, bool) or not isinstance(target_size, int) or not 1 <= target_size <= n:
        raise BadTarget(f"target_size must be in [1, {n}] (grouped items), got {target_size!r}")
    classes, groups = _vocab(grouped)
    X, g = _matrix(grouped, classes, groups)
    ids = [r.item_id for r in grouped]
    K = np.zeros((len(classes), len(groups)))
    np.add.at(K.T, g, X)
    initial = float(_objective_batch(K))

    alive = np.ones(n, dtype=bool)
    removed: list[str] = []
    trace: list[float] = []
    for _ in range(n - target_size):
        cand = np.flatnonzero(alive)
        Kc = np.repeat(K[None], cand.size, axis=0)
        Kc[np.arange(cand.size), :, g[cand]] -= X[cand]
        objs = _objective_batch(Kc)
        j = _pick(objs, [ids[i] for i in cand])
        i = cand[j]
        K[:, g[i]] -= X[i]
        alive[i] = False
        removed.append(ids[i])
        trace.append(float(objs[j]))

    kept = [ids[i] for i in range(n) if alive[i]]
    final = trace[-1] if trace else initial
    return RepairResult(kept, trace, initial, final, removed=removed)


def repair_add(
    current: Sequence[LabelRecord], pool: Sequence[LabelRecord], budget: int
) -> RepairResult:
    """Greedily add pool items, each step taking the one giving the lowest objective."""
    if isinstance(budget, bool) or not isinstance(budget, int) or budget < 1:
        raise BadBudget(f"budget must be a positive integer, got {budget!r}")
    if not pool:
        raise EmptyInput("repair_add needs a non-empty pool")
    cur = _grouped(current, "repair_add (current)")
    cand_recs = _grouped(pool, "repair_add (pool)")
    classes, groups = _vocab([*cur, *cand_recs])
    K = np.zeros((len(classes), len(groups)))
    if cur:
        Xc, gc = _matrix(cur, classes, groups)
        np.add.at(K.T, gc, Xc)
    initial = float(_objective_batch(K))

    X, g = _matrix(cand_recs, classes, groups)
    ids = [r.item_id for r in cand_recs]
    free = np.ones(len(cand_recs), dtype=bool)
    added: list[str] = []
    trace: list[float] = []
    for _ in range(min(budget, len(cand_recs))):
        cand = np.flatnonzero(free)
        Kc = np.repeat(K[None], cand.size, axis=0)
        Kc[np.arange(cand.size), :, g[cand]] += X[cand]
        objs = _objective_batch(Kc)
        j = _pick(objs, [ids[i] for i in cand])
        i = cand[j]
        K[:, g[i]] += X[i]
        free[i] = False
        added.append(ids[i])
        trace.append(float(objs[j]))

    kept = [r.item_id for r in current] + added
    final = trace[-1] if trace else initial
    return RepairResult(kept, trace, initial, final, added=added)


def signature_labels(
    sigs: Sequence[ContextSignature], groups: Mapping[str, str]
) -> list[LabelRecord]:
    """Pseudo label records: class count = number of regions assigned to the class."""
    out = []
    for s in sigs:
        if s.item_id not in groups:
            raise MissingGroupTable(f"group table has no entry for {s.item_id!r}")
        counts = {class_name(c): cm.count for c, cm in s.per_class.items()}
        out.append(LabelRecord(s.item_id, counts, groups[s.item_id]))
    return out


def repair_add_proxy(
    current_sigs: Sequence[ContextSignature],
    pool_sigs: Sequence[ContextSignature],
    budget: int,
    groups: Mapping[str, str] | None,
) -> RepairResult:
    """:func:`repair_add` on argmax pseudo-labels, for pools without annotations."""
    if groups is None:
        raise MissingGroupTable("proxy repair needs a group side table")
    sigs = [*current_sigs, *pool_sigs]
    if sigs and any(s.n_classes != sigs[0].n_classes for s in sigs):
        raise ClassSpaceMismatch("signatures do not share a class count")
    return repair_add(signature_labels(current_sigs, groups), signature_labels(pool_sigs, groups), budget)


def brute_force_remove(
    labels: Sequence[LabelRecord], target_size: int, max_subsets: int = 10**6
) -> tuple[float, list[str]]:
    """Exact best subset of ``target_size`` grouped items (small instances only)."""
    grouped = [r for r in labels if r.group is not None]
    n = len(grouped)
    if not 1 <= target_size <= n:
        raise BadTarget(f"target_size must be in [1, {n}], got {target_size!r}")
    if math.comb(n, target_size) > max_subsets:
        raise TooLarge(f"C({n}, {target_size}) subsets exceed {max_subsets}")
    classes, groups = _vocab(grouped)
    X, g = _matrix(grouped, classes, groups)
    best, best_keep = math.inf, ()
    for keep in itertools.combinations(range(n), target_size):
        K = np.zeros((len(classes), len(groups)))
        np.add.at(K.T, g[list(keep)], X[list(keep)])
        obj = float(_objective_batch(K))
        if obj < best - TIE_TOL:
            best, best_keep = obj, keep
    return best, [grouped[i].item_id for i in best_keep]
