"""Per-item context signatures and the contextual distance between items.

A signature pseudo-labels every region by its argmax class and keeps, per
class, the confidence-weighted mean of the regions' probability vectors. The
off-argmax mass of that mixture is what records which other classes the model
saw around the object.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, NamedTuple, Sequence

import numpy as np

from .errors import ClassSpaceMismatch, EmptyInput
from .prob import DEFAULT_EPS, default_d_max, smooth_rows, sym_kl
from .records import PredictionRecord, Region

# rows per vectorized block in distance_matrix
_BLOCK = 128


class ClassMixture(NamedTuple):
    mixture: np.ndarray
    mass: float
    count: int  # number of regions assigned to the class


@dataclass
class ContextSignature:
    item_id: str
    n_classes: int
    per_class: dict[int, ClassMixture] = field(default_factory=dict)


@dataclass
class DistanceMatrix:
    ids: list[str]
    d: np.ndarray

    @property
    def n(self) -> int:
        return len(self.ids)


def assign_class(region: Region) -> int:
    """Argmax class; ties go to the lowest index."""
    return int(np.argmax(region.prob))


def build_signature(rec: PredictionRecord, class_mask: Sequence[int] | None = None) -> ContextSignature:
    """Build the per-class mixture signature of one record.

    Each region contributes to its argmax class with weight
    ``region.weight * max(region.prob)``. Classes listed in ``class_mask``
    (e.g. background/void) are dropped.
    """
    masked = set(class_mask or ())
    C = rec.n_classes
    sums: dict[int, np.ndarray] = {}
    mass: dict[int, float] = {}
    count: dict[int, int] = {}
    for region in rec.regions:
        c = assign_class(region)
        if c in masked:
            continue
        p = np.asarray(region.prob, dtype=float)
        w = region.weight * float(p[c])
        if c not in sums:
            sums[c] = np.zeros(C)
            mass[c] = 0.0
            count[c] = 0
        sums[c] += w * p
        mass[c] += w
        count[c] += 1
    per_class = {
        c: ClassMixture(sums[c] / mass[c], mass[c], count[c]) for c in sorted(sums)
    }
    return ContextSignature(rec.item_id, C, per_class)


def _check_space(a: ContextSignature, b: ContextSignature):
    if a.n_classes != b.n_classes:
        raise ClassSpaceMismatch(
            f"{a.item_id!r} has {a.n_classes} classes, {b.item_id!r} has {b.n_classes}"
        )


def contextual_distance(
    a: ContextSignature,
    b: ContextSignature,
    eps: float = DEFAULT_EPS,
    d_max: float | None = None,
) -> float:
    """Mean symmetric KL over the classes both items contain, capped at ``d_max``.

    Items sharing no class are maximally far (``d_max``).
    """
    _check_space(a, b)
    if d_max is None:
        d_max = default_d_max(eps)
    shared = sorted(a.per_class.keys() & b.per_class.keys())
    if not shared:
        return 0.0 if not a.per_class and not b.per_class else d_max
    total = 0.0
    for c in shared:
        total += sym_kl(a.per_class[c].mixture, b.per_class[c].mixture, eps)
    return min(d_max, total / len(shared))


def distance_matrix(
    signatures: Sequence[ContextSignature],
    eps: float = DEFAULT_EPS,
    d_max: float | None = None,
    threads: int = 1,
) -> DistanceMatrix:
    """All-pairs contextual distance.

    Every entry is produced by the same elementwise expression no matter how
    rows are split between workers, so the result is bit-identical for any
    ``threads`` and exactly symmetric.
    """
    if not signatures:
        raise EmptyInput("distance_matrix needs at least one signature")
    if d_max is None:
        d_max = default_d_max(eps)
    first = signatures[0]
    for s in signatures[1:]:
        _check_space(first, s)
    n, C = len(signatures), first.n_classes

    members: list[np.ndarray] = []
    smoothed: list[np.ndarray] = []
    logs: list[np.ndarray] = []
    for c in range(C):
        idx = np.array([i for i, s in enumerate(signatures) if c in s.per_class], dtype=int)
        members.append(idx)
        if idx.size:
            A = smooth_rows(np.stack([signatures[i].per_class[c].mixture for i in idx]), eps)
            smoothed.append(A)
            logs.append(np.log(A))
        else:
            smoothed.append(np.empty((0, C)))
            logs.append(np.empty((0, C)))

    total = np.zeros((n, n))
    count = np.zeros((n, n), dtype=np.int64)

    def fill(lo: int, hi: int):
        for c in range(C):
            idx = members[c]
            if idx.size == 0:
                continue
            rows = np.flatnonzero((idx >= lo) & (idx < hi))
            if rows.size == 0:
                continue
            A, L = smoothed[c], logs[c]
            block = 0.5 * (
                (A[rows, None, :] - A[None, :, :]) * (L[rows, None, :] - L[None, :, :])
            ).sum(axis=-1)
            sel = np.ix_(idx[rows], idx)
            total[sel] += block
            count[sel] += 1

    chunks = [(lo, min(lo + _BLOCK, n)) for lo in range(0, n, _BLOCK)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda ch: fill(*ch), chunks))
    else:
        for ch in chunks:
            fill(*ch)

    with np.errstate(invalid="ignore", divide="ignore"):
        d = np.where(count > 0, total / np.maximum(count, 1), d_max)
    d = np.minimum(d, d_max)
    empty = np.array([not s.per_class for s in signatures])
    d[np.ix_(empty, empty)] = 0.0
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix([s.item_id for s in signatures], d)


def write_distance_csv(m: DistanceMatrix, stream: IO[str]) -> None:
    """CSV export: header row of item ids, one row per item, 12 significant digits."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["item_id", *m.ids])
    for item_id, row in zip(m.ids, m.d):
        w.writerow([item_id, *(format(float(x), ".12g") for x in row)])
