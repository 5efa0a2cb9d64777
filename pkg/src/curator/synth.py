"""Synthetic datasets with planted context clusters and planted group bias.

Every cluster owns a distinct set of two or three co-occurring classes. A
region's probability vector puts most mass on its own class, a fixed share on
the other classes of the cluster and a little on the rest, then gets mixed
with a Dirichlet draw of weight ``noise``. At ``noise=0`` all items of a
cluster are identical.

Group bias: for each item containing a biased class, with probability
``bias`` its group is the class's favored group (``g{c % n_groups}``),
otherwise the group is uniform.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import BadSpec, MissingClusterTags
from .fairness import class_name
from .records import LabelRecord, PredictionRecord, Region

OWN_MASS = 0.6
CONTEXT_MASS = 0.3


@dataclass
class SynthSpec:
    n_items: int = 120
    n_clusters: int = 3
    n_classes: int = 10
    regions_per_item: int = 4
    bias: float = 0.0
    noise: float = 0.05
    seed: int = 0
    n_groups: int = 2
    biased_classes: Sequence[int] | None = None

    def validate(self):
        if self.n_classes < 2:
            raise BadSpec("n_classes must be >= 2")
        if not 1 <= self.n_clusters <= self.n_items:
            raise BadSpec("need 1 <= n_clusters <= n_items")
        if self.regions_per_item < 1:
            raise BadSpec("regions_per_item must be >= 1")
        if not 0.0 <= self.bias <= 1.0:
            raise BadSpec("bias must lie in [0, 1]")
        if not 0.0 <= self.noise <= 1.0:
            raise BadSpec("noise must lie in [0, 1]")
        if self.n_groups < 2:
            raise BadSpec("n_groups must be >= 2")
        for c in self.biased_classes or ():
            if not 0 <= c < self.n_classes:
                raise BadSpec(f"biased class {c} out of range")


def _patterns(spec: SynthSpec, rng: np.random.Generator) -> list[tuple[int, ...]]:
    top = min(3, spec.regions_per_item, spec.n_classes)
    sizes = [s for s in (2, 3) if s <= top] or [1]
    pool = [p for s in sizes for p in itertools.combinations(range(spec.n_classes), s)]
    if len(pool) < spec.n_clusters:
        raise BadSpec(f"only {len(pool)} distinct class patterns for {spec.n_clusters} clusters")
    order = rng.permutation(len(pool))
    return [pool[i] for i in order[: spec.n_clusters]]


def _base(pattern: tuple[int, ...], own: int, C: int) -> np.ndarray:
    p = np.zeros(C)
    others = [c for c in pattern if c != own]
    rest = [c for c in range(C) if c not in pattern]
    p[own] = OWN_MASS
    left = 1.0 - OWN_MASS
    if others:
        p[others] = CONTEXT_MASS / len(others)
        left -= CONTEXT_MASS
    if rest:
        p[rest] = left / len(rest)
    else:
        p[own] += left
    return p


def gen_synth(spec: SynthSpec) -> tuple[list[PredictionRecord], list[LabelRecord]]:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    C = spec.n_classes
    patterns = _patterns(spec, rng)
    assignment = rng.permutation(np.arange(spec.n_items) % spec.n_clusters)

    preds: list[PredictionRecord] = []
    truth: list[list[int]] = []
    for i, k in enumerate(assignment):
        pattern = patterns[k]
        regions = []
        owns = []
        for j in range(spec.regions_per_item):
            own = pattern[j % len(pattern)]
            p = _base(pattern, own, C)
            d = rng.dirichlet(np.ones(C))
            u = rng.uniform(-1.0, 1.0)
            if spec.noise > 0:
                p = (1.0 - spec.noise) * p + spec.noise * d
                p = p / p.sum()
            w = 1.0 + spec.noise * u
            regions.append(Region(float(w), tuple(float(x) for x in p)))
            owns.append(own)
        preds.append(PredictionRecord(f"item{i:05d}", tuple(regions), None, f"k{k}"))
        truth.append(owns)

    biased = spec.biased_classes
    if biased is None:
        freq = np.zeros(C, dtype=int)
        for owns in truth:
            freq[sorted(set(owns))] += 1
        biased = [int(np.argmin(np.where(freq > 0, freq, np.iinfo(int).max)))]
    biased = sorted(set(biased))

    labels = []
    for rec, owns in zip(preds, truth):
        u = rng.random()
        g = int(rng.integers(spec.n_groups))
        present = [c for c in biased if c in owns]
        if present and u < spec.bias:
            g = present[0] % spec.n_groups
        counts: dict[str, int] = {}
        for c in sorted(owns):
            counts[class_name(c)] = counts.get(class_name(c), 0) + 1
        labels.append(LabelRecord(rec.item_id, counts, f"g{g}"))
    return preds, labels


def eval_cluster_coverage(selected: Iterable[str], records: Sequence[PredictionRecord]) -> float:
    """Fraction of planted clusters hit by the selection."""
    tags: dict[str, str] = {}
    for rec in records:
        if rec.cluster is None:
            raise MissingClusterTags(f"record {rec.item_id!r} has no cluster tag")
        tags[rec.item_id] = rec.cluster
    clusters = set(tags.values())
    if not clusters:
        raise MissingClusterTags("no records to evaluate against")
    hit = {tags[i] for i in selected if i in tags}
    return len(hit) / len(clusters)
