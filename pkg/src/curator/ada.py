"""Hard-class region recommendation for active domain adaptation.

Two label-free scorers rate each (frame, class) pair in [0, 1]:

* anchor-based: blends the class's normalized prediction entropy with how far
  its mixture sits from the training set's mixture for the same class;
* augmentation-based: disagreement of the class mixture across augmented
  views of the same frame.

``recommend`` then spends an annotation budget (in summed region weight) on
the highest-scoring pairs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import BadAlpha, BadBudget, EmptyTrainingSet, SingleView
from .prob import DEFAULT_EPS, LN2, default_d_max, entropy, js, sym_kl
from .records import PredictionRecord
from .signature import ClassMixture, ContextSignature, assign_class, build_signature

DEFAULT_ALPHA = 0.5


@dataclass
class FrameScores:
    item_id: str
    scores: dict[int, float]
    est_weights: dict[int, float]


@dataclass
class RegionRecommendation:
    item_id: str
    class_index: int
    score: float
    est_weight: float

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "class": self.class_index,
            "score": float(self.score),
            "est_weight": float(self.est_weight),
        }


@dataclass
class AnchorSet:
    per_class: dict[int, ClassMixture] = field(default_factory=dict)


def class_hardness(
    rec: PredictionRecord, eps: float = DEFAULT_EPS, class_mask: Sequence[int] | None = None
) -> dict[int, float]:
    """Weighted mean region entropy per assigned class, divided by ln C."""
    masked = set(class_mask or ())
    num: dict[int, float] = {}
    den: dict[int, float] = {}
    for r in rec.regions:
        c = assign_class(r)
        if c in masked:
            continue
        num[c] = num.get(c, 0.0) + r.weight * entropy(r.prob, eps)
        den[c] = den.get(c, 0.0) + r.weight
    ln_c = math.log(rec.n_classes)
    return {c: min(1.0, max(0.0, num[c] / den[c] / ln_c)) for c in sorted(num)}


def class_weights(
    rec: PredictionRecord, class_mask: Sequence[int] | None = None
) -> dict[int, float]:
    """Summed region weight per assigned class; the annotation cost proxy."""
    masked = set(class_mask or ())
    out: dict[int, float] = {}
    for r in rec.regions:
        c = assign_class(r)
        if c not in masked:
            out[c] = out.get(c, 0.0) + r.weight
    return dict(sorted(out.items()))


def build_anchors(training_sigs: Sequence[ContextSignature]) -> AnchorSet:
    """Mass-weighted mean mixture per class over the training set."""
    if not training_sigs:
        raise EmptyTrainingSet("anchors need at least one training signature")
    C = training_sigs[0].n_classes
    sums: dict[int, np.ndarray] = {}
    mass: dict[int, float] = {}
    count: dict[int, int] = {}
    for sig in training_sigs:
        for c, cm in sig.per_class.items():
            if c not in sums:
                sums[c] = np.zeros(C)
                mass[c] = 0.0
                count[c] = 0
            sums[c] += cm.mass * cm.mixture
            mass[c] += cm.mass
            count[c] += cm.count
    return AnchorSet({c: ClassMixture(sums[c] / mass[c], mass[c], count[c]) for c in sorted(sums)})


def score_anchor(
    sig: ContextSignature,
    hardness: Mapping[int, float],
    anchors: AnchorSet,
    alpha: float = DEFAULT_ALPHA,
    eps: float = DEFAULT_EPS,
    d_max: float | None = None,
) -> dict[int, float]:
    """alpha * hardness + (1 - alpha) * anchor distance / d_max, per frame class.

    A class with no anchor gets the full distance term.
    """
    if not 0.0 <= alpha <= 1.0:
        raise BadAlpha(f"alpha must lie in [0, 1], got {alpha!r}")
    if d_max is None:
        d_max = default_d_max(eps)
    scores = {}
    for c, cm in sig.per_class.items():
        if c in anchors.per_class:
            dist = min(d_max, sym_kl(cm.mixture, anchors.per_class[c].mixture, eps))
        else:
            dist = d_max
        scores[c] = alpha * hardness.get(c, 0.0) + (1.0 - alpha) * (dist / d_max)
    return scores


def score_augmentation(
    views: Sequence[PredictionRecord],
    eps: float = DEFAULT_EPS,
    class_mask: Sequence[int] | None = None,
) -> dict[int, float]:
    """Cross-view instability per class.

    Classes found in at least two views score the mean pairwise JS divergence
    of their mixtures over those views, divided by ln 2. A class found in only
    one view scores 1.
    """
    if len(views) < 2:
        raise SingleView(f"augmentation scoring needs >= 2 views, got {len(views)}")
    sigs = [build_signature(v, class_mask) for v in views]
    classes = sorted(set().union(*(s.per_class for s in sigs)))
    scores = {}
    for c in classes:
        mixes = [s.per_class[c].mixture for s in sigs if c in s.per_class]
        if len(mixes) < 2:
            scores[c] = 1.0
            continue
        # sorted before summing so view order cannot change the result
        vals = sorted(js(a, b, eps) for a, b in itertools.combinations(mixes, 2))
        scores[c] = min(1.0, math.fsum(vals) / len(vals) / LN2)
    return scores


def combine_mean(*score_maps: Mapping[int, float]) -> dict[int, float]:
    """Experimental: per-class mean of several score maps (missing entries count as 1)."""
    classes = sorted(set().union(*score_maps))
    return {c: sum(m.get(c, 1.0) for m in score_maps) / len(score_maps) for c in classes}


def recommend(
    frames: Sequence[FrameScores], budget_weight: float, per_frame_max: int = 1
) -> list[RegionRecommendation]:
    """Greedy over all (frame, class) pairs by score, within weight and per-frame caps.

    Pairs that would overflow either cap are skipped, not terminal; a cheaper
    pair further down can still fit.
    """
    if not budget_weight > 0:
        raise BadBudget(f"budget_weight must be > 0, got {budget_weight!r}")
    if per_frame_max < 1:
        raise BadBudget(f"per_frame_max must be >= 1, got {per_frame_max!r}")
    pairs = [
        (f.item_id, c, s, f.est_weights.get(c, 0.0))
        for f in frames
        for c, s in f.scores.items()
    ]
    pairs.sort(key=lambda t: (-t[2], t[0], t[1]))
    used = 0.0
    per_frame: dict[str, int] = {}
    out: list[RegionRecommendation] = []
    for item_id, c, s, w in pairs:
        if used + w > budget_weight or per_frame.get(item_id, 0) >= per_frame_max:
            continue
        used += w
        per_frame[item_id] = per_frame.get(item_id, 0) + 1
        out.append(RegionRecommendation(item_id, c, s, w))
    return out


def summarize(recs: Sequence[RegionRecommendation]) -> dict:
    return {
        "n_recommendations": len(recs),
        "total_weight": math.fsum(r.est_weight for r in recs),
        "frames_touched": len({r.item_id for r in recs}),
    }
