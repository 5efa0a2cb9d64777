"""Probability and dispersion kernels. All information quantities are in nats."""

from __future__ import annotations

import math

import numpy as np

from .errors import BadEpsilon, EmptyInput, LengthMismatch

DEFAULT_EPS = 1e-6
LN2 = math.log(2.0)


def default_d_max(eps: float = DEFAULT_EPS) -> float:
    """Distance assigned to items with no shared context: ln(1/eps)."""
    return math.log(1.0 / eps)


def smooth_rows(P, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Row-wise :func:`smooth` on a 2-D array."""
    P = np.array(P, dtype=float, ndmin=2)
    C = P.shape[-1]
    if not 0.0 < eps < 1.0 / C:
        raise BadEpsilon(f"eps must lie in (0, 1/C) = (0, {1.0 / C:g}), got {eps!r}")
    clamped = P < eps
    out = P
    # Each pass can only grow the clamped set, so C passes always suffice.
    for _ in range(C):
        free = 1.0 - eps * clamped.sum(axis=1, keepdims=True)
        rest = np.where(clamped, 0.0, P).sum(axis=1, keepdims=True)
        out = np.where(clamped, eps, P * (free / rest))
        grown = clamped | (out < eps)
        if np.array_equal(grown, clamped):
            break
        clamped = grown
    return out


def smooth(p, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Floor every entry at ``eps`` and renormalize.

    Entries below ``eps`` are set to ``eps``; the remaining entries are scaled
    by a common factor so the vector sums to one. Vectors already at or above
    the floor are only renormalized, so interior points pass through unchanged
    and the argmax is never moved.
    """
    return smooth_rows(p, eps)[0]


def _pair(p, q, eps):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise LengthMismatch(f"length {p.shape[-1]} vs {q.shape[-1]}")
    return smooth(p, eps), smooth(q, eps)


def entropy(p, eps: float = DEFAULT_EPS) -> float:
    ps = smooth(p, eps)
    return max(0.0, float(-(ps * np.log(ps)).sum()))


def normalized_entropy(p, eps: float = DEFAULT_EPS) -> float:
    """Entropy divided by ln C, clipped to [0, 1]."""
    return min(1.0, entropy(p, eps) / math.log(len(p)))


def kl(p, q, eps: float = DEFAULT_EPS) -> float:
    ps, qs = _pair(p, q, eps)
    return max(0.0, float((ps * (np.log(ps) - np.log(qs))).sum()))


def sym_kl(p, q, eps: float = DEFAULT_EPS) -> float:
    """0.5 * (KL(p||q) + KL(q||p)), evaluated as 0.5 * sum((p - q) * (ln p - ln q)).

    The single-sum form is exactly symmetric in floating point and is the same
    expression the vectorized distance matrix uses.
    """
    ps, qs = _pair(p, q, eps)
    return float(0.5 * ((ps - qs) * (np.log(ps) - np.log(qs))).sum())


def js(p, q, eps: float = DEFAULT_EPS) -> float:
    """Jensen-Shannon divergence, in [0, ln 2]."""
    ps, qs = _pair(p, q, eps)
    m = 0.5 * (ps + qs)
    lm = np.log(m)
    val = 0.5 * float((ps * (np.log(ps) - lm)).sum()) + 0.5 * float((qs * (np.log(qs) - lm)).sum())
    return min(LN2, max(0.0, val))


def coefficient_of_variation(v) -> float:
    """Population std over mean; 0 for an all-zero vector."""
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise EmptyInput("coefficient_of_variation of an empty sequence")
    mean = v.mean()
    if mean == 0.0:
        return 0.0
    return float(v.std() / mean)


def cv_rows(M) -> np.ndarray:
    """Coefficient of variation along the last axis; 0 where the mean is 0."""
    M = np.asarray(M, dtype=float)
    mean = M.mean(axis=-1)
    std = M.std(axis=-1)
    safe = np.where(mean == 0.0, 1.0, mean)
    return np.where(mean == 0.0, 0.0, std / safe)
