import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curator.errors import BadBudget, BadTarget, EmptyInput, MissingGroupTable, NoGroupedItems
from curator.fairness import (
    brute_force_remove,
    cooccurrence,
    fairness_objective,
    repair_add,
    repair_add_proxy,
    repair_remove,
    signature_labels,
)
from curator.records import LabelRecord
from curator.signature import build_signature

from conftest import rec


def L(item_id, group, **counts):
    return LabelRecord(item_id, counts, group)


def objective_by_hand(labels):
    """Independent objective: dict arithmetic, statistics by definition."""
    groups = sorted({r.group for r in labels if r.group is not None})
    classes = sorted({c for r in labels for c in r.class_counts})
    cvs = []
    for c in classes:
        v = [sum(r.class_counts.get(c, 0) for r in labels if r.group == g) for g in groups]
        if sum(v) > 0:
            mean = sum(v) / len(v)
            std = (sum((x - mean) ** 2 for x in v) / len(v)) ** 0.5
            cvs.append(std / mean)
    return sum(cvs) / len(cvs) if cvs else 0.0


HATS = [L("a", "g1", hat=1), L("b", "g1", hat=1), L("c", "g2", hat=1)]


def test_cooccurrence_examples():
    m = cooccurrence(HATS)
    assert m.as_dict() == {"hat": {"g1": 2, "g2": 1}}
    assert cooccurrence([L("x", "g", hat=2, cup=1)]).as_dict() == {"hat": {"g": 2}, "cup": {"g": 1}}
    with pytest.raises(NoGroupedItems):
        cooccurrence([L("x", None, hat=1)])


def test_cooccurrence_ignores_ungrouped(caplog):
    with caplog.at_level(logging.WARNING):
        m = cooccurrence(HATS + [L("d", None, hat=5)])
    assert m.as_dict() == {"hat": {"g1": 2, "g2": 1}}
    assert "1 item(s)" in caplog.text


def test_cooccurrence_total_conservation(rng):
    labels = [L(f"i{k}", f"g{rng.integers(3)}", **{f"c{j}": int(rng.integers(0, 3)) + (j == 0) for j in range(4)}) for k in range(30)]
    m = cooccurrence(labels)
    assert m.counts.sum() == sum(sum(r.class_counts.values()) for r in labels)


def test_objective_examples():
    assert fairness_objective(cooccurrence(HATS)) == pytest.approx(1 / 3, abs=1e-12)
    assert fairness_objective(cooccurrence([L("a", "g1", hat=2), L("b", "g2", hat=2)])) == 0.0
    two = [L("a", "g1", hat=1, cup=1), L("b", "g2", hat=3, cup=1)]
    assert fairness_objective(cooccurrence(two)) == pytest.approx(0.25, abs=1e-12)


def test_objective_skips_zero_total_classes():
    m = cooccurrence([L("a", "g1", hat=1, cup=0), L("b", "g2", hat=1)])
    assert fairness_objective(m) == 0.0


def test_repair_remove_example():
    r = repair_remove(HATS, 2)
    assert r.removed == ["a"]
    assert r.kept == ["b", "c"]
    assert r.final_objective == 0.0
    assert r.objective_trace == [0.0]
    assert r.initial_objective == pytest.approx(1 / 3)


def test_repair_remove_identity_and_balanced():
    r = repair_remove(HATS, 3)
    assert r.kept == ["a", "b", "c"] and r.objective_trace == []
    assert r.final_objective == pytest.approx(1 / 3)
    bal = [L(f"i{k}", f"g{k % 2}", hat=1) for k in range(8)]
    r = repair_remove(bal, 4)
    # one removal from a 4/4 split cannot stay balanced; every second one restores 0
    assert r.objective_trace[1::2] == [0.0, 0.0]
    assert r.objective_trace[0] == pytest.approx(1 / 7)


def test_repair_remove_bad_target():
    for t in (0, 4, -1):
        with pytest.raises(BadTarget):
            repair_remove(HATS, t)


def test_repair_remove_keeps_input_order(rng):
    labels = [L(f"z{99 - k}", f"g{rng.integers(2)}", hat=int(rng.integers(1, 4))) for k in range(12)]
    r = repair_remove(labels, 7)
    order = [x.item_id for x in labels]
    assert r.kept == [i for i in order if i in set(r.kept)]


def _random_labels(rng, n, n_classes=3, n_groups=2):
    out = []
    for k in range(n):
        counts = {f"c{j}": int(rng.integers(0, 3)) for j in range(n_classes)}
        counts[f"c{rng.integers(n_classes)}"] += 1
        out.append(L(f"i{k:02d}", f"g{rng.integers(n_groups)}", **counts))
    return out


def test_each_step_is_best_single_move(rng):
    labels = _random_labels(rng, 14)
    r = repair_remove(labels, 6)
    alive = list(labels)
    for removed, obj in zip(r.removed, r.objective_trace):
        cands = {x.item_id: objective_by_hand([y for y in alive if y is not x]) for x in alive}
        best = min(cands.values())
        assert obj == pytest.approx(best, abs=1e-12)
        assert cands[removed] == pytest.approx(best, abs=1e-12)
        assert removed == min(i for i, v in cands.items() if v <= best + 1e-12)
        alive = [y for y in alive if y.item_id != removed]


def test_greedy_never_beats_brute_force(rng):
    for _ in range(5):
        labels = _random_labels(rng, 9)
        r = repair_remove(labels, 6)
        best, keep = brute_force_remove(labels, 6)
        assert best <= r.final_objective + 1e-12
        assert objective_by_hand([x for x in labels if x.item_id in keep]) == pytest.approx(best, abs=1e-12)


def test_group_permutation_equivariance(rng):
    labels = _random_labels(rng, 20, n_groups=3)
    rename = {"g0": "g2", "g1": "g0", "g2": "g1"}
    renamed = [L(x.item_id, rename[x.group], **x.class_counts) for x in labels]
    a, b = repair_remove(labels, 12), repair_remove(renamed, 12)
    assert a.final_objective == pytest.approx(b.final_objective, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4))
def test_duplication_keeps_full_set_objective(seed, k):
    labels = _random_labels(np.random.default_rng(seed), 8)
    dup = [L(f"{x.item_id}_{j}", x.group, **x.class_counts) for j in range(k) for x in labels]
    assert fairness_objective(cooccurrence(dup)) == pytest.approx(fairness_objective(cooccurrence(labels)), abs=1e-12)


def test_objective_matches_hand_oracle(rng):
    for _ in range(10):
        labels = _random_labels(rng, 10, n_groups=3)
        assert fairness_objective(cooccurrence(labels)) == pytest.approx(objective_by_hand(labels), abs=1e-12)


def test_repair_add_example():
    r = repair_add([L("a", "g1", hat=1)], [L("b", "g1", hat=1), L("c", "g2", hat=1)], 1)
    assert r.added == ["c"]
    assert r.final_objective == 0.0
    assert r.kept == ["a", "c"]


def test_repair_add_identical_pool_and_exhaustion():
    pool = [L(f"p{k}", "g1", hat=1) for k in range(5)]
    assert repair_add([L("a", "g2", hat=1)], pool, 2).added == ["p0", "p1"]
    r = repair_add([], pool, 10)
    assert sorted(r.added) == sorted(p.item_id for p in pool)


def test_repair_add_each_step_best(rng):
    current = _random_labels(rng, 5)
    pool = [L(f"p{k:02d}", x.group, **x.class_counts) for k, x in enumerate(_random_labels(rng, 10))]
    r = repair_add(current, pool, 4)
    have = list(current)
    for added, obj in zip(r.added, r.objective_trace):
        left = [p for p in pool if p not in have]
        cands = {p.item_id: objective_by_hand(have + [p]) for p in left}
        assert obj == pytest.approx(min(cands.values()), abs=1e-12)
        assert cands[added] == pytest.approx(obj, abs=1e-12)
        have.append(next(p for p in pool if p.item_id == added))


def test_repair_add_errors():
    with pytest.raises(BadBudget):
        repair_add([], [L("a", "g", hat=1)], 0)
    with pytest.raises(EmptyInput):
        repair_add([], [], 1)


def test_proxy_reduces_to_labeled_case():
    preds = [
        rec("a", (1, [0.9, 0.1]), (1, [0.2, 0.8])),
        rec("b", (1, [0.9, 0.1])),
        rec("c", (1, [0.7, 0.3]), (2, [0.6, 0.4])),
        rec("d", (1, [0.1, 0.9])),
    ]
    groups = {"a": "g1", "b": "g1", "c": "g2", "d": "g2"}
    sigs = [build_signature(p) for p in preds]
    proxy = repair_add_proxy(sigs[:1], sigs[1:], 2, groups)
    true = [
        L("a", "g1", c0=1, c1=1),
        L("b", "g1", c0=1),
        L("c", "g2", c0=2),
        L("d", "g2", c1=1),
    ]
    labeled = repair_add(true[:1], true[1:], 2)
    assert proxy.added == labeled.added
    assert proxy.objective_trace == labeled.objective_trace


def test_proxy_counts_and_errors():
    s = build_signature(rec("a", (1, [0.9, 0.1]), (1, [0.8, 0.2])))
    (lab,) = signature_labels([s], {"a": "g"})
    assert lab.class_counts == {"c0": 2}
    assert "c1" not in lab.class_counts
    with pytest.raises(MissingGroupTable):
        repair_add_proxy([], [s], 1, None)
    with pytest.raises(MissingGroupTable):
        repair_add_proxy([], [s], 1, {"zz": "g"})


def test_report_dict():
    d = repair_remove(HATS, 2).to_dict("remove")
    assert list(d) == ["kept", "removed", "objective_trace", "initial_objective", "final_objective"]
    d = repair_add(HATS[:1], HATS[1:], 1).to_dict("add")
    assert "added" in d and "removed" not in d
