"""On-disk data model: prediction records, label records, group tables.

All three are JSON-lines, one record per line, UTF-8::

    {"item_id": "a", "view_id": 0, "cluster": "k1", "regions": [{"w": 1.0, "p": [0.5, 0.5]}]}
    {"item_id": "a", "group": "g1", "class_counts": {"hat": 1}}
    {"item_id": "a", "group": "g1"}

Unknown keys are rejected unless ``strict=False``. Detection-style per-box
confidence has no field of its own; it is expected to be folded into ``p``.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Sequence, Union

from .errors import DuplicateKey, InvariantViolation, MalformedLine

SUM_TOL = 1e-6

Stream = Union[str, bytes, IO[str], IO[bytes], Iterable[str]]

_PRED_KEYS = {"item_id", "view_id", "cluster", "regions"}
_REGION_KEYS = {"w", "p"}
_LABEL_KEYS = {"item_id", "group", "class_counts"}
_GROUP_KEYS = {"item_id", "group"}


@dataclass(frozen=True)
class Region:
    weight: float
    prob: tuple[float, ...]


@dataclass(frozen=True)
class PredictionRecord:
    item_id: str
    regions: tuple[Region, ...]
    view_id: int | None = None
    cluster: str | None = None

    @property
    def n_classes(self) -> int:
        return len(self.regions[0].prob)

    @property
    def key(self) -> tuple[str, int]:
        return (self.item_id, self.view_id or 0)


@dataclass(frozen=True)
class LabelRecord:
    item_id: str
    class_counts: dict[str, int]
    group: str | None = None


def _lines(stream: Stream) -> Iterator[tuple[int, str]]:
    if isinstance(stream, bytes):
        stream = io.BytesIO(stream)
    elif isinstance(stream, str):
        stream = io.StringIO(stream)
    for lineno, raw in enumerate(stream, 1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError as e:
                raise MalformedLine(f"invalid UTF-8 ({e.reason})", lineno) from None
        if raw.strip():
            yield lineno, raw


class _RepeatedName(Exception):
    pass


def _unique_pairs(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise _RepeatedName(k)
        out[k] = v
    return out


def _load(raw: str, lineno: int) -> dict:
    try:
        obj = json.loads(raw, object_pairs_hook=_unique_pairs)
    except json.JSONDecodeError as e:
        raise MalformedLine(f"invalid JSON: {e.msg} (col {e.colno})", lineno) from None
    except _RepeatedName as e:
        raise DuplicateKey(f"JSON member {e.args[0]!r} appears twice", lineno) from None
    if not isinstance(obj, dict):
        raise MalformedLine("record must be a JSON object", lineno)
    return obj


def _check_keys(obj: dict, allowed: set, lineno: int, strict: bool, where: str = "record"):
    if strict:
        extra = sorted(set(obj) - allowed)
        if extra:
            raise MalformedLine(f"unknown key(s) in {where}: {', '.join(extra)}", lineno)


def _is_real(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _item_id(obj: dict, lineno: int) -> str:
    item_id = obj.get("item_id")
    if not isinstance(item_id, str) or not item_id:
        raise MalformedLine("field 'item_id' must be a non-empty string", lineno)
    return item_id


def _optional_str(obj: dict, key: str, lineno: int) -> str | None:
    val = obj.get(key)
    if val is not None and not isinstance(val, str):
        raise MalformedLine(f"field '{key}' must be a string", lineno)
    return val


def _region(obj, lineno: int, idx: int, strict: bool, n_classes: int | None) -> Region:
    where = f"regions[{idx}]"
    if not isinstance(obj, dict):
        raise MalformedLine(f"{where} must be an object", lineno)
    _check_keys(obj, _REGION_KEYS, lineno, strict, where)
    if "w" not in obj or "p" not in obj:
        raise MalformedLine(f"{where} requires fields 'w' and 'p'", lineno)
    w, p = obj["w"], obj["p"]
    if not _is_real(w):
        raise MalformedLine(f"{where}.w must be a finite number", lineno)
    if w <= 0:
        raise InvariantViolation(f"{where}.w must be > 0, got {w!r}", lineno)
    if not isinstance(p, list) or not all(_is_real(x) for x in p):
        raise MalformedLine(f"{where}.p must be a list of finite numbers", lineno)
    if len(p) < 2:
        raise InvariantViolation(f"{where}.p needs at least 2 classes, got {len(p)}", lineno)
    if n_classes is not None and len(p) != n_classes:
        raise InvariantViolation(
            f"{where}.p has length {len(p)}, dataset class count is {n_classes}", lineno
        )
    if any(x < 0 for x in p):
        raise InvariantViolation(f"{where}.p has a negative entry", lineno)
    total = math.fsum(p)
    if abs(total - 1.0) > SUM_TOL:
        raise InvariantViolation(f"{where}.p sums to {total!r}, expected 1 within {SUM_TOL}", lineno)
    return Region(float(w), tuple(float(x) for x in p))


def parse_predictions(
    stream: Stream, n_classes: int | None = None, strict: bool = True
) -> list[PredictionRecord]:
    """Parse and validate a prediction JSONL stream.

    The class count is taken from ``n_classes`` when given, else from the
    first record, and enforced on every region after that.
    """
    records: list[PredictionRecord] = []
    seen: dict[tuple[str, int], int] = {}
    for lineno, raw in _lines(stream):
        obj = _load(raw, lineno)
        _check_keys(obj, _PRED_KEYS, lineno, strict)
        item_id = _item_id(obj, lineno)
        view_id = obj.get("view_id")
        if view_id is not None and (
            not isinstance(view_id, int) or isinstance(view_id, bool) or view_id < 0
        ):
            raise MalformedLine("field 'view_id' must be a non-negative integer", lineno)
        cluster = _optional_str(obj, "cluster", lineno)
        regions = obj.get("regions")
        if not isinstance(regions, list):
            raise MalformedLine("field 'regions' must be a list", lineno)
        if not regions:
            raise InvariantViolation("'regions' is empty", lineno)
        parsed = []
        for idx, r in enumerate(regions):
            region = _region(r, lineno, idx, strict, n_classes)
            n_classes = len(region.prob)
            parsed.append(region)
        rec = PredictionRecord(item_id, tuple(parsed), view_id, cluster)
        if rec.key in seen:
            raise DuplicateKey(
                f"duplicate (item_id, view_id) = {rec.key!r}, first seen on line {seen[rec.key]}",
                lineno,
            )
        seen[rec.key] = lineno
        records.append(rec)
    return records


def parse_labels(stream: Stream, strict: bool = True) -> list[LabelRecord]:
    records: list[LabelRecord] = []
    seen: dict[str, int] = {}
    for lineno, raw in _lines(stream):
        obj = _load(raw, lineno)
        _check_keys(obj, _LABEL_KEYS, lineno, strict)
        item_id = _item_id(obj, lineno)
        group = _optional_str(obj, "group", lineno)
        counts = obj.get("class_counts")
        if not isinstance(counts, dict):
            raise MalformedLine("field 'class_counts' must be an object", lineno)
        for name, n in counts.items():
            if not isinstance(n, int) or isinstance(n, bool):
                raise MalformedLine(f"class_counts[{name!r}] must be an integer", lineno)
            if n < 0:
                raise InvariantViolation(f"class_counts[{name!r}] is negative", lineno)
        if not any(n > 0 for n in counts.values()):
            raise InvariantViolation("class_counts has no positive entry", lineno)
        if item_id in seen:
            raise DuplicateKey(
                f"duplicate item_id {item_id!r}, first seen on line {seen[item_id]}", lineno
            )
        seen[item_id] = lineno
        records.append(LabelRecord(item_id, dict(counts), group))
    return records


def parse_groups(stream: Stream, strict: bool = True) -> dict[str, str]:
    """Parse a group side table into ``{item_id: group}``."""
    table: dict[str, str] = {}
    lines: dict[str, int] = {}
    for lineno, raw in _lines(stream):
        obj = _load(raw, lineno)
        _check_keys(obj, _GROUP_KEYS, lineno, strict)
        item_id = _item_id(obj, lineno)
        group = obj.get("group")
        if not isinstance(group, str):
            raise MalformedLine("field 'group' must be a string", lineno)
        if item_id in table:
            raise DuplicateKey(
                f"duplicate item_id {item_id!r}, first seen on line {lines[item_id]}", lineno
            )
        table[item_id] = group
        lines[item_id] = lineno
    return table


def class_vocabulary(labels: Sequence[LabelRecord]) -> list[str]:
    """Class names in first-seen order."""
    seen: dict[str, None] = {}
    for rec in labels:
        for name in rec.class_counts:
            seen.setdefault(name, None)
    return list(seen)


def _dump(obj) -> str:
    # repr-based float output is the shortest exact round-trip form
    return json.dumps(obj, ensure_ascii=False, separators=(", ", ": "), allow_nan=False) + "\n"


def prediction_to_dict(rec: PredictionRecord) -> dict:
    obj: dict = {"item_id": rec.item_id}
    if rec.view_id is not None:
        obj["view_id"] = rec.view_id
    if rec.cluster is not None:
        obj["cluster"] = rec.cluster
    obj["regions"] = [{"w": float(r.weight), "p": [float(x) for x in r.prob]} for r in rec.regions]
    return obj


def label_to_dict(rec: LabelRecord) -> dict:
    obj: dict = {"item_id": rec.item_id}
    if rec.group is not None:
        obj["group"] = rec.group
    obj["class_counts"] = dict(rec.class_counts)
    return obj


def write_predictions(records: Iterable[PredictionRecord], stream: IO[str] | None = None) -> str:
    """Serialize records to JSONL; also writes to ``stream`` when given."""
    text = "".join(_dump(prediction_to_dict(r)) for r in records)
    if stream is not None:
        stream.write(text)
    return text


def write_labels(records: Iterable[LabelRecord], stream: IO[str] | None = None) -> str:
    text = "".join(_dump(label_to_dict(r)) for r in records)
    if stream is not None:
        stream.write(text)
    return text
