"""Categorical schema, bit-level transaction encoding, CSV ingestion and splits.

Items are numbered globally: attribute ``h`` owns the contiguous block
``offsets[h] .. offsets[h] + q_h - 1``, so sorting item ids ascending also
sorts them by attribute. An itemset is a sorted tuple of item ids with at
most one item per attribute.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

Itemset = tuple[int, ...]


class DataError(ValueError):
    """Raised for malformed or inconsistent input data."""


class Item(NamedTuple):
    attribute_index: int
    level_index: int


@dataclass(frozen=True)
class Attribute:
    name: str
    levels: tuple[str, ...]

    @property
    def level_count(self) -> int:
        return len(self.levels)


@dataclass(frozen=True)
class AttributeSchema:
    attributes: tuple[Attribute, ...]
    class_column: str | None = None
    positive_label: str | None = None
    negative_label: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(
            a if isinstance(a, Attribute) else Attribute(a[0], tuple(a[1]))
            for a in self.attributes))
        if not self.attributes:
            raise DataError("schema has no attributes")
        seen = set()
        for attr in self.attributes:
            if not attr.name:
                raise DataError("attribute names must be non-empty")
            if attr.name in seen:
                raise DataError(f"duplicate attribute name {attr.name!r}")
            seen.add(attr.name)
            if attr.level_count < 2:
                raise DataError(f"degenerate attribute {attr.name!r}: fewer than 2 levels")
            if len(set(attr.levels)) != attr.level_count:
                raise DataError(f"attribute {attr.name!r} has duplicate level names")

    @property
    def m(self) -> int:
        return len(self.attributes)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        out, acc = [], 0
        for attr in self.attributes:
            out.append(acc)
            acc += attr.level_count
        return tuple(out)

    @property
    def n_items(self) -> int:
        return self.offsets[-1] + self.attributes[-1].level_count

    @cached_property
    def item_attribute(self) -> np.ndarray:
        """Attribute index of every item id."""
        return np.repeat(np.arange(self.m), [a.level_count for a in self.attributes])

    @cached_property
    def _name_index(self) -> dict[str, int]:
        return {a.name: h for h, a in enumerate(self.attributes)}

    def attribute_index(self, name: str) -> int:
        try:
            return self._name_index[name]
        except KeyError:
            raise DataError(f"unknown attribute {name!r}") from None

    def item_id(self, attribute_index: int, level_index: int) -> int:
        if not 0 <= attribute_index < self.m:
            raise DataError(f"attribute index {attribute_index} out of range")
        if not 0 <= level_index < self.attributes[attribute_index].level_count:
            raise DataError(f"level index {level_index} out of range for "
                            f"{self.attributes[attribute_index].name!r}")
        return self.offsets[attribute_index] + level_index

    def item(self, item_id: int) -> Item:
        h = int(self.item_attribute[item_id])
        return Item(h, item_id - self.offsets[h])

    def item_names(self, item_id: int) -> tuple[str, str]:
        h, j = self.item(item_id)
        attr = self.attributes[h]
        return attr.name, attr.levels[j]

    def item_from_names(self, name: str, level: str) -> int:
        h = self.attribute_index(name)
        try:
            j = self.attributes[h].levels.index(level)
        except ValueError:
            raise DataError(f"unknown level {level!r} for attribute {name!r}") from None
        return self.offsets[h] + j

    def itemset(self, items: Iterable) -> Itemset:
        """Build a canonical itemset from item ids, ``Item`` pairs or (name, level) pairs."""
        ids = []
        for it in items:
            if isinstance(it, Item):
                ids.append(self.item_id(*it))
            elif isinstance(it, (tuple, list)) and len(it) == 2 and isinstance(it[0], str):
                ids.append(self.item_from_names(it[0], it[1]))
            else:
                i = int(it)
                if not 0 <= i < self.n_items:
                    raise DataError(f"item id {i} out of range")
                ids.append(i)
        ids.sort()
        if not ids:
            raise DataError("itemset must be non-empty")
        attrs = [int(self.item_attribute[i]) for i in ids]
        if len(set(attrs)) != len(attrs):
            raise DataError("itemset contains two levels of one attribute")
        return tuple(ids)

    def describe(self, itemset: Itemset) -> list[tuple[str, str]]:
        return [self.item_names(i) for i in itemset]

    def to_dict(self) -> dict:
        return {
            "attributes": {a.name: list(a.levels) for a in self.attributes},
            "class_column": self.class_column,
            "positive_label": self.positive_label,
            "negative_label": self.negative_label,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AttributeSchema":
        attrs = d["attributes"]
        if isinstance(attrs, dict):
            attrs = [Attribute(k, tuple(v)) for k, v in attrs.items()]
        else:
            attrs = [Attribute(a["name"], tuple(a["levels"])) for a in attrs]
        return cls(tuple(attrs), d.get("class_column"), d.get("positive_label"),
                   d.get("negative_label"))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, ensure_ascii=False)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "AttributeSchema":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _pack_rows(bits: np.ndarray) -> np.ndarray:
    """Pack a boolean (rows, n) matrix into (rows, ceil(n/64)) uint64 words.

    Bit ``i % 64`` of word ``i // 64`` holds column ``i``.
    """
    bits = np.atleast_2d(np.asarray(bits, dtype=bool))
    rows, n = bits.shape
    n_words = max(1, -(-n // 64))
    padded = np.zeros((rows, n_words * 64), dtype=bool)
    padded[:, :n] = bits
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False)


def unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    words = np.ascontiguousarray(words, dtype=np.uint64)
    as_bytes = words.astype("<u8", copy=False).view(np.uint8)
    return np.unpackbits(as_bytes, axis=-1, bitorder="little", count=n).astype(bool)


class TransactionSet:
    """Immutable encoded dataset.

    ``item_columns[i]`` is the packed bit row of item ``i`` over all
    transactions; ``labels`` is the packed target-class row.
    """

    def __init__(self, schema: AttributeSchema, codes, labels):
        codes = np.array(codes, dtype=np.int64).reshape(-1, schema.m)
        labels = np.array(labels, dtype=bool).reshape(-1)
        if codes.shape[0] != labels.shape[0]:
            raise DataError("codes and labels disagree on transaction count")
        q = np.array([a.level_count for a in schema.attributes])
        if codes.size and ((codes < 0).any() or (codes >= q).any()):
            raise DataError("level code out of range for schema")
        self.schema = schema
        self.codes = codes
        self.label_array = labels
        self.n = int(codes.shape[0])
        self.n_pos = int(labels.sum())
        self.n_neg = self.n - self.n_pos
        onehot = np.zeros((schema.n_items, self.n), dtype=bool)
        if self.n:
            ids = codes + np.asarray(schema.offsets)
            onehot[ids.T, np.arange(self.n)] = True
        self.item_columns = _pack_rows(onehot)
        self.labels = _pack_rows(labels)[0]
        for arr in (self.codes, self.label_array, self.item_columns, self.labels):
            arr.setflags(write=False)

    @property
    def n_words(self) -> int:
        return self.item_columns.shape[1]

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return (f"TransactionSet(n={self.n}, n_pos={self.n_pos}, m={self.schema.m}, "
                f"items={self.schema.n_items})")

    @classmethod
    def from_records(cls, schema: AttributeSchema, records: Sequence[Sequence[str]],
                     labels: Sequence) -> "TransactionSet":
        """Encode rows of level names (one per attribute, schema order)."""
        index = [{lv: j for j, lv in enumerate(a.levels)} for a in schema.attributes]
        codes = np.zeros((len(records), schema.m), dtype=np.int64)
        for r, rec in enumerate(records):
            if len(rec) != schema.m:
                raise DataError(f"row {r}: expected {schema.m} values, got {len(rec)}")
            for h, value in enumerate(rec):
                try:
                    codes[r, h] = index[h][value]
                except KeyError:
                    raise DataError(f"row {r}, column {schema.attributes[h].name!r}: "
                                    f"unknown level {value!r}") from None
        return cls(schema, codes, labels)

    def subset(self, indices) -> "TransactionSet":
        idx = np.asarray(indices, dtype=np.int64)
        return TransactionSet(self.schema, self.codes[idx], self.label_array[idx])

    def item_matrix(self) -> np.ndarray:
        """Dense boolean (n, n_items) view, one row per transaction."""
        return unpack_bits(self.item_columns, self.n).T

    def decode(self) -> list[list[str]]:
        levels = [a.levels for a in self.schema.attributes]
        return [[levels[h][j] for h, j in enumerate(row)] for row in self.codes.tolist()]

    @cached_property
    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(json.dumps(self.schema.to_dict(), sort_keys=True).encode())
        h.update(np.ascontiguousarray(self.codes, dtype="<i8").tobytes())
        h.update(np.packbits(self.label_array).tobytes())
        h.update(str(self.n).encode())
        return h.hexdigest()[:16]

    def to_csv(self, path_or_buf) -> None:
        schema = self.schema
        class_col = schema.class_column or "class"
        pos = schema.positive_label if schema.positive_label is not None else "1"
        neg = schema.negative_label if schema.negative_label is not None else "0"
        own = isinstance(path_or_buf, (str, os.PathLike))
        fh = open(path_or_buf, "w", encoding="utf-8", newline="") if own else path_or_buf
        try:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([a.name for a in schema.attributes] + [class_col])
            for row, y in zip(self.decode(), self.label_array.tolist()):
                writer.writerow(row + [pos if y else neg])
        finally:
            if own:
                fh.close()


def _read_csv(source) -> tuple[list[str], list[list[str]]]:
    if isinstance(source, (str, os.PathLike)):
        try:
            with open(source, encoding="utf-8", newline="") as fh:
                text = fh.read()
        except OSError as exc:
            raise DataError(f"cannot read {os.fspath(source)!r}: {exc.strerror}") from None
    else:
        text = source.read()
    text = text.removeprefix("\ufeff")
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise DataError("empty dataset")
    header = [h.strip() for h in rows[0]]
    return header, rows[1:]


def _clean(value: str, missing_level: str | None, where: str) -> str:
    value = value.strip()
    if value == "":
        if missing_level is None:
            raise DataError(f"{where}: missing value")
        return missing_level
    return value


def infer_schema(source, class_column: str, positive_label: str,
                 missing_level: str | None = None) -> AttributeSchema:
    """Infer an attribute schema from a CSV with a header row.

    Every column except ``class_column`` becomes a categorical attribute
    whose levels are listed in order of first appearance.
    """
    header, rows = _read_csv(source)
    if class_column not in header:
        raise DataError(f"class column {class_column!r} not found in header")
    if not rows:
        raise DataError("empty dataset")
    ci = header.index(class_column)
    levels: list[dict[str, None]] = [dict() for _ in header]
    negative = None
    for r, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise DataError(f"row {r}: expected {len(header)} values, got {len(row)}")
        for c, value in enumerate(row):
            if c == ci:
                y = value.strip()
                if negative is None and y != str(positive_label):
                    negative = y
                continue
            levels[c].setdefault(_clean(value, missing_level, f"row {r}, column {header[c]!r}"))
    attrs = []
    for c, name in enumerate(header):
        if c == ci:
            continue
        if len(levels[c]) < 2:
            raise DataError(f"degenerate attribute {name!r}: fewer than 2 distinct values")
        attrs.append(Attribute(name, tuple(levels[c])))
    return AttributeSchema(tuple(attrs), class_column, str(positive_label), negative)


def encode(source, schema: AttributeSchema, class_column: str | None = None,
           positive_label: str | None = None, missing_level: str | None = None) -> TransactionSet:
    class_column = class_column or schema.class_column
    positive_label = str(positive_label if positive_label is not None else schema.positive_label)
    if class_column is None or positive_label == "None":
        raise DataError("class column and positive label are required")
    header, rows = _read_csv(source)
    if class_column not in header:
        raise DataError(f"class column {class_column!r} not found in header")
    if not rows:
        raise DataError("empty dataset")
    cols = []
    for a in schema.attributes:
        if a.name not in header:
            raise DataError(f"schema mismatch: column {a.name!r} missing from data")
        cols.append(header.index(a.name))
    ci = header.index(class_column)
    index = [{lv: j for j, lv in enumerate(a.levels)} for a in schema.attributes]
    codes = np.zeros((len(rows), schema.m), dtype=np.int64)
    labels = np.zeros(len(rows), dtype=bool)
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(f"row {r + 1}: expected {len(header)} values, got {len(row)}")
        for h, c in enumerate(cols):
            where = f"row {r + 1}, column {header[c]!r}"
            value = _clean(row[c], missing_level, where)
            try:
                codes[r, h] = index[h][value]
            except KeyError:
                raise DataError(f"{where}: unknown level {value!r}") from None
        labels[r] = row[ci].strip() == positive_label
    return TransactionSet(schema, codes, labels)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.5
    validation_fraction: float = 0.25
    test_fraction: float = 0.25
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        fr = self.fractions
        if any(not 0.0 < f < 1.0 for f in fr):
            raise DataError(f"split fractions must lie in (0, 1), got {fr}")
        if abs(sum(fr) - 1.0) > 1e-9:
            raise DataError(f"split fractions must sum to 1, got {sum(fr)}")

    @property
    def fractions(self) -> tuple[float, float, float]:
        return (self.train_fraction, self.validation_fraction, self.test_fraction)

    @classmethod
    def parse(cls, text: str, seed: int = 0, stratified: bool = True) -> "SplitSpec":
        try:
            parts = [float(x) for x in text.split(",")]
        except ValueError:
            raise DataError(f"bad split {text!r}") from None
        if len(parts) != 3:
            raise DataError(f"split needs three fractions, got {text!r}")
        return cls(*parts, seed=seed, stratified=stratified)


def _allocate(count: int, fractions: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment of ``count`` items."""
    raw = [f * count for f in fractions]
    sizes = [int(np.floor(x)) for x in raw]
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - sizes[i]), i))
    for i in order[:count - sum(sizes)]:
        sizes[i] += 1
    return sizes


def split_indices(ts: TransactionSet, spec: SplitSpec) -> tuple[np.ndarray, ...]:
    if ts.n < 3:
        raise DataError(f"need at least 3 transactions to split, got {ts.n}")
    if spec.stratified and ts.n_pos < 3:
        raise DataError(f"too few positives for stratified split ({ts.n_pos})")
    rng = np.random.default_rng(spec.seed)
    groups = ([np.flatnonzero(ts.label_array), np.flatnonzero(~ts.label_array)]
              if spec.stratified else [np.arange(ts.n)])
    parts: list[list[np.ndarray]] = [[], [], []]
    for group in groups:
        perm = rng.permutation(group)
        lo = 0
        for p, size in enumerate(_allocate(len(perm), spec.fractions)):
            parts[p].append(perm[lo:lo + size])
            lo += size
    # dataset order inside each part is kept; Stage 2 depends on record order
    return tuple(np.sort(np.concatenate(p)) for p in parts)


def split(ts: TransactionSet, spec: SplitSpec) -> tuple[TransactionSet, TransactionSet, TransactionSet]:
    return tuple(ts.subset(idx) for idx in split_indices(ts, spec))
