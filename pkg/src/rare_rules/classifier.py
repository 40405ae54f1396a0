"""Disjunctive risk-pattern classifier: selection, prediction, evaluation, model choice."""
from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import _backend
from .dataset import AttributeSchema, DataError, Itemset, TransactionSet, unpack_bits
from .mining import MiningParams, count_pass, mine
from .pruning import PrunedFamily, stage1
from .stats import relative_risk

logger = logging.getLogger(__name__)

COVERAGE = "coverage"
PER_RECORD = "per_record"


@dataclass(frozen=True)
class Pattern:
    itemset: Itemset
    validated_rr: float


@dataclass
class Classifier:
    patterns: list[Pattern]
    schema: AttributeSchema | None = field(default=None, repr=False)
    params: MiningParams | None = None
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.patterns)

    @property
    def status(self) -> str:
        return "ok" if self.patterns else "empty"

    @property
    def itemsets(self) -> list[Itemset]:
        return [p.itemset for p in self.patterns]

    def to_dict(self) -> dict:
        schema = self.schema
        return {
            "schema": schema.to_dict() if schema is not None else None,
            "patterns": [
                {"items": [list(x) for x in schema.describe(p.itemset)] if schema else list(p.itemset),
                 "validated_rr": _rr_out(p.validated_rr)}
                for p in self.patterns
            ],
            "params": asdict(self.params) if self.params is not None else None,
            "provenance": self.provenance,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def from_dict(cls, d: dict) -> "Classifier":
        if not d.get("schema"):
            raise DataError("classifier file carries no schema")
        schema = AttributeSchema.from_dict(d["schema"])
        patterns = [Pattern(schema.itemset([tuple(x) for x in p["items"]]), _rr_in(p["validated_rr"]))
                    for p in d.get("patterns", [])]
        params = MiningParams(**d["params"]) if d.get("params") else None
        return cls(patterns, schema, params, d.get("provenance") or {})

    @classmethod
    def load(cls, path) -> "Classifier":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataError(f"cannot read classifier {os.fspath(path)!r}: {exc}") from None


def _rr_out(rr: float):
    return "inf" if math.isinf(rr) else rr


def _rr_in(v) -> float:
    return math.inf if v in ("inf", "Infinity") else float(v)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn


@dataclass
class PerformancePoint:
    sensitivity: float
    specificity: float
    global_error: float
    label: str = ""
    loc_supp: float | None = None
    min_conf: float | None = None
    max_lhs: int | None = None
    error: str | None = None

    @classmethod
    def from_confusion(cls, cm: ConfusionMatrix, label: str = "",
                       params: MiningParams | None = None) -> "PerformancePoint":
        pos, neg = cm.tp + cm.fn, cm.fp + cm.tn
        return cls(
            sensitivity=cm.tp / pos if pos else math.nan,
            specificity=cm.tn / neg if neg else math.nan,
            global_error=(cm.fp + cm.fn) / cm.total if cm.total else math.nan,
            label=label,
            loc_supp=params.min_local_support if params else None,
            min_conf=params.min_conf_ratio if params else None,
            max_lhs=params.max_length if params else None,
        )

    @property
    def valid(self) -> bool:
        return self.error is None and not (math.isnan(self.sensitivity) or math.isnan(self.specificity))


def _group_masks(ts: TransactionSet, itemsets: Sequence[Itemset]) -> np.ndarray:
    """Packed match rows, one per itemset, shape (len(itemsets), n_words)."""
    out = np.zeros((len(itemsets), ts.n_words), dtype=np.uint64)
    groups: dict[int, list[int]] = {}
    for i, s in enumerate(itemsets):
        groups.setdefault(len(s), []).append(i)
    for idxs in groups.values():
        mat = np.ascontiguousarray(np.array([itemsets[i] for i in idxs], dtype=np.int64))
        out[idxs] = _backend.kernels.pattern_masks(ts.item_columns, mat)
    return out


def _rank_key(p: Pattern):
    # inf sorts first, then shorter, then lexicographic items
    return (-p.validated_rr, len(p.itemset), p.itemset)


def select_representatives(family: PrunedFamily, validation: TransactionSet,
                           policy: str = COVERAGE) -> Classifier:
    """Stage 2: pick, per positive validation record, the matching pattern of highest validated RR.

    With the ``coverage`` policy a record already matched by a retained
    pattern contributes nothing; with ``per_record`` each record adds its
    best pattern not yet retained.
    """
    if policy not in (COVERAGE, PER_RECORD):
        raise ValueError(f"unknown selection policy {policy!r}")
    provenance = {"validation_fingerprint": validation.fingerprint,
                  "train_fingerprint": family.fingerprint,
                  "record_order": "dataset", "selection_policy": policy}
    clf = Classifier([], validation.schema, family.params, provenance)
    if not family.rules:
        return clf
    if validation.n_pos < 1:
        raise DataError("validation data has no positive records")
    counted = count_pass(validation, [r.antecedent for r in family.rules])
    candidates = []
    for r in counted:
        if r.supp_count >= validation.n:
            continue  # relative risk undefined on validation
        candidates.append(Pattern(r.antecedent,
                                  relative_risk(r.conf_count, r.supp_count, validation.n_pos, validation.n)))
    candidates.sort(key=_rank_key)
    if not candidates:
        return clf
    masks = _group_masks(validation, [p.itemset for p in candidates])
    pos_idx = np.flatnonzero(validation.label_array)
    match = unpack_bits(masks, validation.n)[:, pos_idx]  # (patterns, positive records)
    retained: list[int] = []
    chosen = np.zeros(len(candidates), dtype=bool)
    covered = np.zeros(len(pos_idx), dtype=bool)
    for j in range(len(pos_idx)):
        if policy == COVERAGE:
            if covered[j]:
                continue
            hits = np.flatnonzero(match[:, j])
        else:
            hits = np.flatnonzero(match[:, j] & ~chosen)
        if hits.size == 0:
            continue
        best = int(hits[0])
        retained.append(best)
        chosen[best] = True
        covered |= match[best]
    clf.patterns = [candidates[i] for i in retained]
    if not clf.patterns:
        logger.warning("no pattern of the family matches a positive validation record")
    return clf


def predict(c: Classifier, record) -> bool:
    """True iff every item of some pattern is set in ``record``.

    ``record`` is an item-indicator vector of length ``schema.n_items``, or a
    set of item ids.
    """
    if isinstance(record, (set, frozenset)):
        items = record
    else:
        vec = np.asarray(record)
        if c.schema is not None and vec.shape != (c.schema.n_items,):
            raise DataError(f"schema mismatch: record has {vec.shape} items, "
                            f"classifier expects {c.schema.n_items}")
        items = set(np.flatnonzero(vec).tolist())
    return any(all(i in items for i in p.itemset) for p in c.patterns)


def predict_all(c: Classifier, ts: TransactionSet) -> np.ndarray:
    if c.schema is not None and c.schema.attributes != ts.schema.attributes:
        raise DataError("schema mismatch between classifier and data")
    if not c.patterns:
        return np.zeros(ts.n, dtype=bool)
    masks = _group_masks(ts, c.itemsets)
    return unpack_bits(np.bitwise_or.reduce(masks, axis=0), ts.n)


def evaluate(c: Classifier, test: TransactionSet, label: str = "") -> tuple[ConfusionMatrix, PerformancePoint]:
    if test.n == 0:
        raise DataError("empty dataset")
    pred = predict_all(c, test)
    y = test.label_array
    cm = ConfusionMatrix(tp=int((pred & y).sum()), fn=int((~pred & y).sum()),
                         fp=int((pred & ~y).sum()), tn=int((~pred & ~y).sum()))
    return cm, PerformancePoint.from_confusion(cm, label, c.params)


@dataclass
class PipelineResult:
    family: PrunedFamily
    classifier: Classifier
    confusion: ConfusionMatrix | None
    point: PerformancePoint | None
    n_mined: int


def train(train_ts: TransactionSet, validation: TransactionSet, params: MiningParams,
          policy: str = COVERAGE) -> tuple[Classifier, PrunedFamily, int]:
    """Stages 1 and 2: mine, prune, select representatives."""
    rules = mine(train_ts, params)
    family = stage1(rules, train_ts, params)
    clf = select_representatives(family, validation, policy)
    clf.params = params
    return clf, family, len(rules)


def run_pipeline(train_ts, validation, test, params: MiningParams, label: str = "",
                 policy: str = COVERAGE) -> PipelineResult:
    clf, family, n_mined = train(train_ts, validation, params, policy)
    cm, point = evaluate(clf, test, label)
    return PipelineResult(family, clf, cm, point, n_mined)


def reference_grid(rr_threshold: float = 2.0, k: int = 1) -> list[MiningParams]:
    """The 3 x 3 x 2 sweep over local support, confidence ratio and max length."""
    return [MiningParams(ls, conf, length, rr_threshold, k)
            for ls in (0.09, 0.10, 0.15) for conf in (3.0, 4.0, 5.0) for length in (3, 4)]


def default_workers() -> int:
    env = os.environ.get("RARE_RULES_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)


def grid_search(train_ts, validation, test, grid: Sequence[MiningParams],
                workers: int | None = None, policy: str = COVERAGE) -> list[PerformancePoint]:
    if not grid:
        raise ValueError("grid must be non-empty")

    def one(i_params):
        i, params = i_params
        label = str(i + 1)
        try:
            return run_pipeline(train_ts, validation, test, params, label, policy).point
        except Exception as exc:  # per-point failure must not stop the sweep
            logger.warning("grid point %s (%s) failed: %s", label, params.label(), exc)
            return PerformancePoint(math.nan, math.nan, math.nan, label, params.min_local_support,
                                    params.min_conf_ratio, params.max_length, error=str(exc))

    workers = workers or default_workers()
    if workers == 1:
        return [one(x) for x in enumerate(grid)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, enumerate(grid)))


def _dominates(a: PerformancePoint, b: PerformancePoint) -> bool:
    return (a.sensitivity >= b.sensitivity and a.specificity >= b.specificity
            and (a.sensitivity > b.sensitivity or a.specificity > b.specificity))


def nondominated(points: Sequence[PerformancePoint]) -> list[int]:
    ok = [i for i, p in enumerate(points) if p.valid]
    return [i for i in ok if not any(_dominates(points[j], points[i]) for j in ok if j != i)]


_POLICIES = {
    "maximin": lambda p: min(p.sensitivity, p.specificity),
    "youden": lambda p: p.sensitivity + p.specificity - 1.0,
    "distance": lambda p: -math.hypot(1.0 - p.sensitivity, 1.0 - p.specificity),
}


def roc_select(points: Sequence[PerformancePoint], policy: str = "maximin") -> tuple[int, PerformancePoint]:
    """Pick a Pareto-nondominated ROC point.

    Among nondominated points the policy score is maximized; ties go to the
    lower global error, then the lower index. Returns a 0-based index.
    """
    if not points:
        raise ValueError("no points to select from")
    if policy not in _POLICIES:
        raise ValueError(f"unknown ROC policy {policy!r}")
    front = nondominated(points)
    if not front:
        raise ValueError("no valid points to select from")
    score = _POLICIES[policy]

    def key(i):
        p = points[i]
        err = p.global_error if not math.isnan(p.global_error) else math.inf
        return (-score(p), err, i)

    best = min(front, key=key)
    return best, points[best]
