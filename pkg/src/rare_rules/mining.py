"""Level-wise (Apriori) mining of class association rules.

The right-hand side of every rule is the target-class indicator, so a rule
is fully described by its antecedent itemset and two counts: transactions
matching the antecedent, and those among them in the target class.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from . import _backend
from .dataset import AttributeSchema, DataError, Itemset, TransactionSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class ClassRule:
    antecedent: Itemset
    supp_count: int
    conf_count: int

    def __post_init__(self):
        if not 0 <= self.conf_count <= self.supp_count:
            raise ValueError(f"inconsistent counts for {self.antecedent}: "
                             f"supp={self.supp_count}, conf={self.conf_count}")

    @property
    def neg_count(self) -> int:
        return self.supp_count - self.conf_count

    @property
    def length(self) -> int:
        return len(self.antecedent)


@dataclass(frozen=True)
class MiningParams:
    min_local_support: float = 0.10
    min_conf_ratio: float = 4.0
    max_length: int = 3
    rr_threshold: float = 2.0
    k: int = 1

    def __post_init__(self):
        if not 0.0 < self.min_local_support <= 1.0:
            raise ValueError("min_local_support must lie in (0, 1]")
        if self.min_conf_ratio < 1.0:
            raise ValueError("min_conf_ratio must be >= 1")
        if int(self.max_length) != self.max_length or self.max_length < 1:
            raise ValueError("max_length must be a positive integer")
        if not self.rr_threshold > 1.0:
            raise ValueError("rr_threshold must exceed 1")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")

    def label(self) -> str:
        return (f"ls={self.min_local_support:g},conf={self.min_conf_ratio:g},"
                f"len={self.max_length},tau={self.rr_threshold:g},k={self.k}")

    def is_local_support_frequent(self, conf_count: int, n_pos: int) -> bool:
        return conf_count / n_pos >= self.min_local_support

    def is_confident(self, conf_count: int, supp_count: int, n_pos: int, n: int) -> bool:
        return supp_count > 0 and conf_count / supp_count >= self.min_conf_ratio * (n_pos / n)


@dataclass
class RuleSet:
    rules: list[ClassRule]
    params: MiningParams | None = None
    fingerprint: str | None = None
    schema: AttributeSchema | None = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def by_length(self) -> dict[int, list[ClassRule]]:
        out: dict[int, list[ClassRule]] = {}
        for r in self.rules:
            out.setdefault(r.length, []).append(r)
        return dict(sorted(out.items()))

    def antecedents(self) -> set[Itemset]:
        return {r.antecedent for r in self.rules}

    def replace(self, rules: Iterable[ClassRule]) -> "RuleSet":
        return RuleSet(sort_rules(rules), self.params, self.fingerprint, self.schema)


def sort_rules(rules: Iterable[ClassRule]) -> list[ClassRule]:
    return sorted(rules, key=lambda r: (r.length, r.antecedent))


def apriori_gen(frequent_prev: Sequence[Itemset], item_attribute) -> list[Itemset]:
    """Candidate k-itemsets from the frequent (k-1)-itemsets.

    Joins pairs sharing their first k-2 items, drops joins placing two levels
    of one attribute together, then drops candidates with an infrequent
    (k-1)-subset.
    """
    if not frequent_prev:
        return []
    prev = sorted(set(frequent_prev))
    prev_set = set(prev)
    attr = item_attribute
    out = []
    # itemsets sharing a (k-2)-prefix are adjacent once sorted
    i = 0
    while i < len(prev):
        j = i
        while j < len(prev) and prev[j][:-1] == prev[i][:-1]:
            j += 1
        block = prev[i:j]
        for a in range(len(block)):
            for b in range(a + 1, len(block)):
                x, y = block[a][-1], block[b][-1]
                if attr[x] == attr[y]:
                    continue
                cand = block[a] + (y,)
                if all(cand[:t] + cand[t + 1:] in prev_set for t in range(len(cand) - 2)):
                    out.append(cand)
        i = j
    return out


def _as_matrix(candidates: Sequence[Itemset]) -> np.ndarray:
    return np.ascontiguousarray(np.array(candidates, dtype=np.int64).reshape(len(candidates), -1))


def count_pass(ts: TransactionSet, candidates: Sequence[Itemset], kernels=None) -> list[ClassRule]:
    """Exact support and target-class counts for each candidate.

    Intersects the candidates' item bit rows; candidates of different
    lengths are batched separately.
    """
    kernels = kernels or _backend.kernels
    supp = np.zeros(len(candidates), dtype=np.int64)
    conf = np.zeros(len(candidates), dtype=np.int64)
    groups: dict[int, list[int]] = {}
    for idx, c in enumerate(candidates):
        groups.setdefault(len(c), []).append(idx)
    for idxs in groups.values():
        s, f = kernels.count_candidates(ts.item_columns, ts.labels,
                                        _as_matrix([candidates[i] for i in idxs]))
        supp[idxs] = s
        conf[idxs] = f
    return [ClassRule(tuple(int(i) for i in c), int(s), int(f))
            for c, s, f in zip(candidates, supp.tolist(), conf.tolist())]


def scan_count(ts: TransactionSet, candidates: Sequence[Itemset]) -> list[ClassRule]:
    """Transaction-major counting, one row at a time; slow, kept for verification."""
    codes = ts.codes
    attr = ts.schema.item_attribute
    offsets = ts.schema.offsets
    req = [[(int(attr[i]), i - offsets[int(attr[i])]) for i in c] for c in candidates]
    supp = [0] * len(candidates)
    conf = [0] * len(candidates)
    for row, y in zip(codes.tolist(), ts.label_array.tolist()):
        for ci, items in enumerate(req):
            if all(row[h] == j for h, j in items):
                supp[ci] += 1
                if y:
                    conf[ci] += 1
    return [ClassRule(tuple(c), s, f) for c, s, f in zip(candidates, supp, conf)]


def mine(ts: TransactionSet, params: MiningParams, kernels=None) -> RuleSet:
    """All class association rules meeting the local-support and confidence thresholds.

    Only the local-support condition controls which itemsets are extended to
    the next level; confidence is not anti-monotone and only filters output.
    """
    if ts.n_pos == 0:
        raise DataError("no target-class transactions to learn from")
    n_pos, n = ts.n_pos, ts.n
    attr = ts.schema.item_attribute
    max_length = min(int(params.max_length), ts.schema.m)
    result: list[ClassRule] = []
    candidates: list[Itemset] = [(i,) for i in range(ts.schema.n_items)]
    level = 1
    while candidates:
        counted = count_pass(ts, candidates, kernels)
        frequent = [r for r in counted if params.is_local_support_frequent(r.conf_count, n_pos)]
        result.extend(r for r in frequent
                      if params.is_confident(r.conf_count, r.supp_count, n_pos, n))
        logger.debug("level %d: %d candidates, %d frequent", level, len(candidates), len(frequent))
        if not frequent or level >= max_length:
            break
        candidates = apriori_gen([r.antecedent for r in frequent], attr)
        level += 1
    return RuleSet(sort_rules(result), params, ts.fingerprint, ts.schema)


def _rule_record(rule: ClassRule, schema: AttributeSchema, extra: dict | None = None) -> dict:
    rec = {
        "items": [list(p) for p in schema.describe(rule.antecedent)],
        "supp_count": rule.supp_count,
        "conf_count": rule.conf_count,
    }
    if extra:
        rec.update(extra)
    return rec


def _params_dict(params: MiningParams | None) -> dict | None:
    return asdict(params) if params is not None else None


def write_rules(ruleset: RuleSet, path, schema: AttributeSchema | None = None,
                with_metrics: bool = False, provenance: dict | None = None) -> None:
    """Write a rule set as JSON lines: a header line, then one rule per line."""
    from .stats import metrics

    schema = schema or ruleset.schema
    n_pos = n_neg = None
    if with_metrics:
        n_pos, n_neg = (provenance or {}).get("n_pos"), (provenance or {}).get("n_neg")
    header = {"type": "header", "params": _params_dict(ruleset.params),
              "fingerprint": ruleset.fingerprint, "n_rules": len(ruleset)}
    if provenance:
        header["provenance"] = provenance
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for r in ruleset.rules:
            extra = None
            if with_metrics and n_pos and n_neg:
                extra = {"metrics": metrics(r, n_pos, n_neg).as_dict()}
            fh.write(json.dumps(_rule_record(r, schema, extra), sort_keys=True) + "\n")


def read_rules(path, schema: AttributeSchema) -> RuleSet:
    with open(path, encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("type") != "header":
        raise DataError(f"{path}: missing rule-set header line")
    head = lines[0]
    params = MiningParams(**head["params"]) if head.get("params") else None
    rules = [ClassRule(schema.itemset([tuple(p) for p in rec["items"]]),
                       int(rec["supp_count"]), int(rec["conf_count"])) for rec in lines[1:]]
    return RuleSet(sort_rules(rules), params, head.get("fingerprint"), schema)


def proper_subsets(itemset: Itemset, min_len: int = 1):
    for size in range(len(itemset) - 1, min_len - 1, -1):
        yield from combinations(itemset, size)


__all__ = [
    "ClassRule", "MiningParams", "RuleSet", "apriori_gen", "count_pass", "scan_count",
    "mine", "write_rules", "read_rules", "sort_rules", "proper_subsets",
]
