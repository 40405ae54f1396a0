"""Reduce mined rules to a non-redundant family of risk patterns.

Three passes over the rules mined from the training data:

* keep risk patterns, i.e. rules whose relative risk exceeds ``tau``;
* top-down: drop a pattern when one of its one-item-shorter sub-patterns has
  a matched-negative count that is not significantly larger (the longer
  pattern then has no better relative risk and a worse true-positive rate);
* bottom-up: drop a pattern when one of its one-item-longer super-patterns
  keeps a matched-positive count that is not significantly smaller (the
  shorter pattern then has no better relative risk and a worse
  false-positive rate).

"Significantly" means the nested counts differ by at least ``k``.
Witnesses are taken from the thresholded family, never from the output of
an earlier pass, which makes the passes independent of processing order. A
super-pattern dropped as redundant can therefore still witness that a
shorter pattern is weak; the bound on relative risk holds either way.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from itertools import combinations

from .dataset import AttributeSchema, Itemset, TransactionSet
from .mining import ClassRule, MiningParams, RuleSet, sort_rules
from .stats import RuleMetrics, count_test_with_power, metrics, relative_risk

logger = logging.getLogger(__name__)

EQUAL_SUPPORT = "equal_support"
REDUNDANT = "redundant"
WEAK = "weak"


@dataclass(frozen=True)
class AuditEntry:
    discarded: Itemset
    witness: Itemset
    test: str
    count_discarded: int
    count_witness: int
    diff_count: int
    k: int
    power_lower_bound: float | None = None


@dataclass
class PrunedFamily:
    rules: list[ClassRule]
    metrics: dict[Itemset, RuleMetrics]
    audit: list[AuditEntry] = field(default_factory=list)
    params: MiningParams | None = None
    fingerprint: str | None = None
    schema: AttributeSchema | None = field(default=None, repr=False)

    @property
    def status(self) -> str:
        return "ok" if self.rules else "empty"

    def __len__(self) -> int:
        return len(self.rules)

    def as_ruleset(self) -> RuleSet:
        return RuleSet(list(self.rules), self.params, self.fingerprint, self.schema)


def rule_rr(rule: ClassRule, ts: TransactionSet) -> float | None:
    """Relative risk on ``ts``; ``None`` when undefined (rule matches every transaction)."""
    if rule.supp_count >= ts.n:
        return None
    return relative_risk(rule.conf_count, rule.supp_count, ts.n_pos, ts.n)


def threshold_risk_patterns(rules: RuleSet, ts: TransactionSet, tau: float) -> RuleSet:
    if not tau > 1.0:
        raise ValueError("tau must exceed 1")
    kept = []
    for r in rules:
        rr = rule_rr(r, ts)
        if rr is not None and rr > tau:
            kept.append(r)
    return rules.replace(kept)


def prune_equal_support(rules: RuleSet, audit: list | None = None) -> RuleSet:
    """Drop every pattern having a sub-pattern in the family with the same support count.

    Equal support forces equal matched-positive and matched-negative counts,
    so the longer pattern is redundant outright.
    """
    family = {r.antecedent: r for r in rules}
    kept = []
    for r in rules:
        witness = None
        for size in range(1, r.length):
            for sub in combinations(r.antecedent, size):
                w = family.get(sub)
                if w is not None and w.supp_count == r.supp_count:
                    witness = w
                    break
            if witness is not None:
                break
        if witness is None:
            kept.append(r)
        elif audit is not None:
            audit.append(AuditEntry(r.antecedent, witness.antecedent, EQUAL_SUPPORT,
                                    r.supp_count, witness.supp_count, 0, 0))
    return rules.replace(kept)


def prune_redundant(rules: RuleSet, ts: TransactionSet, k: int,
                    audit: list | None = None, witnesses=None) -> RuleSet:
    """Top-down pass, lengths L1 down to 2, testing matched-negative counts.

    ``witnesses`` defaults to ``rules``.
    """
    family = {r.antecedent: r for r in (rules if witnesses is None else witnesses)}
    kept = []
    for r in rules:
        if r.length < 2:
            kept.append(r)
            continue
        entry = None
        for sub in combinations(r.antecedent, r.length - 1):
            w = family.get(sub)
            if w is None:
                continue
            dec = count_test_with_power(w.neg_count, r.neg_count, k, ts.n, ts.n_neg)
            if not dec.reject:
                entry = AuditEntry(r.antecedent, w.antecedent, REDUNDANT, r.neg_count,
                                   w.neg_count, dec.diff_count, k, dec.power_lower_bound)
                break
        if entry is None:
            kept.append(r)
        elif audit is not None:
            audit.append(entry)
    return rules.replace(kept)


def prune_weak(rules: RuleSet, ts: TransactionSet, k: int,
               audit: list | None = None, witnesses=None) -> RuleSet:
    """Bottom-up pass, lengths 1 up to L2-1, testing matched-positive counts.

    ``witnesses`` defaults to ``rules``.
    """
    supers: dict[Itemset, list[ClassRule]] = {}
    for r in (rules if witnesses is None else witnesses):
        if r.length < 2:
            continue
        for sub in combinations(r.antecedent, r.length - 1):
            supers.setdefault(sub, []).append(r)
    kept = []
    for r in rules:
        entry = None
        for w in sorted(supers.get(r.antecedent, ()), key=lambda x: x.antecedent):
            dec = count_test_with_power(r.conf_count, w.conf_count, k, ts.n, ts.n_pos)
            if not dec.reject:
                entry = AuditEntry(r.antecedent, w.antecedent, WEAK, r.conf_count,
                                   w.conf_count, dec.diff_count, k, dec.power_lower_bound)
                break
        if entry is None:
            kept.append(r)
        elif audit is not None:
            audit.append(entry)
    return rules.replace(kept)


def stage1(rules: RuleSet, ts: TransactionSet, params: MiningParams,
           equal_support_prepass: bool = True) -> PrunedFamily:
    audit: list[AuditEntry] = []
    risk = threshold_risk_patterns(rules, ts, params.rr_threshold)
    current = risk
    if equal_support_prepass:
        current = prune_equal_support(current, audit)
    current = prune_redundant(current, ts, params.k, audit, witnesses=risk)
    current = prune_weak(current, ts, params.k, audit, witnesses=risk)
    family = PrunedFamily(
        rules=list(current.rules),
        metrics={r.antecedent: metrics(r, ts.n_pos, ts.n_neg) for r in current},
        audit=audit,
        params=params,
        fingerprint=ts.fingerprint,
        schema=ts.schema,
    )
    if not family.rules:
        logger.warning("stage 1 discarded every rule (%d mined)", len(rules))
    return family


def write_audit(family: PrunedFamily, path, schema: AttributeSchema | None = None) -> None:
    schema = schema or family.schema
    with open(path, "w", encoding="utf-8") as fh:
        head = {"type": "header", "passes": ["threshold", EQUAL_SUPPORT, REDUNDANT, WEAK],
                "redundant_lengths": "L1 down to 2", "weak_lengths": "1 up to L2-1",
                "fingerprint": family.fingerprint, "n_discarded": len(family.audit)}
        fh.write(json.dumps(head, sort_keys=True) + "\n")
        for e in family.audit:
            rec = {
                "rule": [list(p) for p in schema.describe(e.discarded)],
                "witness": [list(p) for p in schema.describe(e.witness)],
                "test": e.test,
                "count_rule": e.count_discarded,
                "count_witness": e.count_witness,
                "diff_count": e.diff_count,
                "k": e.k,
                "power_lower_bound": e.power_lower_bound,
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


__all__ = [
    "AuditEntry", "PrunedFamily", "threshold_risk_patterns", "prune_equal_support",
    "prune_redundant", "prune_weak", "stage1", "write_audit", "rule_rr", "sort_rules",
]
