"""Acceptance criteria 1-8, one printed PASS/FAIL line each."""
import math
import time
from fractions import Fraction
from itertools import combinations

import mpmath
import numpy as np
import pytest

from rare_rules.classifier import (Classifier, ConfusionMatrix, Pattern, PerformancePoint,
                                   evaluate, nondominated, predict_all, roc_select, train)
from rare_rules.dataset import SplitSpec, TransactionSet, split
from rare_rules.mining import MiningParams, mine
from rare_rules.pruning import EQUAL_SUPPORT, REDUNDANT, WEAK, stage1
from rare_rules.report import export_tree, pattern_paths, read_points
from rare_rules.stats import count_test, power_statistic
from rare_rules.synth import generate

from conftest import DATA, load_planted_spec
from oracles import brute_force_rules, random_dataset, rr_fraction, rr_le
from test_report import parse_tree, root_paths


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail
    return emit


def test_criterion_1_confusion_arithmetic(report):
    t0 = time.perf_counter()
    tp, fn, fp, tn = 164, 35, 5454, 24186
    hit = np.repeat([True, False, True, False], [tp, fn, fp, tn])
    y = np.repeat([True, True, False, False], [tp, fn, fp, tn])
    from rare_rules.dataset import Attribute, AttributeSchema
    schema = AttributeSchema((Attribute("p", ("yes", "no")),), "y", "1", "0")
    ts = TransactionSet(schema, np.where(hit, 0, 1)[:, None], y)
    cm, pt = evaluate(Classifier([Pattern((0,), 2.0)], schema), ts)
    dt = time.perf_counter() - t0
    ok = (cm == ConfusionMatrix(tp, fn, fp, tn)
          and abs(pt.sensitivity - 0.824) <= 5e-4 and abs(pt.specificity - 0.816) <= 5e-4
          and abs(pt.global_error - 0.184) <= 5e-4 and dt < 1.0)
    report(1, ok, f"sens={pt.sensitivity:.4f} spec={pt.specificity:.4f} "
                  f"err={pt.global_error:.4f} in {dt:.3f}s")


def test_criterion_2_roc_selection(report):
    t0 = time.perf_counter()
    points = read_points(DATA / "reference_points.csv")
    idx, pt = roc_select(points)
    front = nondominated(points)
    dominated = any(q.sensitivity >= pt.sensitivity and q.specificity >= pt.specificity
                    and (q.sensitivity, q.specificity) != (pt.sensitivity, pt.specificity)
                    for q in points)
    dt = time.perf_counter() - t0
    ok = (pt.label == "9" and idx == 8 and (pt.sensitivity, pt.specificity) == (0.824, 0.816)
          and idx in front and not dominated and dt < 1.0)
    report(2, ok, f"selected row {pt.label} (0-based index {idx}) "
                  f"({pt.sensitivity}, {pt.specificity}) in {dt:.3f}s")


def _criterion3_runs():
    rng = np.random.default_rng(314159)
    runs = []
    for _ in range(100):
        ts = random_dataset(rng, max_attrs=6, max_levels=3, max_n=500)
        ls = float(rng.uniform(0.02, 0.4))
        cr = float(rng.uniform(1.0, 3.0))
        ml = int(rng.integers(1, 7))
        runs.append((ts, ls, cr, ml))
    return runs


@pytest.fixture(scope="module")
def criterion3():
    runs = _criterion3_runs()
    results = []
    t0 = time.perf_counter()
    for ts, ls, cr, ml in runs:
        got = mine(ts, MiningParams(ls, cr, ml))
        results.append((ts, {r.antecedent: (r.supp_count, r.conf_count) for r in got},
                        brute_force_rules(ts, ls, cr, ml)))
    return results, time.perf_counter() - t0


def test_criterion_3_apriori_equals_brute_force(report, criterion3):
    results, dt = criterion3
    mismatches = sum(got != expect for _, got, expect in results)
    n_rules = sum(len(got) for _, got, _ in results)
    report(3, mismatches == 0 and dt < 10.0,
           f"{len(results)} datasets, {n_rules} rules, {mismatches} mismatches in {dt:.2f}s")


def test_criterion_4_rr_orderings(report, criterion3):
    results, _ = criterion3
    pairs = violations = 0
    checked = {1: 0, 2: 0, 3: 0}
    for ts, _, rules in results:
        n, n_pos = ts.n, ts.n_pos
        for sup, (s2, a2) in rules.items():
            for size in range(1, len(sup)):
                for sub in combinations(sup, size):
                    if sub not in rules:
                        continue
                    s1, a1 = rules[sub]
                    pairs += 1
                    if s1 >= n:
                        continue  # RR undefined for the sub-pattern
                    rr_sub, rr_sup = rr_fraction(a1, s1, n_pos, n), rr_fraction(a2, s2, n_pos, n)
                    if s1 - a1 == s2 - a2:
                        checked[1] += 1
                        violations += not rr_le(rr_sup, rr_sub)
                    if s1 == s2:
                        checked[2] += 1
                        violations += not (a1 == a2 and s1 - a1 == s2 - a2)
                    if a1 == a2:
                        checked[3] += 1
                        violations += not rr_le(rr_sub, rr_sup)
    ok = violations == 0 and pairs > 0 and all(checked.values())
    report(4, ok, f"{pairs} nested pairs; equal negatives {checked[1]}, equal support {checked[2]}, "
                  f"equal positives {checked[3]}; {violations} violations")


def test_criterion_5_test_significance_and_power(report):
    never = all(not count_test(c, c, k).reject for c in range(0, 500) for k in range(1, 11))
    mpmath.mp.dps = 50
    d = mpmath.mpf("0.20") - mpmath.mpf("0.15")
    exact = (mpmath.mpf(3) / 100 - mpmath.mpf("0.25")) / mpmath.sqrt(d * (1 - d) / 100)
    un = power_statistic(100, 0.20, 0.15, 3, 0.25)
    err = abs(un - float(exact))
    report(5, never and err <= 1e-9,
           f"equal counts never rejected for k=1..10; u_n={un:.6f} (|err|={err:.1e})")


@pytest.fixture(scope="module")
def planted_run():
    t0 = time.perf_counter()
    spec = load_planted_spec()
    ts, truth = generate(spec)
    tr, va, te = split(ts, SplitSpec(seed=0))
    params = MiningParams()
    clf, family, n_mined = train(tr, va, params)
    _, pt = evaluate(clf, te)
    dt = time.perf_counter() - t0
    return dict(ts=ts, truth=truth, parts=(tr, va, te), params=params, clf=clf,
                family=family, point=pt, seconds=dt)


def test_criterion_6_planted_recovery(report, planted_run):
    clf, truth = planted_run["clf"], planted_run["truth"]
    te = planted_run["parts"][2]
    by_itemset = {p.itemset: p.validated_rr for p in clf.patterns}
    details, ok = [], True
    for p in truth.planted:
        got = by_itemset.get(p.itemset)
        dev = None if got is None else got / p.realized_rr - 1
        ok &= dev is not None and abs(dev) <= 0.30
        details.append(f"target {p.target_rr:g}: realized {p.realized_rr:.2f}, "
                       f"validated {'missing' if got is None else f'{got:.2f}'}")
    planted = Classifier([Pattern(p.itemset, 1.0) for p in truth.planted], te.schema)
    coverage = (predict_all(planted, te) & te.label_array).sum() / te.n_pos
    sens = planted_run["point"].sensitivity
    ok &= sens >= 0.9 * coverage and planted_run["seconds"] < 60
    report(6, ok, "; ".join(details) + f"; test sensitivity {sens:.3f} vs planted coverage "
                  f"{coverage:.3f}; {planted_run['seconds']:.1f}s")


def _audit_sound(entry):
    if entry.test == REDUNDANT:
        return (set(entry.witness) < set(entry.discarded)
                and 0 <= entry.count_witness - entry.count_discarded == entry.diff_count < entry.k)
    if entry.test == WEAK:
        return (set(entry.discarded) < set(entry.witness)
                and 0 <= entry.count_discarded - entry.count_witness == entry.diff_count < entry.k)
    return (entry.test == EQUAL_SUPPORT and set(entry.witness) < set(entry.discarded)
            and entry.count_witness == entry.count_discarded)


def test_criterion_7_pruning_sound_and_idempotent(report, planted_run):
    tr = planted_run["parts"][0]
    family, params = planted_run["family"], planted_run["params"]
    again = stage1(family.as_ruleset(), tr, params)
    identity = again.rules == family.rules and not again.audit
    sound = all(_audit_sound(e) for e in family.audit)
    # the planted run prunes little, so repeat on random data where the audit is busy
    rng = np.random.default_rng(7)
    extra = 0
    for _ in range(20):
        ts = random_dataset(rng, min_n=150, max_n=500)
        p = MiningParams(0.05, 1.0, 4, rr_threshold=1.2, k=int(rng.integers(1, 4)))
        fam = stage1(mine(ts, p), ts, p)
        extra += len(fam.audit)
        identity &= stage1(fam.as_ruleset(), ts, p).rules == fam.rules
        sound &= all(_audit_sound(e) for e in fam.audit)
    report(7, identity and sound,
           f"planted run: {len(family)} kept, {len(family.audit)} audit entries; "
           f"random runs: {extra} audit entries; idempotent={identity} sound={sound}")


def test_criterion_8_tree_export(report, planted_run):
    clf = planted_run["clf"]
    labels, parent, terminal = parse_tree(export_tree(clf))
    roots, paths = root_paths(labels, parent, terminal)
    expect = [tuple(f"{a} = {v}" for a, v in (clf.schema.item_names(i) for i in path))
              for path in pattern_paths(clf)]
    ok = (len(roots) == 1 and len(terminal) == len(clf) and paths == set(expect)
          and len(set(expect)) == len(expect)
          and len(labels) <= 1 + sum(len(p.itemset) for p in clf.patterns))
    report(8, ok, f"{len(labels)} nodes, {len(roots)} root, {len(terminal)} pattern paths "
                  f"for {len(clf)} patterns")
