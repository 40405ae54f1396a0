"""Rule rates, relative risk and the nested-count test.

All rates are plug-in frequencies computed from exact integer counts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

INF = math.inf


@dataclass(frozen=True)
class RuleMetrics:
    tpr: float
    tnr: float
    fpr: float
    fnr: float
    local_support: float
    confidence: float
    relative_risk: float

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        if math.isinf(self.relative_risk):
            d["relative_risk"] = "inf"
        return d


@dataclass(frozen=True)
class TestDecision:
    reject: bool
    diff_count: int
    margin: int
    power_lower_bound: float | None = None

    __test__ = False  # not a pytest class


def relative_risk(conf_count: int, supp_count: int, n_pos: int, n: int,
                  smoothing: float = 0.0) -> float:
    """Relative risk of the target class given the pattern.

    ``(a / (a + b)) / (c / (c + d))`` with a = matched positives, b = matched
    negatives, c = unmatched positives, d = unmatched negatives. A zero
    unmatched-positive count gives ``inf``. ``smoothing`` adds the given
    pseudo-count to every cell (0.5 is the Haldane correction).
    """
    unmatched = n - supp_count
    if unmatched == 0 and smoothing == 0:
        raise ValueError("relative risk undefined: the pattern matches every transaction")
    if supp_count == 0 and smoothing == 0:
        return 0.0
    a = conf_count + smoothing
    c = n_pos - conf_count + smoothing
    matched = supp_count + 2 * smoothing
    unmatched = unmatched + 2 * smoothing
    if c == 0:
        return INF
    return (a / matched) / (c / unmatched)


def metrics(rule, n_pos: int, n_neg: int, smoothing: float = 0.0) -> RuleMetrics:
    if n_pos < 1 or n_neg < 1:
        raise ValueError("metrics need at least one positive and one negative transaction")
    supp, conf = rule.supp_count, rule.conf_count
    neg = supp - conf
    if not (0 <= conf <= supp and conf <= n_pos and neg <= n_neg):
        raise ValueError(f"rule counts ({supp}, {conf}) inconsistent with totals ({n_pos}, {n_neg})")
    tpr = conf / n_pos
    fpr = neg / n_neg
    return RuleMetrics(
        tpr=tpr,
        tnr=(n_neg - neg) / n_neg,
        fpr=fpr,
        fnr=(n_pos - conf) / n_pos,
        local_support=tpr,
        confidence=conf / supp if supp else 0.0,
        relative_risk=relative_risk(conf, supp, n_pos, n_pos + n_neg, smoothing),
    )


def count_test(count_small: int, count_large_pattern: int, k: int) -> TestDecision:
    """Reject equality of the two joint probabilities iff the counts differ by at least k.

    ``count_small`` belongs to the smaller (sub-)pattern, whose count can
    only be larger.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    if count_small < count_large_pattern:
        raise ValueError(f"nesting violated: sub-pattern count {count_small} "
                         f"< super-pattern count {count_large_pattern}")
    diff = count_small - count_large_pattern
    return TestDecision(reject=diff >= k, diff_count=diff, margin=k)


def std_normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def power_statistic(n: int, pi_hat_u: float, pi_hat_uprime: float, k: int, pi1: float) -> float:
    """The standardized threshold ``u_n`` of the count test."""
    if n < 1:
        raise ValueError("n must be positive")
    if not 0.0 < pi1 < 1.0:
        raise ValueError("pi1 must lie in (0, 1)")
    d = pi_hat_u - pi_hat_uprime
    if d <= 0:
        raise ValueError("power bound undefined unless pi_hat_U > pi_hat_U'")
    return (k / n - pi1) / math.sqrt(d * (1.0 - d) / n)


def power_bound(n: int, pi_hat_u: float, pi_hat_uprime: float, k: int, pi1: float) -> float:
    """Asymptotic lower bound ``1 - Phi(u_n)`` on the count test's power."""
    return 1.0 - std_normal_cdf(power_statistic(n, pi_hat_u, pi_hat_uprime, k, pi1))


def count_test_with_power(count_small: int, count_large_pattern: int, k: int,
                          n: int, class_count: int) -> TestDecision:
    """``count_test`` plus its advisory power bound.

    ``class_count`` is the size of the class the counts are taken in (positives
    for matched-positive counts, negatives for matched-negative counts).
    """
    dec = count_test(count_small, count_large_pattern, k)
    bound = None
    if dec.diff_count > 0 and 0 < class_count < n:
        bound = power_bound(n, count_small / n, count_large_pattern / n, k, class_count / n)
    return TestDecision(dec.reject, dec.diff_count, k, bound)
