"""Unbalanced synthetic data with planted risk patterns of known relative risk.

Attributes are drawn independently from their marginals. A record matching
no planted pattern is positive with the base rate; a record matching one or
more planted patterns is positive with the largest elevated rate among them.
Elevated rates are solved so that, under the design distribution, each
planted pattern's relative risk equals its target.
"""
from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .dataset import AttributeSchema, DataError, Itemset, TransactionSet


class InfeasibleSpec(DataError):
    pass


@dataclass
class PlantSpec:
    schema: AttributeSchema
    n: int
    base_positive_rate: float
    planted: list[tuple[Itemset, float]]
    noise_seed: int = 0
    marginals: list[np.ndarray] | None = None

    def __post_init__(self):
        if self.n < 1:
            raise DataError("n must be positive")
        if not 0.0 < self.base_positive_rate < 0.5:
            raise DataError("base_positive_rate must lie in (0, 0.5)")
        self.planted = [(self.schema.itemset(s), float(rr)) for s, rr in self.planted]
        for s, rr in self.planted:
            if not rr > 1.0:
                raise DataError(f"target relative risk must exceed 1, got {rr} for {s}")
        if self.marginals is None:
            self.marginals = [np.full(a.level_count, 1.0 / a.level_count) for a in self.schema.attributes]
        else:
            self.marginals = [np.asarray(p, dtype=float) for p in self.marginals]
            for a, p in zip(self.schema.attributes, self.marginals):
                if p.shape != (a.level_count,) or (p < 0).any() or abs(p.sum() - 1.0) > 1e-9:
                    raise DataError(f"bad marginal for attribute {a.name!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "PlantSpec":
        schema = AttributeSchema.from_dict({
            "attributes": d["attributes"],
            "class_column": d.get("class_column", "y"),
            "positive_label": str(d.get("positive_label", "1")),
            "negative_label": str(d.get("negative_label", "0")),
        })
        marg = None
        if d.get("marginals"):
            marg = [d["marginals"][a.name] for a in schema.attributes]
        planted = [([tuple(x) for x in p["items"]], p["target_rr"]) for p in d.get("planted", [])]
        return cls(schema, int(d["n"]), float(d["base_positive_rate"]), planted,
                   int(d.get("seed", d.get("noise_seed", 0))), marg)

    @classmethod
    def load(cls, path) -> "PlantSpec":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise DataError(f"cannot read synth spec {os.fspath(path)!r}: {exc}") from None


@dataclass
class PlantedReport:
    itemset: Itemset
    items: list[tuple[str, str]]
    target_rr: float
    elevated_rate: float
    supp_count: int
    conf_count: int
    realized_rr: float | None


@dataclass
class GroundTruth:
    base_positive_rate: float
    n: int
    n_pos: int
    planted: list[PlantedReport] = field(default_factory=list)

    def to_dict(self) -> dict:
        def rr(v):
            return "inf" if v is not None and math.isinf(v) else v
        return {
            "base_positive_rate": self.base_positive_rate,
            "n": self.n,
            "n_pos": self.n_pos,
            "planted": [{"items": [list(x) for x in p.items], "target_rr": p.target_rr,
                         "elevated_rate": p.elevated_rate, "supp_count": p.supp_count,
                         "conf_count": p.conf_count, "realized_rr": rr(p.realized_rr)}
                        for p in self.planted],
        }


_MAX_CELLS = 2_000_000


def _match_state_probs(spec: PlantSpec) -> dict[tuple[bool, ...], float]:
    """Design probability of every joint match/no-match state of the planted patterns."""
    schema = spec.schema
    reqs = [{int(schema.item_attribute[i]): schema.item(i).level_index for i in s}
            for s, _ in spec.planted]
    involved = sorted({h for r in reqs for h in r})
    sizes = [schema.attributes[h].level_count for h in involved]
    if math.prod(sizes) > _MAX_CELLS:
        raise InfeasibleSpec("planted patterns span too many attribute combinations")
    probs: dict[tuple[bool, ...], float] = {}
    for combo in itertools.product(*[range(q) for q in sizes]):
        p = 1.0
        for h, j in zip(involved, combo):
            p *= spec.marginals[h][j]
        if p == 0.0:
            continue
        levels = dict(zip(involved, combo))
        state = tuple(all(levels[h] == j for h, j in r.items()) for r in reqs)
        probs[state] = probs.get(state, 0.0) + p
    return probs


def _design_rrs(states, rates, base):
    n_pat = len(rates)
    out = []
    for i in range(n_pat):
        num_in = den_in = num_out = den_out = 0.0
        for s, p in states.items():
            hit = [rates[j] for j in range(n_pat) if s[j]]
            rate = max(hit) if hit else base
            if s[i]:
                num_in += p * rate
                den_in += p
            else:
                num_out += p * rate
                den_out += p
        if den_in == 0.0 or den_out == 0.0:
            raise InfeasibleSpec(f"planted pattern {i} has design probability 0 or 1")
        out.append((num_in / den_in) / (num_out / den_out))
    return out


def solve_rates(spec: PlantSpec, tol: float = 1e-12, max_iter: int = 2000) -> list[float]:
    """Elevated positive rates giving every planted pattern its target design RR."""
    if not spec.planted:
        return []
    base = spec.base_positive_rate
    targets = [rr for _, rr in spec.planted]
    states = _match_state_probs(spec)
    rates = [base * t for t in targets]
    for _ in range(max_iter):
        rrs = _design_rrs(states, rates, base)
        if all(abs(a - t) <= tol * t for a, t in zip(rrs, targets)):
            if any(r > 1.0 for r in rates):
                raise InfeasibleSpec("target relative risks need positive rates above 1: "
                                     + ", ".join(f"{r:.3f}" for r in rates))
            return [float(r) for r in rates]
        rates = [r * t / a for r, t, a in zip(rates, targets, rrs)]
    raise InfeasibleSpec("could not solve elevated rates for the planted targets")


def generate(spec: PlantSpec) -> tuple[TransactionSet, GroundTruth]:
    schema = spec.schema
    rates = solve_rates(spec)
    rng = np.random.default_rng(spec.noise_seed)
    codes = np.empty((spec.n, schema.m), dtype=np.int64)
    for h, a in enumerate(schema.attributes):
        codes[:, h] = rng.choice(a.level_count, size=spec.n, p=spec.marginals[h])
    rate = np.full(spec.n, spec.base_positive_rate)
    matches = []
    for (itemset, _), r in zip(spec.planted, rates):
        hit = np.ones(spec.n, dtype=bool)
        for i in itemset:
            h, j = schema.item(i)
            hit &= codes[:, h] == j
        matches.append(hit)
        np.maximum(rate, np.where(hit, r, 0.0), out=rate)
    labels = rng.random(spec.n) < rate
    ts = TransactionSet(schema, codes, labels)

    n_pos = int(labels.sum())
    truth = GroundTruth(spec.base_positive_rate, spec.n, n_pos)
    for (itemset, target), r, hit in zip(spec.planted, rates, matches):
        a = int((hit & labels).sum())
        supp = int(hit.sum())
        b = supp - a
        c = n_pos - a
        d = spec.n - supp - c
        if supp == 0 or supp == spec.n:
            realized = None
        elif c == 0:
            realized = math.inf
        else:
            realized = (a * (c + d)) / (c * (a + b))
        truth.planted.append(PlantedReport(itemset, schema.describe(itemset), target, r,
                                           supp, a, realized))
    return ts, truth


def write_outputs(ts: TransactionSet, truth: GroundTruth, out_dir) -> dict[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "data": os.path.join(out_dir, "data.csv"),
        "schema": os.path.join(out_dir, "schema.json"),
        "ground_truth": os.path.join(out_dir, "ground_truth.json"),
    }
    ts.to_csv(paths["data"])
    ts.schema.save(paths["schema"])
    with open(paths["ground_truth"], "w", encoding="utf-8") as fh:
        json.dump(truth.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths
