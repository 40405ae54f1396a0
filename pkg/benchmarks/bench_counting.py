"""Compare the compiled and numpy counting kernels.

    python3 benchmarks/bench_counting.py [--n 200000] [--candidates 2000] [--repeat 5]
"""
import argparse
import time

import numpy as np

from rare_rules import _backend
from rare_rules.dataset import Attribute, AttributeSchema, TransactionSet
from rare_rules.mining import _as_matrix


def make_data(n, m, q, seed):
    rng = np.random.default_rng(seed)
    schema = AttributeSchema(tuple(Attribute(f"A{h}", tuple(map(str, range(q)))) for h in range(m)),
                             "y", "1", "0")
    return TransactionSet(schema, rng.integers(0, q, size=(n, m)), rng.random(n) < 0.01)


def make_candidates(ts, count, length, seed):
    rng = np.random.default_rng(seed)
    q = ts.schema.attributes[0].level_count
    out = []
    for _ in range(count):
        hs = np.sort(rng.choice(ts.schema.m, size=length, replace=False))
        out.append(tuple(int(h * q + rng.integers(0, q)) for h in hs))
    return _as_matrix(out)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--attributes", type=int, default=25)
    ap.add_argument("--levels", type=int, default=3)
    ap.add_argument("--candidates", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ts = make_data(args.n, args.attributes, args.levels, args.seed)
    backends = {"python": _backend.python_kernels}
    if _backend.compiled_kernels is not None:
        backends["cython"] = _backend.compiled_kernels
    else:
        print("compiled kernels not built; timing the numpy fallback only")
    print(f"n={ts.n} items={ts.schema.n_items} words/row={ts.item_columns.shape[1]} "
          f"candidates={args.candidates}")
    for length in (1, 2, 3):
        cand = make_candidates(ts, args.candidates, length, args.seed + length)
        row = [f"len={length}"]
        results = {}
        for name, k in backends.items():
            t, results[name] = best_of(lambda: k.count_candidates(ts.item_columns, ts.labels, cand),
                                       args.repeat)
            row.append(f"{name} {t * 1e3:8.2f} ms")
        if len(results) == 2:
            same = all(np.array_equal(a, b) for a, b in zip(results["python"], results["cython"]))
            row.append(f"speedup x{float(row[1].split()[1]) / float(row[2].split()[1]):.1f}")
            row.append("agree" if same else "DISAGREE")
        print("  ".join(row))


if __name__ == "__main__":
    main()
