"""Tree (Graphviz DOT) and table (CSV) renderings of classifiers and sweeps."""
from __future__ import annotations

import csv
import io
import math
import os
from collections import Counter
from decimal import ROUND_HALF_UP, Decimal

from .classifier import Classifier, PerformancePoint
from .dataset import AttributeSchema, DataError

TABLE_HEADER = ["label", "loc_supp", "min_conf", "max_lhs", "sensitivity",
                "specificity", "classification_error"]


def round_half_away(x: float, places: int = 3) -> str:
    """Decimal rounding of the shortest repr, so 0.8155 -> 0.816."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    q = Decimal(1).scaleb(-places)
    d = Decimal(repr(float(x)))
    return str(d.copy_abs().quantize(q, rounding=ROUND_HALF_UP).copy_sign(d))


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _fmt_rr(rr: float) -> str:
    return "RR=inf" if math.isinf(rr) else f"RR={rr:.2f}"


def item_order(c: Classifier) -> list[int]:
    """Global item order for prefix sharing: frequency among patterns, descending; ties by item id."""
    freq = Counter(i for p in c.patterns for i in p.itemset)
    return sorted(freq, key=lambda i: (-freq[i], i))


def pattern_paths(c: Classifier) -> list[tuple[int, ...]]:
    rank = {i: r for r, i in enumerate(item_order(c))}
    return [tuple(sorted(p.itemset, key=rank.__getitem__)) for p in c.patterns]


def export_tree(c: Classifier, schema: AttributeSchema | None = None,
                root_label: str = "Total Population") -> str:
    """Render the classifier as a prefix tree in DOT.

    Every pattern is one path from the root; the node ending a pattern
    carries its validated relative risk (a node may both end one pattern and
    continue others).
    """
    schema = schema or c.schema
    if not c.patterns:
        raise DataError("cannot draw an empty classifier")
    children: dict[tuple, dict[int, tuple]] = {(): {}}
    terminal: dict[tuple, float] = {}
    for path, pat in zip(pattern_paths(c), c.patterns):
        for depth in range(1, len(path) + 1):
            prefix = path[:depth]
            children.setdefault(prefix, {})
            children[path[:depth - 1]].setdefault(path[depth - 1], prefix)
        terminal[path] = pat.validated_rr

    rank = {i: r for r, i in enumerate(item_order(c))}
    ids: dict[tuple, str] = {}
    lines = ["digraph risk_patterns {", "  rankdir=LR;",
             '  node [shape=box, style=rounded, fontname="Helvetica"];',
             f"  n0 [label={_dot_quote(root_label)}];"]
    ids[()] = "n0"
    edges = []
    stack = [()]
    while stack:
        node = stack.pop(0)
        for item in sorted(children[node], key=rank.__getitem__):
            child = children[node][item]
            nid = f"n{len(ids)}"
            ids[child] = nid
            if schema is not None:
                name, level = schema.item_names(item)
                text = f"{name} = {level}"
            else:
                text = f"item {item}"
            attrs = ""
            if child in terminal:
                text += "\n" + _fmt_rr(terminal[child])
                attrs = ", peripheries=2"
            lines.append(f"  {nid} [label={_dot_quote(text)}{attrs}];")
            edges.append(f"  {ids[node]} -> {nid};")
            stack.append(child)
    lines.extend(edges)
    lines.append("}")
    return "\n".join(lines) + "\n"


def _param(v) -> str:
    return "" if v is None else f"{v:g}"


def export_table(points) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_HEADER)
    for p in points:
        w.writerow([p.label, _param(p.loc_supp), _param(p.min_conf), _param(p.max_lhs),
                    round_half_away(p.sensitivity), round_half_away(p.specificity),
                    round_half_away(p.global_error)])
    return buf.getvalue()


def read_points(source) -> list[PerformancePoint]:
    """Parse a points CSV (the table format; ``global_error`` is accepted as an alias)."""
    if isinstance(source, (str, os.PathLike)):
        try:
            with open(source, encoding="utf-8", newline="") as fh:
                text = fh.read()
        except OSError as exc:
            raise DataError(f"cannot read {os.fspath(source)!r}: {exc.strerror}") from None
    else:
        text = source.read()
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows:
        raise DataError("empty dataset")
    def num(v):
        return float(v) if v else math.nan

    points = []
    for r, row in enumerate(rows, start=1):
        row = {k.strip().lower(): (v or "").strip() for k, v in row.items() if k}
        err = row.get("classification_error", row.get("global_error", ""))
        try:
            points.append(PerformancePoint(
                sensitivity=num(row["sensitivity"]),
                specificity=num(row["specificity"]),
                global_error=num(err),
                label=row.get("label") or row.get("num") or str(r),
                loc_supp=float(row["loc_supp"].rstrip("%")) if row.get("loc_supp") else None,
                min_conf=float(row["min_conf"]) if row.get("min_conf") else None,
                max_lhs=int(float(row["max_lhs"])) if row.get("max_lhs") else None,
            ))
        except (KeyError, ValueError) as exc:
            raise DataError(f"points row {r}: {exc}") from None
    return points
