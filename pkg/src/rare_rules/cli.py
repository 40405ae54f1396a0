"""Command-line entry point: ``rare-rules <subcommand> ...``.

Exit status: 0 on success, 1 on usage errors, 2 on data errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict

from . import __version__
from .classifier import (COVERAGE, PER_RECORD, Classifier, evaluate, grid_search, reference_grid,
                         roc_select, train)
from .dataset import AttributeSchema, DataError, SplitSpec, encode, infer_schema, split
from .mining import MiningParams, mine, write_rules
from .pruning import write_audit
from .report import export_table, export_tree, read_points
from .synth import PlantSpec, generate, write_outputs

log = logging.getLogger("rare_rules")

DEFAULTS = {
    "min_local_support": 0.10,
    "min_conf_ratio": 4.0,
    "max_length": 3,
    "rr_threshold": 2.0,
    "k": 1,
    "seed": 0,
    "split": "0.5,0.25,0.25",
    "out": ".",
    "policy": COVERAGE,
    "roc_policy": "maximin",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_data(p, data_flag=True):
    if data_flag:
        p.add_argument("--data", help="input CSV")
    p.add_argument("--schema", help="schema JSON (inferred from the data when omitted)")
    p.add_argument("--class-column")
    p.add_argument("--positive-label")
    p.add_argument("--missing-level", help="map blank cells to this level instead of rejecting them")


def _add_params(p):
    p.add_argument("--min-local-support", type=float, help="fraction of positives (default 0.10)")
    p.add_argument("--min-conf-ratio", type=float, help="confidence as a multiple of the positive rate (default 4)")
    p.add_argument("--max-length", type=int, help="max antecedent length (default 3)")
    p.add_argument("--rr-threshold", type=float, help="relative-risk threshold tau (default 2.0)")
    p.add_argument("--k", type=int, help="count-test margin (default 1)")


def _add_split(p):
    p.add_argument("--split", help="train,validation,test fractions (default 0.5,0.25,0.25)")
    p.add_argument("--no-stratify", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rare-rules", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"rare-rules {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file whose keys mirror the long flags")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("schema", parents=[common], help="infer a schema from a CSV")
    _add_data(p)

    p = sub.add_parser("split", parents=[common], help="split a CSV into train/validation/test")
    _add_data(p)
    _add_split(p)

    p = sub.add_parser("mine", parents=[common], help="mine class association rules")
    _add_data(p)
    _add_params(p)
    p.add_argument("--with-metrics", action="store_true", help="add rule metrics to the JSON lines")

    p = sub.add_parser("train", parents=[common], help="stage 1 + stage 2: write a classifier")
    _add_data(p)
    p.add_argument("--train", help="training CSV")
    p.add_argument("--validation", help="validation CSV")
    _add_split(p)
    _add_params(p)
    p.add_argument("--policy", choices=[COVERAGE, PER_RECORD])

    p = sub.add_parser("evaluate", parents=[common], help="evaluate a classifier on test data")
    p.add_argument("--classifier", required=False)
    p.add_argument("--data", help="test CSV")
    p.add_argument("--label", default="")

    p = sub.add_parser("grid", parents=[common], help="parameter sweep and ROC selection")
    _add_data(p)
    p.add_argument("--train")
    p.add_argument("--validation")
    p.add_argument("--test")
    _add_split(p)
    p.add_argument("--rr-threshold", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--points", help="points CSV to select from")
    p.add_argument("--select-only", action="store_true", help="only run ROC selection on --points")
    p.add_argument("--roc-policy", choices=["maximin", "youden", "distance"])
    p.add_argument("--policy", choices=[COVERAGE, PER_RECORD])
    p.add_argument("--workers", type=int)

    p = sub.add_parser("export-tree", parents=[common], help="write the classifier as a DOT tree")
    p.add_argument("--classifier")

    p = sub.add_parser("synth", parents=[common], help="generate data with planted risk patterns")
    p.add_argument("--spec", help="PlantSpec JSON")
    return parser


def _merge_config(args) -> argparse.Namespace:
    cfg = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read config {args.config!r}: {exc}") from None
    for key, value in cfg.items():
        key = key.replace("-", "_")
        if getattr(args, key, None) in (None, False):
            setattr(args, key, value)
    args._seed_given = getattr(args, "seed", None) is not None
    for key, value in DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)
    return args


def _params(args) -> MiningParams:
    try:
        return MiningParams(float(args.min_local_support), float(args.min_conf_ratio),
                            int(args.max_length), float(args.rr_threshold), int(args.k))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _need(args, *names):
    for name in names:
        if not getattr(args, name, None):
            raise UsageError(f"{args.command}: --{name.replace('_', '-')} is required")


def _schema(args, data_path) -> AttributeSchema:
    if args.schema:
        try:
            schema = AttributeSchema.load(args.schema)
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise DataError(f"cannot read schema {args.schema!r}: {exc}") from None
        if args.class_column:
            schema = AttributeSchema(schema.attributes, args.class_column,
                                     args.positive_label or schema.positive_label, schema.negative_label)
        return schema
    if not (args.class_column and args.positive_label is not None):
        raise UsageError(f"{args.command}: give --schema or both --class-column and --positive-label")
    return _wrap(data_path, infer_schema, data_path, args.class_column, args.positive_label,
                 args.missing_level)


def _wrap(path, fn, *a):
    try:
        return fn(*a)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def _load(args, path, schema):
    return _wrap(path, encode, path, schema, None, None, getattr(args, "missing_level", None))


def _split_spec(args) -> SplitSpec:
    try:
        return SplitSpec.parse(str(args.split), seed=int(args.seed), stratified=not args.no_stratify)
    except DataError as exc:
        raise UsageError(str(exc)) from None


def _provenance(args, params: MiningParams | None = None, **fingerprints) -> dict:
    prov = {"tool": "rare-rules", "version": __version__, "seed": int(args.seed),
            "fingerprints": fingerprints}
    if params is not None:
        prov["params"] = asdict(params)
    return prov


def _out(args, name: str) -> str:
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_schema(args):
    _need(args, "data")
    schema = _schema(args, args.data)
    path = _out(args, "schema.json")
    schema.save(path)
    print(f"schema: {schema.m} attributes, {schema.n_items} items -> {path}")


def cmd_split(args):
    _need(args, "data")
    schema = _schema(args, args.data)
    ts = _load(args, args.data, schema)
    spec = _split_spec(args)
    parts = _wrap(args.data, split, ts, spec)
    names = ("train", "validation", "test")
    for name, part in zip(names, parts):
        part.to_csv(_out(args, f"{name}.csv"))
    if not args.schema:
        schema.save(_out(args, "schema.json"))
    _write_json(_out(args, "split.json"), {
        "provenance": _provenance(args, source=ts.fingerprint,
                                  **{n: p.fingerprint for n, p in zip(names, parts)}),
        "fractions": list(spec.fractions), "stratified": spec.stratified,
        "sizes": {n: [p.n, p.n_pos] for n, p in zip(names, parts)},
    })
    for name, part in zip(names, parts):
        print(f"{name}: n={part.n} positives={part.n_pos}")


def cmd_mine(args):
    _need(args, "data")
    params = _params(args)
    schema = _schema(args, args.data)
    ts = _load(args, args.data, schema)
    rules = _wrap(args.data, mine, ts, params)
    prov = _provenance(args, params, train=ts.fingerprint)
    prov.update(n_pos=ts.n_pos, n_neg=ts.n_neg)
    path = _out(args, "rules.jsonl")
    write_rules(rules, path, schema, with_metrics=args.with_metrics, provenance=prov)
    print(f"mined {len(rules)} rules -> {path}")


def _train_data(args):
    if args.train and args.validation:
        schema = _schema(args, args.train)
        return schema, _load(args, args.train, schema), _load(args, args.validation, schema), None
    if args.data:
        schema = _schema(args, args.data)
        ts = _load(args, args.data, schema)
        return (schema,) + tuple(_wrap(args.data, split, ts, _split_spec(args)))
    raise UsageError(f"{args.command}: give --train and --validation, or --data with --split")


def cmd_train(args):
    params = _params(args)
    schema, tr, va, te = _train_data(args)
    clf, family, n_mined = _wrap(args.train or args.data, train, tr, va, params, args.policy)
    clf.provenance.update(_provenance(args, params, train=tr.fingerprint, validation=va.fingerprint))
    clf.provenance["n_mined"] = n_mined
    clf.provenance["n_family"] = len(family)
    clf_path = _out(args, "classifier.json")
    clf.save(clf_path)
    write_rules(family.as_ruleset(), _out(args, "family.jsonl"), schema)
    write_audit(family, _out(args, "audit.jsonl"), schema)
    if te is not None:
        te.to_csv(_out(args, "test.csv"))
        if not args.schema:
            schema.save(_out(args, "schema.json"))
    if clf.status != "ok":
        print("warning: classifier is empty", file=sys.stderr)
    print(f"mined {n_mined} rules, kept {len(family)} after pruning, "
          f"{len(clf)} representative patterns -> {clf_path}")


def cmd_evaluate(args):
    _need(args, "classifier", "data")
    clf = Classifier.load(args.classifier)
    ts = _load(args, args.data, clf.schema)
    cm, point = _wrap(args.data, evaluate, clf, ts, args.label or "test")
    with open(_out(args, "evaluation.csv"), "w", encoding="utf-8") as fh:
        fh.write(export_table([point]))
    _write_json(_out(args, "confusion.json"), {
        "confusion": asdict(cm), "sensitivity": point.sensitivity,
        "specificity": point.specificity, "global_error": point.global_error,
        "provenance": {"tool": "rare-rules", "version": __version__, "seed": int(args.seed),
                       "fingerprints": {"test": ts.fingerprint}},
    })
    print(f"tp={cm.tp} fn={cm.fn} fp={cm.fp} tn={cm.tn} sensitivity={point.sensitivity:.3f} "
          f"specificity={point.specificity:.3f} error={point.global_error:.3f}")


def cmd_grid(args):
    if args.select_only:
        _need(args, "points")
        points = read_points(args.points)
    else:
        if args.train and args.validation and args.test:
            schema = _schema(args, args.train)
            tr, va, te = (_load(args, p, schema) for p in (args.train, args.validation, args.test))
        elif args.data:
            schema = _schema(args, args.data)
            tr, va, te = _wrap(args.data, split, _load(args, args.data, schema), _split_spec(args))
        else:
            raise UsageError("grid: give --points --select-only, --train/--validation/--test, or --data")
        grid = _grid_from_args(args)
        points = grid_search(tr, va, te, grid, workers=args.workers, policy=args.policy)
        with open(_out(args, "grid.csv"), "w", encoding="utf-8") as fh:
            fh.write(export_table(points))
        _write_json(_out(args, "grid_provenance.json"), _provenance(
            args, None, train=tr.fingerprint, validation=va.fingerprint, test=te.fingerprint)
            | {"grid": [asdict(g) for g in grid]})
    try:
        index, point = roc_select(points, args.roc_policy)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    print(point.label or str(index + 1))
    log.info("selected sensitivity=%.3f specificity=%.3f", point.sensitivity, point.specificity)


def _grid_from_args(args):
    raw = getattr(args, "grid", None)
    if raw:
        try:
            return [MiningParams(**{**{"rr_threshold": args.rr_threshold, "k": args.k}, **g}) for g in raw]
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad grid entry: {exc}") from None
    return reference_grid(float(args.rr_threshold), int(args.k))


def cmd_export_tree(args):
    _need(args, "classifier")
    clf = Classifier.load(args.classifier)
    dot = export_tree(clf)
    if args.out and args.out != ".":
        path = _out(args, "tree.dot")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(dot)
        print(f"tree -> {path}")
    else:
        sys.stdout.write(dot)


def cmd_synth(args):
    _need(args, "spec")
    spec = PlantSpec.load(args.spec)
    if args._seed_given:
        spec.noise_seed = int(args.seed)
    ts, truth = generate(spec)
    paths = write_outputs(ts, truth, args.out)
    print(f"synth: n={ts.n} positives={ts.n_pos} -> {paths['data']}")


COMMANDS = {
    "schema": cmd_schema, "split": cmd_split, "mine": cmd_mine, "train": cmd_train,
    "evaluate": cmd_evaluate, "grid": cmd_grid, "export-tree": cmd_export_tree, "synth": cmd_synth,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("rare-rules: a subcommand is required")
        args = _merge_config(args)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
