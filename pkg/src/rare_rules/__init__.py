"""Class association rules for rare positive classes.

Mine rules whose consequent is the target class, prune them to a
non-redundant family of risk patterns, and combine representative patterns
into a disjunctive classifier.
"""
from ._backend import BACKEND
from .classifier import (Classifier, ConfusionMatrix, Pattern, PerformancePoint, evaluate,
                         grid_search, reference_grid, predict, predict_all, roc_select,
                         run_pipeline, select_representatives, train)
from .dataset import (AttributeSchema, Attribute, DataError, Item, SplitSpec, TransactionSet,
                      encode, infer_schema, split, split_indices)
from .mining import ClassRule, MiningParams, RuleSet, apriori_gen, count_pass, mine
from .pruning import (PrunedFamily, prune_redundant, prune_weak, stage1,
                      threshold_risk_patterns)
from .report import export_table, export_tree
from .stats import count_test, metrics, power_bound, relative_risk, std_normal_cdf
from .synth import PlantSpec, generate

__version__ = "0.1.0"
