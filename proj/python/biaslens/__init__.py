"""Representation-bias audits of ranked result lists."""

import json
import os

from ._core import (
    DEFAULT_SEED,
    REPORT_SCHEMA,
    BiaslensError,
    BiasRecord,
    BiasSummary,
    FeatureScheme,
    LabelCatalog,
    ParseError,
    RankedRun,
    Ratio,
    TargetCounts,
    aggregate,
    bias_at_n,
    evaluate_json,
    ideal_target_ratio_at_n,
    model_ratio_at_n,
    parse_labels,
    parse_runs,
    parse_target_counts,
    simulate_run,
    target_ratio,
)

__all__ = [
    "DEFAULT_SEED",
    "REPORT_SCHEMA",
    "BiaslensError",
    "BiasRecord",
    "BiasSummary",
    "FeatureScheme",
    "LabelCatalog",
    "ParseError",
    "RankedRun",
    "Ratio",
    "TargetCounts",
    "aggregate",
    "bias_at_n",
    "evaluate",
    "ideal_target_ratio_at_n",
    "model_ratio_at_n",
    "parse_labels",
    "parse_runs",
    "parse_target_counts",
    "simulate_run",
    "target_ratio",
]


def evaluate(runs, labels=(), targets=None, members=None, *, cutoff=10,
             scheme=None, strict=False, seed=DEFAULT_SEED, sd="sample",
             jobs=1):
    """Run a full audit and return the report as a dict.

    `targets` and `members` map a source label to a file path.
    """
    if scheme is None:
        scheme = FeatureScheme("gender", ["female", "male"])
    if isinstance(labels, (str, os.PathLike)):
        labels = [labels]
    text = evaluate_json(
        os.fspath(runs),
        [os.fspath(p) for p in labels],
        {k: os.fspath(v) for k, v in (targets or {}).items()},
        {k: os.fspath(v) for k, v in (members or {}).items()},
        cutoff,
        scheme,
        strict,
        seed,
        sd,
        jobs,
    )
    return json.loads(text)
