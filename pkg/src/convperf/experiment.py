"""Experiment harness: grid runs, metric correlations, ablation, tree export.

A grid cell pairs a model spec with a feature set, a target, and an
optional prefix window.  Every cell trains on the train split with a
train-fitted standardizer, uses the dev split only for MLP early
stopping, and reports test-split metrics.  Reports serialize to CSV
(byte-stable via repr floats) and to aligned text tables where r gets a
"**" mark at p <= .01.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus
from .features import (
    FeatureSchema,
    Standardizer,
    build_matrix,
)
from .metrics import mse, pearson, r_squared
from .regressors import (
    FOREST,
    LASSO,
    MEDIAN_SPLIT,
    MLP,
    OLS,
    RIDGE,
    SVR,
    TREE,
    ModelSpec,
    TargetKind,
    TrainedModel,
    fit_forest,
    fit_linear,
    fit_mlp,
    fit_svr,
    fit_target,
    fit_tree,
    make_targets,
)
from .tagging import SDA_COMPLAINT, SDA_COMPLIMENT

SIGNIFICANCE_LEVEL = 0.01

METRIC_PAIRS = (
    ("rating", "length"),
    ("rating", "compliments"),
    ("rating", "complaints"),
    ("length", "compliments"),
    ("length", "complaints"),
)


@dataclass(frozen=True)
class GridCell:
    spec: ModelSpec
    feature_set: str
    target: TargetKind
    prefix_k: int | None = None
    name: str | None = None

    @property
    def label(self) -> str:
        return self.name if self.name is not None else self.spec.family


@dataclass(frozen=True)
class EvalReport:
    model: str
    target_kind: str
    feature_set: str
    prefix_k: int | None
    mse: float
    r2: float
    pearson_r: float
    p_value: float
    n: int


@dataclass(frozen=True)
class CellResult:
    report: EvalReport
    model: TrainedModel


@dataclass(frozen=True)
class CorrelationReport:
    """Pairwise Pearson r and p over per-conversation metric series."""

    entries: tuple[tuple[str, str, float, float], ...]
    n: int

    def get(self, a: str, b: str) -> tuple[float, float]:
        for m1, m2, r, p in self.entries:
            if {m1, m2} == {a, b}:
                return r, p
        raise KeyError(f"no correlation entry for ({a}, {b})")


@dataclass(frozen=True)
class AblationResult:
    ablated: tuple[str, ...]
    report: EvalReport


def fit_spec(spec: ModelSpec, X, y, dev=None, fallback_seed: int = 0) -> TrainedModel:
    """Dispatch one prepared-matrix fit by model family.

    ``dev`` is an (X, y) pair used only by the MLP's early stopping.
    Families without their own seed field fall back to
    ``fallback_seed``.
    """
    hp = spec.hyperparameters
    seed = spec.seed if spec.seed is not None else fallback_seed
    family = spec.family
    if family in (OLS, RIDGE, LASSO):
        return fit_linear(X, y, family=family, lam=hp.get("lambda", 0.0))
    if family == TREE:
        return fit_tree(
            X, y, max_depth=hp.get("max_depth"), min_leaf=hp.get("min_leaf", 1)
        )
    if family == FOREST:
        return fit_forest(
            X,
            y,
            n_trees=hp.get("n_trees", 100),
            max_depth=hp.get("max_depth"),
            min_leaf=hp.get("min_leaf", 1),
            feat_frac=hp.get("feat_frac", 1.0 / 3.0),
            bootstrap=hp.get("bootstrap", True),
            seed=seed,
        )
    if family == SVR:
        return fit_svr(
            X,
            y,
            C=hp.get("C", 1.0),
            epsilon=hp.get("epsilon", 0.1),
            gamma=hp.get("gamma", "scale"),
            tol=hp.get("tol", 1e-3),
            max_iter=hp.get("max_iter"),
        )
    if family == MLP:
        return fit_mlp(
            X,
            y,
            hidden=tuple(hp.get("hidden", (5,))),
            lr=hp.get("lr", 1e-3),
            batch_size=hp.get("batch_size", 32),
            max_epochs=hp.get("max_epochs", 1000),
            patience=hp.get("patience", 20),
            seed=seed,
            dev=dev,
        )
    raise ValueError(f"unknown model family: {family!r}")


def _split_or_err(corpus: Corpus, split: str, required: bool):
    convs = corpus.subset(split)
    if required and not convs:
        raise ValueError(f"{split} split is empty")
    return convs


def _prepare_matrices(
    corpus: Corpus,
    schema: FeatureSchema,
    feature_set: str,
    prefix_k: int | None,
    drop: tuple[str, ...] = (),
):
    """Split-wise standardized matrices, minus any dropped columns."""
    all_names = schema.names(feature_set)
    unknown = [d for d in drop if d not in all_names]
    if unknown:
        raise ValueError(f"unknown feature names: {unknown}")
    keep = [i for i, n in enumerate(all_names) if n not in drop]
    names = tuple(all_names[i] for i in keep)

    train = _split_or_err(corpus, "train", required=True)
    dev = _split_or_err(corpus, "dev", required=False)
    test = _split_or_err(corpus, "test", required=True)

    mats = {}
    for split_name, convs in (("train", train), ("dev", dev), ("test", test)):
        if convs:
            _, X = build_matrix(convs, schema, feature_set, prefix_k)
            mats[split_name] = X[:, keep]
        else:
            mats[split_name] = np.zeros((0, len(keep)))
    std = Standardizer.fit(mats["train"], names)
    mats = {k: std.transform(v) for k, v in mats.items()}
    return names, std, (train, dev, test), mats


def _resolve_target(target: TargetKind, train_convs) -> TargetKind:
    if target.kind == MEDIAN_SPLIT and target.median is None:
        return fit_target(
            MEDIAN_SPLIT, [c.capped_length for c in train_convs]
        )
    return target


def _run_one(
    cell: GridCell,
    corpus: Corpus,
    schema: FeatureSchema,
    seed: int,
    drop: tuple[str, ...] = (),
) -> CellResult:
    names, std, (train, dev, test), mats = _prepare_matrices(
        corpus, schema, cell.feature_set, cell.prefix_k, drop
    )
    target = _resolve_target(cell.target, train)
    y_train = make_targets(train, target)
    y_test = make_targets(test, target)
    dev_pair = None
    if len(dev) and cell.spec.family == MLP:
        dev_pair = (mats["dev"], make_targets(dev, target))

    model = fit_spec(cell.spec, mats["train"], y_train, dev_pair, seed)
    model = model.bind(target=target, feature_names=names, standardizer=std)

    pred = model.predict_prepared(mats["test"])
    r, p = pearson(pred, y_test)
    report = EvalReport(
        model=cell.label,
        target_kind=target.kind,
        feature_set=cell.feature_set,
        prefix_k=cell.prefix_k,
        mse=mse(pred, y_test),
        r2=r_squared(pred, y_test),
        pearson_r=r,
        p_value=p,
        n=int(y_test.shape[0]),
    )
    return CellResult(report=report, model=model)


def run_grid(
    cells,
    corpus: Corpus,
    seed: int = 0,
    schema: FeatureSchema | None = None,
) -> list[CellResult]:
    """Train and evaluate every grid cell; results follow grid order."""
    schema = schema if schema is not None else FeatureSchema()
    results = []
    for i, cell in enumerate(cells):
        try:
            results.append(_run_one(cell, corpus, schema, seed))
        except Exception as e:
            raise RuntimeError(
                f"grid cell {i} ({cell.label}, {cell.feature_set}, "
                f"{cell.target.kind}, prefix_k={cell.prefix_k}) failed: {e}"
            ) from e
    return results


def run_experiment(
    cells,
    corpus: Corpus,
    seed: int = 0,
    schema: FeatureSchema | None = None,
) -> list[EvalReport]:
    return [res.report for res in run_grid(cells, corpus, seed, schema)]


def ablate(
    cell: GridCell,
    feature_names,
    corpus: Corpus,
    seed: int = 0,
    schema: FeatureSchema | None = None,
) -> AblationResult:
    """Refit the cell with the named features removed from its schema."""
    schema = schema if schema is not None else FeatureSchema()
    dropped = tuple(feature_names)
    result = _run_one(cell, corpus, schema, seed, drop=dropped)
    return AblationResult(ablated=dropped, report=result.report)


def correlate_metrics(corpus: Corpus) -> CorrelationReport:
    """Pearson over per-conversation rating, length, and SDA rates.

    Lengths are the capped modeling lengths; compliment and complaint
    rates are tagged-exchange counts over raw length.  Every
    conversation must be rated.
    """
    series: dict[str, list[float]] = {
        "rating": [],
        "length": [],
        "compliments": [],
        "complaints": [],
    }
    for conv in corpus:
        if conv.rating is None:
            raise ValueError(f"conversation {conv.id!r} has no rating")
        n = conv.raw_length
        series["rating"].append(float(conv.rating))
        series["length"].append(float(conv.capped_length))
        series["compliments"].append(
            sum(1 for ex in conv.exchanges if SDA_COMPLIMENT in ex.sda_tags) / n
        )
        series["complaints"].append(
            sum(1 for ex in conv.exchanges if SDA_COMPLAINT in ex.sda_tags) / n
        )
    arrays = {k: np.array(v) for k, v in series.items()}
    entries = []
    for a, b in METRIC_PAIRS:
        r, p = pearson(arrays[a], arrays[b])
        entries.append((a, b, r, p))
    return CorrelationReport(entries=tuple(entries), n=len(corpus))


def export_tree(
    model: TrainedModel,
    depth_limit: int | None = None,
    tree_index: int | None = None,
    feature_names=None,
) -> str:
    """Render a fitted tree as DOT graph text.

    Forest models need ``tree_index`` to pick one member.  Nodes list
    the split feature and threshold (or the leaf mean), the sample
    count, and the within-node squared deviation; internal nodes at
    ``depth_limit`` are shown as truncated leaves.  Node ids and line
    order are stable across runs.
    """
    family = model.spec.family
    if family == TREE:
        params = model.params
        if tree_index is not None:
            raise ValueError("tree_index only applies to forest models")
    elif family == FOREST:
        if tree_index is None:
            raise ValueError("forest export needs tree_index to pick a member")
        trees = model.params.trees
        if not 0 <= tree_index < len(trees):
            raise ValueError(
                f"tree_index {tree_index} out of range for {len(trees)} trees"
            )
        params = trees[tree_index]
    else:
        raise ValueError(f"cannot export family {family!r} as a tree")

    if feature_names is None:
        feature_names = model.feature_names
    def fname(j: int) -> str:
        if feature_names is not None:
            return feature_names[j]
        return f"x{j}"

    lines = ["digraph tree {"]
    stack = [(0, 0)]
    while stack:
        node, depth = stack.pop()
        n = int(params.n_samples[node])
        ss = repr(float(params.impurity[node]))
        j = int(params.feature[node])
        if j < 0:
            val = repr(float(params.value[node]))
            lines.append(f'  n{node} [label="value={val}\\nn={n} ss={ss}"];')
            continue
        if depth_limit is not None and depth >= depth_limit:
            val = repr(float(params.value[node]))
            lines.append(
                f'  n{node} [label="(depth limit) value={val}\\nn={n} ss={ss}"];'
            )
            continue
        thr = repr(float(params.threshold[node]))
        lines.append(
            f'  n{node} [label="{fname(j)} <= {thr}\\nn={n} ss={ss}"];'
        )
        left = int(params.left[node])
        right = int(params.right[node])
        lines.append(f'  n{node} -> n{left} [label="yes"];')
        lines.append(f'  n{node} -> n{right} [label="no"];')
        stack.append((right, depth + 1))
        stack.append((left, depth + 1))
    lines.append("}")
    return "\n".join(lines) + "\n"


def _star(p: float) -> str:
    return "**" if p <= SIGNIFICANCE_LEVEL else ""


def write_reports_csv(fh, reports, config_hash: str = "") -> None:
    """CSV serialization; repr floats keep equal runs byte-identical."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(
        [
            "model",
            "target",
            "feature_set",
            "prefix_k",
            "n",
            "mse",
            "r2",
            "pearson_r",
            "p_value",
            "config_hash",
        ]
    )
    for r in reports:
        w.writerow(
            [
                r.model,
                r.target_kind,
                r.feature_set,
                "" if r.prefix_k is None else r.prefix_k,
                r.n,
                repr(r.mse),
                repr(r.r2),
                repr(r.pearson_r),
                repr(r.p_value),
                config_hash,
            ]
        )


def format_report_table(reports) -> str:
    """Aligned text table in (MSE, R2, r) column order."""
    header = ["model", "target", "features", "k", "n", "MSE", "R2", "r"]
    rows = [header]
    for r in reports:
        rows.append(
            [
                r.model,
                r.target_kind,
                r.feature_set,
                "-" if r.prefix_k is None else str(r.prefix_k),
                str(r.n),
                f"{r.mse:.3f}",
                f"{r.r2:.3f}",
                f"{r.pearson_r:.3f}{_star(r.p_value)}",
            ]
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    out = []
    for row in rows:
        out.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(out) + "\n"


def write_correlations_csv(fh, report: CorrelationReport, config_hash: str = "") -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["metric_a", "metric_b", "n", "r", "p_value", "config_hash"])
    for a, b, r, p in report.entries:
        w.writerow([a, b, report.n, repr(r), repr(p), config_hash])


def format_correlations(report: CorrelationReport) -> str:
    rows = [["pair", "r", "p"]]
    for a, b, r, p in report.entries:
        rows.append([f"{a}/{b}", f"{r:.3f}{_star(p)}", f"{p:.3g}"])
    widths = [max(len(row[i]) for row in rows) for i in range(3)]
    out = []
    for row in rows:
        out.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(out) + f"\nn={report.n}\n"
