"""Splits, cross-validation, grid search, metrics, balancing,
permutation importance, and report tables.

Positive class is always the anomaly (spam or phishing). Aggregate CV
metrics come from the confusion matrix pooled across folds; AUC pools
the per-fold decision values instead, since it is not a function of
the confusion matrix.
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass

import numpy as np

from .learners import ModelSpec, Score, derive_seed, train, train_stack
from .learners.base import stratified_fold_ids

__all__ = [
    "EvalReport", "ImportanceReport", "StackSpec", "RenderedTable",
    "make_scores", "compute_metrics", "roc_points",
    "stratified_split", "fit_model", "kfold_cv", "grid_search", "balance",
    "permutation_importance", "select_top_m", "render_table",
    "render_importance_table",
]

log = logging.getLogger(__name__)

METRIC_COLUMNS = ("Accuracy", "F1", "Recall", "Precision", "AUC")


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float | None
    confusion: tuple[int, int, int, int]  # tp, fp, fn, tn
    per_fold: tuple | None = None


@dataclass(frozen=True)
class ImportanceReport:
    feature_names: tuple[str, ...]
    mean_drop: tuple[float, ...]
    std_drop: tuple[float, ...]
    repeats: int
    baseline_accuracy: float


@dataclass(frozen=True)
class StackSpec:
    """Stand-in for ModelSpec when cross-validating a stacked ensemble."""

    base_specs: tuple[ModelSpec, ...]
    meta_spec: ModelSpec

    @property
    def algorithm(self) -> str:
        return "stack"


def make_scores(decision_values: np.ndarray, one_class: bool = False) -> list[Score]:
    """Wrap raw decision values as Scores.

    Binary models: anomalous iff the value is >= 0. One-class models
    emit inlier-positive values, so the stored decision value is negated
    (higher must mean more anomalous for ranking) while the label keeps
    the model's own convention: anomalous iff the raw value is < 0.
    """
    if one_class:
        return [Score(decision_value=-float(v), is_anomalous=float(v) < 0.0)
                for v in decision_values]
    return [Score(decision_value=float(v), is_anomalous=float(v) >= 0.0)
            for v in decision_values]


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _auc(decision_values: np.ndarray, y: np.ndarray) -> float | None:
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = _midranks(decision_values)
    # Mann-Whitney: concordant pairs with ties counted half
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def compute_metrics(scores: list[Score], y) -> EvalReport:
    y = np.asarray(y, dtype=np.int64)
    if len(scores) != len(y):
        raise ValueError("scores and labels differ in length")
    predicted = np.array([s.is_anomalous for s in scores])
    actual = y == 1
    tp = int(np.sum(predicted & actual))
    fp = int(np.sum(predicted & ~actual))
    fn = int(np.sum(~predicted & actual))
    tn = int(np.sum(~predicted & ~actual))
    total = tp + fp + fn + tn
    accuracy = (tp + tn) / total if total else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall > 0 else 0.0)
    dv = np.array([s.decision_value for s in scores])
    return EvalReport(accuracy, precision, recall, f1, _auc(dv, y),
                      (tp, fp, fn, tn))


def roc_points(scores: list[Score], y) -> np.ndarray:
    """(fpr, tpr) pairs sweeping the decision threshold from high to
    low, tied values grouped; starts at (0,0), ends at (1,1)."""
    y = np.asarray(y, dtype=np.int64)
    dv = np.array([s.decision_value for s in scores])
    pos = y == 1
    n_pos = max(int(pos.sum()), 1)
    n_neg = max(int((~pos).sum()), 1)
    order = np.argsort(-dv, kind="stable")
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and dv[order[j + 1]] == dv[order[i]]:
            j += 1
        for idx in order[i:j + 1]:
            if pos[idx]:
                tp += 1
            else:
                fp += 1
        points.append((fp / n_neg, tp / n_pos))
        i = j + 1
    return np.array(points)


def stratified_split(X, y, test_fraction: float, seed: int):
    """Disjoint, exhaustive (train, test) index arrays with per-class
    test counts at round(class_count * fraction)."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    y = np.asarray(y, dtype=np.int64)
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) < 2:
        raise ValueError("both classes must be present")
    if counts.min() < 2:
        raise ValueError("every class needs at least 2 examples")
    rng = np.random.default_rng(derive_seed(seed, "split"))
    test_parts, train_parts = [], []
    for cls in classes:
        idx = np.flatnonzero(y == cls)
        rng.shuffle(idx)
        n_test = int(np.floor(len(idx) * test_fraction + 0.5))
        test_parts.append(idx[:n_test])
        train_parts.append(idx[n_test:])
    train = np.sort(np.concatenate(train_parts))
    test = np.sort(np.concatenate(test_parts))
    return train, test


def fit_model(spec, X, y, seed: int):
    """Train a ModelSpec or StackSpec; stack base and meta seeds derive
    from the given seed so two specs never share a random stream."""
    if isinstance(spec, StackSpec):
        bases = [ModelSpec(b.algorithm, b.hyperparameters,
                           derive_seed(seed, "base", i))
                 for i, b in enumerate(spec.base_specs)]
        meta = ModelSpec("logreg", spec.meta_spec.hyperparameters,
                         derive_seed(seed, "meta"))
        return train_stack(bases, meta, X, y)
    reseeded = ModelSpec(spec.algorithm, spec.hyperparameters, seed)
    return train(reseeded, X, y)


def kfold_cv(spec, X, y, k: int, seed: int) -> EvalReport:
    """Stratified k-fold CV for a ModelSpec or StackSpec. Per-fold model
    seeds derive from (spec.seed, fold), so evaluation order does not
    matter."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if k < 2:
        raise ValueError("k must be >= 2")
    _, counts = np.unique(y, return_counts=True)
    if len(counts) < 2 or counts.min() < k:
        raise ValueError(f"each class needs at least k={k} examples")
    base_seed = spec.meta_spec.seed if isinstance(spec, StackSpec) else spec.seed
    fold_of = stratified_fold_ids(y, k, derive_seed(seed, "folds"))
    pooled_dv = np.empty(len(y))
    pooled_pred = np.empty(len(y), dtype=bool)
    per_fold = []
    for f in range(k):
        held = fold_of == f
        model = fit_model(spec, X[~held], y[~held], derive_seed(base_seed, "fold", f))
        dv = model.decision_values(X[held])
        scores = make_scores(dv)
        per_fold.append(compute_metrics(scores, y[held]))
        pooled_dv[held] = dv
        pooled_pred[held] = dv >= 0.0
    scores = [Score(decision_value=float(v), is_anomalous=bool(p))
              for v, p in zip(pooled_dv, pooled_pred)]
    pooled = compute_metrics(scores, y)
    return EvalReport(pooled.accuracy, pooled.precision, pooled.recall,
                      pooled.f1, pooled.auc, pooled.confusion,
                      per_fold=tuple(per_fold))


def grid_search(algorithm: str, grid: dict, X, y, k: int, seed: int):
    """Evaluate every Cartesian-product cell with kfold_cv.

    Cells enumerate with the first grid key slowest (dict insertion
    order). Best cell: highest pooled accuracy, then highest F1, then
    earliest enumeration. Cell seeds derive from the cell's contents,
    so reordering the grid cannot change any cell's result. An empty
    grid evaluates the single all-defaults cell.
    """
    keys = list(grid)
    cells = [dict(zip(keys, combo))
             for combo in itertools.product(*(grid[k] for k in keys))]
    best_spec = None
    best_report = None
    results = []
    for hp in cells:
        cell_seed = derive_seed(seed, "cell", json.dumps(hp, sort_keys=True, default=str))
        spec = ModelSpec(algorithm, hp, cell_seed)
        report = kfold_cv(spec, X, y, k, seed)
        results.append((hp, report))
        if best_report is None or (report.accuracy, report.f1) > (
                best_report.accuracy, best_report.f1):
            best_spec, best_report = spec, report
    return best_spec, results


def balance(y, seed: int) -> np.ndarray:
    """Indices of a class-balanced subset: the majority class is
    downsampled (seeded, without replacement) to the minority count and
    the combined order is shuffled."""
    y = np.asarray(y, dtype=np.int64)
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) < 2:
        raise ValueError("both classes must be present")
    floor = counts.min()
    rng = np.random.default_rng(derive_seed(seed, "balance"))
    keep = []
    for cls in classes:
        idx = np.flatnonzero(y == cls)
        if len(idx) > floor:
            idx = rng.choice(idx, size=floor, replace=False)
        keep.append(idx)
    out = np.concatenate(keep)
    rng.shuffle(out)
    return out


def permutation_importance(model, X_test, y_test, repeats: int = 10,
                           seed: int = 0, one_class: bool = False,
                           feature_names: list[str] | None = None,
                           fingerprint: str | None = None) -> ImportanceReport:
    """Mean accuracy drop per feature when only that column is shuffled.

    The baseline is scored once; each (feature, repeat) pair draws its
    own generator so results do not depend on evaluation order.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    if (fingerprint is not None and model.schema_fingerprint is not None
            and fingerprint != model.schema_fingerprint):
        raise ValueError("feature schema fingerprint does not match the model")
    X_test = np.asarray(X_test, dtype=np.float64)
    y_test = np.asarray(y_test, dtype=np.int64)
    n, d = X_test.shape
    if feature_names is None:
        feature_names = [f"f{j}" for j in range(d)]

    def accuracy(mat):
        dv = model.decision_values(mat)
        predicted = (dv < 0.0) if one_class else (dv >= 0.0)
        return float(np.mean(predicted == (y_test == 1)))

    baseline = accuracy(X_test)
    mean_drop = []
    std_drop = []
    for j in range(d):
        drops = np.empty(repeats)
        for r in range(repeats):
            rng = np.random.default_rng(derive_seed(seed, "perm", j, r))
            shuffled = X_test.copy()
            shuffled[:, j] = X_test[rng.permutation(n), j]
            drops[r] = baseline - accuracy(shuffled)
        mean_drop.append(float(drops.mean()))
        std_drop.append(float(drops.std()))
    return ImportanceReport(tuple(feature_names), tuple(mean_drop),
                            tuple(std_drop), repeats, baseline)


def select_top_m(report: ImportanceReport, m: int) -> list[str]:
    """Names of the m features with the largest mean drop; ties keep
    schema order. Asking for more features than exist returns all of
    them with a warning."""
    if m < 1:
        raise ValueError("m must be >= 1")
    names = list(report.feature_names)
    if m > len(names):
        log.warning("asked for top %d of %d features; returning all", m, len(names))
        return names
    order = np.argsort(-np.asarray(report.mean_drop), kind="stable")[:m]
    return [names[i] for i in order]


@dataclass(frozen=True)
class RenderedTable:
    text: str
    csv: str


def _fmt(value: float | None, scaled: bool) -> str:
    if value is None:
        return "n/a"
    return f"{value * 100.0:.4f}" if scaled else f"{value:.4f}"


def _report_cells(report: EvalReport) -> list[str]:
    return [_fmt(report.accuracy, True), _fmt(report.f1, True),
            _fmt(report.recall, True), _fmt(report.precision, True),
            _fmt(report.auc, False)]


def _layout(rows: list[list[str]]) -> str:
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
                     for row in rows) + "\n"


def render_table(named_reports: list[tuple[str, EvalReport]],
                 style: str) -> RenderedTable:
    """Paper-style tables: percentages at 4 decimals, AUC unscaled.

    binary and stacking styles put one model per row; oneclass
    transposes, with one metric per row and one run per column.
    """
    if style not in ("binary", "stacking", "oneclass"):
        raise ValueError(f"unknown table style {style!r}")
    if style == "oneclass":
        header = ["Metrics"] + [name for name, _ in named_reports]
        grid = [header]
        all_cells = [_report_cells(r) for _, r in named_reports]
        for i, metric in enumerate(METRIC_COLUMNS):
            grid.append([metric] + [cells[i] for cells in all_cells])
    else:
        label = "Algorithm" if style == "binary" else "Base Learners"
        grid = [[label, *METRIC_COLUMNS]]
        for name, report in named_reports:
            grid.append([name, *_report_cells(report)])
    text = _layout(grid)
    csv = "\n".join(",".join(_csv_escape(c) for c in row) for row in grid) + "\n"
    return RenderedTable(text, csv)


def _csv_escape(cell: str) -> str:
    if "," in cell or '"' in cell or "\n" in cell:
        return '"' + cell.replace('"', '""') + '"'
    return cell


def render_importance_table(report: ImportanceReport) -> RenderedTable:
    """Permutation importance, largest mean accuracy drop first (ties
    keep schema order). Drops are percentage points at 4 decimals."""
    order = np.argsort(-np.asarray(report.mean_drop), kind="stable")
    grid = [["Feature", "Mean Drop", "Std Dev"]]
    for i in order:
        grid.append([report.feature_names[i],
                     _fmt(report.mean_drop[i], True),
                     _fmt(report.std_drop[i], True)])
    text = _layout(grid)
    csv = "\n".join(",".join(_csv_escape(c) for c in row) for row in grid) + "\n"
    return RenderedTable(text, csv)
