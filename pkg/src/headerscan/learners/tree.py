"""Array-based binary decision trees: Gini classification and
squared-error regression, shared by the forest and boosting models.

Nodes live in parallel arrays so trees serialize without recursion.
A sample goes left iff x[feature] <= threshold. Leaves have feature -1
and carry a value: P(anomalous) for classification, a real prediction
for regression.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import ModelSpec, check_training_inputs

__all__ = ["TreeArrays", "DecisionTreeModel", "train_decision_tree",
           "build_tree", "apply_tree"]

LEAF = -1


@dataclass
class TreeArrays:
    feature: np.ndarray   # int64, LEAF for leaves
    threshold: np.ndarray  # float64
    left: np.ndarray      # int64 child index
    right: np.ndarray     # int64 child index
    value: np.ndarray     # float64 leaf payload

    @property
    def n_nodes(self) -> int:
        return len(self.feature)


def _best_split(X: np.ndarray, target: np.ndarray, rows: np.ndarray,
                features: np.ndarray, min_leaf: int, criterion: str):
    """Scan candidate features for the best midpoint split.

    Returns (feature, threshold, score) or None. Scores are impurity
    sums to minimize, computed for every candidate feature at once.
    argmin's first-occurrence rule over ascending feature order and
    ascending cut positions enforces the lowest-feature,
    lowest-threshold tie rule. Splits that cannot beat the parent
    score are rejected.
    """
    t = target[rows]
    n = len(rows)
    total = float(t.sum())
    if criterion == "gini":
        # sum over children of n_c * Gini_c / 2 = p(n_c - p)/n_c
        parent = total * (n - total) / n
    else:
        parent = float(t @ t) - total * total / n

    xs = X[np.ix_(rows, features)]
    order = np.argsort(xs, axis=0, kind="stable")
    xv = np.take_along_axis(xs, order, axis=0)
    tv = t[order]
    valid = xv[:-1] < xv[1:]  # row i = split after sorted position i
    ln = np.arange(1, n, dtype=np.float64)[:, None]
    rn = n - ln
    if min_leaf > 1:
        valid &= (ln >= min_leaf) & (rn >= min_leaf)
    if not valid.any():
        return None
    csum = np.cumsum(tv, axis=0)[:-1]
    if criterion == "gini":
        score = csum * (ln - csum) / ln + (total - csum) * (rn - (total - csum)) / rn
    else:
        csq = np.cumsum(tv * tv, axis=0)[:-1]
        sse_l = csq - csum * csum / ln
        sse_r = (float(t @ t) - csq) - (total - csum) ** 2 / rn
        score = sse_l + sse_r
    score[~valid] = np.inf
    pos = np.argmin(score, axis=0)
    cols = np.arange(len(features))
    col_best = score[pos, cols]
    j = int(np.argmin(col_best))
    best_score = float(col_best[j])
    if not best_score < parent - 1e-12:
        return None
    p = int(pos[j])
    th = (float(xv[p, j]) + float(xv[p + 1, j])) / 2.0
    return (int(features[j]), th, best_score)


def build_tree(X: np.ndarray, target: np.ndarray, *, criterion: str,
               max_depth: int | None, min_samples_leaf: int,
               max_features: int | None = None,
               rng: np.random.Generator | None = None) -> TreeArrays:
    """Grow a tree depth-first. target is the 0/1 label vector for
    "gini" and the regression target for "sse". When max_features is
    given, each node draws that many candidate features from rng."""
    n, d = X.shape
    feature, threshold, left, right, value = [], [], [], [], []

    # explicit pre-order stack; (rows, depth, parent index, went left)
    stack = [(np.arange(n), 0, -1, False)]
    while stack:
        rows, depth, parent, went_left = stack.pop()
        idx = len(feature)
        if parent >= 0:
            if went_left:
                left[parent] = idx
            else:
                right[parent] = idx
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(np.mean(target[rows])))
        if max_depth is not None and depth >= max_depth:
            continue
        if len(rows) < 2 * min_samples_leaf or len(rows) < 2:
            continue
        t = target[rows]
        if criterion == "gini" and (t == t[0]).all():
            continue
        if max_features is not None and max_features < d:
            cand = np.sort(rng.choice(d, size=max_features, replace=False))
        else:
            cand = np.arange(d)
        found = _best_split(X, target, rows, cand, min_samples_leaf, criterion)
        if found is None:
            continue
        f, th, _ = found
        mask = X[rows, f] <= th
        rows_l, rows_r = rows[mask], rows[~mask]
        if len(rows_l) == 0 or len(rows_r) == 0:
            continue
        feature[idx] = f
        threshold[idx] = th
        # right pushed first so the left subtree lays out immediately
        # after its parent, matching recursive pre-order
        stack.append((rows_r, depth + 1, idx, False))
        stack.append((rows_l, depth + 1, idx, True))
    return TreeArrays(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=np.array(value, dtype=np.float64),
    )


def apply_tree(tree: TreeArrays, X: np.ndarray) -> np.ndarray:
    """Leaf values for every row, walking all rows level-by-level."""
    n = len(X)
    node = np.zeros(n, dtype=np.int64)
    active = tree.feature[node] != LEAF
    while active.any():
        rows = np.flatnonzero(active)
        cur = node[rows]
        goes_left = X[rows, tree.feature[cur]] <= tree.threshold[cur]
        node[rows] = np.where(goes_left, tree.left[cur], tree.right[cur])
        active[rows] = tree.feature[node[rows]] != LEAF
    return tree.value[node]


def tree_to_doc(tree: TreeArrays) -> dict:
    from .bundle import encode_array

    return {
        "feature": encode_array(tree.feature),
        "threshold": encode_array(tree.threshold),
        "left": encode_array(tree.left),
        "right": encode_array(tree.right),
        "value": encode_array(tree.value),
    }


def tree_from_doc(doc: dict) -> TreeArrays:
    from .bundle import decode_array

    return TreeArrays(
        feature=decode_array(doc["feature"]),
        threshold=decode_array(doc["threshold"]),
        left=decode_array(doc["left"]),
        right=decode_array(doc["right"]),
        value=decode_array(doc["value"]),
    )


@dataclass
class DecisionTreeModel:
    spec: ModelSpec
    tree: TreeArrays
    converged: bool = True
    schema_fingerprint: str | None = None

    def decision_values(self, X: np.ndarray) -> np.ndarray:
        return apply_tree(self.tree, X) - 0.5

    def _params_doc(self) -> dict:
        return {"tree": tree_to_doc(self.tree)}

    @classmethod
    def _from_params(cls, doc, spec, converged, fingerprint):
        return cls(spec, tree_from_doc(doc["tree"]), converged, fingerprint)


def train_decision_tree(spec: ModelSpec, X: np.ndarray, y: np.ndarray,
                        schema_fingerprint: str | None = None) -> DecisionTreeModel:
    check_training_inputs(X, y)
    hp = spec.hyperparameters
    tree = build_tree(X, y.astype(np.float64), criterion="gini",
                      max_depth=hp["max_depth"],
                      min_samples_leaf=hp["min_samples_leaf"])
    return DecisionTreeModel(spec, tree, True, schema_fingerprint)
