"""Weighted gradient-boosted trees on the logistic loss.

A minimal exact-greedy booster: depth-limited regression trees are fit to
the weighted gradient/hessian pairs

    g_i = w_i (mu_i - y_i),    h_i = w_i mu_i (1 - mu_i),

with squared-error split gain G_L^2/(H_L + lambda) + G_R^2/(H_R + lambda)
- G^2/(H + lambda) and leaf values -eta * G / (H + lambda). Training
weights are mean-normalized so the regularization constants act on the
same scale whether or not survey weights are used; unweighted mode simply
trains with w = 1. Fitting is deterministic: the seed parameter is
accepted for interface stability but no subsampling is performed.

This is a reference implementation for exercising weighted-loss training;
parity with any external booster is out of scope.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._kernels import best_split
from .design import DesignFrame
from .errors import ModelError

__all__ = [
    "BoostModel",
    "BoostParams",
    "Tree",
    "boost_model_from_json",
    "boost_model_to_json",
    "boost_trainer",
    "fit_weighted_boost",
    "predict_boost",
]

_ETA_CLIP = 35.0


@dataclass(frozen=True)
class BoostParams:
    depth: int = 3
    learning_rate: float = 0.1
    rounds: int = 100
    reg_lambda: float = 1.0
    min_child_weight: float = 1.0


@dataclass
class Tree:
    """Flat array encoding; node 0 is the root, feature -1 marks leaves."""

    feature: list = field(default_factory=list)
    threshold: list = field(default_factory=list)
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)
    value: list = field(default_factory=list)

    def add_leaf(self, value: float) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(float(value))
        return len(self.feature) - 1

    def add_split(self, feature: int, threshold: float) -> int:
        self.feature.append(int(feature))
        self.threshold.append(float(threshold))
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def predict(self, x: np.ndarray) -> np.ndarray:
        out = np.empty(x.shape[0])
        node_of = np.zeros(x.shape[0], dtype=np.intp)
        feature = np.asarray(self.feature)
        threshold = np.asarray(self.threshold)
        left = np.asarray(self.left)
        right = np.asarray(self.right)
        value = np.asarray(self.value)
        pending = feature[node_of] >= 0
        while pending.any():
            nodes = node_of[pending]
            go_left = x[pending, feature[nodes]] < threshold[nodes]
            node_of[pending] = np.where(go_left, left[nodes], right[nodes])
            pending = feature[node_of] >= 0
        out[:] = value[node_of]
        return out


@dataclass(frozen=True)
class BoostModel:
    """Additive model on the logit scale: base_score + sum of trees."""

    trees: list
    learning_rate: float
    rounds: int
    base_score: float
    feature_names: tuple[str, ...]
    outcome_name: str

    def decision_function(self, x: np.ndarray) -> np.ndarray:
        eta = np.full(x.shape[0], self.base_score)
        for tree in self.trees:
            eta += tree.predict(x)
        return eta


def _grow_tree(x, g, h, rows, depth, params) -> tuple[Tree, int]:
    """Greedy exact-split growth; returns the tree and its node index."""
    tree = Tree()

    def leaf_value(idx):
        gs = g[idx].sum()
        hs = h[idx].sum()
        val = -params.learning_rate * gs / (hs + params.reg_lambda)
        if not np.isfinite(val):
            raise ModelError("non-finite leaf value")
        return val

    def grow(idx, level):
        if level >= depth or idx.size < 2:
            return tree.add_leaf(leaf_value(idx))
        best_gain, best_feature, best_pos, best_order = 0.0, -1, 0, None
        for j in range(x.shape[1]):
            order = idx[np.argsort(x[idx, j], kind="stable")]
            gain, pos = best_split(
                np.ascontiguousarray(x[order, j]),
                np.ascontiguousarray(g[order]),
                np.ascontiguousarray(h[order]),
                params.reg_lambda, params.min_child_weight,
            )
            if gain > best_gain:
                best_gain, best_feature, best_pos, best_order = gain, j, pos, order
        if best_feature < 0:
            return tree.add_leaf(leaf_value(idx))
        lo = x[best_order[best_pos - 1], best_feature]
        hi = x[best_order[best_pos], best_feature]
        node = tree.add_split(best_feature, (lo + hi) / 2.0)
        tree.left[node] = grow(best_order[:best_pos], level + 1)
        tree.right[node] = grow(best_order[best_pos:], level + 1)
        return node

    # Root must be node 0 for prediction; grow() appends children after
    # their parent, so build the root split first.
    root = grow(rows, 0)
    if root != 0:
        raise ModelError("tree root must be node 0")
    return tree, root


def fit_weighted_boost(frame: DesignFrame, features, outcome: str,
                       params: BoostParams | None = None, seed: int = 0,
                       weighted: bool = True) -> BoostModel:
    """Boost on the domain's complete cases; w = 1 when ``weighted`` is off."""
    params = params or BoostParams()
    features = tuple(features)
    if not features:
        raise ModelError("boosting requires at least one feature")
    y_col = frame.column(outcome)
    cols = [frame.column(f) for f in features]
    mask = frame.domain & ~np.isnan(y_col)
    for c in cols:
        mask &= ~np.isnan(c)
    rows = np.flatnonzero(mask)
    if rows.size == 0:
        raise ModelError("no complete cases for the requested model")
    y = y_col[rows]
    if not np.isin(y, (0.0, 1.0)).all():
        raise ModelError(f"outcome {outcome!r} must be binary 0/1")
    x = np.column_stack([c[rows] for c in cols])
    w = frame.w[rows] if weighted else np.ones(rows.size)
    w = w / w.mean()

    prevalence = float(np.clip((w * y).sum() / w.sum(), 1e-6, 1 - 1e-6))
    base = float(np.log(prevalence / (1 - prevalence)))
    eta = np.full(rows.size, base)
    trees = []
    all_rows = np.arange(rows.size)
    for _ in range(params.rounds):
        mu = 1 / (1 + np.exp(-np.clip(eta, -_ETA_CLIP, _ETA_CLIP)))
        g = w * (mu - y)
        h = w * np.maximum(mu * (1 - mu), 1e-12)
        tree, _ = _grow_tree(x, g, h, all_rows, params.depth, params)
        step = tree.predict(x)
        if np.all(step == step[0]) and len(tree.feature) == 1:
            # degenerate round: no informative split anywhere; apply the
            # constant shift and stop early.
            eta += step
            trees.append(tree)
            break
        eta += step
        trees.append(tree)
    return BoostModel(trees, params.learning_rate, len(trees), base,
                      features, outcome)


def predict_boost(model: BoostModel, features: np.ndarray) -> np.ndarray:
    """Scores in [0, 1] for a (n, p) feature matrix."""
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if features.shape[1] != len(model.feature_names):
        raise ModelError(
            f"model expects {len(model.feature_names)} features, "
            f"got {features.shape[1]}"
        )
    eta = np.clip(model.decision_function(features), -_ETA_CLIP, _ETA_CLIP)
    return 1 / (1 + np.exp(-eta))


def boost_trainer(features, outcome: str, params: BoostParams | None = None,
                  weighted: bool = True, seed: int = 0):
    """CV trainer factory: returns (frame, train_rows) -> row scorer."""
    features = tuple(features)

    def train(frame: DesignFrame, train_rows: np.ndarray):
        model = fit_weighted_boost(frame.take(train_rows), features, outcome,
                                   params=params, seed=seed, weighted=weighted)

        def score_rows(rows: np.ndarray) -> np.ndarray:
            feat = np.column_stack([frame.column(f)[rows] for f in features])
            return predict_boost(model, feat)

        return score_rows

    return train


def boost_model_to_json(model: BoostModel) -> str:
    return json.dumps({
        "schema": 1,
        "type": "boost",
        "base_score": model.base_score,
        "learning_rate": model.learning_rate,
        "rounds": model.rounds,
        "feature_names": list(model.feature_names),
        "outcome": model.outcome_name,
        "trees": [
            {"feature": t.feature, "threshold": t.threshold,
             "left": t.left, "right": t.right, "value": t.value}
            for t in model.trees
        ],
    })


def boost_model_from_json(text: str) -> BoostModel:
    blob = json.loads(text)
    if blob.get("type") != "boost" or blob.get("schema") != 1:
        raise ModelError("not a schema-1 boost model document")
    trees = [Tree(t["feature"], t["threshold"], t["left"], t["right"], t["value"])
             for t in blob["trees"]]
    return BoostModel(trees, float(blob["learning_rate"]), int(blob["rounds"]),
                      float(blob["base_score"]), tuple(blob["feature_names"]),
                      blob["outcome"])
