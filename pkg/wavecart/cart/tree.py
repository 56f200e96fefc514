"""
Cost-sensitive classification trees.

Nodes split on the cost-generalised Gini impurity i(t) = p' Gamma p. The best
split of a node minimises N_L i(L) + N_R i(R) over every feature and every
midpoint between two consecutive distinct values; ties go to the lowest
feature index, then the lowest threshold. Impurity decreases are stored
weighted by the node share N_t / N so they add up over the tree.
"""
from dataclasses import dataclass, field

import numpy as np

from .costs import CartError, impurity

TIE_TOL = 1e-12


@dataclass(frozen=True)
class GrowthParams:
    min_node_size: int = 5
    max_depth: int = 30
    surrogate_count: int = 5

    @classmethod
    def from_config(cls, cfg, surrogates=True):
        return cls(cfg.min_node_size, cfg.max_depth, cfg.surrogate_count if surrogates else 0)

    def without_surrogates(self):
        return GrowthParams(self.min_node_size, self.max_depth, 0)


@dataclass(frozen=True)
class Split:
    feature: int            # column index into X
    threshold: float
    left_on_le: bool = True # False: values > threshold go left

    def goes_left(self, values):
        values = np.asarray(values, dtype=float)
        return values <= self.threshold if self.left_on_le else values > self.threshold


@dataclass(frozen=True)
class Surrogate:
    split: Split
    agreement: float
    impurity_decrease: float


@dataclass
class TreeNode:
    node_id: int
    depth: int
    class_counts: np.ndarray
    label: int
    impurity: float
    leaf_cost: float                # sum of Gamma(label, y_i) over node samples
    split: Split = None
    impurity_decrease: float = 0.0
    surrogates: tuple = ()
    left: "TreeNode" = None
    right: "TreeNode" = None
    majority_left: bool = True

    @property
    def n_samples(self):
        return int(self.class_counts.sum())

    @property
    def is_leaf(self):
        return self.split is None


@dataclass(eq=False)
class Tree:
    root: TreeNode
    nodes: list
    feature_names: tuple
    cost: object
    params: GrowthParams
    n_samples: int
    prune_steps: list = field(default_factory=list)

    @property
    def feature_count(self):
        return len(self.feature_names)

    @property
    def class_count(self):
        return self.cost.class_count

    def internal_nodes(self, pruned=frozenset()):
        """Splitting nodes of the subtree left by pruning, in node id order"""
        found, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf or node.node_id in pruned:
                continue
            found.append(node)
            stack.extend((node.left, node.right))
        return sorted(found, key=lambda n: n.node_id)

    def route(self, node, x):
        """Child of node for one sample, falling back on surrogates when the split value is missing"""
        value = x[node.split.feature]
        if not np.isnan(value):
            return node.left if node.split.goes_left(value) else node.right
        for s in node.surrogates:
            v = x[s.split.feature]
            if not np.isnan(v):
                return node.left if s.split.goes_left(v) else node.right
        return node.left if node.majority_left else node.right

    def decision_path(self, x):
        path = [self.root]
        node = self.root
        while not node.is_leaf:
            node = self.route(node, x)
            path.append(node)
        return path

    def used_features(self, pruned=frozenset()):
        return sorted({n.split.feature for n in self.internal_nodes(pruned)})

    def to_dict(self, step=None):
        pruned = self.prune_steps[step].pruned if step is not None else frozenset()
        names = self.feature_names

        def node_dict(node):
            d = {"id": node.node_id, "depth": node.depth, "n": node.n_samples,
                 "class_counts": [int(c) for c in node.class_counts], "label": node.label,
                 "impurity": node.impurity}
            if node.is_leaf or node.node_id in pruned:
                return d
            d["split"] = {"feature": names[node.split.feature], "threshold": node.split.threshold}
            d["impurity_decrease"] = node.impurity_decrease
            d["surrogates"] = [{"feature": names[s.split.feature], "threshold": s.split.threshold,
                                "direction": "le" if s.split.left_on_le else "gt",
                                "agreement": s.agreement, "impurity_decrease": s.impurity_decrease}
                               for s in node.surrogates]
            d["left"] = node_dict(node.left)
            d["right"] = node_dict(node.right)
            return d

        return {
            "class_count": self.class_count,
            "n_samples": self.n_samples,
            "cost_matrix": self.cost.to_list(),
            "selected_step": step,
            "features_used": [names[f] for f in self.used_features(pruned)],
            "prune_sequence": [s.to_dict() for s in self.prune_steps],
            "root": node_dict(self.root),
        }


def _check_inputs(X, y, cost):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.ndim != 2 or X.shape[1] < 1:
        raise CartError(f"Feature matrix must be n x P with P >= 1, got shape {X.shape}")
    if len(y) != X.shape[0]:
        raise CartError(f"{len(y)} labels for {X.shape[0]} rows")
    if len(y) == 0:
        raise CartError("Cannot grow a tree on zero samples")
    if y.min() < 1 or y.max() > cost.class_count:
        raise CartError(f"Labels must lie in 1..{cost.class_count}")
    if not np.all(np.isfinite(X)):
        raise CartError("Training features contain NaN or Inf")
    return X, y


def _weighted_impurity(counts, sizes, gamma):
    """N * i(node) for stacks of class counts, shape (..., K)"""
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.sum((counts @ gamma) * counts, axis=-1) / sizes
    return np.where(sizes > 0, w, 0.0)


def _first_within(values, target):
    return int(np.flatnonzero(values <= target + TIE_TOL * abs(target))[0])


def _midpoint(a, b):
    t = 0.5 * (a + b)
    return a if t >= b else t


class _Grower:
    def __init__(self, X, y, cost, params):
        self.X = X
        self.y0 = y - 1
        self.cost = cost
        self.gamma = cost.gamma
        self.params = params
        self.N = len(y)
        self.onehot = np.eye(cost.class_count)[self.y0]
        self.nodes = []

    def _node(self, idx, depth):
        counts = np.bincount(self.y0[idx], minlength=self.cost.class_count).astype(float)
        label = self.cost.best_label(counts)
        node = TreeNode(node_id=len(self.nodes), depth=depth, class_counts=counts, label=label,
                        impurity=impurity(counts, self.cost),
                        leaf_cost=float(self.cost.expected_costs(counts)[label - 1]))
        self.nodes.append(node)
        return node

    def _split_scores(self, idx):
        """Sorted values, order and N_L i(L) + N_R i(R) for every (position, feature)"""
        Xn = self.X[idx]
        order = np.argsort(Xn, axis=0, kind="stable")
        xs = np.take_along_axis(Xn, order, axis=0)
        cum = np.cumsum(self.onehot[idx][order], axis=0)
        left = cum[:-1]
        right = cum[-1][None] - left
        n_t = len(idx)
        nl = np.arange(1, n_t, dtype=float)[:, None]
        score = (_weighted_impurity(left, nl, self.gamma) +
                 _weighted_impurity(right, n_t - nl, self.gamma))
        distinct = xs[1:] > xs[:-1]
        return xs, order, score, distinct

    def grow(self, idx, depth=0):
        node = self._node(idx, depth)
        n_t = len(idx)
        p = self.params
        if node.impurity <= 0 or depth >= p.max_depth or n_t < 2 * p.min_node_size:
            return node

        xs, order, score, distinct = self._split_scores(idx)
        nl = np.arange(1, n_t)[:, None]
        valid = distinct & (nl >= p.min_node_size) & (n_t - nl >= p.min_node_size)
        primary = np.where(valid, score, np.inf)
        per_feature = primary.min(axis=0)
        best = float(per_feature.min())
        parent = n_t * node.impurity
        if not np.isfinite(best) or parent - best <= TIE_TOL * parent:
            return node

        f = _first_within(per_feature, best)
        r = _first_within(primary[:, f], per_feature[f])
        split = Split(f, _midpoint(xs[r, f], xs[r + 1, f]))
        goes_left = split.goes_left(self.X[idx, f])

        node.split = split
        node.impurity_decrease = (parent - float(score[r, f])) / self.N
        node.majority_left = bool(goes_left.sum() >= n_t - goes_left.sum())
        if p.surrogate_count > 0:
            node.surrogates = self._surrogates(f, goes_left, xs, order, score, distinct, parent)
        node.left = self.grow(idx[goes_left], depth + 1)
        node.right = self.grow(idx[~goes_left], depth + 1)
        return node

    def _surrogates(self, f, goes_left, xs, order, score, distinct, parent):
        n_t = len(goes_left)
        n_left = int(goes_left.sum())
        positions = np.arange(1, n_t)[:, None]
        cum_left = np.cumsum(goes_left[order], axis=0)[:-1]
        # Samples sent the same way as the primary split with the first r values on the left
        agree = 2 * cum_left - positions + (n_t - n_left)
        agree = np.where(distinct, agree, -1)
        reverse = np.where(distinct, n_t - agree, -1)

        baseline = max(n_left, n_t - n_left) / n_t
        candidates = []
        for q in range(self.X.shape[1]):
            if q == f or not distinct[:, q].any():
                continue
            r_le, r_gt = int(np.argmax(agree[:, q])), int(np.argmax(reverse[:, q]))
            a_le, a_gt = agree[r_le, q], reverse[r_gt, q]
            r, left_on_le, a = (r_le, True, a_le) if a_le >= a_gt else (r_gt, False, a_gt)
            agreement = a / n_t
            if agreement <= baseline:
                continue
            decrease = max(parent - float(score[r, q]), 0.0) / self.N
            candidates.append(Surrogate(Split(q, _midpoint(xs[r, q], xs[r + 1, q]), left_on_le),
                                        float(agreement), decrease))
        candidates.sort(key=lambda s: (-s.agreement, s.split.feature))
        return tuple(candidates[:self.params.surrogate_count])


def grow(X, y, cost, params=None, feature_names=None):
    """Maximal tree on X (n x P) with 1-based labels y, together with its pruning sequence"""
    from .pruning import prune_sequence

    params = params or GrowthParams()
    X, y = _check_inputs(X, y, cost)
    if feature_names is None:
        feature_names = tuple(str(i) for i in range(X.shape[1]))
    if len(feature_names) != X.shape[1]:
        raise CartError(f"{len(feature_names)} feature names for {X.shape[1]} columns")

    grower = _Grower(X, y, cost, params)
    root = grower.grow(np.arange(len(y)))
    tree = Tree(root, grower.nodes, tuple(feature_names), cost, params, len(y))
    tree.prune_steps = prune_sequence(tree)
    return tree


def _leaf_for(path, pruned):
    for node in path:
        if node.is_leaf or node.node_id in pruned:
            return node
    return path[-1]


def predict(tree, X, step=None):
    """1-based class predictions for the rows of X; NaN marks a missing value"""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != tree.feature_count:
        raise CartError(f"Expected {tree.feature_count} features, got {X.shape[1]}")
    pruned = tree.prune_steps[step].pruned if step is not None else frozenset()
    return np.array([_leaf_for(tree.decision_path(x), pruned).label for x in X], dtype=int)


def predict_steps(tree, X, steps):
    """Predictions under several pruning steps, one row per step; each sample is routed once"""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    paths = [tree.decision_path(x) for x in X]
    out = np.empty((len(steps), len(paths)), dtype=int)
    for i, step in enumerate(steps):
        pruned = tree.prune_steps[step].pruned
        out[i] = [_leaf_for(path, pruned).label for path in paths]
    return out


def apply(tree, X, step=None):
    """Leaf node id reached by each row"""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    pruned = tree.prune_steps[step].pruned if step is not None else frozenset()
    return np.array([_leaf_for(tree.decision_path(x), pruned).node_id for x in X], dtype=int)
