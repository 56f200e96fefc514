from dataclasses import dataclass

import numpy as np

from .tree import Tree, grow


@dataclass(frozen=True, eq=False)
class Importance:
    feature_names: tuple
    raw: np.ndarray             # summed weighted impurity decreases, averaged over trees

    @property
    def normalized(self):
        top = self.raw.max() if self.raw.size else 0.0
        if top <= 0:
            return np.zeros_like(self.raw)
        return 100.0 * self.raw / top

    def ranking(self):
        """Feature indices by decreasing importance, ties by column order"""
        return [int(i) for i in np.lexsort((np.arange(self.raw.size), -self.raw))]


def tree_importance(tree, with_primary=True, pruned=frozenset()):
    imp = np.zeros(tree.feature_count)
    for node in tree.internal_nodes(pruned):
        if with_primary:
            imp[node.split.feature] += node.impurity_decrease
        # only the best surrogate counts
        if node.surrogates:
            best = node.surrogates[0]
            imp[best.split.feature] += best.impurity_decrease
    return imp


def importance(trees, with_primary=True):
    """Surrogate importance of one tree or of a list of trees grown on the same columns"""
    if isinstance(trees, Tree):
        trees = [trees]
    raw = np.mean([tree_importance(t, with_primary) for t in trees], axis=0)
    return Importance(trees[0].feature_names, raw)


def bagged_trees(X, y, cost, params, count, rng, feature_names=None):
    """Trees grown on n-out-of-n bootstrap resamples"""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    rng = np.random.default_rng(rng)
    n = len(y)
    trees = []
    for _ in range(count):
        idx = rng.integers(0, n, n)
        trees.append(grow(X[idx], y[idx], cost, params, feature_names))
    return trees


def bagged_importance(X, y, cost, params, count=25, rng=None, with_primary=True, feature_names=None):
    return importance(bagged_trees(X, y, cost, params, count, rng, feature_names), with_primary)
