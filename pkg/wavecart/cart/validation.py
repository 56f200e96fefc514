"""
Repeated stratified k-fold cross-validation of pruned trees.

The maximal tree on all samples gives the pruning sequence T_0 > T_1 > ... > root
with critical values alpha_k. Every fold tree is pruned at the geometric
midpoints sqrt(alpha_k alpha_{k+1}); the midpoint with the lowest held-out cost,
averaged over folds and repeats, selects the subtree of the full tree.
"""
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.model_selection import StratifiedKFold

from .costs import CartError
from .pruning import step_for_alpha
from .tree import GrowthParams, grow, predict, predict_steps

FOLD_ATTEMPTS = 10

class FoldAssignmentError(CartError):
    pass


@dataclass(frozen=True)
class CVResult:
    mean_cost: float
    repeat_costs: tuple
    mean_error: float           # misclassification rate at the chosen subtree
    repeat_errors: tuple
    chosen_step: int
    alpha: float
    curve: tuple                # mean held-out cost for each subtree of the full tree

    def to_dict(self):
        return {"cv_cost": self.mean_cost, "repeat_costs": list(self.repeat_costs),
                "cv_error_rate": self.mean_error, "repeat_error_rates": list(self.repeat_errors),
                "chosen_step": self.chosen_step, "alpha": self.alpha, "curve": list(self.curve)}


@dataclass(eq=False)
class FittedModel:
    tree: object
    cv: CVResult
    apparent_cost: float
    apparent_errors: int

    @property
    def step(self):
        return self.cv.chosen_step

    def predict(self, X):
        return predict(self.tree, X, self.step)


def stratified_folds(y, folds, rng, attempts=FOLD_ATTEMPTS):
    """Fold (train, test) index pairs in which every class keeps a training sample"""
    y = np.asarray(y)
    if len(y) < folds:
        raise FoldAssignmentError(f"Cannot make {folds} folds from {len(y)} samples")
    classes = set(np.unique(y).tolist())
    for _ in range(attempts):
        skf = StratifiedKFold(n_splits=folds, shuffle=True, random_state=int(rng.integers(2**31 - 1)))
        try:
            with warnings.catch_warnings():
                # Classes smaller than the fold count are expected
                warnings.simplefilter("ignore", UserWarning)
                splits = list(skf.split(np.zeros(len(y)), y))
        except ValueError as e:
            raise FoldAssignmentError(f"Fold assignment failed: {e}") from e
        if all(set(np.unique(y[train]).tolist()) == classes for train, _ in splits):
            return splits
    raise FoldAssignmentError(f"A class is absent from a training fold after {attempts} fold draws")


def alpha_grid(steps):
    alphas = [s.alpha for s in steps]
    grid = [float(np.sqrt(a * b)) for a, b in zip(alphas[:-1], alphas[1:])]
    return grid + [float("inf")]


def _choose(curve, per_sample, one_se):
    best = float(curve.min())
    tied = np.flatnonzero(curve <= best + 1e-12 * abs(best))
    k = int(tied[-1])
    if one_se:
        se = float(np.std(per_sample[k]) / np.sqrt(per_sample.shape[1]))
        k = int(np.flatnonzero(curve <= best + se)[-1])
    return k


def cross_validate(tree, X, y, folds=10, repeats=5, rng=None, one_se=False):
    """CV cost of the subtrees of a tree grown on (X, y)"""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    rng = np.random.default_rng(rng)
    n = len(y)
    grid = alpha_grid(tree.prune_steps)
    params = tree.params.without_surrogates()

    costs = np.zeros((repeats, len(grid), n))
    errors = np.zeros((repeats, len(grid), n))
    for r in range(repeats):
        for train, test in stratified_folds(y, folds, rng):
            fold_tree = grow(X[train], y[train], tree.cost, params, tree.feature_names)
            steps = [step_for_alpha(fold_tree.prune_steps, a) for a in grid]
            pred = predict_steps(fold_tree, X[test], steps)
            costs[r][:, test] = tree.cost.misclassification(pred, y[test][None, :])
            errors[r][:, test] = pred != y[test][None, :]

    curve = costs.mean(axis=(0, 2))
    k = _choose(curve, costs.mean(axis=0), one_se)
    repeat_costs = tuple(float(c) for c in costs[:, k].mean(axis=1))
    repeat_errors = tuple(float(e) for e in errors[:, k].mean(axis=1))
    return CVResult(float(np.mean(repeat_costs)), repeat_costs, float(np.mean(repeat_errors)),
                    repeat_errors, k, tree.prune_steps[k].alpha, tuple(float(c) for c in curve))


def cv_cost(X, y, cost, folds=10, repeats=5, seed=0, params=None, one_se=False, feature_names=None):
    params = (params or GrowthParams()).without_surrogates()
    tree = grow(X, y, cost, params, feature_names)
    return cross_validate(tree, X, y, folds, repeats, np.random.default_rng(seed), one_se)


def fit_model(X, y, cost, cfg, seed, feature_names=None):
    """Maximal tree with surrogates, its CV-selected subtree and apparent performance"""
    tree = grow(X, y, cost, GrowthParams.from_config(cfg), feature_names)
    cv = cross_validate(tree, X, y, cfg.cv_folds, cfg.cv_repeats, np.random.default_rng(seed), cfg.one_se_rule)
    y = np.asarray(y, dtype=int)
    pred = predict(tree, X, cv.chosen_step)
    return FittedModel(tree, cv, float(cost.misclassification(pred, y).mean()), int(np.sum(pred != y)))
