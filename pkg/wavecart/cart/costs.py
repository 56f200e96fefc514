from dataclasses import dataclass

import numpy as np

from ..utils import WavecartError

class CartError(WavecartError):
    pass

class EmptyNodeError(CartError):
    pass


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """Gamma[k-1, k'-1] = cost of predicting class k when the truth is k'"""
    gamma: np.ndarray

    def __post_init__(self):
        g = np.array(self.gamma, dtype=float, copy=True)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise CartError(f"Cost matrix must be square, got shape {g.shape}")
        if np.any(g < 0):
            raise CartError("Cost matrix entries must be nonnegative")
        if np.any(np.diag(g) != 0):
            raise CartError("Cost matrix diagonal must be zero")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @classmethod
    def ordinal(cls, class_count):
        k = np.arange(class_count)
        return cls(np.abs(k[:, None] - k[None, :]).astype(float))

    @property
    def class_count(self):
        return self.gamma.shape[0]

    def scaled(self, c):
        return CostMatrix(self.gamma * c)

    def is_symmetric(self):
        return bool(np.array_equal(self.gamma, self.gamma.T))

    def expected_costs(self, class_counts):
        """Cost of labelling a node with each class"""
        return self.gamma @ np.asarray(class_counts, dtype=float)

    def best_label(self, class_counts):
        """Cost-minimising class (1-based), ties to the lowest class"""
        return int(np.argmin(self.expected_costs(class_counts))) + 1

    def misclassification(self, predicted, truth):
        """Per-sample costs for 1-based label arrays"""
        return self.gamma[np.asarray(predicted) - 1, np.asarray(truth) - 1]

    def to_list(self):
        return self.gamma.tolist()


def impurity(class_counts, cost):
    """Generalised Gini: sum over k != k' of Gamma(k, k') p(k) p(k')"""
    counts = np.asarray(class_counts, dtype=float)
    if np.any(counts < 0):
        raise CartError("Class counts must be nonnegative")
    total = counts.sum()
    if total <= 0:
        raise EmptyNodeError("Impurity of an empty node")
    p = counts / total
    return float(p @ cost.gamma @ p)
