from .costs import CartError, CostMatrix, EmptyNodeError, impurity
from .importance import Importance, bagged_importance, bagged_trees, importance, tree_importance
from .pruning import PruneStep, prune_sequence, step_for_alpha
from .tree import GrowthParams, Split, Surrogate, Tree, TreeNode, apply, grow, predict, predict_steps
from .validation import CVResult, FittedModel, FoldAssignmentError, cross_validate, cv_cost, fit_model
